#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "attent/learner.hpp"
#include "attent/random.hpp"

namespace attent {

enum class SelectionKind { Random, Hard, Soft };

struct SelectionStrategy {
    SelectionKind kind = SelectionKind::Hard;
    double temperature = 1.0;  // Soft only

    void validate() const;
};

/// Fraction of the dataset selected per epoch, over a horizon of E epochs.
struct RatioSchedule {
    enum class Kind { Fixed, Incremental, Cosine };
    Kind kind = Kind::Fixed;
    double r_min = 1.0;
    double r_max = 1.0;
    int horizon = 1;

    static RatioSchedule fixed(double r, int horizon);
    static RatioSchedule incremental(double r_min, double r_max, int horizon);
    static RatioSchedule cosine(double r_min, double r_max, int horizon);
    void validate() const;
};

/// How often the selected subset is recomputed.
struct IntervalSchedule {
    enum class Kind { Fixed, Incremental };
    Kind kind = Kind::Fixed;
    int k = 1;             // Fixed period, or the initial gap k0
    double growth = 2.0;   // Incremental gap factor

    static IntervalSchedule fixed(int k);
    static IntervalSchedule incremental(int k0, double growth);
    void validate() const;
};

struct TeachingConfig {
    SelectionStrategy strategy;
    RatioSchedule ratio;
    IntervalSchedule interval;
    double eta = 0.5;
    double epsilon = 1e-6;
    int max_iters = 200;
    int batch_size = 0;      // 0: full selected subset per step
    int warmup_epochs = 0;   // epochs trained on the full set before the ratio applies
    std::uint64_t seed = 7;

    void validate() const;
};

struct TraceRow {
    long iter = 0;
    int epoch = 0;
    double ratio = 1.0;
    int n_selected = 0;
    double subset_loss = 0.0;
    double full_loss = 0.0;
    double residual_fro = 0.0;
    int reselected = 0;
    long long wall_ns = 0;
};

struct SelectionEvent {
    int epoch = 0;
    std::vector<int> ids;
};

struct TeachingTrace {
    std::vector<TraceRow> rows;
    std::vector<SelectionEvent> selections;
};

/// Per-sequence residual norm ||f(S_i) - y_i||_F, the selection score.
std::vector<double> residual_scores(const AttentionParams& params,
                                    std::span<const LabeledSequence> data);

/// Indices of the m largest scores; ties go to the lower index; ascending.
std::vector<int> select_hard(std::span<const double> scores, int m);

/// Gumbel-Top-k sample of m indices without replacement, with inclusion
/// probability proportional to score^(1/temperature); ascending.
std::vector<int> select_soft(std::span<const double> scores, int m, double temperature,
                             RandomSource& source);

/// Uniform m-subset of {0..n-1} without replacement; ascending.
std::vector<int> select_random(int n, int m, RandomSource& source);

/// Selection fraction at an epoch in [0, horizon], clamped to (0, 1].
double ratio_at(const RatioSchedule& sched, int epoch);

/// Whether the subset is recomputed at this epoch. Incremental re-selects at
/// cumulative boundaries 0, g0, g0+g1, ... with gaps g_j = floor(k0*growth^j).
bool should_reselect(const IntervalSchedule& sched, int epoch);

/// Greedy teaching loop: each epoch re-selects ceil(ratio*N) sequences when
/// the interval schedule fires, runs SGD over the subset, and stops once the
/// full-set residual norm drops below epsilon or max_iters epochs have run.
std::pair<AttentionParams, TeachingTrace> teach_loop(
    const AttentionParams& init, std::span<const LabeledSequence> data,
    const TeachingConfig& config);

enum class PresetKind { LlmStyle, VitStyle };

/// Named configurations: LlmStyle trains one epoch on everything then keeps
/// the hardest 70%; VitStyle ramps the ratio 0.2 -> 0.8 with growing
/// re-selection gaps and Soft selection.
TeachingConfig preset(PresetKind name, int horizon = 200);

}  // namespace attent
