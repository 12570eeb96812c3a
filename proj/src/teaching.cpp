#include "attent/teaching.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

namespace attent {

void SelectionStrategy::validate() const {
    if (kind == SelectionKind::Soft)
        require(temperature > 0.0, "strategy: Soft temperature must be positive");
}

RatioSchedule RatioSchedule::fixed(double r, int horizon) {
    RatioSchedule s{Kind::Fixed, r, r, horizon};
    s.validate();
    return s;
}
RatioSchedule RatioSchedule::incremental(double r_min, double r_max, int horizon) {
    RatioSchedule s{Kind::Incremental, r_min, r_max, horizon};
    s.validate();
    return s;
}
RatioSchedule RatioSchedule::cosine(double r_min, double r_max, int horizon) {
    RatioSchedule s{Kind::Cosine, r_min, r_max, horizon};
    s.validate();
    return s;
}
void RatioSchedule::validate() const {
    require(r_min > 0.0 && r_min <= r_max && r_max <= 1.0,
            "ratio schedule: need 0 < r_min <= r_max <= 1");
    require(horizon >= 1, "ratio schedule: horizon must be >= 1");
}

IntervalSchedule IntervalSchedule::fixed(int k) {
    IntervalSchedule s{Kind::Fixed, k, 2.0};
    s.validate();
    return s;
}
IntervalSchedule IntervalSchedule::incremental(int k0, double growth) {
    IntervalSchedule s{Kind::Incremental, k0, growth};
    s.validate();
    return s;
}
void IntervalSchedule::validate() const {
    require(k >= 1, "interval schedule: k must be >= 1");
    if (kind == Kind::Incremental)
        require(growth > 1.0, "interval schedule: growth must exceed 1");
}

void TeachingConfig::validate() const {
    strategy.validate();
    ratio.validate();
    interval.validate();
    require(eta > 0.0, "teaching config: eta must be positive");
    require(epsilon > 0.0, "teaching config: epsilon must be positive");
    require(max_iters >= 1, "teaching config: max_iters must be >= 1");
    require(batch_size >= 0, "teaching config: batch_size must be >= 0");
    require(warmup_epochs >= 0, "teaching config: warmup_epochs must be >= 0");
}

std::vector<double> residual_scores(const AttentionParams& params,
                                    std::span<const LabeledSequence> data) {
    require(!data.empty(), "residual_scores: empty dataset");
    std::vector<double> scores;
    scores.reserve(data.size());
    for (const LabeledSequence& item : data) {
        const Matrix out = forward_self(params, item.sequence);
        require(out.same_shape(item.target), "residual_scores: target shape mismatch");
        scores.push_back(frobenius_norm(sub(out, item.target)));
    }
    return scores;
}

namespace {

// top-m by key, ties to the lower index, result ascending by index
std::vector<int> top_m_indices(std::span<const double> keys, int m) {
    std::vector<int> order(keys.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&keys](int a, int b) { return keys[a] > keys[b]; });
    std::vector<int> picked(order.begin(), order.begin() + m);
    std::sort(picked.begin(), picked.end());
    return picked;
}

}  // namespace

std::vector<int> select_hard(std::span<const double> scores, int m) {
    const int n = static_cast<int>(scores.size());
    require(m >= 1 && m <= n, "select_hard: m out of range");
    return top_m_indices(scores, m);
}

std::vector<int> select_soft(std::span<const double> scores, int m, double temperature,
                             RandomSource& source) {
    const int n = static_cast<int>(scores.size());
    require(m >= 1 && m <= n, "select_soft: m out of range");
    require(temperature > 0.0, "select_soft: temperature must be positive");
    constexpr double score_floor = 1e-12;  // guards ln(0)
    std::vector<double> keys(scores.size());
    for (size_t i = 0; i < scores.size(); ++i) {
        require(scores[i] >= 0.0, "select_soft: scores must be non-negative");
        keys[i] = std::log(scores[i] + score_floor) / temperature + source.gumbel();
    }
    return top_m_indices(keys, m);
}

std::vector<int> select_random(int n, int m, RandomSource& source) {
    require(m >= 1 && m <= n, "select_random: m out of range");
    std::vector<int> pool(n);
    std::iota(pool.begin(), pool.end(), 0);
    for (int i = 0; i < m; ++i) {
        const int j = i + static_cast<int>(source.next_u64() % static_cast<std::uint64_t>(n - i));
        std::swap(pool[i], pool[j]);
    }
    std::vector<int> picked(pool.begin(), pool.begin() + m);
    std::sort(picked.begin(), picked.end());
    return picked;
}

double ratio_at(const RatioSchedule& sched, int epoch) {
    sched.validate();
    require(epoch >= 0 && epoch <= sched.horizon, "ratio_at: epoch out of range");
    if (sched.kind == RatioSchedule::Kind::Fixed) return sched.r_min;
    if (epoch == 0) return sched.r_min;               // endpoints are exact,
    if (epoch == sched.horizon) return sched.r_max;   // interpolation between
    const double t = static_cast<double>(epoch) / static_cast<double>(sched.horizon);
    double r = sched.r_min;
    switch (sched.kind) {
        case RatioSchedule::Kind::Fixed: break;
        case RatioSchedule::Kind::Incremental:
            r = sched.r_min + (sched.r_max - sched.r_min) * t;
            break;
        case RatioSchedule::Kind::Cosine:
            r = sched.r_min + (sched.r_max - sched.r_min) * 0.5 * (1.0 - std::cos(M_PI * t));
            break;
    }
    return std::clamp(r, 1e-12, 1.0);
}

bool should_reselect(const IntervalSchedule& sched, int epoch) {
    sched.validate();
    require(epoch >= 0, "should_reselect: epoch must be >= 0");
    if (sched.kind == IntervalSchedule::Kind::Fixed) return epoch % sched.k == 0;
    long long boundary = 0;
    double gap = static_cast<double>(sched.k);
    while (boundary < epoch) {
        boundary += std::max(1ll, static_cast<long long>(gap));
        gap *= sched.growth;
    }
    return boundary == epoch;
}

std::pair<AttentionParams, TeachingTrace> teach_loop(
    const AttentionParams& init, std::span<const LabeledSequence> data,
    const TeachingConfig& config) {
    require(!data.empty(), "teach_loop: empty dataset");
    config.validate();
    const int n = static_cast<int>(data.size());

    AttentionParams params = init;
    TeachingTrace trace;
    RandomSource rng = RandomSource(config.seed).child(0x5e1ec7ull);
    std::vector<int> subset;
    long iter = 0;

    for (int epoch = 0; epoch < config.max_iters; ++epoch) {
        // full-set residual, the Frobenius norm over the stacked outputs
        const std::vector<double> scores = residual_scores(params, data);
        double sq = 0.0;
        for (double s : scores) sq += s * s;
        const double residual_fro = std::sqrt(sq);
        long full_rows = 0;
        for (const LabeledSequence& item : data) full_rows += item.sequence.length();
        const double full_loss = 0.5 * sq / static_cast<double>(full_rows);
        if (residual_fro < config.epsilon) break;

        const double ratio = epoch < config.warmup_epochs
                                 ? 1.0
                                 : ratio_at(config.ratio, std::min(epoch, config.ratio.horizon));
        const int m = std::min(n, static_cast<int>(std::ceil(ratio * n)));

        int reselected = 0;
        if (subset.empty() || static_cast<int>(subset.size()) != m ||
            should_reselect(config.interval, epoch)) {
            reselected = 1;
            switch (config.strategy.kind) {
                case SelectionKind::Hard: subset = select_hard(scores, m); break;
                case SelectionKind::Soft:
                    subset = select_soft(scores, m, config.strategy.temperature, rng);
                    break;
                case SelectionKind::Random: subset = select_random(n, m, rng); break;
            }
            trace.selections.push_back({epoch, subset});
        }

        std::vector<LabeledSequence> batch;
        const int step_size = config.batch_size <= 0
                                  ? m
                                  : std::min(config.batch_size, m);
        for (int from = 0; from < m; from += step_size) {
            const int to = std::min(from + step_size, m);
            batch.clear();
            for (int idx = from; idx < to; ++idx) batch.push_back(data[subset[idx]]);
            const auto t0 = std::chrono::steady_clock::now();
            auto [grad, subset_loss] = backward(params, batch);
            params = sgd_step(params, grad, config.eta);
            const auto t1 = std::chrono::steady_clock::now();
            TraceRow row;
            row.iter = iter++;
            row.epoch = epoch;
            row.ratio = ratio;
            row.n_selected = m;
            row.subset_loss = subset_loss;
            row.full_loss = full_loss;
            row.residual_fro = residual_fro;
            row.reselected = (from == 0) ? reselected : 0;
            row.wall_ns =
                std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0).count();
            trace.rows.push_back(row);
        }
    }
    return {std::move(params), std::move(trace)};
}

TeachingConfig preset(PresetKind name, int horizon) {
    require(horizon >= 1, "preset: horizon must be >= 1");
    TeachingConfig cfg;
    cfg.max_iters = horizon;
    // ramps span the epochs that actually run: 0 .. max_iters-1
    const int ramp = std::max(1, horizon - 1);
    switch (name) {
        case PresetKind::LlmStyle:
            cfg.strategy = {SelectionKind::Hard, 1.0};
            cfg.ratio = RatioSchedule::fixed(0.7, ramp);
            cfg.interval = IntervalSchedule::fixed(1);
            cfg.warmup_epochs = 1;
            break;
        case PresetKind::VitStyle:
            cfg.strategy = {SelectionKind::Soft, 1.0};
            cfg.ratio = RatioSchedule::incremental(0.2, 0.8, ramp);
            cfg.interval = IntervalSchedule::incremental(1, 2.0);
            break;
    }
    return cfg;
}

}  // namespace attent
