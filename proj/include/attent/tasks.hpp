#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "attent/learner.hpp"

namespace attent {

enum class TaskKind { TeacherNet, MeanPool, LinearMix };

std::string task_kind_name(TaskKind kind);

struct TaskSpec {
    TaskKind kind = TaskKind::TeacherNet;
    int n = 64;
    int s = 4;
    int d = 4;
    int p = 4;
    int v = 1;
    double noise_sd = 0.0;
    std::uint64_t seed = 1;

    void validate() const;
};

struct DatasetMeta {
    int n = 0, s = 0, d = 0, v = 0;
    std::string generator;
    std::uint64_t seed = 0;
    double noise_sd = 0.0;
};

struct Dataset {
    std::vector<LabeledSequence> items;
    DatasetMeta meta;
};

/// Frozen random teacher head plus N standard-normal sequences labeled by the
/// teacher's own outputs (optionally noised): a realizable target mapping.
std::pair<Dataset, AttentionParams> gen_teacher(const TaskSpec& spec);

/// Non-realizable controls. MeanPool labels every row with the column mean of
/// the features (needs v == d); LinearMix labels row j with S_(j,:) A for a
/// fixed random d x v matrix A.
Dataset gen_analytic(const TaskSpec& spec);

/// Truncate to target_len rows or append pad_value-filled rows.
Sequence normalize_length(const Sequence& seq, int target_len, double pad_value);

/// JSON-lines round trip: a meta header line then one record per item, with
/// full-precision reals so load(save(ds)) == ds exactly.
void save_jsonl(const Dataset& ds, const std::string& path);
Dataset load_jsonl(const std::string& path);

}  // namespace attent
