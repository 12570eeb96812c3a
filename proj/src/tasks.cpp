#include "attent/tasks.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

namespace attent {

using nlohmann::json;

std::string task_kind_name(TaskKind kind) {
    switch (kind) {
        case TaskKind::TeacherNet: return "teacher";
        case TaskKind::MeanPool: return "meanpool";
        case TaskKind::LinearMix: return "linearmix";
    }
    return "unknown";
}

void TaskSpec::validate() const {
    require(n >= 1 && s >= 1 && d >= 1 && p >= 1 && v >= 1,
            "task spec: dims must be positive");
    require(std::isfinite(noise_sd) && noise_sd >= 0.0,
            "task spec: noise_sd must be finite and >= 0");
    if (kind == TaskKind::MeanPool)
        require(v == d, "task spec: MeanPool targets require v == d");
}

namespace {

Matrix random_features(int s, int d, RandomSource& rng) {
    Matrix m(s, d);
    for (double& x : m.data) x = rng.gaussian();
    return m;
}

DatasetMeta meta_of(const TaskSpec& spec) {
    return {spec.n, spec.s, spec.d, spec.v, task_kind_name(spec.kind), spec.seed,
            spec.noise_sd};
}

}  // namespace

std::pair<Dataset, AttentionParams> gen_teacher(const TaskSpec& spec) {
    spec.validate();
    require(spec.kind == TaskKind::TeacherNet, "gen_teacher: wrong task kind");
    RandomSource root(spec.seed);
    RandomSource teacher_rng = root.child(1);
    RandomSource data_rng = root.child(2);
    RandomSource noise_rng = root.child(3);

    const AttentionParams teacher = init_params(spec.d, spec.p, spec.v, teacher_rng);
    Dataset ds;
    ds.meta = meta_of(spec);
    ds.items.reserve(spec.n);
    for (int i = 0; i < spec.n; ++i) {
        Sequence seq{random_features(spec.s, spec.d, data_rng)};
        Matrix target = forward_self(teacher, seq);
        if (spec.noise_sd > 0.0)
            for (double& x : target.data) x += spec.noise_sd * noise_rng.gaussian();
        ds.items.push_back({std::move(seq), std::move(target)});
    }
    return {std::move(ds), teacher};
}

Dataset gen_analytic(const TaskSpec& spec) {
    spec.validate();
    require(spec.kind == TaskKind::MeanPool || spec.kind == TaskKind::LinearMix,
            "gen_analytic: wrong task kind");
    RandomSource root(spec.seed);
    RandomSource data_rng = root.child(2);
    RandomSource mix_rng = root.child(4);

    Matrix mix;
    if (spec.kind == TaskKind::LinearMix) {
        mix = Matrix(spec.d, spec.v);
        for (double& x : mix.data) x = mix_rng.gaussian();
    }

    Dataset ds;
    ds.meta = meta_of(spec);
    ds.items.reserve(spec.n);
    for (int i = 0; i < spec.n; ++i) {
        Sequence seq{random_features(spec.s, spec.d, data_rng)};
        Matrix target;
        if (spec.kind == TaskKind::MeanPool) {
            target = Matrix(spec.s, spec.v, 0.0);
            for (int c = 0; c < spec.d; ++c) {
                double mean = 0.0;
                for (int r = 0; r < spec.s; ++r) mean += seq.features(r, c);
                mean /= static_cast<double>(spec.s);
                for (int r = 0; r < spec.s; ++r) target(r, c) = mean;
            }
        } else {
            target = matmul(seq.features, mix);
        }
        ds.items.push_back({std::move(seq), std::move(target)});
    }
    return ds;
}

Sequence normalize_length(const Sequence& seq, int target_len, double pad_value) {
    require(target_len >= 1, "normalize_length: target_len must be >= 1");
    if (seq.length() == target_len) return seq;
    Matrix out(target_len, seq.dim(), pad_value);
    const int keep = std::min(seq.length(), target_len);
    for (int r = 0; r < keep; ++r)
        for (int c = 0; c < seq.dim(); ++c) out(r, c) = seq.features(r, c);
    return Sequence{std::move(out)};
}

namespace {

json matrix_to_json(const Matrix& m) {
    json rows = json::array();
    for (int r = 0; r < m.rows; ++r) {
        json row = json::array();
        for (int c = 0; c < m.cols; ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

Matrix matrix_from_json(const json& rows, int line_no, const char* field) {
    if (!rows.is_array() || rows.empty() || !rows.front().is_array())
        throw io_error("line " + std::to_string(line_no) + ": field '" + field +
                       "' is not a non-empty array of arrays");
    const int r = static_cast<int>(rows.size());
    const int c = static_cast<int>(rows.front().size());
    Matrix m(r, c);
    for (int i = 0; i < r; ++i) {
        if (!rows[i].is_array() || static_cast<int>(rows[i].size()) != c)
            throw io_error("line " + std::to_string(line_no) + ": ragged rows in '" +
                           field + "'");
        for (int j = 0; j < c; ++j) m(i, j) = rows[i][j].get<double>();
    }
    return m;
}

}  // namespace

void save_jsonl(const Dataset& ds, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("save_jsonl: cannot open '" + path + "' for writing");
    json meta{{"meta",
               {{"n", ds.meta.n},
                {"s", ds.meta.s},
                {"d", ds.meta.d},
                {"v", ds.meta.v},
                {"generator", ds.meta.generator},
                {"seed", ds.meta.seed},
                {"noise_sd", ds.meta.noise_sd}}}};
    out << meta.dump() << "\n";
    for (size_t i = 0; i < ds.items.size(); ++i) {
        json rec{{"id", i},
                 {"features", matrix_to_json(ds.items[i].sequence.features)},
                 {"target", matrix_to_json(ds.items[i].target)}};
        out << rec.dump() << "\n";
    }
    if (!out) throw io_error("save_jsonl: write to '" + path + "' failed");
}

Dataset load_jsonl(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("load_jsonl: cannot open '" + path + "'");
    Dataset ds;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json rec;
        try {
            rec = json::parse(line);
        } catch (const json::exception& e) {
            throw io_error("line " + std::to_string(line_no) + ": " + e.what());
        }
        if (line_no == 1) {
            if (!rec.contains("meta"))
                throw io_error("line 1: missing 'meta' header record");
            const json& m = rec["meta"];
            ds.meta.n = m.value("n", 0);
            ds.meta.s = m.value("s", 0);
            ds.meta.d = m.value("d", 0);
            ds.meta.v = m.value("v", 0);
            ds.meta.generator = m.value("generator", "");
            ds.meta.seed = m.value("seed", std::uint64_t{0});
            ds.meta.noise_sd = m.value("noise_sd", 0.0);
            continue;
        }
        for (const char* field : {"id", "features", "target"})
            if (!rec.contains(field))
                throw io_error("line " + std::to_string(line_no) + ": record missing '" +
                               field + "' field");
        LabeledSequence item;
        item.sequence.features = matrix_from_json(rec["features"], line_no, "features");
        item.target = matrix_from_json(rec["target"], line_no, "target");
        if (item.target.rows != item.sequence.features.rows)
            throw io_error("line " + std::to_string(line_no) +
                           ": target row count differs from features");
        ds.items.push_back(std::move(item));
    }
    if (line_no == 0) throw io_error("load_jsonl: '" + path + "' is empty");
    return ds;
}

}  // namespace attent
