#include "attent/cli.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "attent/antk.hpp"
#include "attent/io.hpp"
#include "attent/oracle.hpp"

namespace attent::cli {

namespace fs = std::filesystem;
using nlohmann::json;

std::string RunConfig::dataset_path() const {
    const fs::path p(dataset);
    if (p.is_absolute()) return dataset;
    return (fs::path(output_dir) / p).string();
}

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> parts;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, sep)) parts.push_back(trim(cur));
    return parts;
}

double parse_real(const std::map<std::string, std::string>& kv, const std::string& key,
                  double fallback) {
    const auto it = kv.find(key);
    if (it == kv.end()) return fallback;
    try {
        size_t used = 0;
        const double x = std::stod(it->second, &used);
        if (used != it->second.size()) throw std::invalid_argument("trailing junk");
        return x;
    } catch (const std::exception&) {
        throw contract_error(key + ": not a real number: '" + it->second + "'");
    }
}

long long parse_int(const std::map<std::string, std::string>& kv, const std::string& key,
                    long long fallback) {
    const auto it = kv.find(key);
    if (it == kv.end()) return fallback;
    try {
        size_t used = 0;
        const long long x = std::stoll(it->second, &used);
        if (used != it->second.size()) throw std::invalid_argument("trailing junk");
        return x;
    } catch (const std::exception&) {
        throw contract_error(key + ": not an integer: '" + it->second + "'");
    }
}

std::uint64_t parse_u64(const std::map<std::string, std::string>& kv,
                        const std::string& key, std::uint64_t fallback) {
    const auto it = kv.find(key);
    if (it == kv.end()) return fallback;
    try {
        size_t used = 0;
        const std::uint64_t x = std::stoull(it->second, &used);
        if (used != it->second.size()) throw std::invalid_argument("trailing junk");
        return x;
    } catch (const std::exception&) {
        throw contract_error(key + ": not an unsigned integer: '" + it->second + "'");
    }
}

std::string parse_str(const std::map<std::string, std::string>& kv, const std::string& key,
                      const std::string& fallback) {
    const auto it = kv.find(key);
    return it == kv.end() ? fallback : it->second;
}

bool parse_bool(const std::map<std::string, std::string>& kv, const std::string& key,
                bool fallback) {
    const auto it = kv.find(key);
    if (it == kv.end()) return fallback;
    if (it->second == "true" || it->second == "1") return true;
    if (it->second == "false" || it->second == "0") return false;
    throw contract_error(key + ": expected true/false, got '" + it->second + "'");
}

SelectionStrategy parse_strategy_spec(const std::string& spec, const std::string& where) {
    const auto parts = split(spec, ':');
    SelectionStrategy s;
    if (parts.empty()) throw contract_error(where + ": empty strategy");
    if (parts[0] == "random") s.kind = SelectionKind::Random;
    else if (parts[0] == "hard") s.kind = SelectionKind::Hard;
    else if (parts[0] == "soft") s.kind = SelectionKind::Soft;
    else throw contract_error(where + ": unknown strategy '" + parts[0] + "'");
    if (parts.size() > 1) s.temperature = std::stod(parts[1]);
    s.validate();
    return s;
}

RatioSchedule parse_ratio_spec(const std::string& spec, int horizon,
                               const std::string& where) {
    const auto parts = split(spec, ':');
    if (parts.empty()) throw contract_error(where + ": empty ratio");
    try {
        if (parts[0] == "fixed" && parts.size() == 2)
            return RatioSchedule::fixed(std::stod(parts[1]), horizon);
        if (parts[0] == "incremental" && parts.size() == 3)
            return RatioSchedule::incremental(std::stod(parts[1]), std::stod(parts[2]),
                                              horizon);
        if (parts[0] == "cosine" && parts.size() == 3)
            return RatioSchedule::cosine(std::stod(parts[1]), std::stod(parts[2]), horizon);
    } catch (const contract_error&) {
        throw;
    } catch (const std::exception&) {
        throw contract_error(where + ": bad ratio spec '" + spec + "'");
    }
    throw contract_error(where + ": bad ratio spec '" + spec + "'");
}

IntervalSchedule parse_interval_spec(const std::string& spec, const std::string& where) {
    const auto parts = split(spec, ':');
    if (parts.empty()) throw contract_error(where + ": empty interval");
    try {
        if (parts[0] == "fixed" && parts.size() == 2)
            return IntervalSchedule::fixed(std::stoi(parts[1]));
        if (parts[0] == "incremental" && parts.size() == 3)
            return IntervalSchedule::incremental(std::stoi(parts[1]), std::stod(parts[2]));
    } catch (const contract_error&) {
        throw;
    } catch (const std::exception&) {
        throw contract_error(where + ": bad interval spec '" + spec + "'");
    }
    throw contract_error(where + ": bad interval spec '" + spec + "'");
}

void write_file(const std::string& path, const std::string& contents) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot open '" + path + "' for writing");
    out << contents;
    if (!out) throw io_error("write to '" + path + "' failed");
}

std::string trace_to_csv(const TeachingTrace& trace, bool timing) {
    std::string csv =
        "iter,epoch,ratio,n_selected,subset_loss,full_loss,residual_fro,reselected,wall_ns\n";
    for (const TraceRow& r : trace.rows) {
        csv += std::to_string(r.iter) + ',' + std::to_string(r.epoch) + ',' +
               format_double(r.ratio) + ',' + std::to_string(r.n_selected) + ',' +
               format_double(r.subset_loss) + ',' + format_double(r.full_loss) + ',' +
               format_double(r.residual_fro) + ',' + std::to_string(r.reselected) + ',' +
               std::to_string(timing ? r.wall_ns : 0ll) + '\n';
    }
    return csv;
}

std::string selections_to_jsonl(const TeachingTrace& trace) {
    std::string out;
    for (const SelectionEvent& ev : trace.selections) {
        json rec{{"epoch", ev.epoch}, {"ids", ev.ids}};
        out += rec.dump() + '\n';
    }
    return out;
}

json matrix_to_json(const Matrix& m) {
    json rows = json::array();
    for (int r = 0; r < m.rows; ++r) {
        json row = json::array();
        for (int c = 0; c < m.cols; ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

Matrix matrix_from_json_checked(const json& j, const char* field) {
    if (!j.contains(field) || !j[field].is_array() || j[field].empty())
        throw io_error(std::string("params json: missing or empty '") + field + "'");
    const json& rows = j[field];
    const int r = static_cast<int>(rows.size());
    const int c = static_cast<int>(rows.front().size());
    Matrix m(r, c);
    for (int i = 0; i < r; ++i) {
        if (!rows[i].is_array() || static_cast<int>(rows[i].size()) != c)
            throw io_error(std::string("params json: ragged rows in '") + field + "'");
        for (int k = 0; k < c; ++k) m(i, k) = rows[i][k].get<double>();
    }
    return m;
}

std::string params_to_json(const AttentionParams& params) {
    json j{{"w_q", matrix_to_json(params.w_q)},
           {"w_k", matrix_to_json(params.w_k)},
           {"w_v", matrix_to_json(params.w_v)}};
    return j.dump(2) + "\n";
}

Dataset load_dataset_checked(const RunConfig& cfg) {
    Dataset ds = load_jsonl(cfg.dataset_path());
    require(!ds.items.empty(), "dataset: no items in '" + cfg.dataset_path() + "'");
    const int s = ds.items.front().sequence.length();
    const int d = ds.items.front().sequence.dim();
    const int v = ds.items.front().target.cols;
    for (const LabeledSequence& item : ds.items)
        require(item.sequence.length() == s && item.sequence.dim() == d &&
                    item.target.cols == v,
                "dataset: items disagree in shape");
    require(d == cfg.task.d, "task.d: config says " + std::to_string(cfg.task.d) +
                                 " but dataset has d = " + std::to_string(d));
    require(v == cfg.task.v, "task.v: config says " + std::to_string(cfg.task.v) +
                                 " but dataset has v = " + std::to_string(v));
    return ds;
}

AttentionParams init_student(const RunConfig& cfg) {
    RandomSource rng = RandomSource(cfg.run_seed).child(0x0d31ull);
    return init_params(cfg.task.d, cfg.task.p, cfg.task.v, rng);
}

}  // namespace

std::map<std::string, std::string> parse_ini(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("config: cannot open '" + path + "'");
    std::map<std::string, std::string> kv;
    std::string line, section;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find_first_of("#;");
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw io_error("config line " + std::to_string(line_no) +
                               ": unterminated section header");
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw io_error("config line " + std::to_string(line_no) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        if (key.empty())
            throw io_error("config line " + std::to_string(line_no) + ": empty key");
        kv[section.empty() ? key : section + "." + key] = val;
    }
    return kv;
}

void apply_overrides(std::map<std::string, std::string>& kv,
                     const std::vector<std::string>& sets) {
    for (const std::string& s : sets) {
        const auto eq = s.find('=');
        if (eq == std::string::npos)
            throw contract_error("--set expects KEY=VALUE, got '" + s + "'");
        kv[trim(s.substr(0, eq))] = trim(s.substr(eq + 1));
    }
}

RunConfig build_config(const std::map<std::string, std::string>& kv) {
    RunConfig cfg;

    const std::string kind = parse_str(kv, "task.kind", "teacher");
    if (kind == "teacher") cfg.task.kind = TaskKind::TeacherNet;
    else if (kind == "meanpool") cfg.task.kind = TaskKind::MeanPool;
    else if (kind == "linearmix") cfg.task.kind = TaskKind::LinearMix;
    else throw contract_error("task.kind: unknown kind '" + kind + "'");
    cfg.task.n = static_cast<int>(parse_int(kv, "task.n", cfg.task.n));
    cfg.task.s = static_cast<int>(parse_int(kv, "task.s", cfg.task.s));
    cfg.task.d = static_cast<int>(parse_int(kv, "task.d", cfg.task.d));
    cfg.task.p = static_cast<int>(parse_int(kv, "task.p", cfg.task.p));
    cfg.task.v = static_cast<int>(parse_int(kv, "task.v", cfg.task.v));
    cfg.task.noise_sd = parse_real(kv, "task.noise_sd", cfg.task.noise_sd);
    cfg.task.seed = parse_u64(kv, "task.seed", cfg.task.seed);

    const int horizon = static_cast<int>(parse_int(kv, "teaching.max_iters", 200));
    require(horizon >= 1, "teaching.max_iters: must be >= 1");
    const int ramp = std::max(1, horizon - 1);  // schedules span epochs 0..max_iters-1
    cfg.preset_name = parse_str(kv, "teaching.preset", "");
    if (cfg.preset_name == "llm") cfg.teaching = preset(PresetKind::LlmStyle, horizon);
    else if (cfg.preset_name == "vit") cfg.teaching = preset(PresetKind::VitStyle, horizon);
    else if (!cfg.preset_name.empty())
        throw contract_error("teaching.preset: unknown preset '" + cfg.preset_name + "'");
    cfg.teaching.max_iters = horizon;

    if (kv.contains("teaching.strategy"))
        cfg.teaching.strategy =
            parse_strategy_spec(kv.at("teaching.strategy"), "teaching.strategy");
    if (kv.contains("teaching.temperature"))
        cfg.teaching.strategy.temperature = parse_real(kv, "teaching.temperature", 1.0);
    if (kv.contains("teaching.ratio"))
        cfg.teaching.ratio = parse_ratio_spec(kv.at("teaching.ratio"), ramp, "teaching.ratio");
    else
        cfg.teaching.ratio.horizon = ramp;
    if (kv.contains("teaching.interval"))
        cfg.teaching.interval =
            parse_interval_spec(kv.at("teaching.interval"), "teaching.interval");
    cfg.teaching.eta = parse_real(kv, "teaching.eta", cfg.teaching.eta);
    cfg.teaching.epsilon = parse_real(kv, "teaching.epsilon", cfg.teaching.epsilon);
    cfg.teaching.batch_size =
        static_cast<int>(parse_int(kv, "teaching.batch_size", cfg.teaching.batch_size));
    cfg.teaching.warmup_epochs =
        static_cast<int>(parse_int(kv, "teaching.warmup_epochs", cfg.teaching.warmup_epochs));
    cfg.teaching.seed = parse_u64(kv, "teaching.seed", cfg.teaching.seed);

    cfg.dataset = parse_str(kv, "run.dataset", cfg.dataset);
    cfg.checkpoint_every =
        static_cast<int>(parse_int(kv, "run.checkpoint_every", cfg.checkpoint_every));
    cfg.ntk_probes = static_cast<int>(parse_int(kv, "run.ntk_probes", cfg.ntk_probes));
    cfg.output_dir = parse_str(kv, "run.output_dir", cfg.output_dir);
    cfg.run_seed = parse_u64(kv, "run.seed", cfg.run_seed);
    cfg.timing = parse_bool(kv, "run.timing", cfg.timing);

    if (kv.contains("ablate.ratios")) cfg.ablate_ratios = split(kv.at("ablate.ratios"), ',');
    if (kv.contains("ablate.intervals"))
        cfg.ablate_intervals = split(kv.at("ablate.intervals"), ',');
    if (kv.contains("ablate.strategies"))
        cfg.ablate_strategies = split(kv.at("ablate.strategies"), ',');
    cfg.ablate_loss_threshold =
        parse_real(kv, "ablate.loss_threshold", cfg.ablate_loss_threshold);

    cfg.verify_seed = parse_u64(kv, "verify.seed", cfg.verify_seed);
    cfg.verify_corrupt = parse_str(kv, "verify.corrupt", "");

    // field-path validation before any compute
    try {
        cfg.task.validate();
        cfg.teaching.validate();
    } catch (const contract_error& e) {
        throw contract_error(std::string("config: ") + e.what());
    }
    require(cfg.checkpoint_every >= 1, "run.checkpoint_every: must be >= 1");
    require(cfg.ntk_probes >= 1, "run.ntk_probes: must be >= 1");
    require(cfg.ablate_loss_threshold > 0.0 && cfg.ablate_loss_threshold < 1.0,
            "ablate.loss_threshold: must lie in (0,1)");
    return cfg;
}

int run_gen(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    (void)err;
    fs::create_directories(cfg.output_dir);
    Dataset ds;
    if (cfg.task.kind == TaskKind::TeacherNet) {
        auto [dataset, teacher] = gen_teacher(cfg.task);
        ds = std::move(dataset);
        write_file((fs::path(cfg.output_dir) / "teacher_params.json").string(),
                   params_to_json(teacher));
    } else {
        ds = gen_analytic(cfg.task);
    }
    save_jsonl(ds, cfg.dataset_path());
    json meta{{"n", ds.meta.n},       {"s", ds.meta.s},
              {"d", ds.meta.d},       {"v", ds.meta.v},
              {"generator", ds.meta.generator}, {"seed", ds.meta.seed},
              {"noise_sd", ds.meta.noise_sd},   {"path", cfg.dataset_path()}};
    out << meta.dump() << "\n";
    return kExitOk;
}

int run_teach(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    (void)err;
    fs::create_directories(cfg.output_dir);
    const Dataset ds = load_dataset_checked(cfg);
    const AttentionParams student = init_student(cfg);
    auto [final_params, trace] = teach_loop(student, ds.items, cfg.teaching);

    const fs::path dir(cfg.output_dir);
    write_file((dir / "trace.csv").string(), trace_to_csv(trace, cfg.timing));
    write_file((dir / "selected.jsonl").string(), selections_to_jsonl(trace));
    write_file((dir / "params_final.json").string(), params_to_json(final_params));

    std::vector<LabeledSequence> all(ds.items.begin(), ds.items.end());
    const double final_loss = batch_loss(final_params, all);
    const int epochs_run = trace.rows.empty() ? 0 : trace.rows.back().epoch + 1;
    json summary{{"iterations", trace.rows.size()},
                 {"epochs", epochs_run},
                 {"final_full_loss", final_loss},
                 {"stopped_by_epsilon", epochs_run < cfg.teaching.max_iters}};
    if (cfg.json_output) out << summary.dump() << "\n";
    else
        out << "teach: " << trace.rows.size() << " iterations, final full loss "
            << format_double(final_loss) << "\n";
    return kExitOk;
}

int run_ntk(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    (void)err;
    fs::create_directories(cfg.output_dir);
    const Dataset ds = load_dataset_checked(cfg);
    AttentionParams params = init_student(cfg);

    const int probes_n = std::min<int>(cfg.ntk_probes, static_cast<int>(ds.items.size()));
    std::vector<Sequence> probes;
    for (int i = 0; i < probes_n; ++i) probes.push_back(ds.items[i].sequence);

    std::vector<Checkpoint> checkpoints;
    checkpoints.push_back({0, params});
    for (int step = 1; step <= cfg.teaching.max_iters; ++step) {
        auto [grad, loss] = backward(params, ds.items);
        (void)loss;
        params = sgd_step(params, grad, cfg.teaching.eta);
        if (step % cfg.checkpoint_every == 0 || step == cfg.teaching.max_iters)
            checkpoints.push_back({step, params});
    }
    const KernelTrace trace = track_convergence(checkpoints, probes,
                                                ReferenceKind::FinalCheckpoint, true);

    const fs::path dir(cfg.output_dir);
    std::string csv = "step,frobenius_diff\n";
    for (const KernelTraceEntry& e : trace.checkpoints)
        csv += std::to_string(e.step) + ',' + format_double(e.diff_to_reference) + '\n';
    write_file((dir / "ntk_trace.csv").string(), csv);

    for (size_t i = 0; i < trace.grams.size(); ++i) {
        std::string hm = "row,col,value\n";
        const Matrix& g = trace.grams[i].block;
        for (int r = 0; r < g.rows; ++r)
            for (int c = 0; c < g.cols; ++c)
                hm += std::to_string(r) + ',' + std::to_string(c) + ',' +
                      format_double(g(r, c)) + '\n';
        write_file((dir / ("heatmap_" + std::to_string(trace.checkpoints[i].step) + ".csv"))
                       .string(),
                   hm);
    }
    if (cfg.json_output) {
        json j{{"checkpoints", trace.checkpoints.size()},
               {"first_diff", trace.checkpoints.front().diff_to_reference},
               {"last_diff", trace.checkpoints.back().diff_to_reference}};
        out << j.dump() << "\n";
    } else {
        out << "ntk: " << trace.checkpoints.size() << " checkpoints, first diff "
            << format_double(trace.checkpoints.front().diff_to_reference) << "\n";
    }
    return kExitOk;
}

int run_ablate(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    fs::create_directories(cfg.output_dir);
    const Dataset ds = load_dataset_checked(cfg);
    const AttentionParams student = init_student(cfg);
    const fs::path dir(cfg.output_dir);

    std::string summary =
        "cell,ratio,interval,strategy,iters_to_threshold,final_full_loss,wall_ms\n";
    int cell_id = 0;
    for (const std::string& ratio_spec : cfg.ablate_ratios) {
        for (const std::string& interval_spec : cfg.ablate_intervals) {
            for (const std::string& strategy_spec : cfg.ablate_strategies) {
                const std::string cell = "c" + std::to_string(cell_id++);
                try {
                    TeachingConfig tc = cfg.teaching;
                    tc.ratio = parse_ratio_spec(ratio_spec, std::max(1, tc.max_iters - 1),
                                                "ablate.ratios");
                    tc.interval = parse_interval_spec(interval_spec, "ablate.intervals");
                    tc.strategy = parse_strategy_spec(strategy_spec, "ablate.strategies");

                    const auto t0 = std::chrono::steady_clock::now();
                    auto [final_params, trace] = teach_loop(student, ds.items, tc);
                    const auto t1 = std::chrono::steady_clock::now();
                    const long long wall_ms =
                        cfg.timing
                            ? std::chrono::duration_cast<std::chrono::milliseconds>(t1 - t0)
                                  .count()
                            : 0;

                    long long to_threshold = -1;
                    if (!trace.rows.empty()) {
                        const double target =
                            cfg.ablate_loss_threshold * trace.rows.front().full_loss;
                        for (const TraceRow& r : trace.rows)
                            if (r.full_loss <= target) {
                                to_threshold = r.iter;
                                break;
                            }
                    }
                    std::vector<LabeledSequence> all(ds.items.begin(), ds.items.end());
                    write_file((dir / ("trace_" + cell + ".csv")).string(),
                               trace_to_csv(trace, cfg.timing));
                    summary += cell + ',' + ratio_spec + ',' + interval_spec + ',' +
                               strategy_spec + ',' + std::to_string(to_threshold) + ',' +
                               format_double(batch_loss(final_params, all)) + ',' +
                               std::to_string(wall_ms) + '\n';
                } catch (const std::exception& e) {
                    err << "ablate cell " << cell << " failed: " << e.what() << "\n";
                    summary += cell + ',' + ratio_spec + ',' + interval_spec + ',' +
                               strategy_spec + ",-1,nan,0\n";
                }
            }
        }
    }
    write_file((dir / "summary.csv").string(), summary);
    out << "ablate: " << cell_id << " cells done\n";
    return kExitOk;
}

namespace {

AttentionParams params_from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw io_error(path + ": " + e.what());
    }
    AttentionParams params{matrix_from_json_checked(j, "w_q"),
                           matrix_from_json_checked(j, "w_k"),
                           matrix_from_json_checked(j, "w_v")};
    params.validate();
    return params;
}

// with a noiseless teacher dataset on disk, the teacher itself must have
// zero residual on it; covers the gen -> verify pipeline
void append_teacher_consistency(const RunConfig& cfg, oracle::VerifyReport& report) {
    const fs::path ds_path(cfg.dataset_path());
    const fs::path teacher_path = fs::path(cfg.output_dir) / "teacher_params.json";
    if (!fs::exists(ds_path) || !fs::exists(teacher_path)) return;
    const Dataset ds = load_jsonl(ds_path.string());
    if (ds.meta.generator != "teacher" || ds.meta.noise_sd != 0.0 || ds.items.empty())
        return;
    const AttentionParams teacher = params_from_json_file(teacher_path.string());
    double max_residual = 0.0;
    for (double s : residual_scores(teacher, ds.items))
        max_residual = std::max(max_residual, s);
    report.checks.push_back(
        {"teacher_consistency", max_residual, 1e-12, max_residual <= 1e-12});
}

}  // namespace

int run_verify(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    oracle::VerifyReport report =
        oracle::run_verify_suite(cfg.verify_seed, cfg.verify_corrupt);
    append_teacher_consistency(cfg, report);
    if (cfg.json_output) {
        json checks = json::array();
        for (const oracle::CheckResult& c : report.checks)
            checks.push_back({{"name", c.name},
                              {"max_err", c.max_err},
                              {"tolerance", c.tolerance},
                              {"pass", c.pass}});
        out << json{{"checks", checks}, {"all_pass", report.all_pass()}}.dump() << "\n";
    } else {
        for (const oracle::CheckResult& c : report.checks)
            out << (c.pass ? "PASS " : "FAIL ") << c.name << " max_err "
                << format_double(c.max_err) << " tol " << format_double(c.tolerance) << "\n";
    }
    if (!report.all_pass()) {
        for (const oracle::CheckResult& c : report.checks)
            if (!c.pass) err << "verification failed: " << c.name << "\n";
        return kExitVerifyFailed;
    }
    return kExitOk;
}

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    try {
        if (args.empty()) {
            err << "usage: attent <gen|teach|ntk|ablate|verify> [--config PATH] "
                   "[--set K=V]... [--seed U64] [--out DIR] [--json]\n";
            return kExitContract;
        }
        const std::string command = args[0];
        std::map<std::string, std::string> kv;
        std::vector<std::string> sets;
        bool json_flag = false;
        std::string config_path, out_dir, seed_str;
        for (size_t i = 1; i < args.size(); ++i) {
            const std::string& a = args[i];
            const auto need_value = [&](const char* flag) -> const std::string& {
                if (i + 1 >= args.size())
                    throw contract_error(std::string(flag) + " expects a value");
                return args[++i];
            };
            if (a == "--config") config_path = need_value("--config");
            else if (a == "--set") sets.push_back(need_value("--set"));
            else if (a == "--seed") seed_str = need_value("--seed");
            else if (a == "--out") out_dir = need_value("--out");
            else if (a == "--json") json_flag = true;
            else throw contract_error("unknown flag '" + a + "'");
        }
        if (!config_path.empty()) kv = parse_ini(config_path);
        apply_overrides(kv, sets);
        if (!seed_str.empty()) kv["run.seed"] = seed_str;
        if (!out_dir.empty()) kv["run.output_dir"] = out_dir;
        RunConfig cfg = build_config(kv);
        cfg.json_output = json_flag;

        if (command == "gen") return run_gen(cfg, out, err);
        if (command == "teach") return run_teach(cfg, out, err);
        if (command == "ntk") return run_ntk(cfg, out, err);
        if (command == "ablate") return run_ablate(cfg, out, err);
        if (command == "verify") return run_verify(cfg, out, err);
        throw contract_error("unknown command '" + command + "'");
    } catch (const io_error& e) {
        err << "io error: " << e.what() << "\n";
        return kExitIo;
    } catch (const contract_error& e) {
        err << "error: " << e.what() << "\n";
        return kExitContract;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitContract;
    }
}

}  // namespace attent::cli
