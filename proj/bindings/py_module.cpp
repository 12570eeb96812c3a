#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "attent/antk.hpp"
#include "attent/cli.hpp"
#include "attent/oracle.hpp"
#include "attent/tasks.hpp"
#include "attent/teaching.hpp"

namespace py = pybind11;
using namespace attent;

namespace {

Matrix matrix_from_array(const py::array_t<double, py::array::c_style | py::array::forcecast>& arr) {
    if (arr.ndim() != 2) throw contract_error("expected a 2-d array");
    Matrix m(static_cast<int>(arr.shape(0)), static_cast<int>(arr.shape(1)));
    std::copy(arr.data(), arr.data() + arr.size(), m.data.begin());
    return m;
}

py::array_t<double> array_from_matrix(const Matrix& m) {
    py::array_t<double> arr({m.rows, m.cols});
    std::copy(m.data.begin(), m.data.end(), arr.mutable_data());
    return arr;
}

AttentionParams params_from_arrays(const py::array_t<double>& w_q,
                                   const py::array_t<double>& w_k,
                                   const py::array_t<double>& w_v) {
    AttentionParams p{matrix_from_array(w_q), matrix_from_array(w_k),
                      matrix_from_array(w_v)};
    p.validate();
    return p;
}

std::vector<LabeledSequence> batch_from_lists(
    const std::vector<py::array_t<double>>& features,
    const std::vector<py::array_t<double>>& targets) {
    if (features.size() != targets.size())
        throw contract_error("features and targets differ in length");
    std::vector<LabeledSequence> batch;
    batch.reserve(features.size());
    for (size_t i = 0; i < features.size(); ++i)
        batch.push_back({Sequence{matrix_from_array(features[i])},
                         matrix_from_array(targets[i])});
    return batch;
}

TeachingConfig config_from_kwargs(const std::string& strategy, double temperature,
                                  const std::string& ratio_kind, double r_min, double r_max,
                                  const std::string& interval_kind, int interval_k,
                                  double interval_growth, double eta, double epsilon,
                                  int max_iters, int batch_size, int warmup_epochs,
                                  std::uint64_t seed) {
    TeachingConfig cfg;
    if (strategy == "hard") cfg.strategy.kind = SelectionKind::Hard;
    else if (strategy == "soft") cfg.strategy.kind = SelectionKind::Soft;
    else if (strategy == "random") cfg.strategy.kind = SelectionKind::Random;
    else throw contract_error("unknown strategy '" + strategy + "'");
    cfg.strategy.temperature = temperature;
    const int ramp = std::max(1, max_iters - 1);
    if (ratio_kind == "fixed") cfg.ratio = RatioSchedule::fixed(r_min, ramp);
    else if (ratio_kind == "incremental")
        cfg.ratio = RatioSchedule::incremental(r_min, r_max, ramp);
    else if (ratio_kind == "cosine") cfg.ratio = RatioSchedule::cosine(r_min, r_max, ramp);
    else throw contract_error("unknown ratio kind '" + ratio_kind + "'");
    if (interval_kind == "fixed") cfg.interval = IntervalSchedule::fixed(interval_k);
    else if (interval_kind == "incremental")
        cfg.interval = IntervalSchedule::incremental(interval_k, interval_growth);
    else throw contract_error("unknown interval kind '" + interval_kind + "'");
    cfg.eta = eta;
    cfg.epsilon = epsilon;
    cfg.max_iters = max_iters;
    cfg.batch_size = batch_size;
    cfg.warmup_epochs = warmup_epochs;
    cfg.seed = seed;
    cfg.validate();
    return cfg;
}

}  // namespace

PYBIND11_MODULE(attent, m) {
    m.doc() = "Attention learner with closed-form jacobians, empirical tangent "
              "kernels, and greedy example-selection teaching.";

    py::register_exception<contract_error>(m, "ContractError", PyExc_ValueError);
    py::register_exception<io_error>(m, "IoError", PyExc_IOError);

    py::class_<AttentionParams>(m, "AttentionParams")
        .def(py::init(&params_from_arrays), py::arg("w_q"), py::arg("w_k"), py::arg("w_v"))
        .def_property_readonly("w_q",
                               [](const AttentionParams& p) { return array_from_matrix(p.w_q); })
        .def_property_readonly("w_k",
                               [](const AttentionParams& p) { return array_from_matrix(p.w_k); })
        .def_property_readonly("w_v",
                               [](const AttentionParams& p) { return array_from_matrix(p.w_v); })
        .def_property_readonly("d", &AttentionParams::d)
        .def_property_readonly("p", &AttentionParams::p)
        .def_property_readonly("v", &AttentionParams::v);

    m.def("init_params",
          [](int d, int p, int v, std::uint64_t seed) {
              RandomSource rng(seed);
              return init_params(d, p, v, rng);
          },
          py::arg("d"), py::arg("p"), py::arg("v"), py::arg("seed") = 0);

    m.def("forward_self",
          [](const AttentionParams& params, const py::array_t<double>& features) {
              return array_from_matrix(
                  forward_self(params, Sequence{matrix_from_array(features)}));
          },
          py::arg("params"), py::arg("features"));
    m.def("forward_masked",
          [](const AttentionParams& params, const py::array_t<double>& features) {
              return array_from_matrix(
                  forward_masked(params, Sequence{matrix_from_array(features)}));
          },
          py::arg("params"), py::arg("features"));
    m.def("forward_cross",
          [](const AttentionParams& params, const py::array_t<double>& fq,
             const py::array_t<double>& fkv) {
              return array_from_matrix(forward_cross(params, Sequence{matrix_from_array(fq)},
                                                     Sequence{matrix_from_array(fkv)}));
          },
          py::arg("params"), py::arg("features_q"), py::arg("features_kv"));

    m.def("jac_value",
          [](const AttentionParams& params, const py::array_t<double>& features) {
              return array_from_matrix(jac_value(params, Sequence{matrix_from_array(features)}));
          },
          py::arg("params"), py::arg("features"));
    m.def("jac_query_col",
          [](const AttentionParams& params, const py::array_t<double>& features, int i) {
              return array_from_matrix(
                  jac_query_col(params, Sequence{matrix_from_array(features)}, i));
          },
          py::arg("params"), py::arg("features"), py::arg("i"));
    m.def("jac_key_col",
          [](const AttentionParams& params, const py::array_t<double>& features, int i) {
              return array_from_matrix(
                  jac_key_col(params, Sequence{matrix_from_array(features)}, i));
          },
          py::arg("params"), py::arg("features"), py::arg("i"));

    m.def("backward",
          [](const AttentionParams& params, const std::vector<py::array_t<double>>& features,
             const std::vector<py::array_t<double>>& targets) {
              const auto batch = batch_from_lists(features, targets);
              const auto [grad, loss] = backward(params, batch);
              return py::make_tuple(array_from_matrix(grad.g_wq), array_from_matrix(grad.g_wk),
                                    array_from_matrix(grad.g_wv), loss);
          },
          py::arg("params"), py::arg("features"), py::arg("targets"),
          "Returns (g_wq, g_wk, g_wv, loss) averaged over all rows of the batch.");

    m.def("sgd_step",
          [](const AttentionParams& params, const py::array_t<double>& g_wq,
             const py::array_t<double>& g_wk, const py::array_t<double>& g_wv, double eta) {
              const FlatGradient grad{matrix_from_array(g_wq), matrix_from_array(g_wk),
                                      matrix_from_array(g_wv)};
              return sgd_step(params, grad, eta);
          },
          py::arg("params"), py::arg("g_wq"), py::arg("g_wk"), py::arg("g_wv"),
          py::arg("eta"));

    m.def("antk_pair",
          [](const AttentionParams& params, const py::array_t<double>& fa,
             const py::array_t<double>& fb) {
              return array_from_matrix(antk_pair(params, Sequence{matrix_from_array(fa)},
                                                 Sequence{matrix_from_array(fb)})
                                           .block);
          },
          py::arg("params"), py::arg("features_a"), py::arg("features_b"));
    m.def("antk_gram",
          [](const AttentionParams& params, const std::vector<py::array_t<double>>& features) {
              std::vector<Sequence> seqs;
              seqs.reserve(features.size());
              for (const auto& f : features) seqs.push_back(Sequence{matrix_from_array(f)});
              return array_from_matrix(antk_gram(params, seqs).block);
          },
          py::arg("params"), py::arg("features"));

    m.def("residual_scores",
          [](const AttentionParams& params, const std::vector<py::array_t<double>>& features,
             const std::vector<py::array_t<double>>& targets) {
              return residual_scores(params, batch_from_lists(features, targets));
          },
          py::arg("params"), py::arg("features"), py::arg("targets"));

    m.def("select_hard",
          [](const std::vector<double>& scores, int m_sel) { return select_hard(scores, m_sel); },
          py::arg("scores"), py::arg("m"));
    m.def("select_soft",
          [](const std::vector<double>& scores, int m_sel, double temperature,
             std::uint64_t seed) {
              RandomSource rng(seed);
              return select_soft(scores, m_sel, temperature, rng);
          },
          py::arg("scores"), py::arg("m"), py::arg("temperature") = 1.0, py::arg("seed") = 0);
    m.def("select_random",
          [](int n, int m_sel, std::uint64_t seed) {
              RandomSource rng(seed);
              return select_random(n, m_sel, rng);
          },
          py::arg("n"), py::arg("m"), py::arg("seed") = 0);

    m.def("ratio_at",
          [](const std::string& kind, double r_min, double r_max, int horizon, int epoch) {
              RatioSchedule sched;
              if (kind == "fixed") sched = RatioSchedule::fixed(r_min, horizon);
              else if (kind == "incremental")
                  sched = RatioSchedule::incremental(r_min, r_max, horizon);
              else if (kind == "cosine") sched = RatioSchedule::cosine(r_min, r_max, horizon);
              else throw contract_error("unknown ratio kind '" + kind + "'");
              return ratio_at(sched, epoch);
          },
          py::arg("kind"), py::arg("r_min"), py::arg("r_max"), py::arg("horizon"),
          py::arg("epoch"));

    m.def("teach_loop",
          [](const AttentionParams& init, const std::vector<py::array_t<double>>& features,
             const std::vector<py::array_t<double>>& targets, const std::string& strategy,
             double temperature, const std::string& ratio_kind, double r_min, double r_max,
             const std::string& interval_kind, int interval_k, double interval_growth,
             double eta, double epsilon, int max_iters, int batch_size, int warmup_epochs,
             std::uint64_t seed) {
              const auto batch = batch_from_lists(features, targets);
              const TeachingConfig cfg = config_from_kwargs(
                  strategy, temperature, ratio_kind, r_min, r_max, interval_kind, interval_k,
                  interval_growth, eta, epsilon, max_iters, batch_size, warmup_epochs, seed);
              auto [params, trace] = teach_loop(init, batch, cfg);
              py::list rows;
              for (const TraceRow& r : trace.rows)
                  rows.append(py::dict(
                      py::arg("iter") = r.iter, py::arg("epoch") = r.epoch,
                      py::arg("ratio") = r.ratio, py::arg("n_selected") = r.n_selected,
                      py::arg("subset_loss") = r.subset_loss,
                      py::arg("full_loss") = r.full_loss,
                      py::arg("residual_fro") = r.residual_fro,
                      py::arg("reselected") = r.reselected));
              return py::make_tuple(params, rows);
          },
          py::arg("init"), py::arg("features"), py::arg("targets"),
          py::arg("strategy") = "hard", py::arg("temperature") = 1.0,
          py::arg("ratio_kind") = "fixed", py::arg("r_min") = 1.0, py::arg("r_max") = 1.0,
          py::arg("interval_kind") = "fixed", py::arg("interval_k") = 1,
          py::arg("interval_growth") = 2.0, py::arg("eta") = 0.5,
          py::arg("epsilon") = 1e-6, py::arg("max_iters") = 200, py::arg("batch_size") = 0,
          py::arg("warmup_epochs") = 0, py::arg("seed") = 7,
          "Returns (final_params, trace_rows).");

    m.def("gen_teacher",
          [](int n, int s, int d, int p, int v, double noise_sd, std::uint64_t seed) {
              TaskSpec spec{TaskKind::TeacherNet, n, s, d, p, v, noise_sd, seed};
              auto [ds, teacher] = gen_teacher(spec);
              py::list features, targets;
              for (const LabeledSequence& item : ds.items) {
                  features.append(array_from_matrix(item.sequence.features));
                  targets.append(array_from_matrix(item.target));
              }
              return py::make_tuple(features, targets, teacher);
          },
          py::arg("n"), py::arg("s"), py::arg("d"), py::arg("p"), py::arg("v") = 1,
          py::arg("noise_sd") = 0.0, py::arg("seed") = 1,
          "Returns (features, targets, teacher_params).");

    m.def("save_jsonl",
          [](const std::string& path, const std::vector<py::array_t<double>>& features,
             const std::vector<py::array_t<double>>& targets) {
              Dataset ds;
              const auto batch = batch_from_lists(features, targets);
              ds.items = batch;
              if (!ds.items.empty()) {
                  ds.meta.n = static_cast<int>(ds.items.size());
                  ds.meta.s = ds.items.front().sequence.length();
                  ds.meta.d = ds.items.front().sequence.dim();
                  ds.meta.v = ds.items.front().target.cols;
              }
              save_jsonl(ds, path);
          },
          py::arg("path"), py::arg("features"), py::arg("targets"));
    m.def("load_jsonl",
          [](const std::string& path) {
              const Dataset ds = load_jsonl(path);
              py::list features, targets;
              for (const LabeledSequence& item : ds.items) {
                  features.append(array_from_matrix(item.sequence.features));
                  targets.append(array_from_matrix(item.target));
              }
              return py::make_tuple(features, targets);
          },
          py::arg("path"));

    m.def("verify",
          [](std::uint64_t seed) {
              const oracle::VerifyReport report = oracle::run_verify_suite(seed);
              py::list checks;
              for (const oracle::CheckResult& c : report.checks)
                  checks.append(py::dict(py::arg("name") = c.name,
                                         py::arg("max_err") = c.max_err,
                                         py::arg("tolerance") = c.tolerance,
                                         py::arg("pass") = c.pass));
              return checks;
          },
          py::arg("seed") = 20240501,
          "Runs the finite-difference and brute-force verification suite.");
}
