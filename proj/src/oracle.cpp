#include "attent/oracle.hpp"

#include <algorithm>
#include <cmath>

#include "attent/teaching.hpp"

namespace attent::oracle {

namespace {

Matrix& block_of(AttentionParams& params, WeightBlock which) {
    switch (which) {
        case WeightBlock::Value: return params.w_v;
        case WeightBlock::Query: return params.w_q;
        case WeightBlock::Key: return params.w_k;
    }
    throw contract_error("block_of: bad weight selector");
}

// relative error with an absolute floor folded into the denominator, so
// err <= tol_rel  <=>  |a-b| <= max(tol_rel*max(|a|,|b|), tol_abs)
double rel_err(double a, double b, double floor_ratio) {
    const double denom = std::max({std::abs(a), std::abs(b), floor_ratio});
    return std::abs(a - b) / denom;
}

double max_rel_err(const Matrix& a, const Matrix& b, double floor_ratio) {
    require(a.same_shape(b), "max_rel_err: shape mismatch");
    double err = 0.0;
    for (size_t i = 0; i < a.data.size(); ++i)
        err = std::max(err, rel_err(a.data[i], b.data[i], floor_ratio));
    return err;
}

}  // namespace

Matrix fd_jacobian(const AttentionParams& params, const Sequence& seq,
                   WeightBlock which, int col, const FdConfig& cfg) {
    require(cfg.step > 0.0, "fd_jacobian: step must be positive");
    require(params.v() == 1, "fd_jacobian: jacobian layout is defined for v = 1");
    AttentionParams probe = params;
    Matrix& w = block_of(probe, which);
    require(col >= 0 && col < w.cols, "fd_jacobian: column out of range");
    Matrix out(seq.length(), params.d(), 0.0);
    for (int r = 0; r < params.d(); ++r) {
        const double saved = w(r, col);
        w(r, col) = saved + cfg.step;
        const Matrix fp = forward_self(probe, seq);
        w(r, col) = saved - cfg.step;
        const Matrix fm = forward_self(probe, seq);
        w(r, col) = saved;
        for (int j = 0; j < seq.length(); ++j)
            out(j, r) = (fp(j, 0) - fm(j, 0)) / (2.0 * cfg.step);
    }
    return out;
}

FlatGradient fd_loss_grad(const AttentionParams& params,
                          std::span<const LabeledSequence> batch, const FdConfig& cfg) {
    require(cfg.step > 0.0, "fd_loss_grad: step must be positive");
    FlatGradient grad{Matrix(params.d(), params.p(), 0.0),
                      Matrix(params.d(), params.p(), 0.0),
                      Matrix(params.d(), params.v(), 0.0)};
    AttentionParams probe = params;
    const auto diff_block = [&](Matrix& w, Matrix& g) {
        for (size_t i = 0; i < w.data.size(); ++i) {
            const double saved = w.data[i];
            w.data[i] = saved + cfg.step;
            const double lp = batch_loss(probe, batch);
            w.data[i] = saved - cfg.step;
            const double lm = batch_loss(probe, batch);
            w.data[i] = saved;
            g.data[i] = (lp - lm) / (2.0 * cfg.step);
        }
    };
    diff_block(probe.w_q, grad.g_wq);
    diff_block(probe.w_k, grad.g_wk);
    diff_block(probe.w_v, grad.g_wv);
    return grad;
}

Matrix fd_antk_pair(const AttentionParams& params, const Sequence& a, const Sequence& b,
                    const FdConfig& cfg) {
    require(cfg.step > 0.0, "fd_antk_pair: step must be positive");
    const int v = params.v();
    const int rows = a.length() * v;
    const int cols = b.length() * v;

    // flattened per-output-entry jacobians, one forward pair per param entry
    const auto jac_all = [&](const Sequence& seq) {
        AttentionParams probe = params;
        std::vector<std::vector<double>> jac(
            static_cast<size_t>(seq.length()) * v);
        const auto probe_block = [&](Matrix& w) {
            for (size_t i = 0; i < w.data.size(); ++i) {
                const double saved = w.data[i];
                w.data[i] = saved + cfg.step;
                const Matrix fp = forward_self(probe, seq);
                w.data[i] = saved - cfg.step;
                const Matrix fm = forward_self(probe, seq);
                w.data[i] = saved;
                for (int j = 0; j < seq.length(); ++j)
                    for (int c = 0; c < v; ++c)
                        jac[static_cast<size_t>(j) * v + c].push_back(
                            (fp(j, c) - fm(j, c)) / (2.0 * cfg.step));
            }
        };
        probe_block(probe.w_v);
        probe_block(probe.w_q);
        probe_block(probe.w_k);
        return jac;
    };

    const auto ja = jac_all(a);
    const auto jb = jac_all(b);
    Matrix out(rows, cols, 0.0);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) {
            double dot = 0.0;
            for (size_t e = 0; e < ja[i].size(); ++e) dot += ja[i][e] * jb[j][e];
            out(i, j) = dot;
        }
    return out;
}

std::vector<int> brute_select(std::span<const double> scores, int m) {
    const int n = static_cast<int>(scores.size());
    require(n <= 20, "brute_select: N too large for exhaustive enumeration");
    require(m >= 1 && m <= n, "brute_select: m out of range");
    std::vector<int> subset(m), best;
    for (int i = 0; i < m; ++i) subset[i] = i;
    double best_obj = -1.0;
    while (true) {
        double obj = 0.0;
        for (int idx : subset) obj += scores[idx] * scores[idx];
        if (obj > best_obj) {  // lexicographic enumeration: first max wins ties
            best_obj = obj;
            best = subset;
        }
        int pos = m - 1;
        while (pos >= 0 && subset[pos] == n - m + pos) --pos;
        if (pos < 0) break;
        ++subset[pos];
        for (int q = pos + 1; q < m; ++q) subset[q] = subset[q - 1] + 1;
    }
    return best;
}

bool VerifyReport::all_pass() const {
    return std::all_of(checks.begin(), checks.end(),
                       [](const CheckResult& c) { return c.pass; });
}

VerifyReport run_verify_suite(std::uint64_t seed, const std::string& corrupt) {
    VerifyReport report;
    RandomSource root(seed);
    const FdConfig fd;

    const auto random_instance = [](RandomSource& rng, int v_max) {
        const int d = 1 + static_cast<int>(rng.next_u64() % 4);
        const int p = 1 + static_cast<int>(rng.next_u64() % 4);
        const int v = 1 + static_cast<int>(rng.next_u64() % v_max);
        const int s = 1 + static_cast<int>(rng.next_u64() % 6);
        AttentionParams params = init_params(d, p, v, rng);
        Matrix feats(s, d);
        for (double& x : feats.data) x = rng.gaussian();
        return std::pair{params, Sequence{std::move(feats)}};
    };

    // jacobians vs central differences, 200 instances each
    {
        RandomSource rng = root.child(11);
        double err_v = 0.0, err_q = 0.0, err_k = 0.0;
        for (int it = 0; it < 200; ++it) {
            auto [params, seq] = random_instance(rng, 1);
            Matrix jv = jac_value(params, seq);
            if (corrupt == "value_jacobian") jv.data[0] += 1e-3;
            err_v = std::max(err_v,
                             max_rel_err(jv, fd_jacobian(params, seq, WeightBlock::Value, 0, fd),
                                         1e-2));
            for (int i = 0; i < params.p(); ++i) {
                Matrix jq = jac_query_col(params, seq, i);
                Matrix jk = jac_key_col(params, seq, i);
                if (corrupt == "query_jacobian") jq.data[0] += 1e-3;
                if (corrupt == "key_jacobian") jk.data[0] += 1e-3;
                err_q = std::max(
                    err_q, max_rel_err(jq, fd_jacobian(params, seq, WeightBlock::Query, i, fd),
                                       1e-2));
                err_k = std::max(
                    err_k, max_rel_err(jk, fd_jacobian(params, seq, WeightBlock::Key, i, fd),
                                       1e-2));
            }
        }
        report.checks.push_back({"value_jacobian", err_v, 1e-6, err_v <= 1e-6});
        report.checks.push_back({"query_jacobian", err_q, 1e-6, err_q <= 1e-6});
        report.checks.push_back({"key_jacobian", err_k, 1e-6, err_k <= 1e-6});
    }

    // chained loss gradient vs central differences, 100 random batches
    {
        RandomSource rng = root.child(12);
        double err = 0.0;
        for (int it = 0; it < 100; ++it) {
            auto [params, seq0] = random_instance(rng, 3);
            const int n = 1 + static_cast<int>(rng.next_u64() % 8);
            std::vector<LabeledSequence> batch;
            for (int b = 0; b < n; ++b) {
                Matrix feats(seq0.length(), params.d());
                for (double& x : feats.data) x = rng.gaussian();
                Matrix target(seq0.length(), params.v());
                for (double& x : target.data) x = rng.gaussian();
                batch.push_back({Sequence{std::move(feats)}, std::move(target)});
            }
            auto [grad, loss] = backward(params, batch);
            (void)loss;
            if (corrupt == "loss_gradient") grad.g_wq.data[0] += 1e-3;
            const FlatGradient ref = fd_loss_grad(params, batch, fd);
            err = std::max({err, max_rel_err(grad.g_wq, ref.g_wq, 1e-2),
                            max_rel_err(grad.g_wk, ref.g_wk, 1e-2),
                            max_rel_err(grad.g_wv, ref.g_wv, 1e-2)});
        }
        report.checks.push_back({"loss_gradient", err, 1e-6, err <= 1e-6});
    }

    // kernel pair vs finite-difference jacobian inner products, 50 instances
    {
        RandomSource rng = root.child(13);
        double err = 0.0;
        for (int it = 0; it < 50; ++it) {
            const int d = 1 + static_cast<int>(rng.next_u64() % 3);
            const int p = 1 + static_cast<int>(rng.next_u64() % 2);
            const int v = 1 + static_cast<int>(rng.next_u64() % 2);
            const int s1 = 1 + static_cast<int>(rng.next_u64() % 3);
            const int s2 = 1 + static_cast<int>(rng.next_u64() % 3);
            AttentionParams params = init_params(d, p, v, rng);
            Matrix fa(s1, d), fb(s2, d);
            for (double& x : fa.data) x = rng.gaussian();
            for (double& x : fb.data) x = rng.gaussian();
            const Sequence a{std::move(fa)}, b{std::move(fb)};
            Matrix analytic = antk_pair(params, a, b).block;
            if (corrupt == "antk_pair") analytic.data[0] += 1e-3;
            err = std::max(err, max_rel_err(analytic, fd_antk_pair(params, a, b, fd), 1e-3));
        }
        report.checks.push_back({"antk_pair", err, 1e-5, err <= 1e-5});
    }

    // greedy top-m equals exhaustive subset argmax, 500 instances
    {
        RandomSource rng = root.child(14);
        double mismatches = 0.0;
        for (int it = 0; it < 500; ++it) {
            const int n = 2 + static_cast<int>(rng.next_u64() % 9);
            const int m = 1 + static_cast<int>(rng.next_u64() % n);
            std::vector<double> scores(n);
            for (double& x : scores) x = std::abs(rng.gaussian());
            if (rng.next_u64() % 4 == 0 && n >= 2) scores[1] = scores[0];  // force ties
            std::vector<int> greedy = select_hard(scores, m);
            if (corrupt == "hard_selection" && m < n) greedy[0] = (greedy[0] + 1) % n;
            if (greedy != brute_select(scores, m)) mismatches += 1.0;
        }
        report.checks.push_back({"hard_selection", mismatches, 0.0, mismatches == 0.0});
    }

    return report;
}

}  // namespace attent::oracle
