#include "attent/learner.hpp"

#include <cmath>

namespace attent {

namespace {

Matrix scaled_logits(const Matrix& q, const Matrix& k, int d) {
    Matrix z = matmul(q, transpose(k));
    const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));
    for (double& x : z.data) x *= inv_sqrt_d;
    return z;
}

void check_dims(const AttentionParams& params, const Sequence& seq, const char* op) {
    params.validate();
    require(seq.length() >= 1, std::string(op) + ": empty sequence");
    require(seq.dim() == params.d(),
            std::string(op) + ": feature width does not match params d");
    require(all_finite(seq.features), std::string(op) + ": non-finite features");
}

}  // namespace

void AttentionParams::validate() const {
    require(w_q.rows >= 1 && w_q.cols >= 1, "params: W^Q has empty shape");
    require(w_k.rows == w_q.rows && w_k.cols == w_q.cols,
            "params: W^K shape differs from W^Q");
    require(w_v.rows == w_q.rows && w_v.cols >= 1, "params: W^V row count differs");
    require(all_finite(w_q) && all_finite(w_k) && all_finite(w_v),
            "params: non-finite weights");
}

AttentionParams init_params(int d, int p, int v, RandomSource& rng) {
    require(d >= 1 && p >= 1 && v >= 1, "init_params: dims must be positive");
    const double sd = 1.0 / std::sqrt(static_cast<double>(d));
    AttentionParams params{Matrix(d, p), Matrix(d, p), Matrix(d, v)};
    for (double& x : params.w_q.data) x = sd * rng.gaussian();
    for (double& x : params.w_k.data) x = sd * rng.gaussian();
    for (double& x : params.w_v.data) x = sd * rng.gaussian();
    return params;
}

std::uint64_t fingerprint(const AttentionParams& params) {
    return fingerprint(params.w_q) ^ (fingerprint(params.w_k) * 0x9e3779b97f4a7c15ull) ^
           (fingerprint(params.w_v) * 0xbf58476d1ce4e5b9ull);
}

namespace {

Matrix checked_output(Matrix out, const char* op) {
    require(all_finite(out), std::string(op) + ": non-finite output");
    return out;
}

}  // namespace

Matrix forward_self(const AttentionParams& params, const Sequence& seq) {
    check_dims(params, seq, "forward_self");
    const Matrix q = matmul(seq.features, params.w_q);
    const Matrix k = matmul(seq.features, params.w_k);
    const Matrix v = matmul(seq.features, params.w_v);
    return checked_output(matmul(row_softmax(scaled_logits(q, k, params.d())), v),
                          "forward_self");
}

Matrix forward_masked(const AttentionParams& params, const Sequence& seq) {
    check_dims(params, seq, "forward_masked");
    const Matrix q = matmul(seq.features, params.w_q);
    const Matrix k = matmul(seq.features, params.w_k);
    const Matrix v = matmul(seq.features, params.w_v);
    Matrix z = scaled_logits(q, k, params.d());
    for (int i = 0; i < z.rows; ++i)
        for (int j = i + 1; j < z.cols; ++j) z(i, j) += kMaskSentinel;
    return checked_output(matmul(row_softmax(z), v), "forward_masked");
}

Matrix forward_cross(const AttentionParams& params, const Sequence& seq_q,
                     const Sequence& seq_kv) {
    check_dims(params, seq_q, "forward_cross");
    check_dims(params, seq_kv, "forward_cross");
    const Matrix q = matmul(seq_q.features, params.w_q);
    const Matrix k = matmul(seq_kv.features, params.w_k);
    const Matrix v = matmul(seq_kv.features, params.w_v);
    return checked_output(matmul(row_softmax(scaled_logits(q, k, params.d())), v),
                          "forward_cross");
}

Matrix jac_value(const AttentionParams& params, const Sequence& seq) {
    check_dims(params, seq, "jac_value");
    require(params.v() == 1, "jac_value: only the v=1 case has this closed form");
    const Matrix q = matmul(seq.features, params.w_q);
    const Matrix k = matmul(seq.features, params.w_k);
    return matmul(row_softmax(scaled_logits(q, k, params.d())), seq.features);
}

Matrix jac_query_col(const AttentionParams& params, const Sequence& seq, int i) {
    check_dims(params, seq, "jac_query_col");
    require(params.v() == 1, "jac_query_col: only the v=1 case has this closed form");
    require(i >= 0 && i < params.p(), "jac_query_col: column index out of range");
    const int s_len = seq.length();
    const Matrix q = matmul(seq.features, params.w_q);
    const Matrix k = matmul(seq.features, params.w_k);
    const Matrix val = matmul(seq.features, params.w_v);
    const Matrix attn = row_softmax(scaled_logits(q, k, params.d()));
    const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(params.d()));

    Matrix out(s_len, params.d(), 0.0);
    for (int j = 0; j < s_len; ++j) {
        double mix = 0.0;  // a_j . V
        for (int l = 0; l < s_len; ++l) mix += attn(j, l) * val(l, 0);
        double omega = 0.0;  // K_(:,i)^T (diag(a_j) - a_j^T a_j) V
        for (int l = 0; l < s_len; ++l)
            omega += k(l, i) * attn(j, l) * (val(l, 0) - mix);
        for (int r = 0; r < params.d(); ++r)
            out(j, r) = inv_sqrt_d * omega * seq.features(j, r);
    }
    return out;
}

Matrix jac_key_col(const AttentionParams& params, const Sequence& seq, int i) {
    check_dims(params, seq, "jac_key_col");
    require(params.v() == 1, "jac_key_col: only the v=1 case has this closed form");
    require(i >= 0 && i < params.p(), "jac_key_col: column index out of range");
    const int s_len = seq.length();
    const Matrix q = matmul(seq.features, params.w_q);
    const Matrix k = matmul(seq.features, params.w_k);
    const Matrix val = matmul(seq.features, params.w_v);
    const Matrix attn = row_softmax(scaled_logits(q, k, params.d()));
    const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(params.d()));

    Matrix out(s_len, params.d(), 0.0);
    for (int j = 0; j < s_len; ++j) {
        double mix = 0.0;
        for (int l = 0; l < s_len; ++l) mix += attn(j, l) * val(l, 0);
        // row j collects every key row, weighted by the same bracket that
        // yields omega_j in the query case
        for (int l = 0; l < s_len; ++l) {
            const double w = attn(j, l) * (val(l, 0) - mix);
            for (int r = 0; r < params.d(); ++r)
                out(j, r) += w * seq.features(l, r);
        }
        const double lead = inv_sqrt_d * q(j, i);
        for (int r = 0; r < params.d(); ++r) out(j, r) *= lead;
    }
    return out;
}

JacobianSet jacobian_set(const AttentionParams& params, const Sequence& seq) {
    JacobianSet set;
    set.d_wv.push_back(jac_value(params, seq));
    for (int i = 0; i < params.p(); ++i) {
        set.d_wq.push_back(jac_query_col(params, seq, i));
        set.d_wk.push_back(jac_key_col(params, seq, i));
    }
    set.params_fp = fingerprint(params);
    set.sequence_fp = fingerprint(seq.features);
    return set;
}

double batch_loss(const AttentionParams& params, std::span<const LabeledSequence> batch,
                  LossKind loss) {
    require(!batch.empty(), "batch_loss: empty batch");
    require(loss == LossKind::SquaredError, "batch_loss: unknown loss");
    double acc = 0.0;
    long rows = 0;
    for (const LabeledSequence& item : batch) {
        const Matrix out = forward_self(params, item.sequence);
        require(out.same_shape(item.target), "batch_loss: target shape mismatch");
        for (size_t n = 0; n < out.data.size(); ++n) {
            const double r = out.data[n] - item.target.data[n];
            acc += 0.5 * r * r;
        }
        rows += item.sequence.length();
    }
    return acc / static_cast<double>(rows);
}

std::pair<FlatGradient, double> backward(const AttentionParams& params,
                                         std::span<const LabeledSequence> batch,
                                         LossKind loss) {
    require(!batch.empty(), "backward: empty batch");
    require(loss == LossKind::SquaredError, "backward: unknown loss");
    params.validate();
    const int d = params.d(), p = params.p(), v = params.v();
    const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));

    FlatGradient grad{Matrix(d, p, 0.0), Matrix(d, p, 0.0), Matrix(d, v, 0.0)};
    double loss_acc = 0.0;
    long rows = 0;
    for (const LabeledSequence& item : batch) rows += item.sequence.length();
    const double inv_rows = 1.0 / static_cast<double>(rows);

    for (const LabeledSequence& item : batch) {
        const Sequence& seq = item.sequence;
        check_dims(params, seq, "backward");
        require(item.target.rows == seq.length() && item.target.cols == v,
                "backward: target shape mismatch");
        const int s_len = seq.length();
        const Matrix q = matmul(seq.features, params.w_q);
        const Matrix k = matmul(seq.features, params.w_k);
        const Matrix val = matmul(seq.features, params.w_v);
        const Matrix attn = row_softmax(scaled_logits(q, k, d));
        const Matrix out = matmul(attn, val);

        // dL/df, already carrying the 1/(N*S) averaging
        Matrix gout(s_len, v);
        for (size_t n = 0; n < out.data.size(); ++n) {
            const double r = out.data[n] - item.target.data[n];
            loss_acc += 0.5 * r * r;
            gout.data[n] = inv_rows * r;
        }

        // value path: dL/dW^V = S^T A^T G
        const Matrix gval = matmul(transpose(attn), gout);
        const Matrix gv = matmul(transpose(seq.features), gval);
        for (size_t n = 0; n < grad.g_wv.data.size(); ++n) grad.g_wv.data[n] += gv.data[n];

        // softmax path: dZ_(j,l) = a_(j,l) (dA_(j,l) - sum_s a_(j,s) dA_(j,s))
        const Matrix dattn = matmul(gout, transpose(val));
        Matrix dlogits(s_len, s_len);
        for (int j = 0; j < s_len; ++j) {
            double dot = 0.0;
            for (int l = 0; l < s_len; ++l) dot += attn(j, l) * dattn(j, l);
            for (int l = 0; l < s_len; ++l)
                dlogits(j, l) = attn(j, l) * (dattn(j, l) - dot);
        }
        const Matrix dq = scale(matmul(dlogits, k), inv_sqrt_d);
        const Matrix dk = scale(matmul(transpose(dlogits), q), inv_sqrt_d);
        const Matrix gq = matmul(transpose(seq.features), dq);
        const Matrix gk = matmul(transpose(seq.features), dk);
        for (size_t n = 0; n < grad.g_wq.data.size(); ++n) grad.g_wq.data[n] += gq.data[n];
        for (size_t n = 0; n < grad.g_wk.data.size(); ++n) grad.g_wk.data[n] += gk.data[n];
    }
    return {std::move(grad), loss_acc * inv_rows};
}

AttentionParams sgd_step(const AttentionParams& params, const FlatGradient& grad,
                         double eta) {
    require(eta > 0.0, "sgd_step: eta must be positive");
    require(params.w_q.same_shape(grad.g_wq) && params.w_k.same_shape(grad.g_wk) &&
                params.w_v.same_shape(grad.g_wv),
            "sgd_step: gradient shape mismatch");
    AttentionParams next = params;
    for (size_t n = 0; n < next.w_q.data.size(); ++n) next.w_q.data[n] -= eta * grad.g_wq.data[n];
    for (size_t n = 0; n < next.w_k.data.size(); ++n) next.w_k.data[n] -= eta * grad.g_wk.data[n];
    for (size_t n = 0; n < next.w_v.data.size(); ++n) next.w_v.data[n] -= eta * grad.g_wv.data[n];
    return next;
}

}  // namespace attent
