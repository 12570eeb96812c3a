#include "attent/antk.hpp"

#include <cmath>
#include <limits>

namespace attent {

namespace {

// Per-sequence pieces of the parameter Jacobian of every output entry (j,c):
//   w.r.t. W^V_(:,c):   va_j            (row j of attn * S, independent of c)
//   w.r.t. W^Q_(:,m):   d^{-1/2} phi[j,c][m] * S_(j,:)
//   w.r.t. W^K_(:,m):   d^{-1/2} Q_(j,m)    * psi[j,c]
// with phi[j,c][m] = K_(:,m)^T b_jc, psi[j,c] = S^T b_jc and
// b_jc(l) = a_(j,l) (V_(l,c) - a_j V_(:,c)).
struct TangentFeatures {
    int s = 0, d = 0, p = 0, v = 0;
    Matrix features;  // S x d
    Matrix q;         // S x p
    Matrix va;        // S x d
    std::vector<double> phi;  // [j][c][m] flattened
    std::vector<double> psi;  // [j][c][r] flattened

    double phi_at(int j, int c, int m) const { return phi[(static_cast<size_t>(j) * v + c) * p + m]; }
    double psi_at(int j, int c, int r) const { return psi[(static_cast<size_t>(j) * v + c) * d + r]; }
};

TangentFeatures tangent_features(const AttentionParams& params, const Sequence& seq) {
    TangentFeatures tf;
    tf.s = seq.length();
    tf.d = params.d();
    tf.p = params.p();
    tf.v = params.v();
    tf.features = seq.features;
    tf.q = matmul(seq.features, params.w_q);
    const Matrix k = matmul(seq.features, params.w_k);
    const Matrix val = matmul(seq.features, params.w_v);
    Matrix z = matmul(tf.q, transpose(k));
    const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(tf.d));
    for (double& x : z.data) x *= inv_sqrt_d;
    const Matrix attn = row_softmax(z);
    tf.va = matmul(attn, seq.features);
    tf.phi.assign(static_cast<size_t>(tf.s) * tf.v * tf.p, 0.0);
    tf.psi.assign(static_cast<size_t>(tf.s) * tf.v * tf.d, 0.0);
    std::vector<double> b(tf.s);
    for (int j = 0; j < tf.s; ++j) {
        for (int c = 0; c < tf.v; ++c) {
            double mix = 0.0;
            for (int l = 0; l < tf.s; ++l) mix += attn(j, l) * val(l, c);
            for (int l = 0; l < tf.s; ++l) b[l] = attn(j, l) * (val(l, c) - mix);
            double* phi_row = &tf.phi[(static_cast<size_t>(j) * tf.v + c) * tf.p];
            for (int l = 0; l < tf.s; ++l)
                for (int m = 0; m < tf.p; ++m) phi_row[m] += k(l, m) * b[l];
            double* psi_row = &tf.psi[(static_cast<size_t>(j) * tf.v + c) * tf.d];
            for (int l = 0; l < tf.s; ++l)
                for (int r = 0; r < tf.d; ++r) psi_row[r] += seq.features(l, r) * b[l];
        }
    }
    return tf;
}

void fill_pair_block(const TangentFeatures& a, const TangentFeatures& b, Matrix& out,
                     int row0, int col0) {
    const int d = a.d, p = a.p, v = a.v;
    const double inv_d = 1.0 / static_cast<double>(d);
    for (int i = 0; i < a.s; ++i) {
        for (int j = 0; j < b.s; ++j) {
            double feat_dot = 0.0;  // S_(i,:) . S'_(j,:)
            for (int r = 0; r < d; ++r) feat_dot += a.features(i, r) * b.features(j, r);
            double q_dot = 0.0;  // Q_(i,:) . Q'_(j,:)
            for (int m = 0; m < p; ++m) q_dot += a.q(i, m) * b.q(j, m);
            double va_dot = 0.0;
            for (int r = 0; r < d; ++r) va_dot += a.va(i, r) * b.va(j, r);
            for (int c = 0; c < v; ++c) {
                for (int c2 = 0; c2 < v; ++c2) {
                    double phi_dot = 0.0;
                    for (int m = 0; m < p; ++m) phi_dot += a.phi_at(i, c, m) * b.phi_at(j, c2, m);
                    double psi_dot = 0.0;
                    for (int r = 0; r < d; ++r) psi_dot += a.psi_at(i, c, r) * b.psi_at(j, c2, r);
                    double entry = inv_d * (feat_dot * phi_dot + q_dot * psi_dot);
                    if (c == c2) entry += va_dot;
                    out(row0 + i * v + c, col0 + j * v + c2) = entry;
                }
            }
        }
    }
}

}  // namespace

KernelMatrix antk_pair(const AttentionParams& params, const Sequence& a,
                       const Sequence& b) {
    require(a.dim() == params.d() && b.dim() == params.d(),
            "antk_pair: feature width does not match params d");
    const TangentFeatures ta = tangent_features(params, a);
    const TangentFeatures tb = tangent_features(params, b);
    KernelMatrix km;
    km.row_layout = {1, a.length(), params.v()};
    km.col_layout = {1, b.length(), params.v()};
    km.block = Matrix(km.row_layout.size(), km.col_layout.size(), 0.0);
    fill_pair_block(ta, tb, km.block, 0, 0);
    return km;
}

KernelMatrix antk_gram(const AttentionParams& params, std::span<const Sequence> data) {
    require(!data.empty(), "antk_gram: empty dataset");
    const int s = data.front().length();
    for (const Sequence& seq : data)
        require(seq.length() == s, "antk_gram: sequences differ in length");

    std::vector<TangentFeatures> feats;
    feats.reserve(data.size());
    for (const Sequence& seq : data) feats.push_back(tangent_features(params, seq));

    KernelMatrix km;
    const int n = static_cast<int>(data.size());
    km.row_layout = {n, s, params.v()};
    km.col_layout = km.row_layout;
    const int sv = s * params.v();
    km.block = Matrix(km.row_layout.size(), km.col_layout.size(), 0.0);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            fill_pair_block(feats[i], feats[j], km.block, i * sv, j * sv);
    return km;
}

double kernel_diff(const KernelMatrix& a, const KernelMatrix& b) {
    require(a.block.same_shape(b.block), "kernel_diff: shape mismatch");
    return frobenius_norm(sub(a.block, b.block));
}

KernelTrace track_convergence(std::span<const Checkpoint> checkpoints,
                              std::span<const Sequence> probes, ReferenceKind reference,
                              bool keep_grams) {
    require(checkpoints.size() >= 2, "track_convergence: need at least 2 checkpoints");
    require(!probes.empty(), "track_convergence: no probe sequences");
    (void)reference;  // FinalCheckpoint is the only reference kind

    std::vector<KernelMatrix> grams;
    grams.reserve(checkpoints.size());
    for (const Checkpoint& ck : checkpoints) grams.push_back(antk_gram(ck.params, probes));

    KernelTrace trace;
    const KernelMatrix& ref = grams.back();
    int last_step = std::numeric_limits<int>::min();
    for (size_t i = 0; i < checkpoints.size(); ++i) {
        require(checkpoints[i].step > last_step,
                "track_convergence: checkpoint steps must be strictly increasing");
        last_step = checkpoints[i].step;
        trace.checkpoints.push_back({checkpoints[i].step, kernel_diff(grams[i], ref)});
    }
    if (keep_grams) trace.grams = std::move(grams);
    return trace;
}

LossReductionBound loss_reduction_bound(const KernelMatrix& gram,
                                        std::span<const double> row_loss_derivs,
                                        double eta) {
    LossReductionBound out;
    out.gamma_hat = max_abs(gram.block);
    out.eta_max = out.gamma_hat > 0.0 ? 1.0 / (2.0 * out.gamma_hat)
                                      : std::numeric_limits<double>::infinity();
    double mean = 0.0;
    for (double g : row_loss_derivs) mean += g;
    if (!row_loss_derivs.empty()) mean /= static_cast<double>(row_loss_derivs.size());
    out.bound = -(eta * out.gamma_hat / 2.0) * mean * mean;
    return out;
}

}  // namespace attent
