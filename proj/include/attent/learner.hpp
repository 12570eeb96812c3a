#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "attent/matrix.hpp"
#include "attent/random.hpp"

namespace attent {

/// One attention head: W^Q and W^K are d x p, W^V is d x v.
struct AttentionParams {
    Matrix w_q;
    Matrix w_k;
    Matrix w_v;

    int d() const { return w_q.rows; }
    int p() const { return w_q.cols; }
    int v() const { return w_v.cols; }

    void validate() const;
};

/// Gaussian init with per-entry standard deviation 1/sqrt(d).
AttentionParams init_params(int d, int p, int v, RandomSource& rng);

std::uint64_t fingerprint(const AttentionParams& params);

/// An S x d feature matrix; row s holds element s's feature vector.
struct Sequence {
    Matrix features;

    int length() const { return features.rows; }
    int dim() const { return features.cols; }
};

/// A sequence paired with its S x v element-level target.
struct LabeledSequence {
    Sequence sequence;
    Matrix target;
};

/// Per-weight-column output Jacobians for one (params, sequence) pair, v = 1:
/// d_wv[0] and each d_wq[i] / d_wk[i] are S x d with entry (j, r) holding the
/// derivative of output j w.r.t. the r-th entry of the probed weight column.
struct JacobianSet {
    std::vector<Matrix> d_wv;
    std::vector<Matrix> d_wq;
    std::vector<Matrix> d_wk;
    std::uint64_t params_fp = 0;
    std::uint64_t sequence_fp = 0;
};

/// Loss gradient laid out like the parameters themselves.
struct FlatGradient {
    Matrix g_wq;
    Matrix g_wk;
    Matrix g_wv;
};

enum class LossKind { SquaredError };

Matrix forward_self(const AttentionParams& params, const Sequence& seq);
Matrix forward_masked(const AttentionParams& params, const Sequence& seq);
Matrix forward_cross(const AttentionParams& params, const Sequence& seq_q,
                     const Sequence& seq_kv);

/// Jacobian of the scalar-per-row output w.r.t. the value weight vector (v=1):
/// the attention matrix times the features.
Matrix jac_value(const AttentionParams& params, const Sequence& seq);

/// Jacobian w.r.t. query weight column i (v=1, 0-based i). Row j is
/// d^{-1/2} * omega_j * S_(j,:) with the importance scalar
/// omega_j = K_(:,i)^T (diag(a_j) - a_j^T a_j) V and a_j the attention row.
Matrix jac_query_col(const AttentionParams& params, const Sequence& seq, int i);

/// Jacobian w.r.t. key weight column i (v=1, 0-based i). The same
/// diag/outer-product bracket as the query case, with the derivative landing
/// on the key rows: row j is d^{-1/2} * Q_(j,i) * sum_l a_j(l)(V_l - a_j V) S_(l,:).
Matrix jac_key_col(const AttentionParams& params, const Sequence& seq, int i);

/// All of the above for one pair, with cache-validity fingerprints.
JacobianSet jacobian_set(const AttentionParams& params, const Sequence& seq);

/// Squared-error loss of a batch: (1/(N*S)) sum_i sum_j 0.5 ||f_j - y_j||^2.
double batch_loss(const AttentionParams& params, std::span<const LabeledSequence> batch,
                  LossKind loss = LossKind::SquaredError);

/// Averaged parameter gradient and loss over a batch, any v >= 1, computed by
/// a cached-softmax reverse pass through the self-attention forward.
std::pair<FlatGradient, double> backward(const AttentionParams& params,
                                         std::span<const LabeledSequence> batch,
                                         LossKind loss = LossKind::SquaredError);

/// theta <- theta - eta * grad.
AttentionParams sgd_step(const AttentionParams& params, const FlatGradient& grad,
                         double eta);

}  // namespace attent
