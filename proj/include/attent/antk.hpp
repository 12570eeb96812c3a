#pragma once

#include <span>
#include <vector>

#include "attent/learner.hpp"
#include "attent/matrix.hpp"

namespace attent {

/// Maps a kernel row/col index back to (sequence, element, output channel):
/// index = (seq * s + elem) * v + chan.
struct KernelLayout {
    int n_seq = 1;
    int s = 0;
    int v = 0;

    int size() const { return n_seq * s * v; }
};

/// Empirical tangent-kernel block: entry ((i,c),(j,c')) is the inner product
/// of the parameter Jacobians of output (i,c) of one sequence and (j,c') of
/// another, summed over every entry of W^V, W^Q and W^K.
struct KernelMatrix {
    Matrix block;
    KernelLayout row_layout;
    KernelLayout col_layout;
};

KernelMatrix antk_pair(const AttentionParams& params, const Sequence& a,
                       const Sequence& b);

/// All pairwise blocks over a dataset, assembled row-major into one Gram.
KernelMatrix antk_gram(const AttentionParams& params, std::span<const Sequence> data);

/// Frobenius norm of the entry-wise difference.
double kernel_diff(const KernelMatrix& a, const KernelMatrix& b);

enum class ReferenceKind { FinalCheckpoint };

struct Checkpoint {
    int step = 0;
    AttentionParams params;
};

struct KernelTraceEntry {
    int step = 0;
    double diff_to_reference = 0.0;
};

struct KernelTrace {
    std::vector<KernelTraceEntry> checkpoints;
    std::vector<KernelMatrix> grams;  // populated when keep_grams is set
};

/// Gram at every checkpoint plus its Frobenius distance to the reference
/// kernel (the final checkpoint's Gram, the converged empirical kernel).
KernelTrace track_convergence(std::span<const Checkpoint> checkpoints,
                              std::span<const Sequence> probes,
                              ReferenceKind reference = ReferenceKind::FinalCheckpoint,
                              bool keep_grams = false);

/// Sufficient-decrease diagnostic for squared loss (smoothness constant 1):
/// gamma_hat caps the kernel by the largest Gram magnitude, eta_max is the
/// step-size bound 1/(2*gamma_hat), and bound is the guaranteed loss-rate cap
/// -(eta*gamma_hat/2) * (mean per-row loss derivative)^2.
struct LossReductionBound {
    double gamma_hat = 0.0;
    double eta_max = 0.0;
    double bound = 0.0;
};

LossReductionBound loss_reduction_bound(const KernelMatrix& gram,
                                        std::span<const double> row_loss_derivs,
                                        double eta);

}  // namespace attent
