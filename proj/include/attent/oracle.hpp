#pragma once

#include <span>
#include <string>
#include <vector>

#include "attent/antk.hpp"
#include "attent/learner.hpp"

namespace attent::oracle {

struct FdConfig {
    double step = 1e-5;  // central differences
};

enum class WeightBlock { Value, Query, Key };

/// Central-difference Jacobian of forward_self w.r.t. column `col` of the
/// selected weight block, shaped S x d like the analytic Jacobians (v = 1).
Matrix fd_jacobian(const AttentionParams& params, const Sequence& seq,
                   WeightBlock which, int col, const FdConfig& cfg = {});

/// Central-difference gradient of the averaged batch loss w.r.t. every
/// parameter entry.
FlatGradient fd_loss_grad(const AttentionParams& params,
                          std::span<const LabeledSequence> batch,
                          const FdConfig& cfg = {});

/// Tangent-kernel block computed purely from finite-difference Jacobians of
/// each output entry; shares nothing with the analytic kernel path.
Matrix fd_antk_pair(const AttentionParams& params, const Sequence& a,
                    const Sequence& b, const FdConfig& cfg = {});

/// Exhaustive subset enumeration maximizing the stacked-residual Frobenius
/// objective (equivalently sum of squared scores); lowest-lexicographic
/// tie-break; N capped to keep C(N,m) tractable.
std::vector<int> brute_select(std::span<const double> scores, int m);

struct CheckResult {
    std::string name;
    double max_err = 0.0;
    double tolerance = 0.0;
    bool pass = false;
};

struct VerifyReport {
    std::vector<CheckResult> checks;

    bool all_pass() const;
};

/// The full verification suite at small dims. `corrupt` names a check whose
/// analytic side is deliberately perturbed, to exercise the failure path.
VerifyReport run_verify_suite(std::uint64_t seed = 20240501,
                              const std::string& corrupt = "");

}  // namespace attent::oracle
