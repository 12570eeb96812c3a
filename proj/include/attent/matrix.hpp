#pragma once

#include <cstdint>
#include <vector>

#include "attent/errors.hpp"

namespace attent {

/// Finite logits masked with this value vanish under row_softmax while all
/// arithmetic stays finite (exp underflows to exactly 0 at double precision).
inline constexpr double kMaskSentinel = -1e30;

/// Dense row-major matrix of doubles. Values are immutable by convention once
/// an operation has produced them; all mutation happens before sharing.
struct Matrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(int r, int c, double fill = 0.0);

    double& operator()(int r, int c) { return data[static_cast<size_t>(r) * cols + c]; }
    double operator()(int r, int c) const { return data[static_cast<size_t>(r) * cols + c]; }

    bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }
};

bool operator==(const Matrix& a, const Matrix& b);

Matrix matmul(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& a);
Matrix add(const Matrix& a, const Matrix& b);
Matrix sub(const Matrix& a, const Matrix& b);
Matrix scale(const Matrix& a, double s);

/// Numerically stable softmax applied independently to each row.
/// A row whose every entry is at or below the mask sentinel is rejected.
Matrix row_softmax(const Matrix& a);

double frobenius_norm(const Matrix& a);
double max_abs(const Matrix& a);
bool all_finite(const Matrix& a);

/// FNV-1a over dims and entry bit patterns; used as a cache key.
std::uint64_t fingerprint(const Matrix& a);

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
std::vector<double> sym_eigenvalues(const Matrix& a);

}  // namespace attent
