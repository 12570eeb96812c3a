#include "attent/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace attent {

Matrix::Matrix(int r, int c, double fill) : rows(r), cols(c) {
    require(r >= 1 && c >= 1, "Matrix dims must be positive");
    data.assign(static_cast<size_t>(r) * c, fill);
}

bool operator==(const Matrix& a, const Matrix& b) {
    return a.rows == b.rows && a.cols == b.cols && a.data == b.data;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    require(a.cols == b.rows, "matmul: inner dims differ");
    Matrix out(a.rows, b.cols, 0.0);
    // ikj order: each output entry accumulates over k ascending, so the
    // reduction order is fixed regardless of how callers tile the work.
    for (int i = 0; i < a.rows; ++i) {
        const double* arow = &a.data[static_cast<size_t>(i) * a.cols];
        double* orow = &out.data[static_cast<size_t>(i) * b.cols];
        for (int k = 0; k < a.cols; ++k) {
            const double aik = arow[k];
            const double* brow = &b.data[static_cast<size_t>(k) * b.cols];
            for (int j = 0; j < b.cols; ++j) orow[j] += aik * brow[j];
        }
    }
    return out;
}

Matrix transpose(const Matrix& a) {
    Matrix out(a.cols, a.rows);
    for (int i = 0; i < a.rows; ++i)
        for (int j = 0; j < a.cols; ++j) out(j, i) = a(i, j);
    return out;
}

Matrix add(const Matrix& a, const Matrix& b) {
    require(a.same_shape(b), "add: shape mismatch");
    Matrix out = a;
    for (size_t i = 0; i < out.data.size(); ++i) out.data[i] += b.data[i];
    return out;
}

Matrix sub(const Matrix& a, const Matrix& b) {
    require(a.same_shape(b), "sub: shape mismatch");
    Matrix out = a;
    for (size_t i = 0; i < out.data.size(); ++i) out.data[i] -= b.data[i];
    return out;
}

Matrix scale(const Matrix& a, double s) {
    Matrix out = a;
    for (double& x : out.data) x *= s;
    return out;
}

Matrix row_softmax(const Matrix& a) {
    require(a.cols >= 1, "row_softmax: need at least one column");
    Matrix out(a.rows, a.cols);
    for (int i = 0; i < a.rows; ++i) {
        double rowmax = a(i, 0);
        for (int j = 1; j < a.cols; ++j) rowmax = std::max(rowmax, a(i, j));
        require(rowmax > kMaskSentinel / 2,
                "row_softmax: row " + std::to_string(i) + " is fully masked");
        double denom = 0.0;
        for (int j = 0; j < a.cols; ++j) {
            const double e = std::exp(a(i, j) - rowmax);
            out(i, j) = e;
            denom += e;
        }
        for (int j = 0; j < a.cols; ++j) out(i, j) /= denom;
    }
    return out;
}

double frobenius_norm(const Matrix& a) {
    double acc = 0.0;
    for (double x : a.data) acc += x * x;
    return std::sqrt(acc);
}

double max_abs(const Matrix& a) {
    double m = 0.0;
    for (double x : a.data) m = std::max(m, std::abs(x));
    return m;
}

bool all_finite(const Matrix& a) {
    for (double x : a.data)
        if (!std::isfinite(x)) return false;
    return true;
}

std::uint64_t fingerprint(const Matrix& a) {
    std::uint64_t h = 1469598103934665603ull;
    auto mix = [&h](std::uint64_t v) {
        for (int b = 0; b < 8; ++b) {
            h ^= (v >> (8 * b)) & 0xff;
            h *= 1099511628211ull;
        }
    };
    mix(static_cast<std::uint64_t>(a.rows));
    mix(static_cast<std::uint64_t>(a.cols));
    for (double x : a.data) {
        std::uint64_t bits;
        std::memcpy(&bits, &x, sizeof bits);
        mix(bits);
    }
    return h;
}

std::vector<double> sym_eigenvalues(const Matrix& a) {
    require(a.rows == a.cols, "sym_eigenvalues: matrix not square");
    const int n = a.rows;
    Matrix m = a;
    // symmetrize first; inputs are symmetric up to rounding
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            const double v = 0.5 * (m(i, j) + m(j, i));
            m(i, j) = v;
            m(j, i) = v;
        }
    const int max_sweeps = 100;
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double off = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) off += m(i, j) * m(i, j);
        if (off < 1e-24) break;
        for (int p = 0; p < n - 1; ++p) {
            for (int q = p + 1; q < n; ++q) {
                const double apq = m(p, q);
                if (std::abs(apq) < 1e-300) continue;
                const double theta = (m(q, q) - m(p, p)) / (2.0 * apq);
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (int k = 0; k < n; ++k) {
                    const double mkp = m(k, p), mkq = m(k, q);
                    m(k, p) = c * mkp - s * mkq;
                    m(k, q) = s * mkp + c * mkq;
                }
                for (int k = 0; k < n; ++k) {
                    const double mpk = m(p, k), mqk = m(q, k);
                    m(p, k) = c * mpk - s * mqk;
                    m(q, k) = s * mpk + c * mqk;
                }
            }
        }
    }
    std::vector<double> eig(n);
    for (int i = 0; i < n; ++i) eig[i] = m(i, i);
    std::sort(eig.begin(), eig.end());
    return eig;
}

}  // namespace attent
