#include <doctest.h>

#include <cmath>

#include "attent/matrix.hpp"
#include "attent/random.hpp"

using namespace attent;

namespace {

Matrix random_matrix(int r, int c, RandomSource& rng) {
    Matrix m(r, c);
    for (double& x : m.data) x = rng.gaussian();
    return m;
}

}  // namespace

TEST_CASE("matmul identity and basis columns") {
    Matrix a(2, 2);
    a(0, 0) = 1; a(0, 1) = 2; a(1, 0) = 3; a(1, 1) = 4;
    Matrix eye(2, 2);
    eye(0, 0) = eye(1, 1) = 1.0;
    CHECK(matmul(eye, a) == a);

    Matrix e0(2, 1);
    e0(0, 0) = 1.0;
    const Matrix col = matmul(a, e0);
    CHECK(col(0, 0) == 1.0);
    CHECK(col(1, 0) == 3.0);
}

TEST_CASE("matmul matches triple-loop reference") {
    RandomSource rng(1);
    const Matrix a = random_matrix(3, 4, rng);
    const Matrix b = random_matrix(4, 2, rng);
    const Matrix got = matmul(a, b);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 2; ++j) {
            double ref = 0.0;
            for (int k = 0; k < 4; ++k) ref += a(i, k) * b(k, j);
            CHECK(got(i, j) == doctest::Approx(ref).epsilon(1e-14));
        }
}

TEST_CASE("matmul dimension mismatch is rejected") {
    CHECK_THROWS_AS(matmul(Matrix(2, 3), Matrix(2, 3)), contract_error);
}

TEST_CASE("matmul associativity on random 8x8 chains") {
    RandomSource rng(2);
    for (int it = 0; it < 20; ++it) {
        const Matrix a = random_matrix(8, 8, rng);
        const Matrix b = random_matrix(8, 8, rng);
        const Matrix c = random_matrix(8, 8, rng);
        const Matrix lhs = matmul(matmul(a, b), c);
        const Matrix rhs = matmul(a, matmul(b, c));
        for (size_t i = 0; i < lhs.data.size(); ++i) {
            const double scale = std::max({std::abs(lhs.data[i]), std::abs(rhs.data[i]), 1.0});
            CHECK(std::abs(lhs.data[i] - rhs.data[i]) / scale < 1e-9);
        }
    }
}

TEST_CASE("row_softmax uniform on equal logits") {
    const Matrix out = row_softmax(Matrix(1, 3, 0.0));
    for (int j = 0; j < 3; ++j) CHECK(out(0, j) == doctest::Approx(1.0 / 3).epsilon(1e-15));
}

TEST_CASE("row_softmax shift invariance and two-logit value") {
    // c large enough that naive exp would overflow, small enough that the
    // input shift itself does not quantize the logit gap
    for (const double c : {-750.0, -7.5, 0.0, 3.25, 800.0}) {
        Matrix a(1, 2);
        a(0, 0) = c;
        a(0, 1) = c + std::log(3.0);
        const Matrix out = row_softmax(a);
        CHECK(out(0, 0) == doctest::Approx(0.25).epsilon(1e-12));
        CHECK(out(0, 1) == doctest::Approx(0.75).epsilon(1e-12));
    }

    RandomSource rng(8);
    for (int it = 0; it < 20; ++it) {
        Matrix a(2, 5);
        for (double& x : a.data) x = 4.0 * rng.gaussian();
        Matrix shifted = a;
        const double c = 10.0 * rng.gaussian();
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 5; ++j) shifted(i, j) += c;
        const Matrix sa = row_softmax(a);
        const Matrix sb = row_softmax(shifted);
        for (size_t k = 0; k < sa.data.size(); ++k)
            CHECK(std::abs(sa.data[k] - sb.data[k]) < 1e-12);
    }
}

TEST_CASE("row_softmax rows sum to one and match long-double reference") {
    RandomSource rng(3);
    for (int it = 0; it < 50; ++it) {
        Matrix a(1, 4);
        for (double& x : a.data) x = 6.0 * rng.gaussian();
        const Matrix out = row_softmax(a);
        double sum = 0.0;
        for (int j = 0; j < 4; ++j) sum += out(0, j);
        CHECK(std::abs(sum - 1.0) < 1e-12);

        long double denom = 0.0L;
        for (int j = 0; j < 4; ++j) denom += expl(static_cast<long double>(a(0, j)));
        for (int j = 0; j < 4; ++j) {
            const long double ref = expl(static_cast<long double>(a(0, j))) / denom;
            CHECK(std::abs(out(0, j) - static_cast<double>(ref)) < 1e-14);
        }
    }
}

TEST_CASE("row_softmax rejects a fully masked row") {
    Matrix a(1, 2, kMaskSentinel);
    CHECK_THROWS_AS(row_softmax(a), contract_error);
}

TEST_CASE("masked entries vanish exactly") {
    Matrix a(1, 3);
    a(0, 0) = 0.7;
    a(0, 1) = -0.2;
    a(0, 2) = 1.4 + kMaskSentinel;
    const Matrix out = row_softmax(a);
    CHECK(out(0, 2) == 0.0);
    CHECK(out(0, 0) + out(0, 1) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("frobenius_norm basics and accumulation oracle") {
    CHECK(frobenius_norm(Matrix(2, 2, 0.0)) == 0.0);
    Matrix t(1, 2);
    t(0, 0) = 3;
    t(0, 1) = 4;
    CHECK(frobenius_norm(t) == doctest::Approx(5.0).epsilon(1e-15));

    RandomSource rng(4);
    const Matrix m = random_matrix(5, 3, rng);
    double acc = 0.0;
    for (double x : m.data) acc += x * x;
    CHECK(frobenius_norm(m) == doctest::Approx(std::sqrt(acc)).epsilon(1e-14));
}

TEST_CASE("sym_eigenvalues on a known 2x2") {
    Matrix m(2, 2);
    m(0, 0) = 2; m(0, 1) = 1; m(1, 0) = 1; m(1, 1) = 2;
    const auto eig = sym_eigenvalues(m);
    CHECK(eig[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(eig[1] == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("fingerprint distinguishes matrices") {
    Matrix a(2, 2, 1.0), b(2, 2, 1.0);
    CHECK(fingerprint(a) == fingerprint(b));
    b(1, 1) = 1.0 + 1e-16;
    CHECK(fingerprint(a) == fingerprint(b));  // same doubles, same bits
    b(1, 1) = 2.0;
    CHECK(fingerprint(a) != fingerprint(b));
}
