#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <complex>

#include "daeops/linalg.hpp"
#include "daeops/util.hpp"
#include "support/jacobi_svd.hpp"

using namespace daeops;
using linalg::DenseMatrix;
using linalg::Vec;

namespace {

DenseMatrix random_matrix(std::size_t n, util::Rng& rng, double scale = 1.0) {
    DenseMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) m(i, j) = scale * rng.uniform(-1.0, 1.0);
    return m;
}

void check_multiset_close(std::vector<std::complex<double>> a,
                          std::vector<std::complex<double>> b, double tol) {
    REQUIRE(a.size() == b.size());
    auto cmp = [](const std::complex<double>& x, const std::complex<double>& y) {
        if (x.real() != y.real()) return x.real() < y.real();
        return x.imag() < y.imag();
    };
    std::sort(a.begin(), a.end(), cmp);
    std::sort(b.begin(), b.end(), cmp);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(std::abs(a[i] - b[i]) <= tol);
    }
}

}  // namespace

TEST_CASE("lu: identity 3x3 has unit pivots and identity permutation") {
    auto lu = linalg::lu_factor(DenseMatrix::identity(3));
    CHECK(lu.determinant() == 1.0);
    for (std::size_t i = 0; i < 3; ++i) CHECK(lu.permutation()[i] == i);
    Vec x = lu.solve(Vec{1.0, 2.0, 3.0});
    CHECK(x[0] == 1.0);
    CHECK(x[1] == 2.0);
    CHECK(x[2] == 3.0);
}

TEST_CASE("lu: row swap pivoting on [[0,1],[1,0]]") {
    DenseMatrix m(2, 2);
    m(0, 1) = 1.0;
    m(1, 0) = 1.0;
    auto lu = linalg::lu_factor(m);
    CHECK(lu.permutation()[0] == 1);
    Vec x = lu.solve(Vec{1.0, 2.0});
    CHECK(x[0] == 2.0);
    CHECK(x[1] == 1.0);
}

TEST_CASE("lu: 2x2 solve matches closed-form inverse") {
    // shape of the Robertson extended Jacobian at y1 = 0.9 (see newton tests)
    const double a = -1.0e4 * 0.0999 - 2.0 * 3.0e7 * 1e-5, b = -1.0e4 * 1e-5;
    const double c = -1.0, d = -1.0;
    DenseMatrix m = DenseMatrix::from_rows({{a, b}, {c, d}});
    auto lu = linalg::lu_factor(m);
    const double det = a * d - b * c;
    Vec rhs = {0.3, -0.7};
    Vec x = lu.solve(rhs);
    Vec x_exact = {(d * rhs[0] - b * rhs[1]) / det, (-c * rhs[0] + a * rhs[1]) / det};
    CHECK(std::abs(x[0] - x_exact[0]) <= 1e-12 * std::abs(x_exact[0]));
    CHECK(std::abs(x[1] - x_exact[1]) <= 1e-12 * std::abs(x_exact[1]));
    CHECK(std::abs(lu.determinant() - det) <= 1e-12 * std::abs(det));
}

TEST_CASE("lu: singular matrix reports the failing pivot") {
    DenseMatrix m = DenseMatrix::from_rows({{1.0, 2.0}, {2.0, 4.0}});
    CHECK_THROWS_AS((void)linalg::lu_factor(m), linalg::SingularMatrix);
}

TEST_CASE("lu: solve residual property on seeded well-conditioned systems") {
    util::Rng rng(1234);
    for (int rep = 0; rep < 40; ++rep) {
        const std::size_t n = 1 + rng.next_u64() % 12;
        DenseMatrix m = random_matrix(n, rng);
        for (std::size_t i = 0; i < n; ++i) m(i, i) += 3.0;  // keep conditioning mild
        Vec b(n);
        for (auto& v : b) v = rng.uniform(-2.0, 2.0);
        auto lu = linalg::lu_factor(m);
        Vec x = lu.solve(b);
        Vec r = m * x;
        for (std::size_t i = 0; i < n; ++i) r[i] -= b[i];
        const double bound =
            1e-10 * (m.frobenius_norm() * linalg::norm2(x) + linalg::norm2(b));
        CHECK(linalg::norm2(r) <= bound);

        // transpose solve
        Vec xt = lu.solve_transpose(b);
        Vec rt = m.transposed() * xt;
        for (std::size_t i = 0; i < n; ++i) rt[i] -= b[i];
        CHECK(linalg::norm2(rt) <= bound);
    }
}

TEST_CASE("lu: inverse columns reconstruct identity for well-conditioned input") {
    util::Rng rng(77);
    DenseMatrix m = random_matrix(6, rng);
    for (std::size_t i = 0; i < 6; ++i) m(i, i) += 4.0;
    auto lu = linalg::lu_factor(m);
    DenseMatrix inv = lu.solve(DenseMatrix::identity(6));
    DenseMatrix prod = m * inv;
    DenseMatrix err = prod - DenseMatrix::identity(6);
    CHECK(err.max_abs() <= 1e-12);
}

TEST_CASE("det: 2x2 equals ad-bc") {
    util::Rng rng(5);
    for (int rep = 0; rep < 25; ++rep) {
        DenseMatrix m = random_matrix(2, rng, 3.0);
        const double ref = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
        if (std::abs(ref) < 1e-3) continue;
        CHECK(std::abs(linalg::lu_factor(m).determinant() - ref) <=
              1e-12 * std::abs(ref));
    }
}

TEST_CASE("eigenvalues: diagonal and rotation cases") {
    DenseMatrix d = DenseMatrix::from_rows({{-1.0, 0.0}, {0.0, -2.0}});
    check_multiset_close(linalg::eigenvalues(d), {{-1.0, 0.0}, {-2.0, 0.0}}, 1e-12);

    DenseMatrix rot = DenseMatrix::from_rows({{0.0, 1.0}, {-1.0, 0.0}});
    check_multiset_close(linalg::eigenvalues(rot), {{0.0, 1.0}, {0.0, -1.0}}, 1e-12);
}

TEST_CASE("eigenvalues: companion matrix of x^2+3x+2 gives {-1,-2}") {
    DenseMatrix c = DenseMatrix::from_rows({{0.0, -2.0}, {1.0, -3.0}});
    check_multiset_close(linalg::eigenvalues(c), {{-1.0, 0.0}, {-2.0, 0.0}}, 1e-10);
}

TEST_CASE("eigenvalues: companion matrices of seeded polynomials hit their roots") {
    util::Rng rng(99);
    for (int rep = 0; rep < 20; ++rep) {
        // build a polynomial from known roots, some complex pairs
        std::vector<std::complex<double>> roots;
        const int n_real = 1 + int(rng.next_u64() % 3);
        const int n_pairs = int(rng.next_u64() % 2);
        for (int i = 0; i < n_real; ++i) roots.emplace_back(rng.uniform(-3.0, 3.0), 0.0);
        for (int i = 0; i < n_pairs; ++i) {
            const double re = rng.uniform(-2.0, 2.0), im = rng.uniform(0.3, 2.0);
            roots.emplace_back(re, im);
            roots.emplace_back(re, -im);
        }
        // coefficients of prod (x - r_i), highest power monic
        std::vector<std::complex<double>> coef = {1.0};
        for (auto r : roots) {
            std::vector<std::complex<double>> next(coef.size() + 1, 0.0);
            for (std::size_t i = 0; i < coef.size(); ++i) {
                next[i] += coef[i];
                next[i + 1] -= coef[i] * r;
            }
            coef = next;
        }
        const std::size_t n = roots.size();
        DenseMatrix comp(n, n);
        for (std::size_t i = 1; i < n; ++i) comp(i, i - 1) = 1.0;
        for (std::size_t i = 0; i < n; ++i) comp(i, n - 1) = -coef[n - i].real();
        check_multiset_close(linalg::eigenvalues(comp), roots, 1e-7);
    }
}

TEST_CASE("eigenvalues: M and M^T agree as multisets") {
    util::Rng rng(4321);
    for (int rep = 0; rep < 15; ++rep) {
        const std::size_t n = 2 + rng.next_u64() % 9;
        DenseMatrix m = random_matrix(n, rng, 2.0);
        check_multiset_close(linalg::eigenvalues(m), linalg::eigenvalues(m.transposed()),
                             1e-8 * std::max(1.0, m.max_abs()));
    }
}

TEST_CASE("eigenvalues: trace and determinant consistency on seeded matrices") {
    util::Rng rng(2718);
    for (int rep = 0; rep < 15; ++rep) {
        const std::size_t n = 2 + rng.next_u64() % 10;
        DenseMatrix m = random_matrix(n, rng, 1.5);
        auto eig = linalg::eigenvalues(m);
        std::complex<double> sum = 0.0, prod = 1.0;
        for (auto e : eig) {
            sum += e;
            prod *= e;
        }
        double trace = 0.0;
        for (std::size_t i = 0; i < n; ++i) trace += m(i, i);
        CHECK(std::abs(sum.real() - trace) <= 1e-8 * std::max(1.0, std::abs(trace)));
        CHECK(std::abs(sum.imag()) <= 1e-8);
        double det = 0.0;
        try {
            det = linalg::lu_factor(m).determinant();
        } catch (const linalg::SingularMatrix&) {
            continue;
        }
        CHECK(std::abs(prod.real() - det) <= 1e-7 * std::max(1.0, std::abs(det)));
    }
}

TEST_CASE("min_singular_value: identity and diagonal cases") {
    CHECK(linalg::min_singular_value(DenseMatrix::identity(4)) == doctest::Approx(1.0));
    DenseMatrix d = DenseMatrix::from_rows({{3.0, 0.0}, {0.0, 0.5}});
    CHECK(linalg::min_singular_value(d) == doctest::Approx(0.5));
}

TEST_CASE("min_singular_value: zero for singular input") {
    DenseMatrix m = DenseMatrix::from_rows({{1.0, 1.0}, {1.0, 1.0}});
    CHECK(linalg::min_singular_value(m) == 0.0);
}

TEST_CASE("min_singular_value and spectral_norm match Jacobi SVD oracle") {
    util::Rng rng(31415);
    for (int rep = 0; rep < 12; ++rep) {
        const std::size_t n = 2 + rng.next_u64() % 5;
        DenseMatrix m = random_matrix(n, rng, 2.0);
        auto sv = testsupport::jacobi_singular_values(m);
        if (sv.front() < 1e-6) continue;
        const double smin = linalg::min_singular_value(m);
        const double smax = linalg::spectral_norm(m);
        CHECK(std::abs(smin - sv.front()) <= 1e-6 * sv.front());
        CHECK(std::abs(smax - sv.back()) <= 1e-6 * sv.back());
    }
}

TEST_CASE("eigenvalues rejects dimensions above 64") {
    CHECK_THROWS_AS((void)linalg::eigenvalues(DenseMatrix::identity(65)),
                    std::invalid_argument);
}
