#pragma once

#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace daeops::linalg {

using Vec = std::vector<double>;

/// Raised when a pivot falls below the singularity threshold
/// (1e-14 * max|entry|). For extended-system Jacobians this is how an
/// index-1 regularity failure surfaces.
struct SingularMatrix : std::runtime_error {
    std::size_t pivot_index;
    explicit SingularMatrix(std::size_t k)
        : std::runtime_error("singular matrix at pivot " + std::to_string(k)),
          pivot_index(k) {}
};

struct NoConvergence : std::runtime_error {
    explicit NoConvergence(const std::string& what) : std::runtime_error(what) {}
};

/// Row-major dense matrix of float64. Sized for Jacobians of the systems
/// this project handles (a few to a few dozen unknowns); no attempt at
/// cache blocking or sparsity.
class DenseMatrix {
public:
    DenseMatrix() = default;
    DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static DenseMatrix identity(std::size_t n);
    static DenseMatrix from_rows(const std::vector<Vec>& rows);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    bool square() const { return rows_ == cols_; }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    const Vec& data() const { return data_; }
    Vec& data() { return data_; }

    DenseMatrix transposed() const;
    DenseMatrix operator*(const DenseMatrix& rhs) const;
    Vec operator*(const Vec& v) const;
    DenseMatrix operator+(const DenseMatrix& rhs) const;
    DenseMatrix operator-(const DenseMatrix& rhs) const;
    DenseMatrix scaled(double s) const;

    double max_abs() const;
    double frobenius_norm() const;
    bool all_finite() const;

private:
    std::size_t rows_ = 0, cols_ = 0;
    Vec data_;
};

/// PA = LU with partial pivoting, packed in place. Immutable once built,
/// so one factorization can back many solves (IFT reuse).
class LuFactorization {
public:
    explicit LuFactorization(const DenseMatrix& m);

    std::size_t dim() const { return n_; }

    /// Solve A x = b.
    Vec solve(const Vec& b) const;
    /// Solve A^T x = b (adjoint/VJP path).
    Vec solve_transpose(const Vec& b) const;
    /// Column-wise solve: A X = B.
    DenseMatrix solve(const DenseMatrix& b) const;

    /// Product of pivots times permutation sign.
    double determinant() const;

    const std::vector<std::size_t>& permutation() const { return perm_; }

private:
    std::size_t n_ = 0;
    DenseMatrix lu_;
    std::vector<std::size_t> perm_;
    int perm_sign_ = 1;
};

inline LuFactorization lu_factor(const DenseMatrix& m) { return LuFactorization(m); }

/// Eigenvalues of a real square matrix (dimension <= 64) via Householder
/// Hessenberg reduction followed by Francis double-shift QR. Complex pairs
/// come from the 2x2 Schur blocks; no balancing step.
std::vector<std::complex<double>> eigenvalues(const DenseMatrix& m);

/// Smallest singular value via inverse power iteration on m^T m, reusing a
/// single LU of m. Returns 0.0 when the factorization reports singularity.
double min_singular_value(const DenseMatrix& m);

/// Largest singular value (operator 2-norm) via power iteration on m^T m.
double spectral_norm(const DenseMatrix& m);

// small vector helpers shared across modules
double norm_inf(const Vec& v);
double norm2(const Vec& v);
double dot(const Vec& a, const Vec& b);
Vec axpy(double a, const Vec& x, const Vec& y);  // a*x + y

}  // namespace daeops::linalg
