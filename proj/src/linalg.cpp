#include "daeops/linalg.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <numeric>

#include "daeops/util.hpp"

namespace daeops::linalg {

using util::require;

DenseMatrix DenseMatrix::identity(std::size_t n) {
    DenseMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

DenseMatrix DenseMatrix::from_rows(const std::vector<Vec>& rows) {
    if (rows.empty()) return DenseMatrix(0, 0);
    DenseMatrix m(rows.size(), rows[0].size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        require(rows[i].size() == m.cols(), "ragged rows");
        for (std::size_t j = 0; j < m.cols(); ++j) m(i, j) = rows[i][j];
    }
    return m;
}

DenseMatrix DenseMatrix::transposed() const {
    DenseMatrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
}

DenseMatrix DenseMatrix::operator*(const DenseMatrix& rhs) const {
    require(cols_ == rhs.rows_, "matmul shape mismatch");
    DenseMatrix out(rows_, rhs.cols_);
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t k = 0; k < cols_; ++k) {
            const double a = (*this)(i, k);
            if (a == 0.0) continue;
            for (std::size_t j = 0; j < rhs.cols_; ++j) out(i, j) += a * rhs(k, j);
        }
    return out;
}

Vec DenseMatrix::operator*(const Vec& v) const {
    require(cols_ == v.size(), "matvec shape mismatch");
    Vec out(rows_, 0.0);
    for (std::size_t i = 0; i < rows_; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < cols_; ++j) s += (*this)(i, j) * v[j];
        out[i] = s;
    }
    return out;
}

DenseMatrix DenseMatrix::operator+(const DenseMatrix& rhs) const {
    require(rows_ == rhs.rows_ && cols_ == rhs.cols_, "add shape mismatch");
    DenseMatrix out = *this;
    for (std::size_t i = 0; i < data_.size(); ++i) out.data_[i] += rhs.data_[i];
    return out;
}

DenseMatrix DenseMatrix::operator-(const DenseMatrix& rhs) const {
    require(rows_ == rhs.rows_ && cols_ == rhs.cols_, "sub shape mismatch");
    DenseMatrix out = *this;
    for (std::size_t i = 0; i < data_.size(); ++i) out.data_[i] -= rhs.data_[i];
    return out;
}

DenseMatrix DenseMatrix::scaled(double s) const {
    DenseMatrix out = *this;
    for (auto& x : out.data_) x *= s;
    return out;
}

double DenseMatrix::max_abs() const {
    double m = 0.0;
    for (double x : data_) m = std::max(m, std::abs(x));
    return m;
}

double DenseMatrix::frobenius_norm() const {
    double s = 0.0;
    for (double x : data_) s += x * x;
    return std::sqrt(s);
}

bool DenseMatrix::all_finite() const {
    for (double x : data_)
        if (!std::isfinite(x)) return false;
    return true;
}

// ---------------------------------------------------------------------------
// LU with partial pivoting
// ---------------------------------------------------------------------------

LuFactorization::LuFactorization(const DenseMatrix& m) {
    require(m.square(), "lu_factor: matrix not square");
    require(m.all_finite(), "lu_factor: non-finite entries");
    n_ = m.rows();
    lu_ = m;
    perm_.resize(n_);
    std::iota(perm_.begin(), perm_.end(), std::size_t{0});
    const double threshold = 1e-14 * m.max_abs();

    for (std::size_t k = 0; k < n_; ++k) {
        std::size_t p = k;
        double best = std::abs(lu_(k, k));
        for (std::size_t i = k + 1; i < n_; ++i) {
            const double v = std::abs(lu_(i, k));
            if (v > best) {
                best = v;
                p = i;
            }
        }
        if (best <= threshold) throw SingularMatrix(k);
        if (p != k) {
            for (std::size_t j = 0; j < n_; ++j) std::swap(lu_(k, j), lu_(p, j));
            std::swap(perm_[k], perm_[p]);
            perm_sign_ = -perm_sign_;
        }
        const double pivot = lu_(k, k);
        for (std::size_t i = k + 1; i < n_; ++i) {
            const double f = lu_(i, k) / pivot;
            lu_(i, k) = f;
            if (f == 0.0) continue;
            for (std::size_t j = k + 1; j < n_; ++j) lu_(i, j) -= f * lu_(k, j);
        }
    }
}

Vec LuFactorization::solve(const Vec& b) const {
    require(b.size() == n_, "lu solve: rhs size mismatch");
    Vec x(n_);
    for (std::size_t i = 0; i < n_; ++i) x[i] = b[perm_[i]];
    // L y = Pb (unit lower)
    for (std::size_t i = 1; i < n_; ++i) {
        double s = x[i];
        for (std::size_t j = 0; j < i; ++j) s -= lu_(i, j) * x[j];
        x[i] = s;
    }
    // U x = y
    for (std::size_t ii = n_; ii-- > 0;) {
        double s = x[ii];
        for (std::size_t j = ii + 1; j < n_; ++j) s -= lu_(ii, j) * x[j];
        x[ii] = s / lu_(ii, ii);
    }
    return x;
}

Vec LuFactorization::solve_transpose(const Vec& b) const {
    require(b.size() == n_, "lu solveT: rhs size mismatch");
    // A^T = U^T L^T P, so solve U^T w = b, L^T v = w, then x[perm[i]] = v[i].
    Vec w(b);
    for (std::size_t i = 0; i < n_; ++i) {
        double s = w[i];
        for (std::size_t j = 0; j < i; ++j) s -= lu_(j, i) * w[j];
        w[i] = s / lu_(i, i);
    }
    for (std::size_t ii = n_; ii-- > 0;) {
        double s = w[ii];
        for (std::size_t j = ii + 1; j < n_; ++j) s -= lu_(j, ii) * w[j];
        w[ii] = s;
    }
    Vec x(n_);
    for (std::size_t i = 0; i < n_; ++i) x[perm_[i]] = w[i];
    return x;
}

DenseMatrix LuFactorization::solve(const DenseMatrix& b) const {
    require(b.rows() == n_, "lu solve: rhs rows mismatch");
    DenseMatrix out(n_, b.cols());
    Vec col(n_);
    for (std::size_t j = 0; j < b.cols(); ++j) {
        for (std::size_t i = 0; i < n_; ++i) col[i] = b(i, j);
        Vec x = solve(col);
        for (std::size_t i = 0; i < n_; ++i) out(i, j) = x[i];
    }
    return out;
}

double LuFactorization::determinant() const {
    double d = static_cast<double>(perm_sign_);
    for (std::size_t k = 0; k < n_; ++k) d *= lu_(k, k);
    return d;
}

// ---------------------------------------------------------------------------
// Eigenvalues: Householder Hessenberg + Francis double-shift QR
// ---------------------------------------------------------------------------

namespace {

void hessenberg_reduce(DenseMatrix& a) {
    const std::size_t n = a.rows();
    if (n < 3) return;
    Vec v(n);
    for (std::size_t k = 0; k + 2 < n; ++k) {
        double scale = 0.0;
        for (std::size_t i = k + 1; i < n; ++i) scale += std::abs(a(i, k));
        if (scale == 0.0) continue;
        double alpha2 = 0.0;
        for (std::size_t i = k + 1; i < n; ++i) {
            v[i] = a(i, k) / scale;
            alpha2 += v[i] * v[i];
        }
        double alpha = std::sqrt(alpha2);
        if (v[k + 1] > 0) alpha = -alpha;
        v[k + 1] -= alpha;
        double vv = 0.0;
        for (std::size_t i = k + 1; i < n; ++i) vv += v[i] * v[i];
        if (vv == 0.0) continue;
        const double beta = 2.0 / vv;
        // left: A -= beta * v (v^T A) on rows k+1..n-1
        for (std::size_t j = 0; j < n; ++j) {
            double s = 0.0;
            for (std::size_t i = k + 1; i < n; ++i) s += v[i] * a(i, j);
            s *= beta;
            for (std::size_t i = k + 1; i < n; ++i) a(i, j) -= v[i] * s;
        }
        // right: A -= beta * (A v) v^T on cols k+1..n-1
        for (std::size_t i = 0; i < n; ++i) {
            double s = 0.0;
            for (std::size_t j = k + 1; j < n; ++j) s += a(i, j) * v[j];
            s *= beta;
            for (std::size_t j = k + 1; j < n; ++j) a(i, j) -= s * v[j];
        }
        a(k + 1, k) = alpha * scale;
        for (std::size_t i = k + 2; i < n; ++i) a(i, k) = 0.0;
    }
}

inline double sign_of(double a, double b) { return b >= 0.0 ? std::abs(a) : -std::abs(a); }

}  // namespace

std::vector<std::complex<double>> eigenvalues(const DenseMatrix& m) {
    require(m.square(), "eigenvalues: matrix not square");
    require(m.rows() <= 64, "eigenvalues: dimension > 64 unsupported");
    require(m.all_finite(), "eigenvalues: non-finite entries");
    const int n = static_cast<int>(m.rows());
    std::vector<std::complex<double>> eig;
    if (n == 0) return eig;
    if (n == 1) {
        eig.emplace_back(m(0, 0), 0.0);
        return eig;
    }

    DenseMatrix h = m;
    hessenberg_reduce(h);

    const double eps = DBL_EPSILON;
    double anorm = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = std::max(i - 1, 0); j < n; ++j) anorm += std::abs(h(i, j));
    if (anorm == 0.0) {
        eig.assign(n, {0.0, 0.0});
        return eig;
    }

    int nn = n - 1;
    double t = 0.0;
    int total_sweeps = 0;
    const int max_sweeps = 100 * n;

    while (nn >= 0) {
        int its = 0;
        for (;;) {
            int l;
            for (l = nn; l >= 1; --l) {
                double s = std::abs(h(l - 1, l - 1)) + std::abs(h(l, l));
                if (s == 0.0) s = anorm;
                if (std::abs(h(l, l - 1)) <= eps * s) {
                    h(l, l - 1) = 0.0;
                    break;
                }
            }
            if (l < 0) l = 0;
            double x = h(nn, nn);
            if (l == nn) {
                eig.emplace_back(x + t, 0.0);
                --nn;
                break;
            }
            double y = h(nn - 1, nn - 1);
            double w = h(nn, nn - 1) * h(nn - 1, nn);
            if (l == nn - 1) {
                double p = 0.5 * (y - x);
                double q = p * p + w;
                double z = std::sqrt(std::abs(q));
                x += t;
                if (q >= 0.0) {
                    z = p + sign_of(z, p);
                    eig.emplace_back(x + z, 0.0);
                    eig.emplace_back(z != 0.0 ? x - w / z : x + z, 0.0);
                } else {
                    eig.emplace_back(x + p, z);
                    eig.emplace_back(x + p, -z);
                }
                nn -= 2;
                break;
            }
            if (++total_sweeps > max_sweeps)
                throw NoConvergence("eigenvalues: QR iteration exceeded sweep budget");
            if (its != 0 && its % 10 == 0) {
                // exceptional shift
                t += x;
                for (int i = 0; i <= nn; ++i) h(i, i) -= x;
                double s = std::abs(h(nn, nn - 1)) + std::abs(h(nn - 1, nn - 2));
                y = x = 0.75 * s;
                w = -0.4375 * s * s;
            }
            ++its;
            double p = 0.0, q = 0.0, r = 0.0, z = 0.0;
            int mm;
            for (mm = nn - 2; mm >= l; --mm) {
                z = h(mm, mm);
                const double rr = x - z;
                const double ss = y - z;
                p = (rr * ss - w) / h(mm + 1, mm) + h(mm, mm + 1);
                q = h(mm + 1, mm + 1) - z - rr - ss;
                r = h(mm + 2, mm + 1);
                const double scale = std::abs(p) + std::abs(q) + std::abs(r);
                if (scale != 0.0) {
                    p /= scale;
                    q /= scale;
                    r /= scale;
                }
                if (mm == l) break;
                const double u = std::abs(h(mm, mm - 1)) * (std::abs(q) + std::abs(r));
                const double v =
                    std::abs(p) * (std::abs(h(mm - 1, mm - 1)) + std::abs(z) +
                                   std::abs(h(mm + 1, mm + 1)));
                if (u <= eps * v) break;
            }
            if (mm < l) mm = l;
            for (int i = mm + 2; i <= nn; ++i) {
                h(i, i - 2) = 0.0;
                if (i > mm + 2) h(i, i - 3) = 0.0;
            }
            for (int k = mm; k <= nn - 1; ++k) {
                if (k != mm) {
                    p = h(k, k - 1);
                    q = h(k + 1, k - 1);
                    r = (k != nn - 1) ? h(k + 2, k - 1) : 0.0;
                    x = std::abs(p) + std::abs(q) + std::abs(r);
                    if (x != 0.0) {
                        p /= x;
                        q /= x;
                        r /= x;
                    }
                }
                double s = sign_of(std::sqrt(p * p + q * q + r * r), p);
                if (s == 0.0) continue;
                if (k == mm) {
                    if (l != mm) h(k, k - 1) = -h(k, k - 1);
                } else {
                    h(k, k - 1) = -s * x;
                }
                p += s;
                x = p / s;
                y = q / s;
                z = r / s;
                q /= p;
                r /= p;
                for (int j = k; j <= nn; ++j) {
                    double pp = h(k, j) + q * h(k + 1, j);
                    if (k != nn - 1) {
                        pp += r * h(k + 2, j);
                        h(k + 2, j) -= pp * z;
                    }
                    h(k + 1, j) -= pp * y;
                    h(k, j) -= pp * x;
                }
                const int mmin = nn < k + 3 ? nn : k + 3;
                for (int i = l; i <= mmin; ++i) {
                    double pp = x * h(i, k) + y * h(i, k + 1);
                    if (k != nn - 1) {
                        pp += z * h(i, k + 2);
                        h(i, k + 2) -= pp * r;
                    }
                    h(i, k + 1) -= pp * q;
                    h(i, k) -= pp;
                }
            }
        }
    }
    return eig;
}

// ---------------------------------------------------------------------------
// Singular value estimates
// ---------------------------------------------------------------------------

double min_singular_value(const DenseMatrix& m) {
    require(m.square(), "min_singular_value: matrix not square");
    const std::size_t n = m.rows();
    if (n == 0) return 0.0;
    LuFactorization lu(DenseMatrix::identity(1));
    try {
        lu = lu_factor(m);
    } catch (const SingularMatrix&) {
        return 0.0;
    }
    Vec v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = 1.1 + std::cos(0.7 * (double(i) + 1.0));
    double nv = norm2(v);
    for (auto& x : v) x /= nv;

    double sigma = -1.0;
    for (int iter = 0; iter < 2000; ++iter) {
        // y = (M^T M)^{-1} v
        Vec w = lu.solve_transpose(v);
        Vec y = lu.solve(w);
        const double rayleigh = dot(v, y);  // > 0 since (M^T M)^{-1} is SPD
        if (!(rayleigh > 0.0) || !std::isfinite(rayleigh)) return 0.0;
        const double sigma_new = 1.0 / std::sqrt(rayleigh);
        const double ny = norm2(y);
        if (ny == 0.0) return 0.0;
        for (std::size_t i = 0; i < n; ++i) v[i] = y[i] / ny;
        if (iter >= 3 && std::abs(sigma_new - sigma) <= 1e-10 * sigma_new) {
            return sigma_new;
        }
        sigma = sigma_new;
    }
    return sigma;
}

double spectral_norm(const DenseMatrix& m) {
    const std::size_t rows = m.rows(), cols = m.cols();
    if (rows == 0 || cols == 0 || m.max_abs() == 0.0) return 0.0;
    Vec v(cols);
    for (std::size_t i = 0; i < cols; ++i) v[i] = 1.1 + std::sin(0.9 * (double(i) + 1.0));
    double nv = norm2(v);
    for (auto& x : v) x /= nv;
    const DenseMatrix mt = m.transposed();

    double sigma = -1.0;
    for (int iter = 0; iter < 2000; ++iter) {
        Vec y = mt * (m * v);
        const double rayleigh = dot(v, y);
        const double ny = norm2(y);
        if (ny == 0.0) return 0.0;
        const double sigma_new = std::sqrt(std::max(rayleigh, 0.0));
        for (std::size_t i = 0; i < cols; ++i) v[i] = y[i] / ny;
        if (iter >= 3 && std::abs(sigma_new - sigma) <= 1e-12 * sigma_new) {
            return sigma_new;
        }
        sigma = sigma_new;
    }
    return sigma;
}

double norm_inf(const Vec& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

double norm2(const Vec& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

double dot(const Vec& a, const Vec& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

Vec axpy(double a, const Vec& x, const Vec& y) {
    Vec out(y);
    for (std::size_t i = 0; i < x.size(); ++i) out[i] += a * x[i];
    return out;
}

}  // namespace daeops::linalg
