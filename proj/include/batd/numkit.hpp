#pragma once

// Dense real-matrix numerics: LU solves, nonsymmetric eigenvalues
// (Householder-Hessenberg + Francis double-shift QR), one-sided Jacobi SVD.
// Everything here is sized for matrices up to a few dozen rows.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <initializer_list>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace batd {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct SingularMatrix : Error {
  using Error::Error;
};
struct NoConvergence : Error {
  using Error::Error;
};
struct DimensionMismatch : Error {
  using Error::Error;
};
struct InvalidModel : Error {
  using Error::Error;
};

using Vector = std::vector<double>;
using ComplexScalar = std::complex<double>;

class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = rows.size();
    cols_ = rows_ ? rows.begin()->size() : 0;
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
      if (r.size() != cols_) throw DimensionMismatch("ragged matrix literal");
      data_.insert(data_.end(), r.begin(), r.end());
    }
  }

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool square() const noexcept { return rows_ == cols_; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  const std::vector<double>& data() const noexcept { return data_; }

  Matrix transpose() const {
    Matrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
  }

  Matrix& operator+=(const Matrix& o) {
    check_same(o);
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
    return *this;
  }
  Matrix& operator-=(const Matrix& o) {
    check_same(o);
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
    return *this;
  }
  Matrix& operator*=(double s) {
    for (auto& x : data_) x *= s;
    return *this;
  }

  friend Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
  friend Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
  friend Matrix operator*(Matrix a, double s) { return a *= s; }
  friend Matrix operator*(double s, Matrix a) { return a *= s; }

  friend Matrix operator*(const Matrix& a, const Matrix& b) {
    if (a.cols_ != b.rows_) throw DimensionMismatch("matrix product shape mismatch");
    Matrix c(a.rows_, b.cols_);
    for (std::size_t i = 0; i < a.rows_; ++i)
      for (std::size_t k = 0; k < a.cols_; ++k) {
        const double aik = a(i, k);
        if (aik == 0.0) continue;
        for (std::size_t j = 0; j < b.cols_; ++j) c(i, j) += aik * b(k, j);
      }
    return c;
  }

  friend Vector operator*(const Matrix& a, std::span<const double> x) {
    if (a.cols_ != x.size()) throw DimensionMismatch("matrix-vector shape mismatch");
    Vector y(a.rows_, 0.0);
    for (std::size_t i = 0; i < a.rows_; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < a.cols_; ++j) s += a(i, j) * x[j];
      y[i] = s;
    }
    return y;
  }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  void check_same(const Matrix& o) const {
    if (rows_ != o.rows_ || cols_ != o.cols_) throw DimensionMismatch("matrix shape mismatch");
  }

  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

inline Vector operator*(const Matrix& a, const Vector& x) {
  return a * std::span<const double>(x);
}

/// Numerical constants. Benchmarks are at most 16x16, so these are fixed
/// rather than scaled with dimension.
struct Tolerances {
  /// Pivot threshold relative to the infinity norm of the input.
  double pivot = 1e-12;
  /// Subdiagonal deflation threshold in the QR iteration.
  double deflation = 1e-12;
  /// QR sweep cap is sweeps_per_dim * n.
  int sweeps_per_dim = 100;
  /// Jacobi SVD sweep cap.
  int svd_sweeps = 80;
  /// Singular values at or below this fraction of the largest are dropped
  /// by the pseudo-inverse.
  double pinv_rcond = 1e-10;
};

inline constexpr Tolerances kDefaultTolerances{};

inline double norm_inf(const Matrix& a) {
  double best = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double s = 0.0;
    for (double x : a.row(i)) s += std::abs(x);
    best = std::max(best, s);
  }
  return best;
}

inline double norm_inf(std::span<const double> x) {
  double best = 0.0;
  for (double v : x) best = std::max(best, std::abs(v));
  return best;
}

/// Scaled so that tiny or huge entries do not underflow or overflow.
inline double norm2(std::span<const double> x) {
  double scale = 0.0;
  for (double v : x) scale = std::max(scale, std::abs(v));
  if (scale == 0.0 || !std::isfinite(scale)) return scale;
  double s = 0.0;
  for (double v : x) s += (v / scale) * (v / scale);
  return scale * std::sqrt(s);
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline bool all_finite(const Matrix& a) {
  return std::all_of(a.data().begin(), a.data().end(), [](double x) { return std::isfinite(x); });
}

/// Solves A x = b by LU with partial pivoting.
inline Vector solve_linear(const Matrix& a, std::span<const double> b,
                           const Tolerances& tol = kDefaultTolerances) {
  if (!a.square() || a.rows() != b.size()) throw DimensionMismatch("solve_linear: shape mismatch");
  const std::size_t n = a.rows();
  Matrix lu = a;
  Vector x(b.begin(), b.end());
  const double threshold = tol.pivot * norm_inf(a);
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t p = k;
    for (std::size_t i = k + 1; i < n; ++i)
      if (std::abs(lu(i, k)) > std::abs(lu(p, k))) p = i;
    if (!(std::abs(lu(p, k)) >= threshold) || lu(p, k) == 0.0)
      throw SingularMatrix("solve_linear: pivot below threshold at column " + std::to_string(k));
    if (p != k) {
      for (std::size_t j = 0; j < n; ++j) std::swap(lu(k, j), lu(p, j));
      std::swap(x[k], x[p]);
    }
    for (std::size_t i = k + 1; i < n; ++i) {
      const double f = lu(i, k) / lu(k, k);
      if (f == 0.0) continue;
      for (std::size_t j = k; j < n; ++j) lu(i, j) -= f * lu(k, j);
      x[i] -= f * x[k];
    }
  }
  for (std::size_t k = n; k-- > 0;) {
    double s = x[k];
    for (std::size_t j = k + 1; j < n; ++j) s -= lu(k, j) * x[j];
    x[k] = s / lu(k, k);
  }
  return x;
}

namespace detail {

// Householder reduction to upper Hessenberg form; entries below the first
// subdiagonal are zeroed exactly.
inline void to_hessenberg(Matrix& a) {
  const std::size_t n = a.rows();
  if (n < 3) return;
  Vector v(n);
  for (std::size_t k = 0; k + 2 < n; ++k) {
    double alpha = 0.0;
    for (std::size_t i = k + 1; i < n; ++i) alpha += a(i, k) * a(i, k);
    alpha = std::sqrt(alpha);
    if (alpha == 0.0) continue;
    if (a(k + 1, k) > 0) alpha = -alpha;
    double vnorm2 = 0.0;
    for (std::size_t i = k + 1; i < n; ++i) {
      v[i] = a(i, k);
      if (i == k + 1) v[i] -= alpha;
      vnorm2 += v[i] * v[i];
    }
    if (vnorm2 == 0.0) continue;
    // A <- H A with H = I - 2 v v^T / |v|^2
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t i = k + 1; i < n; ++i) s += v[i] * a(i, j);
      s = 2.0 * s / vnorm2;
      for (std::size_t i = k + 1; i < n; ++i) a(i, j) -= s * v[i];
    }
    // A <- A H
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (std::size_t j = k + 1; j < n; ++j) s += a(i, j) * v[j];
      s = 2.0 * s / vnorm2;
      for (std::size_t j = k + 1; j < n; ++j) a(i, j) -= s * v[j];
    }
    a(k + 1, k) = alpha;
    for (std::size_t i = k + 2; i < n; ++i) a(i, k) = 0.0;
  }
}

inline double sign_of(double magnitude, double s) {
  return s >= 0.0 ? std::abs(magnitude) : -std::abs(magnitude);
}

// Francis double-shift QR on an upper Hessenberg matrix (EISPACK hqr layout).
inline std::vector<ComplexScalar> hessenberg_eigenvalues(Matrix a, const Tolerances& tol) {
  const int n = static_cast<int>(a.rows());
  std::vector<ComplexScalar> out(static_cast<std::size_t>(n));
  double anorm = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = std::max(i - 1, 0); j < n; ++j) anorm += std::abs(a(i, j));

  const int sweep_cap = tol.sweeps_per_dim * std::max(n, 1);
  int total_sweeps = 0;
  int nn = n - 1;
  double t = 0.0;
  double p = 0, q = 0, r = 0, s = 0, w = 0, x = 0, y = 0, z = 0;
  while (nn >= 0) {
    int its = 0;
    int l = 0;
    do {
      for (l = nn; l >= 1; --l) {
        s = std::abs(a(l - 1, l - 1)) + std::abs(a(l, l));
        if (s == 0.0) s = anorm;
        if (std::abs(a(l, l - 1)) <= tol.deflation * s ||
            std::abs(a(l, l - 1)) + s == s) {
          a(l, l - 1) = 0.0;
          break;
        }
      }
      x = a(nn, nn);
      if (l == nn) {
        out[nn] = {x + t, 0.0};
        --nn;
      } else {
        y = a(nn - 1, nn - 1);
        w = a(nn, nn - 1) * a(nn - 1, nn);
        if (l == nn - 1) {
          p = 0.5 * (y - x);
          q = p * p + w;
          z = std::sqrt(std::abs(q));
          x += t;
          if (q >= 0.0) {
            z = p + sign_of(z, p);
            out[nn - 1] = out[nn] = {x + z, 0.0};
            if (z != 0.0) out[nn] = {x - w / z, 0.0};
          } else {
            out[nn - 1] = {x + p, -z};
            out[nn] = {x + p, z};
          }
          nn -= 2;
        } else {
          if (++total_sweeps > sweep_cap)
            throw NoConvergence("eigenvalues: QR iteration exceeded " +
                                std::to_string(sweep_cap) + " sweeps");
          if (its > 0 && its % 10 == 0) {
            // exceptional shift
            t += x;
            for (int i = 0; i <= nn; ++i) a(i, i) -= x;
            s = std::abs(a(nn, nn - 1)) + std::abs(a(nn - 1, nn - 2));
            y = x = 0.75 * s;
            w = -0.4375 * s * s;
          }
          ++its;
          int m = nn - 2;
          for (; m >= l; --m) {
            z = a(m, m);
            r = x - z;
            s = y - z;
            p = (r * s - w) / a(m + 1, m) + a(m, m + 1);
            q = a(m + 1, m + 1) - z - r - s;
            r = a(m + 2, m + 1);
            s = std::abs(p) + std::abs(q) + std::abs(r);
            p /= s;
            q /= s;
            r /= s;
            if (m == l) break;
            const double u = std::abs(a(m, m - 1)) * (std::abs(q) + std::abs(r));
            const double v = std::abs(p) * (std::abs(a(m - 1, m - 1)) + std::abs(z) +
                                            std::abs(a(m + 1, m + 1)));
            if (u + v == v) break;
          }
          for (int i = m + 2; i <= nn; ++i) {
            a(i, i - 2) = 0.0;
            if (i != m + 2) a(i, i - 3) = 0.0;
          }
          for (int k = m; k <= nn - 1; ++k) {
            if (k != m) {
              p = a(k, k - 1);
              q = a(k + 1, k - 1);
              r = 0.0;
              if (k != nn - 1) r = a(k + 2, k - 1);
              x = std::abs(p) + std::abs(q) + std::abs(r);
              if (x != 0.0) {
                p /= x;
                q /= x;
                r /= x;
              }
            }
            s = sign_of(std::sqrt(p * p + q * q + r * r), p);
            if (s != 0.0) {
              if (k == m) {
                if (l != m) a(k, k - 1) = -a(k, k - 1);
              } else {
                a(k, k - 1) = -s * x;
              }
              p += s;
              x = p / s;
              y = q / s;
              z = r / s;
              q /= p;
              r /= p;
              for (int j = k; j <= nn; ++j) {
                p = a(k, j) + q * a(k + 1, j);
                if (k != nn - 1) {
                  p += r * a(k + 2, j);
                  a(k + 2, j) -= p * z;
                }
                a(k + 1, j) -= p * y;
                a(k, j) -= p * x;
              }
              const int mmin = nn < k + 3 ? nn : k + 3;
              for (int i = l; i <= mmin; ++i) {
                p = x * a(i, k) + y * a(i, k + 1);
                if (k != nn - 1) {
                  p += z * a(i, k + 2);
                  a(i, k + 2) -= p * r;
                }
                a(i, k + 1) -= p * q;
                a(i, k) -= p;
              }
            }
          }
        }
      }
    } while (nn >= 0 && l < nn - 1);
  }
  return out;
}

}  // namespace detail

/// Eigenvalues of a real square matrix. Complex values come in conjugate
/// pairs; order is unspecified.
inline std::vector<ComplexScalar> eigenvalues(const Matrix& a,
                                              const Tolerances& tol = kDefaultTolerances) {
  if (!a.square() || a.rows() == 0) throw DimensionMismatch("eigenvalues: matrix must be square");
  if (!all_finite(a)) throw NoConvergence("eigenvalues: non-finite input");
  Matrix h = a;
  detail::to_hessenberg(h);
  return detail::hessenberg_eigenvalues(std::move(h), tol);
}

inline double spectral_radius(const Matrix& a, const Tolerances& tol = kDefaultTolerances) {
  double best = 0.0;
  for (const auto& z : eigenvalues(a, tol)) best = std::max(best, std::abs(z));
  return best;
}

/// -max Re(lambda); positive iff `g` is Hurwitz.
inline double hurwitz_margin(const Matrix& g, const Tolerances& tol = kDefaultTolerances) {
  double worst = -std::numeric_limits<double>::infinity();
  for (const auto& z : eigenvalues(g, tol)) worst = std::max(worst, z.real());
  return -worst;
}

struct Svd {
  Matrix u;       // m x k, orthonormal columns
  Vector sigma;   // k values, descending
  Matrix v;       // n x k, orthonormal columns
};

/// Thin SVD by one-sided (Hestenes) Jacobi rotations, k = min(m, n).
inline Svd svd(const Matrix& a, const Tolerances& tol = kDefaultTolerances) {
  if (a.rows() < a.cols()) {
    Svd t = svd(a.transpose(), tol);
    return {std::move(t.v), std::move(t.sigma), std::move(t.u)};
  }
  if (!all_finite(a)) throw NoConvergence("svd: non-finite input");
  const std::size_t m = a.rows(), n = a.cols();
  Matrix w = a;
  Matrix v = Matrix::identity(n);
  constexpr double eps = std::numeric_limits<double>::epsilon();
  bool rotated = true;
  int sweep = 0;
  while (rotated) {
    if (++sweep > tol.svd_sweeps) throw NoConvergence("svd: Jacobi sweeps exhausted");
    rotated = false;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        double alpha = 0.0, beta = 0.0, gamma = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
          alpha += w(i, p) * w(i, p);
          beta += w(i, q) * w(i, q);
          gamma += w(i, p) * w(i, q);
        }
        if (gamma == 0.0 || std::abs(gamma) <= eps * std::sqrt(alpha * beta)) continue;
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = detail::sign_of(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (std::size_t i = 0; i < m; ++i) {
          const double wp = w(i, p), wq = w(i, q);
          w(i, p) = c * wp - s * wq;
          w(i, q) = s * wp + c * wq;
        }
        for (std::size_t i = 0; i < n; ++i) {
          const double vp = v(i, p), vq = v(i, q);
          v(i, p) = c * vp - s * vq;
          v(i, q) = s * vp + c * vq;
        }
      }
    }
  }
  std::vector<std::size_t> order(n);
  Vector norms(n);
  for (std::size_t j = 0; j < n; ++j) {
    order[j] = j;
    double s = 0.0;
    for (std::size_t i = 0; i < m; ++i) s += w(i, j) * w(i, j);
    norms[j] = std::sqrt(s);
  }
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return norms[x] > norms[y]; });
  Svd out{Matrix(m, n), Vector(n), Matrix(n, n)};
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t j = order[k];
    out.sigma[k] = norms[j];
    for (std::size_t i = 0; i < n; ++i) out.v(i, k) = v(i, j);
    if (norms[j] > 0.0)
      for (std::size_t i = 0; i < m; ++i) out.u(i, k) = w(i, j) / norms[j];
  }
  return out;
}

inline double smallest_singular_value(const Matrix& a, const Tolerances& tol = kDefaultTolerances) {
  return svd(a, tol).sigma.back();
}

inline double operator_norm_2(const Matrix& a, const Tolerances& tol = kDefaultTolerances) {
  return svd(a, tol).sigma.front();
}

/// Moore-Penrose pseudo-inverse; singular values below rcond * sigma_max
/// are treated as zero.
inline Matrix pseudo_inverse(const Matrix& a, const Tolerances& tol = kDefaultTolerances) {
  const Svd d = svd(a, tol);
  const double cutoff = tol.pinv_rcond * (d.sigma.empty() ? 0.0 : d.sigma.front());
  Matrix out(a.cols(), a.rows());
  for (std::size_t k = 0; k < d.sigma.size(); ++k) {
    if (d.sigma[k] <= cutoff || d.sigma[k] == 0.0) continue;
    const double inv = 1.0 / d.sigma[k];
    for (std::size_t i = 0; i < a.cols(); ++i)
      for (std::size_t j = 0; j < a.rows(); ++j) out(i, j) += d.v(i, k) * inv * d.u(j, k);
  }
  return out;
}

/// Minimum-norm least-squares solution of A x = b.
inline Vector solve_min_norm(const Matrix& a, std::span<const double> b,
                             const Tolerances& tol = kDefaultTolerances) {
  if (a.rows() != b.size()) throw DimensionMismatch("solve_min_norm: shape mismatch");
  return pseudo_inverse(a, tol) * b;
}

}  // namespace batd
