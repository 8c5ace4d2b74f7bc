#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "robustfit/common.hpp"

namespace robustfit {

// Small dense row-major matrix; everything in this library is (p+1)x(p+1)
// with p <= 5, so no attempt at sparsity or blocking.
class Matrix {
public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  const std::vector<double>& data() const { return data_; }

  Matrix transposed() const {
    Matrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
  }

  Matrix operator*(const Matrix& rhs) const {
    Matrix out(rows_, rhs.cols_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t k = 0; k < cols_; ++k) {
        const double a = (*this)(i, k);
        if (a == 0.0) continue;
        for (std::size_t j = 0; j < rhs.cols_; ++j) out(i, j) += a * rhs(k, j);
      }
    return out;
  }

  Matrix operator+(const Matrix& rhs) const {
    Matrix out = *this;
    for (std::size_t i = 0; i < data_.size(); ++i) out.data_[i] += rhs.data_[i];
    return out;
  }

  Matrix operator-(const Matrix& rhs) const {
    Matrix out = *this;
    for (std::size_t i = 0; i < data_.size(); ++i) out.data_[i] -= rhs.data_[i];
    return out;
  }

  Matrix scaled(double k) const {
    Matrix out = *this;
    for (double& x : out.data_) x *= k;
    return out;
  }

  std::vector<double> mul(std::span<const double> v) const {
    std::vector<double> out(rows_, 0.0);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) out[i] += (*this)(i, j) * v[j];
    return out;
  }

  double max_abs_asymmetry() const {
    double worst = 0.0;
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = i + 1; j < cols_; ++j)
        worst = std::max(worst, std::abs((*this)(i, j) - (*this)(j, i)));
    return worst;
  }

private:
  std::size_t rows_ = 0, cols_ = 0;
  std::vector<double> data_;
};

// Lower Cholesky factor of an SPD matrix, or nullopt if not positive definite.
inline std::optional<Matrix> cholesky(const Matrix& a) {
  const std::size_t n = a.rows();
  Matrix l(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double diag = a(j, j);
    for (std::size_t k = 0; k < j; ++k) diag -= l(j, k) * l(j, k);
    if (!(diag > 0.0) || !std::isfinite(diag)) return std::nullopt;
    l(j, j) = std::sqrt(diag);
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = a(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / l(j, j);
    }
  }
  return l;
}

inline std::vector<double> chol_solve(const Matrix& l, std::span<const double> b) {
  const std::size_t n = l.rows();
  std::vector<double> y(n), x(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = b[i];
    for (std::size_t k = 0; k < i; ++k) s -= l(i, k) * y[k];
    y[i] = s / l(i, i);
  }
  for (std::size_t ii = n; ii-- > 0;) {
    double s = y[ii];
    for (std::size_t k = ii + 1; k < n; ++k) s -= l(k, ii) * x[k];
    x[ii] = s / l(ii, ii);
  }
  return x;
}

inline Matrix chol_inverse(const Matrix& l) {
  const std::size_t n = l.rows();
  Matrix inv(n, n);
  std::vector<double> e(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    e.assign(n, 0.0);
    e[j] = 1.0;
    const std::vector<double> col = chol_solve(l, e);
    for (std::size_t i = 0; i < n; ++i) inv(i, j) = col[i];
  }
  return inv;
}

// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
inline std::vector<double> sym_eigenvalues(Matrix a, int max_sweeps = 64) {
  const std::size_t n = a.rows();
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) off += a(i, j) * a(i, j);
    if (off < 1e-300) break;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
      }
  }
  std::vector<double> eig(n);
  for (std::size_t i = 0; i < n; ++i) eig[i] = a(i, i);
  std::sort(eig.begin(), eig.end());
  return eig;
}

inline double spd_condition(const Matrix& a) {
  const std::vector<double> eig = sym_eigenvalues(a);
  if (eig.front() <= 0.0) return std::numeric_limits<double>::infinity();
  return eig.back() / eig.front();
}

// Inverse of an SPD matrix; throws with a condition-number diagnostic when the
// factorization fails or the matrix is effectively singular.
inline Matrix inverse_spd(const Matrix& a, const char* code, const char* what) {
  const auto l = cholesky(a);
  if (!l || spd_condition(a) > 1e14) {
    fail(code, std::string(what) + " is singular or numerically rank-deficient "
                                   "(condition estimate " +
                   std::to_string(spd_condition(a)) + ")");
  }
  return chol_inverse(*l);
}

// Eigenvalues of J K^{-1} for symmetric J and SPD K, via the congruent
// symmetric problem L^{-1} J L^{-T} with K = L L^T. Real by construction.
inline std::vector<double> jk_inverse_eigenvalues(const Matrix& j, const Matrix& k,
                                                  const char* code = "singular-k") {
  const auto l = cholesky(k);
  if (!l) fail(code, "sensitivity matrix K is not positive definite");
  const std::size_t n = k.rows();
  // B = L^{-1} J L^{-T}: solve column-wise.
  Matrix jlT(n, n);
  std::vector<double> col(n);
  for (std::size_t cidx = 0; cidx < n; ++cidx) {
    for (std::size_t i = 0; i < n; ++i) col[i] = j(i, cidx);
    // forward solve L y = col
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      double s = col[i];
      for (std::size_t t = 0; t < i; ++t) s -= (*l)(i, t) * y[t];
      y[i] = s / (*l)(i, i);
    }
    for (std::size_t i = 0; i < n; ++i) jlT(i, cidx) = y[i];
  }
  Matrix b(n, n);
  for (std::size_t ridx = 0; ridx < n; ++ridx) {
    for (std::size_t i = 0; i < n; ++i) col[i] = jlT(ridx, i);
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      double s = col[i];
      for (std::size_t t = 0; t < i; ++t) s -= (*l)(i, t) * y[t];
      y[i] = s / (*l)(i, i);
    }
    for (std::size_t i = 0; i < n; ++i) b(ridx, i) = y[i];
  }
  // enforce symmetry before Jacobi (roundoff only)
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t t = i + 1; t < n; ++t) {
      const double m = 0.5 * (b(i, t) + b(t, i));
      b(i, t) = b(t, i) = m;
    }
  return sym_eigenvalues(b);
}

inline double quad_form(std::span<const double> v, const Matrix& a) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) s += v[i] * a(i, j) * v[j];
  return s;
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double inf_norm(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace robustfit
