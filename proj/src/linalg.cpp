#include "metricq/linalg.hpp"

#include <cmath>
#include <utility>

#include "metricq/error.hpp"

namespace metricq::linalg {

Matrix::Matrix(std::size_t n, std::vector<double> row_major) : n_(n), a_(std::move(row_major)) {
  if (a_.size() != n * n) throw DomainError("Matrix: expected " + std::to_string(n * n) + " entries");
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) : n_(rows.size()) {
  a_.reserve(n_ * n_);
  for (const auto& r : rows) {
    if (r.size() != n_) throw DomainError("Matrix: rows must form a square matrix");
    a_.insert(a_.end(), r.begin(), r.end());
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::diagonal(const std::vector<double>& d) {
  Matrix m(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
  return m;
}

Matrix Matrix::transpose() const {
  Matrix t(n_);
  for (std::size_t i = 0; i < n_; ++i)
    for (std::size_t j = 0; j < n_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

Matrix operator*(const Matrix& x, const Matrix& y) {
  if (x.n_ != y.n_) throw DomainError("Matrix product: size mismatch");
  const std::size_t n = x.n_;
  Matrix r(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < n; ++k) {
      const double xik = x(i, k);
      for (std::size_t j = 0; j < n; ++j) r(i, j) += xik * y(k, j);
    }
  return r;
}

std::vector<double> operator*(const Matrix& x, const std::vector<double>& v) {
  if (x.n_ != v.size()) throw DomainError("Matrix-vector product: size mismatch");
  std::vector<double> r(x.n_, 0.0);
  for (std::size_t i = 0; i < x.n_; ++i)
    for (std::size_t j = 0; j < x.n_; ++j) r[i] += x(i, j) * v[j];
  return r;
}

std::optional<Matrix> cholesky(const Matrix& a) {
  const std::size_t n = a.size();
  Matrix l(n);
  for (std::size_t j = 0; j < n; ++j) {
    double d = a(j, j);
    for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
    if (!(d > 0.0) || !std::isfinite(d)) return std::nullopt;
    const double ljj = std::sqrt(d);
    l(j, j) = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = a(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / ljj;
    }
  }
  return l;
}

Matrix invert_lower(const Matrix& l) {
  const std::size_t n = l.size();
  Matrix inv(n);
  for (std::size_t j = 0; j < n; ++j) {
    inv(j, j) = 1.0 / l(j, j);
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = 0.0;
      for (std::size_t k = j; k < i; ++k) s += l(i, k) * inv(k, j);
      inv(i, j) = -s / l(i, i);
    }
  }
  return inv;
}

double frobenius_norm(const Matrix& a) {
  double s = 0.0;
  for (double v : a.data()) s += v * v;
  return std::sqrt(s);
}

namespace {

double off_diagonal_norm(const Matrix& a) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a.size(); ++j)
      if (i != j) s += a(i, j) * a(i, j);
  return std::sqrt(s);
}

}  // namespace

SymmetricEigen jacobi_eigen(const Matrix& input, bool want_vectors, double tolerance,
                            int max_sweeps) {
  const std::size_t n = input.size();
  Matrix a = input;
  // Work on the exactly symmetric part.
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double s = 0.5 * (a(i, j) + a(j, i));
      a(i, j) = s;
      a(j, i) = s;
    }

  SymmetricEigen out;
  Matrix v = want_vectors ? Matrix::identity(n) : Matrix();
  const double threshold = tolerance * frobenius_norm(a);

  int sweep = 0;
  while (off_diagonal_norm(a) > threshold) {
    if (sweep == max_sweeps) throw NumericError("jacobi_eigen: no convergence");
    ++sweep;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        // Rotation annihilating a(p, q).
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        if (want_vectors) {
          for (std::size_t k = 0; k < n; ++k) {
            const double vkp = v(k, p);
            const double vkq = v(k, q);
            v(k, p) = c * vkp - s * vkq;
            v(k, q) = s * vkp + c * vkq;
          }
        }
      }
    }
  }

  out.values.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.values[i] = a(i, i);
  out.vectors = std::move(v);
  out.sweeps = sweep;
  return out;
}

std::vector<double> jacobi_eigenvalues(const Matrix& a, double tolerance) {
  return jacobi_eigen(a, false, tolerance).values;
}

}  // namespace metricq::linalg
