#ifndef METRICQ_LINALG_HPP
#define METRICQ_LINALG_HPP

// Small dense square matrices, enough for the SPD geometry and the samplers.
// Storage is row-major; sizes are expected to be tiny (p <= ~10).

#include <cstddef>
#include <initializer_list>
#include <optional>
#include <vector>

namespace metricq::linalg {

class Matrix {
 public:
  Matrix() = default;
  explicit Matrix(std::size_t n, double fill = 0.0) : n_(n), a_(n * n, fill) {}
  Matrix(std::size_t n, std::vector<double> row_major);
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix identity(std::size_t n);
  static Matrix diagonal(const std::vector<double>& d);

  std::size_t size() const noexcept { return n_; }
  double& operator()(std::size_t i, std::size_t j) { return a_[i * n_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return a_[i * n_ + j]; }
  const std::vector<double>& data() const noexcept { return a_; }

  Matrix transpose() const;
  friend Matrix operator*(const Matrix& x, const Matrix& y);
  friend std::vector<double> operator*(const Matrix& x, const std::vector<double>& v);
  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t n_ = 0;
  std::vector<double> a_;
};

/// Lower-triangular L with A = L L^T, or nullopt when A is not numerically
/// positive definite. Only the lower triangle of A is read.
std::optional<Matrix> cholesky(const Matrix& a);

/// Inverse of a nonsingular lower-triangular matrix (forward substitution).
Matrix invert_lower(const Matrix& l);

struct SymmetricEigen {
  std::vector<double> values;
  Matrix vectors;  // column k is the eigenvector for values[k]
  int sweeps = 0;
};

/// Cyclic Jacobi eigensolver for a symmetric matrix. Iterates until the
/// off-diagonal Frobenius norm drops below tolerance * ||A||_F. Throws
/// NumericError if max_sweeps is exhausted.
SymmetricEigen jacobi_eigen(const Matrix& a, bool want_vectors = true,
                            double tolerance = 1e-12, int max_sweeps = 100);

/// Eigenvalues only; same algorithm as jacobi_eigen.
std::vector<double> jacobi_eigenvalues(const Matrix& a, double tolerance = 1e-12);

double frobenius_norm(const Matrix& a);

}  // namespace metricq::linalg

#endif  // METRICQ_LINALG_HPP
