#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace arraynormal {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Square lower-triangular matrix with strictly positive diagonal, stored
// packed column-major: column j contributes entries (j,j),(j+1,j),...,(q-1,j).
class LowerTriangular {
 public:
  LowerTriangular(std::int64_t q, std::vector<double> packed);
  static LowerTriangular identity(std::int64_t q);
  // Takes the lower triangle of m; entries above the diagonal must be
  // negligible (|m(i,j)| <= 1e-12 * max|m| for i < j) so misuse is caught.
  static LowerTriangular from_dense(const Matrix& m);

  std::int64_t dim() const { return q_; }

  double operator()(std::int64_t i, std::int64_t j) const {
    return i >= j ? packed_[packed_index(i, j)] : 0.0;
  }

  Matrix dense() const;

  // Sum of log diagonal entries, so det = exp(log_det) without overflow.
  double log_det() const;

  const std::vector<double>& packed() const { return packed_; }

 private:
  std::int64_t packed_index(std::int64_t i, std::int64_t j) const {
    return j * q_ - j * (j - 1) / 2 + (i - j);
  }

  std::int64_t q_ = 0;
  std::vector<double> packed_;
};

// Square upper-triangular matrix with strictly positive diagonal, packed
// column-major: column j contributes entries (0,j),...,(j,j).
class UpperTriangular {
 public:
  UpperTriangular(std::int64_t q, std::vector<double> packed);
  static UpperTriangular identity(std::int64_t q);
  static UpperTriangular from_dense(const Matrix& m);

  std::int64_t dim() const { return q_; }

  double operator()(std::int64_t i, std::int64_t j) const {
    return i <= j ? packed_[j * (j + 1) / 2 + i] : 0.0;
  }

  Matrix dense() const;
  double log_det() const;

  const std::vector<double>& packed() const { return packed_; }

 private:
  std::int64_t q_ = 0;
  std::vector<double> packed_;
};

// Symmetric positive definite matrix. Construction validates symmetry
// (max asymmetry <= 1e-12 * max|entry|), stores the symmetrized matrix, and
// runs a Cholesky factorization whose success certifies positive
// definiteness; the factor is cached for reuse.
class Spd {
 public:
  explicit Spd(const Matrix& m);
  static Spd identity(std::int64_t q);

  std::int64_t dim() const { return mat_.rows(); }
  const Matrix& matrix() const { return mat_; }
  const LowerTriangular& chol() const { return chol_; }

  double log_det() const { return 2.0 * chol_.log_det(); }
  // Solves M y = b using the cached factor.
  Matrix solve(const Matrix& b) const;
  Matrix inverse() const;

 private:
  Matrix mat_;
  LowerTriangular chol_;
};

// Orthogonal matrix; construction validates max|Q^T Q - I| <= 1e-10.
class Orthogonal {
 public:
  explicit Orthogonal(Matrix q);
  static Orthogonal identity(std::int64_t q);

  std::int64_t dim() const { return mat_.rows(); }
  const Matrix& matrix() const { return mat_; }

 private:
  Matrix mat_;
};

// Lower Cholesky factor L with L L^T = M. Fails (throws) when a pivot drops
// to or below 1e-12 times the largest diagonal entry of M.
LowerTriangular chol_lower(const Spd& m);

// Upper-triangular U with U U^T = M, computed as J * chol_lower(J M J) * J
// with J the anti-diagonal exchange permutation, so one Cholesky kernel
// serves both orientations.
UpperTriangular chol_upper(const Spd& m);

// Internal kernel shared by Spd validation and the public factorizations;
// exposed for reuse, throws std::runtime_error on a non-positive pivot.
Matrix chol_lower_dense(const Matrix& m);

}  // namespace arraynormal
