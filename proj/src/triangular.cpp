#include "arraynormal/triangular.hpp"

#include <cmath>
#include <stdexcept>

namespace arraynormal {

namespace {

void check_finite(const std::vector<double>& values, const char* what) {
  for (double v : values)
    if (!std::isfinite(v)) throw std::invalid_argument(std::string(what) + ": non-finite entry");
}

}  // namespace

LowerTriangular::LowerTriangular(std::int64_t q, std::vector<double> packed)
    : q_(q), packed_(std::move(packed)) {
  if (q < 1) throw std::invalid_argument("LowerTriangular: dimension must be >= 1");
  if (static_cast<std::int64_t>(packed_.size()) != q * (q + 1) / 2)
    throw std::invalid_argument("LowerTriangular: packed length must be q(q+1)/2");
  check_finite(packed_, "LowerTriangular");
  for (std::int64_t j = 0; j < q_; ++j)
    if (packed_[packed_index(j, j)] <= 0.0)
      throw std::invalid_argument("LowerTriangular: diagonal must be strictly positive");
}

LowerTriangular LowerTriangular::identity(std::int64_t q) {
  return from_dense(Matrix::Identity(q, q));
}

LowerTriangular LowerTriangular::from_dense(const Matrix& m) {
  if (m.rows() != m.cols() || m.rows() < 1)
    throw std::invalid_argument("LowerTriangular: matrix must be square");
  const std::int64_t q = m.rows();
  const double scale = m.cwiseAbs().maxCoeff();
  for (std::int64_t j = 1; j < q; ++j)
    for (std::int64_t i = 0; i < j; ++i)
      if (std::abs(m(i, j)) > 1e-12 * scale)
        throw std::invalid_argument("LowerTriangular: matrix has entries above the diagonal");
  std::vector<double> packed;
  packed.reserve(static_cast<std::size_t>(q * (q + 1) / 2));
  for (std::int64_t j = 0; j < q; ++j)
    for (std::int64_t i = j; i < q; ++i) packed.push_back(m(i, j));
  return LowerTriangular(q, std::move(packed));
}

Matrix LowerTriangular::dense() const {
  Matrix m = Matrix::Zero(q_, q_);
  for (std::int64_t j = 0; j < q_; ++j)
    for (std::int64_t i = j; i < q_; ++i) m(i, j) = packed_[packed_index(i, j)];
  return m;
}

double LowerTriangular::log_det() const {
  double s = 0.0;
  for (std::int64_t j = 0; j < q_; ++j) s += std::log(packed_[packed_index(j, j)]);
  return s;
}

UpperTriangular::UpperTriangular(std::int64_t q, std::vector<double> packed)
    : q_(q), packed_(std::move(packed)) {
  if (q < 1) throw std::invalid_argument("UpperTriangular: dimension must be >= 1");
  if (static_cast<std::int64_t>(packed_.size()) != q * (q + 1) / 2)
    throw std::invalid_argument("UpperTriangular: packed length must be q(q+1)/2");
  check_finite(packed_, "UpperTriangular");
  for (std::int64_t j = 0; j < q_; ++j)
    if (packed_[j * (j + 1) / 2 + j] <= 0.0)
      throw std::invalid_argument("UpperTriangular: diagonal must be strictly positive");
}

UpperTriangular UpperTriangular::identity(std::int64_t q) {
  Matrix i = Matrix::Identity(q, q);
  return from_dense(i);
}

UpperTriangular UpperTriangular::from_dense(const Matrix& m) {
  if (m.rows() != m.cols() || m.rows() < 1)
    throw std::invalid_argument("UpperTriangular: matrix must be square");
  const std::int64_t q = m.rows();
  const double scale = m.cwiseAbs().maxCoeff();
  for (std::int64_t j = 0; j < q - 1; ++j)
    for (std::int64_t i = j + 1; i < q; ++i)
      if (std::abs(m(i, j)) > 1e-12 * scale)
        throw std::invalid_argument("UpperTriangular: matrix has entries below the diagonal");
  std::vector<double> packed;
  packed.reserve(static_cast<std::size_t>(q * (q + 1) / 2));
  for (std::int64_t j = 0; j < q; ++j)
    for (std::int64_t i = 0; i <= j; ++i) packed.push_back(m(i, j));
  return UpperTriangular(q, std::move(packed));
}

Matrix UpperTriangular::dense() const {
  Matrix m = Matrix::Zero(q_, q_);
  for (std::int64_t j = 0; j < q_; ++j)
    for (std::int64_t i = 0; i <= j; ++i) m(i, j) = packed_[j * (j + 1) / 2 + i];
  return m;
}

double UpperTriangular::log_det() const {
  double s = 0.0;
  for (std::int64_t j = 0; j < q_; ++j) s += std::log(packed_[j * (j + 1) / 2 + j]);
  return s;
}

Matrix chol_lower_dense(const Matrix& m) {
  if (m.rows() != m.cols() || m.rows() < 1)
    throw std::invalid_argument("chol_lower: matrix must be square");
  const std::int64_t q = m.rows();
  const double pivot_floor = 1e-12 * m.diagonal().maxCoeff();
  Matrix l = Matrix::Zero(q, q);
  for (std::int64_t j = 0; j < q; ++j) {
    double d = m(j, j);
    for (std::int64_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
    if (!(d > pivot_floor) || !(pivot_floor > 0.0) || !std::isfinite(d))
      throw std::runtime_error("chol_lower: matrix is not positive definite (pivot <= 1e-12 * max diagonal)");
    l(j, j) = std::sqrt(d);
    for (std::int64_t i = j + 1; i < q; ++i) {
      double s = m(i, j);
      for (std::int64_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / l(j, j);
    }
  }
  return l;
}

Spd::Spd(const Matrix& m)
    : mat_((m + m.transpose()) / 2.0), chol_(LowerTriangular::from_dense(Matrix::Identity(1, 1))) {
  if (m.rows() != m.cols() || m.rows() < 1)
    throw std::invalid_argument("Spd: matrix must be square");
  if (!m.allFinite()) throw std::invalid_argument("Spd: non-finite entry");
  const double scale = m.cwiseAbs().maxCoeff();
  const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-12 * scale)
    throw std::invalid_argument("Spd: matrix is not symmetric within 1e-12 relative");
  chol_ = LowerTriangular::from_dense(chol_lower_dense(mat_));
}

Spd Spd::identity(std::int64_t q) { return Spd(Matrix::Identity(q, q)); }

Matrix Spd::solve(const Matrix& b) const {
  const Matrix l = chol_.dense();
  Matrix y = l.triangularView<Eigen::Lower>().solve(b);
  return l.transpose().triangularView<Eigen::Upper>().solve(y);
}

Matrix Spd::inverse() const { return solve(Matrix::Identity(dim(), dim())); }

Orthogonal::Orthogonal(Matrix q) : mat_(std::move(q)) {
  if (mat_.rows() != mat_.cols() || mat_.rows() < 1)
    throw std::invalid_argument("Orthogonal: matrix must be square");
  const Matrix gram = mat_.transpose() * mat_;
  const double err = (gram - Matrix::Identity(mat_.rows(), mat_.cols())).cwiseAbs().maxCoeff();
  if (!(err <= 1e-10))
    throw std::invalid_argument("Orthogonal: max|Q^T Q - I| exceeds 1e-10");
}

Orthogonal Orthogonal::identity(std::int64_t q) { return Orthogonal(Matrix::Identity(q, q)); }

LowerTriangular chol_lower(const Spd& m) { return m.chol(); }

UpperTriangular chol_upper(const Spd& m) {
  const std::int64_t q = m.dim();
  Matrix flipped(q, q);
  for (std::int64_t i = 0; i < q; ++i)
    for (std::int64_t j = 0; j < q; ++j) flipped(i, j) = m.matrix()(q - 1 - i, q - 1 - j);
  const Matrix l = chol_lower_dense(flipped);
  Matrix u(q, q);
  for (std::int64_t i = 0; i < q; ++i)
    for (std::int64_t j = 0; j < q; ++j) u(i, j) = l(q - 1 - i, q - 1 - j);
  return UpperTriangular::from_dense(u);
}

}  // namespace arraynormal
