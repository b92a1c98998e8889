#include "arraynormal/tensor.hpp"

#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>
#include <string>

namespace arraynormal {

namespace {

std::int64_t checked_product(const std::vector<std::int64_t>& dims) {
  std::int64_t n = 1;
  for (std::int64_t d : dims) {
    if (d < 1) throw std::invalid_argument("Shape: every extent must be >= 1");
    if (n > std::numeric_limits<std::int64_t>::max() / d)
      throw std::invalid_argument("Shape: number of elements overflows int64");
    n *= d;
  }
  return n;
}

}  // namespace

Shape::Shape(std::vector<std::int64_t> dims) : dims_(std::move(dims)) {
  if (dims_.empty()) throw std::invalid_argument("Shape: order must be >= 1");
  num_elements_ = checked_product(dims_);
}

std::int64_t Shape::complement_size(std::int64_t k) const {
  if (k < 0 || k >= order()) throw std::out_of_range("Shape: mode out of range");
  return num_elements_ / dims_[static_cast<std::size_t>(k)];
}

Tensor::Tensor(Shape shape) : shape_(std::move(shape)) {
  data_ = Vector::Zero(shape_.num_elements());
}

Tensor::Tensor(Shape shape, Vector data) : shape_(std::move(shape)), data_(std::move(data)) {
  if (data_.size() != shape_.num_elements())
    throw std::invalid_argument("Tensor: data length does not match shape");
}

std::int64_t Tensor::linear_index(const std::vector<std::int64_t>& index) const {
  if (static_cast<std::int64_t>(index.size()) != order())
    throw std::invalid_argument("Tensor: index order mismatch");
  std::int64_t linear = 0;
  std::int64_t stride = 1;
  for (std::int64_t k = 0; k < order(); ++k) {
    const std::int64_t i = index[static_cast<std::size_t>(k)];
    if (i < 0 || i >= dim(k)) throw std::out_of_range("Tensor: index out of range");
    linear += i * stride;
    stride *= dim(k);
  }
  return linear;
}

namespace {

// Extents below and above mode k; the linear position of (inner, i_k, outer)
// is inner + i_k*n_inner + outer*n_inner*p_k, and the matricized column is
// inner + outer*n_inner (remaining modes lexicographic, lowest fastest).
struct ModeSplit {
  std::int64_t inner;  // prod of extents before mode k
  std::int64_t pk;     // extent of mode k
  std::int64_t outer;  // prod of extents after mode k
};

ModeSplit split_at(const Shape& shape, std::int64_t mode) {
  if (mode < 0 || mode >= shape.order())
    throw std::out_of_range("tensor: mode out of range");
  ModeSplit s{1, shape.dim(mode), 1};
  for (std::int64_t k = 0; k < mode; ++k) s.inner *= shape.dim(k);
  for (std::int64_t k = mode + 1; k < shape.order(); ++k) s.outer *= shape.dim(k);
  return s;
}

void check_distinct_modes(const std::vector<std::int64_t>& modes, std::int64_t order,
                          const char* what) {
  std::set<std::int64_t> seen;
  for (std::int64_t m : modes) {
    if (m < 0 || m >= order) throw std::out_of_range(std::string(what) + ": mode out of range");
    if (!seen.insert(m).second)
      throw std::invalid_argument(std::string(what) + ": duplicate mode");
  }
}

}  // namespace

Matrix matricize(const Tensor& x, std::int64_t mode) {
  const ModeSplit s = split_at(x.shape(), mode);
  Matrix m(s.pk, s.inner * s.outer);
  const Vector& v = x.data();
  for (std::int64_t outer = 0; outer < s.outer; ++outer) {
    const std::int64_t slab = outer * s.inner * s.pk;
    for (std::int64_t r = 0; r < s.pk; ++r) {
      const std::int64_t base = slab + r * s.inner;
      for (std::int64_t inner = 0; inner < s.inner; ++inner) {
        m(r, inner + outer * s.inner) = v[base + inner];
      }
    }
  }
  return m;
}

Tensor unmatricize(const Matrix& m, const Shape& shape, std::int64_t mode) {
  const ModeSplit s = split_at(shape, mode);
  if (m.rows() != s.pk || m.cols() != s.inner * s.outer)
    throw std::invalid_argument("unmatricize: matrix dimensions do not match shape/mode");
  Tensor x(shape);
  Vector& v = x.data();
  for (std::int64_t outer = 0; outer < s.outer; ++outer) {
    const std::int64_t slab = outer * s.inner * s.pk;
    for (std::int64_t r = 0; r < s.pk; ++r) {
      const std::int64_t base = slab + r * s.inner;
      for (std::int64_t inner = 0; inner < s.inner; ++inner) {
        v[base + inner] = m(r, inner + outer * s.inner);
      }
    }
  }
  return x;
}

Tensor mode_multiply(const Tensor& x, const Matrix& a, std::int64_t mode) {
  if (mode < 0 || mode >= x.order()) throw std::out_of_range("mode_multiply: mode out of range");
  if (a.cols() != x.dim(mode))
    throw std::invalid_argument("mode_multiply: factor columns must equal the mode extent");
  std::vector<std::int64_t> dims = x.shape().dims();
  dims[static_cast<std::size_t>(mode)] = a.rows();
  const Matrix y = a * matricize(x, mode);
  return unmatricize(y, Shape(dims), mode);
}

Tensor tucker_product(const Tensor& x, const std::vector<ModeMatrix>& factors) {
  std::vector<std::int64_t> modes;
  for (const ModeMatrix& f : factors) modes.push_back(f.mode);
  check_distinct_modes(modes, x.order(), "tucker_product");
  Tensor y = x;
  for (const ModeMatrix& f : factors) y = mode_multiply(y, f.matrix, f.mode);
  return y;
}

Tensor tucker_product_leading(const Tensor& x, const std::vector<Matrix>& factors) {
  if (static_cast<std::int64_t>(factors.size()) > x.order())
    throw std::invalid_argument("tucker_product_leading: more factors than modes");
  std::vector<ModeMatrix> pairs;
  pairs.reserve(factors.size());
  for (std::size_t k = 0; k < factors.size(); ++k)
    pairs.push_back({static_cast<std::int64_t>(k), factors[k]});
  return tucker_product(x, pairs);
}

Tensor tucker_solve_lower(const Tensor& x, const std::vector<ModeLower>& factors) {
  std::vector<std::int64_t> modes;
  for (const ModeLower& f : factors) modes.push_back(f.mode);
  check_distinct_modes(modes, x.order(), "tucker_solve_lower");
  Tensor y = x;
  for (const ModeLower& f : factors) {
    if (f.factor.dim() != y.dim(f.mode))
      throw std::invalid_argument("tucker_solve_lower: factor dimension must match the mode");
    const Matrix l = f.factor.dense();
    const Matrix solved = l.triangularView<Eigen::Lower>().solve(matricize(y, f.mode));
    y = unmatricize(solved, y.shape(), f.mode);
  }
  return y;
}

Tensor tucker_solve_lower_leading(const Tensor& x, const std::vector<LowerTriangular>& factors,
                                  std::int64_t skip_mode) {
  if (static_cast<std::int64_t>(factors.size()) > x.order())
    throw std::invalid_argument("tucker_solve_lower_leading: more factors than modes");
  std::vector<ModeLower> pairs;
  for (std::size_t k = 0; k < factors.size(); ++k) {
    if (static_cast<std::int64_t>(k) == skip_mode) continue;
    pairs.push_back({static_cast<std::int64_t>(k), factors[k]});
  }
  return tucker_solve_lower(x, pairs);
}

Matrix helmert_submatrix(std::int64_t n) {
  if (n < 2) throw std::invalid_argument("helmert_submatrix: n must be >= 2");
  Matrix h = Matrix::Zero(n - 1, n);
  for (std::int64_t i = 0; i < n - 1; ++i) {
    const double scale =
        1.0 / std::sqrt(static_cast<double>(i + 1) * static_cast<double>(i + 2));
    for (std::int64_t j = 0; j <= i; ++j) h(i, j) = scale;
    h(i, i + 1) = -static_cast<double>(i + 1) * scale;
  }
  return h;
}

Tensor center_samples(const Tensor& x) {
  const std::int64_t sample_mode = x.order() - 1;
  const std::int64_t n = x.dim(sample_mode);
  if (n < 2) throw std::invalid_argument("center_samples: need at least two samples");
  return mode_multiply(x, helmert_submatrix(n), sample_mode);
}

Matrix kron_list(const std::vector<Matrix>& mats, std::int64_t cap) {
  if (mats.empty()) throw std::invalid_argument("kron_list: need at least one factor");
  std::int64_t dim = 1;
  for (const Matrix& f : mats) {
    if (f.rows() != f.cols() || f.rows() < 1)
      throw std::invalid_argument("kron_list: factors must be square");
    dim *= f.rows();
    if (dim > cap)
      throw std::invalid_argument("kron_list: result dimension exceeds the cap of " +
                                  std::to_string(cap));
  }
  Matrix result = mats.front();
  for (std::size_t i = 1; i < mats.size(); ++i) {
    const Matrix& b = mats[i];
    Matrix next(result.rows() * b.rows(), result.cols() * b.cols());
    for (std::int64_t r = 0; r < result.rows(); ++r)
      for (std::int64_t c = 0; c < result.cols(); ++c)
        next.block(r * b.rows(), c * b.cols(), b.rows(), b.cols()) = result(r, c) * b;
    result = std::move(next);
  }
  return result;
}

double frob_norm_sq(const Tensor& x) { return x.data().squaredNorm(); }

}  // namespace arraynormal
