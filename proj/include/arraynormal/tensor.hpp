#pragma once

#include <cstdint>
#include <vector>

#include "arraynormal/triangular.hpp"

namespace arraynormal {

// Dimensions of a K-way array. Every extent must be >= 1; K >= 1. When the
// array holds a sample of n replicated arrays, the sample index is the
// trailing mode by convention.
class Shape {
 public:
  Shape() = default;
  explicit Shape(std::vector<std::int64_t> dims);

  std::int64_t order() const { return static_cast<std::int64_t>(dims_.size()); }
  std::int64_t dim(std::int64_t k) const { return dims_.at(static_cast<std::size_t>(k)); }
  const std::vector<std::int64_t>& dims() const { return dims_; }

  // Total number of entries; construction fails if the product overflows.
  std::int64_t num_elements() const { return num_elements_; }

  // Product of all extents except mode k.
  std::int64_t complement_size(std::int64_t k) const;

  bool operator==(const Shape& other) const { return dims_ == other.dims_; }
  bool operator!=(const Shape& other) const { return dims_ != other.dims_; }

 private:
  std::vector<std::int64_t> dims_;
  std::int64_t num_elements_ = 0;
};

// Dense K-way array of doubles stored in column-major (first-index-fastest)
// vectorized order: entry (i_0, ..., i_{K-1}) lives at linear position
// i_0 + i_1*p_0 + i_2*p_0*p_1 + ...  All mode indices in this API are
// 0-based.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape);  // zero-initialized
  Tensor(Shape shape, Vector data);

  const Shape& shape() const { return shape_; }
  std::int64_t order() const { return shape_.order(); }
  std::int64_t dim(std::int64_t k) const { return shape_.dim(k); }
  std::int64_t size() const { return shape_.num_elements(); }

  double& operator[](std::int64_t linear) { return data_[linear]; }
  double operator[](std::int64_t linear) const { return data_[linear]; }

  double& at(const std::vector<std::int64_t>& index) { return data_[linear_index(index)]; }
  double at(const std::vector<std::int64_t>& index) const { return data_[linear_index(index)]; }

  std::int64_t linear_index(const std::vector<std::int64_t>& index) const;

  Vector& data() { return data_; }
  const Vector& data() const { return data_; }

 private:
  Shape shape_;
  Vector data_;
};

// One factor of a Tucker product, tagged with the mode it acts on.
struct ModeMatrix {
  std::int64_t mode;
  Matrix matrix;
};

struct ModeLower {
  std::int64_t mode;
  LowerTriangular factor;
};

// Mode-k matricization: the p_k x (prod_{j != k} p_j) matrix whose row i
// holds slice i of x along mode k; columns run over the remaining modes in
// lexicographic order with the lowest-numbered remaining mode varying
// fastest. This convention is frozen: it is the one under which
// matricize(tucker_product(X, all modes), k) = A_k X_(k) (A_{K-1} x ... x
// A_{k+1} x A_{k-1} x ... x A_0)^T holds exactly.
Matrix matricize(const Tensor& x, std::int64_t mode);

// Inverse of matricize: folds a p_k x (prod_{j != k} p_j) matrix back into a
// tensor of the given shape along the given mode.
Tensor unmatricize(const Matrix& m, const Shape& shape, std::int64_t mode);

// Mode-k product: contracts a (rows x p_k) matrix against the k-th index,
// replacing that extent by a.rows().
Tensor mode_multiply(const Tensor& x, const Matrix& a, std::int64_t mode);

// Tucker product: multiplies x along each listed mode by its factor; modes
// not listed act as identity. Under column-major vectorization,
// vec(X x {A_0,...,A_{K-1}}) = (A_{K-1} x ... x A_0) vec(X) with x the
// Kronecker product. Duplicate modes are rejected.
Tensor tucker_product(const Tensor& x, const std::vector<ModeMatrix>& factors);

// Convenience: factors[k] applied along mode k for k = 0..factors.size()-1;
// trailing modes (e.g. a sample mode) act as identity.
Tensor tucker_product_leading(const Tensor& x, const std::vector<Matrix>& factors);

// Applies the inverse of each lower-triangular factor along its mode by
// forward substitution (no explicit inverses); modes not listed act as
// identity. Equals tucker_product with the inverted factors.
Tensor tucker_solve_lower(const Tensor& x, const std::vector<ModeLower>& factors);

// Convenience: solves with factors[k] along mode k for every leading mode,
// optionally skipping one mode (pass skip_mode = -1 to skip none).
Tensor tucker_solve_lower_leading(const Tensor& x, const std::vector<LowerTriangular>& factors,
                                  std::int64_t skip_mode = -1);

// (n-1) x n Helmert sub-matrix H: orthonormal rows, each orthogonal to the
// all-ones vector, so H H^T = I_{n-1} and H 1_n = 0. Row i (0-based) is
// (1, ..., 1, -(i+1), 0, ..., 0) / sqrt((i+1)(i+2)) with i+1 leading ones.
Matrix helmert_submatrix(std::int64_t n);

// Removes an unknown mean shared across the trailing sample mode (size n)
// by multiplying the Helmert sub-matrix along that mode. The result has
// n-1 mean-zero slices with the original separable covariance. n >= 2.
Tensor center_samples(const Tensor& x);

// Kronecker product of the listed square matrices, in the listed order
// (pass M_{K-1}, ..., M_0 to match the vectorization identity). The result
// dimension is capped (default 4096) since this exists for small-scale
// oracles and the full-matrix Stein loss.
Matrix kron_list(const std::vector<Matrix>& mats, std::int64_t cap = 4096);

// Sum of squared entries.
double frob_norm_sq(const Tensor& x);

}  // namespace arraynormal
