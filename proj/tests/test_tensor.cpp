#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "arraynormal/rng.hpp"
#include "arraynormal/tensor.hpp"

using namespace arraynormal;

namespace {

Tensor iota_tensor(const std::vector<std::int64_t>& dims) {
  Tensor x{Shape(dims)};
  for (std::int64_t i = 0; i < x.size(); ++i) x[i] = static_cast<double>(i + 1);
  return x;
}

Tensor random_tensor(const std::vector<std::int64_t>& dims, RngStream& rng) {
  std::normal_distribution<double> normal;
  Tensor x{Shape(dims)};
  for (std::int64_t i = 0; i < x.size(); ++i) x[i] = normal(rng);
  return x;
}

Matrix random_matrix(std::int64_t rows, std::int64_t cols, RngStream& rng) {
  std::normal_distribution<double> normal;
  Matrix m(rows, cols);
  for (std::int64_t j = 0; j < cols; ++j)
    for (std::int64_t i = 0; i < rows; ++i) m(i, j) = normal(rng);
  return m;
}

double max_abs(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }

double max_abs_diff(const Tensor& a, const Tensor& b) {
  REQUIRE(a.shape() == b.shape());
  double worst = 0.0;
  for (std::int64_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
  return worst;
}

}  // namespace

TEST_CASE("shape validates extents and reports sizes") {
  const Shape s({2, 3, 4});
  CHECK(s.order() == 3);
  CHECK(s.num_elements() == 24);
  CHECK(s.dim(1) == 3);
  CHECK(s.complement_size(0) == 12);
  CHECK(s.complement_size(2) == 6);
  CHECK_THROWS_AS(Shape({2, 0, 3}), std::invalid_argument);
  CHECK_THROWS_AS(Shape(std::vector<std::int64_t>{}), std::invalid_argument);
  // ~2^62 entries in total must be rejected as an int64 overflow hazard.
  CHECK_THROWS_AS(Shape({1LL << 31, 1LL << 31, 4}), std::invalid_argument);
}

TEST_CASE("tensor linear layout is column major with the first index fastest") {
  const Tensor x = iota_tensor({2, 3, 2});
  CHECK(x.at({0, 0, 0}) == 1.0);
  CHECK(x.at({1, 0, 0}) == 2.0);
  CHECK(x.at({0, 1, 0}) == 3.0);
  CHECK(x.at({0, 0, 1}) == 7.0);
  CHECK(x.at({1, 2, 1}) == 12.0);
  CHECK(x.linear_index({1, 2, 1}) == 1 + 2 * 2 + 1 * 6);
  CHECK_THROWS_AS((void)x.at({2, 0, 0}), std::out_of_range);
  CHECK_THROWS_AS((void)x.at({0, 0}), std::invalid_argument);
}

TEST_CASE("matricization of the 2x2x2 counting tensor matches the frozen layout") {
  const Tensor x = iota_tensor({2, 2, 2});

  Matrix m0(2, 4), m1(2, 4), m2(2, 4);
  m0 << 1, 3, 5, 7,
        2, 4, 6, 8;
  m1 << 1, 2, 5, 6,
        3, 4, 7, 8;
  m2 << 1, 2, 3, 4,
        5, 6, 7, 8;

  CHECK(max_abs(matricize(x, 0) - m0) == 0.0);
  CHECK(max_abs(matricize(x, 1) - m1) == 0.0);
  CHECK(max_abs(matricize(x, 2) - m2) == 0.0);
  CHECK_THROWS_AS(matricize(x, 3), std::out_of_range);
}

TEST_CASE("unmatricize inverts matricize on every mode") {
  RngStream rng(11, 0);
  const Tensor x = random_tensor({3, 2, 4, 2}, rng);
  for (std::int64_t k = 0; k < x.order(); ++k) {
    const Tensor back = unmatricize(matricize(x, k), x.shape(), k);
    CHECK(max_abs_diff(back, x) == 0.0);
  }
  CHECK_THROWS_AS(unmatricize(Matrix::Zero(3, 5), x.shape(), 0), std::invalid_argument);
}

TEST_CASE("mode multiply acts as a matrix product on the matricization") {
  RngStream rng(12, 0);
  const Tensor x = random_tensor({3, 4, 2}, rng);
  for (std::int64_t k = 0; k < x.order(); ++k) {
    const Matrix a = random_matrix(5, x.dim(k), rng);
    const Tensor y = mode_multiply(x, a, k);
    CHECK(y.dim(k) == 5);
    CHECK(max_abs(matricize(y, k) - a * matricize(x, k)) < 1e-13);
  }
  CHECK_THROWS_AS(mode_multiply(x, Matrix::Zero(2, 2), 0), std::invalid_argument);
}

TEST_CASE("tucker product matches the kronecker-vectorization identity") {
  RngStream rng(13, 0);
  const Tensor x = random_tensor({2, 3, 2}, rng);
  const Matrix a0 = random_matrix(2, 2, rng);
  const Matrix a1 = random_matrix(3, 3, rng);
  const Matrix a2 = random_matrix(2, 2, rng);

  const Tensor y = tucker_product_leading(x, {a0, a1, a2});
  const Vector expected = kron_list({a2, a1, a0}) * x.data();
  CHECK((y.data() - expected).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("tucker product leaves unlisted modes untouched and rejects duplicates") {
  RngStream rng(14, 0);
  const Tensor x = random_tensor({2, 3, 4}, rng);
  const Matrix a1 = random_matrix(3, 3, rng);

  const Tensor via_pair = tucker_product(x, {{1, a1}});
  const Tensor via_mode = mode_multiply(x, a1, 1);
  CHECK(max_abs_diff(via_pair, via_mode) == 0.0);

  CHECK_THROWS_AS(tucker_product(x, {{1, a1}, {1, a1}}), std::invalid_argument);
}

TEST_CASE("tucker products compose mode by mode") {
  RngStream rng(15, 0);
  const Tensor x = random_tensor({3, 2, 2}, rng);
  const Matrix a = random_matrix(3, 3, rng);
  const Matrix b = random_matrix(3, 3, rng);
  const Tensor twice = tucker_product(tucker_product(x, {{0, a}}), {{0, b}});
  const Tensor once = tucker_product(x, {{0, Matrix(b * a)}});
  CHECK(max_abs_diff(twice, once) < 1e-12);
}

TEST_CASE("tucker solve with lower factors inverts the tucker product") {
  RngStream rng(16, 0);
  const Tensor x = random_tensor({3, 2, 4}, rng);
  std::vector<LowerTriangular> factors;
  std::vector<Matrix> dense;
  for (std::int64_t k = 0; k < 2; ++k) {
    const Matrix g = random_matrix(x.dim(k), x.dim(k), rng);
    Matrix l = Matrix(g.triangularView<Eigen::Lower>());
    for (std::int64_t i = 0; i < l.rows(); ++i) l(i, i) = std::abs(l(i, i)) + 1.0;
    factors.push_back(LowerTriangular::from_dense(l));
    dense.push_back(l);
  }
  // Leading-mode solve, skipping none: applies L_k^{-1} on modes 0 and 1.
  const Tensor z = tucker_solve_lower_leading(x, factors);
  const Tensor back = tucker_product_leading(z, dense);
  CHECK(max_abs_diff(back, x) < 1e-10);

  // Skipping a mode leaves it untouched.
  const Tensor z0 = tucker_solve_lower_leading(x, factors, 1);
  const Tensor expect0 = tucker_solve_lower(x, {{0, factors[0]}});
  CHECK(max_abs_diff(z0, expect0) == 0.0);
}

TEST_CASE("helmert sub-matrix rows are the frozen contrasts") {
  const Matrix h = helmert_submatrix(3);
  REQUIRE(h.rows() == 2);
  REQUIRE(h.cols() == 3);
  const double r2 = 1.0 / std::sqrt(2.0), r6 = 1.0 / std::sqrt(6.0);
  Matrix expected(2, 3);
  expected << r2, -r2, 0.0,
              r6, r6, -2.0 * r6;
  CHECK(max_abs(h - expected) < 1e-15);
}

TEST_CASE("helmert sub-matrix has orthonormal rows orthogonal to the ones vector") {
  for (std::int64_t n : {2, 3, 5, 8}) {
    const Matrix h = helmert_submatrix(n);
    CHECK(max_abs(h * h.transpose() - Matrix::Identity(n - 1, n - 1)) < 1e-14);
    CHECK(max_abs(h * Vector::Ones(n)) < 1e-14);
  }
  CHECK_THROWS_AS(helmert_submatrix(1), std::invalid_argument);
}

TEST_CASE("center_samples is the helmert product on the trailing mode") {
  RngStream rng(17, 0);
  const Tensor x = random_tensor({2, 3, 5}, rng);
  const Tensor centered = center_samples(x);
  const Tensor expected = mode_multiply(x, helmert_submatrix(5), 2);
  CHECK(max_abs_diff(centered, expected) == 0.0);
  CHECK(centered.dim(2) == 4);

  // A pure mean (identical slices) is annihilated.
  Tensor constant{Shape({2, 3, 5})};
  for (std::int64_t i = 0; i < constant.size(); ++i)
    constant[i] = static_cast<double>(i % 6);
  CHECK(frob_norm_sq(center_samples(constant)) < 1e-24);

  CHECK_THROWS_AS(center_samples(random_tensor({2, 3, 1}, rng)), std::invalid_argument);
}

TEST_CASE("kron_list multiplies dimensions in order and enforces the cap") {
  Matrix a(2, 2);
  a << 1, 2,
       3, 4;
  const Matrix k = kron_list({a, Matrix::Identity(2, 2)});
  REQUIRE(k.rows() == 4);
  // kron(a, I) repeats a entry-wise over 2x2 identity blocks.
  CHECK(k(0, 0) == 1.0);
  CHECK(k(1, 1) == 1.0);
  CHECK(k(0, 2) == 2.0);
  CHECK(k(2, 0) == 3.0);
  CHECK(k(2, 2) == 4.0);
  CHECK(k(0, 1) == 0.0);

  CHECK_THROWS_AS(kron_list({Matrix::Identity(70, 70), Matrix::Identity(70, 70)}),
                  std::invalid_argument);
  CHECK_THROWS_AS(kron_list({Matrix::Zero(2, 3)}), std::invalid_argument);
  CHECK_THROWS_AS(kron_list({}), std::invalid_argument);
}

TEST_CASE("frobenius norm of the counting tensor") {
  CHECK(frob_norm_sq(iota_tensor({2, 2, 2})) == 204.0);
}
