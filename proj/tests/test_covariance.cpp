#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>
#include <vector>

#include "arraynormal/covariance.hpp"
#include "arraynormal/rng.hpp"
#include "arraynormal/tensor.hpp"

using namespace arraynormal;

namespace {

double max_abs(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }

Matrix random_gaussian(std::int64_t rows, std::int64_t cols, RngStream& rng) {
  std::normal_distribution<double> normal;
  Matrix m(rows, cols);
  for (std::int64_t j = 0; j < cols; ++j)
    for (std::int64_t i = 0; i < rows; ++i) m(i, j) = normal(rng);
  return m;
}

// Random SPD factor scaled to unit determinant.
Spd random_unit_det_spd(std::int64_t q, RngStream& rng) {
  const Matrix g = random_gaussian(q, q, rng);
  const Spd raw(Matrix(g * g.transpose() + Matrix::Identity(q, q)));
  return Spd(Matrix(raw.matrix() / std::exp(raw.log_det() / static_cast<double>(q))));
}

SeparableCovariance random_covariance(const std::vector<std::int64_t>& dims, double sigma2,
                                      RngStream& rng) {
  std::vector<Spd> factors;
  for (std::int64_t q : dims) factors.push_back(random_unit_det_spd(q, rng));
  return SeparableCovariance(sigma2, std::move(factors));
}

// Random unit-determinant lower-triangular matrix with positive diagonal.
Matrix random_unit_det_lower(std::int64_t q, RngStream& rng) {
  Matrix l = Matrix(random_gaussian(q, q, rng).triangularView<Eigen::Lower>());
  for (std::int64_t i = 0; i < q; ++i) l(i, i) = std::abs(l(i, i)) + 0.5;
  double log_det = 0.0;
  for (std::int64_t i = 0; i < q; ++i) log_det += std::log(l(i, i));
  return l / std::exp(log_det / static_cast<double>(q));
}

// Random unit-determinant dense matrix (not triangular in general).
Matrix random_unit_det_dense(std::int64_t q, RngStream& rng) {
  for (;;) {
    const Matrix g = random_gaussian(q, q, rng);
    const double det = g.determinant();
    if (std::abs(det) < 0.1) continue;
    Matrix a = g / std::pow(std::abs(det), 1.0 / static_cast<double>(q));
    if (a.determinant() < 0.0) a.col(0) *= -1.0;  // flip one column to land in det = +1
    return a;
  }
}

// Dense covariance of vec(X) for one sample slice: sigma^2 kron(S_K .. S_1).
Matrix dense_covariance(const SeparableCovariance& cov) {
  std::vector<Matrix> mats;
  for (std::int64_t k = cov.order() - 1; k >= 0; --k) mats.push_back(cov.factor(k).matrix());
  return cov.sigma2() * kron_list(mats);
}

}  // namespace

TEST_CASE("normalize_factors splits determinants into the scale") {
  // One mode: 4 I_2 has det 16, so the factor becomes I_2 and the scale
  // picks up 16^(1/2) = 4.
  const SeparableCovariance one = normalize_factors(1.0, {Spd(Matrix(4.0 * Matrix::Identity(2, 2)))});
  CHECK(one.sigma2() == doctest::Approx(4.0).epsilon(1e-14));
  CHECK(max_abs(one.factor(0).matrix() - Matrix::Identity(2, 2)) < 1e-14);

  // Two modes: a unit-determinant factor passes through; 3 I_3 contributes 3.
  Matrix d(2, 2);
  d << 2.0, 0.0,
       0.0, 0.5;
  const SeparableCovariance two =
      normalize_factors(2.0, {Spd(d), Spd(Matrix(3.0 * Matrix::Identity(3, 3)))});
  CHECK(two.sigma2() == doctest::Approx(6.0).epsilon(1e-14));
  CHECK(max_abs(two.factor(0).matrix() - d) < 1e-14);
  CHECK(max_abs(two.factor(1).matrix() - Matrix::Identity(3, 3)) < 1e-14);
}

TEST_CASE("separable covariance enforces the unit-determinant constraint") {
  CHECK_THROWS_AS(SeparableCovariance(1.0, {Spd(Matrix(2.0 * Matrix::Identity(2, 2)))}),
                  std::invalid_argument);
  CHECK_THROWS_AS(SeparableCovariance(-1.0, {Spd::identity(2)}), std::invalid_argument);

  const SeparableCovariance id = SeparableCovariance::identity({2, 3});
  CHECK(id.sigma2() == 1.0);
  CHECK(id.order() == 2);
  CHECK(id.dims() == std::vector<std::int64_t>{2, 3});
  CHECK(id.total_dim() == 6);
  // The cached factor is the cholesky of the identity.
  CHECK(max_abs(id.factor_chols()[1].dense() - Matrix::Identity(3, 3)) == 0.0);
}

TEST_CASE("group elements validate and invert") {
  RngStream rng(31, 0);
  CHECK_THROWS_AS(GroupElement(1.0, {Matrix(2.0 * Matrix::Identity(2, 2))}),
                  std::invalid_argument);
  CHECK_THROWS_AS(GroupElement(0.0, {Matrix(Matrix::Identity(2, 2))}), std::invalid_argument);

  const GroupElement g(1.7, {random_unit_det_lower(2, rng), random_unit_det_dense(3, rng)});
  const GroupElement inv = g.inverse();
  CHECK(inv.a() == doctest::Approx(1.0 / 1.7).epsilon(1e-14));
  for (std::int64_t k = 0; k < g.order(); ++k) {
    const Matrix prod = g.mats()[static_cast<std::size_t>(k)] * inv.mats()[static_cast<std::size_t>(k)];
    CHECK(max_abs(prod - Matrix::Identity(prod.rows(), prod.cols())) < 1e-12);
  }
}

TEST_CASE("log density matches the dense multivariate normal formula") {
  RngStream rng(32, 0);
  const SeparableCovariance cov = random_covariance({2, 3}, 1.7, rng);
  const std::int64_t n = 2;
  RngStream data_rng(33, 0);
  const Tensor x = sample_array_normal(cov, n, data_rng);

  const Matrix c = dense_covariance(cov);
  const Eigen::LLT<Matrix> llt(c);
  const double p = static_cast<double>(cov.total_dim());
  double expected = 0.0;
  const Matrix xm = matricize(x, 2);  // rows index the samples
  for (std::int64_t i = 0; i < n; ++i) {
    const Vector xi = xm.row(i).transpose();
    const Vector solved = llt.solve(xi);
    const double log_det = 2.0 * Matrix(llt.matrixL()).diagonal().array().log().sum();
    expected += -0.5 * p * std::log(2.0 * std::numbers::pi) - 0.5 * log_det -
                0.5 * xi.dot(solved);
  }

  const double got = log_density(x, cov);
  CHECK(std::abs(got - expected) <= 1e-8 * (1.0 + std::abs(expected)));
}

TEST_CASE("array normal sampler reproduces the separable covariance") {
  RngStream rng(34, 0);
  const SeparableCovariance cov = random_covariance({2, 3}, 2.0, rng);
  const std::int64_t n = 40000;
  RngStream data_rng(35, 0);
  const Tensor x = sample_array_normal(cov, n, data_rng);

  const Matrix xm = matricize(x, 2);  // n x 6, one vectorized slice per row
  const Matrix emp = xm.transpose() * xm / static_cast<double>(n);
  const Matrix exact = dense_covariance(cov);
  CHECK(max_abs(emp - exact) < 0.05 * max_abs(exact));

  // Same stream, same draw.
  RngStream data_rng2(35, 0);
  const Tensor x2 = sample_array_normal(cov, n, data_rng2);
  CHECK(max_abs(Matrix(matricize(x2, 2) - xm)) == 0.0);
}

TEST_CASE("group action on data is the scaled tucker product") {
  RngStream rng(36, 0);
  const GroupElement g(1.3, {random_unit_det_lower(2, rng), random_unit_det_dense(3, rng)});

  std::normal_distribution<double> normal;
  Tensor x{Shape({2, 3, 4})};
  for (std::int64_t i = 0; i < x.size(); ++i) x[i] = normal(rng);

  const Tensor moved = act_on_data(g, x);
  Tensor expected = tucker_product_leading(x, g.mats());
  for (std::int64_t i = 0; i < expected.size(); ++i) expected[i] *= 1.3;
  double worst = 0.0;
  for (std::int64_t i = 0; i < moved.size(); ++i)
    worst = std::max(worst, std::abs(moved[i] - expected[i]));
  CHECK(worst == 0.0);

  // Order-K data (no sample mode) is accepted too.
  Tensor slice{Shape({2, 3})};
  for (std::int64_t i = 0; i < slice.size(); ++i) slice[i] = normal(rng);
  CHECK_NOTHROW(act_on_data(g, slice));
}

TEST_CASE("group action on parameters transforms densities with the jacobian") {
  RngStream rng(37, 0);
  const std::vector<std::int64_t> dims{2, 3};
  const SeparableCovariance cov = random_covariance(dims, 1.4, rng);
  const GroupElement g(1.3, {random_unit_det_lower(2, rng), random_unit_det_lower(3, rng)});
  const std::int64_t n = 3;
  RngStream data_rng(38, 0);
  const Tensor x = sample_array_normal(cov, n, data_rng);

  const double lhs = log_density(act_on_data(g, x), act_on_param(g, cov));
  const double np = static_cast<double>(n * cov.total_dim());
  const double rhs = log_density(x, cov) - np * std::log(g.a());
  CHECK(std::abs(lhs - rhs) <= 1e-9 * (1.0 + std::abs(rhs)));

  // Acting and acting back recovers the parameter.
  const SeparableCovariance round = act_on_param(g.inverse(), act_on_param(g, cov));
  CHECK(round.sigma2() == doctest::Approx(cov.sigma2()).epsilon(1e-12));
  for (std::int64_t k = 0; k < cov.order(); ++k)
    CHECK(max_abs(round.factor(k).matrix() - cov.factor(k).matrix()) <
          1e-11 * max_abs(cov.factor(k).matrix()));
}

TEST_CASE("losses vanish exactly at the truth and are positive elsewhere") {
  RngStream rng(39, 0);
  const SeparableCovariance truth = random_covariance({2, 3}, 1.6, rng);
  CHECK(std::abs(multiway_stein_loss(truth, truth)) < 1e-10);
  CHECK(std::abs(weighted_stein_loss(truth, truth, {1.0, 2.0})) < 1e-10);
  CHECK(std::abs(stein_loss_full(truth, truth)) < 1e-10);

  const SeparableCovariance other = random_covariance({2, 3}, 1.1, rng);
  CHECK(multiway_stein_loss(truth, other) > 0.0);
  CHECK(stein_loss_full(truth, other) > 0.0);
}

TEST_CASE("scalar stein loss reduces to c - log c - 1") {
  const SeparableCovariance truth(1.0, {Spd::identity(1)});
  const double c = 2.7;
  const SeparableCovariance est(c, {Spd::identity(1)});
  const double expected = c - std::log(c) - 1.0;
  CHECK(multiway_stein_loss(truth, est) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(stein_loss_full(truth, est) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("frozen diagonal loss values") {
  Matrix d(2, 2);
  d << 2.0, 0.0,
       0.0, 0.5;
  const SeparableCovariance truth(1.0, {Spd::identity(2)});
  const SeparableCovariance est(1.0, {Spd(d)});
  // One mode, p = 2: trace term (p/p_1) tr(S) = 2.5, log term zero, minus 2.
  CHECK(multiway_stein_loss(truth, est) == doctest::Approx(0.5).epsilon(1e-12));
  // Weight 3: (3/2) * 2.5 - 3 = 0.75.
  CHECK(weighted_stein_loss(truth, est, {3.0}) == doctest::Approx(0.75).epsilon(1e-12));

  CHECK_THROWS_AS(weighted_stein_loss(truth, est, {1.0, 1.0}), std::invalid_argument);
  CHECK_THROWS_AS(weighted_stein_loss(truth, est, {-1.0}), std::invalid_argument);
}

TEST_CASE("equal weights p recover the multiway loss") {
  RngStream rng(40, 0);
  const SeparableCovariance truth = random_covariance({2, 3, 2}, 1.2, rng);
  const SeparableCovariance est = random_covariance({2, 3, 2}, 0.8, rng);
  const double p = 12.0;
  CHECK(weighted_stein_loss(truth, est, {p, p, p}) ==
        doctest::Approx(multiway_stein_loss(truth, est)).epsilon(1e-12));
}

TEST_CASE("multiway loss is invariant under the unit-determinant group") {
  RngStream rng(41, 0);
  const std::vector<std::int64_t> dims{2, 3};
  const SeparableCovariance truth = random_covariance(dims, 1.5, rng);
  const SeparableCovariance est = random_covariance(dims, 0.7, rng);
  const double base = multiway_stein_loss(truth, est);

  for (int rep = 0; rep < 10; ++rep) {
    // Alternate triangular and general unit-determinant factors.
    std::vector<Matrix> mats;
    for (std::int64_t q : dims)
      mats.push_back(rep % 2 == 0 ? random_unit_det_lower(q, rng)
                                  : random_unit_det_dense(q, rng));
    const GroupElement g(0.5 + 0.3 * rep, std::move(mats));
    const double moved = multiway_stein_loss(act_on_param(g, truth), act_on_param(g, est));
    CHECK(std::abs(moved - base) <= 1e-9 * (1.0 + std::abs(base)));
  }
}

TEST_CASE("full stein loss agrees with a dense eigen evaluation") {
  RngStream rng(42, 0);
  const SeparableCovariance truth = random_covariance({2, 3}, 1.5, rng);
  const SeparableCovariance est = random_covariance({2, 3}, 0.9, rng);

  const Matrix v = dense_covariance(truth);
  const Matrix s = dense_covariance(est);
  const Eigen::PartialPivLU<Matrix> lu(v);
  const Matrix ratio = lu.solve(s);
  const double expected =
      ratio.trace() - std::log(ratio.determinant()) - static_cast<double>(v.rows());

  CHECK(stein_loss_full(truth, est) == doctest::Approx(expected).epsilon(1e-9));
}
