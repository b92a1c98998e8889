#include "arraynormal/samplers.hpp"

#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

namespace arraynormal {

namespace {

void check_degrees(double nu, std::int64_t q, const char* what) {
  if (q < 1) throw std::invalid_argument(std::string(what) + ": dimension must be >= 1");
  if (!(nu > static_cast<double>(q - 1)))
    throw std::invalid_argument(std::string(what) + ": need nu > q - 1");
}

double draw_chi_square(double dof, RngStream& rng) {
  std::gamma_distribution<double> gamma(dof / 2.0, 2.0);
  return gamma(rng);
}

}  // namespace

LowerTriangular sample_wishart_chol(double nu, std::int64_t q, RngStream& rng) {
  check_degrees(nu, q, "sample_wishart_chol");
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> packed;
  packed.reserve(static_cast<std::size_t>(q * (q + 1) / 2));
  for (std::int64_t j = 0; j < q; ++j) {
    packed.push_back(std::sqrt(draw_chi_square(nu - static_cast<double>(j), rng)));
    for (std::int64_t i = j + 1; i < q; ++i) packed.push_back(normal(rng));
  }
  return LowerTriangular(q, std::move(packed));
}

LowerTriangular sample_inverse_wishart_chol(double nu, std::int64_t q, RngStream& rng) {
  check_degrees(nu, q, "sample_inverse_wishart_chol");
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix w = Matrix::Zero(q, q);
  for (std::int64_t i = 0; i < q; ++i) {
    // W[i,i]^2 ~ inverse-gamma(shape, 1/2), i.e. the reciprocal of a
    // gamma(shape, scale 2) draw.
    const double shape = (nu - static_cast<double>(q) + static_cast<double>(i) + 1.0) / 2.0;
    std::gamma_distribution<double> gamma(shape, 2.0);
    w(i, i) = std::sqrt(1.0 / gamma(rng));
    if (i > 0) {
      Vector z(i);
      for (std::int64_t c = 0; c < i; ++c) z[c] = normal(rng);
      // Row ~ N(0, W[i,i]^2 W1^T W1): scale z by W1 on the right.
      w.row(i).head(i) = w(i, i) * (z.transpose() * w.topLeftCorner(i, i));
    }
  }
  return LowerTriangular::from_dense(w);
}

Spd sample_mirror_wishart(double nu, const Spd& phi, RngStream& rng) {
  const std::int64_t q = phi.dim();
  check_degrees(nu, q, "sample_mirror_wishart");
  const LowerTriangular v = sample_wishart_chol(nu, q, rng);
  const Matrix u = chol_upper(phi).dense();
  const Matrix vu = v.dense() * u.transpose();
  return Spd(vu.transpose() * vu);
}

Spd mirror_wishart_mean(double nu, const Spd& phi) {
  const std::int64_t q = phi.dim();
  check_degrees(nu, q, "mirror_wishart_mean");
  const Matrix u = chol_upper(phi).dense();
  Vector d(q);
  for (std::int64_t j = 1; j <= q; ++j)
    d[j - 1] = (nu + static_cast<double>(q) + 1.0 - 2.0 * static_cast<double>(j)) / nu;
  return Spd(nu * u * d.asDiagonal() * u.transpose());
}

Orthogonal sample_haar_orthogonal(std::int64_t q, RngStream& rng) {
  if (q < 1) throw std::invalid_argument("sample_haar_orthogonal: dimension must be >= 1");
  std::normal_distribution<double> normal(0.0, 1.0);
  while (true) {
    Matrix g(q, q);
    for (std::int64_t j = 0; j < q; ++j)
      for (std::int64_t i = 0; i < q; ++i) g(i, j) = normal(rng);
    Eigen::HouseholderQR<Matrix> qr(g);
    const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
    bool degenerate = false;
    for (std::int64_t j = 0; j < q; ++j)
      if (r(j, j) == 0.0) degenerate = true;
    if (degenerate) continue;
    Matrix qmat = qr.householderQ();
    for (std::int64_t j = 0; j < q; ++j)
      if (r(j, j) < 0.0) qmat.col(j) = -qmat.col(j);
    return Orthogonal(qmat);
  }
}

}  // namespace arraynormal
