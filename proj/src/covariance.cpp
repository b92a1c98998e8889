#include "arraynormal/covariance.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace arraynormal {

namespace {

void check_shape_against(const Tensor& x, const SeparableCovariance& cov, const char* what) {
  const std::int64_t k = cov.order();
  if (x.order() != k + 1)
    throw std::invalid_argument(std::string(what) +
                                ": data must carry a trailing sample mode (order K+1)");
  for (std::int64_t m = 0; m < k; ++m)
    if (x.dim(m) != cov.factor(m).dim())
      throw std::invalid_argument(std::string(what) + ": data extent does not match factor");
}

std::vector<Matrix> reversed_factor_mats(const std::vector<Spd>& factors) {
  std::vector<Matrix> mats;
  mats.reserve(factors.size());
  for (auto it = factors.rbegin(); it != factors.rend(); ++it) mats.push_back(it->matrix());
  return mats;
}

}  // namespace

SeparableCovariance::SeparableCovariance(double sigma2, std::vector<Spd> factors)
    : sigma2_(sigma2), factors_(std::move(factors)) {
  if (!(sigma2_ > 0.0) || !std::isfinite(sigma2_))
    throw std::invalid_argument("SeparableCovariance: sigma^2 must be positive and finite");
  if (factors_.empty())
    throw std::invalid_argument("SeparableCovariance: need at least one factor");
  chols_.reserve(factors_.size());
  for (const Spd& f : factors_) {
    const double det = std::exp(f.log_det());
    if (std::abs(det - 1.0) > 1e-8)
      throw std::invalid_argument(
          "SeparableCovariance: factor determinant deviates from 1 beyond 1e-8");
    chols_.push_back(f.chol());
  }
}

SeparableCovariance SeparableCovariance::identity(const std::vector<std::int64_t>& dims) {
  std::vector<Spd> factors;
  factors.reserve(dims.size());
  for (std::int64_t d : dims) factors.push_back(Spd::identity(d));
  return SeparableCovariance(1.0, std::move(factors));
}

std::vector<std::int64_t> SeparableCovariance::dims() const {
  std::vector<std::int64_t> d;
  d.reserve(factors_.size());
  for (const Spd& f : factors_) d.push_back(f.dim());
  return d;
}

std::int64_t SeparableCovariance::total_dim() const {
  std::int64_t p = 1;
  for (const Spd& f : factors_) p *= f.dim();
  return p;
}

GroupElement::GroupElement(double a, std::vector<Matrix> mats)
    : a_(a), mats_(std::move(mats)) {
  if (!(a_ > 0.0) || !std::isfinite(a_))
    throw std::invalid_argument("GroupElement: scale must be positive and finite");
  if (mats_.empty()) throw std::invalid_argument("GroupElement: need at least one matrix");
  for (const Matrix& m : mats_) {
    if (m.rows() != m.cols() || m.rows() < 1)
      throw std::invalid_argument("GroupElement: matrices must be square");
    const double det = m.partialPivLu().determinant();
    if (std::abs(det - 1.0) > 1e-8)
      throw std::invalid_argument("GroupElement: matrix determinant deviates from 1 beyond 1e-8");
  }
}

GroupElement GroupElement::identity(const std::vector<std::int64_t>& dims) {
  std::vector<Matrix> mats;
  mats.reserve(dims.size());
  for (std::int64_t d : dims) mats.push_back(Matrix::Identity(d, d));
  return GroupElement(1.0, std::move(mats));
}

GroupElement GroupElement::inverse() const {
  std::vector<Matrix> inv;
  inv.reserve(mats_.size());
  for (const Matrix& m : mats_) inv.push_back(m.partialPivLu().inverse());
  return GroupElement(1.0 / a_, std::move(inv));
}

SeparableCovariance normalize_factors(double sigma2_raw, const std::vector<Spd>& raw) {
  if (!(sigma2_raw > 0.0))
    throw std::invalid_argument("normalize_factors: sigma^2 must be positive");
  double log_scale = 0.0;
  std::vector<Spd> normalized;
  normalized.reserve(raw.size());
  for (const Spd& f : raw) {
    const double log_det = f.log_det();
    const double log_root = log_det / static_cast<double>(f.dim());
    log_scale += log_root;
    normalized.emplace_back(f.matrix() * std::exp(-log_root));
  }
  return SeparableCovariance(sigma2_raw * std::exp(log_scale), std::move(normalized));
}

double log_density(const Tensor& x, const SeparableCovariance& cov) {
  check_shape_against(x, cov, "log_density");
  const std::int64_t kk = cov.order();
  const std::int64_t n = x.dim(kk);
  const std::int64_t p = cov.total_dim();
  const double np = static_cast<double>(n) * static_cast<double>(p);
  const Tensor whitened = tucker_solve_lower_leading(x, cov.factor_chols());
  double log_det_term = 0.0;
  for (std::int64_t k = 0; k < kk; ++k) {
    const double weight = static_cast<double>(p / cov.factor(k).dim());
    log_det_term += weight * cov.factor(k).log_det();
  }
  return -0.5 * np * std::log(2.0 * std::numbers::pi) - 0.5 * np * std::log(cov.sigma2()) -
         0.5 * static_cast<double>(n) * log_det_term -
         frob_norm_sq(whitened) / (2.0 * cov.sigma2());
}

Tensor sample_array_normal(const SeparableCovariance& cov, std::int64_t n, RngStream& rng) {
  if (n < 1) throw std::invalid_argument("sample_array_normal: n must be >= 1");
  std::vector<std::int64_t> dims = cov.dims();
  dims.push_back(n);
  Tensor z{Shape(dims)};
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::int64_t i = 0; i < z.size(); ++i) z[i] = normal(rng);
  std::vector<Matrix> psi;
  psi.reserve(cov.factor_chols().size());
  for (const LowerTriangular& l : cov.factor_chols()) psi.push_back(l.dense());
  Tensor x = tucker_product_leading(z, psi);
  x.data() *= std::sqrt(cov.sigma2());
  return x;
}

Tensor act_on_data(const GroupElement& g, const Tensor& x) {
  const std::int64_t k = g.order();
  if (x.order() != k && x.order() != k + 1)
    throw std::invalid_argument("act_on_data: tensor order must be K or K+1");
  Tensor y = tucker_product_leading(x, g.mats());
  y.data() *= g.a();
  return y;
}

SeparableCovariance act_on_param(const GroupElement& g, const SeparableCovariance& cov) {
  if (g.order() != cov.order())
    throw std::invalid_argument("act_on_param: group and parameter orders differ");
  std::vector<Spd> conjugated;
  conjugated.reserve(static_cast<std::size_t>(cov.order()));
  for (std::int64_t k = 0; k < cov.order(); ++k) {
    const Matrix& a = g.mats()[static_cast<std::size_t>(k)];
    if (a.rows() != cov.factor(k).dim())
      throw std::invalid_argument("act_on_param: matrix dimension does not match factor");
    conjugated.emplace_back(a * cov.factor(k).matrix() * a.transpose());
  }
  return normalize_factors(g.a() * g.a() * cov.sigma2(), conjugated);
}

namespace {

double scaled_trace_sum(const SeparableCovariance& truth, const SeparableCovariance& est,
                        const std::vector<double>& weights) {
  double sum = 0.0;
  for (std::int64_t k = 0; k < truth.order(); ++k) {
    const Matrix ratio = truth.factor(k).solve(est.factor(k).matrix());
    sum += weights[static_cast<std::size_t>(k)] /
           static_cast<double>(truth.factor(k).dim()) * ratio.trace();
  }
  return sum;
}

void check_same_dims(const SeparableCovariance& truth, const SeparableCovariance& est,
                     const char* what) {
  if (truth.order() != est.order() || truth.dims() != est.dims())
    throw std::invalid_argument(std::string(what) + ": parameter dimensions differ");
}

}  // namespace

double multiway_stein_loss(const SeparableCovariance& truth, const SeparableCovariance& est) {
  check_same_dims(truth, est, "multiway_stein_loss");
  const double p = static_cast<double>(truth.total_dim());
  const double kp = static_cast<double>(truth.order()) * p;
  const std::vector<double> weights(static_cast<std::size_t>(truth.order()), p);
  const double ratio = est.sigma2() / truth.sigma2();
  return ratio * scaled_trace_sum(truth, est, weights) - kp * std::log(ratio) - kp;
}

double weighted_stein_loss(const SeparableCovariance& truth, const SeparableCovariance& est,
                           const std::vector<double>& w) {
  check_same_dims(truth, est, "weighted_stein_loss");
  if (static_cast<std::int64_t>(w.size()) != truth.order())
    throw std::invalid_argument("weighted_stein_loss: need one weight per mode");
  double w_sum = 0.0;
  for (double wk : w) {
    if (!(wk > 0.0)) throw std::invalid_argument("weighted_stein_loss: weights must be positive");
    w_sum += wk;
  }
  const double ratio = est.sigma2() / truth.sigma2();
  return ratio * scaled_trace_sum(truth, est, w) - w_sum * std::log(ratio) - w_sum;
}

double stein_loss_full(const SeparableCovariance& truth, const SeparableCovariance& est) {
  check_same_dims(truth, est, "stein_loss_full");
  const Spd v(truth.sigma2() * kron_list(reversed_factor_mats(truth.factors())));
  const Spd s(est.sigma2() * kron_list(reversed_factor_mats(est.factors())));
  const std::int64_t p = v.dim();
  const double log_det_ratio = s.log_det() - v.log_det();
  return v.solve(s.matrix()).trace() - log_det_ratio - static_cast<double>(p);
}

}  // namespace arraynormal
