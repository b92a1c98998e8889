#include "arraynormal/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <stdexcept>
#include <string>

namespace arraynormal {

namespace {

struct DataLayout {
  std::int64_t order_k;  // number of covariance modes
  std::vector<std::int64_t> dims;
  std::int64_t n;
  std::int64_t p;
  double np;
};

DataLayout layout_of(const Tensor& x, const char* what) {
  if (x.order() < 2)
    throw std::invalid_argument(std::string(what) +
                                ": data must have at least one covariance mode plus the "
                                "trailing sample mode");
  DataLayout d;
  d.order_k = x.order() - 1;
  d.p = 1;
  for (std::int64_t k = 0; k < d.order_k; ++k) {
    d.dims.push_back(x.dim(k));
    d.p *= x.dim(k);
  }
  d.n = x.dim(d.order_k);
  d.np = static_cast<double>(d.n) * static_cast<double>(d.p);
  return d;
}

std::vector<LowerTriangular> initial_psi(const DataLayout& d,
                                         const std::optional<SeparableCovariance>& init,
                                         const char* what) {
  if (!init) {
    std::vector<LowerTriangular> psi;
    for (std::int64_t pk : d.dims) psi.push_back(LowerTriangular::identity(pk));
    return psi;
  }
  if (init->dims() != d.dims)
    throw std::invalid_argument(std::string(what) + ": init dimensions do not match the data");
  return init->factor_chols();
}

Matrix residual_cross_product(const Tensor& x, const std::vector<LowerTriangular>& psi,
                              std::int64_t k) {
  const Tensor z = tucker_solve_lower_leading(x, psi, k);
  const Matrix zk = matricize(z, k);
  Matrix m = zk * zk.transpose();
  return (m + m.transpose()) / 2.0;
}

std::vector<Matrix> reversed_inverse_factors(const std::vector<LowerTriangular>& psi) {
  std::vector<Matrix> invs;
  invs.reserve(psi.size());
  for (auto it = psi.rbegin(); it != psi.rend(); ++it) {
    const Matrix l = it->dense();
    const Matrix linv = l.triangularView<Eigen::Lower>().solve(
        Matrix::Identity(it->dim(), it->dim()));
    invs.push_back(linv.transpose() * linv);
  }
  return invs;
}

}  // namespace

Matrix GibbsChain::precision_mean(std::int64_t k) const {
  if (kept < 1) throw std::logic_error("GibbsChain: no kept draws");
  return precision_sum.at(static_cast<std::size_t>(k)) / static_cast<double>(kept);
}

Matrix GibbsChain::full_precision_mean() const {
  if (kept < 1) throw std::logic_error("GibbsChain: no kept draws");
  if (!full_precision_sum)
    throw std::logic_error("GibbsChain: chain was run without the full-precision accumulator");
  return *full_precision_sum / static_cast<double>(kept);
}

EstimatorOutput mle_flipflop(const Tensor& x, double tol, std::int64_t max_iter) {
  const DataLayout d = layout_of(x, "mle_flipflop");
  if (!(tol > 0.0) || max_iter < 1)
    throw std::invalid_argument("mle_flipflop: need tol > 0 and max_iter >= 1");

  std::vector<std::string> warnings;
  for (std::int64_t k = 0; k < d.order_k; ++k) {
    if (d.np / static_cast<double>(d.dims[static_cast<std::size_t>(k)]) <
        static_cast<double>(d.dims[static_cast<std::size_t>(k)]))
      warnings.push_back("mle_flipflop: mode " + std::to_string(k) +
                         " has fewer observations than parameters (np/p_k < p_k); the "
                         "likelihood may be unbounded");
  }

  std::vector<Spd> factors;
  std::vector<LowerTriangular> psi;
  for (std::int64_t pk : d.dims) {
    factors.push_back(Spd::identity(pk));
    psi.push_back(LowerTriangular::identity(pk));
  }
  double sigma2 = 1.0;
  double ll_prev = log_density(x, SeparableCovariance(sigma2, factors));

  std::int64_t sweeps = 0;
  double ll = ll_prev;
  for (std::int64_t iter = 0; iter < max_iter; ++iter) {
    for (std::int64_t k = 0; k < d.order_k; ++k) {
      const double pk = static_cast<double>(d.dims[static_cast<std::size_t>(k)]);
      Matrix m = residual_cross_product(x, psi, k) * (pk / d.np);
      Spd spd = [&] {
        try {
          return Spd(m);
        } catch (const std::exception&) {
          // np/p_k < p_k makes this cross-product rank deficient for every
          // data set, so the soft warning above is never survivable; say so.
          if (d.np / pk < pk)
            throw std::runtime_error(
                "mle_flipflop: mode " + std::to_string(k) +
                " update is singular; np/p_k < p_k, so the maximum likelihood estimate "
                "does not exist at this sample size");
          throw std::runtime_error("mle_flipflop: mode " + std::to_string(k) +
                                   " update is singular (rank-deficient matricization)");
        }
      }();
      const double log_root = spd.log_det() / pk;
      sigma2 = std::exp(log_root);
      factors[static_cast<std::size_t>(k)] = Spd(spd.matrix() * std::exp(-log_root));
      psi[static_cast<std::size_t>(k)] = factors[static_cast<std::size_t>(k)].chol();
    }
    ++sweeps;
    ll = log_density(x, SeparableCovariance(sigma2, factors));
    if (std::abs(ll - ll_prev) <= tol * (1.0 + std::abs(ll_prev))) break;
    ll_prev = ll;
  }

  EstimatorOutput out{SeparableCovariance(sigma2, std::move(factors)), "mle"};
  out.iterations = sweeps;
  out.final_objective = ll;
  out.warnings = std::move(warnings);
  return out;
}

GibbsChain gibbs_chain(const Tensor& x, const GibbsConfig& cfg) {
  const DataLayout d = layout_of(x, "gibbs_chain");
  if (cfg.burn_in < 0 || cfg.burn_in >= cfg.total_iters)
    throw std::invalid_argument("gibbs_chain: need 0 <= burn_in < total_iters");

  GibbsChain chain;
  chain.dims = d.dims;
  chain.n = d.n;
  if (d.n <= d.p)
    chain.warnings.push_back(
        "gibbs_chain: n <= p_1...p_K, so posterior propriety is not guaranteed");

  std::vector<LowerTriangular> psi = initial_psi(d, cfg.init, "gibbs_chain");
  for (std::int64_t pk : d.dims) chain.precision_sum.push_back(Matrix::Zero(pk, pk));
  if (cfg.accumulate_full_precision) {
    if (d.p > 4096)
      throw std::invalid_argument(
          "gibbs_chain: full-precision accumulator exceeds the kron dimension cap");
    chain.full_precision_sum = Matrix::Zero(d.p, d.p);
  }

  RngStream rng = cfg.rng;
  double sigma2 = 1.0;
  std::vector<Matrix> p_draws(static_cast<std::size_t>(d.order_k));
  for (std::int64_t iter = 1; iter <= cfg.total_iters; ++iter) {
    for (std::int64_t k = 0; k < d.order_k; ++k) {
      const std::int64_t pk = d.dims[static_cast<std::size_t>(k)];
      const double nu = d.np / static_cast<double>(pk);
      Matrix m = residual_cross_product(x, psi, k);
      const Spd spd = [&] {
        try {
          return Spd(m);
        } catch (const std::exception&) {
          throw std::runtime_error("gibbs_chain: mode " + std::to_string(k) +
                                   " residual cross-product is not positive definite");
        }
      }();
      const Matrix phi = spd.chol().dense();
      const Matrix v = sample_wishart_chol(nu, pk, rng).dense();
      // Precision draw P = Phi^{-T} V^T V Phi^{-1}; T = V Phi^{-1} by a
      // right triangular solve.
      const Matrix t = phi.triangularView<Eigen::Lower>().solve<Eigen::OnTheRight>(v);
      Matrix p_draw = t.transpose() * t;
      p_draw = (p_draw + p_draw.transpose()) / 2.0;
      // New state: L = Phi V^{-1} is the lower Cholesky factor of P^{-1}.
      const Matrix l = v.triangularView<Eigen::Lower>().solve<Eigen::OnTheRight>(phi);
      double log_det_l = 0.0;
      for (std::int64_t j = 0; j < pk; ++j) log_det_l += std::log(l(j, j));
      const double sigma = std::exp(log_det_l / static_cast<double>(pk));
      psi[static_cast<std::size_t>(k)] = LowerTriangular::from_dense(l / sigma);
      sigma2 = sigma * sigma;
      if (iter > cfg.burn_in) p_draws[static_cast<std::size_t>(k)] = std::move(p_draw);
    }
    if (iter > cfg.burn_in) {
      ++chain.kept;
      for (std::int64_t k = 0; k < d.order_k; ++k)
        chain.precision_sum[static_cast<std::size_t>(k)] += p_draws[static_cast<std::size_t>(k)];
      if (chain.full_precision_sum)
        *chain.full_precision_sum += kron_list(reversed_inverse_factors(psi)) / sigma2;
      if (cfg.store_draws) chain.draws.push_back({sigma2, psi});
    }
  }
  return chain;
}

namespace {

struct PosteriorScales {
  std::vector<Spd> e_factors;
  std::vector<double> det_roots;  // det(E_k)^{1/p_k}
  std::vector<Spd> normalized;    // E_k / det(E_k)^{1/p_k}
};

PosteriorScales posterior_scales(const GibbsChain& chain) {
  PosteriorScales s;
  const std::int64_t order_k = static_cast<std::int64_t>(chain.dims.size());
  for (std::int64_t k = 0; k < order_k; ++k) {
    const Spd mean = [&] {
      try {
        return Spd(chain.precision_mean(k));
      } catch (const std::exception&) {
        throw std::runtime_error("umree: accumulated precision for mode " + std::to_string(k) +
                                 " is singular");
      }
    }();
    Spd e(mean.inverse());
    const double pk = static_cast<double>(chain.dims[static_cast<std::size_t>(k)]);
    const double root = std::exp(e.log_det() / pk);
    s.normalized.emplace_back(e.matrix() / root);
    s.det_roots.push_back(root);
    s.e_factors.push_back(std::move(e));
  }
  return s;
}

EstimatorOutput umree_with_scale(const GibbsChain& chain, const std::vector<double>& w,
                                 const std::string& method) {
  PosteriorScales s = posterior_scales(chain);
  double w_sum = 0.0;
  for (double wk : w) {
    if (!(wk > 0.0)) throw std::invalid_argument("umree: weights must be positive");
    w_sum += wk;
  }
  double inv_scale = 0.0;
  for (std::size_t k = 0; k < s.det_roots.size(); ++k)
    inv_scale += (w[k] / w_sum) / s.det_roots[k];
  const double sigma2_hat = 1.0 / inv_scale;

  EstimatorOutput out{SeparableCovariance(sigma2_hat, s.normalized), method};
  out.kept_draws = chain.kept;
  for (const Spd& e : s.e_factors) out.e_factors.push_back(e.matrix());
  out.final_objective = umree_objective(s.e_factors, out.estimate);
  out.warnings = chain.warnings;
  return out;
}

}  // namespace

EstimatorOutput umree(const GibbsChain& chain) {
  const std::vector<double> w(chain.dims.size(), 1.0);
  return umree_with_scale(chain, w, "umree");
}

EstimatorOutput umree_weighted(const GibbsChain& chain, const std::vector<double>& w) {
  if (w.size() != chain.dims.size())
    throw std::invalid_argument("umree_weighted: need one weight per mode");
  return umree_with_scale(chain, w, "umree_weighted");
}

double umree_objective(const std::vector<Spd>& e_factors, const SeparableCovariance& candidate) {
  if (static_cast<std::int64_t>(e_factors.size()) != candidate.order())
    throw std::invalid_argument("umree_objective: order mismatch");
  double p = 1.0;
  for (const Spd& e : e_factors) p *= static_cast<double>(e.dim());
  double trace_sum = 0.0;
  for (std::int64_t k = 0; k < candidate.order(); ++k) {
    const Spd& e = e_factors[static_cast<std::size_t>(k)];
    if (e.dim() != candidate.factor(k).dim())
      throw std::invalid_argument("umree_objective: factor dimension mismatch");
    trace_sum += (p / static_cast<double>(e.dim())) *
                 e.solve(candidate.factor(k).matrix()).trace();
  }
  const double kp = static_cast<double>(candidate.order()) * p;
  return candidate.sigma2() * trace_sum - kp * std::log(candidate.sigma2());
}

EstimatorOutput stein_umree(const GibbsChain& chain, double tol, std::int64_t max_iter) {
  if (!(tol > 0.0) || max_iter < 1)
    throw std::invalid_argument("stein_umree: need tol > 0 and max_iter >= 1");
  const Matrix a = chain.full_precision_mean();
  const std::int64_t p = a.rows();
  Eigen::SelfAdjointEigenSolver<Matrix> eigen((a + a.transpose()) / 2.0);
  if (eigen.info() != Eigen::Success || eigen.eigenvalues().minCoeff() <= 0.0)
    throw std::runtime_error("stein_umree: accumulated full precision is not positive definite");
  const Matrix khat = eigen.eigenvectors() *
                      eigen.eigenvalues().cwiseSqrt().asDiagonal() *
                      eigen.eigenvectors().transpose();

  const std::int64_t order_k = static_cast<std::int64_t>(chain.dims.size());
  std::vector<std::int64_t> tilde_dims = chain.dims;
  tilde_dims.push_back(p);
  const Tensor ktilde = unmatricize(khat, Shape(tilde_dims), order_k);

  std::vector<Spd> m_factors;
  for (std::int64_t pk : chain.dims) m_factors.push_back(Spd::identity(pk));

  const auto objective = [&]() {
    std::vector<Matrix> mats;
    for (const Spd& m : m_factors) mats.push_back(m.matrix());
    const Tensor y = tucker_product_leading(ktilde, mats);
    double f = y.data().dot(ktilde.data());
    for (std::int64_t k = 0; k < order_k; ++k)
      f -= (static_cast<double>(p) / static_cast<double>(chain.dims[static_cast<std::size_t>(k)])) *
           m_factors[static_cast<std::size_t>(k)].log_det();
    return f;
  };

  double f_prev = objective();
  std::int64_t sweeps = 0;
  double f = f_prev;
  for (std::int64_t iter = 0; iter < max_iter; ++iter) {
    for (std::int64_t k = 0; k < order_k; ++k) {
      std::vector<ModeMatrix> others;
      for (std::int64_t j = 0; j < order_k; ++j)
        if (j != k) others.push_back({j, m_factors[static_cast<std::size_t>(j)].matrix()});
      const Tensor y = tucker_product(ktilde, others);
      Matrix c = matricize(y, k) * matricize(ktilde, k).transpose();
      c = (c + c.transpose()) / 2.0;
      const double ratio =
          static_cast<double>(p) / static_cast<double>(chain.dims[static_cast<std::size_t>(k)]);
      Matrix updated = Spd(c).inverse() * ratio;
      m_factors[static_cast<std::size_t>(k)] = Spd((updated + updated.transpose()) / 2.0);
    }
    ++sweeps;
    f = objective();
    if (std::abs(f - f_prev) <= tol * (1.0 + std::abs(f_prev))) break;
    f_prev = f;
  }

  EstimatorOutput out{normalize_factors(1.0, m_factors), "stein_umree"};
  out.iterations = sweeps;
  out.kept_draws = chain.kept;
  out.final_objective = f;
  out.warnings = chain.warnings;
  return out;
}

EstimatorOutput mwte_with_rotations(const Tensor& x,
                                    const std::vector<std::vector<Orthogonal>>& rotations,
                                    const GibbsConfig& cfg) {
  const DataLayout d = layout_of(x, "mwte");
  if (rotations.empty()) throw std::invalid_argument("mwte: need at least one rotation round");
  const std::int64_t t_rounds = static_cast<std::int64_t>(rotations.size());

  std::vector<Matrix> s_sum;
  for (std::int64_t pk : d.dims) s_sum.push_back(Matrix::Zero(pk, pk));
  double sigma2_sum = 0.0;
  std::int64_t kept_total = 0;
  std::set<std::string> warning_set;

  for (std::int64_t t = 0; t < t_rounds; ++t) {
    const auto& gamma = rotations[static_cast<std::size_t>(t)];
    if (static_cast<std::int64_t>(gamma.size()) != d.order_k)
      throw std::invalid_argument("mwte: need one rotation per mode in every round");
    std::vector<Matrix> gamma_mats;
    for (std::int64_t k = 0; k < d.order_k; ++k) {
      if (gamma[static_cast<std::size_t>(k)].dim() != d.dims[static_cast<std::size_t>(k)])
        throw std::invalid_argument("mwte: rotation dimension does not match the data");
      gamma_mats.push_back(gamma[static_cast<std::size_t>(k)].matrix());
    }
    const Tensor rotated = tucker_product_leading(x, gamma_mats);

    GibbsConfig round_cfg = cfg;
    round_cfg.rng = cfg.rng.substream(static_cast<std::uint64_t>(2 * t + 1));
    const GibbsChain chain = gibbs_chain(rotated, round_cfg);
    const EstimatorOutput fit = umree(chain);
    kept_total += chain.kept;
    for (const std::string& w : fit.warnings) warning_set.insert(w);

    sigma2_sum += fit.estimate.sigma2();
    for (std::int64_t k = 0; k < d.order_k; ++k) {
      const Matrix& sk = fit.estimate.factor(k).matrix();
      s_sum[static_cast<std::size_t>(k)] +=
          gamma_mats[static_cast<std::size_t>(k)].transpose() * sk *
          gamma_mats[static_cast<std::size_t>(k)] / sk.trace();
    }
  }

  std::vector<Spd> factors;
  for (std::int64_t k = 0; k < d.order_k; ++k) {
    const Spd avg(s_sum[static_cast<std::size_t>(k)] / static_cast<double>(t_rounds));
    const double root =
        std::exp(avg.log_det() / static_cast<double>(d.dims[static_cast<std::size_t>(k)]));
    factors.emplace_back(avg.matrix() / root);
  }
  EstimatorOutput out{
      SeparableCovariance(sigma2_sum / static_cast<double>(t_rounds), std::move(factors)),
      "mwte"};
  out.iterations = t_rounds;
  out.kept_draws = kept_total;
  out.warnings.assign(warning_set.begin(), warning_set.end());
  return out;
}

EstimatorOutput mwte(const Tensor& x, std::int64_t t_rounds, const GibbsConfig& cfg,
                     const RngStream& rng) {
  if (t_rounds < 1) throw std::invalid_argument("mwte: need T >= 1");
  const DataLayout d = layout_of(x, "mwte");
  std::vector<std::vector<Orthogonal>> rotations;
  rotations.reserve(static_cast<std::size_t>(t_rounds));
  for (std::int64_t t = 0; t < t_rounds; ++t) {
    RngStream rot_rng = rng.substream(static_cast<std::uint64_t>(2 * t));
    std::vector<Orthogonal> round;
    for (std::int64_t pk : d.dims) round.push_back(sample_haar_orthogonal(pk, rot_rng));
    rotations.push_back(std::move(round));
  }
  GibbsConfig chain_cfg = cfg;
  chain_cfg.rng = rng;
  return mwte_with_rotations(x, rotations, chain_cfg);
}

double sample_sigma2_conditional(const Tensor& x, const std::vector<LowerTriangular>& psi,
                                 RngStream& rng) {
  const DataLayout d = layout_of(x, "sample_sigma2_conditional");
  if (static_cast<std::int64_t>(psi.size()) != d.order_k)
    throw std::invalid_argument("sample_sigma2_conditional: need one factor per mode");
  const double rate = frob_norm_sq(tucker_solve_lower_leading(x, psi)) / 2.0;
  std::gamma_distribution<double> gamma(d.np / 2.0, 1.0 / rate);
  return 1.0 / gamma(rng);
}

}  // namespace arraynormal
