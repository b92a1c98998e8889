#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "arraynormal/covariance.hpp"
#include "arraynormal/rng.hpp"
#include "arraynormal/samplers.hpp"
#include "arraynormal/tensor.hpp"

namespace arraynormal {

// Settings for a Gibbs run over the per-mode precision full conditionals.
// The chain state that matters is the factor Cholesky list: each mode draw
// re-derives the scale, so the initial sigma^2 never enters the kernel.
struct GibbsConfig {
  std::int64_t total_iters = 1250;
  std::int64_t burn_in = 250;
  // Initial parameter; identity factors when absent.
  std::optional<SeparableCovariance> init;
  RngStream rng{0, 0};
  // Keep every post-burn-in draw (sigma^2, Psi_1..Psi_K) for diagnostics.
  bool store_draws = false;
  // Additionally accumulate the full p x p precision mean, required by
  // stein_umree (subject to the kron dimension cap).
  bool accumulate_full_precision = false;
};

struct GibbsDraw {
  double sigma2;
  std::vector<LowerTriangular> psi;
};

// Accumulated output of a Gibbs run: per-mode sums over kept draws of the
// precision (sigma^2 Sigma_k)^{-1}, plus optional extras. Held as a plain
// aggregate so tests can assemble synthetic chains.
struct GibbsChain {
  std::vector<std::int64_t> dims;  // p_1..p_K
  std::int64_t n = 0;
  std::int64_t kept = 0;
  std::vector<Matrix> precision_sum;          // one p_k x p_k sum per mode
  std::optional<Matrix> full_precision_sum;   // p x p, when requested
  std::vector<GibbsDraw> draws;               // when requested
  std::vector<std::string> warnings;

  Matrix precision_mean(std::int64_t k) const;
  Matrix full_precision_mean() const;
};

struct EstimatorOutput {
  SeparableCovariance estimate;
  std::string method;
  std::int64_t iterations = 0;
  std::int64_t kept_draws = 0;
  // Method-specific: final log-likelihood for the MLE, the variable part of
  // the posterior-expected loss for the Bayes estimators; absent when the
  // method has no scalar objective.
  std::optional<double> final_objective;
  // Posterior scale diagnostics E_k = (E[(sigma^2 Sigma_k)^{-1} | X])^{-1}
  // for the Gibbs-based estimators.
  std::vector<Matrix> e_factors;
  std::vector<std::string> warnings;
};

// Flip-flop maximum likelihood. Sweeps modes k = 0..K-1; each step replaces
// sigma^2 Sigma_k by the scaled residual cross-product
// X_(k) Psi_{-k}^{-T} Psi_{-k}^{-1} X_(k)^T * p_k/(np), splitting the result
// into a unit-determinant factor and the scale. Each step is an exact
// block maximization, so the log-likelihood never decreases. Stops when the
// relative log-likelihood change drops below tol or after max_iter sweeps.
// Warns when n p / p_k < p_k for some mode (the MLE may not exist).
EstimatorOutput mle_flipflop(const Tensor& x, double tol = 1e-10, std::int64_t max_iter = 1000);

// Gibbs sampler over the per-mode full conditionals
//   (sigma^2 Sigma_k)^{-1} | rest ~ mirror-Wishart_{p_k}(np/p_k, M_k^{-1}),
//   M_k = X_(k) Psi_{-k}^{-T} Psi_{-k}^{-1} X_(k)^T,
// realized without inverting M_k: with Phi_k = chol_lower(M_k) and V a
// Wishart Bartlett factor, the draw is P_k = Phi_k^{-T} V^T V Phi_k^{-1}
// (since chol_upper(M_k^{-1}) = Phi_k^{-T}), and the new state is
// L_k = Phi_k V^{-1} = chol_lower(P_k^{-1}), sigma = det(L_k)^{1/p_k},
// Psi_k = L_k / sigma. Modes sweep in order k = 0..K-1. After burn-in every
// P_k is accumulated. Warns when n <= p_1...p_K (posterior propriety is
// only guaranteed above that).
GibbsChain gibbs_chain(const Tensor& x, const GibbsConfig& cfg);

// Posterior-mean equivariant estimator under multiway Stein's loss:
// E_k = (mean precision)^{-1}, Sigma_hat_k = E_k / det(E_k)^{1/p_k},
// sigma2_hat = K / sum_k det(E_k)^{-1/p_k}.
EstimatorOutput umree(const GibbsChain& chain);

// Weighted-loss variant: the factor estimates are unchanged; only the scale
// becomes sigma2_hat = (sum_k (w_k / sum w) det(E_k)^{-1/p_k})^{-1}.
EstimatorOutput umree_weighted(const GibbsChain& chain, const std::vector<double>& w);

// The variable part of the posterior-expected multiway Stein's loss of a
// candidate (normalized) estimate against fixed posterior means E_k:
//   s^2 sum_k (p/p_k) tr(S_k E_k^{-1}) - K p log s^2.
// Differences of this quantity across candidates equal differences of the
// full posterior objective, so it ranks candidates exactly.
double umree_objective(const std::vector<Spd>& e_factors, const SeparableCovariance& candidate);

// Minimizer of the posterior-expected classical Stein's loss over separable
// covariances, from a chain run with accumulate_full_precision. With
// Khat the symmetric square root of the mean full precision, folded into a
// (p_1,...,p_K,p) tensor Ktil whose trailing-mode matricization is Khat,
// block-updates M_k <- (p/p_k) C_k^{-1} with
// C_k = Ktil_(k) (I_p x M_{K-1} x .. x M_{k+1} x M_{k-1} x .. x M_0) Ktil_(k)^T,
// each step exactly minimizing the objective
//   F(M) = <Ktil x {M_0..M_{K-1}}, Ktil> - sum_k (p/p_k) log det M_k
// in its block, so F is nonincreasing; the limit is the global minimizer
// (the objective is geodesically convex). Stops on relative F change < tol.
EstimatorOutput stein_umree(const GibbsChain& chain, double tol = 1e-10,
                            std::int64_t max_iter = 1000);

// Multiway Takemura estimator approximated with T random rotations: for
// each t, draw one Haar orthogonal matrix per mode, rotate the data, run
// the Gibbs posterior-mean estimator, rotate the factor estimates back, and
// average them after trace normalization; the scale estimate is the mean of
// the per-rotation sigma2_hat. Rotations for round t consume
// rng.substream(2t) and the chain for round t runs on rng.substream(2t+1).
EstimatorOutput mwte(const Tensor& x, std::int64_t t_rounds, const GibbsConfig& cfg,
                     const RngStream& rng);

// Deterministic core of mwte with caller-supplied rotations (one list of K
// per round); exposed so tests can force identity rotations.
EstimatorOutput mwte_with_rotations(const Tensor& x,
                                    const std::vector<std::vector<Orthogonal>>& rotations,
                                    const GibbsConfig& cfg);

// Test utility for the scale's full conditional: with all factor Cholesky
// factors held fixed, draws sigma^2 from its inverse-gamma full conditional
// 1/sigma^2 ~ gamma(np/2, rate ||X x {Psi^{-1}}||^2 / 2). The Gibbs sweep
// itself never uses this (the scale rides along with each mode draw).
double sample_sigma2_conditional(const Tensor& x, const std::vector<LowerTriangular>& psi,
                                 RngStream& rng);

}  // namespace arraynormal
