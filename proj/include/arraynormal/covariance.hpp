#pragma once

#include <cstdint>
#include <vector>

#include "arraynormal/rng.hpp"
#include "arraynormal/tensor.hpp"
#include "arraynormal/triangular.hpp"

namespace arraynormal {

// Separable covariance parameter (sigma^2, Sigma_1, ..., Sigma_K) for the
// array normal model: Cov(vec X) = sigma^2 (Sigma_K x ... x Sigma_1) with
// det(Sigma_k) = 1 for every k (the identifiability constraint, enforced
// within 1e-8 at construction). Lower Cholesky factors Psi_k with
// Psi_k Psi_k^T = Sigma_k are cached.
class SeparableCovariance {
 public:
  SeparableCovariance(double sigma2, std::vector<Spd> factors);
  static SeparableCovariance identity(const std::vector<std::int64_t>& dims);

  double sigma2() const { return sigma2_; }
  std::int64_t order() const { return static_cast<std::int64_t>(factors_.size()); }
  const std::vector<Spd>& factors() const { return factors_; }
  const Spd& factor(std::int64_t k) const { return factors_.at(static_cast<std::size_t>(k)); }
  const std::vector<LowerTriangular>& factor_chols() const { return chols_; }

  std::vector<std::int64_t> dims() const;
  // Product of the mode dimensions, p = p_1 ... p_K.
  std::int64_t total_dim() const;

 private:
  double sigma2_;
  std::vector<Spd> factors_;
  std::vector<LowerTriangular> chols_;
};

// Element of the multilinear transformation group: scale a > 0 and one
// unit-determinant matrix per mode (|det A_k - 1| <= 1e-8 enforced). Lower
// triangular A_k give the triangular group the equivariant estimators are
// built on; general special-linear A_k serve the loss-invariance results.
class GroupElement {
 public:
  GroupElement(double a, std::vector<Matrix> mats);
  static GroupElement identity(const std::vector<std::int64_t>& dims);

  double a() const { return a_; }
  std::int64_t order() const { return static_cast<std::int64_t>(mats_.size()); }
  const std::vector<Matrix>& mats() const { return mats_; }

  GroupElement inverse() const;

 private:
  double a_;
  std::vector<Matrix> mats_;
};

// Rescales raw PD factors to unit determinant, routing the extracted scale
// into sigma^2: Sigma_k = raw_k / det(raw_k)^{1/p_k} and
// sigma^2 = sigma2_raw * prod_k det(raw_k)^{1/p_k}, which leaves the full
// covariance sigma^2 (Sigma_K x ... x Sigma_1) unchanged. Determinants are
// accumulated in log space from the Cholesky diagonals.
SeparableCovariance normalize_factors(double sigma2_raw, const std::vector<Spd>& raw);

// Log density of the mean-zero array normal model at a data tensor whose
// trailing mode indexes n samples (the leading modes must match the factor
// dimensions):
//   -(np/2) log(2 pi) - (np/2) log sigma^2 - (n/2) sum_k (p/p_k) log det Sigma_k
//   - ||X x {Psi_1^{-1},...,Psi_K^{-1}, I_n}||^2 / (2 sigma^2).
// The determinant term vanishes for normalized factors but is evaluated
// anyway so the function is correct for unnormalized inputs.
double log_density(const Tensor& x, const SeparableCovariance& cov);

// Draws n mean-zero array normal samples: returns sigma * Z x {Psi_1,...,
// Psi_K, I_n} with Z iid standard normal, as a tensor with trailing sample
// mode of size n. Z is filled in column-major linear order.
Tensor sample_array_normal(const SeparableCovariance& cov, std::int64_t n, RngStream& rng);

// Group action on data: X -> a * X x {A_1,...,A_K} (trailing sample mode,
// if present, is untouched). X may have order K or K+1.
Tensor act_on_data(const GroupElement& g, const Tensor& x);

// Group action on the parameter: (sigma, Psi_1,...,Psi_K) ->
// (a sigma, A_1 Psi_1,...), re-expressed as a SeparableCovariance via
// Sigma_k -> A_k Sigma_k A_k^T followed by renormalization (which
// re-factorizes, covering non-triangular A_k such as rotations).
SeparableCovariance act_on_param(const GroupElement& g, const SeparableCovariance& cov);

// Multiway Stein's loss of the estimate (s^2, S_1..S_K) against the truth
// (sigma^2, Sigma_1..Sigma_K), both with unit-determinant factors:
//   (s^2/sigma^2) sum_k (p/p_k) tr(S_k Sigma_k^{-1}) - K p log(s^2/sigma^2) - K p.
// Nonnegative, zero iff the estimate equals the truth, and invariant under
// the unit-determinant multilinear group acting on both arguments.
double multiway_stein_loss(const SeparableCovariance& truth, const SeparableCovariance& est);

// Weighted variant with positive per-mode weights w_k:
//   (s^2/sigma^2) sum_k (w_k/p_k) tr(S_k Sigma_k^{-1}) - (sum w_k) log(s^2/sigma^2) - sum w_k.
// Equal weights w_k = p recover multiway_stein_loss.
double weighted_stein_loss(const SeparableCovariance& truth, const SeparableCovariance& est,
                           const std::vector<double>& w);

// Classical Stein's loss tr(S V^{-1}) - log det(S V^{-1}) - p evaluated on
// the assembled p x p covariances V = sigma^2 kron(Sigma_K..Sigma_1) and
// S = s^2 kron(S_K..S_1); subject to the kron_list dimension cap.
double stein_loss_full(const SeparableCovariance& truth, const SeparableCovariance& est);

}  // namespace arraynormal
