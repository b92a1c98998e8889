#pragma once

#include "arraynormal/rng.hpp"
#include "arraynormal/triangular.hpp"

namespace arraynormal {

// Bartlett factor V of a Wishart_q(nu, I) draw: V is lower triangular with
// V[i,i]^2 ~ chi-square(nu - i) (0-based i) and V[i,j] ~ N(0,1) for i > j,
// all independent, so V V^T ~ Wishart_q(nu, I). Requires nu > q - 1.
//
// Draw order (part of the determinism contract): columns j = 0..q-1; within
// a column the diagonal chi-square first, then the subdiagonal normals in
// row order.
LowerTriangular sample_wishart_chol(double nu, std::int64_t q, RngStream& rng);

// Bartlett-type factor W with W W^T ~ inverse-Wishart_q(nu, I):
// W[i,i]^2 ~ inverse-gamma((nu - q + i + 1)/2, 1/2) (0-based i, scale 1/2 on
// the inverse-gamma), and given the leading i x i block W1 and W[i,i], the
// row W[i, 0..i-1] is N(0, W[i,i]^2 W1^T W1). Requires nu > q - 1.
//
// Draw order: rows i = 0..q-1; within a row the diagonal first, then the
// i standard normals (in column order) that form the row.
LowerTriangular sample_inverse_wishart_chol(double nu, std::int64_t q, RngStream& rng);

// Mirror-Wishart_q(nu, Phi) draw: S = U V^T V U^T with V a Wishart Bartlett
// factor (drawn first) and U U^T the upper Cholesky factorization of Phi.
Spd sample_mirror_wishart(double nu, const Spd& phi, RngStream& rng);

// Exact mean of the mirror-Wishart_q(nu, Phi) law: nu * U * D * U^T where
// D = diag(d_1,...,d_q), d_j = (nu + q + 1 - 2j)/nu (1-based j).
Spd mirror_wishart_mean(double nu, const Spd& phi);

// Uniform (Haar) draw from the orthogonal group O(q): QR-factor a q x q
// matrix of iid standard normals (filled column-major) and flip each column
// of Q by the sign of the matching diagonal of R. Redraws in the
// measure-zero event of a zero diagonal.
Orthogonal sample_haar_orthogonal(std::int64_t q, RngStream& rng);

}  // namespace arraynormal
