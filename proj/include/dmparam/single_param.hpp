#pragma once

// Density matrices of a single n-level system from the Jarlskog chain
//   rho = A^n ... A^2 D(lambda) A^2^dagger ... A^n^dagger,  A^j = exp(X_j),
// where X_j couples level j to levels 1..j-1 through z_j in C^{j-1}.
// The diagonal factor A^1 commutes with D and is not carried.

#include <algorithm>
#include <string>
#include <vector>

#include "dmparam/matcore.hpp"
#include "dmparam/state.hpp"

namespace dmparam {

struct SingleParams {
  Eigen::Index n = 0;
  std::vector<double> lambdas;       // descending, on the simplex
  std::vector<ComplexVector> zvecs;  // zvecs[j-2] = z_j, length j-1, j = 2..n
};

inline void validate(const SingleParams& p) {
  if (p.n < 1)
    throw Error(ErrorCode::dimension_mismatch, "n must be >= 1");
  if (static_cast<Eigen::Index>(p.lambdas.size()) != p.n)
    throw Error(ErrorCode::dimension_mismatch,
                "expected " + std::to_string(p.n) + " eigenvalues");
  require_simplex(p.lambdas);
  if (!std::is_sorted(p.lambdas.rbegin(), p.lambdas.rend()))
    throw Error(ErrorCode::invalid_simplex,
                "eigenvalues must be in descending order");
  if (static_cast<Eigen::Index>(p.zvecs.size()) != p.n - 1)
    throw Error(ErrorCode::dimension_mismatch,
                "expected " + std::to_string(p.n - 1) + " z-vectors");
  for (std::size_t k = 0; k < p.zvecs.size(); ++k) {
    const auto j = static_cast<Eigen::Index>(k) + 2;
    if (p.zvecs[k].size() != j - 1)
      throw Error(ErrorCode::dimension_mismatch,
                  "z_" + std::to_string(j) + " must have length " +
                      std::to_string(j - 1));
  }
}

/// The j x j block V^j: [[I - (1-c) z~ z~^dagger, s z~], [-s z~^dagger, c]]
/// with theta = ||z||, z~ = z / theta. Returns I_j for z = 0.
inline ComplexMatrix build_Vjn(const ComplexVector& z, Eigen::Index j) {
  if (j < 2 || z.size() != j - 1)
    throw Error(ErrorCode::dimension_mismatch,
                "build_Vjn: z has length " + std::to_string(z.size()) +
                    ", expected j-1 = " + std::to_string(j - 1));
  ComplexMatrix v = identity(j);
  const double theta = z.norm();
  if (theta == 0.0) return v;
  const ComplexVector zt = z / theta;
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  const Eigen::Index k = j - 1;
  v.topLeftCorner(k, k) -= (1.0 - c) * zt * zt.adjoint();
  v.topRightCorner(k, 1) = s * zt;
  v.bottomLeftCorner(1, k) = -s * zt.adjoint();
  v(k, k) = c;
  return v;
}

/// Skew-Hermitian generator: z in column j above the diagonal, -z^dagger in
/// row j. Indices j are 1-based as in the chain.
inline ComplexMatrix build_Xj_single(const ComplexVector& z, Eigen::Index n,
                                     Eigen::Index j) {
  if (j < 2 || j > n || z.size() != j - 1)
    throw Error(ErrorCode::dimension_mismatch,
                "build_Xj_single: need 2 <= j <= n and |z| = j-1");
  ComplexMatrix x = zeros(n, n);
  for (Eigen::Index k = 0; k < j - 1; ++k) {
    x(k, j - 1) = z[k];
    x(j - 1, k) = -std::conj(z[k]);
  }
  return x;
}

/// A^j = diag(V, I_{n-j}).
inline ComplexMatrix embed_top_left(const ComplexMatrix& v, Eigen::Index dim) {
  ComplexMatrix a = identity(dim);
  a.topLeftCorner(v.rows(), v.cols()) = v;
  return a;
}

inline DensityMatrix assemble_rho_single(const SingleParams& p,
                                         const Tolerances& tol = {}) {
  validate(p);
  ComplexMatrix rho = zeros(p.n, p.n);
  for (Eigen::Index k = 0; k < p.n; ++k) rho(k, k) = p.lambdas[k];
  // Innermost factor is A^2, so conjugate in order j = 2, 3, ..., n.
  for (Eigen::Index j = 2; j <= p.n; ++j) {
    const ComplexMatrix a =
        embed_top_left(build_Vjn(p.zvecs[j - 2], j), p.n);
    rho = a * rho * a.adjoint();
  }
  return make_state(hermitian_part(rho), p.n, 1, tol);
}

/// Real parameters of an n-level density matrix: n^2 - 1.
constexpr long long param_count(long long n) {
  long long sum = 0;
  for (long long j = 1; j <= n - 1; ++j) sum += 2 * j - 1;
  return sum + 2 * (n - 1);
}

}  // namespace dmparam
