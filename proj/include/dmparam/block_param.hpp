#pragma once

// Block version of the Jarlskog chain for C^n (x) C^m. Scalars z_{k,j} become
// m x m blocks Z_{k,j}, the angle theta_j becomes the PSD matrix angle
//   Xi_j = sqrt(sum_k Z_{k,j}^dagger Z_{k,j}),
// and the diagonal part of the unitary is absorbed into the blocks
// Lambda_k = U_k diag(lambda slice k) U_k^dagger.
//
// Conventions:
//  * slice k (1-based) is lambda_{(k-1)m+1} .. lambda_{km};
//  * normalization is right-division, Z~_{k,j} = Z_{k,j} Xi_j^{-1}, which
//    gives sum_k Z~^dagger Z~ = I exactly;
//  * the upper-left corner of V^j is delta_kl I - Z~_k (I - C) Z~_l^dagger,
//    which is what exp(X_j) produces.

#include <string>
#include <vector>

#include "dmparam/matcore.hpp"
#include "dmparam/single_param.hpp"
#include "dmparam/state.hpp"

namespace dmparam {

using BlockVector = std::vector<ComplexMatrix>;

struct BlockParams {
  Eigen::Index n = 0;
  Eigen::Index m = 0;
  std::vector<double> lambdas;                // nm weights on the simplex
  std::vector<ComplexMatrix> local_unitaries; // U_1..U_n, each m x m
  std::vector<BlockVector> blockvecs;         // blockvecs[j-2] = Z_j, j-1 blocks
};

struct BlockDiagonalCore {
  std::vector<ComplexMatrix> blocks;  // Lambda_1..Lambda_n

  ComplexMatrix matrix() const {
    const Eigen::Index m = blocks.empty() ? 0 : blocks.front().rows();
    const auto n = static_cast<Eigen::Index>(blocks.size());
    ComplexMatrix d = zeros(n * m, n * m);
    for (Eigen::Index k = 0; k < n; ++k)
      d.block(k * m, k * m, m, m) = blocks[static_cast<std::size_t>(k)];
    return d;
  }
};

enum class AssemblyMethod { closed, exp, automatic };

namespace detail {

inline Eigen::Index block_size(const BlockVector& z, const char* who) {
  if (z.empty())
    throw Error(ErrorCode::dimension_mismatch,
                std::string(who) + ": empty block vector");
  const Eigen::Index m = z.front().rows();
  for (const auto& b : z)
    if (b.rows() != m || b.cols() != m || m < 1)
      throw Error(ErrorCode::dimension_mismatch,
                  std::string(who) + ": blocks must all be m x m");
  return m;
}

inline bool all_zero(const BlockVector& z) {
  for (const auto& b : z)
    if (!b.isZero(0.0)) return false;
  return true;
}

}  // namespace detail

inline ComplexMatrix block_angle(const BlockVector& z, const Tolerances& tol = {}) {
  const Eigen::Index m = detail::block_size(z, "block_angle");
  ComplexMatrix gram = zeros(m, m);
  for (const auto& b : z) gram += b.adjoint() * b;
  return matfun_psd(hermitian_part(gram), MatFun::sqrt, tol);
}

/// Z~_k = Z_k Xi^{-1}; throws SingularAngle if Xi has an eigenvalue <= tol_psd.
inline BlockVector normalize_blocks(const BlockVector& z,
                                    const Tolerances& tol = {}) {
  const ComplexMatrix xi = block_angle(z, tol);
  const Spectrum s = herm_eig(xi, tol);
  const double min_eig = s.eigenvalues.minCoeff();
  if (min_eig <= tol.tol_psd)
    throw Error(ErrorCode::singular_angle,
                "matrix angle has eigenvalue " + std::to_string(min_eig) +
                    "; use the exponential path",
                min_eig);
  const ComplexMatrix xi_inv = s.eigenvectors *
                               s.eigenvalues.cwiseInverse().cast<cplx>().asDiagonal() *
                               s.eigenvectors.adjoint();
  BlockVector out;
  out.reserve(z.size());
  for (const auto& b : z) out.push_back(b * xi_inv);
  return out;
}

/// nm x nm generator with Z_j in block column j, -Z_j^dagger in block row j.
inline ComplexMatrix build_Xj_block(const BlockVector& z, Eigen::Index n,
                                    Eigen::Index j, Eigen::Index m) {
  if (j < 2 || j > n || static_cast<Eigen::Index>(z.size()) != j - 1)
    throw Error(ErrorCode::dimension_mismatch,
                "build_Xj_block: need 2 <= j <= n and j-1 blocks");
  if (detail::block_size(z, "build_Xj_block") != m)
    throw Error(ErrorCode::dimension_mismatch, "build_Xj_block: block size != m");
  ComplexMatrix x = zeros(n * m, n * m);
  for (Eigen::Index k = 0; k < j - 1; ++k) {
    const auto& b = z[static_cast<std::size_t>(k)];
    x.block(k * m, (j - 1) * m, m, m) = b;
    x.block((j - 1) * m, k * m, m, m) = -b.adjoint();
  }
  return x;
}

/// Closed-form jm x jm block unitary V^j. Identity for Z_j = 0.
inline ComplexMatrix build_Vjnm(const BlockVector& z, Eigen::Index j,
                                Eigen::Index m, const Tolerances& tol = {}) {
  if (j < 2 || static_cast<Eigen::Index>(z.size()) != j - 1 ||
      detail::block_size(z, "build_Vjnm") != m)
    throw Error(ErrorCode::dimension_mismatch,
                "build_Vjnm: need j-1 blocks of size m x m");
  if (detail::all_zero(z)) return identity(j * m);

  const ComplexMatrix xi = block_angle(z, tol);
  const BlockVector zt = normalize_blocks(z, tol);
  const ComplexMatrix c = matfun_psd(xi, MatFun::cos, tol);
  const ComplexMatrix s = matfun_psd(xi, MatFun::sin, tol);
  const ComplexMatrix one_minus_c = identity(m) - c;

  ComplexMatrix v = zeros(j * m, j * m);
  for (Eigen::Index k = 0; k < j - 1; ++k) {
    const auto& zk = zt[static_cast<std::size_t>(k)];
    for (Eigen::Index l = 0; l < j - 1; ++l) {
      const auto& zl = zt[static_cast<std::size_t>(l)];
      ComplexMatrix blk = -zk * one_minus_c * zl.adjoint();
      if (k == l) blk += identity(m);
      v.block(k * m, l * m, m, m) = blk;
    }
    v.block(k * m, (j - 1) * m, m, m) = zk * s;
    v.block((j - 1) * m, k * m, m, m) = -s * zk.adjoint();
  }
  v.block((j - 1) * m, (j - 1) * m, m, m) = c;
  return v;
}

inline ComplexMatrix build_Ajnm(const BlockVector& z, Eigen::Index n,
                                Eigen::Index j, Eigen::Index m,
                                AssemblyMethod method,
                                const Tolerances& tol = {}) {
  if (j < 2 || j > n)
    throw Error(ErrorCode::dimension_mismatch, "build_Ajnm: need 2 <= j <= n");
  switch (method) {
    case AssemblyMethod::closed:
      return embed_top_left(build_Vjnm(z, j, m, tol), n * m);
    case AssemblyMethod::exp:
      return expm_skew(build_Xj_block(z, n, j, m), tol);
    case AssemblyMethod::automatic:
      try {
        return embed_top_left(build_Vjnm(z, j, m, tol), n * m);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::singular_angle) throw;
        return expm_skew(build_Xj_block(z, n, j, m), tol);
      }
  }
  return {};
}

inline BlockDiagonalCore build_core(const std::vector<double>& lambdas,
                                    const std::vector<ComplexMatrix>& unitaries,
                                    Eigen::Index n, Eigen::Index m,
                                    const Tolerances& tol = {}) {
  if (static_cast<Eigen::Index>(lambdas.size()) != n * m)
    throw Error(ErrorCode::dimension_mismatch,
                "build_core: expected n*m = " + std::to_string(n * m) +
                    " weights");
  require_simplex(lambdas);
  if (static_cast<Eigen::Index>(unitaries.size()) != n)
    throw Error(ErrorCode::dimension_mismatch,
                "build_core: expected " + std::to_string(n) + " local unitaries");

  BlockDiagonalCore core;
  core.blocks.reserve(static_cast<std::size_t>(n));
  for (Eigen::Index k = 0; k < n; ++k) {
    const auto& u = unitaries[static_cast<std::size_t>(k)];
    if (u.rows() != m || u.cols() != m)
      throw Error(ErrorCode::dimension_mismatch,
                  "build_core: U_" + std::to_string(k + 1) + " is not m x m");
    const double resid = unitarity_residual(u);
    if (resid > tol.tol_unitary)
      throw Error(ErrorCode::not_unitary,
                  "build_core: U_" + std::to_string(k + 1) +
                      " unitarity residual " + std::to_string(resid),
                  resid);
    RealVector slice(m);
    for (Eigen::Index i = 0; i < m; ++i)
      slice[i] = lambdas[static_cast<std::size_t>(k * m + i)];
    core.blocks.push_back(
        hermitian_part(u * slice.cast<cplx>().asDiagonal() * u.adjoint()));
  }
  return core;
}

inline void validate(const BlockParams& p, const Tolerances& tol = {}) {
  if (p.n < 1 || p.m < 1)
    throw Error(ErrorCode::dimension_mismatch, "n and m must be >= 1");
  if (static_cast<Eigen::Index>(p.blockvecs.size()) != p.n - 1)
    throw Error(ErrorCode::dimension_mismatch,
                "expected " + std::to_string(p.n - 1) + " block vectors");
  for (std::size_t k = 0; k < p.blockvecs.size(); ++k) {
    const auto j = static_cast<Eigen::Index>(k) + 2;
    const auto& z = p.blockvecs[k];
    if (static_cast<Eigen::Index>(z.size()) != j - 1 ||
        detail::block_size(z, "BlockParams") != p.m)
      throw Error(ErrorCode::dimension_mismatch,
                  "Z_" + std::to_string(j) + " must have " +
                      std::to_string(j - 1) + " blocks of size m x m");
  }
  (void)build_core(p.lambdas, p.local_unitaries, p.n, p.m, tol);
}

/// rho = A^n ... A^2 D(Lambda_1|...|Lambda_n) A^2^dagger ... A^n^dagger.
inline DensityMatrix assemble_rho_block(const BlockParams& p,
                                        const Tolerances& tol = {},
                                        AssemblyMethod method = AssemblyMethod::automatic) {
  validate(p, tol);
  ComplexMatrix rho = build_core(p.lambdas, p.local_unitaries, p.n, p.m, tol).matrix();
  for (Eigen::Index j = 2; j <= p.n; ++j) {
    const ComplexMatrix a =
        build_Ajnm(p.blockvecs[static_cast<std::size_t>(j - 2)], p.n, j, p.m, method, tol);
    rho = a * rho * a.adjoint();
  }
  return make_state(hermitian_part(rho), p.n, p.m, tol);
}

/// Identity local unitaries for n blocks of size m.
inline std::vector<ComplexMatrix> identity_unitaries(Eigen::Index n, Eigen::Index m) {
  return std::vector<ComplexMatrix>(static_cast<std::size_t>(n), identity(m));
}

/// Zero block vectors Z_2..Z_n.
inline std::vector<BlockVector> zero_blockvecs(Eigen::Index n, Eigen::Index m) {
  std::vector<BlockVector> out;
  for (Eigen::Index j = 2; j <= n; ++j)
    out.emplace_back(static_cast<std::size_t>(j - 1), zeros(m, m));
  return out;
}

}  // namespace dmparam
