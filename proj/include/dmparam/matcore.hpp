#pragma once

// Dense complex linear algebra kernel. Every matrix function here is
// computed spectrally from a Hermitian eigendecomposition, so results are
// Hermitian (or unitary) to rounding, never truncated series.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <string>

#include "dmparam/error.hpp"

namespace dmparam {

using cplx = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

struct Tolerances {
  double tol_herm = 1e-12;     // relative Hermiticity deviation
  double tol_psd = 1e-10;      // most negative admissible eigenvalue (magnitude)
  double tol_unitary = 1e-10;
  double tol_recon = 1e-10;

  bool valid() const {
    for (double t : {tol_herm, tol_psd, tol_unitary, tol_recon})
      if (!(t > 0.0 && t < 1e-6)) return false;
    return true;
  }
};

/// Eigenvalues ascending, eigenvectors as unitary columns.
struct Spectrum {
  RealVector eigenvalues;
  ComplexMatrix eigenvectors;

  ComplexMatrix reconstruct() const {
    return eigenvectors * eigenvalues.cast<cplx>().asDiagonal() *
           eigenvectors.adjoint();
  }
};

inline ComplexMatrix identity(Eigen::Index n) {
  return ComplexMatrix::Identity(n, n);
}

inline ComplexMatrix zeros(Eigen::Index r, Eigen::Index c) {
  return ComplexMatrix::Zero(r, c);
}

inline ComplexMatrix hermitian_part(const ComplexMatrix& m) {
  return 0.5 * (m + m.adjoint());
}

inline bool all_finite(const ComplexMatrix& m) {
  return m.allFinite();
}

/// ||U^dagger U - I||_F
inline double unitarity_residual(const ComplexMatrix& u) {
  return (u.adjoint() * u - identity(u.cols())).norm();
}

inline double hermiticity_deviation(const ComplexMatrix& m) {
  return (m - m.adjoint()).norm();
}

namespace detail {

inline void require_square(const ComplexMatrix& m, const char* who) {
  if (m.rows() != m.cols() || m.rows() < 1)
    throw Error(ErrorCode::not_square,
                std::string(who) + ": expected a non-empty square matrix, got " +
                    std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
}

inline void require_hermitian(const ComplexMatrix& m, const Tolerances& tol,
                              const char* who) {
  const double dev = hermiticity_deviation(m);
  if (dev > tol.tol_herm * std::max(m.norm(), 1e-300) && dev > 0.0)
    throw Error(ErrorCode::not_hermitian,
                std::string(who) + ": Hermiticity deviation " +
                    std::to_string(dev),
                dev);
}

}  // namespace detail

inline Spectrum herm_eig(const ComplexMatrix& m, const Tolerances& tol = {}) {
  detail::require_square(m, "herm_eig");
  if (!all_finite(m))
    throw Error(ErrorCode::not_hermitian, "herm_eig: non-finite entries");
  detail::require_hermitian(m, tol, "herm_eig");

  Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(hermitian_part(m));
  if (solver.info() != Eigen::Success)
    throw Error(ErrorCode::convergence_failure, "herm_eig: solver failed");

  Spectrum s{solver.eigenvalues(), solver.eigenvectors()};
  const double resid = (s.reconstruct() - m).norm();
  if (resid > tol.tol_recon * std::max(1.0, m.norm()))
    throw Error(ErrorCode::convergence_failure,
                "herm_eig: reconstruction residual " + std::to_string(resid),
                resid);
  return s;
}

/// exp(X) for skew-Hermitian X, via the spectrum of the Hermitian iX.
inline ComplexMatrix expm_skew(const ComplexMatrix& x,
                               const Tolerances& tol = {}) {
  detail::require_square(x, "expm_skew");
  const double dev = (x + x.adjoint()).norm();
  if (dev > tol.tol_herm * std::max(x.norm(), 1e-300) && dev > 0.0)
    throw Error(ErrorCode::not_skew_hermitian,
                "expm_skew: ||X + X^dagger|| = " + std::to_string(dev), dev);

  const ComplexMatrix h = cplx(0.0, 1.0) * x;
  const Spectrum s = herm_eig(h, tol);
  // X = -iH, so exp(X) = V diag(exp(-i h)) V^dagger.
  ComplexVector phases(s.eigenvalues.size());
  for (Eigen::Index k = 0; k < phases.size(); ++k)
    phases[k] = std::exp(cplx(0.0, -s.eigenvalues[k]));
  return s.eigenvectors * phases.asDiagonal() * s.eigenvectors.adjoint();
}

enum class MatFun { cos, sin, sqrt };

/// f(P) for Hermitian PSD P. Eigenvalues in [-tol_psd, 0) are clipped to 0.
inline ComplexMatrix matfun_psd(const ComplexMatrix& p, MatFun f,
                                const Tolerances& tol = {}) {
  detail::require_square(p, "matfun_psd");
  const Spectrum s = herm_eig(p, tol);
  const double min_eig = s.eigenvalues.minCoeff();
  if (min_eig < -tol.tol_psd)
    throw Error(ErrorCode::not_psd,
                "matfun_psd: eigenvalue " + std::to_string(min_eig), min_eig);

  RealVector fv(s.eigenvalues.size());
  for (Eigen::Index k = 0; k < fv.size(); ++k) {
    const double x = std::max(s.eigenvalues[k], 0.0);
    switch (f) {
      case MatFun::cos: fv[k] = std::cos(x); break;
      case MatFun::sin: fv[k] = std::sin(x); break;
      case MatFun::sqrt: fv[k] = std::sqrt(x); break;
    }
  }
  return hermitian_part(s.eigenvectors * fv.cast<cplx>().asDiagonal() *
                        s.eigenvectors.adjoint());
}

struct Polar {
  ComplexMatrix positive;  // P = sqrt(Z Z^dagger)
  ComplexMatrix unitary;   // U, Z = P U
};

/// Left polar decomposition Z = P U. For singular Z the SVD pairs the kernel
/// basis with the cokernel basis, so U is still exactly unitary.
inline Polar polar(const ComplexMatrix& z, const Tolerances& /*tol*/ = {}) {
  detail::require_square(z, "polar");
  Eigen::JacobiSVD<ComplexMatrix> svd(z, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const ComplexMatrix& w = svd.matrixU();
  const ComplexMatrix& v = svd.matrixV();
  const ComplexMatrix p =
      w * svd.singularValues().cast<cplx>().asDiagonal() * w.adjoint();
  return {hermitian_part(p), w * v.adjoint()};
}

struct PsdResult {
  bool is_psd;
  double min_eig;
};

inline PsdResult psd_check(const ComplexMatrix& m, const Tolerances& tol = {}) {
  const Spectrum s = herm_eig(m, tol);
  const double min_eig = s.eigenvalues.minCoeff();
  return {min_eig >= -tol.tol_psd, min_eig};
}

/// Haar-distributed m x m unitary: QR of a complex Ginibre matrix with the
/// diagonal of R phase-fixed. Deterministic for a given seed.
inline ComplexMatrix haar_unitary(Eigen::Index m, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  ComplexMatrix g(m, m);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < m; ++j) {
      const double re = normal(rng);
      const double im = normal(rng);
      g(i, j) = cplx(re, im);
    }
  Eigen::HouseholderQR<ComplexMatrix> qr(g);
  ComplexMatrix q = qr.householderQ();
  const ComplexMatrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index k = 0; k < m; ++k) {
    const cplx d = r(k, k);
    const double a = std::abs(d);
    q.col(k) *= (a > 0.0) ? d / a : cplx(1.0, 0.0);
  }
  return q;
}

inline ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b) {
  ComplexMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

}  // namespace dmparam
