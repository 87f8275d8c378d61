#pragma once

#include <cmath>
#include <span>
#include <string>

#include "dmparam/matcore.hpp"

namespace dmparam {

/// An nm x nm density matrix together with its declared C^n (x) C^m split.
struct DensityMatrix {
  Eigen::Index n = 0;
  Eigen::Index m = 1;
  ComplexMatrix mat;

  Eigen::Index dim() const { return mat.rows(); }
};

struct StateDiagnostics {
  double hermiticity = 0.0;  // ||rho - rho^dagger||_F
  double min_eig = 0.0;
  double trace_error = 0.0;  // |Tr rho - 1|
  bool hermitian = false;
  bool psd = false;
  bool unit_trace = false;

  bool is_state() const { return hermitian && psd && unit_trace; }
};

inline constexpr double kTraceTol = 1e-10;

inline StateDiagnostics diagnose_state(const ComplexMatrix& rho,
                                       const Tolerances& tol = {}) {
  StateDiagnostics d;
  if (rho.rows() != rho.cols() || rho.rows() == 0 || !rho.allFinite())
    return d;
  d.hermiticity = hermiticity_deviation(rho);
  d.hermitian = d.hermiticity <= tol.tol_herm * std::max(rho.norm(), 1e-300);
  d.trace_error = std::abs(rho.trace() - cplx(1.0, 0.0));
  d.unit_trace = d.trace_error <= kTraceTol;
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(hermitian_part(rho),
                                                      Eigen::EigenvaluesOnly);
  d.min_eig = solver.eigenvalues().minCoeff();
  d.psd = d.min_eig >= -tol.tol_psd;
  return d;
}

/// Validates rho and wraps it; throws NotHermitian / NotPSD / NotAState.
inline DensityMatrix make_state(ComplexMatrix rho, Eigen::Index n,
                                Eigen::Index m, const Tolerances& tol = {}) {
  if (rho.rows() != n * m || rho.cols() != n * m)
    throw Error(ErrorCode::dimension_mismatch,
                "state of size " + std::to_string(rho.rows()) +
                    " does not match n*m = " + std::to_string(n * m));
  const StateDiagnostics d = diagnose_state(rho, tol);
  if (!d.hermitian)
    throw Error(ErrorCode::not_hermitian, "state not Hermitian", d.hermiticity);
  if (!d.psd)
    throw Error(ErrorCode::not_psd,
                "state has eigenvalue " + std::to_string(d.min_eig), d.min_eig);
  if (!d.unit_trace)
    throw Error(ErrorCode::not_a_state,
                "trace deviates from 1 by " + std::to_string(d.trace_error),
                d.trace_error);
  return {n, m, hermitian_part(rho)};
}

inline void require_simplex(std::span<const double> lambdas, double tol = 1e-12) {
  double sum = 0.0;
  for (double l : lambdas) {
    if (!std::isfinite(l) || l < 0.0)
      throw Error(ErrorCode::invalid_simplex,
                  "negative or non-finite weight " + std::to_string(l), l);
    sum += l;
  }
  if (std::abs(sum - 1.0) > tol)
    throw Error(ErrorCode::invalid_simplex,
                "weights sum to " + std::to_string(sum), sum - 1.0);
}

}  // namespace dmparam
