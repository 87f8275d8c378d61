#pragma once

// Partial transpose and the Peres (PPT) test for states viewed as n x n grids
// of m x m blocks, rho = sum_ij |i><j| (x) rho_ij. PPT is necessary for
// separability and sufficient only for 2x2 and 2x3; verdicts are labelled PPT.

#include <array>
#include <cmath>
#include <numbers>
#include <string_view>

#include "dmparam/matcore.hpp"
#include "dmparam/state.hpp"

namespace dmparam {

enum class Subsystem { first, second };

constexpr std::string_view to_string(Subsystem s) {
  return s == Subsystem::first ? "first" : "second";
}

struct PptReport {
  bool is_ppt = false;
  double min_pt_eig = 0.0;
  Subsystem subsystem = Subsystem::second;
};

inline ComplexMatrix partial_transpose(const DensityMatrix& rho,
                                       Subsystem which = Subsystem::second) {
  const Eigen::Index n = rho.n;
  const Eigen::Index m = rho.m;
  if (n < 1 || m < 1 || rho.mat.rows() != n * m || rho.mat.cols() != n * m)
    throw Error(ErrorCode::missing_factorization,
                "partial_transpose: matrix does not carry a valid n x m split");
  ComplexMatrix out(n * m, n * m);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      if (which == Subsystem::second)
        out.block(i * m, j * m, m, m) = rho.mat.block(i * m, j * m, m, m).transpose();
      else
        out.block(i * m, j * m, m, m) = rho.mat.block(j * m, i * m, m, m);
    }
  return out;
}

inline PptReport ppt_check(const DensityMatrix& rho, const Tolerances& tol = {},
                           Subsystem which = Subsystem::second) {
  const PsdResult r = psd_check(partial_transpose(rho, which), tol);
  return {r.is_psd, r.min_eig, which};
}

/// Slack of the two analytic circulant-family inequalities
///   p3 cb^2 + p4 sb^2 >= |p1 - p2| sb cb,
///   p1 ca^2 + p2 sa^2 >= |p3 - p4| sa ca.
/// They match the partial-transpose test on the Bell-diagonal slice
/// (alpha = beta = pi/4) and whenever p1 = p2; elsewhere they can disagree
/// with the spectrum of the partial transpose.
inline std::array<double, 2> circulant_margins(const std::array<double, 4>& p,
                                               double alpha, double beta) {
  require_simplex(p);
  constexpr double half_pi = std::numbers::pi / 2.0;
  for (double a : {alpha, beta})
    if (!(a >= 0.0 && a <= half_pi))
      throw Error(ErrorCode::angle_out_of_range,
                  "angle " + std::to_string(a) + " outside [0, pi/2]", a);
  const double sa = std::sin(alpha), ca = std::cos(alpha);
  const double sb = std::sin(beta), cb = std::cos(beta);
  return {p[2] * cb * cb + p[3] * sb * sb - std::abs(p[0] - p[1]) * sb * cb,
          p[0] * ca * ca + p[1] * sa * sa - std::abs(p[2] - p[3]) * sa * ca};
}

inline bool circulant_conditions(const std::array<double, 4>& p, double alpha,
                                 double beta) {
  const auto margins = circulant_margins(p, alpha, beta);
  return margins[0] >= 0.0 && margins[1] >= 0.0;
}

enum class Structure { block_diagonal, block_toeplitz, block_hankel, none };

constexpr std::string_view to_string(Structure s) {
  switch (s) {
    case Structure::block_diagonal: return "block_diagonal";
    case Structure::block_toeplitz: return "block_toeplitz";
    case Structure::block_hankel: return "block_hankel";
    case Structure::none: return "none";
  }
  return "none";
}

inline constexpr double kStructureTol = 1e-10;

/// Classifies a 2 x m state. Precedence: block diagonal, Toeplitz (equal
/// diagonal blocks), Hankel (equal off-diagonal blocks).
inline Structure detect_structure(const DensityMatrix& rho,
                                  const Tolerances& /*tol*/ = {}) {
  if (rho.n != 2 || rho.mat.rows() != 2 * rho.m || rho.mat.cols() != 2 * rho.m)
    throw Error(ErrorCode::unsupported_shape,
                "detect_structure: only 2 x m factorizations are supported");
  const Eigen::Index m = rho.m;
  const double scale = std::max(rho.mat.norm(), 1e-300);
  const auto a = rho.mat.topLeftCorner(m, m);
  const auto b = rho.mat.topRightCorner(m, m);
  const auto bd = rho.mat.bottomLeftCorner(m, m);
  const auto d = rho.mat.bottomRightCorner(m, m);
  const auto close = [scale](double diff) { return diff <= kStructureTol * scale; };
  if (close(b.norm()) && close(bd.norm())) return Structure::block_diagonal;
  if (close((a - d).norm())) return Structure::block_toeplitz;
  if (close((b - bd).norm())) return Structure::block_hankel;
  return Structure::none;
}

}  // namespace dmparam
