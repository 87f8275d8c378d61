#pragma once

// Named bipartite state families. Each 2 x m family has a closed form and a
// BlockParams recipe (the *_params functions) so the two can be compared.
// Basis ordering for 2 x 2 is |00>, |01>, |10>, |11>.

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "dmparam/block_param.hpp"
#include "dmparam/entanglement.hpp"
#include "dmparam/matcore.hpp"
#include "dmparam/state.hpp"

namespace dmparam {

inline ComplexMatrix pauli_x() {
  ComplexMatrix s = zeros(2, 2);
  s(0, 1) = 1.0;
  s(1, 0) = 1.0;
  return s;
}

inline ComplexMatrix pauli_z() {
  ComplexMatrix s = zeros(2, 2);
  s(0, 0) = 1.0;
  s(1, 1) = -1.0;
  return s;
}

inline constexpr double kConditionTol = 1e-10;

namespace detail {

inline ComplexMatrix real_matrix(std::initializer_list<std::initializer_list<double>> rows) {
  ComplexMatrix out(static_cast<Eigen::Index>(rows.size()),
                    static_cast<Eigen::Index>(rows.begin()->size()));
  Eigen::Index i = 0;
  for (const auto& r : rows) {
    Eigen::Index j = 0;
    for (double v : r) out(i, j++) = v;
    ++i;
  }
  return out;
}

inline void require_unitary(const ComplexMatrix& u, const Tolerances& tol,
                            const char* who) {
  if (u.rows() != u.cols())
    throw Error(ErrorCode::not_unitary, std::string(who) + ": U not square");
  const double r = unitarity_residual(u);
  if (r > tol.tol_unitary)
    throw Error(ErrorCode::not_unitary,
                std::string(who) + ": unitarity residual " + std::to_string(r), r);
}

inline void require_psd(const ComplexMatrix& p, const Tolerances& tol,
                        const char* who, const char* name) {
  if (p.rows() != p.cols())
    throw Error(ErrorCode::not_psd, std::string(who) + ": " + name + " not square");
  const PsdResult r = psd_check(p, tol);
  if (!r.is_psd)
    throw Error(ErrorCode::not_psd,
                std::string(who) + ": " + name + " has eigenvalue " +
                    std::to_string(r.min_eig),
                r.min_eig);
}

inline void require_condition(double residual, const char* who,
                              const char* condition) {
  if (residual > kConditionTol)
    throw Error(ErrorCode::condition_violated,
                std::string(who) + ": " + condition + " violated, residual " +
                    std::to_string(residual),
                residual);
}

/// Splits a PSD block into clipped eigenvalues and eigenvectors.
inline void append_spectrum(const ComplexMatrix& block, const Tolerances& tol,
                            std::vector<double>& lambdas,
                            std::vector<ComplexMatrix>& unitaries) {
  const Spectrum s = herm_eig(block, tol);
  for (Eigen::Index k = 0; k < s.eigenvalues.size(); ++k)
    lambdas.push_back(std::max(s.eigenvalues[k], 0.0));
  unitaries.push_back(s.eigenvectors);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// 2 x 2 families

/// psi = sin(a)|00> + cos(a)|11>.
inline DensityMatrix pure_P(double alpha) {
  const double s = std::sin(alpha), c = std::cos(alpha);
  return {2, 2,
          detail::real_matrix({{s * s, 0, 0, s * c},
                               {0, 0, 0, 0},
                               {0, 0, 0, 0},
                               {s * c, 0, 0, c * c}})};
}

inline BlockParams pure_P_params(double alpha) {
  return {2, 2, {0.0, 0.0, 0.0, 1.0}, identity_unitaries(2, 2),
          {{alpha * pauli_x()}}};
}

inline void require_isotropic_range(double p) {
  if (!(p >= -1.0 / 3.0 && p <= 1.0))
    throw Error(ErrorCode::out_of_range,
                "isotropic parameter p = " + std::to_string(p) +
                    " outside [-1/3, 1]",
                p);
}

inline DensityMatrix isotropic(double p) {
  require_isotropic_range(p);
  const double d = (1.0 + p) / 4.0, o = (1.0 - p) / 4.0, x = p / 2.0;
  return {2, 2,
          detail::real_matrix({{d, 0, 0, x}, {0, o, 0, 0}, {0, 0, o, 0}, {x, 0, 0, d}})};
}

inline BlockParams isotropic_alpha_params(double p, double alpha) {
  require_isotropic_range(p);
  const double o = (1.0 - p) / 4.0;
  return {2, 2, {o, o, o, (1.0 + 3.0 * p) / 4.0}, identity_unitaries(2, 2),
          {{alpha * pauli_x()}}};
}

inline BlockParams isotropic_params(double p) {
  return isotropic_alpha_params(p, std::numbers::pi / 4.0);
}

/// Largest p for which I(p, alpha) is PPT.
inline double sep_threshold(double alpha) {
  return 1.0 / (1.0 + 2.0 * std::sin(2.0 * alpha));
}

/// (1-p)/4 I + p P(alpha), validated as a state.
inline DensityMatrix isotropic_alpha(double p, double alpha,
                                     const Tolerances& tol = {}) {
  ComplexMatrix rho = (1.0 - p) / 4.0 * identity(4) + p * pure_P(alpha).mat;
  return make_state(std::move(rho), 2, 2, tol);
}

inline void require_circulant_inputs(const std::array<double, 4>& p,
                                     double alpha, double beta) {
  (void)circulant_margins(p, alpha, beta);
}

/// Lambda_1 = diag(p2, p4), Lambda_2 = diag(p3, p1), Xi_2 = diag(alpha, beta),
/// U = sigma_x, written out entrywise.
inline DensityMatrix circulant_rho(const std::array<double, 4>& p, double alpha,
                                   double beta) {
  require_circulant_inputs(p, alpha, beta);
  const auto [p1, p2, p3, p4] = p;
  const double sa = std::sin(alpha), ca = std::cos(alpha);
  const double sb = std::sin(beta), cb = std::cos(beta);
  const double x03 = (p1 - p2) * sb * cb;
  const double x12 = (p3 - p4) * sa * ca;
  return {2, 2,
          detail::real_matrix({{p1 * sb * sb + p2 * cb * cb, 0, 0, x03},
                               {0, p3 * sa * sa + p4 * ca * ca, x12, 0},
                               {0, x12, p3 * ca * ca + p4 * sa * sa, 0},
                               {x03, 0, 0, p1 * cb * cb + p2 * sb * sb}})};
}

inline BlockParams circulant_params(const std::array<double, 4>& p, double alpha,
                                    double beta) {
  require_circulant_inputs(p, alpha, beta);
  ComplexMatrix xi = zeros(2, 2);
  xi(0, 0) = alpha;
  xi(1, 1) = beta;
  return {2, 2, {p[1], p[3], p[2], p[0]}, identity_unitaries(2, 2),
          {{pauli_x() * xi}}};
}

inline DensityMatrix bell_diagonal(const std::array<double, 4>& p) {
  require_simplex(p);
  const auto [p1, p2, p3, p4] = p;
  const double a = (p1 + p2) / 2, b = (p1 - p2) / 2;
  const double c = (p3 + p4) / 2, d = (p3 - p4) / 2;
  return {2, 2,
          detail::real_matrix({{a, 0, 0, b}, {0, c, d, 0}, {0, d, c, 0}, {b, 0, 0, a}})};
}

// ---------------------------------------------------------------------------
// 2 x m families

/// General 2 x m state from V^2 with Z~ = U:
///   diag(U, I) [[C U'L1U C + S L2 S, S L2 C - C U'L1U S],
///               [C L2 S - S U'L1U C, C L2 C + S U'L1U S]] diag(U', I)
/// with C = cos Xi2, S = sin Xi2 and U' = U^dagger.
inline DensityMatrix two_by_m(const ComplexMatrix& u, const ComplexMatrix& l1,
                              const ComplexMatrix& l2, const ComplexMatrix& xi2,
                              const Tolerances& tol = {}) {
  const Eigen::Index m = u.rows();
  for (const auto* blk : {&l1, &l2, &xi2})
    if (blk->rows() != m || blk->cols() != m)
      throw Error(ErrorCode::dimension_mismatch, "two_by_m: all inputs must be m x m");
  detail::require_unitary(u, tol, "two_by_m");
  detail::require_psd(l1, tol, "two_by_m", "L1");
  detail::require_psd(l2, tol, "two_by_m", "L2");
  detail::require_psd(xi2, tol, "two_by_m", "Xi2");
  const double tr_err = std::abs((l1 + l2).trace() - cplx(1.0, 0.0));
  if (tr_err > kTraceTol)
    throw Error(ErrorCode::bad_normalization,
                "two_by_m: Tr(L1 + L2) deviates from 1 by " + std::to_string(tr_err),
                tr_err);

  const ComplexMatrix c = matfun_psd(xi2, MatFun::cos, tol);
  const ComplexMatrix s = matfun_psd(xi2, MatFun::sin, tol);
  const ComplexMatrix l1r = u.adjoint() * l1 * u;
  ComplexMatrix inner(2 * m, 2 * m);
  inner.topLeftCorner(m, m) = c * l1r * c + s * l2 * s;
  inner.topRightCorner(m, m) = s * l2 * c - c * l1r * s;
  inner.bottomLeftCorner(m, m) = c * l2 * s - s * l1r * c;
  inner.bottomRightCorner(m, m) = c * l2 * c + s * l1r * s;
  ComplexMatrix w = identity(2 * m);
  w.topLeftCorner(m, m) = u;
  return make_state(hermitian_part(w * inner * w.adjoint()), 2, m, tol);
}

/// Generic-path inputs for two_by_m: Z_2 = U Xi2, so that Z~ = U.
inline BlockParams two_by_m_params(const ComplexMatrix& u, const ComplexMatrix& l1,
                                   const ComplexMatrix& l2, const ComplexMatrix& xi2,
                                   const Tolerances& tol = {}) {
  BlockParams p;
  p.n = 2;
  p.m = u.rows();
  detail::append_spectrum(l1, tol, p.lambdas, p.local_unitaries);
  detail::append_spectrum(l2, tol, p.lambdas, p.local_unitaries);
  p.blockvecs = {{u * xi2}};
  return p;
}

/// Block Toeplitz state [[A, UB], [(UB)^dagger, A]] with
/// A = C L C + S L S and B = S L C - C L S. Requires [L, U] = 0,
/// U A U^dagger = A and Tr(2L) = 1.
inline DensityMatrix toeplitz_state(const ComplexMatrix& l, const ComplexMatrix& u,
                                    const ComplexMatrix& xi2,
                                    const Tolerances& tol = {}) {
  const Eigen::Index m = u.rows();
  if (l.rows() != m || l.cols() != m || xi2.rows() != m || xi2.cols() != m)
    throw Error(ErrorCode::dimension_mismatch, "toeplitz_state: inputs must be m x m");
  detail::require_unitary(u, tol, "toeplitz_state");
  detail::require_psd(l, tol, "toeplitz_state", "L");
  detail::require_psd(xi2, tol, "toeplitz_state", "Xi2");
  detail::require_condition((l * u - u * l).norm(), "toeplitz_state", "[L, U] = 0");
  const double tr_err = std::abs(2.0 * l.trace() - cplx(1.0, 0.0));
  if (tr_err > kTraceTol)
    throw Error(ErrorCode::bad_normalization,
                "toeplitz_state: Tr(2L) deviates from 1 by " + std::to_string(tr_err),
                tr_err);

  const ComplexMatrix c = matfun_psd(xi2, MatFun::cos, tol);
  const ComplexMatrix s = matfun_psd(xi2, MatFun::sin, tol);
  const ComplexMatrix a = hermitian_part(c * l * c + s * l * s);
  const ComplexMatrix b = s * l * c - c * l * s;
  detail::require_condition((u * a * u.adjoint() - a).norm(), "toeplitz_state",
                            "U A U^dagger = A");
  const ComplexMatrix ub = u * b;
  ComplexMatrix rho(2 * m, 2 * m);
  rho << a, ub, ub.adjoint(), a;
  return make_state(std::move(rho), 2, m, tol);
}

/// Block Hankel state [[U A1 U^dagger, X], [X, A2]] with X = U B',
/// B' = S C (L2 - U^dagger L1 U), A1 = C U'L1U C + S L2 S,
/// A2 = C L2 C + S U'L1U S. Requires [U'L1U, Xi2] = 0, [L2, Xi2] = 0 and
/// U B' = B' U^dagger.
inline DensityMatrix hankel_state(const ComplexMatrix& u, const ComplexMatrix& l1,
                                  const ComplexMatrix& l2, const ComplexMatrix& xi2,
                                  const Tolerances& tol = {}) {
  const Eigen::Index m = u.rows();
  for (const auto* blk : {&l1, &l2, &xi2})
    if (blk->rows() != m || blk->cols() != m)
      throw Error(ErrorCode::dimension_mismatch, "hankel_state: inputs must be m x m");
  detail::require_unitary(u, tol, "hankel_state");
  detail::require_psd(l1, tol, "hankel_state", "L1");
  detail::require_psd(l2, tol, "hankel_state", "L2");
  detail::require_psd(xi2, tol, "hankel_state", "Xi2");
  const double tr_err = std::abs((l1 + l2).trace() - cplx(1.0, 0.0));
  if (tr_err > kTraceTol)
    throw Error(ErrorCode::bad_normalization,
                "hankel_state: Tr(L1 + L2) deviates from 1 by " + std::to_string(tr_err),
                tr_err);

  const ComplexMatrix l1r = u.adjoint() * l1 * u;
  detail::require_condition((l1r * xi2 - xi2 * l1r).norm(), "hankel_state",
                            "[U^dagger L1 U, Xi2] = 0");
  detail::require_condition((l2 * xi2 - xi2 * l2).norm(), "hankel_state",
                            "[L2, Xi2] = 0");
  const ComplexMatrix c = matfun_psd(xi2, MatFun::cos, tol);
  const ComplexMatrix s = matfun_psd(xi2, MatFun::sin, tol);
  const ComplexMatrix bp = s * c * (l2 - l1r);
  detail::require_condition((u * bp - bp * u.adjoint()).norm(), "hankel_state",
                            "U B' = B' U^dagger");
  const ComplexMatrix a1 = c * l1r * c + s * l2 * s;
  const ComplexMatrix a2 = c * l2 * c + s * l1r * s;
  const ComplexMatrix x = hermitian_part(u * bp);
  ComplexMatrix rho(2 * m, 2 * m);
  rho << hermitian_part(u * a1 * u.adjoint()), x, x, hermitian_part(a2);
  return make_state(std::move(rho), 2, m, tol);
}

// ---------------------------------------------------------------------------
// Class 3: rho = (1/m) A^n D(0|...|0|I) A^n^dagger

inline BlockParams class3_params(Eigen::Index n, Eigen::Index m,
                                 const BlockVector& zn) {
  if (n < 2 || m < 1 || static_cast<Eigen::Index>(zn.size()) != n - 1)
    throw Error(ErrorCode::dimension_mismatch,
                "class3_state: Z_n must have n-1 blocks");
  for (const auto& b : zn)
    if (b.rows() != m || b.cols() != m)
      throw Error(ErrorCode::dimension_mismatch, "class3_state: blocks must be m x m");
  BlockParams p;
  p.n = n;
  p.m = m;
  p.lambdas.assign(static_cast<std::size_t>(n * m), 0.0);
  for (Eigen::Index i = 0; i < m; ++i)
    p.lambdas[static_cast<std::size_t>((n - 1) * m + i)] = 1.0 / static_cast<double>(m);
  p.local_unitaries = identity_unitaries(n, m);
  p.blockvecs = zero_blockvecs(n, m);
  p.blockvecs.back() = zn;
  return p;
}

inline DensityMatrix class3_state(Eigen::Index n, Eigen::Index m,
                                  const BlockVector& zn, const Tolerances& tol = {}) {
  return assemble_rho_block(class3_params(n, m, zn), tol);
}

/// Positive polar factors P_k of the normalized blocks Z~_k = P_k U_k.
inline std::vector<ComplexMatrix> class3_polar_parts(const BlockVector& zn,
                                                     const Tolerances& tol = {}) {
  std::vector<ComplexMatrix> ps;
  for (const auto& zt : normalize_blocks(zn, tol)) ps.push_back(polar(zt, tol).positive);
  return ps;
}

/// True iff ||P_1^2 + ... + P_k^2 - I|| <= 1e-10.
inline bool nonabelian_sphere_check(const std::vector<ComplexMatrix>& ps,
                                    const Tolerances& tol = {}) {
  if (ps.empty())
    throw Error(ErrorCode::dimension_mismatch, "nonabelian_sphere_check: no blocks");
  const Eigen::Index m = ps.front().rows();
  ComplexMatrix sum = zeros(m, m);
  for (const auto& p : ps) {
    if (p.rows() != m || p.cols() != m)
      throw Error(ErrorCode::dimension_mismatch,
                  "nonabelian_sphere_check: blocks must all be m x m");
    detail::require_psd(p, tol, "nonabelian_sphere_check", "P_k");
    sum += p * p;
  }
  return (sum - identity(m)).norm() <= kConditionTol;
}

/// (1/m) [[U S^2 U^dagger, U S C], [C S U^dagger, C^2]]; the n = 2 member of
/// class 3 with Z_2 = U Xi2.
inline DensityMatrix nonabelian_bloch(const ComplexMatrix& u, const ComplexMatrix& xi2,
                                      const Tolerances& tol = {}) {
  const Eigen::Index m = u.rows();
  if (xi2.rows() != m || xi2.cols() != m)
    throw Error(ErrorCode::dimension_mismatch, "nonabelian_bloch: Xi2 must be m x m");
  detail::require_unitary(u, tol, "nonabelian_bloch");
  detail::require_psd(xi2, tol, "nonabelian_bloch", "Xi2");
  const ComplexMatrix c = matfun_psd(xi2, MatFun::cos, tol);
  const ComplexMatrix s = matfun_psd(xi2, MatFun::sin, tol);
  ComplexMatrix rho(2 * m, 2 * m);
  rho << u * s * s * u.adjoint(), u * s * c, c * s * u.adjoint(), c * c;
  rho /= static_cast<double>(m);
  return make_state(hermitian_part(rho), 2, m, tol);
}

// ---------------------------------------------------------------------------
// Family specs

struct PurePSpec { double alpha = 0.0; };
struct IsotropicSpec { double p = 0.0; };
struct IsotropicAlphaSpec { double p = 0.0; double alpha = 0.0; };
struct CirculantSpec { std::array<double, 4> p{0.25, 0.25, 0.25, 0.25}; double alpha = 0.0; double beta = 0.0; };
struct BellDiagonalSpec { std::array<double, 4> p{0.25, 0.25, 0.25, 0.25}; };
struct TwoByMSpec { ComplexMatrix u, l1, l2, xi2; };
struct ToeplitzSpec { ComplexMatrix l, u, xi2; };
struct HankelSpec { ComplexMatrix u, l1, l2, xi2; };
struct Class3Spec { Eigen::Index n = 2; Eigen::Index m = 1; BlockVector zn; };
struct NonabelianBlochSpec { ComplexMatrix u, xi2; };

using FamilySpec =
    std::variant<PurePSpec, IsotropicSpec, IsotropicAlphaSpec, CirculantSpec,
                 BellDiagonalSpec, TwoByMSpec, ToeplitzSpec, HankelSpec,
                 Class3Spec, NonabelianBlochSpec>;

inline constexpr std::array<std::string_view, 10> kFamilyNames = {
    "pure_P", "isotropic", "isotropic_alpha", "circulant", "bell_diagonal",
    "two_by_m", "toeplitz", "hankel", "class3", "nonabelian_bloch"};

inline std::string_view family_name(const FamilySpec& spec) {
  return kFamilyNames[spec.index()];
}

template <class... Ts>
struct overloaded : Ts... { using Ts::operator()...; };
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

inline DensityMatrix build_family(const FamilySpec& spec, const Tolerances& tol = {}) {
  return std::visit(
      overloaded{
          [&](const PurePSpec& s) { return make_state(pure_P(s.alpha).mat, 2, 2, tol); },
          [&](const IsotropicSpec& s) { return make_state(isotropic(s.p).mat, 2, 2, tol); },
          [&](const IsotropicAlphaSpec& s) { return isotropic_alpha(s.p, s.alpha, tol); },
          [&](const CirculantSpec& s) {
            return make_state(circulant_rho(s.p, s.alpha, s.beta).mat, 2, 2, tol);
          },
          [&](const BellDiagonalSpec& s) { return make_state(bell_diagonal(s.p).mat, 2, 2, tol); },
          [&](const TwoByMSpec& s) { return two_by_m(s.u, s.l1, s.l2, s.xi2, tol); },
          [&](const ToeplitzSpec& s) { return toeplitz_state(s.l, s.u, s.xi2, tol); },
          [&](const HankelSpec& s) { return hankel_state(s.u, s.l1, s.l2, s.xi2, tol); },
          [&](const Class3Spec& s) { return class3_state(s.n, s.m, s.zn, tol); },
          [&](const NonabelianBlochSpec& s) { return nonabelian_bloch(s.u, s.xi2, tol); },
      },
      spec);
}

/// Closed-form PPT prediction where one is known; nullopt otherwise.
/// Returns the signed margin (>= 0 means PPT predicted).
inline std::optional<double> analytic_ppt_margin(const FamilySpec& spec) {
  return std::visit(
      overloaded{
          [](const PurePSpec& s) -> std::optional<double> {
            return -std::abs(std::sin(s.alpha) * std::cos(s.alpha));
          },
          [](const IsotropicSpec& s) -> std::optional<double> { return 1.0 / 3.0 - s.p; },
          [](const IsotropicAlphaSpec& s) -> std::optional<double> {
            return sep_threshold(s.alpha) - s.p;
          },
          [](const CirculantSpec& s) -> std::optional<double> {
            const auto mg = circulant_margins(s.p, s.alpha, s.beta);
            return std::min(mg[0], mg[1]);
          },
          [](const BellDiagonalSpec& s) -> std::optional<double> {
            return 0.5 - *std::max_element(s.p.begin(), s.p.end());
          },
          [](const auto&) -> std::optional<double> { return std::nullopt; },
      },
      spec);
}

/// Sets a named scalar parameter (used by grid sweeps). Returns false if the
/// family has no such parameter.
inline bool set_scalar_param(FamilySpec& spec, std::string_view name, double value) {
  return std::visit(
      overloaded{
          [&](PurePSpec& s) {
            if (name == "alpha") { s.alpha = value; return true; }
            return false;
          },
          [&](IsotropicSpec& s) {
            if (name == "p") { s.p = value; return true; }
            return false;
          },
          [&](IsotropicAlphaSpec& s) {
            if (name == "p") { s.p = value; return true; }
            if (name == "alpha") { s.alpha = value; return true; }
            return false;
          },
          [&](CirculantSpec& s) {
            if (name == "alpha") { s.alpha = value; return true; }
            if (name == "beta") { s.beta = value; return true; }
            for (std::size_t k = 0; k < 4; ++k)
              if (name == "p" + std::to_string(k + 1)) { s.p[k] = value; return true; }
            return false;
          },
          [&](BellDiagonalSpec& s) {
            for (std::size_t k = 0; k < 4; ++k)
              if (name == "p" + std::to_string(k + 1)) { s.p[k] = value; return true; }
            return false;
          },
          [&](auto&) { return false; },
      },
      spec);
}

}  // namespace dmparam
