#pragma once

// Command implementations behind the dmparam executable. Each command writes
// to the given streams and returns the process exit code:
//   0 ok, 2 input error, 3 numerical failure, 4 not a state, 5 check mismatch.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "dmparam/block_param.hpp"
#include "dmparam/entanglement.hpp"
#include "dmparam/families.hpp"
#include "dmparam/io.hpp"
#include "dmparam/random.hpp"
#include "dmparam/single_param.hpp"
#include "dmparam/state.hpp"

namespace dmparam::cli {

enum ExitCode : int {
  kOk = 0,
  kInputError = 2,
  kNumericalFailure = 3,
  kNotAState = 4,
  kCheckMismatch = 5,
};

/// PPT margins closer to zero than this are reported as "boundary".
inline constexpr double kBoundaryBand = 1e-9;

inline int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::dimension_mismatch:
    case ErrorCode::invalid_simplex:
    case ErrorCode::out_of_range:
    case ErrorCode::angle_out_of_range:
    case ErrorCode::not_square:
    case ErrorCode::missing_factorization:
    case ErrorCode::unsupported_shape:
      return kInputError;
    default:
      return kNumericalFailure;
  }
}

// ---------------------------------------------------------------------------
// generate

enum class OutputFormat { json, matrix_text };

inline DensityMatrix build_from_params(const io::Params& params, const Tolerances& tol) {
  return std::visit(
      overloaded{
          [&](const SingleParams& p) { return assemble_rho_single(p, tol); },
          [&](const BlockParams& p) { return assemble_rho_block(p, tol); },
          [&](const FamilySpec& f) { return build_family(f, tol); },
      },
      params);
}

inline void write_state(std::ostream& out, const DensityMatrix& rho, OutputFormat fmt) {
  if (fmt == OutputFormat::json)
    out << io::state_to_json(rho).dump(2) << '\n';
  else
    io::write_matrix_text(out, rho.mat);
}

inline int cmd_generate(const std::string& input, const std::string& output,
                        OutputFormat fmt, const Tolerances& tol, std::ostream& out,
                        std::ostream& err) {
  io::Params params;
  try {
    params = io::parse_params(io::parse_param_file(io::read_json_file(input)));
  } catch (const io::InputError& e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  }
  DensityMatrix rho;
  try {
    rho = build_from_params(params, tol);
  } catch (const Error& e) {
    err << "error: " << e.what() << " (residual " << io::format_double(e.residual())
        << ")\n";
    return exit_code_for(e.code());
  }
  if (output.empty() || output == "-") {
    write_state(out, rho, fmt);
  } else {
    std::ofstream f(output);
    if (!f) {
      err << "error: cannot write " << output << '\n';
      return kInputError;
    }
    write_state(f, rho, fmt);
  }
  return kOk;
}

// ---------------------------------------------------------------------------
// analyze

struct StateReport {
  Eigen::Index n = 0, m = 0;
  StateDiagnostics diagnostics;
  std::vector<double> eigenvalues;
  double purity = 0.0;
  Eigen::Index rank = 0;
  std::optional<PptReport> ppt;
  std::optional<Structure> structure;
};

inline StateReport analyze_state(const ComplexMatrix& mat, Eigen::Index n, Eigen::Index m,
                                 const Tolerances& tol) {
  StateReport r;
  r.n = n;
  r.m = m;
  r.diagnostics = diagnose_state(mat, tol);
  if (!r.diagnostics.hermitian) return r;
  const bool state = r.diagnostics.is_state();
  const DensityMatrix rho{n, m, hermitian_part(mat)};
  const Spectrum s = herm_eig(rho.mat, tol);
  for (Eigen::Index k = s.eigenvalues.size(); k-- > 0;) {
    r.eigenvalues.push_back(s.eigenvalues[k]);
    if (s.eigenvalues[k] > tol.tol_psd) ++r.rank;
  }
  r.purity = (rho.mat * rho.mat).trace().real();
  if (!state) return r;
  r.ppt = ppt_check(rho, tol);
  if (n == 2) r.structure = detect_structure(rho, tol);
  return r;
}

inline std::string ppt_verdict(const PptReport& p) {
  if (std::abs(p.min_pt_eig) < kBoundaryBand) return "boundary";
  return p.is_ppt ? "PPT" : "NPT";
}

inline void print_report(std::ostream& out, const StateReport& r) {
  const auto& d = r.diagnostics;
  out << "dims: [" << r.n << ", " << r.m << "]\n";
  out << "is_state: " << (d.is_state() ? "true" : "false") << '\n';
  out << "hermiticity_deviation: " << io::format_double(d.hermiticity) << '\n';
  out << "trace_error: " << io::format_double(d.trace_error) << '\n';
  out << "min_eigenvalue: " << io::format_double(d.min_eig) << '\n';
  if (r.eigenvalues.empty()) return;
  out << "eigenvalues: [";
  for (std::size_t k = 0; k < r.eigenvalues.size(); ++k)
    out << (k ? ", " : "") << io::format_double(r.eigenvalues[k]);
  out << "]\n";
  out << "purity: " << io::format_double(r.purity) << '\n';
  out << "rank: " << r.rank << '\n';
  if (r.ppt) {
    out << "ppt:\n";
    out << "  subsystem: " << to_string(r.ppt->subsystem) << '\n';
    out << "  min_pt_eig: " << io::format_double(r.ppt->min_pt_eig) << '\n';
    out << "  is_ppt: " << (r.ppt->is_ppt ? "true" : "false") << '\n';
    out << "  verdict: " << ppt_verdict(*r.ppt) << '\n';
  }
  if (r.structure) out << "structure: " << to_string(*r.structure) << '\n';
}

inline int cmd_analyze(const std::string& input, Eigen::Index n, Eigen::Index m,
                       const Tolerances& tol, std::ostream& out, std::ostream& err) {
  ComplexMatrix mat;
  try {
    mat = io::read_matrix_file(input);
  } catch (const io::InputError& e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  }
  if (n < 1 || m < 1 || mat.rows() != n * m || mat.cols() != n * m) {
    err << "error: matrix is " << mat.rows() << "x" << mat.cols()
        << ", expected n*m = " << n * m << " square\n";
    return kInputError;
  }
  StateReport r;
  try {
    r = analyze_state(mat, n, m, tol);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kNumericalFailure;
  }
  print_report(out, r);
  return r.diagnostics.is_state() ? kOk : kNotAState;
}

// ---------------------------------------------------------------------------
// reproduce

class CheckLog {
 public:
  explicit CheckLog(std::ostream& out) : out_(out) {}

  bool check(const std::string& name, bool ok, const std::string& detail = {}) {
    out_ << (ok ? "  ok    " : "  FAIL  ") << name;
    if (!detail.empty()) out_ << "  (" << detail << ")";
    out_ << '\n';
    if (!ok && first_failure_.empty()) first_failure_ = name;
    all_ok_ = all_ok_ && ok;
    return ok;
  }

  bool all_ok() const { return all_ok_; }
  const std::string& first_failure() const { return first_failure_; }
  std::ostream& out() { return out_; }

 private:
  std::ostream& out_;
  bool all_ok_ = true;
  std::string first_failure_;
};

inline std::string fmt_residual(const char* label, double v) {
  return std::string(label) + " = " + io::format_double(v);
}

inline double sorted_max_diff(RealVector a, std::vector<double> b) {
  std::sort(a.data(), a.data() + a.size());
  std::sort(b.begin(), b.end());
  double worst = 0.0;
  for (std::size_t k = 0; k < b.size(); ++k)
    worst = std::max(worst, std::abs(a[static_cast<Eigen::Index>(k)] - b[k]));
  return worst;
}

inline double min_pt_eig(const DensityMatrix& rho, const Tolerances& tol) {
  return ppt_check(rho, tol).min_pt_eig;
}

inline void print_side_by_side(std::ostream& out, const char* title_a, const ComplexMatrix& a,
                               const char* title_b, const ComplexMatrix& b) {
  out << "  " << title_a << ":\n";
  std::ostringstream sa;
  io::write_matrix_text(sa, a);
  std::istringstream ia(sa.str());
  for (std::string line; std::getline(ia, line);) out << "    " << line << '\n';
  out << "  " << title_b << ":\n";
  std::ostringstream sb;
  io::write_matrix_text(sb, b);
  std::istringstream ib(sb.str());
  for (std::string line; std::getline(ib, line);) out << "    " << line << '\n';
}

inline void reproduce_pure_P(CheckLog& log, const Tolerances& tol) {
  for (double alpha : {0.0, std::numbers::pi / 8, std::numbers::pi / 4, std::numbers::pi / 3}) {
    const DensityMatrix closed = pure_P(alpha);
    const DensityMatrix built = assemble_rho_block(pure_P_params(alpha), tol);
    const double diff = (closed.mat - built.mat).cwiseAbs().maxCoeff();
    const double sc = std::sin(alpha) * std::cos(alpha);
    const double pt = min_pt_eig(built, tol);
    log.check("P(alpha) from block chain, alpha = " + io::format_double(alpha), diff <= 1e-12,
              fmt_residual("max entry diff", diff));
    log.check("min PT eigenvalue = -sin(a)cos(a)", std::abs(pt + sc) <= 1e-10,
              fmt_residual("min_pt_eig", pt));
    if (alpha == std::numbers::pi / 4) {
      print_side_by_side(log.out(), "closed form P(pi/4)", closed.mat, "block chain", built.mat);
      log.check("P(pi/4) is NPT with min PT eigenvalue -1/2", std::abs(pt + 0.5) <= 1e-12);
    }
  }
}

/// Partial-transpose spectrum of I(p): (1+p)/4 three times and (1-3p)/4.
inline double isotropic_pt_spectrum_error(double p, const Tolerances& tol) {
  const RealVector got = herm_eig(partial_transpose(isotropic(p)), tol).eigenvalues;
  return sorted_max_diff(got, {(1 + p) / 4, (1 + p) / 4, (1 + p) / 4, (1 - 3 * p) / 4});
}

inline void reproduce_isotropic_threshold(CheckLog& log, const Tolerances& tol) {
  double worst = 0.0, worst_min = 0.0;
  for (int k = 0; k <= 400; ++k) {
    const double p = -1.0 / 3.0 + (4.0 / 3.0) * k / 400.0;
    worst = std::max(worst, isotropic_pt_spectrum_error(p, tol));
    if (p >= 0.0)
      worst_min = std::max(worst_min, std::abs(min_pt_eig(isotropic(p), tol) - (1.0 - 3.0 * p) / 4.0));
  }
  log.check("PT spectrum of I(p) = {(1+p)/4 x3, (1-3p)/4} on [-1/3, 1]", worst <= 1e-12,
            fmt_residual("max deviation", worst));
  log.check("min PT eigenvalue = (1-3p)/4 on [0, 1]", worst_min <= 1e-12,
            fmt_residual("max deviation", worst_min));
  const double below = min_pt_eig(isotropic(1.0 / 3.0 - 1e-10), tol);
  const double above = min_pt_eig(isotropic(1.0 / 3.0 + 1e-10), tol);
  log.check("min PT eigenvalue >= 0 at p = 1/3 - 1e-10", below >= 0.0,
            fmt_residual("value", below));
  log.check("min PT eigenvalue < 0 at p = 1/3 + 1e-10", above < 0.0,
            fmt_residual("value", above));
  const double built_diff =
      (assemble_rho_block(isotropic_params(0.2), tol).mat - isotropic(0.2).mat).norm();
  log.check("I(0.2) closed form equals block chain", built_diff <= 1e-12,
            fmt_residual("residual", built_diff));
}

inline void reproduce_circulant_pi12(CheckLog& log, const Tolerances& tol) {
  const std::array<double, 4> p{1.0 / 8, 1.0 / 8, 1.0 / 8, 5.0 / 8};
  const double beta = std::numbers::pi / 3;
  const double a_in = std::numbers::pi / 12 - 1e-6;
  const double a_out = std::numbers::pi / 12 + 1e-3;
  const PptReport in = ppt_check(make_state(circulant_rho(p, a_in, beta).mat, 2, 2, tol), tol);
  const PptReport out = ppt_check(make_state(circulant_rho(p, a_out, beta).mat, 2, 2, tol), tol);
  log.out() << "  expected: PPT for alpha <= pi/12 and any beta (p = 1/8,1/8,1/8,5/8)\n";
  log.check("PPT at alpha = pi/12 - 1e-6, beta = pi/3", in.is_ppt,
            fmt_residual("min_pt_eig", in.min_pt_eig));
  log.check("NPT at alpha = pi/12 + 1e-3, beta = pi/3", !out.is_ppt,
            fmt_residual("min_pt_eig", out.min_pt_eig));
  log.check("analytic conditions agree at both points",
            circulant_conditions(p, a_in, beta) && !circulant_conditions(p, a_out, beta));
  bool all_beta = true;
  for (int k = 0; k <= 20; ++k)
    all_beta = all_beta &&
               ppt_check(circulant_rho(p, std::numbers::pi / 12, std::numbers::pi / 2 * k / 20.0),
                         tol)
                   .is_ppt;
  log.check("PPT at alpha = pi/12 for 21 values of beta", all_beta);
}

inline void reproduce_bell_boundary(CheckLog& log, const Tolerances& tol) {
  const std::array<double, 4> edge{0.5, 1.0 / 6, 1.0 / 6, 1.0 / 6};
  const std::array<double, 4> inside{0.4, 0.2, 0.2, 0.2};
  const std::array<double, 4> outside{0.6, 0.4 / 3, 0.4 / 3, 0.4 / 3};
  const std::array<double, 4> worked{1.0 / 8, 1.0 / 8, 1.0 / 8, 5.0 / 8};
  const double e = min_pt_eig(bell_diagonal(edge), tol);
  log.check("max p_k = 1/2 sits on the PPT boundary", std::abs(e) <= 1e-12,
            fmt_residual("min_pt_eig", e));
  log.check("max p_k = 0.4 is PPT", ppt_check(bell_diagonal(inside), tol).is_ppt);
  log.check("max p_k = 0.6 is NPT", !ppt_check(bell_diagonal(outside), tol).is_ppt);
  log.check("p = (1/8,1/8,1/8,5/8) is NPT", !ppt_check(bell_diagonal(worked), tol).is_ppt);
  const double diff =
      (circulant_rho(worked, std::numbers::pi / 4, std::numbers::pi / 4).mat -
       bell_diagonal(worked).mat)
          .norm();
  log.check("circulant family at alpha = beta = pi/4 is Bell diagonal", diff <= 1e-15,
            fmt_residual("residual", diff));
}

inline void reproduce_structured(CheckLog& log, const Tolerances& tol, std::uint64_t seed,
                                 bool toeplitz) {
  Sampler sampler(seed);
  const Eigen::Index m = 3;
  const DensityMatrix rho = toeplitz ? build_family(sampler.toeplitz(m), tol)
                                     : build_family(sampler.hankel(m), tol);
  const Structure expected = toeplitz ? Structure::block_toeplitz : Structure::block_hankel;
  const Structure got = detect_structure(rho, tol);
  const PsdResult psd = psd_check(rho.mat, tol);
  const PptReport ppt = ppt_check(rho, tol);
  log.check("state is PSD", psd.is_psd, fmt_residual("min eig", psd.min_eig));
  log.check(std::string("classified as ") + std::string(to_string(expected)), got == expected,
            std::string("got ") + std::string(to_string(got)));
  log.check("PPT", ppt.is_ppt, fmt_residual("min_pt_eig", ppt.min_pt_eig));
}

inline void reproduce_class3(CheckLog& log, const Tolerances& tol, std::uint64_t seed) {
  Sampler sampler(seed);
  const Eigen::Index n = 3, m = 2;
  const BlockVector z = sampler.normal_blocks(n - 1, m);
  const DensityMatrix rho = class3_state(n, m, z, tol);
  const ComplexMatrix mr = static_cast<double>(m) * rho.mat;
  const double idem = (mr * mr - mr).norm();
  const auto spec = herm_eig(rho.mat, tol).eigenvalues;
  const auto rank = (spec.array() > tol.tol_psd).count();
  log.check("(m rho)^2 = m rho", idem <= 1e-10, fmt_residual("residual", idem));
  log.check("rank = m", rank == m, "rank = " + std::to_string(rank));
  log.check("polar parts lie on the nonabelian sphere",
            nonabelian_sphere_check(class3_polar_parts(z, tol), tol));
}

inline const std::vector<std::string>& reproduce_ids() {
  static const std::vector<std::string> ids = {
      "pure_P", "isotropic_threshold", "circulant_pi12", "bell_boundary",
      "toeplitz_demo", "hankel_demo", "class3_projector"};
  return ids;
}

inline int cmd_reproduce(const std::string& id, const Tolerances& tol, std::uint64_t seed,
                         std::ostream& out, std::ostream& err) {
  std::vector<std::string> ids;
  if (id == "all") {
    ids = reproduce_ids();
  } else if (std::find(reproduce_ids().begin(), reproduce_ids().end(), id) !=
             reproduce_ids().end()) {
    ids = {id};
  } else {
    err << "error: unknown example '" << id << "'\n";
    return kInputError;
  }
  CheckLog log(out);
  for (const auto& ex : ids) {
    out << ex << ":\n";
    try {
      if (ex == "pure_P") reproduce_pure_P(log, tol);
      else if (ex == "isotropic_threshold") reproduce_isotropic_threshold(log, tol);
      else if (ex == "circulant_pi12") reproduce_circulant_pi12(log, tol);
      else if (ex == "bell_boundary") reproduce_bell_boundary(log, tol);
      else if (ex == "toeplitz_demo") reproduce_structured(log, tol, seed, true);
      else if (ex == "hankel_demo") reproduce_structured(log, tol, seed, false);
      else if (ex == "class3_projector") reproduce_class3(log, tol, seed);
    } catch (const Error& e) {
      log.check(ex + " raised", false, e.what());
    }
  }
  if (!log.all_ok()) {
    err << "mismatch: " << log.first_failure() << '\n';
    return kCheckMismatch;
  }
  return kOk;
}

// ---------------------------------------------------------------------------
// sweep

struct Axis {
  std::string name;
  double lo = 0.0, hi = 0.0;
  long count = 1;

  double value(long i) const {
    return count == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
  }
};

/// Parses "1.5", "-1/3", "pi", "pi/12", "2pi", "-3pi/4".
inline double parse_scalar(const std::string& s) {
  const auto slash = s.rfind('/');
  if (slash != std::string::npos)
    return parse_scalar(s.substr(0, slash)) / parse_scalar(s.substr(slash + 1));
  const auto pos = s.find("pi");
  if (pos != std::string::npos) {
    if (pos + 2 != s.size()) throw std::invalid_argument(s);
    const std::string head = s.substr(0, pos);
    const double mult = head.empty() ? 1.0 : head == "-" ? -1.0 : parse_scalar(head);
    return mult * std::numbers::pi;
  }
  std::size_t used = 0;
  const double v = std::stod(s, &used);
  if (used != s.size()) throw std::invalid_argument(s);
  return v;
}

inline Axis parse_axis(const std::string& spec) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  for (std::size_t k = 0; k <= spec.size(); ++k)
    if (k == spec.size() || spec[k] == ':') {
      parts.push_back(spec.substr(start, k - start));
      start = k + 1;
    }
  if (parts.size() != 4 || parts[0].empty())
    throw io::InputError("axis '" + spec + "': expected name:lo:hi:count");
  Axis a;
  a.name = parts[0];
  try {
    a.lo = parse_scalar(parts[1]);
    a.hi = parse_scalar(parts[2]);
    std::size_t used = 0;
    a.count = std::stol(parts[3], &used);
    if (used != parts[3].size()) throw std::invalid_argument(parts[3]);
  } catch (const std::exception&) {
    throw io::InputError("axis '" + spec + "': malformed number");
  }
  if (a.count < 1) throw io::InputError("axis '" + spec + "': count must be >= 1");
  return a;
}

struct SweepRow {
  std::vector<double> coords;
  bool valid = false;
  double min_pt_eig = 0.0;
  std::optional<double> analytic_margin;
  std::string agreement;
};

inline SweepRow evaluate_point(const FamilySpec& base, const std::vector<Axis>& axes,
                               const std::vector<double>& coords, const Tolerances& tol) {
  SweepRow row;
  row.coords = coords;
  FamilySpec spec = base;
  for (std::size_t k = 0; k < axes.size(); ++k) set_scalar_param(spec, axes[k].name, coords[k]);
  try {
    row.min_pt_eig = ppt_check(build_family(spec, tol), tol).min_pt_eig;
    row.valid = true;
  } catch (const Error&) {
    row.agreement = "invalid";
    return row;
  }
  try {
    row.analytic_margin = analytic_ppt_margin(spec);
  } catch (const Error&) {
    row.analytic_margin.reset();
  }
  if (!row.analytic_margin) {
    row.agreement = "na";
  } else if (std::abs(*row.analytic_margin) < kBoundaryBand ||
             std::abs(row.min_pt_eig) < kBoundaryBand) {
    row.agreement = "boundary";
  } else {
    row.agreement = ((*row.analytic_margin >= 0.0) == (row.min_pt_eig >= 0.0)) ? "true" : "false";
  }
  return row;
}

/// Row-major grid (last axis fastest). Points are evaluated on worker threads
/// and gathered by index.
inline std::vector<SweepRow> run_sweep(const FamilySpec& spec, const std::vector<Axis>& axes,
                                       const Tolerances& tol, unsigned threads = 0) {
  std::size_t total = 1;
  for (const auto& a : axes) total *= static_cast<std::size_t>(a.count);
  std::vector<SweepRow> rows(total);
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t idx; (idx = next.fetch_add(1)) < total;) {
      std::vector<double> coords(axes.size());
      std::size_t rem = idx;
      for (std::size_t k = axes.size(); k-- > 0;) {
        const auto c = static_cast<std::size_t>(axes[k].count);
        coords[k] = axes[k].value(static_cast<long>(rem % c));
        rem /= c;
      }
      rows[idx] = evaluate_point(spec, axes, coords, tol);
    }
  };
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(total, 1)));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return rows;
}

inline void write_sweep_csv(std::ostream& out, const std::vector<Axis>& axes,
                            const std::vector<SweepRow>& rows) {
  for (const auto& a : axes) out << a.name << ',';
  out << "min_pt_eig,analytic_margin,analytic_ppt,numeric_ppt,agreement\n";
  for (const auto& r : rows) {
    for (double c : r.coords) out << io::format_double(c) << ',';
    if (r.valid) out << io::format_double(r.min_pt_eig);
    out << ',';
    if (r.analytic_margin) out << io::format_double(*r.analytic_margin);
    out << ',';
    if (r.analytic_margin) out << (*r.analytic_margin >= 0.0 ? "true" : "false");
    out << ',';
    if (r.valid) out << (r.min_pt_eig >= 0.0 ? "true" : "false");
    out << ',' << r.agreement << '\n';
  }
}

inline int cmd_sweep(const FamilySpec& spec, const std::vector<std::string>& axis_specs,
                     const std::string& output, const Tolerances& tol, std::ostream& out,
                     std::ostream& err, unsigned threads = 0) {
  std::vector<Axis> axes;
  try {
    if (axis_specs.empty()) throw io::InputError("at least one --axis is required");
    for (const auto& s : axis_specs) {
      Axis a = parse_axis(s);
      FamilySpec probe = spec;
      if (!set_scalar_param(probe, a.name, a.lo))
        throw io::InputError("axis '" + a.name + "' is not a scalar parameter of family " +
                             std::string(family_name(spec)));
      axes.push_back(std::move(a));
    }
  } catch (const io::InputError& e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  }
  const auto rows = run_sweep(spec, axes, tol, threads);
  if (output.empty() || output == "-") {
    write_sweep_csv(out, axes, rows);
  } else {
    std::ofstream f(output);
    if (!f) {
      err << "error: cannot write " << output << '\n';
      return kInputError;
    }
    write_sweep_csv(f, axes, rows);
  }
  return kOk;
}

// ---------------------------------------------------------------------------
// validate

struct TrialResult {
  double residual = 0.0;  // worst residual seen in this trial
  bool ok = true;
  std::string detail;
};

struct Invariant {
  std::string name;
  std::function<TrialResult(Sampler&, long trial, const Tolerances&)> run;
};

namespace detail {

inline TrialResult within(double residual, double bound, const std::string& what = {}) {
  return {residual, residual <= bound, what};
}

inline TrialResult worst_of(std::initializer_list<TrialResult> rs) {
  TrialResult out;
  for (const auto& r : rs) {
    out.residual = std::max(out.residual, r.residual);
    if (!r.ok && out.ok) {
      out.ok = false;
      out.detail = r.detail;
    }
  }
  return out;
}

inline ComplexMatrix exp_top_left(const BlockVector& z, Eigen::Index j, Eigen::Index m,
                                  const Tolerances& tol) {
  return expm_skew(build_Xj_block(z, j, j, m), tol).topLeftCorner(j * m, j * m);
}

}  // namespace detail

inline std::vector<Invariant> invariant_suite() {
  using detail::within;
  using detail::worst_of;
  std::vector<Invariant> suite;

  suite.push_back({"herm_eig_roundtrip", [](Sampler& s, long t, const Tolerances& tol) {
    const ComplexMatrix h = s.hermitian(2 + t % 7);
    const Spectrum sp = herm_eig(h, tol);
    return worst_of({within((sp.reconstruct() - h).norm() / std::max(1.0, h.norm()), 1e-10, "reconstruction"),
                     within(unitarity_residual(sp.eigenvectors), 1e-10, "eigenvectors unitary")});
  }});

  suite.push_back({"expm_skew_unitary", [](Sampler& s, long t, const Tolerances& tol) {
    return within(unitarity_residual(expm_skew(s.skew_hermitian(2 + t % 7), tol)), 1e-10);
  }});

  suite.push_back({"matfun_identities", [](Sampler& s, long t, const Tolerances& tol) {
    const Eigen::Index d = 2 + t % 5;
    const ComplexMatrix xi = s.psd(d, static_cast<double>(d));
    const ComplexMatrix c = matfun_psd(xi, MatFun::cos, tol);
    const ComplexMatrix sn = matfun_psd(xi, MatFun::sin, tol);
    const ComplexMatrix r = matfun_psd(xi, MatFun::sqrt, tol);
    return worst_of({within((c * c + sn * sn - identity(d)).norm(), 1e-10, "cos^2 + sin^2 = I"),
                     within((r * r - xi).norm(), 1e-10, "sqrt^2 = P")});
  }});

  suite.push_back({"polar_decomposition", [](Sampler& s, long t, const Tolerances& tol) {
    const Eigen::Index d = 2 + t % 4;
    ComplexMatrix z = s.ginibre(d, d);
    if (t % 2 == 1) z.col(0).setZero();  // rank deficient
    const Polar pd = polar(z, tol);
    const PsdResult psd = psd_check(pd.positive, tol);
    return worst_of({within((pd.positive * pd.unitary - z).norm(), 1e-10, "Z = P U"),
                     within(unitarity_residual(pd.unitary), 1e-10, "U unitary"),
                     within(std::max(0.0, -psd.min_eig), 1e-10, "P PSD")});
  }});

  suite.push_back({"kron_mixed_product", [](Sampler& s, long, const Tolerances&) {
    const ComplexMatrix a = s.ginibre(2, 2), b = s.ginibre(2, 2), c = s.ginibre(2, 2),
                        d = s.ginibre(2, 2);
    return within((kron(a, b) * kron(c, d) - kron(a * c, b * d)).norm(), 1e-12);
  }});

  suite.push_back({"single_spectrum", [](Sampler& s, long t, const Tolerances& tol) {
    const SingleParams p = s.single(2 + t % 5);
    const DensityMatrix rho = assemble_rho_single(p, tol);
    return within(sorted_max_diff(herm_eig(rho.mat, tol).eigenvalues, p.lambdas), 1e-10);
  }});

  suite.push_back({"single_closed_vs_exp", [](Sampler& s, long t, const Tolerances& tol) {
    const Eigen::Index n = 2 + t % 5;
    const Eigen::Index j = 2 + static_cast<Eigen::Index>(s.uniform() * static_cast<double>(n - 1));
    const ComplexVector z = s.cvector(j - 1);
    const ComplexMatrix v = build_Vjn(z, j);
    const ComplexMatrix e = expm_skew(build_Xj_single(z, n, j), tol);
    return worst_of({within((v - e.topLeftCorner(j, j)).norm(), 1e-10, "V^j = exp(X_j)"),
                     within(unitarity_residual(embed_top_left(v, n)), 1e-10, "A^j unitary")});
  }});

  suite.push_back({"block_closed_vs_exp", [](Sampler& s, long t, const Tolerances& tol) {
    const Eigen::Index n = 2 + t % 2, m = 2 + (t / 2) % 2;
    double worst = 0.0;
    for (Eigen::Index j = 2; j <= n; ++j) {
      const BlockVector z = s.block_vector(j - 1, m);
      worst = std::max(worst, (build_Vjnm(z, j, m, tol) - detail::exp_top_left(z, j, m, tol)).norm());
    }
    return within(worst, 1e-9);
  }});

  suite.push_back({"block_state_validity", [](Sampler& s, long t, const Tolerances& tol) {
    const Eigen::Index n = 2 + t % 2, m = 2 + (t / 2) % 2;
    const BlockParams p = s.block(n, m);
    const DensityMatrix rho = assemble_rho_block(p, tol);
    const StateDiagnostics d = diagnose_state(rho.mat, tol);
    const DensityMatrix rho_exp = assemble_rho_block(p, tol, AssemblyMethod::exp);
    return worst_of({within(d.hermiticity, 1e-12, "Hermitian"),
                     within(std::max(0.0, -d.min_eig), 1e-10, "PSD"),
                     within(d.trace_error, 1e-10, "trace 1"),
                     within(sorted_max_diff(herm_eig(rho.mat, tol).eigenvalues, p.lambdas), 1e-10,
                            "spectrum preserved"),
                     within((rho.mat - rho_exp.mat).norm(), 1e-9, "closed vs exp assembly")});
  }});

  suite.push_back({"m1_reduction", [](Sampler& s, long t, const Tolerances& tol) {
    const SingleParams sp = s.single(2 + t % 4);
    BlockParams bp;
    bp.n = sp.n;
    bp.m = 1;
    bp.lambdas = sp.lambdas;
    bp.local_unitaries = identity_unitaries(sp.n, 1);
    for (const auto& z : sp.zvecs) {
      BlockVector blocks;
      for (Eigen::Index k = 0; k < z.size(); ++k) blocks.push_back(ComplexMatrix::Constant(1, 1, z[k]));
      bp.blockvecs.push_back(blocks);
    }
    return within((assemble_rho_block(bp, tol).mat - assemble_rho_single(sp, tol).mat).norm(), 1e-12);
  }});

  suite.push_back({"partial_transpose", [](Sampler& s, long t, const Tolerances& tol) {
    const Eigen::Index n = 2 + t % 2, m = 2 + (t / 2) % 2;
    const DensityMatrix rho = assemble_rho_block(s.block(n, m), tol);
    const ComplexMatrix pt2 = partial_transpose(rho, Subsystem::second);
    const ComplexMatrix back = partial_transpose({n, m, pt2}, Subsystem::second);
    const ComplexMatrix pt1 = partial_transpose(rho, Subsystem::first);
    const RealVector e1 = herm_eig(pt1, tol).eigenvalues;
    const RealVector e2 = herm_eig(pt2, tol).eigenvalues;
    return worst_of({within((back - rho.mat).norm(), 1e-14, "involution"),
                     within((e1 - e2).cwiseAbs().maxCoeff(), 1e-10, "first/second spectra")});
  }});

  suite.push_back({"bell_diagonal_law", [](Sampler& s, long, const Tolerances& tol) {
    const auto p = s.simplex4();
    const double margin = 0.5 - *std::max_element(p.begin(), p.end());
    const PptReport r = ppt_check(bell_diagonal(p), tol);
    if (std::abs(margin) < kBoundaryBand) return TrialResult{};
    return TrialResult{0.0, r.is_ppt == (margin >= 0.0), "verdict vs max p_k <= 1/2"};
  }});

  suite.push_back({"isotropic_pt_spectrum", [](Sampler& s, long, const Tolerances& tol) {
    const double p = s.uniform(-1.0 / 3.0, 1.0);
    return within(isotropic_pt_spectrum_error(p, tol), 1e-12);
  }});

  suite.push_back({"circulant_conditions_p1_eq_p2", [](Sampler& s, long, const Tolerances& tol) {
    auto p = s.simplex4();
    const double q = 0.5 * (p[0] + p[1]);
    p[0] = p[1] = q;
    const double a = s.uniform(0.0, std::numbers::pi / 2), b = s.uniform(0.0, std::numbers::pi / 2);
    const auto mg = circulant_margins(p, a, b);
    const double pt = min_pt_eig(circulant_rho(p, a, b), tol);
    if (std::min(mg[0], mg[1]) < kBoundaryBand && std::min(mg[0], mg[1]) > -kBoundaryBand) return TrialResult{};
    if (std::abs(pt) < kBoundaryBand) return TrialResult{};
    return TrialResult{0.0, circulant_conditions(p, a, b) == (pt >= 0.0), "analytic vs numeric verdict"};
  }});

  suite.push_back({"family_dual_paths", [](Sampler& s, long, const Tolerances& tol) {
    const double alpha = s.uniform(0.0, std::numbers::pi / 2);
    const double beta = s.uniform(0.0, std::numbers::pi / 2);
    const double p = s.uniform(-1.0 / 3.0, 1.0);
    const auto pv = s.simplex4();
    const ComplexMatrix u = s.unitary(3);
    const ComplexMatrix l1 = s.psd(3, 0.4), l2 = s.psd(3, 0.6), xi = s.psd(3, 2.0);
    const auto diff = [&](const DensityMatrix& a, const BlockParams& bp) {
      return (a.mat - assemble_rho_block(bp, tol).mat).norm();
    };
    return worst_of({within(diff(pure_P(alpha), pure_P_params(alpha)), 1e-10, "P(alpha)"),
                     within(diff(isotropic(p), isotropic_params(p)), 1e-10, "I(p)"),
                     within(diff(isotropic_alpha(p, alpha, tol), isotropic_alpha_params(p, alpha)), 1e-10, "I(p,alpha)"),
                     within(diff(circulant_rho(pv, alpha, beta), circulant_params(pv, alpha, beta)), 1e-10, "circulant"),
                     within(diff(two_by_m(u, l1, l2, xi, tol), two_by_m_params(u, l1, l2, xi, tol)), 1e-10, "two_by_m")});
  }});

  suite.push_back({"toeplitz_hankel_ppt", [](Sampler& s, long t, const Tolerances& tol) {
    const Eigen::Index m = 2 + t % 3;
    const DensityMatrix toe = build_family(s.toeplitz(m), tol);
    const DensityMatrix han = build_family(s.hankel(m), tol);
    const PptReport pt = ppt_check(toe, tol), ph = ppt_check(han, tol);
    TrialResult r{std::max(std::max(0.0, -pt.min_pt_eig), std::max(0.0, -ph.min_pt_eig)), true, {}};
    if (!pt.is_ppt || !ph.is_ppt) return TrialResult{r.residual, false, "PPT"};
    if (detect_structure(toe, tol) != Structure::block_toeplitz) return TrialResult{r.residual, false, "Toeplitz structure"};
    if (detect_structure(han, tol) != Structure::block_hankel) return TrialResult{r.residual, false, "Hankel structure"};
    return r;
  }});

  suite.push_back({"class3_projector", [](Sampler& s, long t, const Tolerances& tol) {
    const Eigen::Index n = 2 + t % 2, m = 1 + (t / 2) % 3;
    const BlockVector z = s.normal_blocks(n - 1, m);
    const DensityMatrix rho = class3_state(n, m, z, tol);
    const ComplexMatrix mr = static_cast<double>(m) * rho.mat;
    const auto rank = (herm_eig(rho.mat, tol).eigenvalues.array() > tol.tol_psd).count();
    ComplexMatrix sphere = zeros(m, m);
    for (const auto& pk : class3_polar_parts(z, tol)) sphere += pk * pk;
    TrialResult r = worst_of({within((mr * mr - mr).norm(), 1e-10, "idempotent"),
                              within((sphere - identity(m)).norm(), 1e-10, "nonabelian sphere")});
    if (rank != m) return TrialResult{r.residual, false, "rank != m"};
    return r;
  }});

  return suite;
}

/// Per-trial seed, independent of the order invariants run in.
inline std::uint64_t trial_seed(std::uint64_t seed, std::size_t invariant, long trial) {
  std::uint64_t x = seed * 0x9E3779B97F4A7C15ull + (invariant + 1) * 0xBF58476D1CE4E5B9ull +
                    static_cast<std::uint64_t>(trial) * 0x94D049BB133111EBull;
  x ^= x >> 31;
  return x;
}

inline int cmd_validate(std::uint64_t seed, long trials, const Tolerances& tol,
                        std::ostream& out, std::ostream& err) {
  if (trials < 1) {
    err << "error: trials must be >= 1\n";
    return kInputError;
  }
  const auto suite = invariant_suite();
  bool all_ok = true;
  for (std::size_t k = 0; k < suite.size(); ++k) {
    double worst = 0.0;
    std::optional<std::string> failure;
    for (long t = 0; t < trials && !failure; ++t) {
      const std::uint64_t ts = trial_seed(seed, k, t);
      Sampler sampler(ts);
      TrialResult r;
      try {
        r = suite[k].run(sampler, t, tol);
      } catch (const Error& e) {
        r = {0.0, false, e.what()};
      }
      worst = std::max(worst, r.residual);
      if (!r.ok) {
        io::json ce{{"invariant", suite[k].name}, {"seed", seed}, {"trial", t},
                    {"trial_seed", ts}, {"residual", r.residual}, {"detail", r.detail}};
        failure = ce.dump();
      }
    }
    out << (failure ? "FAIL " : "PASS ") << suite[k].name << " trials=" << trials
        << " max_residual=" << io::format_double(worst) << '\n';
    if (failure) {
      out << "counterexample: " << *failure << '\n';
      all_ok = false;
    }
  }
  return all_ok ? kOk : kCheckMismatch;
}

}  // namespace dmparam::cli
