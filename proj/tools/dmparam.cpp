// dmparam: build and analyze density matrices from Jarlskog-type parameters.

#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dmparam/cli.hpp"

namespace {

using namespace dmparam;

/// Default-constructed spec for a scalar-parameter family, or nullopt.
std::optional<FamilySpec> scalar_family(const std::string& name) {
  if (name == "pure_P") return PurePSpec{};
  if (name == "isotropic") return IsotropicSpec{};
  if (name == "isotropic_alpha") return IsotropicAlphaSpec{};
  if (name == "circulant") return CirculantSpec{};
  if (name == "bell_diagonal") return BellDiagonalSpec{};
  return std::nullopt;
}

int resolve_sweep_spec(const std::string& input, const std::string& family,
                       const std::vector<std::string>& sets, FamilySpec& spec) {
  try {
    if (!input.empty() == !family.empty())
      throw io::InputError("sweep needs exactly one of --input or --family");
    if (!input.empty()) {
      const io::ParamFile f = io::parse_param_file(io::read_json_file(input));
      if (f.kind != "family") throw io::InputError(input + ": sweep requires kind \"family\"");
      spec = io::parse_family(f.payload);
    } else {
      auto s = scalar_family(family);
      if (!s)
        throw io::InputError("--family " + family +
                             ": use --input for matrix-valued families");
      spec = *s;
    }
    for (const auto& kv : sets) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw io::InputError("--set " + kv + ": expected name=value");
      double v = 0.0;
      try {
        v = cli::parse_scalar(kv.substr(eq + 1));
      } catch (const std::exception&) {
        throw io::InputError("--set " + kv + ": malformed number");
      }
      if (!set_scalar_param(spec, kv.substr(0, eq), v))
        throw io::InputError("--set " + kv + ": unknown parameter for this family");
    }
  } catch (const io::InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return cli::kInputError;
  }
  return cli::kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Density matrices from Jarlskog-type parameters"};
  app.require_subcommand(1);
  app.fallthrough();

  Tolerances tol;
  std::uint64_t seed = 12345;
  std::string output;
  std::string format = "json";
  app.add_option("--tol-psd", tol.tol_psd, "PSD tolerance")->capture_default_str();
  app.add_option("--tol-herm", tol.tol_herm, "Hermiticity tolerance")->capture_default_str();
  app.add_option("--seed", seed, "Random seed")->capture_default_str();
  app.add_option("-o,--output", output, "Output file (default stdout)");
  app.add_option("--format", format, "Output format for generate")
      ->check(CLI::IsMember({"json", "matrix_text"}))
      ->capture_default_str();

  auto* gen = app.add_subcommand("generate", "Build rho from a parameter file");
  std::string gen_input;
  gen->add_option("input", gen_input, "Parameter file (JSON)")->required();

  auto* ana = app.add_subcommand("analyze", "Report on a matrix file");
  std::string ana_input;
  Eigen::Index ana_n = 0, ana_m = 1;
  ana->add_option("input", ana_input, "Matrix file (JSON or matrix_text)")->required();
  ana->add_option("-n", ana_n, "First subsystem dimension")->required();
  ana->add_option("-m", ana_m, "Second subsystem dimension")->capture_default_str();

  auto* rep = app.add_subcommand("reproduce", "Run a worked example");
  std::string rep_id;
  std::string ids_help = "Example id: all";
  for (const auto& id : cli::reproduce_ids()) ids_help += ", " + id;
  rep->add_option("id", rep_id, ids_help)->required();

  auto* swp = app.add_subcommand("sweep", "PPT grid sweep over family parameters (CSV)");
  std::string swp_input, swp_family;
  std::vector<std::string> swp_sets, swp_axes;
  unsigned swp_threads = 0;
  swp->add_option("--input", swp_input, "Family parameter file");
  swp->add_option("--family", swp_family, "Scalar family name");
  swp->add_option("--set", swp_sets, "Fixed parameter name=value");
  swp->add_option("--axis", swp_axes, "Grid axis name:lo:hi:count");
  swp->add_option("--threads", swp_threads, "Worker threads (0 = hardware)");

  auto* val = app.add_subcommand("validate", "Randomized invariant checks");
  long val_trials = 100;
  val->add_option("--trials", val_trials, "Trials per invariant")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : cli::kInputError;
  }
  if (!tol.valid()) {
    std::cerr << "error: tolerances must be positive and finite\n";
    return cli::kInputError;
  }

  const auto fmt =
      format == "json" ? cli::OutputFormat::json : cli::OutputFormat::matrix_text;
  if (*gen) return cli::cmd_generate(gen_input, output, fmt, tol, std::cout, std::cerr);
  if (*ana) return cli::cmd_analyze(ana_input, ana_n, ana_m, tol, std::cout, std::cerr);
  if (*rep) return cli::cmd_reproduce(rep_id, tol, seed, std::cout, std::cerr);
  if (*val) return cli::cmd_validate(seed, val_trials, tol, std::cout, std::cerr);
  FamilySpec spec;
  if (const int rc = resolve_sweep_spec(swp_input, swp_family, swp_sets, spec); rc != 0)
    return rc;
  return cli::cmd_sweep(spec, swp_axes, output, tol, std::cout, std::cerr, swp_threads);
}
