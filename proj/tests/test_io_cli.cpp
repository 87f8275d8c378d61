#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "dmparam/cli.hpp"

using namespace dmparam;
namespace fs = std::filesystem;

namespace {

constexpr double kPi = std::numbers::pi;

class TempDir {
 public:
  TempDir() {
    path_ = fs::temp_directory_path() /
            ("dmparam_test_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
             "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }

  std::string write(const std::string& name, const std::string& content) const {
    const fs::path p = path_ / name;
    std::ofstream(p) << content;
    return p.string();
  }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  fs::path path_;
};

std::string read_all(const std::string& path) {
  std::ifstream f(path);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

std::string family_file(const std::string& payload) {
  return R"({"schema_version": "1", "kind": "family", "payload": )" + payload + "}";
}

struct CmdResult {
  int rc;
  std::string out, err;
};

template <class F>
CmdResult capture(F&& f) {
  std::ostringstream out, err;
  const int rc = f(out, err);
  return {rc, out.str(), err.str()};
}

}  // namespace

// ---------------------------------------------------------------------------
// io

TEST(Io, FormatDoubleRoundTrips) {
  for (double x : {0.1, 1.0 / 3.0, -2.5e-17, 6.02214076e23}) {
    EXPECT_EQ(std::stod(io::format_double(x)), x);
  }
  const cplx z(-0.125, 1.0 / 7.0);
  EXPECT_EQ(io::parse_complex_token(io::format_complex(z)), z);
  EXPECT_EQ(io::parse_complex_token("1e-05+2e-10j"), cplx(1e-5, 2e-10));
  EXPECT_EQ(io::parse_complex_token("-0.5j"), cplx(0.0, -0.5));
  EXPECT_EQ(io::parse_complex_token("3"), cplx(3.0, 0.0));
  EXPECT_THROW(io::parse_complex_token("abc"), io::InputError);
}

TEST(Io, MatrixTextRoundTrip) {
  Sampler s(50);
  const ComplexMatrix m = s.ginibre(3, 3);
  std::ostringstream out;
  io::write_matrix_text(out, m);
  EXPECT_TRUE(io::parse_matrix_text(out.str(), "mem") == m);
  EXPECT_THROW(io::parse_matrix_text("1 2\n3\n", "mem"), io::InputError);
}

TEST(Io, JsonStateRoundTrip) {
  TempDir dir;
  const DensityMatrix rho = isotropic(0.3);
  const std::string path = dir.write("s.json", io::state_to_json(rho).dump());
  EXPECT_TRUE(io::read_matrix_file(path) == rho.mat);
}

TEST(Io, ParseParamFileKinds) {
  const auto single = io::parse_params(io::parse_param_file(io::json::parse(
      R"({"schema_version":"1","kind":"single","payload":{"lambdas":[0.7,0.3],"zvecs":[[[0.2,0.1]]]}})")));
  ASSERT_TRUE(std::holds_alternative<SingleParams>(single));
  EXPECT_EQ(std::get<SingleParams>(single).zvecs[0][0], cplx(0.2, 0.1));

  const auto block = io::parse_params(io::parse_param_file(io::json::parse(
      R"({"schema_version":"1","kind":"block","payload":{"n":2,"m":1,"lambdas":[0.5,0.5]}})")));
  ASSERT_TRUE(std::holds_alternative<BlockParams>(block));
  EXPECT_EQ(std::get<BlockParams>(block).blockvecs.size(), 1u);

  const auto fam = io::parse_params(io::parse_param_file(
      io::json::parse(family_file(R"({"family":"circulant","p":[0.1,0.2,0.3,0.4],"alpha":0.1,"beta":0.2})"))));
  ASSERT_TRUE(std::holds_alternative<FamilySpec>(fam));
  EXPECT_EQ(family_name(std::get<FamilySpec>(fam)), "circulant");
}

TEST(Io, ParamFileErrorsNameTheField) {
  const auto err = [](const std::string& text) -> std::string {
    try {
      io::parse_params(io::parse_param_file(io::json::parse(text)));
    } catch (const io::InputError& e) {
      return e.what();
    }
    return "";
  };
  EXPECT_NE(err(R"({"schema_version":"2","kind":"single","payload":{}})").find("schema_version"),
            std::string::npos);
  EXPECT_NE(err(R"({"schema_version":"1","kind":"other","payload":{}})").find("kind"), std::string::npos);
  EXPECT_NE(err(family_file(R"({"family":"isotropic"})")).find("p"), std::string::npos);
  EXPECT_NE(err(family_file(R"({"family":"bell_diagonal","p":[0.3,0.3,0.3,0.0]})")).find("$.payload.p"),
            std::string::npos);
  EXPECT_NE(err(family_file(R"({"family":"nope"})")).find("unknown family"), std::string::npos);
}

// ---------------------------------------------------------------------------
// commands, in process

TEST(Generate, IsotropicDiagonal) {
  TempDir dir;
  const std::string in = dir.write("iso.json", family_file(R"({"family":"isotropic","p":0.2})"));
  const CmdResult r = capture([&](auto& o, auto& e) {
    return cli::cmd_generate(in, "", cli::OutputFormat::json, {}, o, e);
  });
  ASSERT_EQ(r.rc, cli::kOk);
  const ComplexMatrix m = io::get_matrix(io::json::parse(r.out).at("matrix"), "matrix");
  EXPECT_NEAR(m(0, 0).real(), 0.3, 1e-15);
  EXPECT_NEAR(m(1, 1).real(), 0.2, 1e-15);
  EXPECT_NEAR(m(2, 2).real(), 0.2, 1e-15);
  EXPECT_NEAR(m(3, 3).real(), 0.3, 1e-15);
}

TEST(Generate, ZeroBlocksGiveDiagonal) {
  TempDir dir;
  const std::string in = dir.write(
      "b.json",
      R"({"schema_version":"1","kind":"block","payload":{"n":2,"m":2,"lambdas":[0.1,0.2,0.3,0.4]}})");
  const std::string out = dir.file("b.txt");
  ASSERT_EQ(capture([&](auto& o, auto& e) {
              return cli::cmd_generate(in, out, cli::OutputFormat::matrix_text, {}, o, e);
            }).rc,
            cli::kOk);
  ComplexMatrix want = zeros(4, 4);
  want.diagonal() << 0.1, 0.2, 0.3, 0.4;
  EXPECT_TRUE(io::read_matrix_file(out) == want);
}

TEST(Generate, ExitCodes) {
  TempDir dir;
  const std::string bad_simplex = dir.write(
      "s.json", R"({"schema_version":"1","kind":"single","payload":{"lambdas":[0.6,0.3],"zvecs":[[0]]}})");
  EXPECT_EQ(capture([&](auto& o, auto& e) {
              return cli::cmd_generate(bad_simplex, "", cli::OutputFormat::json, {}, o, e);
            }).rc,
            cli::kInputError);
  EXPECT_EQ(capture([&](auto& o, auto& e) {
              return cli::cmd_generate(dir.file("missing.json"), "", cli::OutputFormat::json, {}, o, e);
            }).rc,
            cli::kInputError);
  const std::string bad_unitary = dir.write(
      "u.json",
      R"({"schema_version":"1","kind":"block","payload":{"n":2,"m":1,"lambdas":[0.5,0.5],"local_unitaries":[[[2]],[[1]]]}})");
  EXPECT_EQ(capture([&](auto& o, auto& e) {
              return cli::cmd_generate(bad_unitary, "", cli::OutputFormat::json, {}, o, e);
            }).rc,
            cli::kNumericalFailure);
}

TEST(Analyze, Reports) {
  TempDir dir;
  const auto write_state = [&](const std::string& name, const ComplexMatrix& m) {
    std::ostringstream s;
    io::write_matrix_text(s, m);
    return dir.write(name, s.str());
  };
  const std::string iso = write_state("iso.txt", isotropic(0.5).mat);
  const CmdResult r = capture([&](auto& o, auto& e) { return cli::cmd_analyze(iso, 2, 2, {}, o, e); });
  EXPECT_EQ(r.rc, cli::kOk);
  EXPECT_NE(r.out.find("min_pt_eig: -0.12"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("is_ppt: false"), std::string::npos);

  const auto mixed = cli::analyze_state(identity(9) / 9.0, 3, 3, {});
  EXPECT_TRUE(mixed.ppt->is_ppt);
  EXPECT_NEAR(mixed.purity, 1.0 / 9.0, 1e-15);
  EXPECT_FALSE(mixed.structure.has_value());

  const auto bell = cli::analyze_state(pure_P(kPi / 4).mat, 2, 2, {});
  EXPECT_EQ(bell.rank, 1);
  EXPECT_NEAR(bell.purity, 1.0, 1e-12);
  EXPECT_FALSE(bell.ppt->is_ppt);
  EXPECT_EQ(cli::ppt_verdict(*bell.ppt), "NPT");

  const auto edge = cli::analyze_state(isotropic(1.0 / 3.0).mat, 2, 2, {});
  EXPECT_EQ(cli::ppt_verdict(*edge.ppt), "boundary");
  EXPECT_TRUE(edge.ppt->is_ppt);
}

TEST(Analyze, ExitCodes) {
  TempDir dir;
  const std::string np = dir.write("np.txt", "0.5 0.6\n0.6 0.5\n");
  const CmdResult r = capture([&](auto& o, auto& e) { return cli::cmd_analyze(np, 2, 1, {}, o, e); });
  EXPECT_EQ(r.rc, cli::kNotAState);
  EXPECT_NE(r.out.find("is_state: false"), std::string::npos);
  EXPECT_EQ(capture([&](auto& o, auto& e) { return cli::cmd_analyze(np, 2, 2, {}, o, e); }).rc,
            cli::kInputError);
  const std::string bad = dir.write("bad.txt", "1 x\n0 1\n");
  EXPECT_EQ(capture([&](auto& o, auto& e) { return cli::cmd_analyze(bad, 2, 1, {}, o, e); }).rc,
            cli::kInputError);
}

TEST(RoundTrip, GenerateThenAnalyzeRecoversLambdas) {
  TempDir dir;
  const std::string in = dir.write(
      "q.json",
      R"({"schema_version":"1","kind":"single","payload":{"lambdas":[0.5,0.3,0.2],"zvecs":[[[0.4,0.1]],[[0.2,0],[0,-0.3]]]}})");
  const std::string out = dir.file("q.json.out");
  ASSERT_EQ(capture([&](auto& o, auto& e) {
              return cli::cmd_generate(in, out, cli::OutputFormat::json, {}, o, e);
            }).rc,
            cli::kOk);
  const auto rep = cli::analyze_state(io::read_matrix_file(out), 3, 1, {});
  ASSERT_EQ(rep.eigenvalues.size(), 3u);
  EXPECT_NEAR(rep.eigenvalues[0], 0.5, 1e-9);
  EXPECT_NEAR(rep.eigenvalues[1], 0.3, 1e-9);
  EXPECT_NEAR(rep.eigenvalues[2], 0.2, 1e-9);
}

TEST(Reproduce, AllExamplesPass) {
  const CmdResult r = capture([](auto& o, auto& e) { return cli::cmd_reproduce("all", {}, 7, o, e); });
  EXPECT_EQ(r.rc, cli::kOk) << r.out << r.err;
  for (const auto& id : cli::reproduce_ids()) EXPECT_NE(r.out.find(id + ":"), std::string::npos);
  EXPECT_EQ(capture([](auto& o, auto& e) { return cli::cmd_reproduce("nope", {}, 7, o, e); }).rc,
            cli::kInputError);
}

TEST(Sweep, AxisParsing) {
  EXPECT_DOUBLE_EQ(cli::parse_scalar("pi/12"), kPi / 12);
  EXPECT_DOUBLE_EQ(cli::parse_scalar("-1/3"), -1.0 / 3.0);
  EXPECT_DOUBLE_EQ(cli::parse_scalar("3pi/4"), 3 * kPi / 4);
  EXPECT_DOUBLE_EQ(cli::parse_scalar("-pi"), -kPi);
  EXPECT_THROW(cli::parse_scalar("pix"), std::invalid_argument);
  const cli::Axis a = cli::parse_axis("alpha:0:pi/2:5");
  EXPECT_EQ(a.name, "alpha");
  EXPECT_EQ(a.count, 5);
  EXPECT_DOUBLE_EQ(a.value(4), kPi / 2);
  EXPECT_THROW(cli::parse_axis("alpha:0:1"), io::InputError);
  EXPECT_THROW(cli::parse_axis("alpha:0:1:0"), io::InputError);
  EXPECT_THROW(cli::parse_axis("alpha:a:1:3"), io::InputError);
}

TEST(Sweep, IsotropicAlphaThresholdCurve) {
  const auto rows = cli::run_sweep(IsotropicAlphaSpec{}, {cli::parse_axis("p:0:1:50"), cli::parse_axis("alpha:0:pi/2:50")},
                                   {});
  ASSERT_EQ(rows.size(), 2500u);
  // For each alpha column the numeric PPT/NPT switch happens within one p-cell of the curve.
  for (int ia = 0; ia < 50; ++ia) {
    const double a = kPi / 2 * ia / 49.0;
    double last_ppt = -1.0;
    for (int ip = 0; ip < 50; ++ip) {
      const auto& row = rows[static_cast<std::size_t>(ip * 50 + ia)];
      if (row.min_pt_eig >= -1e-10) last_ppt = row.coords[0];
      EXPECT_NE(row.agreement, "false");
    }
    EXPECT_LE(std::abs(last_ppt - std::min(1.0, sep_threshold(a))), 1.0 / 49.0 + 1e-12);
  }
}

TEST(Sweep, CsvAndErrors) {
  const CmdResult one = capture([](auto& o, auto& e) {
    return cli::cmd_sweep(IsotropicSpec{}, {"p:0.2:0.2:1"}, "", {}, o, e, 1);
  });
  ASSERT_EQ(one.rc, cli::kOk);
  EXPECT_EQ(one.out,
            "p,min_pt_eig,analytic_margin,analytic_ppt,numeric_ppt,agreement\n"
            "0.20000000000000001," + io::format_double(cli::min_pt_eig(isotropic(0.2), {})) + "," +
                io::format_double(1.0 / 3.0 - 0.2) + ",true,true,true\n");
  EXPECT_EQ(capture([](auto& o, auto& e) { return cli::cmd_sweep(IsotropicSpec{}, {"q:0:1:3"}, "", {}, o, e); }).rc,
            cli::kInputError);
  EXPECT_EQ(capture([](auto& o, auto& e) { return cli::cmd_sweep(IsotropicSpec{}, {}, "", {}, o, e); }).rc,
            cli::kInputError);
  EXPECT_EQ(capture([](auto& o, auto& e) { return cli::cmd_sweep(IsotropicSpec{}, {"p:0:1:-2"}, "", {}, o, e); }).rc,
            cli::kInputError);
}

TEST(Sweep, ThreadCountDoesNotChangeOutput) {
  const std::vector<std::string> axes{"alpha:0:pi/2:9", "beta:0:pi/2:9"};
  const CirculantSpec spec{{0.1, 0.2, 0.3, 0.4}, 0.0, 0.0};
  const CmdResult a = capture([&](auto& o, auto& e) { return cli::cmd_sweep(spec, axes, "", {}, o, e, 1); });
  const CmdResult b = capture([&](auto& o, auto& e) { return cli::cmd_sweep(spec, axes, "", {}, o, e, 4); });
  EXPECT_EQ(a.out, b.out);
  // Lossless CSV: every numeric field parses back to the same double.
  std::istringstream lines(a.out);
  std::string line;
  std::getline(lines, line);
  std::getline(lines, line);
  const double alpha = std::stod(line.substr(0, line.find(',')));
  EXPECT_EQ(io::format_double(alpha), line.substr(0, line.find(',')));
}

TEST(Sweep, InvalidPointsAreLabelled) {
  const auto rows = cli::run_sweep(IsotropicSpec{}, {cli::parse_axis("p:1:2:2")}, {});
  EXPECT_EQ(rows[1].agreement, "invalid");
  EXPECT_FALSE(rows[1].valid);
}

TEST(Validate, SeedFortyTwoPassesAndIsDeterministic) {
  const CmdResult a = capture([](auto& o, auto& e) { return cli::cmd_validate(42, 100, {}, o, e); });
  EXPECT_EQ(a.rc, cli::kOk) << a.out;
  const CmdResult b = capture([](auto& o, auto& e) { return cli::cmd_validate(42, 100, {}, o, e); });
  EXPECT_EQ(a.out, b.out);
  EXPECT_EQ(capture([](auto& o, auto& e) { return cli::cmd_validate(42, 0, {}, o, e); }).rc,
            cli::kInputError);
}

// ---------------------------------------------------------------------------
// the executable

#ifdef DMPARAM_CLI_PATH
namespace {

int run_cli(const std::string& args, const std::string& out_file) {
  const std::string cmd = std::string(DMPARAM_CLI_PATH) + " " + args + " > " + out_file + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Executable, ExitCodes) {
  TempDir dir;
  const std::string log = dir.file("log.txt");
  const std::string iso = dir.write("iso.json", family_file(R"({"family":"isotropic","p":0.2})"));
  const std::string bad = dir.write(
      "bad.json", R"({"schema_version":"1","kind":"single","payload":{"lambdas":[0.6,0.3],"zvecs":[[0]]}})");
  const std::string np = dir.write("np.txt", "0.5 0.6\n0.6 0.5\n");

  EXPECT_EQ(run_cli("generate " + iso, log), 0);
  EXPECT_EQ(run_cli("generate " + bad, log), 2);
  EXPECT_EQ(run_cli("analyze " + np + " -n 2", log), 4);
  EXPECT_EQ(run_cli("reproduce isotropic_threshold", log), 0);
  EXPECT_EQ(run_cli("reproduce unknown", log), 2);
  EXPECT_EQ(run_cli("validate --trials 0", log), 2);
  EXPECT_EQ(run_cli("sweep --family isotropic --axis p:0:1:0", log), 2);
  EXPECT_EQ(run_cli("--tol-psd -1 reproduce pure_P", log), 2);
  EXPECT_EQ(run_cli("frobnicate", log), 2);
}

TEST(Executable, GlobalFlagsAfterSubcommand) {
  TempDir dir;
  const std::string iso = dir.write("iso.json", family_file(R"({"family":"isotropic","p":0.2})"));
  const std::string txt = dir.file("iso.txt");
  ASSERT_EQ(run_cli("generate " + iso + " --format matrix_text -o " + txt, dir.file("log")), 0);
  EXPECT_TRUE(io::read_matrix_file(txt).isApprox(isotropic(0.2).mat, 1e-15));
  const std::string report = dir.file("report.txt");
  ASSERT_EQ(run_cli("analyze " + txt + " -n 2 -m 2", report), 0);
  EXPECT_NE(read_all(report).find("verdict: PPT"), std::string::npos);
}

TEST(Executable, SeededRunsAreIdentical) {
  TempDir dir;
  const std::string a = dir.file("a.txt"), b = dir.file("b.txt");
  ASSERT_EQ(run_cli("--seed 9 validate --trials 5", a), 0);
  ASSERT_EQ(run_cli("--seed 9 validate --trials 5", b), 0);
  EXPECT_EQ(read_all(a), read_all(b));
  ASSERT_EQ(run_cli("--seed 9 reproduce hankel_demo", a), 0);
  ASSERT_EQ(run_cli("--seed 9 reproduce hankel_demo", b), 0);
  EXPECT_EQ(read_all(a), read_all(b));
}
#endif
