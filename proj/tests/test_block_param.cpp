#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "dmparam/block_param.hpp"
#include "dmparam/families.hpp"
#include "dmparam/random.hpp"

using namespace dmparam;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an Error";
  return ErrorCode::convergence_failure;
}

}  // namespace

TEST(BlockAngle, Examples) {
  EXPECT_EQ(block_angle({zeros(2, 2), zeros(2, 2)}).norm(), 0.0);
  const ComplexMatrix u = haar_unitary(3, 1);
  EXPECT_LE((block_angle({0.7 * u}) - 0.7 * identity(3)).norm(), 1e-14);
  EXPECT_EQ(code_of([] { block_angle({zeros(2, 2), zeros(3, 3)}); }),
            ErrorCode::dimension_mismatch);
}

TEST(NormalizeBlocks, UnitaryBlockAndIdentity) {
  const ComplexMatrix u = haar_unitary(2, 2);
  EXPECT_LE((normalize_blocks({1.3 * u})[0] - u).norm(), 1e-14);
  Sampler s(20);
  const BlockVector z = s.block_vector(3, 3);
  ComplexMatrix acc = zeros(3, 3);
  for (const auto& zt : normalize_blocks(z)) acc += zt.adjoint() * zt;
  EXPECT_LE((acc - identity(3)).norm(), 1e-12);
}

TEST(NormalizeBlocks, SingularAngle) {
  ComplexMatrix z = identity(2);
  z(1, 1) = 0.0;
  EXPECT_EQ(code_of([&] { normalize_blocks({z}); }), ErrorCode::singular_angle);
  EXPECT_EQ(code_of([&] { build_Vjnm({z}, 2, 2); }), ErrorCode::singular_angle);
}

TEST(BuildXjBlock, ZeroAndShape) {
  EXPECT_EQ(build_Xj_block({zeros(2, 2)}, 3, 2, 2).norm(), 0.0);
  Sampler s(21);
  const BlockVector z = s.block_vector(2, 2);
  const ComplexMatrix x = build_Xj_block(z, 3, 3, 2);
  EXPECT_LE((x + x.adjoint()).norm(), 0.0);
  EXPECT_EQ(code_of([&] { build_Xj_block(z, 3, 2, 2); }), ErrorCode::dimension_mismatch);
}

TEST(BuildVjnm, MatchesExponential) {
  Sampler s(22);
  for (Eigen::Index n = 2; n <= 4; ++n)
    for (Eigen::Index m = 1; m <= 3; ++m)
      for (Eigen::Index j = 2; j <= n; ++j)
        for (int t = 0; t < 30; ++t) {
          const BlockVector z = s.block_vector(j - 1, m);
          const ComplexMatrix e = expm_skew(build_Xj_block(z, n, j, m));
          ASSERT_LE((build_Vjnm(z, j, m) - e.topLeftCorner(j * m, j * m)).norm(), 1e-9);
        }
}

TEST(BuildVjnm, MOneReducesToSingle) {
  Sampler s(23);
  for (Eigen::Index j = 2; j <= 5; ++j) {
    const ComplexVector z = s.cvector(j - 1);
    BlockVector blocks;
    for (Eigen::Index k = 0; k < z.size(); ++k) blocks.push_back(ComplexMatrix::Constant(1, 1, z[k]));
    EXPECT_LE((build_Vjnm(blocks, j, 1) - build_Vjn(z, j)).norm(), 1e-14);
  }
}

TEST(BuildAjnm, ZeroBlocksGiveIdentity) {
  for (auto method : {AssemblyMethod::closed, AssemblyMethod::exp, AssemblyMethod::automatic})
    EXPECT_LE((build_Ajnm({zeros(2, 2)}, 3, 2, 2, method) - identity(6)).norm(), 1e-15);
}

TEST(BuildAjnm, LastIndexHasNoPadding) {
  Sampler s(24);
  const BlockVector z = s.block_vector(2, 2);
  EXPECT_LE((build_Ajnm(z, 3, 3, 2, AssemblyMethod::closed) - build_Vjnm(z, 3, 2)).norm(), 0.0);
}

TEST(BuildAjnm, SingularAngleFallsBackToExp) {
  ComplexMatrix z = zeros(2, 2);
  z(0, 0) = 0.5;
  const ComplexMatrix a = build_Ajnm({z}, 2, 2, 2, AssemblyMethod::automatic);
  EXPECT_LE((a - expm_skew(build_Xj_block({z}, 2, 2, 2))).norm(), 1e-15);
  EXPECT_THROW(build_Ajnm({z}, 2, 2, 2, AssemblyMethod::closed), Error);
}

TEST(BuildCore, Examples) {
  const BlockDiagonalCore c = build_core({0.1, 0.2, 0.3, 0.4}, identity_unitaries(2, 2), 2, 2);
  ComplexMatrix want = zeros(4, 4);
  want.diagonal() << 0.1, 0.2, 0.3, 0.4;
  EXPECT_LE((c.matrix() - want).norm(), 0.0);

  const BlockDiagonalCore scalar = build_core({0.5, 0.25, 0.25}, identity_unitaries(3, 1), 3, 1);
  EXPECT_DOUBLE_EQ(scalar.blocks[1](0, 0).real(), 0.25);

  const double p = 0.3;
  const BlockDiagonalCore iso = build_core({(1 - p) / 4, (1 - p) / 4, (1 - p) / 4, (1 + 3 * p) / 4},
                                           {identity(2), pauli_z()}, 2, 2);
  EXPECT_NEAR(iso.blocks[0](0, 0).real(), (1 - p) / 4, 1e-15);
  EXPECT_NEAR(iso.blocks[1](1, 1).real(), (1 + 3 * p) / 4, 1e-15);
}

TEST(BuildCore, Errors) {
  EXPECT_EQ(code_of([] { build_core({0.5, 0.6}, identity_unitaries(2, 1), 2, 1); }),
            ErrorCode::invalid_simplex);
  ComplexMatrix bad = identity(2);
  bad(0, 1) = 0.3;
  EXPECT_EQ(code_of([&] { build_core({0.25, 0.25, 0.25, 0.25}, {identity(2), bad}, 2, 2); }),
            ErrorCode::not_unitary);
  EXPECT_EQ(code_of([] { build_core({1.0}, identity_unitaries(2, 1), 2, 1); }),
            ErrorCode::dimension_mismatch);
}

TEST(AssembleBlock, IdentityConjugation) {
  Sampler s(25);
  BlockParams p = s.block(3, 2);
  p.blockvecs = zero_blockvecs(3, 2);
  const DensityMatrix rho = assemble_rho_block(p);
  const BlockDiagonalCore core = build_core(p.lambdas, p.local_unitaries, 3, 2);
  EXPECT_LE((rho.mat - core.matrix()).norm(), 1e-15);
}

TEST(AssembleBlock, AllTrivialGivesDiagonal) {
  const BlockParams p{2, 2, {0.4, 0.3, 0.2, 0.1}, identity_unitaries(2, 2), zero_blockvecs(2, 2)};
  ComplexMatrix want = zeros(4, 4);
  want.diagonal() << 0.4, 0.3, 0.2, 0.1;
  EXPECT_LE((assemble_rho_block(p).mat - want).norm(), 0.0);
}

TEST(AssembleBlock, PrintedFamilies) {
  const double a = 0.6, sa = std::sin(a), ca = std::cos(a);
  ComplexMatrix P = zeros(4, 4);
  P(0, 0) = sa * sa;
  P(0, 3) = P(3, 0) = sa * ca;
  P(3, 3) = ca * ca;
  EXPECT_LE((assemble_rho_block(pure_P_params(a)).mat - P).cwiseAbs().maxCoeff(), 1e-12);

  const double p = 0.45;
  ComplexMatrix I = zeros(4, 4);
  I.diagonal() << 1 + p, 1 - p, 1 - p, 1 + p;
  I(0, 3) = I(3, 0) = 2 * p;
  I /= 4.0;
  EXPECT_LE((assemble_rho_block(isotropic_params(p)).mat - I).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(AssembleBlock, ValidityAndSpectrum) {
  Sampler s(26);
  for (Eigen::Index n = 2; n <= 3; ++n)
    for (Eigen::Index m = 2; m <= 3; ++m)
      for (int t = 0; t < 25; ++t) {
        const BlockParams p = s.block(n, m);
        const DensityMatrix rho = assemble_rho_block(p);
        const StateDiagnostics d = diagnose_state(rho.mat);
        ASSERT_LE(d.hermiticity, 1e-12);
        ASSERT_GE(d.min_eig, -1e-10);
        ASSERT_LE(d.trace_error, 1e-10);
        std::vector<double> want = p.lambdas;
        std::sort(want.begin(), want.end());
        const RealVector got = herm_eig(rho.mat).eigenvalues;
        for (std::size_t k = 0; k < want.size(); ++k)
          ASSERT_NEAR(got[static_cast<Eigen::Index>(k)], want[k], 1e-10);
        const DensityMatrix viaexp = assemble_rho_block(p, {}, AssemblyMethod::exp);
        ASSERT_LE((rho.mat - viaexp.mat).norm(), 1e-9);
      }
}

TEST(AssembleBlock, MOneMatchesSingle) {
  Sampler s(27);
  for (int t = 0; t < 50; ++t) {
    const SingleParams sp = s.single(2 + t % 4);
    BlockParams bp{sp.n, 1, sp.lambdas, identity_unitaries(sp.n, 1), {}};
    for (const auto& z : sp.zvecs) {
      BlockVector blocks;
      for (Eigen::Index k = 0; k < z.size(); ++k) blocks.push_back(ComplexMatrix::Constant(1, 1, z[k]));
      bp.blockvecs.push_back(blocks);
    }
    ASSERT_LE((assemble_rho_block(bp).mat - assemble_rho_single(sp).mat).norm(), 1e-12);
  }
}

TEST(AssembleBlock, ValidationErrors) {
  BlockParams p{2, 2, {0.25, 0.25, 0.25, 0.25}, identity_unitaries(2, 2), zero_blockvecs(2, 2)};
  p.blockvecs = {};
  EXPECT_EQ(code_of([&] { assemble_rho_block(p); }), ErrorCode::dimension_mismatch);
  p.blockvecs = {{zeros(3, 3)}};
  EXPECT_EQ(code_of([&] { assemble_rho_block(p); }), ErrorCode::dimension_mismatch);
  p.blockvecs = zero_blockvecs(2, 2);
  p.lambdas = {0.5, 0.5, 0.5, -0.5};
  EXPECT_EQ(code_of([&] { assemble_rho_block(p); }), ErrorCode::invalid_simplex);
}
