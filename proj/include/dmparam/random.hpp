#pragma once

// Seeded generators for random parameter sets. Used by the validate command,
// the reproduce demos and the test suites.

#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "dmparam/block_param.hpp"
#include "dmparam/families.hpp"
#include "dmparam/matcore.hpp"
#include "dmparam/single_param.hpp"

namespace dmparam {

class Sampler {
 public:
  explicit Sampler(std::uint64_t seed) : rng_(seed) {}

  double uniform(double lo = 0.0, double hi = 1.0) {
    return std::uniform_real_distribution<double>(lo, hi)(rng_);
  }

  double normal() { return normal_(rng_); }

  std::uint64_t next_seed() { return rng_(); }

  ComplexMatrix ginibre(Eigen::Index r, Eigen::Index c, double scale = 1.0) {
    ComplexMatrix g(r, c);
    for (Eigen::Index i = 0; i < r; ++i)
      for (Eigen::Index j = 0; j < c; ++j) {
        const double re = normal();
        const double im = normal();
        g(i, j) = scale * cplx(re, im);
      }
    return g;
  }

  ComplexVector cvector(Eigen::Index n, double scale = 1.0) {
    return ginibre(n, 1, scale).col(0);
  }

  ComplexMatrix hermitian(Eigen::Index n) { return hermitian_part(ginibre(n, n)); }

  ComplexMatrix skew_hermitian(Eigen::Index n) {
    const ComplexMatrix g = ginibre(n, n);
    return 0.5 * (g - g.adjoint());
  }

  /// Random PSD with the given trace.
  ComplexMatrix psd(Eigen::Index n, double trace = 1.0) {
    const ComplexMatrix g = ginibre(n, n);
    ComplexMatrix p = hermitian_part(g * g.adjoint());
    return p * (trace / p.trace().real());
  }

  ComplexMatrix unitary(Eigen::Index m) { return haar_unitary(m, next_seed()); }

  /// Uniform point on the probability simplex (flat Dirichlet).
  std::vector<double> simplex(std::size_t k) {
    std::exponential_distribution<double> expo(1.0);
    std::vector<double> w(k);
    double sum = 0.0;
    for (auto& x : w) sum += (x = expo(rng_));
    for (auto& x : w) x /= sum;
    return w;
  }

  std::array<double, 4> simplex4() {
    const auto w = simplex(4);
    return {w[0], w[1], w[2], w[3]};
  }

  SingleParams single(Eigen::Index n, double scale = 1.0) {
    SingleParams p;
    p.n = n;
    p.lambdas = simplex(static_cast<std::size_t>(n));
    std::sort(p.lambdas.rbegin(), p.lambdas.rend());
    for (Eigen::Index j = 2; j <= n; ++j) p.zvecs.push_back(cvector(j - 1, scale));
    return p;
  }

  BlockVector block_vector(Eigen::Index count, Eigen::Index m, double scale = 1.0) {
    BlockVector z;
    for (Eigen::Index k = 0; k < count; ++k) z.push_back(ginibre(m, m, scale));
    return z;
  }

  BlockParams block(Eigen::Index n, Eigen::Index m, double scale = 1.0) {
    BlockParams p;
    p.n = n;
    p.m = m;
    p.lambdas = simplex(static_cast<std::size_t>(n * m));
    for (Eigen::Index k = 0; k < n; ++k) p.local_unitaries.push_back(unitary(m));
    for (Eigen::Index j = 2; j <= n; ++j) p.blockvecs.push_back(block_vector(j - 1, m, scale));
    return p;
  }

  /// n-1 normal blocks sharing one eigenbasis, so the normalized blocks stay
  /// normal as well.
  BlockVector normal_blocks(Eigen::Index count, Eigen::Index m) {
    const ComplexMatrix w = unitary(m);
    BlockVector z;
    for (Eigen::Index k = 0; k < count; ++k) {
      const ComplexVector d = cvector(m);
      z.push_back(w * d.asDiagonal() * w.adjoint());
    }
    return z;
  }

  /// Toeplitz inputs: L and Xi2 block diagonal on an invariant splitting of
  /// C^m, U a phase on each summand. Gives [L, U] = 0 and U A U^dagger = A
  /// with a nonzero off-diagonal block B.
  ToeplitzSpec toeplitz(Eigen::Index m) {
    const ComplexMatrix w = unitary(m);
    const Eigen::Index k = (m <= 2) ? m : 2;
    ComplexMatrix l = zeros(m, m), xi = zeros(m, m), ph = zeros(m, m);
    const double phase_a = uniform(0.0, 2.0 * std::numbers::pi);
    const double phase_b = uniform(0.0, 2.0 * std::numbers::pi);
    l.topLeftCorner(k, k) = psd(k);
    xi.topLeftCorner(k, k) = psd(k, uniform(0.5, 2.0));
    ph.topLeftCorner(k, k) = std::exp(cplx(0.0, phase_a)) * identity(k);
    if (m > k) {
      l.bottomRightCorner(m - k, m - k) = psd(m - k);
      xi.bottomRightCorner(m - k, m - k) = psd(m - k, uniform(0.5, 2.0));
      ph.bottomRightCorner(m - k, m - k) = std::exp(cplx(0.0, phase_b)) * identity(m - k);
    }
    l *= 0.5 / l.trace().real();
    return {hermitian_part(w * l * w.adjoint()), w * ph * w.adjoint(),
            hermitian_part(w * xi * w.adjoint())};
  }

  /// Hankel inputs: everything diagonal in one random basis, U Hermitian
  /// (eigenvalues +-1) so that U B' = B' U^dagger.
  HankelSpec hankel(Eigen::Index m) {
    const ComplexMatrix w = unitary(m);
    RealVector a(m), b(m), x(m), signs(m);
    for (Eigen::Index i = 0; i < m; ++i) {
      a[i] = uniform(0.05, 1.0);
      b[i] = uniform(0.05, 1.0);
      x[i] = uniform(0.2, 1.3);
      signs[i] = uniform() < 0.5 ? -1.0 : 1.0;
    }
    const double total = a.sum() + b.sum();
    a /= total;
    b /= total;
    const auto conj = [&](const RealVector& v) -> ComplexMatrix {
      return hermitian_part(w * v.cast<cplx>().asDiagonal() * w.adjoint());
    };
    return {conj(signs), conj(b), conj(a), conj(x)};
  }

 private:
  std::mt19937_64 rng_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace dmparam
