#include <gtest/gtest.h>

#include <limits>

#include "test_util.hpp"

using namespace qrt;
using namespace qrt::testing;

namespace {

ReservoirConfig cfg(int n_m, int n_e, double tau, int m = 1, double j = 1.0) {
  ReservoirConfig c;
  c.n_m = n_m;
  c.n_e = n_e;
  c.tau = tau;
  c.multiplexity = m;
  c.j_strength = j;
  return c;
}

/// Amplitude damping (rate g) followed by dephasing that scales coherences by `coh`.
CMatrix damp(const CMatrix& r, double g, double coh) {
  CMatrix out(2, 2);
  out(0, 0) = r(0, 0) + g * r(1, 1);
  out(1, 1) = (1 - g) * r(1, 1);
  out(0, 1) = coh * r(0, 1);
  out(1, 0) = coh * r(1, 0);
  return out;
}

std::vector<Complex> eigs(const CMatrix& m) {
  Eigen::ComplexEigenSolver<CMatrix> es(m, false);
  return sorted_by_modulus(es.eigenvalues());
}

}  // namespace

TEST(Vec, ColumnStacking) {
  CVector id(4);
  id << 1, 0, 0, 1;
  EXPECT_EQ(vec(CMatrix::Identity(2, 2)), id);
  CMatrix e01 = CMatrix::Zero(2, 2);
  e01(0, 1) = 1.0;
  CVector v(4);
  v << 0, 0, 1, 0;
  EXPECT_EQ(vec(e01), v);
  PrngStream rng(1);
  const CMatrix a = ginibre(3, 3, rng);
  EXPECT_EQ(unvec(vec(a), 3), a);
  EXPECT_THROW(unvec(CVector::Zero(5), 2), DimensionError);
}

TEST(Superoperator, IdentityAtZeroTime) {
  PrngStream rng(2);
  const auto s = build_superoperator(cfg(2, 1, 0.0), random_density(2, rng));
  EXPECT_LE(frob(s.data - CMatrix::Identity(16, 16)), 1e-12);
}

TEST(Superoperator, DepolarizingSpectrum) {
  const double p = 0.3;
  const auto s = superoperator_from_map(2, [p](const CMatrix& r) {
    return CMatrix(p * r.trace() * CMatrix::Identity(2, 2) / 2.0 + (1 - p) * r);
  });
  const auto ev = eigs(s.data);
  EXPECT_NEAR(std::abs(ev[0] - 1.0), 0.0, 1e-12);
  for (int k = 1; k < 4; ++k) EXPECT_NEAR(std::abs(ev[k] - (1 - p)), 0.0, 1e-12);
}

TEST(Superoperator, ActionEquivalence) {
  PrngStream rng(3);
  for (int i = 0; i < 5; ++i) {
    const auto c = cfg(2, 1 + i % 2, rng.uniform(0.5, 10.0), 1 + i % 3, rng.uniform(0.1, 2.0));
    const Reservoir res(c);
    const auto beta = random_density(res.dim_e(), rng, 1 + i % 2);
    const auto s = build_superoperator(res, beta);
    const CMatrix oracle = superop_oracle(4, [&](const CMatrix& r) { return dense_step(res.unitary(), r, beta.matrix()); });
    EXPECT_LE(frob(s.data - oracle), 1e-10);
    for (int t = 0; t < 20; ++t) {
      const auto rho = random_density(4, rng);
      EXPECT_LE(frob(s.apply(rho.matrix()) - res.evolve_step({rho, 0}, beta).state.rho.matrix()), 1e-10);
    }
  }
}

TEST(Superoperator, InvariantsAndConjugatePairs) {
  PrngStream rng(4);
  const Reservoir res(cfg(3, 1, 2.5));
  for (int i = 0; i < 5; ++i) {
    const auto s = build_superoperator(res, haar_random_pure(2, rng));
    EXPECT_LE(s.trace_preservation_error(), 1e-8);
    const auto ev = eigs(s.data);
    EXPECT_LE(std::abs(ev[0]), 1.0 + 1e-8);
    EXPECT_NEAR(std::abs(ev[0]), 1.0, 1e-8);
    std::vector<bool> used(ev.size(), false);
    for (std::size_t a = 0; a < ev.size(); ++a) {
      double best = 1e9;
      std::size_t arg = 0;
      for (std::size_t b = 0; b < ev.size(); ++b)
        if (!used[b] && std::abs(ev[b] - std::conj(ev[a])) < best) best = std::abs(ev[b] - std::conj(ev[a])), arg = b;
      used[arg] = true;
      EXPECT_LE(best, 1e-9);
    }
  }
}

TEST(Superoperator, RejectsOversize) {
  EXPECT_THROW(build_superoperator(cfg(7, 1, 1.0), DensityMatrix::maximally_mixed(2)), DimensionError);
  EXPECT_THROW(build_superoperator(cfg(2, 1, 1.0), DensityMatrix::maximally_mixed(4)), DimensionError);
}

TEST(SpectralReport, Examples) {
  const auto r = spectral_report_from_eigenvalues({1.0, 0.5, 0.5, 0.5});
  EXPECT_NEAR(r.esp_timescale(1e-3), std::log(1000.0) / std::log(2.0), 1e-12);
  EXPECT_NEAR(r.esp_timescale(1e-3), 9.966, 1e-3);
  EXPECT_NEAR(r.ratio_mean, (0.5 + 1 + 1) / 3, 1e-15);
  EXPECT_NEAR(r.inv_lambda2, 2.0, 1e-15);

  PrngStream rng(5);
  const CMatrix u = random_unitary(2, rng);
  const auto s = superoperator_from_map(2, [&](const CMatrix& x) { return CMatrix(u * x * u.adjoint()); });
  const auto ru = spectral_report(s);
  for (const auto& z : ru.eigenvalues) EXPECT_NEAR(std::abs(z), 1.0, 1e-10);
  EXPECT_EQ(ru.esp_timescale(1e-3), std::numeric_limits<double>::infinity());
}

TEST(SpectralReport, ReservoirBounds) {
  PrngStream rng(6);
  const Reservoir res(cfg(3, 1, 10.0));
  const auto r = spectral_report(build_superoperator(res, haar_random_pure(2, rng)));
  EXPECT_EQ(r.eigenvalues.size(), 64u);
  EXPECT_NEAR(std::abs(r.eigenvalues[0]), 1.0, 1e-8);
  EXPECT_GE(r.inv_lambda2, 1.0 - 1e-8);
  for (std::size_t k = 1; k < r.eigenvalues.size(); ++k)
    EXPECT_LE(std::abs(r.eigenvalues[k]), std::abs(r.eigenvalues[k - 1]));
}

TEST(SpectralReport, TimescalePredictsConvergence) {
  PrngStream rng(7);
  int checked = 0;
  for (double tau : {3.0, 5.0, 10.0}) {
    const Reservoir res(cfg(3, 1, tau));
    const auto beta = haar_random_pure(2, rng);
    const auto r = spectral_report(build_superoperator(res, beta));
    if (r.lambda2_modulus() > 0.9) continue;
    ++checked;
    const double eps = 1e-3;
    const int steps = static_cast<int>(std::ceil(3 * r.esp_timescale(eps)));
    CMatrix a = haar_random_pure(8, rng).matrix(), b = haar_random_pure(8, rng).matrix();
    for (int n = 0; n < steps; ++n) {
      a = res.apply_channel(a, beta);
      b = res.apply_channel(b, beta);
    }
    EXPECT_LE(trace_distance(a, b), eps);
  }
  EXPECT_GT(checked, 0);
}

TEST(ConvergenceRatio, Examples) {
  PrngStream rng(8);
  EXPECT_EQ(convergence_ratio(cfg(2, 1, 10.0), 0, 3, rng), 1.0);
  EXPECT_NEAR(convergence_ratio(cfg(3, 1, 1e-9), 50, 5, rng), 1.0, 1e-6);
  EXPECT_LT(convergence_ratio(ReservoirConfig{}, 100, 10, rng), 1e-3);
  EXPECT_THROW(convergence_ratio(cfg(2, 1, 1.0), 5, 0, rng), DomainError);
}

TEST(Metastable, EffectiveGeneratorExample) {
  const auto a = effective_generator(0.5, 1.0, -1.0);
  Eigen::Matrix2d expect;
  expect << -0.25, 0.25, 0.25, -0.25;
  EXPECT_LE((a - expect).norm(), 1e-15);
  EXPECT_THROW(effective_generator(0.5, 0.0, 0.0), DomainError);
}

TEST(Metastable, AmplitudeDampingIsAnalytic) {
  const double g = 0.1;
  const auto s = superoperator_from_map(2, [g](const CMatrix& r) { return damp(r, g, 0.5); });
  const auto m = metastable_decomposition(s);
  EXPECT_NEAR(m.lambda2, 0.9, 1e-12);
  EXPECT_LE(frob(m.rho_ss.matrix() - DensityMatrix::basis_state(2, 0).matrix()), 1e-12);
  const CMatrix e0 = DensityMatrix::basis_state(2, 0).matrix(), e1 = DensityMatrix::basis_state(2, 1).matrix();
  const bool order_a = frob(m.ems_1.matrix() - e1) < 1e-10 && frob(m.ems_2.matrix() - e0) < 1e-10;
  const bool order_b = frob(m.ems_1.matrix() - e0) < 1e-10 && frob(m.ems_2.matrix() - e1) < 1e-10;
  EXPECT_TRUE(order_a || order_b);
  // total transfer rate between the two EMSs is the damping rate
  EXPECT_NEAR(-m.a_eff.trace(), g, 1e-12);
  EXPECT_NEAR((m.l2 * m.rho_ss.matrix()).trace().real(), 0.0, 1e-9);
  EXPECT_NEAR((m.l2 * m.r2).trace().real(), 1.0, 1e-10);
}

TEST(Metastable, RejectsComplexOrDegenerate) {
  const double p = 0.3;
  const auto depol = superoperator_from_map(2, [p](const CMatrix& r) {
    return CMatrix(p * r.trace() * CMatrix::Identity(2, 2) / 2.0 + (1 - p) * r);
  });
  EXPECT_THROW(metastable_decomposition(depol), DomainError);
  CMatrix rz = CMatrix::Zero(2, 2);
  rz(0, 0) = std::exp(kI * 0.4);
  rz(1, 1) = std::exp(-kI * 0.4);
  const auto spiral = superoperator_from_map(2, [&](const CMatrix& r) {
    return CMatrix(rz * damp(r, 0.19, 0.95) * rz.adjoint());
  });
  EXPECT_THROW(metastable_decomposition(spiral), DomainError);
  CMatrix h = pauli(Axis::x);
  const CMatrix u = build_unitary(h, 0.3);
  EXPECT_THROW(metastable_decomposition(superoperator_from_map(2, [&](const CMatrix& r) { return CMatrix(u * r * u.adjoint()); })),
               DomainError);
}

TEST(Metastable, ReservoirInvariants) {
  PrngStream rng(9);
  int found = 0;
  for (int attempt = 0; attempt < 60 && found < 3; ++attempt) {
    const Reservoir res(cfg(2, 1, rng.uniform(0.5, 5.0), 1, rng.uniform(0.05, 1.0)));
    const auto s = build_superoperator(res, haar_random_pure(2, rng));
    MetastableDecomposition m;
    try {
      m = metastable_decomposition(s);
    } catch (const DomainError&) {
      continue;
    }
    ++found;
    const CMatrix id = CMatrix::Identity(4, 4);
    EXPECT_LE(frob(m.povm_p1 + m.povm_p2 - id), 1e-10);
    EXPECT_GE(min_eig(m.povm_p1), -1e-8);
    EXPECT_GE(min_eig(m.povm_p2), -1e-8);
    EXPECT_LE(std::abs(m.a_eff.col(0).sum()), 1e-10);
    EXPECT_LE(std::abs(m.a_eff.col(1).sum()), 1e-10);
    EXPECT_LE(m.v2_min, 0.0);
    EXPECT_GE(m.v2_max, 0.0);
    EXPECT_NEAR((m.l2 * m.rho_ss.matrix()).trace().real(), 0.0, 1e-9);
    const Eigen::Vector2d w = m.stationary();
    EXPECT_LE((m.a_eff * w).norm(), 1e-12);
    EXPECT_LE(frob(w(0) * m.ems_1.matrix() + w(1) * m.ems_2.matrix() - m.rho_ss.matrix()), 1e-10);
    for (int t = 0; t < 100; ++t) {
      const double p1 = (m.povm_p1 * random_density(4, rng).matrix()).trace().real();
      EXPECT_GE(p1, -1e-10);
      EXPECT_LE(p1, 1.0 + 1e-10);
    }
  }
  EXPECT_GT(found, 0);
}
