#include <gtest/gtest.h>

#include <numbers>

#include "test_util.hpp"

using namespace qrt;
using namespace qrt::testing;

namespace {

DensityMatrix tilted(double c) {
  CVector v(2);
  v << c, std::sqrt(1 - c * c);
  return DensityMatrix::pure(v);
}

std::vector<DensityMatrix> haar_seq(std::size_t n, Eigen::Index d, PrngStream& rng) {
  std::vector<DensityMatrix> s;
  for (std::size_t i = 0; i < n; ++i) s.push_back(haar_random_pure(d, rng));
  return s;
}

/// Features holding the vectorized inputs at lags 0..lags, plus a bias.
FeatureMatrix lag_features(const std::vector<DensityMatrix>& in, int lags) {
  const Eigen::Index w = 2 * in[0].dim() * in[0].dim();
  FeatureMatrix f{RMatrix::Zero(static_cast<Eigen::Index>(in.size()), w * (lags + 1) + 1)};
  for (std::size_t n = 0; n < in.size(); ++n) {
    for (int l = 0; l <= lags && static_cast<std::size_t>(l) <= n; ++l)
      f.data.row(static_cast<Eigen::Index>(n)).segment(l * w, w) = vectorize_density(in[n - l]).transpose();
    f.data(static_cast<Eigen::Index>(n), w * (lags + 1)) = 1.0;
  }
  return f;
}

}  // namespace

TEST(Rmsf, Examples) {
  PrngStream rng(1);
  const auto s = haar_seq(10, 3, rng);
  EXPECT_NEAR(rmsf(s, s), 1.0, 1e-10);
  const std::vector<DensityMatrix> t{DensityMatrix::basis_state(2, 0), DensityMatrix::basis_state(2, 0)};
  const std::vector<DensityMatrix> p{tilted(0.6), tilted(0.8)};
  EXPECT_NEAR(rmsf(t, p), std::sqrt(0.5), 1e-12);
  EXPECT_THROW(rmsf({}, {}), DomainError);
  EXPECT_THROW(rmsf(t, {p[0]}), DimensionError);
}

TEST(Rmsf, MatchesScalarOracle) {
  PrngStream rng(2);
  std::vector<DensityMatrix> a, b;
  for (int i = 0; i < 50; ++i) {
    a.push_back(random_density(4, rng, 1 + i % 4));
    b.push_back(random_density(4, rng, 1 + (i + 1) % 4));
  }
  double acc = 0.0;
  for (int i = 0; i < 50; ++i) acc += std::pow(fidelity_oracle(a[i].matrix(), b[i].matrix()), 2);
  const double r = rmsf(a, b);
  EXPECT_NEAR(r, std::sqrt(acc / 50), 1e-10);
  EXPECT_GE(r, 0.0);
  EXPECT_LT(r, 1.0 - 1e-3);
  const auto f = fidelities(a, b);
  EXPECT_NEAR(f[3], fidelity_oracle(a[3].matrix(), b[3].matrix()), 1e-10);
}

TEST(StateAngle, Examples) {
  PrngStream rng(3);
  const auto a = random_density(3, rng), b = random_density(3, rng);
  EXPECT_NEAR(state_angle(a, a), 0.0, 1e-5);
  EXPECT_NEAR(state_angle(DensityMatrix::basis_state(2, 0), DensityMatrix::basis_state(2, 1)), std::numbers::pi / 2, 1e-12);
  EXPECT_NEAR(state_angle(a, b), state_angle(b, a), 1e-9);
}

TEST(AngleMatrix, MatchesFidelityRoute) {
  PrngStream rng(4);
  std::vector<DensityMatrix> s;
  for (int i = 0; i < 12; ++i) s.push_back(random_density(i < 6 ? 4 : 4, rng, 1 + i % 4));
  const RMatrix a = angle_matrix(s);
  for (int j = 0; j < 12; ++j)
    for (int k = 0; k < j; ++k) {
      const double f = fidelity_oracle(s[j].matrix(), s[k].matrix());
      EXPECT_NEAR(std::cos(a(j, k)), f, 1e-9);
      EXPECT_EQ(a(j, k), a(k, j));
    }
  // dimension above the small-matrix path
  std::vector<DensityMatrix> big;
  for (int i = 0; i < 5; ++i) big.push_back(random_density(16, rng, 1 + i));
  const RMatrix ab = angle_matrix(big);
  for (int j = 0; j < 5; ++j)
    for (int k = 0; k < j; ++k) EXPECT_NEAR(std::cos(ab(j, k)), fidelity_oracle(big[j].matrix(), big[k].matrix()), 1e-9);
}

TEST(DistanceCorrelation, SelfConstantAndOracle) {
  PrngStream rng(5);
  const auto s = haar_seq(40, 2, rng);
  EXPECT_NEAR(distance_correlation_sq(s, s), 1.0, 1e-12);
  const std::vector<DensityMatrix> c(40, s[0]);
  EXPECT_EQ(distance_correlation_sq(c, s), 0.0);
  EXPECT_EQ(distance_correlation_sq(s, c), 0.0);
  std::vector<DensityMatrix> m;
  for (int i = 0; i < 30; ++i) m.push_back(random_density(2, rng, 1 + i % 2));
  const auto t = haar_seq(30, 4, rng);
  EXPECT_NEAR(distance_correlation_sq(m, t), dcor_oracle(m, t), 1e-9);
  EXPECT_THROW(distance_correlation_sq({s[0]}, {s[1]}), DomainError);
  EXPECT_THROW(distance_correlation_sq(s, t), DimensionError);
}

TEST(DistanceCorrelation, SymmetryAndUnitaryInvariance) {
  PrngStream rng(6);
  const auto a = haar_seq(60, 2, rng);
  std::vector<DensityMatrix> b;
  for (const auto& x : a) b.push_back(depolarize(x, rng.uniform(0.0, 0.5)));
  const double ab = distance_correlation_sq(a, b);
  EXPECT_NEAR(ab, distance_correlation_sq(b, a), 1e-12);
  EXPECT_GT(ab, 0.2);
  const CMatrix u = random_unitary(2, rng);
  std::vector<DensityMatrix> bu;
  for (const auto& x : b) bu.push_back(DensityMatrix(hermitian_part(u * x.matrix() * u.adjoint())));
  EXPECT_NEAR(distance_correlation_sq(a, bu), ab, 1e-10);
}

TEST(DistanceCorrelation, IndependentStreamsAreWeak) {
  PrngStream rng(7);
  const auto a = haar_seq(1000, 2, rng);
  const auto b = haar_seq(1000, 2, rng);
  EXPECT_LT(distance_correlation_sq(a, b), 0.1);
}

TEST(MemoryProfile, PerfectReconstructionSaturates) {
  PrngStream rng(8);
  const auto in = haar_seq(260, 2, rng);
  const Split split{10, 150, 100};
  const auto prof = memory_profile(lag_features(in, 4), in, split, 4);
  ASSERT_EQ(prof.r2.size(), 5u);
  for (double r : prof.r2) EXPECT_NEAR(r, 1.0, 1e-6);
  EXPECT_NEAR(prof.qmc, 5.0, 1e-5);
  EXPECT_EQ(prof.d_max, 4);
}

TEST(MemoryProfile, ConstantReadoutGivesZero) {
  PrngStream rng(9);
  const auto in = haar_seq(260, 2, rng);
  const FeatureMatrix bias{RMatrix::Ones(260, 1)};
  const auto prof = memory_profile(bias, in, {10, 150, 100}, 3);
  EXPECT_EQ(prof.qmc, 0.0);
}

TEST(MemoryProfile, Errors) {
  PrngStream rng(10);
  const auto in = haar_seq(100, 2, rng);
  const auto f = lag_features(in, 0);
  EXPECT_THROW(memory_profile(f, in, {10, 50, 40}, 40), DomainError);
  EXPECT_THROW(memory_profile(f, in, {3, 50, 47}, 5), DomainError);
  EXPECT_THROW(memory_profile(f, in, {10, 60, 40}, 2), DimensionError);
}

TEST(MemoryProfile, ReservoirIsReproducibleAndForgets) {
  ReservoirConfig c;
  c.n_m = 2;
  c.n_e = 1;
  c.tau = 2.0;
  c.multiplexity = 2;
  c.observables = ObservableSet::z_zz;
  auto run = [&](std::uint64_t seed) {
    PrngStream rng(seed);
    const Reservoir res(c);
    const auto s = generate_input_stream(700, 1, 1, rng);
    const auto f = res.run_sequence(s.beta, res.initial_state(InitialState::zero)).features;
    return memory_profile(f, s.beta, {100, 400, 200}, 3);
  };
  const auto a = run(11), b = run(11);
  EXPECT_EQ(a.r2, b.r2);
  EXPECT_LT(a.r2.back(), a.r2.front());
  for (double r : a.r2) {
    EXPECT_GE(r, 0.0);
    EXPECT_LE(r, 1.0);
  }
  EXPECT_LE(a.qmc, 4.0);
}

TEST(NegativityRmse, Examples) {
  PrngStream rng(12);
  std::vector<DensityMatrix> a, b;
  for (int i = 0; i < 20; ++i) {
    a.push_back(random_density(4, rng, 1));
    b.push_back(random_density(4, rng, 2));
  }
  EXPECT_EQ(negativity_rmse(a, a, 2), 0.0);
  const std::vector<DensityMatrix> bell(5, bell_state(0, 0));
  const std::vector<DensityMatrix> prod(5, DensityMatrix::basis_state(4, 0));
  EXPECT_NEAR(negativity_rmse(bell, prod, 2), 0.5, 1e-12);
  double acc = 0.0;
  for (int i = 0; i < 20; ++i) acc += std::pow(negativity_oracle(a[i].matrix(), 2) - negativity_oracle(b[i].matrix(), 2), 2);
  EXPECT_NEAR(negativity_rmse(a, b, 2), std::sqrt(acc / 20), 1e-12);
}
