#include <gtest/gtest.h>

#include "test_util.hpp"

using namespace qrt;
using namespace qrt::testing;

namespace {

ReservoirConfig small_config(int n_m, int n_e, double tau, int m = 1, ObservableSet obs = ObservableSet::z_zz) {
  ReservoirConfig c;
  c.n_m = n_m;
  c.n_e = n_e;
  c.tau = tau;
  c.multiplexity = m;
  c.observables = obs;
  return c;
}

CMatrix swap_gate() {
  CMatrix s = CMatrix::Zero(4, 4);
  s(0, 0) = s(3, 3) = 1.0;
  s(1, 2) = s(2, 1) = 1.0;
  return s;
}

}  // namespace

TEST(ReservoirConfig, Validation) {
  EXPECT_NO_THROW(small_config(2, 1, 1.0).validate());
  EXPECT_THROW(small_config(0, 1, 1.0).validate(), ValidationError);
  EXPECT_THROW(small_config(2, 0, 1.0).validate(), ValidationError);
  EXPECT_THROW(small_config(2, 1, 1.0, 0).validate(), ValidationError);
  auto c = small_config(2, 1, 1.0);
  c.alpha = 3.0;
  EXPECT_THROW(c.validate(), ValidationError);
  EXPECT_EQ(small_config(5, 1, 1.0, 5, ObservableSet::z_zz).num_observables(), 15);
  EXPECT_EQ(small_config(5, 1, 1.0, 5, ObservableSet::z_zz).feature_dim(), 76);
  EXPECT_EQ(small_config(4, 2, 1.0, 1, ObservableSet::z).num_observables(), 4);
}

TEST(Hamiltonian, TwoSites) {
  for (double alpha : {0.5, 1.0, 2.0}) {
    auto c = small_config(1, 1, 1.0);
    c.alpha = alpha;
    c.j_strength = 0.7;
    c.b_field = 1.3;
    const CMatrix x = pauli(Axis::x), z = pauli(Axis::z), id = CMatrix::Identity(2, 2);
    const CMatrix expect = 0.7 * kron_loop(x, x) + 1.3 * (kron_loop(z, id) + kron_loop(id, z));
    EXPECT_LE(frob(build_hamiltonian(c) - expect), 1e-14);
  }
}

TEST(Hamiltonian, ThreeSiteCouplings) {
  const RMatrix j = power_law_couplings(3, 1.0, 1.0);
  EXPECT_NEAR(j(0, 1), 1.0 / 1.25, 1e-15);
  EXPECT_NEAR(j(1, 2), 1.0 / 1.25, 1e-15);
  EXPECT_NEAR(j(0, 2), 1.0 / 2.5, 1e-15);
}

TEST(Hamiltonian, StorageOrderMatchesSiteOrderUnderPermutation) {
  // Sites 1..n_e are the input register but sit to the right of the reservoir in storage.
  auto c = small_config(2, 1, 1.0);
  c.alpha = 0.8;
  const RMatrix j = power_law_couplings(3, c.alpha, c.j_strength);
  auto op_on = [](const CMatrix& p, int slot) {
    CMatrix m = CMatrix::Identity(1, 1);
    for (int s = 1; s <= 3; ++s) m = kron_loop(m, s == slot ? p : CMatrix::Identity(2, 2));
    return m;
  };
  // site 1 -> slot 3, site 2 -> slot 1, site 3 -> slot 2
  const int slot_of[4] = {0, 3, 1, 2};
  CMatrix h = CMatrix::Zero(8, 8);
  for (int a = 1; a <= 3; ++a) {
    h += c.b_field * op_on(pauli(Axis::z), slot_of[a]);
    for (int b = 1; b < a; ++b) h += j(a - 1, b - 1) * op_on(pauli(Axis::x), slot_of[a]) * op_on(pauli(Axis::x), slot_of[b]);
  }
  EXPECT_LE(frob(build_hamiltonian(c) - h), 1e-14);
  EXPECT_LE(frob(build_hamiltonian(c) - build_hamiltonian(c).adjoint()), 1e-12);
}

TEST(Unitary, Examples) {
  auto c = small_config(2, 1, 0.0);
  EXPECT_LE(frob(build_unitary(c) - CMatrix::Identity(8, 8)), 1e-12);
  CMatrix h = CMatrix::Zero(3, 3);
  h(0, 0) = 0.3, h(1, 1) = -1.2, h(2, 2) = 2.0;
  const CMatrix u = build_unitary(h, 1.7);
  for (int k = 0; k < 3; ++k) EXPECT_LE(std::abs(u(k, k) - std::exp(-kI * 1.7 * h(k, k).real())), 1e-14);
  EXPECT_LE(max_abs(u - CMatrix(u.diagonal().asDiagonal())), 1e-14);
  PrngStream rng(1);
  for (int i = 0; i < 10; ++i) {
    const CMatrix hr = random_hermitian(5, rng);
    const CMatrix ur = build_unitary(hr, 0.9);
    EXPECT_LE(frob(ur - expm_taylor(hr, 0.9)), 1e-9);
    EXPECT_LE(frob(ur * ur.adjoint() - CMatrix::Identity(5, 5)), 1e-10);
  }
  c.tau = 10.0;
  EXPECT_LE(frob(build_unitary(c) - expm_taylor(build_hamiltonian(c), 10.0)), 1e-9);
}

TEST(EvolveStep, IdentityEvolution) {
  const Reservoir res(small_config(2, 1, 0.0, 3));
  PrngStream rng(2);
  const ReservoirState s{random_density(4, rng), 0};
  const auto out = res.evolve_step(s, random_density(2, rng));
  EXPECT_LE(frob(out.state.rho.matrix() - s.rho.matrix()), 1e-12);
  EXPECT_EQ(out.state.step_index, 1);
  for (int k = 0; k < 3; ++k)
    for (std::size_t o = 0; o < res.observables().size(); ++o)
      EXPECT_NEAR(out.features(k * 3 + static_cast<Eigen::Index>(o)), res.observables()[o].expectation(s.rho), 1e-12);
}

TEST(EvolveStep, SwapLoadsInput) {
  const auto res = Reservoir::with_propagators(small_config(1, 1, 1.0), {swap_gate()});
  PrngStream rng(3);
  const auto beta = random_density(2, rng);
  const auto out = res.evolve_step({random_density(2, rng), 0}, beta);
  EXPECT_LE(frob(out.state.rho.matrix() - beta.matrix()), 1e-14);
}

TEST(EvolveStep, MatchesDenseOracle) {
  PrngStream rng(4);
  for (int i = 0; i < 20; ++i) {
    auto c = small_config(2, 1, rng.uniform(0.1, 10.0));
    c.alpha = rng.uniform(0.2, 2.8);
    const Reservoir res(c);
    const auto rho = random_density(4, rng, 1 + i % 4);
    const auto beta = random_density(2, rng, 1 + i % 2);
    const auto out = res.evolve_step({rho, 0}, beta);
    const CMatrix u = expm_taylor(build_hamiltonian(c), c.tau);
    EXPECT_LE(frob(out.state.rho.matrix() - dense_step(u, rho.matrix(), beta.matrix())), 1e-10);
  }
  // two-qubit input register
  const Reservoir res(small_config(2, 2, 3.0));
  const auto rho = random_density(4, rng);
  const auto beta = random_density(4, rng);
  EXPECT_LE(frob(res.evolve_step({rho, 0}, beta).state.rho.matrix() -
                 dense_step(res.unitary(), rho.matrix(), beta.matrix())),
            1e-10);
}

TEST(EvolveStep, DimensionMismatchThrows) {
  const Reservoir res(small_config(2, 1, 1.0));
  EXPECT_THROW(res.evolve_step({DensityMatrix::maximally_mixed(4), 0}, DensityMatrix::maximally_mixed(4)), DimensionError);
  EXPECT_THROW(res.evolve_step({DensityMatrix::maximally_mixed(2), 0}, DensityMatrix::maximally_mixed(2)), DimensionError);
}

TEST(EvolveStep, MultiplexityConsistency) {
  PrngStream rng(5);
  auto c5 = small_config(3, 1, 4.0, 5);
  auto c1 = small_config(3, 1, 4.0, 1);
  const Reservoir r5(c5), r1(c1);
  const auto rho = random_density(8, rng);
  const auto beta = random_density(2, rng);
  const auto a = r5.evolve_step({rho, 0}, beta);
  const auto b = r1.evolve_step({rho, 0}, beta);
  EXPECT_LE(frob(a.state.rho.matrix() - b.state.rho.matrix()), 1e-9);
  // the last snapshot of the multiplexed run measures the same state as the single shot
  const auto k = static_cast<Eigen::Index>(r1.observables().size());
  EXPECT_LE((a.features.tail(k) - b.features).norm(), 1e-9);
  // earlier snapshots are the partial-time states
  const auto& u2 = r5.propagators()[1];
  const CMatrix partial = dense_step(u2, rho.matrix(), beta.matrix());
  for (Eigen::Index o = 0; o < k; ++o)
    EXPECT_NEAR(a.features(k + o), r5.observables()[static_cast<std::size_t>(o)].expectation(partial), 1e-10);
}

TEST(RunSequence, EmptyInput) {
  const Reservoir res(small_config(2, 1, 1.0));
  PrngStream rng(6);
  const ReservoirState s{random_density(4, rng), 7};
  const auto out = res.run_sequence({}, s);
  EXPECT_EQ(out.features.rows(), 0);
  EXPECT_EQ(out.final_state.step_index, 7);
  EXPECT_EQ(out.final_state.rho.matrix(), s.rho.matrix());
}

TEST(RunSequence, ConstantInputConverges) {
  const Reservoir res(small_config(3, 1, 10.0, 1));
  PrngStream rng(7);
  const std::vector<DensityMatrix> inputs(400, random_density(2, rng));
  const auto out = res.run_sequence(inputs, res.initial_state(InitialState::zero));
  const auto& f = out.features.data;
  EXPECT_LT((f.row(f.rows() - 1) - f.row(f.rows() - 2)).norm(), 1e-6);
}

TEST(RunSequence, EchoStateProperty) {
  const Reservoir res(small_config(3, 1, 10.0, 1));
  PrngStream rng(8);
  std::vector<DensityMatrix> inputs;
  for (int i = 0; i < 300; ++i) inputs.push_back(haar_random_pure(2, rng));
  const auto a = res.run_sequence(inputs, {haar_random_pure(8, rng), 0});
  const auto b = res.run_sequence(inputs, {haar_random_pure(8, rng), 0});
  EXPECT_LT(trace_distance(a.final_state.rho, b.final_state.rho), 1e-3);
}

TEST(RunSequence, LayoutAndBounds) {
  const Reservoir res(small_config(3, 1, 2.0, 2));
  PrngStream rng(9);
  std::vector<DensityMatrix> inputs;
  for (int i = 0; i < 50; ++i) inputs.push_back(haar_random_pure(2, rng));
  const auto out = res.run_sequence(inputs, res.initial_state(InitialState::haar, &rng));
  EXPECT_EQ(out.features.cols(), 2 * 6 + 1);
  EXPECT_TRUE((out.features.data.col(12).array() == 1.0).all());
  EXPECT_LE(out.features.data.leftCols(12).cwiseAbs().maxCoeff(), 1.0 + 1e-9);
  EXPECT_EQ(out.final_state.step_index, 50);
  PrngStream r1(10), r2(10);
  EXPECT_EQ(res.run_sequence(inputs, res.initial_state(InitialState::haar, &r1)).features.data,
            res.run_sequence(inputs, res.initial_state(InitialState::haar, &r2)).features.data);
}

TEST(Observables, Ordering) {
  const auto obs = reservoir_observables(3, ObservableSet::z_zz);
  ASSERT_EQ(obs.size(), 6u);
  EXPECT_EQ(obs[0].label, "sz_1");
  EXPECT_EQ(obs[2].label, "sz_3");
  EXPECT_EQ(obs[3].label, "szsz_1_2");
  EXPECT_EQ(obs[4].label, "szsz_1_3");
  EXPECT_EQ(obs[5].label, "szsz_2_3");
}

TEST(Magnetization, Examples) {
  EXPECT_NEAR(average_magnetization(DensityMatrix::basis_state(8, 0), Axis::z), 1.0, 1e-15);
  for (Axis g : {Axis::x, Axis::y, Axis::z}) EXPECT_NEAR(average_magnetization(DensityMatrix::maximally_mixed(8), g), 0.0, 1e-15);
  PrngStream rng(11);
  const auto rho = random_density(8, rng);
  double acc = 0.0;
  for (int j = 1; j <= 3; ++j) acc += (pauli_on_site(Axis::y, j, 3).data * rho.matrix()).trace().real();
  EXPECT_NEAR(average_magnetization(rho, Axis::y), acc / 3.0, 1e-13);
}

TEST(Properties, CptpAndContractivity) {
  PrngStream rng(12);
  const Reservoir res(small_config(3, 1, 2.0, 2));
  ReservoirState a{haar_random_pure(8, rng), 0}, b{haar_random_pure(8, rng), 0};
  double prev = trace_distance(a.rho, b.rho);
  for (int n = 0; n < 2000; ++n) {
    const auto beta = haar_random_pure(2, rng);
    a = res.evolve_step(a, beta).state;
    b = res.evolve_step(b, beta).state;
    ASSERT_LE(a.rho.trace_error(), 1e-9);
    ASSERT_LE(a.rho.hermiticity_error(), 1e-10);
    ASSERT_GE(a.rho.min_eigenvalue(), -1e-8);
    const double d = trace_distance(a.rho, b.rho);
    ASSERT_LE(d, prev + 1e-10);
    prev = d;
  }
}

TEST(Properties, KrausOperatorsComplete) {
  PrngStream rng(13);
  const Reservoir res(small_config(2, 2, 1.5, 2));
  const auto beta = random_density(4, rng);
  for (int k = 1; k <= 2; ++k) {
    CMatrix acc = CMatrix::Zero(4, 4);
    for (const auto& kk : res.kraus_operators(beta, k)) acc += kk.adjoint() * kk;
    EXPECT_LE(frob(acc - CMatrix::Identity(4, 4)), 1e-12);
  }
}
