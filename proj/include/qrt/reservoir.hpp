#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "qrt/prng.hpp"
#include "qrt/qcore.hpp"
#include "qrt/types.hpp"

namespace qrt {

/// Which reservoir observables are measured after each sub-cycle.
enum class ObservableSet {
  z,       ///< s^z_j for every reservoir qubit (K = N_m)
  z_zz,    ///< s^z_j plus s^z_i s^z_j for i < j (K = N_m (N_m + 1) / 2)
};

inline std::string to_string(ObservableSet s) { return s == ObservableSet::z ? "z" : "z+zz"; }

inline ObservableSet parse_observable_set(const std::string& s) {
  if (s == "z") return ObservableSet::z;
  if (s == "z+zz" || s == "z_zz") return ObservableSet::z_zz;
  throw ValidationError("observables", "expected \"z\" or \"z+zz\", got \"" + s + "\"");
}

inline constexpr int kMaxTotalQubits = 11;

/// Physical parameters of the spin-network reservoir and its input register.
struct ReservoirConfig {
  int n_m = 5;            ///< reservoir qubits
  int n_e = 1;            ///< input (environment) qubits
  double alpha = 1.0;     ///< power-law exponent of the couplings
  double j_strength = 1.0;
  double b_field = 1.0;
  double tau = 10.0;      ///< interaction time between consecutive inputs
  int multiplexity = 1;   ///< measured sub-cycles per input
  ObservableSet observables = ObservableSet::z;

  int total_qubits() const { return n_m + n_e; }
  double tau_b() const { return tau * b_field; }
  int num_observables() const { return observables == ObservableSet::z ? n_m : n_m * (n_m + 1) / 2; }
  int feature_dim() const { return multiplexity * num_observables() + 1; }
  Eigen::Index dim_s() const { return Eigen::Index{1} << n_m; }
  Eigen::Index dim_e() const { return Eigen::Index{1} << n_e; }

  void validate() const {
    if (n_m < 1) throw ValidationError("reservoir.n_m", "must be >= 1");
    if (n_e < 1) throw ValidationError("reservoir.n_e", "must be >= 1");
    if (total_qubits() > kMaxTotalQubits)
      throw ValidationError("reservoir", "n_m + n_e must be <= " + std::to_string(kMaxTotalQubits));
    if (multiplexity < 1) throw ValidationError("reservoir.multiplexity", "must be >= 1");
    if (!(alpha > 0.0 && alpha < 3.0)) throw ValidationError("reservoir.alpha", "must lie in (0, 3)");
    if (!std::isfinite(j_strength)) throw ValidationError("reservoir.j_strength", "must be finite");
    if (!std::isfinite(b_field)) throw ValidationError("reservoir.b_field", "must be finite");
    if (!(tau >= 0.0) || !std::isfinite(tau)) throw ValidationError("reservoir.tau", "must be finite and >= 0");
  }
};

/// J_ij = J |i - j|^-alpha / N(alpha) for sites 1..n, N(alpha) = sum_{i>j} |i-j|^-alpha / (n - 1).
inline RMatrix power_law_couplings(int n, double alpha, double j_strength) {
  RMatrix c = RMatrix::Zero(n, n);
  if (n < 2) return c;
  double norm = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < i; ++j) norm += std::pow(static_cast<double>(i - j), -alpha);
  norm /= static_cast<double>(n - 1);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < i; ++j) {
      c(i, j) = j_strength * std::pow(static_cast<double>(i - j), -alpha) / norm;
      c(j, i) = c(i, j);
    }
  return c;
}

/// Tensor slot (1-based, leftmost first) holding Hamiltonian site `site`.
///
/// Sites 1..n_e form the input register E and the rest form the reservoir S,
/// while the joint state is stored as rho_S (x) beta_E.
inline int storage_slot(int site, int n_m, int n_e) { return site <= n_e ? n_m + site : site - n_e; }

/// H = sum_{i>j} J_ij s^x_i s^x_j + B sum_j s^z_j in the rho_S (x) beta_E basis.
inline CMatrix build_hamiltonian(const ReservoirConfig& cfg) {
  cfg.validate();
  const int n = cfg.total_qubits();
  const Eigen::Index dim = Eigen::Index{1} << n;
  const RMatrix jc = power_law_couplings(n, cfg.alpha, cfg.j_strength);
  auto bit_of_site = [&](int site) { return n - storage_slot(site, cfg.n_m, cfg.n_e); };

  CMatrix h = CMatrix::Zero(dim, dim);
  for (Eigen::Index b = 0; b < dim; ++b) {
    double diag = 0.0;
    for (int site = 1; site <= n; ++site) diag += ((b >> bit_of_site(site)) & 1) ? -cfg.b_field : cfg.b_field;
    h(b, b) = diag;
  }
  for (int i = 1; i <= n; ++i) {
    for (int j = 1; j < i; ++j) {
      const Eigen::Index mask = (Eigen::Index{1} << bit_of_site(i)) | (Eigen::Index{1} << bit_of_site(j));
      const double jij = jc(i - 1, j - 1);
      for (Eigen::Index b = 0; b < dim; ++b) h(b ^ mask, b) += jij;
    }
  }
  return h;
}

/// exp(-i t H) for Hermitian H via its eigendecomposition.
inline CMatrix build_unitary(const CMatrix& h, double t) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(hermitian_part(h));
  CVector phases(es.eigenvalues().size());
  for (Eigen::Index k = 0; k < phases.size(); ++k) phases(k) = std::exp(-kI * t * es.eigenvalues()(k));
  return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
}

inline CMatrix build_unitary(const ReservoirConfig& cfg) { return build_unitary(build_hamiltonian(cfg), cfg.tau); }

/// Reservoir observables in feature order: z by site, then zz in lexicographic (i, j), i < j.
inline std::vector<Observable> reservoir_observables(int n_m, ObservableSet set) {
  std::vector<Observable> obs;
  for (int j = 1; j <= n_m; ++j) obs.push_back(pauli_on_site(Axis::z, j, n_m));
  if (set == ObservableSet::z_zz) {
    for (int i = 1; i <= n_m; ++i)
      for (int j = i + 1; j <= n_m; ++j)
        obs.emplace_back(obs[i - 1].data * obs[j - 1].data, "szsz_" + std::to_string(i) + "_" + std::to_string(j));
  }
  return obs;
}

struct ReservoirState {
  DensityMatrix rho;
  std::int64_t step_index = 0;
};

/// Regression design matrix: one row per time step, trailing bias column of ones.
struct FeatureMatrix {
  RMatrix data;

  Eigen::Index rows() const { return data.rows(); }
  Eigen::Index cols() const { return data.cols(); }

  FeatureMatrix rows_range(Eigen::Index start, Eigen::Index count) const {
    return {data.middleRows(start, count)};
  }
};

struct StepResult {
  ReservoirState state;
  RVector features;  ///< M * K measurements, sub-cycle major
};

struct SequenceResult {
  FeatureMatrix features;
  ReservoirState final_state;
};

enum class InitialState { zero, haar };

/// Repeated-interaction reservoir: rho_n = tr_E[U (rho_{n-1} (x) beta_n) U^dagger].
///
/// Each input beta = sum_r w_r |psi_r><psi_r| turns the sub-cycle propagators
/// U^k (k = 1..M) into Kraus operators (I (x) <e|) U^k (I (x) |psi_r>) on S, so
/// the joint state is never formed explicitly.
class Reservoir {
 public:
  explicit Reservoir(ReservoirConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    hamiltonian_ = build_hamiltonian(cfg_);
    Eigen::SelfAdjointEigenSolver<CMatrix> es(hamiltonian_);
    const double dt = cfg_.tau / static_cast<double>(cfg_.multiplexity);
    for (int k = 1; k <= cfg_.multiplexity; ++k) {
      CVector phases(es.eigenvalues().size());
      for (Eigen::Index q = 0; q < phases.size(); ++q)
        phases(q) = std::exp(-kI * (dt * k) * es.eigenvalues()(q));
      propagators_.push_back(es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint());
    }
    observables_ = reservoir_observables(cfg_.n_m, cfg_.observables);
  }

  /// Reservoir driven by explicit sub-cycle propagators (k = 1..M) instead of the Ising Hamiltonian.
  static Reservoir with_propagators(ReservoirConfig cfg, std::vector<CMatrix> props) {
    cfg.validate();
    const Eigen::Index dim = cfg.dim_s() * cfg.dim_e();
    if (props.size() != static_cast<std::size_t>(cfg.multiplexity))
      throw DimensionError("with_propagators: expected " + std::to_string(cfg.multiplexity) + " propagators");
    for (const auto& u : props)
      if (u.rows() != dim || u.cols() != dim) throw DimensionError("with_propagators: propagator has wrong dimension");
    Reservoir r;
    r.cfg_ = std::move(cfg);
    r.propagators_ = std::move(props);
    r.observables_ = reservoir_observables(r.cfg_.n_m, r.cfg_.observables);
    return r;
  }

  const ReservoirConfig& config() const noexcept { return cfg_; }
  Eigen::Index dim_s() const noexcept { return cfg_.dim_s(); }
  Eigen::Index dim_e() const noexcept { return cfg_.dim_e(); }
  const CMatrix& hamiltonian() const noexcept { return hamiltonian_; }
  /// exp(-i tau H), the full propagator between two inputs.
  const CMatrix& unitary() const noexcept { return propagators_.back(); }
  /// exp(-i k (tau / M) H) for k = 1..M.
  const std::vector<CMatrix>& propagators() const noexcept { return propagators_; }
  const std::vector<Observable>& observables() const noexcept { return observables_; }

  /// Kraus operators of rho -> tr_E[U^k (rho (x) beta) U^k^dagger], k in 1..M.
  std::vector<CMatrix> kraus_operators(const DensityMatrix& beta, int k) const {
    std::vector<CMatrix> out;
    for (const auto& [weight, t] : isometries(beta, k)) {
      for (Eigen::Index e = 0; e < dim_e(); ++e) out.push_back(std::sqrt(weight) * kraus_block(t, e));
    }
    return out;
  }

  /// Reduced dynamics map after the full interaction time, applied to any operator.
  CMatrix apply_channel(const CMatrix& rho, const DensityMatrix& beta) const {
    check_dims(rho, beta);
    return apply_isometries(isometries(beta, cfg_.multiplexity), rho);
  }

  StepResult evolve_step(const ReservoirState& state, const DensityMatrix& input) const {
    check_dims(state.rho.matrix(), input);
    const auto k_obs = static_cast<Eigen::Index>(observables_.size());
    StepResult out;
    out.features.resize(cfg_.multiplexity * k_obs);
    const auto spectrum = input_spectrum(input);
    CMatrix reduced;
    for (int k = 1; k <= cfg_.multiplexity; ++k) {
      reduced = apply_isometries(isometries(spectrum, k), state.rho.matrix());
      for (Eigen::Index o = 0; o < k_obs; ++o)
        out.features((k - 1) * k_obs + o) = observables_[static_cast<std::size_t>(o)].expectation(reduced);
    }
    out.state = {DensityMatrix(hermitian_part(reduced), DensityMatrix::Trusted{}), state.step_index + 1};
    return out;
  }

  SequenceResult run_sequence(const std::vector<DensityMatrix>& inputs, const ReservoirState& initial) const {
    SequenceResult res;
    res.features.data.resize(static_cast<Eigen::Index>(inputs.size()), cfg_.feature_dim());
    ReservoirState state = initial;
    for (std::size_t n = 0; n < inputs.size(); ++n) {
      StepResult step = evolve_step(state, inputs[n]);
      const auto row = static_cast<Eigen::Index>(n);
      res.features.data.row(row).head(step.features.size()) = step.features.transpose();
      res.features.data(row, cfg_.feature_dim() - 1) = 1.0;
      state = std::move(step.state);
    }
    res.final_state = std::move(state);
    return res;
  }

  ReservoirState initial_state(InitialState mode, PrngStream* rng = nullptr) const {
    if (mode == InitialState::haar) {
      if (!rng) throw std::invalid_argument("initial_state: Haar initialization needs a PrngStream");
      return {haar_random_pure(dim_s(), *rng), 0};
    }
    return {DensityMatrix::basis_state(dim_s(), 0), 0};
  }

 private:
  Reservoir() = default;

  using Spectrum = std::vector<std::pair<double, CVector>>;
  using Isometries = std::vector<std::pair<double, CMatrix>>;

  void check_dims(const CMatrix& rho, const DensityMatrix& beta) const {
    if (rho.rows() != dim_s() || rho.cols() != dim_s())
      throw DimensionError("reservoir state has dimension " + std::to_string(rho.rows()) + ", expected " +
                           std::to_string(dim_s()));
    if (beta.dim() != dim_e())
      throw DimensionError("input state has dimension " + std::to_string(beta.dim()) + ", expected " +
                           std::to_string(dim_e()));
  }

  static Spectrum input_spectrum(const DensityMatrix& beta) {
    Eigen::SelfAdjointEigenSolver<CMatrix> es(hermitian_part(beta.matrix()));
    Spectrum s;
    for (Eigen::Index r = es.eigenvalues().size() - 1; r >= 0; --r) {
      const double w = es.eigenvalues()(r);
      if (w > 1e-15) s.emplace_back(w, es.eigenvectors().col(r));
    }
    return s;
  }

  Isometries isometries(const DensityMatrix& beta, int k) const { return isometries(input_spectrum(beta), k); }

  /// T_r = U^k (I_S (x) |psi_r>), a dim_joint x dim_s matrix per eigenvector of beta.
  Isometries isometries(const Spectrum& spectrum, int k) const {
    const CMatrix& u = propagators_[static_cast<std::size_t>(k - 1)];
    const Eigen::Index ds = dim_s();
    const Eigen::Index de = dim_e();
    Isometries out;
    out.reserve(spectrum.size());
    for (const auto& [w, psi] : spectrum) {
      CMatrix t = CMatrix::Zero(u.rows(), ds);
      for (Eigen::Index s = 0; s < ds; ++s)
        for (Eigen::Index e = 0; e < de; ++e) t.col(s) += psi(e) * u.col(s * de + e);
      out.emplace_back(w, std::move(t));
    }
    return out;
  }

  using StridedBlock = Eigen::Map<const CMatrix, 0, Eigen::Stride<Eigen::Dynamic, Eigen::Dynamic>>;

  /// Rows {s * dim_e + e} of T: the Kraus operator for environment outcome e.
  StridedBlock kraus_block(const CMatrix& t, Eigen::Index e) const {
    return StridedBlock(t.data() + e, dim_s(), dim_s(), Eigen::Stride<Eigen::Dynamic, Eigen::Dynamic>(t.rows(), dim_e()));
  }

  CMatrix apply_isometries(const Isometries& isos, const CMatrix& rho) const {
    CMatrix out = CMatrix::Zero(dim_s(), dim_s());
    for (const auto& [w, t] : isos) {
      const CMatrix tr = t * rho;
      for (Eigen::Index e = 0; e < dim_e(); ++e) {
        const StridedBlock left(tr.data() + e, dim_s(), dim_s(),
                                Eigen::Stride<Eigen::Dynamic, Eigen::Dynamic>(tr.rows(), dim_e()));
        out.noalias() += w * (left * kraus_block(t, e).adjoint());
      }
    }
    return out;
  }

  ReservoirConfig cfg_;
  CMatrix hamiltonian_;
  std::vector<CMatrix> propagators_;
  std::vector<Observable> observables_;
};

/// (1 / N_m) sum_j tr[s^gamma_j rho] over the reservoir qubits.
inline double average_magnetization(const DensityMatrix& rho, Axis gamma) {
  const Eigen::Index dim = rho.dim();
  int n = 0;
  while ((Eigen::Index{1} << n) < dim) ++n;
  if ((Eigen::Index{1} << n) != dim || n == 0) throw DimensionError("average_magnetization: dimension is not 2^n");
  double acc = 0.0;
  for (int j = 1; j <= n; ++j) acc += pauli_on_site(gamma, j, n).expectation(rho);
  return acc / n;
}

inline double average_magnetization(const ReservoirState& state, Axis gamma) {
  return average_magnetization(state.rho, gamma);
}

}  // namespace qrt
