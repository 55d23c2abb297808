#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "qrt/prng.hpp"
#include "qrt/qcore.hpp"
#include "qrt/reservoir.hpp"
#include "qrt/types.hpp"

namespace qrt {

/// Coefficients of the r-th order nonlinear depolarizing-probability sequence.
struct NarmaParams {
  int order = 10;
  double kappa = 0.3;
  double eta = 0.04;
  double gamma = 1.5;
  double delta = 0.1;
  double input_scale = 0.2;
};

/// Stream of input states together with the scalar drive that sets the channel strengths.
struct InputStream {
  std::vector<double> u;             ///< uniform drive in [0, 1]
  std::vector<DensityMatrix> beta;   ///< input states fed to the reservoir
  std::vector<double> p;             ///< depolarizing probabilities
  std::vector<int> bits;             ///< only for bit streams (Bell creator)
  int hold_steps = 1;

  std::size_t size() const noexcept { return beta.size(); }
};

/// p_n = kappa p_{n-1} + eta p_{n-1} sum_{j<r} p_{n-j-1} + gamma v_{n-r+1} v_n + delta with
/// v = input_scale * u and p_0 .. p_{r-1} = 0.
inline std::vector<double> narma_p(const std::vector<double>& u, const NarmaParams& params = {}) {
  const auto r = static_cast<std::size_t>(params.order);
  if (params.order < 1) throw DomainError("narma_p: order must be >= 1");
  std::vector<double> p(u.size(), 0.0);
  double window = 0.0;  // sum of p_{n-1} .. p_{n-r}
  for (std::size_t n = r; n < u.size(); ++n) {
    window += p[n - 1];
    if (n >= r + 1) window -= p[n - r - 1];
    const double v_now = params.input_scale * u[n];
    const double v_old = params.input_scale * u[n - r + 1];
    p[n] = params.kappa * p[n - 1] + params.eta * p[n - 1] * window + params.gamma * v_old * v_now + params.delta;
    if (!(p[n] >= 0.0 && p[n] <= 1.0)) {
      throw DomainError("narma_p: p[" + std::to_string(n) + "] = " + std::to_string(p[n]) +
                        " left [0, 1]; parameters are outside the stable range");
    }
  }
  return p;
}

/// beta = |psi><psi| with psi = sqrt(u)|0> + sqrt(1-u)|1>.
inline DensityMatrix qubit_from_drive(double u) {
  CVector psi(2);
  psi << std::sqrt(u), std::sqrt(1.0 - u);
  return {psi * psi.adjoint(), DensityMatrix::Trusted{}};
}

/// How inputs wider than one qubit are drawn.
enum class InputEncoding {
  haar,     ///< Haar-random pure state
  product,  ///< qubit 1 from u_n, every further qubit from its own fresh uniform draw
};

inline std::string to_string(InputEncoding e) { return e == InputEncoding::haar ? "haar" : "product"; }

inline InputEncoding parse_input_encoding(const std::string& s) {
  if (s == "haar") return InputEncoding::haar;
  if (s == "product") return InputEncoding::product;
  throw ValidationError("stream.input_encoding", "expected \"haar\" or \"product\", got \"" + s + "\"");
}

/// Draws u_n ~ U[0,1] and the matching inputs, each held for `hold_steps` steps.
///
/// Single-qubit inputs are the real superposition fixed by u_n; wider inputs
/// follow `encoding` and use the same stream right after u_n.
inline InputStream generate_input_stream(std::size_t length, int n_e, int hold_steps, PrngStream& rng,
                                         const NarmaParams& narma = {},
                                         InputEncoding encoding = InputEncoding::haar) {
  if (length < 1) throw DomainError("generate_input_stream: length must be >= 1");
  if (n_e < 1) throw DomainError("generate_input_stream: n_e must be >= 1");
  if (hold_steps < 1) throw DomainError("generate_input_stream: hold_steps must be >= 1");
  InputStream s;
  s.hold_steps = hold_steps;
  s.u.reserve(length);
  s.beta.reserve(length);
  const Eigen::Index dim = Eigen::Index{1} << n_e;
  while (s.u.size() < length) {
    const double u = rng.uniform();
    DensityMatrix b = qubit_from_drive(u);
    if (n_e > 1 && encoding == InputEncoding::haar) {
      b = haar_random_pure(dim, rng);
    } else {
      for (int q = 1; q < n_e; ++q) b = kron(b, qubit_from_drive(rng.uniform()));
    }
    for (int h = 0; h < hold_steps && s.u.size() < length; ++h) {
      s.u.push_back(u);
      s.beta.push_back(b);
    }
  }
  s.p = narma_p(s.u, narma);
  return s;
}

/// Fair coin flips b_n with inputs |b_n><b_n|.
inline InputStream generate_bit_stream(std::size_t length, PrngStream& rng, const NarmaParams& narma = {}) {
  if (length < 1) throw DomainError("generate_bit_stream: length must be >= 1");
  InputStream s;
  for (std::size_t n = 0; n < length; ++n) {
    const int b = rng.coin() ? 1 : 0;
    s.bits.push_back(b);
    s.u.push_back(static_cast<double>(b));
    s.beta.push_back(DensityMatrix::basis_state(2, b));
  }
  s.p = narma_p(s.u, narma);
  return s;
}

/// Omega(beta) = p I / D + (1 - p) beta.
inline DensityMatrix depolarize(const DensityMatrix& beta, double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError("depolarize: p = " + std::to_string(p) + " outside [0, 1]");
  const Eigen::Index d = beta.dim();
  return {p * CMatrix::Identity(d, d) / static_cast<double>(d) + (1.0 - p) * beta.matrix(), DensityMatrix::Trusted{}};
}

enum class MapKind { delayed, moving_average, weighted_average, convex_mixture, quantum_switch, entangler, bell_creator };

inline std::string to_string(MapKind k) {
  switch (k) {
    case MapKind::delayed: return "delayed";
    case MapKind::moving_average: return "moving_average";
    case MapKind::weighted_average: return "weighted_average";
    case MapKind::convex_mixture: return "convex_mixture";
    case MapKind::quantum_switch: return "quantum_switch";
    case MapKind::entangler: return "entangler";
    case MapKind::bell_creator: return "bell_creator";
  }
  return "?";
}

inline MapKind parse_map_kind(const std::string& s) {
  for (MapKind k : {MapKind::delayed, MapKind::moving_average, MapKind::weighted_average, MapKind::convex_mixture,
                    MapKind::quantum_switch, MapKind::entangler, MapKind::bell_creator}) {
    if (to_string(k) == s) return k;
  }
  throw ValidationError("task.kind", "unknown task kind \"" + s + "\"");
}

/// Parameters of the fixed two-qubit entangling unitary exp(-i t H),
/// H = h12 s^x_1 s^x_2 + (2 + g1) s^z_1 + (2 + g2) s^z_2.
struct EntanglerParams {
  double h12 = 0.0;
  double g1 = 0.0;
  double g2 = 0.0;
  double t = 10.0;

  static EntanglerParams random(PrngStream& rng, double t = 10.0) {
    EntanglerParams e;
    e.h12 = rng.uniform(-0.5, 0.5);
    e.g1 = rng.uniform(-0.5, 0.5);
    e.g2 = rng.uniform(-0.5, 0.5);
    e.t = t;
    return e;
  }

  CMatrix hamiltonian() const {
    const CMatrix x1 = pauli_on_site(Axis::x, 1, 2).data;
    const CMatrix x2 = pauli_on_site(Axis::x, 2, 2).data;
    return h12 * x1 * x2 + (2.0 + g1) * pauli_on_site(Axis::z, 1, 2).data + (2.0 + g2) * pauli_on_site(Axis::z, 2, 2).data;
  }
  CMatrix unitary() const { return build_unitary(hamiltonian(), t); }
};

/// Declarative target map.
///
/// Delay conventions: delayed uses delays[0] = d; the averages use delays[0] = d
/// (window d+1); the switch uses delays = {d_c, d_t}; the entangler and the Bell
/// creator use delays = {d_1, d_2}. convex_mixture weights are eta_0 .. eta_d.
struct TemporalMapSpec {
  MapKind kind = MapKind::delayed;
  std::vector<int> delays{1};
  std::vector<double> weights;
  EntanglerParams entangler;

  int max_delay() const {
    if (kind == MapKind::convex_mixture) return static_cast<int>(weights.size()) - 1;
    return delays.empty() ? 0 : *std::max_element(delays.begin(), delays.end());
  }

  /// Output Hilbert dimension for input dimension d_in.
  Eigen::Index output_dim(Eigen::Index d_in) const {
    switch (kind) {
      case MapKind::quantum_switch: return 2 * d_in;
      case MapKind::entangler:
      case MapKind::bell_creator: return 4;
      default: return d_in;
    }
  }

  void validate() const {
    const std::size_t need = (kind == MapKind::quantum_switch || kind == MapKind::entangler ||
                               kind == MapKind::bell_creator)
                                  ? 2
                                  : (kind == MapKind::convex_mixture ? 0 : 1);
    if (delays.size() < need) throw ValidationError("task.delays", "expected " + std::to_string(need) + " delays");
    for (int d : delays)
      if (d < 0) throw ValidationError("task.delays", "delays must be >= 0");
    if (kind == MapKind::convex_mixture) {
      if (weights.empty()) throw ValidationError("task.weights", "convex_mixture needs weights");
      for (double w : weights)
        if (!(w >= 0.0)) throw ValidationError("task.weights", "weights must be non-negative");
      if (std::accumulate(weights.begin(), weights.end(), 0.0) <= 0.0)
        throw ValidationError("task.weights", "weights must not all be zero");
    }
  }
};

namespace detail {

inline void require_history(std::size_t n, int max_delay, std::size_t size, const char* what) {
  if (n >= size) throw DomainError(std::string(what) + ": time index beyond stream end");
  if (static_cast<long long>(n) < max_delay)
    throw DomainError(std::string(what) + ": time index " + std::to_string(n) + " lies in the undefined prefix (max delay " +
                      std::to_string(max_delay) + ")");
}

inline DensityMatrix channel_output(const InputStream& s, std::size_t n) { return depolarize(s.beta[n], s.p[n]); }

inline DensityMatrix weighted_sum(const InputStream& s, std::size_t n, const std::vector<double>& eta) {
  const Eigen::Index d = s.beta[n].dim();
  CMatrix acc = CMatrix::Zero(d, d);
  double z = 0.0;
  for (std::size_t i = 0; i < eta.size(); ++i) {
    if (eta[i] == 0.0) continue;
    acc += eta[i] * channel_output(s, n - i).matrix();
    z += eta[i];
  }
  return {acc / z, DensityMatrix::Trusted{}};
}

}  // namespace detail

/// Switch of two depolarizing channels N1, N2 (strengths q1, q2) on rho with
/// control sqrt(u_c)|0> + sqrt(1-u_c)|1>; output ordered target (x) control.
inline DensityMatrix quantum_switch_output(const DensityMatrix& rho, double u_c, double q1, double q2) {
  for (double v : {u_c, q1, q2})
    if (!(v >= 0.0 && v <= 1.0)) throw DomainError("quantum_switch_output: parameters must lie in [0, 1]");
  const Eigen::Index d = rho.dim();
  const CMatrix id = CMatrix::Identity(d, d);
  const CMatrix mixed = id / static_cast<double>(d);
  const double dd = static_cast<double>(d);
  // Depolarizing channels commute, so N1 N2 = N2 N1 with strength q1 + q2 - q1 q2.
  const double q12 = q1 + q2 - q1 * q2;
  const CMatrix both = q12 * mixed + (1.0 - q12) * rho.matrix();
  const double coh = std::sqrt(u_c * (1.0 - u_c));
  const CMatrix a01 = coh * ((q1 * q2 / (dd * dd) + (1.0 - q1) * (1.0 - q2)) * rho.matrix() +
                             (q1 + q2 - 2.0 * q1 * q2) * mixed);
  CMatrix out = CMatrix::Zero(2 * d, 2 * d);
  // |i><j| of the control sits at offsets (i, j) inside each 2x2 block of target (x) control.
  for (Eigen::Index a = 0; a < d; ++a) {
    for (Eigen::Index b = 0; b < d; ++b) {
      out(2 * a, 2 * b) = u_c * both(a, b);
      out(2 * a, 2 * b + 1) = a01(a, b);
      out(2 * a + 1, 2 * b) = a01(a, b);
      out(2 * a + 1, 2 * b + 1) = (1.0 - u_c) * both(a, b);
    }
  }
  return {std::move(out), DensityMatrix::Trusted{}};
}

/// S(Omega_{n-d_c}, Omega_{n-d_t}) applied to beta_{n-d_t} (x) beta_{n-d_c}.
inline DensityMatrix temporal_switch_target(const InputStream& s, int d_c, int d_t, std::size_t n) {
  detail::require_history(n, std::max(d_c, d_t), s.size(), "temporal_switch_target");
  const std::size_t nc = n - static_cast<std::size_t>(d_c);
  const std::size_t nt = n - static_cast<std::size_t>(d_t);
  return quantum_switch_output(s.beta[nt], s.u[nc], s.p[nc], s.p[nt]);
}

/// U (Omega_{n-d_1}(beta_{n-d_1}) (x) Omega_{n-d_2}(beta_{n-d_2})) U^dagger.
inline DensityMatrix entangler_target(const InputStream& s, int d1, int d2, const CMatrix& unitary, std::size_t n) {
  detail::require_history(n, std::max(d1, d2), s.size(), "entangler_target");
  if (s.beta[n].dim() != 2) throw DimensionError("entangler_target: inputs must be single qubits");
  const CMatrix prod = kron(detail::channel_output(s, n - static_cast<std::size_t>(d1)).matrix(),
                            detail::channel_output(s, n - static_cast<std::size_t>(d2)).matrix());
  return {hermitian_part(unitary * prod * unitary.adjoint()), DensityMatrix::Trusted{}};
}

inline DensityMatrix entangler_target(const InputStream& s, int d1, int d2, const EntanglerParams& params,
                                      std::size_t n) {
  return entangler_target(s, d1, d2, params.unitary(), n);
}

/// Bell state (|0, b2> + (-1)^b1 |1, not b2>) / sqrt(2).
inline DensityMatrix bell_state(int b1, int b2) {
  CVector psi = CVector::Zero(4);
  psi(b2) = 1.0 / std::sqrt(2.0);
  psi(2 + (1 - b2)) = (b1 ? -1.0 : 1.0) / std::sqrt(2.0);
  return {psi * psi.adjoint(), DensityMatrix::Trusted{}};
}

inline DensityMatrix bell_target(const InputStream& s, int d1, int d2, std::size_t n) {
  if (s.bits.size() != s.size()) throw DomainError("bell_target: stream carries no bit sequence");
  detail::require_history(n, std::max(d1, d2), s.size(), "bell_target");
  return bell_state(s.bits[n - static_cast<std::size_t>(d1)], s.bits[n - static_cast<std::size_t>(d2)]);
}

/// F(beta_n) for the given target map; n is a 0-based index into the stream.
inline DensityMatrix apply_temporal_map(const TemporalMapSpec& spec, const InputStream& s, std::size_t n) {
  spec.validate();
  detail::require_history(n, spec.max_delay(), s.size(), "apply_temporal_map");
  switch (spec.kind) {
    case MapKind::delayed:
      return detail::channel_output(s, n - static_cast<std::size_t>(spec.delays[0]));
    case MapKind::moving_average:
      return detail::weighted_sum(s, n, std::vector<double>(static_cast<std::size_t>(spec.delays[0]) + 1, 1.0));
    case MapKind::weighted_average: {
      const int d = spec.delays[0];
      std::vector<double> eta;
      for (int i = 0; i <= d; ++i) eta.push_back(static_cast<double>(d + 1 - i));
      return detail::weighted_sum(s, n, eta);
    }
    case MapKind::convex_mixture:
      return detail::weighted_sum(s, n, spec.weights);
    case MapKind::quantum_switch:
      return temporal_switch_target(s, spec.delays[0], spec.delays[1], n);
    case MapKind::entangler:
      return entangler_target(s, spec.delays[0], spec.delays[1], spec.entangler, n);
    case MapKind::bell_creator:
      return bell_target(s, spec.delays[0], spec.delays[1], n);
  }
  throw DomainError("apply_temporal_map: unknown kind");
}

}  // namespace qrt
