#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "qrt/prng.hpp"
#include "qrt/qcore.hpp"
#include "qrt/reservoir.hpp"
#include "qrt/types.hpp"

namespace qrt {

/// Column stacking: vec(rho)_{j D + i} = rho_{ij}.
inline CVector vec(const CMatrix& rho) {
  require_square(rho, "vec");
  return Eigen::Map<const CVector>(rho.data(), rho.size());
}

inline CMatrix unvec(const CVector& v, Eigen::Index dim) {
  if (dim < 1 || v.size() != dim * dim)
    throw DimensionError("unvec: length " + std::to_string(v.size()) + " != " + std::to_string(dim) + "^2");
  return Eigen::Map<const CMatrix>(v.data(), dim, dim);
}

inline constexpr int kMaxSpectralQubits = 6;

/// Matrix of a linear map on D x D operators under column stacking.
struct Superoperator {
  Eigen::Index dim_s = 0;
  CMatrix data;
  std::string source;

  CMatrix apply(const CMatrix& rho) const { return unvec(data * vec(rho), dim_s); }

  /// max |(vec(I)^dagger L - vec(I)^dagger)_k|
  double trace_preservation_error() const {
    const CVector id = vec(CMatrix::Identity(dim_s, dim_s));
    return max_abs(id.adjoint() * data - id.adjoint());
  }
};

/// Column j is vec(map(unvec(e_j))).
inline Superoperator superoperator_from_map(Eigen::Index dim, const std::function<CMatrix(const CMatrix&)>& map,
                                            std::string source = {}) {
  Superoperator s{dim, CMatrix(dim * dim, dim * dim), std::move(source)};
  for (Eigen::Index j = 0; j < dim * dim; ++j) {
    CMatrix e = CMatrix::Zero(dim, dim);
    e(j % dim, j / dim) = 1.0;
    s.data.col(j) = vec(map(e));
  }
  return s;
}

/// L_beta of the reservoir as sum_k conj(K_k) (x) K_k.
inline Superoperator build_superoperator(const Reservoir& reservoir, const DensityMatrix& beta) {
  if (reservoir.config().n_m > kMaxSpectralQubits)
    throw DimensionError("build_superoperator: n_m = " + std::to_string(reservoir.config().n_m) +
                         " exceeds the dense superoperator limit of " + std::to_string(kMaxSpectralQubits) + " qubits");
  if (beta.dim() != reservoir.dim_e()) throw DimensionError("build_superoperator: input dimension mismatch");
  const Eigen::Index d = reservoir.dim_s();
  Superoperator s{d, CMatrix::Zero(d * d, d * d), {}};
  for (const CMatrix& k : reservoir.kraus_operators(beta, reservoir.config().multiplexity)) {
    const CMatrix kc = k.conjugate();
    for (Eigen::Index a = 0; a < d; ++a)
      for (Eigen::Index b = 0; b < d; ++b) {
        if (kc(a, b) == Complex{0.0}) continue;
        s.data.block(a * d, b * d, d, d) += kc(a, b) * k;
      }
  }
  const auto& c = reservoir.config();
  s.source = "n_m=" + std::to_string(c.n_m) + " n_e=" + std::to_string(c.n_e) + " tauB=" + std::to_string(c.tau_b());
  return s;
}

inline Superoperator build_superoperator(const ReservoirConfig& cfg, const DensityMatrix& beta) {
  if (cfg.n_m > kMaxSpectralQubits)
    throw DimensionError("build_superoperator: n_m = " + std::to_string(cfg.n_m) + " exceeds the dense limit of " +
                         std::to_string(kMaxSpectralQubits) + " qubits");
  return build_superoperator(Reservoir(cfg), beta);
}

inline std::vector<Complex> sorted_by_modulus(const CVector& ev) {
  std::vector<Complex> out(ev.data(), ev.data() + ev.size());
  std::stable_sort(out.begin(), out.end(), [](const Complex& a, const Complex& b) {
    if (std::abs(a) != std::abs(b)) return std::abs(a) > std::abs(b);
    if (a.real() != b.real()) return a.real() > b.real();
    return a.imag() > b.imag();
  });
  return out;
}

struct SpectralReport {
  std::vector<Complex> eigenvalues;  ///< descending modulus
  double inv_lambda2 = 1.0;
  double ratio_mean = 0.0;

  double lambda2_modulus() const { return eigenvalues.size() > 1 ? std::abs(eigenvalues[1]) : 0.0; }

  /// ln(1/eps) / ln(1/|lambda_2|); infinite when |lambda_2| >= 1 - 1e-12.
  double esp_timescale(double eps) const {
    const double l2 = lambda2_modulus();
    if (l2 >= 1.0 - 1e-12) return std::numeric_limits<double>::infinity();
    if (l2 == 0.0) return 0.0;
    return std::log(1.0 / eps) / std::log(1.0 / l2);
  }
};

inline SpectralReport spectral_report_from_eigenvalues(std::vector<Complex> ev) {
  SpectralReport r;
  r.eigenvalues = std::move(ev);
  const double l2 = r.lambda2_modulus();
  r.inv_lambda2 = l2 > 0.0 ? 1.0 / l2 : std::numeric_limits<double>::infinity();
  double acc = 0.0;
  int count = 0;
  for (std::size_t k = 0; k + 1 < r.eigenvalues.size(); ++k) {
    const double a = std::abs(r.eigenvalues[k]);
    if (a <= 1e-12) continue;
    acc += std::abs(r.eigenvalues[k + 1]) / a;
    ++count;
  }
  r.ratio_mean = count > 0 ? acc / count : 0.0;
  return r;
}

inline SpectralReport spectral_report(const Superoperator& superop) {
  Eigen::ComplexEigenSolver<CMatrix> es(superop.data, false);
  if (es.info() != Eigen::Success) throw std::runtime_error("spectral_report: eigensolver did not converge");
  return spectral_report_from_eigenvalues(sorted_by_modulus(es.eigenvalues()));
}

/// Mean over initial pairs of ||Phi_n(rho1) - Phi_n(rho2)||_1 / ||rho1 - rho2||_1 under a shared
/// Haar input stream; floored at 1e-10.
inline double convergence_ratio(const ReservoirConfig& cfg, int n_steps, int n_pairs, PrngStream& rng) {
  if (n_pairs < 1) throw DomainError("convergence_ratio: n_pairs must be >= 1");
  if (n_steps < 0) throw DomainError("convergence_ratio: n_steps must be >= 0");
  const Reservoir res(cfg);
  std::vector<std::pair<DensityMatrix, DensityMatrix>> pairs;
  while (static_cast<int>(pairs.size()) < n_pairs) {
    DensityMatrix a = haar_random_pure(res.dim_s(), rng);
    DensityMatrix b = haar_random_pure(res.dim_s(), rng);
    if (trace_distance(a, b) > 0.5) pairs.emplace_back(std::move(a), std::move(b));
  }
  if (n_steps == 0) return 1.0;
  std::vector<DensityMatrix> inputs;
  for (int n = 0; n < n_steps; ++n) inputs.push_back(haar_random_pure(res.dim_e(), rng));
  double acc = 0.0;
  for (const auto& [a, b] : pairs) {
    const double d0 = trace_distance(a, b);
    CMatrix ra = a.matrix();
    CMatrix rb = b.matrix();
    for (const auto& beta : inputs) {
      ra = res.apply_channel(ra, beta);
      rb = res.apply_channel(rb, beta);
    }
    acc += trace_distance(ra, rb) / d0;
  }
  return std::max(acc / n_pairs, 1e-10);
}

/// Two-state metastable picture built from the second eigenmode.
struct MetastableDecomposition {
  double lambda2 = 0.0;
  double v2_max = 0.0;
  double v2_min = 0.0;
  DensityMatrix rho_ss;
  CMatrix l2;
  CMatrix r2;
  DensityMatrix ems_1;
  DensityMatrix ems_2;
  CMatrix povm_p1;
  CMatrix povm_p2;
  Eigen::Matrix2d a_eff;

  /// Stationary distribution of a_eff, (-v_min, v_max) / dv.
  Eigen::Vector2d stationary() const {
    const double dv = v2_max - v2_min;
    return {-v2_min / dv, v2_max / dv};
  }
};

/// (1 - lambda2) / dv * [[-v_max, -v_min], [v_max, v_min]].
inline Eigen::Matrix2d effective_generator(double lambda2, double v_max, double v_min) {
  const double dv = v_max - v_min;
  if (!(dv > 0.0)) throw DomainError("effective_generator: v_max must exceed v_min");
  Eigen::Matrix2d a;
  a << -v_max, -v_min, v_max, v_min;
  return (1.0 - lambda2) / dv * a;
}

inline MetastableDecomposition metastable_decomposition(const Superoperator& superop) {
  const Eigen::Index d = superop.dim_s;
  const Eigen::Index n = d * d;
  if (n < 3) throw DomainError("metastable_decomposition: need at least three eigenmodes");
  Eigen::ComplexEigenSolver<CMatrix> es(superop.data, true);
  if (es.info() != Eigen::Success) throw std::runtime_error("metastable_decomposition: eigensolver did not converge");
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  for (Eigen::Index k = 0; k < n; ++k) order[static_cast<std::size_t>(k)] = k;
  const CVector& ev = es.eigenvalues();
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    if (std::abs(ev(a)) != std::abs(ev(b))) return std::abs(ev(a)) > std::abs(ev(b));
    return ev(a).real() > ev(b).real();
  });
  const Complex lam2 = ev(order[1]);
  const double mod2 = std::abs(lam2);
  const double mod3 = std::abs(ev(order[2]));
  if (std::abs(lam2.imag()) > 1e-8 * mod2) throw DomainError("metastable_decomposition: lambda_2 is not real");
  if (!(mod2 < 1.0)) throw DomainError("metastable_decomposition: |lambda_2| must be < 1");
  if (!(mod2 - mod3 > 1e-6)) throw DomainError("metastable_decomposition: lambda_2 is degenerate with lambda_3");

  const CMatrix& right = es.eigenvectors();
  const CMatrix left = right.partialPivLu().inverse();
  MetastableDecomposition m;
  m.lambda2 = lam2.real();

  CMatrix r1 = unvec(right.col(order[0]), d);
  r1 /= r1.trace();
  m.rho_ss = DensityMatrix(hermitian_part(r1), DensityMatrix::Trusted{});

  // tr(L rho) = sum_ij L_ji rho_ij, so the left row is vec(L^T).
  CMatrix l2 = unvec(left.row(order[1]).transpose(), d).transpose();
  CMatrix r2 = unvec(right.col(order[1]), d);
  Eigen::Index bi = 0, bj = 0;
  l2.cwiseAbs().maxCoeff(&bi, &bj);
  const double phi = std::arg(l2(bi, bj) / std::conj(l2(bj, bi))) / 2.0;
  l2 *= std::exp(-kI * phi);
  r2 *= std::exp(kI * phi);
  m.l2 = hermitian_part(l2);
  m.r2 = hermitian_part(r2);

  Eigen::SelfAdjointEigenSolver<CMatrix> lev(m.l2, Eigen::EigenvaluesOnly);
  m.v2_min = lev.eigenvalues()(0);
  m.v2_max = lev.eigenvalues()(d - 1);
  const double dv = m.v2_max - m.v2_min;
  const CMatrix id = CMatrix::Identity(d, d);
  m.ems_1 = DensityMatrix(m.rho_ss.matrix() + m.v2_max * m.r2, DensityMatrix::Trusted{});
  m.ems_2 = DensityMatrix(m.rho_ss.matrix() + m.v2_min * m.r2, DensityMatrix::Trusted{});
  m.povm_p1 = (m.l2 - m.v2_min * id) / dv;
  m.povm_p2 = (m.v2_max * id - m.l2) / dv;
  m.a_eff = effective_generator(m.lambda2, m.v2_max, m.v2_min);
  return m;
}

}  // namespace qrt
