#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "qrt/qcore.hpp"
#include "qrt/readout.hpp"
#include "qrt/reservoir.hpp"
#include "qrt/types.hpp"

namespace qrt {

/// sqrt((1/T) sum_n F(target_n, prediction_n)^2).
inline double rmsf(const std::vector<DensityMatrix>& targets, const std::vector<DensityMatrix>& predictions) {
  if (targets.empty()) throw DomainError("rmsf: empty sequence");
  if (targets.size() != predictions.size()) throw DimensionError("rmsf: sequence lengths differ");
  double acc = 0.0;
  for (std::size_t n = 0; n < targets.size(); ++n) {
    const double f = fidelity(targets[n], predictions[n]);
    acc += f * f;
  }
  return std::sqrt(acc / static_cast<double>(targets.size()));
}

inline std::vector<double> fidelities(const std::vector<DensityMatrix>& targets,
                                      const std::vector<DensityMatrix>& predictions) {
  if (targets.size() != predictions.size()) throw DimensionError("fidelities: sequence lengths differ");
  std::vector<double> out;
  out.reserve(targets.size());
  for (std::size_t n = 0; n < targets.size(); ++n) out.push_back(fidelity(targets[n], predictions[n]));
  return out;
}

/// arccos F(rho, sigma), in [0, pi/2].
inline double state_angle(const DensityMatrix& rho, const DensityMatrix& sigma) {
  return std::acos(std::clamp(fidelity(rho, sigma), 0.0, 1.0));
}

namespace detail {

/// Heap-free storage for the small operators that dominate the angle matrices.
using SmallCMatrix = Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic, 0, 8, 8>;

/// F(a, b) = || B_a^dagger B_b ||_1 for sigma = B B^dagger.
inline double fidelity_between_roots(const SmallCMatrix& ba, const SmallCMatrix& bb) {
  if (ba.cols() == 0 || bb.cols() == 0) return 0.0;
  const SmallCMatrix c = ba.adjoint() * bb;
  const SmallCMatrix g = c.rows() <= c.cols() ? SmallCMatrix(c * c.adjoint()) : SmallCMatrix(c.adjoint() * c);
  double f = 0.0;
  if (g.rows() == 1) {
    f = std::sqrt(std::max(g(0, 0).real(), 0.0));
  } else if (g.rows() == 2) {
    // (sqrt l1 + sqrt l2)^2 = tr G + 2 sqrt(det G)
    const double tr = g(0, 0).real() + g(1, 1).real();
    const double det = std::max(g(0, 0).real() * g(1, 1).real() - std::norm(g(0, 1)), 0.0);
    f = std::sqrt(std::max(tr + 2.0 * std::sqrt(det), 0.0));
  } else {
    Eigen::SelfAdjointEigenSolver<SmallCMatrix> es(g, Eigen::EigenvaluesOnly);
    for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k) f += std::sqrt(std::max(es.eigenvalues()(k), 0.0));
  }
  return std::clamp(f, 0.0, 1.0);
}

}  // namespace detail

/// Pairwise angles A(seq_j, seq_k).
inline RMatrix angle_matrix(const std::vector<DensityMatrix>& seq) {
  const auto n = static_cast<Eigen::Index>(seq.size());
  RMatrix a = RMatrix::Zero(n, n);
  if (n == 0) return a;
  if (seq.front().dim() <= 8) {
    std::vector<detail::SmallCMatrix> roots;
    roots.reserve(seq.size());
    for (const auto& s : seq) roots.emplace_back(detail::support_root(s.matrix()));
    for (Eigen::Index j = 0; j < n; ++j)
      for (Eigen::Index k = 0; k < j; ++k)
        a(j, k) = a(k, j) = std::acos(detail::fidelity_between_roots(roots[static_cast<std::size_t>(j)],
                                                                     roots[static_cast<std::size_t>(k)]));
    return a;
  }
  std::vector<CMatrix> roots;
  roots.reserve(seq.size());
  for (const auto& s : seq) roots.push_back(detail::support_root(s.matrix()));
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index k = 0; k < j; ++k)
      a(j, k) = a(k, j) = std::acos(
          detail::fidelity_of_roots(roots[static_cast<std::size_t>(j)], roots[static_cast<std::size_t>(k)]));
  return a;
}

/// r_jk = R_jk - mean_j. - mean_.k + mean_..
inline RMatrix double_center(const RMatrix& r) {
  const RVector row_mean = r.rowwise().mean();
  const RVector col_mean = r.colwise().mean().transpose();
  const double grand = r.mean();
  RMatrix c = r;
  c.colwise() -= row_mean;
  c.rowwise() -= col_mean.transpose();
  c.array() += grand;
  return c;
}

/// Squared distance correlation from two (already double-centered) distance matrices.
inline double distance_correlation_sq_centered(const RMatrix& ca, const RMatrix& cb) {
  if (ca.rows() != cb.rows() || ca.cols() != cb.cols()) throw DimensionError("distance_correlation_sq: size mismatch");
  const double n2 = static_cast<double>(ca.size());
  const double vab = (ca.array() * cb.array()).sum() / n2;
  const double vaa = ca.squaredNorm() / n2;
  const double vbb = cb.squaredNorm() / n2;
  if (vaa <= 1e-14 || vbb <= 1e-14) return 0.0;
  return std::clamp(vab / std::sqrt(vaa * vbb), 0.0, 1.0);
}

inline double distance_correlation_sq(const std::vector<DensityMatrix>& seq_a, const std::vector<DensityMatrix>& seq_b) {
  if (seq_a.size() != seq_b.size()) throw DimensionError("distance_correlation_sq: sequence lengths differ");
  if (seq_a.size() < 2) throw DomainError("distance_correlation_sq: need at least two states");
  return distance_correlation_sq_centered(double_center(angle_matrix(seq_a)), double_center(angle_matrix(seq_b)));
}

/// Washout / training / evaluation step counts.
struct Split {
  std::size_t washout = 1000;
  std::size_t train = 3000;
  std::size_t eval = 1000;

  std::size_t total() const { return washout + train + eval; }
};

struct MemoryProfile {
  std::vector<double> r2;  ///< R^2(d) for d = 0..d_max
  double qmc = 0.0;
  int d_max = 0;
};

/// R^2(d) between held-out reconstructions of beta_{n-d} and the true beta_{n-d}.
///
/// Every delay trains its own readout, all sharing one factorization of the
/// training features.
inline MemoryProfile memory_profile(const FeatureMatrix& features, const std::vector<DensityMatrix>& inputs,
                                    const Split& split, int d_max, double ridge = kDefaultRidge) {
  if (d_max < 0) throw DomainError("memory_profile: d_max must be >= 0");
  if (static_cast<std::size_t>(d_max) >= split.train || static_cast<std::size_t>(d_max) >= split.eval)
    throw DomainError("memory_profile: d_max " + std::to_string(d_max) + " exceeds the usable sequence length");
  if (split.washout < static_cast<std::size_t>(d_max))
    throw DomainError("memory_profile: washout must be >= d_max");
  if (inputs.size() < split.total() || static_cast<std::size_t>(features.rows()) != inputs.size())
    throw DimensionError("memory_profile: features and inputs must cover washout + train + eval");
  const Eigen::Index d = inputs.front().dim();
  const Eigen::Index width = 2 * d * d;
  const auto w0 = static_cast<Eigen::Index>(split.washout);
  const auto ntr = static_cast<Eigen::Index>(split.train);
  const auto nev = static_cast<Eigen::Index>(split.eval);
  const Eigen::Index e0 = w0 + ntr;

  RMatrix y(ntr, width * (d_max + 1));
  for (int delay = 0; delay <= d_max; ++delay)
    for (Eigen::Index n = 0; n < ntr; ++n)
      y.block(n, delay * width, 1, width) =
          vectorize_density(inputs[static_cast<std::size_t>(w0 + n - delay)]).transpose();
  const RMatrix weights = RidgeSolver(features.data.middleRows(w0, ntr), ridge).solve(y);
  const RMatrix raw = features.data.middleRows(e0, nev) * weights;

  // Target angles over the extended window [e0 - d_max, e0 + nev); delay d uses an offset block.
  std::vector<DensityMatrix> window(inputs.begin() + (e0 - d_max), inputs.begin() + (e0 + nev));
  const RMatrix target_angles = angle_matrix(window);

  MemoryProfile prof;
  prof.d_max = d_max;
  for (int delay = 0; delay <= d_max; ++delay) {
    std::vector<DensityMatrix> pred;
    pred.reserve(static_cast<std::size_t>(nev));
    for (Eigen::Index n = 0; n < nev; ++n)
      pred.push_back(devectorize_density(raw.block(n, delay * width, 1, width).transpose(), d));
    const Eigen::Index off = d_max - delay;
    const double r2 = distance_correlation_sq_centered(double_center(angle_matrix(pred)),
                                                       double_center(target_angles.block(off, off, nev, nev)));
    prof.r2.push_back(r2);
    prof.qmc += r2;
  }
  return prof;
}

/// Root-mean-square error between per-step negativities.
inline double negativity_rmse(const std::vector<DensityMatrix>& targets, const std::vector<DensityMatrix>& predictions,
                              Eigen::Index dim_a) {
  if (targets.size() != predictions.size()) throw DimensionError("negativity_rmse: sequence lengths differ");
  if (targets.empty()) return 0.0;
  double acc = 0.0;
  for (std::size_t n = 0; n < targets.size(); ++n) {
    const double diff = negativity(targets[n], dim_a) - negativity(predictions[n], dim_a);
    acc += diff * diff;
  }
  return std::sqrt(acc / static_cast<double>(targets.size()));
}

}  // namespace qrt
