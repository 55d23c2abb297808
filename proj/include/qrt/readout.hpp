#pragma once

#include <string>
#include <vector>

#include "qrt/qcore.hpp"
#include "qrt/reservoir.hpp"
#include "qrt/types.hpp"

namespace qrt {

/// Real parts row-major, then imaginary parts row-major (length 2 D^2).
inline RVector vectorize_density(const CMatrix& rho) {
  require_square(rho, "vectorize_density");
  const Eigen::Index d = rho.rows();
  RVector v(2 * d * d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j) {
      v(i * d + j) = rho(i, j).real();
      v(d * d + i * d + j) = rho(i, j).imag();
    }
  return v;
}

inline RVector vectorize_density(const DensityMatrix& rho) { return vectorize_density(rho.matrix()); }

/// Inverse layout of vectorize_density, without any projection.
inline CMatrix unstack_density(const RVector& v, Eigen::Index d_out) {
  if (d_out < 1 || v.size() != 2 * d_out * d_out)
    throw DimensionError("devectorize_density: vector length " + std::to_string(v.size()) + " != 2 * " +
                         std::to_string(d_out) + "^2");
  CMatrix a(d_out, d_out);
  for (Eigen::Index i = 0; i < d_out; ++i)
    for (Eigen::Index j = 0; j < d_out; ++j)
      a(i, j) = Complex{v(i * d_out + j), v(d_out * d_out + i * d_out + j)};
  return a;
}

/// Reassembles, Hermitizes and projects onto the spectrahedron.
inline DensityMatrix devectorize_density(const RVector& v, Eigen::Index d_out) {
  return project_spectrahedron(unstack_density(v, d_out));
}

inline constexpr double kDefaultRidge = 1e-10;

/// Factorization of X^T X + eta I shared by any number of target blocks.
class RidgeSolver {
 public:
  RidgeSolver(const RMatrix& x, double ridge) : x_(x), ridge_(ridge) {
    if (!(ridge >= 0.0)) throw DomainError("fit_ridge: ridge must be >= 0");
    if (x.rows() < 1) throw DimensionError("fit_ridge: empty design matrix");
    RMatrix gram = RMatrix::Zero(x.cols(), x.cols());
    gram.selfadjointView<Eigen::Lower>().rankUpdate(x.transpose());
    gram = gram.selfadjointView<Eigen::Lower>();
    gram.diagonal().array() += ridge;
    ldlt_.compute(gram);
    const RVector dvec = ldlt_.vectorD().cwiseAbs();
    const double dmax = dvec.maxCoeff();
    if (ldlt_.info() != Eigen::Success || dmax == 0.0 || dvec.minCoeff() <= 1e-14 * dmax) {
      if (ridge == 0.0)
        throw DomainError("fit_ridge: normal matrix X^T X is singular; use a ridge coefficient > 0");
      if (ldlt_.info() != Eigen::Success) throw DomainError("fit_ridge: factorization failed");
    }
  }

  /// W = (X^T X + eta I)^{-1} X^T Y.
  RMatrix solve(const RMatrix& y) const {
    if (y.rows() != x_.rows())
      throw DimensionError("fit_ridge: feature rows (" + std::to_string(x_.rows()) + ") != target rows (" +
                           std::to_string(y.rows()) + ")");
    return ldlt_.solve(x_.transpose() * y);
  }

  double ridge() const noexcept { return ridge_; }

 private:
  RMatrix x_;
  double ridge_;
  Eigen::LDLT<RMatrix> ldlt_;
};

/// Linear map from feature rows to vectorized output density matrices.
struct ReadoutModel {
  RMatrix weights;  ///< feature_dim x 2 d_out^2
  Eigen::Index d_out = 0;
  double ridge = kDefaultRidge;

  Eigen::Index feature_dim() const noexcept { return weights.rows(); }
};

inline ReadoutModel fit_ridge(const RMatrix& features, const RMatrix& targets, Eigen::Index d_out,
                              double ridge = kDefaultRidge) {
  if (targets.cols() != 2 * d_out * d_out)
    throw DimensionError("fit_ridge: target width " + std::to_string(targets.cols()) + " != 2 * " +
                         std::to_string(d_out) + "^2");
  return {RidgeSolver(features, ridge).solve(targets), d_out, ridge};
}

inline ReadoutModel fit_ridge(const FeatureMatrix& features, const std::vector<DensityMatrix>& targets,
                              double ridge = kDefaultRidge) {
  if (targets.empty()) throw DimensionError("fit_ridge: no targets");
  const Eigen::Index d = targets.front().dim();
  RMatrix y(static_cast<Eigen::Index>(targets.size()), 2 * d * d);
  for (std::size_t n = 0; n < targets.size(); ++n) y.row(static_cast<Eigen::Index>(n)) = vectorize_density(targets[n]);
  return fit_ridge(features.data, y, d, ridge);
}

/// Raw regression outputs w^T x_n, one row per step.
inline RMatrix predict_vectors(const ReadoutModel& model, const RMatrix& features) {
  if (features.cols() != model.feature_dim())
    throw DimensionError("predict_states: feature width " + std::to_string(features.cols()) + " != model width " +
                         std::to_string(model.feature_dim()));
  return features * model.weights;
}

inline std::vector<DensityMatrix> predict_states(const ReadoutModel& model, const FeatureMatrix& features) {
  const RMatrix raw = predict_vectors(model, features.data);
  std::vector<DensityMatrix> out;
  out.reserve(static_cast<std::size_t>(raw.rows()));
  for (Eigen::Index n = 0; n < raw.rows(); ++n) out.push_back(devectorize_density(raw.row(n).transpose(), model.d_out));
  return out;
}

/// Memoryless features: vectorize_density(beta_n) followed by a bias of 1.
inline FeatureMatrix baseline_features(const std::vector<DensityMatrix>& inputs) {
  if (inputs.empty()) return {RMatrix(0, 0)};
  const Eigen::Index d = inputs.front().dim();
  const Eigen::Index width = 2 * d * d + 1;
  FeatureMatrix f{RMatrix(static_cast<Eigen::Index>(inputs.size()), width)};
  for (std::size_t n = 0; n < inputs.size(); ++n) {
    if (inputs[n].dim() != d) throw DimensionError("baseline_features: inputs differ in dimension");
    const auto row = static_cast<Eigen::Index>(n);
    f.data.row(row).head(width - 1) = vectorize_density(inputs[n]).transpose();
    f.data(row, width - 1) = 1.0;
  }
  return f;
}

}  // namespace qrt
