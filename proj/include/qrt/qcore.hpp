#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "qrt/prng.hpp"
#include "qrt/types.hpp"

namespace qrt {

enum class Axis { x, y, z };

inline char axis_name(Axis a) { return a == Axis::x ? 'x' : (a == Axis::y ? 'y' : 'z'); }

inline CMatrix pauli(Axis a) {
  CMatrix s(2, 2);
  switch (a) {
    case Axis::x: s << 0, 1, 1, 0; break;
    case Axis::y: s << 0, -kI, kI, 0; break;
    case Axis::z: s << 1, 0, 0, -1; break;
  }
  return s;
}

inline CMatrix kron(const CMatrix& a, const CMatrix& b) {
  CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

inline DensityMatrix kron(const DensityMatrix& a, const DensityMatrix& b) {
  return {kron(a.matrix(), b.matrix()), DensityMatrix::Trusted{}};
}

/// Trace over the right tensor factor of a (dim_s * dim_e)-dimensional operator.
inline CMatrix partial_trace_env(const CMatrix& joint, Eigen::Index dim_s, Eigen::Index dim_e) {
  require_square(joint, "partial_trace_env");
  if (dim_s < 1 || dim_e < 1 || joint.rows() != dim_s * dim_e) {
    throw DimensionError("partial_trace_env: operator dimension " + std::to_string(joint.rows()) +
                         " != " + std::to_string(dim_s) + " * " + std::to_string(dim_e));
  }
  CMatrix out = CMatrix::Zero(dim_s, dim_s);
  for (Eigen::Index i = 0; i < dim_s; ++i) {
    for (Eigen::Index j = 0; j < dim_s; ++j) {
      Complex acc = 0.0;
      for (Eigen::Index e = 0; e < dim_e; ++e) acc += joint(i * dim_e + e, j * dim_e + e);
      out(i, j) = acc;
    }
  }
  return out;
}

inline DensityMatrix partial_trace_env(const DensityMatrix& joint, Eigen::Index dim_s, Eigen::Index dim_e) {
  return {partial_trace_env(joint.matrix(), dim_s, dim_e), DensityMatrix::Trusted{}};
}

/// Partial transpose over the left factor of dimension dim_a.
inline CMatrix partial_transpose_left(const CMatrix& rho, Eigen::Index dim_a) {
  require_square(rho, "partial_transpose_left");
  if (dim_a < 1 || rho.rows() % dim_a != 0) {
    throw DimensionError("partial_transpose_left: dimension " + std::to_string(rho.rows()) +
                         " not divisible by " + std::to_string(dim_a));
  }
  const Eigen::Index db = rho.rows() / dim_a;
  CMatrix out(rho.rows(), rho.cols());
  for (Eigen::Index a = 0; a < dim_a; ++a)
    for (Eigen::Index ap = 0; ap < dim_a; ++ap)
      out.block(a * db, ap * db, db, db) = rho.block(ap * db, a * db, db, db);
  return out;
}

namespace detail {

inline RVector hermitian_eigenvalues(const CMatrix& a) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(hermitian_part(a), Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

/// Positive square root of a Hermitian PSD matrix; returns the smallest
/// eigenvalue through `min_eig` so callers can enforce the PSD tolerance.
/// sigma = B B^dagger with B = V sqrt(S) restricted to the support of sigma.
inline CMatrix support_root(const CMatrix& sigma, double* min_eig = nullptr) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(hermitian_part(sigma));
  const RVector& w = es.eigenvalues();
  if (min_eig) *min_eig = w.size() ? w(0) : 0.0;
  Eigen::Index first = 0;
  while (first < w.size() && w(first) <= 1e-14) ++first;
  const Eigen::Index r = w.size() - first;
  CMatrix b = es.eigenvectors().rightCols(r);
  for (Eigen::Index k = 0; k < r; ++k) b.col(k) *= std::sqrt(w(first + k));
  return b;
}

/// F = || B_rho^dagger B_sigma ||_1. Singular values keep full precision when
/// either state is rank deficient, unlike square roots of eigenvalues.
inline double fidelity_of_roots(const CMatrix& ba, const CMatrix& bb) {
  if (ba.cols() == 0 || bb.cols() == 0) return 0.0;
  const CMatrix c = ba.adjoint() * bb;
  if (c.size() == 1) return std::clamp(std::abs(c(0, 0)), 0.0, 1.0);
  Eigen::JacobiSVD<CMatrix> svd(c);
  return std::clamp(svd.singularValues().sum(), 0.0, 1.0);
}

/// Euclidean projection of a real vector onto the probability simplex.
inline RVector project_simplex(const RVector& v) {
  std::vector<double> s(v.data(), v.data() + v.size());
  std::sort(s.begin(), s.end(), std::greater<>());
  double cumsum = 0.0;
  double theta = 0.0;
  for (std::size_t k = 0; k < s.size(); ++k) {
    cumsum += s[k];
    const double t = (cumsum - 1.0) / static_cast<double>(k + 1);
    if (s[k] - t > 0.0) theta = t;
  }
  return (v.array() - theta).cwiseMax(0.0);
}

}  // namespace detail

/// Uhlmann fidelity tr sqrt(sqrt(sigma) rho sqrt(sigma)), clamped to [0, 1].
inline double fidelity(const CMatrix& rho, const CMatrix& sigma) {
  require_square(rho, "fidelity");
  if (rho.rows() != sigma.rows() || rho.cols() != sigma.cols()) throw DimensionError("fidelity: dimension mismatch");
  double min_sigma = 0.0, min_rho = 0.0;
  const CMatrix bs = detail::support_root(sigma, &min_sigma);
  const CMatrix br = detail::support_root(rho, &min_rho);
  if (min_sigma < -kPsdTol || min_rho < -kPsdTol) throw DomainError("fidelity: input is not positive semidefinite");
  return detail::fidelity_of_roots(br, bs);
}

inline double fidelity(const DensityMatrix& rho, const DensityMatrix& sigma) {
  return fidelity(rho.matrix(), sigma.matrix());
}

/// Schatten 1-norm of rho - sigma.
inline double trace_distance(const CMatrix& rho, const CMatrix& sigma) {
  if (rho.rows() != sigma.rows() || rho.cols() != sigma.cols()) throw DimensionError("trace_distance: dimension mismatch");
  return detail::hermitian_eigenvalues(rho - sigma).cwiseAbs().sum();
}

inline double trace_distance(const DensityMatrix& rho, const DensityMatrix& sigma) {
  return trace_distance(rho.matrix(), sigma.matrix());
}

/// Closest density matrix in Frobenius norm to the Hermitian part of `a`.
inline DensityMatrix project_spectrahedron(const CMatrix& a) {
  require_square(a, "project_spectrahedron");
  Eigen::SelfAdjointEigenSolver<CMatrix> es(hermitian_part(a));
  const RVector w = detail::project_simplex(es.eigenvalues());
  CMatrix out = es.eigenvectors() * w.asDiagonal() * es.eigenvectors().adjoint();
  return {hermitian_part(out), DensityMatrix::Trusted{}};
}

/// (||rho^{T_A}||_1 - 1) / 2 with A the left factor of dimension dim_a.
inline double negativity(const CMatrix& rho, Eigen::Index dim_a) {
  const RVector ev = detail::hermitian_eigenvalues(partial_transpose_left(rho, dim_a));
  return std::max(0.0, 0.5 * (ev.cwiseAbs().sum() - 1.0));
}

inline double negativity(const DensityMatrix& rho, Eigen::Index dim_a) { return negativity(rho.matrix(), dim_a); }

inline double purity(const DensityMatrix& rho) { return (rho.matrix() * rho.matrix()).trace().real(); }

/// Normalized complex Gaussian vector: Haar-distributed pure state.
inline CVector haar_random_vector(Eigen::Index dim, PrngStream& rng) {
  if (dim < 1) throw DimensionError("haar_random_pure: dim must be >= 1");
  CVector v(dim);
  for (Eigen::Index k = 0; k < dim; ++k) {
    const double re = rng.normal();
    const double im = rng.normal();
    v(k) = Complex{re, im};
  }
  return v / v.norm();
}

inline DensityMatrix haar_random_pure(Eigen::Index dim, PrngStream& rng) {
  return DensityMatrix::pure(haar_random_vector(dim, rng));
}

/// Haar random unitary via QR of a complex Ginibre matrix with phase fix.
inline CMatrix haar_random_unitary(Eigen::Index dim, PrngStream& rng) {
  CMatrix g(dim, dim);
  for (Eigen::Index j = 0; j < dim; ++j)
    for (Eigen::Index i = 0; i < dim; ++i) {
      const double re = rng.normal();
      const double im = rng.normal();
      g(i, j) = Complex{re, im};
    }
  Eigen::HouseholderQR<CMatrix> qr(g);
  CMatrix q = qr.householderQ() * CMatrix::Identity(dim, dim);
  const CMatrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index k = 0; k < dim; ++k) {
    const Complex d = r(k, k);
    q.col(k) *= std::abs(d) > 0 ? d / std::abs(d) : Complex{1.0};
  }
  return q;
}

/// Pauli operator on qubit `site` (1-based, qubit 1 is the leftmost factor).
inline Observable pauli_on_site(Axis gamma, int site, int n_qubits) {
  if (n_qubits < 1 || site < 1 || site > n_qubits) {
    throw DimensionError("pauli_on_site: site " + std::to_string(site) + " out of range 1.." +
                         std::to_string(n_qubits));
  }
  CMatrix op = CMatrix::Identity(1, 1);
  for (int q = 1; q <= n_qubits; ++q) op = kron(op, q == site ? pauli(gamma) : CMatrix::Identity(2, 2));
  return {std::move(op), std::string("s") + axis_name(gamma) + "_" + std::to_string(site)};
}

}  // namespace qrt
