#pragma once

#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

#include <Eigen/Dense>

namespace qrt {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;

inline constexpr Complex kI{0.0, 1.0};

/// Tolerances for the density-matrix invariants.
inline constexpr double kHermitianTol = 1e-10;
inline constexpr double kTraceTol = 1e-10;
inline constexpr double kPsdTol = 1e-8;

/// Thrown when operand shapes do not fit together.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Thrown when a scalar parameter leaves its admissible range.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Invalid user configuration. Carries the offending field path.
class ValidationError : public std::invalid_argument {
 public:
  ValidationError(std::string field, const std::string& what)
      : std::invalid_argument(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

inline void require_square(const CMatrix& m, const char* what) {
  if (m.rows() != m.cols()) {
    throw DimensionError(std::string(what) + ": matrix is not square (" + std::to_string(m.rows()) +
                         "x" + std::to_string(m.cols()) + ")");
  }
}

inline double max_abs(const CMatrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

inline CMatrix hermitian_part(const CMatrix& a) { return 0.5 * (a + a.adjoint()); }

/// Unit-trace Hermitian positive semidefinite matrix.
///
/// The checked constructor enforces the invariants; `trusted` skips the
/// eigenvalue test for values produced by trace-preserving maps inside the
/// library (they are still covered by the property tests).
class DensityMatrix {
 public:
  struct Trusted {};

  DensityMatrix() = default;

  explicit DensityMatrix(CMatrix data) : data_(std::move(data)) { check(); }
  DensityMatrix(CMatrix data, Trusted) : data_(std::move(data)) {}

  static DensityMatrix maximally_mixed(Eigen::Index dim) {
    return {CMatrix::Identity(dim, dim) / static_cast<double>(dim), Trusted{}};
  }
  static DensityMatrix basis_state(Eigen::Index dim, Eigen::Index k) {
    CMatrix m = CMatrix::Zero(dim, dim);
    m(k, k) = 1.0;
    return {std::move(m), Trusted{}};
  }
  static DensityMatrix pure(const CVector& psi) {
    const CVector v = psi / psi.norm();
    return {v * v.adjoint(), Trusted{}};
  }

  Eigen::Index dim() const noexcept { return data_.rows(); }
  const CMatrix& matrix() const noexcept { return data_; }
  Complex operator()(Eigen::Index i, Eigen::Index j) const { return data_(i, j); }

  double hermiticity_error() const { return max_abs(data_ - data_.adjoint()); }
  double trace_error() const { return std::abs(data_.trace() - Complex{1.0, 0.0}); }
  double min_eigenvalue() const {
    Eigen::SelfAdjointEigenSolver<CMatrix> es(hermitian_part(data_), Eigen::EigenvaluesOnly);
    return es.eigenvalues()(0);
  }
  bool satisfies_invariants(double herm_tol = kHermitianTol, double trace_tol = kTraceTol,
                            double psd_tol = kPsdTol) const {
    return data_.rows() == data_.cols() && data_.rows() > 0 && hermiticity_error() <= herm_tol &&
           trace_error() <= trace_tol && min_eigenvalue() >= -psd_tol;
  }

 private:
  void check() const {
    require_square(data_, "DensityMatrix");
    if (data_.rows() == 0) throw DimensionError("DensityMatrix: empty matrix");
    if (hermiticity_error() > kHermitianTol) throw DomainError("DensityMatrix: not Hermitian");
    if (trace_error() > kTraceTol) throw DomainError("DensityMatrix: trace is not 1");
    if (min_eigenvalue() < -kPsdTol) throw DomainError("DensityMatrix: not positive semidefinite");
  }

  CMatrix data_;
};

/// Hermitian operator with a human-readable label such as "sz_3" or "szsz_1_4".
struct Observable {
  CMatrix data;
  std::string label;
  bool diagonal = false;

  Observable() = default;
  Observable(CMatrix m, std::string l) : data(std::move(m)), label(std::move(l)) {
    require_square(data, "Observable");
    if (max_abs(data - data.adjoint()) > 1e-12) throw DomainError("Observable " + label + " is not Hermitian");
    const CMatrix off = data - CMatrix(data.diagonal().asDiagonal());
    diagonal = max_abs(off) == 0.0;
  }

  Eigen::Index dim() const noexcept { return data.rows(); }

  double expectation(const CMatrix& rho) const {
    if (diagonal) return (data.diagonal().array() * rho.diagonal().array()).sum().real();
    return (data * rho).trace().real();
  }
  double expectation(const DensityMatrix& rho) const { return expectation(rho.matrix()); }
};

}  // namespace qrt
