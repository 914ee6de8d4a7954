// SPDX-License-Identifier: Apache-2.0
//
// Common numeric types, error types and small dense linear-algebra helpers
// shared by every module.

#pragma once

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>
#include <type_traits>

#include <Eigen/Dense>

namespace coexist {

using cd = std::complex<double>;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using RMat = Eigen::MatrixXd;
using RVec = Eigen::VectorXd;

inline constexpr double kLog2e = 1.4426950408889634;  // log2(e)
inline constexpr double kLn2 = 0.6931471805599453;

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

class CoexistError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration or parameter bundle.
class ConfigError : public CoexistError {
 public:
  using CoexistError::CoexistError;
};

/// Inputs whose shape does not match the scenario.
class DimensionError : public CoexistError {
 public:
  using CoexistError::CoexistError;
};

/// Matrix that should be Hermitian positive (semi)definite is not.
class NumericalError : public CoexistError {
 public:
  using CoexistError::CoexistError;
};

/// The radar SDR targets cannot be met (by any design, or by the current
/// filters and codebook).
class InfeasibleError : public CoexistError {
 public:
  using CoexistError::CoexistError;
};

/// No radar power in (0, Pr_max] meets every SDR target for the given
/// filters and codebook.
class InfeasiblePowerError : public InfeasibleError {
 public:
  using InfeasibleError::InfeasibleError;
};

/// An iterative method stopped without meeting its termination criterion.
class ConvergenceError : public CoexistError {
 public:
  using CoexistError::CoexistError;
};

// ---------------------------------------------------------------------------
// dB helpers
// ---------------------------------------------------------------------------

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double x) { return 10.0 * std::log10(x); }

// ---------------------------------------------------------------------------
// Dense helpers
// ---------------------------------------------------------------------------

template <typename Derived>
void hermitize(Eigen::MatrixBase<Derived>& x) {
  x = (0.5 * (x + x.adjoint())).eval();
}

template <typename Derived>
[[nodiscard]] double hermitian_defect(const Eigen::MatrixBase<Derived>& x) {
  return (x - x.adjoint()).cwiseAbs().maxCoeff();
}

/// True when every entry has an exactly zero imaginary part.
template <typename Derived>
[[nodiscard]] bool is_exactly_real(const Eigen::MatrixBase<Derived>& x) {
  if constexpr (!Eigen::NumTraits<typename Derived::Scalar>::IsComplex) {
    return true;
  } else {
    for (Eigen::Index j = 0; j < x.cols(); ++j)
      for (Eigen::Index i = 0; i < x.rows(); ++i)
        if (x(i, j).imag() != 0.0) return false;
    return true;
  }
}

/// log det of a Hermitian positive definite matrix via Cholesky.
template <typename Derived>
[[nodiscard]] double logdet_hpd(const Eigen::MatrixBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  Eigen::LLT<Mat> llt(x.derived());
  if (llt.info() != Eigen::Success)
    throw NumericalError("logdet_hpd: matrix is not positive definite");
  double acc = 0.0;
  const auto& l = llt.matrixLLT();
  for (Eigen::Index i = 0; i < l.rows(); ++i)
    acc += std::log(std::real(l(i, i)));
  return 2.0 * acc;
}

/// Real part of trace(A * B) for Hermitian A, B without forming the product.
template <typename DA, typename DB>
[[nodiscard]] double trace_product_hermitian(const Eigen::MatrixBase<DA>& a,
                                             const Eigen::MatrixBase<DB>& b) {
  // trace(AB) = sum_ij A_ij B_ji = sum_ij A_ij conj(B_ij)
  return std::real((a.array() * b.array().conjugate()).sum());
}

/// Kronecker product of dense matrices.
template <typename DA, typename DB>
[[nodiscard]] auto kron(const Eigen::MatrixBase<DA>& a,
                        const Eigen::MatrixBase<DB>& b) {
  using Scalar = std::common_type_t<typename DA::Scalar, typename DB::Scalar>;
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> out(a.rows() * b.rows(),
                                                             a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) =
          Scalar(a(i, j)) * b.template cast<Scalar>();
  return out;
}

/// Non-negative remainder.
[[nodiscard]] inline int positive_mod(long long a, int n) {
  const long long r = a % n;
  return static_cast<int>(r < 0 ? r + n : r);
}

}  // namespace coexist
