#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace cvqpu {

template <typename Real>
using ComplexT = std::complex<Real>;
template <typename Real>
using CMatrixT = Eigen::Matrix<ComplexT<Real>, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Real>
using CVectorT = Eigen::Matrix<ComplexT<Real>, Eigen::Dynamic, 1>;
template <typename Real>
using SparseCMatrixT = Eigen::SparseMatrix<ComplexT<Real>, Eigen::RowMajor>;

using Complex = ComplexT<double>;
using CMatrix = CMatrixT<double>;
using CVector = CVectorT<double>;
using SparseCMatrix = SparseCMatrixT<double>;
using RVector = Eigen::VectorXd;
using RMatrix = Eigen::MatrixXd;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr Complex kI{0.0, 1.0};

/// Invalid user input: bad parameters, mismatched layouts, malformed files.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// An effective model or calibration has no finite solution for the inputs.
class SingularModelError : public std::domain_error {
 public:
  explicit SingularModelError(const std::string& what) : std::domain_error(what) {}
};

/// The adaptive integrator or truncation study could not meet its targets.
class ConvergenceError : public std::runtime_error {
 public:
  explicit ConvergenceError(const std::string& what) : std::runtime_error(what) {}
};

class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace cvqpu
