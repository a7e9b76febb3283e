#pragma once

#include <cmath>
#include <string>

#include "cvqpu/fock.hpp"

namespace testing {

using namespace cvqpu;

inline Operator on(LadderKind kind, const SubsystemLayout& layout, const std::string& label) {
  return embed(ladder(kind, layout.dim(label), label), layout, label);
}

inline Operator on(QubitOpKind kind, const SubsystemLayout& layout, const std::string& label) {
  return embed(qubit_op(kind, label), layout, label);
}

inline double max_abs(const CMatrix& m) { return m.cwiseAbs().maxCoeff(); }

inline double unitarity_defect(const Operator& u) {
  const CMatrix d = u.dense();
  return max_abs(d.adjoint() * d - CMatrix::Identity(d.rows(), d.cols()));
}

inline double log_factorial(int n) { return std::lgamma(n + 1.0); }

/// |<n|nu>|^2 for the untruncated coherent state.
inline double poisson(double mean, int n) { return std::exp(-mean + n * std::log(mean) - log_factorial(n)); }

}  // namespace testing
