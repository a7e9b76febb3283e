#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "cvqpu/types.hpp"

namespace cvqpu {

struct Subsystem {
  std::string label;
  int dim = 2;
  friend bool operator==(const Subsystem&, const Subsystem&) = default;
};

/// Ordered tensor-product structure. The first slot is the most significant
/// index, so amplitudes are laid out exactly as a chain of Kronecker products.
class SubsystemLayout {
 public:
  SubsystemLayout() = default;
  explicit SubsystemLayout(std::vector<Subsystem> slots);

  static SubsystemLayout single(std::string label, int dim) {
    return SubsystemLayout({Subsystem{std::move(label), dim}});
  }

  const std::vector<Subsystem>& slots() const { return slots_; }
  std::size_t size() const { return slots_.size(); }
  Eigen::Index total_dim() const { return total_dim_; }

  bool contains(std::string_view label) const;
  /// Throws ConfigError for unknown labels.
  std::size_t index_of(std::string_view label) const;
  int dim(std::string_view label) const { return slots_[index_of(label)].dim; }
  Eigen::Index stride(std::size_t slot) const;

  /// Digit of basis index `flat` on `slot`.
  int digit(Eigen::Index flat, std::size_t slot) const {
    return static_cast<int>((flat / stride(slot)) % slots_[slot].dim);
  }

  /// Layout restricted to `labels`, in this layout's order.
  SubsystemLayout restricted(const std::vector<std::string>& labels) const;

  std::string describe() const;

  friend bool operator==(const SubsystemLayout& a, const SubsystemLayout& b) {
    return a.slots_ == b.slots_;
  }

 private:
  std::vector<Subsystem> slots_;
  Eigen::Index total_dim_ = 0;
};

/// Complex square matrix over a layout. Stored sparse; `dense()` densifies.
class Operator {
 public:
  Operator() = default;
  Operator(SparseCMatrix matrix, SubsystemLayout layout);
  Operator(const CMatrix& matrix, SubsystemLayout layout);

  static Operator identity(const SubsystemLayout& layout);
  static Operator zero(const SubsystemLayout& layout);
  static Operator diagonal(const CVector& diag, const SubsystemLayout& layout);

  const SparseCMatrix& matrix() const { return matrix_; }
  const SubsystemLayout& layout() const { return layout_; }
  Eigen::Index dim() const { return matrix_.rows(); }
  CMatrix dense() const { return CMatrix(matrix_); }

  Operator adjoint() const;
  bool is_diagonal() const;
  CVector diagonal_entries() const { return matrix_.diagonal(); }
  /// max |H - H^dagger| over all entries.
  double hermiticity_defect() const;
  double max_abs() const;

  Operator& operator+=(const Operator& other);
  Operator& operator-=(const Operator& other);
  Operator& operator*=(Complex scale);

  friend Operator operator+(Operator a, const Operator& b) { return a += b; }
  friend Operator operator-(Operator a, const Operator& b) { return a -= b; }
  friend Operator operator*(Complex s, Operator a) { return a *= s; }
  friend Operator operator*(double s, Operator a) { return a *= Complex(s, 0.0); }
  friend Operator operator*(const Operator& a, const Operator& b);

 private:
  void check_same_layout(const Operator& other) const;

  SparseCMatrix matrix_;
  SubsystemLayout layout_;
};

Operator commutator(const Operator& a, const Operator& b);

enum class LadderKind { annihilate, create, number, identity };
enum class QubitOpKind { sx, sz, raise, lower, proj_gg, proj_ee, proj_pp, proj_mm };

/// Truncated bosonic operator on a single slot labelled `label`.
Operator ladder(LadderKind kind, int n_dim, std::string label = "M");

/// Two-level operator in the ordered basis (|g>, |e>).
/// sz = |e><e| - |g><g|, raise = |e><g|, |+-> = (|e> +- |g>)/sqrt(2).
Operator qubit_op(QubitOpKind kind, std::string label = "Q");

/// Kronecker product of `op` with identities on every other slot of `layout`.
Operator embed(const Operator& op, const SubsystemLayout& layout, std::string_view slot);

/// Pure state over a layout. Norm is not enforced here; constructors in this
/// module normalize, evolution results carry their drift.
class QState {
 public:
  QState() = default;
  QState(CVector amplitudes, SubsystemLayout layout);

  const CVector& amplitudes() const { return amplitudes_; }
  CVector& amplitudes() { return amplitudes_; }
  const SubsystemLayout& layout() const { return layout_; }
  Eigen::Index dim() const { return amplitudes_.size(); }
  double norm() const { return amplitudes_.norm(); }

 private:
  CVector amplitudes_;
  SubsystemLayout layout_;
};

struct FactorSpec {
  enum class Kind { fock, coherent, g, e, plus, minus };
  Kind kind = Kind::fock;
  int n = 0;
  Complex amplitude{0.0, 0.0};

  static FactorSpec fock(int n) { return {Kind::fock, n, {}}; }
  static FactorSpec coherent(Complex nu) { return {Kind::coherent, 0, nu}; }
  static FactorSpec ground() { return {Kind::g, 0, {}}; }
  static FactorSpec excited() { return {Kind::e, 0, {}}; }
  static FactorSpec plus() { return {Kind::plus, 0, {}}; }
  static FactorSpec minus() { return {Kind::minus, 0, {}}; }

  /// Parses "fock:3", "coherent:2", "coherent:1.5,-0.5", "vacuum", "g", "e",
  /// "plus", "minus".
  static FactorSpec parse(std::string_view text);
};

struct PreparedState {
  QState state;
  /// Probability weight the untruncated factors place outside the basis.
  double leakage = 0.0;
};

/// Coherent-state Fock amplitudes renormalized over n_dim levels.
CVector coherent_amplitudes(Complex nu, int n_dim);
/// sum_{n >= n_dim} |<n|nu>|^2 for the untruncated coherent state.
double coherent_tail(Complex nu, int n_dim);

CVector factor_vector(const FactorSpec& factor, int dim);

PreparedState make_state(const std::vector<FactorSpec>& factors, const SubsystemLayout& layout);

QState apply(const Operator& op, const QState& state);
Complex expect(const Operator& op, const QState& state);

/// Kronecker product of vectors, first factor most significant.
CVector kron_vectors(const std::vector<CVector>& factors);

}  // namespace cvqpu
