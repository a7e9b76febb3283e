#include "cvqpu/fock.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include <unsupported/Eigen/KroneckerProduct>

namespace cvqpu {

SubsystemLayout::SubsystemLayout(std::vector<Subsystem> slots) : slots_(std::move(slots)) {
  if (slots_.empty()) throw ConfigError("layout needs at least one subsystem");
  std::set<std::string> seen;
  total_dim_ = 1;
  for (const auto& s : slots_) {
    if (s.dim < 2) throw ConfigError("subsystem '" + s.label + "' has dimension < 2");
    if (!seen.insert(s.label).second) throw ConfigError("duplicate subsystem label '" + s.label + "'");
    total_dim_ *= s.dim;
  }
}

bool SubsystemLayout::contains(std::string_view label) const {
  return std::any_of(slots_.begin(), slots_.end(), [&](const Subsystem& s) { return s.label == label; });
}

std::size_t SubsystemLayout::index_of(std::string_view label) const {
  for (std::size_t i = 0; i < slots_.size(); ++i)
    if (slots_[i].label == label) return i;
  throw ConfigError("unknown subsystem '" + std::string(label) + "' in layout " + describe());
}

Eigen::Index SubsystemLayout::stride(std::size_t slot) const {
  Eigen::Index s = 1;
  for (std::size_t i = slot + 1; i < slots_.size(); ++i) s *= slots_[i].dim;
  return s;
}

SubsystemLayout SubsystemLayout::restricted(const std::vector<std::string>& labels) const {
  if (labels.empty()) throw ConfigError("cannot restrict a layout to zero subsystems");
  for (const auto& l : labels) index_of(l);
  std::vector<Subsystem> kept;
  for (const auto& s : slots_)
    if (std::find(labels.begin(), labels.end(), s.label) != labels.end()) kept.push_back(s);
  return SubsystemLayout(std::move(kept));
}

std::string SubsystemLayout::describe() const {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < slots_.size(); ++i) {
    if (i) os << ", ";
    os << slots_[i].label << ':' << slots_[i].dim;
  }
  os << ']';
  return os.str();
}

// ---------------------------------------------------------------------------

Operator::Operator(SparseCMatrix matrix, SubsystemLayout layout)
    : matrix_(std::move(matrix)), layout_(std::move(layout)) {
  if (matrix_.rows() != matrix_.cols()) throw ConfigError("operator matrix must be square");
  if (matrix_.rows() != layout_.total_dim())
    throw ConfigError("operator dimension " + std::to_string(matrix_.rows()) + " does not match layout " +
                      layout_.describe());
  matrix_.makeCompressed();
}

Operator::Operator(const CMatrix& matrix, SubsystemLayout layout)
    : Operator(SparseCMatrix(matrix.sparseView(Complex(0.0), 0.0)), std::move(layout)) {}

Operator Operator::identity(const SubsystemLayout& layout) {
  SparseCMatrix m(layout.total_dim(), layout.total_dim());
  m.setIdentity();
  return Operator(std::move(m), layout);
}

Operator Operator::zero(const SubsystemLayout& layout) {
  return Operator(SparseCMatrix(layout.total_dim(), layout.total_dim()), layout);
}

Operator Operator::diagonal(const CVector& diag, const SubsystemLayout& layout) {
  SparseCMatrix m(diag.size(), diag.size());
  m.reserve(Eigen::VectorXi::Constant(diag.size(), 1));
  for (Eigen::Index i = 0; i < diag.size(); ++i)
    if (diag[i] != Complex(0.0)) m.insert(i, i) = diag[i];
  return Operator(std::move(m), layout);
}

Operator Operator::adjoint() const { return Operator(SparseCMatrix(matrix_.adjoint()), layout_); }

bool Operator::is_diagonal() const {
  for (Eigen::Index r = 0; r < matrix_.outerSize(); ++r)
    for (SparseCMatrix::InnerIterator it(matrix_, r); it; ++it)
      if (it.row() != it.col() && it.value() != Complex(0.0)) return false;
  return true;
}

double Operator::hermiticity_defect() const {
  SparseCMatrix diff = matrix_ - SparseCMatrix(matrix_.adjoint());
  double worst = 0.0;
  for (Eigen::Index r = 0; r < diff.outerSize(); ++r)
    for (SparseCMatrix::InnerIterator it(diff, r); it; ++it) worst = std::max(worst, std::abs(it.value()));
  return worst;
}

double Operator::max_abs() const {
  double worst = 0.0;
  for (Eigen::Index k = 0; k < matrix_.nonZeros(); ++k) worst = std::max(worst, std::abs(matrix_.valuePtr()[k]));
  return worst;
}

void Operator::check_same_layout(const Operator& other) const {
  if (!(layout_ == other.layout_))
    throw ConfigError("operator layouts differ: " + layout_.describe() + " vs " + other.layout_.describe());
}

Operator& Operator::operator+=(const Operator& other) {
  check_same_layout(other);
  matrix_ = matrix_ + other.matrix_;
  return *this;
}

Operator& Operator::operator-=(const Operator& other) {
  check_same_layout(other);
  matrix_ = matrix_ - other.matrix_;
  return *this;
}

Operator& Operator::operator*=(Complex scale) {
  matrix_ *= scale;
  return *this;
}

Operator operator*(const Operator& a, const Operator& b) {
  a.check_same_layout(b);
  return Operator(SparseCMatrix(a.matrix_ * b.matrix_), a.layout_);
}

Operator commutator(const Operator& a, const Operator& b) { return a * b - b * a; }

// ---------------------------------------------------------------------------

Operator ladder(LadderKind kind, int n_dim, std::string label) {
  if (n_dim < 2) throw ConfigError("ladder operators need n_dim >= 2, got " + std::to_string(n_dim));
  auto layout = SubsystemLayout::single(std::move(label), n_dim);
  std::vector<Eigen::Triplet<Complex>> trip;
  switch (kind) {
    case LadderKind::annihilate:
      for (int n = 1; n < n_dim; ++n) trip.emplace_back(n - 1, n, std::sqrt(static_cast<double>(n)));
      break;
    case LadderKind::create:
      for (int n = 1; n < n_dim; ++n) trip.emplace_back(n, n - 1, std::sqrt(static_cast<double>(n)));
      break;
    case LadderKind::number:
      for (int n = 1; n < n_dim; ++n) trip.emplace_back(n, n, static_cast<double>(n));
      break;
    case LadderKind::identity:
      for (int n = 0; n < n_dim; ++n) trip.emplace_back(n, n, 1.0);
      break;
  }
  SparseCMatrix m(n_dim, n_dim);
  m.setFromTriplets(trip.begin(), trip.end());
  return Operator(std::move(m), std::move(layout));
}

Operator qubit_op(QubitOpKind kind, std::string label) {
  CMatrix m = CMatrix::Zero(2, 2);
  // basis order (|g>, |e>)
  switch (kind) {
    case QubitOpKind::sx: m << 0, 1, 1, 0; break;
    case QubitOpKind::sz: m << -1, 0, 0, 1; break;
    case QubitOpKind::raise: m(1, 0) = 1.0; break;
    case QubitOpKind::lower: m(0, 1) = 1.0; break;
    case QubitOpKind::proj_gg: m(0, 0) = 1.0; break;
    case QubitOpKind::proj_ee: m(1, 1) = 1.0; break;
    case QubitOpKind::proj_pp: m << 0.5, 0.5, 0.5, 0.5; break;
    case QubitOpKind::proj_mm: m << 0.5, -0.5, -0.5, 0.5; break;
  }
  return Operator(m, SubsystemLayout::single(std::move(label), 2));
}

Operator embed(const Operator& op, const SubsystemLayout& layout, std::string_view slot) {
  if (op.layout().size() != 1) throw ConfigError("embed expects a single-subsystem operator");
  const std::size_t target = layout.index_of(slot);
  if (layout.slots()[target].dim != op.dim())
    throw ConfigError("cannot embed a " + std::to_string(op.dim()) + "-dimensional operator into slot '" +
                      std::string(slot) + "' of dimension " + std::to_string(layout.slots()[target].dim));
  const Eigen::Index left = layout.total_dim() / (layout.stride(target) * op.dim());
  const Eigen::Index right = layout.stride(target);
  SparseCMatrix id_left(left, left), id_right(right, right);
  id_left.setIdentity();
  id_right.setIdentity();
  SparseCMatrix tmp = Eigen::kroneckerProduct(id_left, op.matrix());
  SparseCMatrix full = Eigen::kroneckerProduct(tmp, id_right);
  return Operator(std::move(full), layout);
}

// ---------------------------------------------------------------------------

QState::QState(CVector amplitudes, SubsystemLayout layout)
    : amplitudes_(std::move(amplitudes)), layout_(std::move(layout)) {
  if (amplitudes_.size() != layout_.total_dim())
    throw ConfigError("state length " + std::to_string(amplitudes_.size()) + " does not match layout " +
                      layout_.describe());
}

namespace {

double parse_double(std::string_view text, std::string_view context) {
  std::string buf(text);
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(buf, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != buf.size() || buf.empty())
    throw ConfigError("cannot parse number '" + buf + "' in '" + std::string(context) + "'");
  return v;
}

// log |<n|nu>|^2 for the untruncated coherent state.
double coherent_log_weight(double mag, int n) {
  if (mag == 0.0) return n == 0 ? 0.0 : -std::numeric_limits<double>::infinity();
  return 2.0 * n * std::log(mag) - std::lgamma(n + 1.0) - mag * mag;
}

}  // namespace

FactorSpec FactorSpec::parse(std::string_view text) {
  const auto colon = text.find(':');
  const std::string_view head = text.substr(0, colon);
  const std::string_view tail = colon == std::string_view::npos ? std::string_view{} : text.substr(colon + 1);
  if (head == "g" || head == "ground") return ground();
  if (head == "e" || head == "excited") return excited();
  if (head == "plus" || head == "+") return plus();
  if (head == "minus" || head == "-") return minus();
  if (head == "vacuum") return fock(0);
  if (head == "fock") {
    const double n = parse_double(tail, text);
    if (n < 0 || n != std::floor(n)) throw ConfigError("fock level must be a non-negative integer: " + std::string(text));
    return fock(static_cast<int>(n));
  }
  if (head == "coherent") {
    const auto comma = tail.find(',');
    const double re = parse_double(tail.substr(0, comma), text);
    const double im = comma == std::string_view::npos ? 0.0 : parse_double(tail.substr(comma + 1), text);
    return coherent({re, im});
  }
  throw ConfigError("unknown state factor '" + std::string(text) + "'");
}

CVector coherent_amplitudes(Complex nu, int n_dim) {
  if (!std::isfinite(nu.real()) || !std::isfinite(nu.imag())) throw ConfigError("coherent amplitude must be finite");
  const double mag = std::abs(nu);
  const double phase = std::arg(nu);
  CVector c(n_dim);
  for (int n = 0; n < n_dim; ++n) {
    const double lw = coherent_log_weight(mag, n);
    c[n] = std::polar(std::exp(0.5 * lw), n * phase);
  }
  return c / c.norm();
}

double coherent_tail(Complex nu, int n_dim) {
  const double mag = std::abs(nu);
  double tail = 0.0;
  for (int n = n_dim;; ++n) {
    const double w = std::exp(coherent_log_weight(mag, n));
    tail += w;
    // terms decay monotonically once n exceeds |nu|^2
    if (n > mag * mag && (w < 1e-300 || w < 1e-18 * tail)) break;
    if (n > n_dim + 100000) break;
  }
  return tail;
}

CVector factor_vector(const FactorSpec& factor, int dim) {
  CVector v = CVector::Zero(dim);
  const double h = 1.0 / std::sqrt(2.0);
  switch (factor.kind) {
    case FactorSpec::Kind::fock:
      if (factor.n >= dim)
        throw ConfigError("fock level " + std::to_string(factor.n) + " outside a " + std::to_string(dim) +
                          "-level space");
      v[factor.n] = 1.0;
      break;
    case FactorSpec::Kind::coherent:
      v = coherent_amplitudes(factor.amplitude, dim);
      break;
    case FactorSpec::Kind::g:
    case FactorSpec::Kind::e:
    case FactorSpec::Kind::plus:
    case FactorSpec::Kind::minus:
      if (dim != 2) throw ConfigError("qubit factor assigned to a slot of dimension " + std::to_string(dim));
      if (factor.kind == FactorSpec::Kind::g) v << 1.0, 0.0;
      if (factor.kind == FactorSpec::Kind::e) v << 0.0, 1.0;
      if (factor.kind == FactorSpec::Kind::plus) v << h, h;
      if (factor.kind == FactorSpec::Kind::minus) v << -h, h;
      break;
  }
  return v;
}

CVector kron_vectors(const std::vector<CVector>& factors) {
  CVector out = CVector::Ones(1);
  for (const auto& f : factors) {
    CVector next(out.size() * f.size());
    for (Eigen::Index i = 0; i < out.size(); ++i) next.segment(i * f.size(), f.size()) = out[i] * f;
    out = std::move(next);
  }
  return out;
}

PreparedState make_state(const std::vector<FactorSpec>& factors, const SubsystemLayout& layout) {
  if (factors.size() != layout.size())
    throw ConfigError("make_state got " + std::to_string(factors.size()) + " factors for layout " + layout.describe());
  std::vector<CVector> vecs;
  double kept = 1.0;
  for (std::size_t i = 0; i < factors.size(); ++i) {
    const int dim = layout.slots()[i].dim;
    vecs.push_back(factor_vector(factors[i], dim));
    if (factors[i].kind == FactorSpec::Kind::coherent) kept *= 1.0 - coherent_tail(factors[i].amplitude, dim);
  }
  return {QState(kron_vectors(vecs), layout), 1.0 - kept};
}

QState apply(const Operator& op, const QState& state) {
  if (!(op.layout() == state.layout()))
    throw ConfigError("layout mismatch: operator " + op.layout().describe() + " vs state " + state.layout().describe());
  return QState(op.matrix() * state.amplitudes(), state.layout());
}

Complex expect(const Operator& op, const QState& state) {
  if (!(op.layout() == state.layout()))
    throw ConfigError("layout mismatch: operator " + op.layout().describe() + " vs state " + state.layout().describe());
  return state.amplitudes().dot(op.matrix() * state.amplitudes());
}

}  // namespace cvqpu
