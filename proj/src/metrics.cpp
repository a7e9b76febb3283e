#include "cvqpu/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "json.hpp"

namespace cvqpu {

bool is_mode_label(std::string_view label) { return !label.empty() && label.front() == 'M'; }

DensityMatrix::DensityMatrix(CMatrix rho, SubsystemLayout layout) : rho_(std::move(rho)), layout_(std::move(layout)) {
  if (rho_.rows() != rho_.cols() || rho_.rows() != layout_.total_dim())
    throw ConfigError("density matrix shape does not match layout " + layout_.describe());
}

DensityMatrix DensityMatrix::pure(const QState& psi) {
  return DensityMatrix(psi.amplitudes() * psi.amplitudes().adjoint(), psi.layout());
}

double DensityMatrix::purity() const { return (rho_ * rho_).trace().real(); }

void DensityMatrix::validate(double tol) const {
  if ((rho_ - rho_.adjoint()).cwiseAbs().maxCoeff() > tol) throw ConfigError("density matrix is not Hermitian");
  if (std::abs(trace() - 1.0) > tol) throw ConfigError("density matrix trace is not 1");
  Eigen::SelfAdjointEigenSolver<CMatrix> es(rho_, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -tol) throw ConfigError("density matrix has a negative eigenvalue");
}

// ---------------------------------------------------------------------------

namespace {

struct Split {
  SubsystemLayout kept;
  std::vector<Eigen::Index> keep_index;   // kept-space index of every full index
  std::vector<Eigen::Index> trace_index;  // traced-space index of every full index
  Eigen::Index keep_dim = 1, trace_dim = 1;
};

Split split(const SubsystemLayout& layout, const std::vector<std::string>& keep) {
  if (keep.empty()) throw ConfigError("partial_trace needs at least one label to keep");
  for (const auto& label : keep) layout.index_of(label);
  Split s;
  s.kept = layout.restricted(keep);
  std::vector<bool> kept(layout.size(), false);
  for (const auto& label : keep) kept[layout.index_of(label)] = true;
  for (std::size_t k = 0; k < layout.size(); ++k)
    (kept[k] ? s.keep_dim : s.trace_dim) *= layout.slots()[k].dim;
  const Eigen::Index n = layout.total_dim();
  s.keep_index.resize(n);
  s.trace_index.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::Index ki = 0, ti = 0;
    for (std::size_t k = 0; k < layout.size(); ++k) {
      const int d = layout.digit(i, k);
      if (kept[k]) ki = ki * layout.slots()[k].dim + d;
      else ti = ti * layout.slots()[k].dim + d;
    }
    s.keep_index[i] = ki;
    s.trace_index[i] = ti;
  }
  return s;
}

}  // namespace

DensityMatrix partial_trace(const QState& psi, const std::vector<std::string>& keep) {
  const Split s = split(psi.layout(), keep);
  CMatrix m = CMatrix::Zero(s.keep_dim, s.trace_dim);
  for (Eigen::Index i = 0; i < psi.dim(); ++i) m(s.keep_index[i], s.trace_index[i]) = psi.amplitudes()(i);
  return DensityMatrix(m * m.adjoint(), s.kept);
}

DensityMatrix partial_trace(const DensityMatrix& rho, const std::vector<std::string>& keep) {
  const Split s = split(rho.layout(), keep);
  CMatrix out = CMatrix::Zero(s.keep_dim, s.keep_dim);
  const Eigen::Index n = rho.dim();
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < n; ++i)
      if (s.trace_index[i] == s.trace_index[j]) out(s.keep_index[i], s.keep_index[j]) += rho.matrix()(i, j);
  return DensityMatrix(std::move(out), s.kept);
}

// ---------------------------------------------------------------------------

double fidelity(const CVector& psi, const DensityMatrix& rho) {
  if (psi.size() != rho.dim()) throw ConfigError("fidelity: dimension mismatch");
  return std::clamp(psi.dot(rho.matrix() * psi).real(), 0.0, 1.0);
}

double fidelity(const QState& a, const QState& b) {
  if (a.dim() != b.dim()) throw ConfigError("fidelity: dimension mismatch");
  return std::clamp(std::norm(a.amplitudes().dot(b.amplitudes())), 0.0, 1.0);
}

double fidelity(const DensityMatrix& rho1, const DensityMatrix& rho2) {
  if (rho1.dim() != rho2.dim()) throw ConfigError("fidelity: dimension mismatch");
  const DensityMatrix* pure = rho1.is_pure() ? &rho1 : (rho2.is_pure() ? &rho2 : nullptr);
  if (pure) {
    const DensityMatrix& other = pure == &rho1 ? rho2 : rho1;
    Eigen::SelfAdjointEigenSolver<CMatrix> es(pure->matrix());
    const CVector psi = es.eigenvectors().col(es.eigenvalues().size() - 1);
    return fidelity(psi, other);
  }
  Eigen::SelfAdjointEigenSolver<CMatrix> es1(rho1.matrix());
  const RVector root = es1.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  const CMatrix sqrt1 = es1.eigenvectors() * root.asDiagonal() * es1.eigenvectors().adjoint();
  CMatrix m = sqrt1 * rho2.matrix() * sqrt1;
  m = 0.5 * (m + m.adjoint()).eval();
  Eigen::SelfAdjointEigenSolver<CMatrix> es(m, Eigen::EigenvaluesOnly);
  const double tr = es.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
  return std::clamp(tr * tr, 0.0, 1.0);
}

// ---------------------------------------------------------------------------

double WignerGrid::integral() const {
  const double dx = x.size() > 1 ? x(1) - x(0) : 1.0;
  const double dp = p.size() > 1 ? p(1) - p(0) : 1.0;
  return w.sum() * dx * dp;
}

std::pair<double, double> WignerGrid::argmax() const {
  Eigen::Index i = 0, j = 0;
  w.maxCoeff(&i, &j);
  return {x(i), p(j)};
}

namespace {

RVector axis(double lo, double hi, int count) {
  if (count < 1) throw ConfigError("Wigner grid needs at least one sample per axis");
  if (count == 1) return RVector::Constant(1, lo);
  return RVector::LinSpaced(count, lo, hi);
}

}  // namespace

WignerGrid wigner(const DensityMatrix& rho, const WignerGridSpec& spec) {
  if (rho.layout().size() != 1) throw ConfigError("wigner expects a single-mode density matrix");
  WignerGrid grid;
  grid.x = axis(spec.x_min, spec.x_max, spec.nx);
  grid.p = axis(spec.p_min, spec.p_max, spec.np);
  const double xmax = std::max(std::abs(spec.x_min), std::abs(spec.x_max));
  const double pmax = std::max(std::abs(spec.p_min), std::abs(spec.p_max));
  const double amax = std::sqrt(0.5 * (xmax * xmax + pmax * pmax));
  const int pad = spec.padding >= 0 ? spec.padding : static_cast<int>(std::ceil(amax * amax + 8.0 * amax + 16.0));
  const Eigen::Index n = rho.dim(), big = n + pad;

  const CMatrix a = ladder(LadderKind::annihilate, static_cast<int>(big)).dense();
  // D(x/sqrt2) = exp(-i r G), G = i(a^dag - a); D(i p/sqrt2) = exp(i s X), X = a + a^dag.
  Eigen::SelfAdjointEigenSolver<CMatrix> eg(Complex(0.0, 1.0) * (a.adjoint() - a));
  Eigen::SelfAdjointEigenSolver<CMatrix> ex(a + a.adjoint());
  RVector parity(big);
  for (Eigen::Index k = 0; k < big; ++k) parity(k) = k % 2 == 0 ? 1.0 : -1.0;

  auto exp_i = [](const RVector& evals, double s) {
    CVector out(evals.size());
    for (Eigen::Index k = 0; k < evals.size(); ++k) out(k) = std::polar(1.0, s * evals(k));
    return out;
  };

  // A_x = D_x^dag rho D_x, using only the rows of D_x inside the support of rho.
  std::vector<CMatrix> ax(grid.x.size());
  for (Eigen::Index i = 0; i < grid.x.size(); ++i) {
    const double r = grid.x(i) / std::sqrt(2.0);
    const CMatrix rows = eg.eigenvectors().topRows(n) * exp_i(eg.eigenvalues(), -r).asDiagonal() *
                         eg.eigenvectors().adjoint();
    ax[i] = rows.adjoint() * rho.matrix() * rows;
  }
  // B_p^T = (D_p Pi D_p^dag)^T, so that Tr[A B] is an elementwise sum.
  std::vector<CMatrix> bp(grid.p.size());
  for (Eigen::Index j = 0; j < grid.p.size(); ++j) {
    const double s = grid.p(j) / std::sqrt(2.0);
    const CMatrix d = ex.eigenvectors() * exp_i(ex.eigenvalues(), s).asDiagonal() * ex.eigenvectors().adjoint();
    bp[j] = (d * parity.asDiagonal() * d.adjoint()).transpose();
  }
  grid.w.resize(grid.x.size(), grid.p.size());
  for (Eigen::Index i = 0; i < grid.x.size(); ++i)
    for (Eigen::Index j = 0; j < grid.p.size(); ++j)
      grid.w(i, j) = ax[i].cwiseProduct(bp[j]).sum().real() / kPi;
  return grid;
}

void write_wigner_csv(const WignerGrid& grid, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << "x,p,w\n";
  char buf[96];
  for (Eigen::Index i = 0; i < grid.x.size(); ++i)
    for (Eigen::Index j = 0; j < grid.p.size(); ++j) {
      std::snprintf(buf, sizeof buf, "%.12g,%.12g,%.12g\n", grid.x(i), grid.p(j), grid.w(i, j));
      out << buf;
    }
  if (!out) throw IoError("failed writing '" + path + "'");
}

void write_wigner_json(const WignerGrid& grid, const std::string& path) {
  nlohmann::json j;
  j["x"] = std::vector<double>(grid.x.data(), grid.x.data() + grid.x.size());
  j["p"] = std::vector<double>(grid.p.data(), grid.p.data() + grid.p.size());
  auto& rows = j["w"] = nlohmann::json::array();
  for (Eigen::Index i = 0; i < grid.w.rows(); ++i) {
    std::vector<double> row(grid.w.cols());
    for (Eigen::Index k = 0; k < grid.w.cols(); ++k) row[k] = grid.w(i, k);
    rows.push_back(row);
  }
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << j.dump() << "\n";
  if (!out) throw IoError("failed writing '" + path + "'");
}

// ---------------------------------------------------------------------------

PhotonStats photon_stats(const DensityMatrix& rho) {
  PhotonStats s;
  const auto& layout = rho.layout();
  const RVector pop = rho.matrix().diagonal().real();
  for (std::size_t k = 0; k < layout.size(); ++k) {
    const auto& slot = layout.slots()[k];
    if (!is_mode_label(slot.label)) continue;
    double mean = 0.0, edge = 0.0;
    for (Eigen::Index i = 0; i < rho.dim(); ++i) {
      const int d = layout.digit(i, k);
      mean += d * pop(i);
      if (d >= slot.dim - 3) edge += pop(i);
    }
    s.modes.push_back(slot.label);
    s.mean.push_back(mean);
    s.edge_population.push_back(edge);
  }
  s.purity = rho.purity();
  return s;
}

RVector total_photon_number(const SubsystemLayout& layout) {
  RVector n = RVector::Zero(layout.total_dim());
  for (std::size_t k = 0; k < layout.size(); ++k) {
    if (!is_mode_label(layout.slots()[k].label)) continue;
    for (Eigen::Index i = 0; i < n.size(); ++i) n(i) += layout.digit(i, k);
  }
  return n;
}

double golden_section_max(const std::function<double(double)>& f, double a, double b, double tol) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - inv_phi * (b - a), d = a + inv_phi * (b - a);
  double fc = f(c), fd = f(d);
  while (std::abs(b - a) > tol) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

Complex best_fit_coherent(const DensityMatrix& rho) {
  if (rho.layout().size() != 1) throw ConfigError("best_fit_coherent expects a single-mode density matrix");
  const int n = static_cast<int>(rho.dim());
  const CMatrix a = ladder(LadderKind::annihilate, n).dense();
  Complex beta = (rho.matrix() * a).trace();
  auto overlap = [&](Complex b) { return fidelity(coherent_amplitudes(b, n), rho); };
  for (double span = 0.5; span > 1e-8; span *= 0.5) {
    const double re = golden_section_max([&](double v) { return overlap({v, beta.imag()}); }, beta.real() - span,
                                         beta.real() + span, 1e-10);
    beta = {re, beta.imag()};
    const double im = golden_section_max([&](double v) { return overlap({beta.real(), v}); }, beta.imag() - span,
                                         beta.imag() + span, 1e-10);
    beta = {beta.real(), im};
  }
  return beta;
}

}  // namespace cvqpu
