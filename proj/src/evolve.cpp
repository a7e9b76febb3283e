#include "cvqpu/evolve.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <boost/numeric/odeint.hpp>
#include <boost/numeric/odeint/external/eigen/eigen.hpp>

namespace cvqpu {

namespace {

void check_hermitian(const Operator& h) {
  const double scale = std::max(h.max_abs(), 1.0);
  if (h.hermiticity_defect() > 1e-12 * scale)
    throw ConfigError("Hamiltonian is not Hermitian (defect " + std::to_string(h.hermiticity_defect()) + ")");
}

double gershgorin(const SparseCMatrix& m) {
  double w = 0.0;
  for (Eigen::Index r = 0; r < m.outerSize(); ++r) {
    double row = 0.0;
    for (SparseCMatrix::InnerIterator it(m, r); it; ++it) row += std::abs(it.value());
    w = std::max(w, row);
  }
  return w;
}

/// Connected components of the sparsity graph of `m`.
std::vector<std::vector<Eigen::Index>> components(const SparseCMatrix& m) {
  const Eigen::Index n = m.rows();
  std::vector<Eigen::Index> parent(n);
  std::iota(parent.begin(), parent.end(), Eigen::Index{0});
  auto find = [&](Eigen::Index x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (Eigen::Index r = 0; r < m.outerSize(); ++r)
    for (SparseCMatrix::InnerIterator it(m, r); it; ++it) {
      if (it.value() == Complex(0.0, 0.0)) continue;
      const Eigen::Index a = find(it.row()), b = find(it.col());
      if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
  std::vector<std::vector<Eigen::Index>> out;
  std::vector<Eigen::Index> slot(n, -1);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Index root = find(i);
    if (slot[root] < 0) {
      slot[root] = static_cast<Eigen::Index>(out.size());
      out.emplace_back();
    }
    out[slot[root]].push_back(i);
  }
  return out;
}

SparseCMatrix sub_block(const SparseCMatrix& m, const std::vector<Eigen::Index>& index) {
  std::vector<Eigen::Index> local(m.rows(), -1);
  for (std::size_t k = 0; k < index.size(); ++k) local[index[k]] = static_cast<Eigen::Index>(k);
  std::vector<Eigen::Triplet<Complex>> trip;
  for (std::size_t k = 0; k < index.size(); ++k)
    for (SparseCMatrix::InnerIterator it(m, index[k]); it; ++it)
      if (local[it.col()] >= 0) trip.emplace_back(static_cast<Eigen::Index>(k), local[it.col()], it.value());
  const auto size = static_cast<Eigen::Index>(index.size());
  SparseCMatrix out(size, size);
  out.setFromTriplets(trip.begin(), trip.end());
  return out;
}

CVector phases(const RVector& evals, double t) {
  CVector out(evals.size());
  for (Eigen::Index k = 0; k < evals.size(); ++k) out(k) = std::polar(1.0, -evals(k) * t);
  return out;
}

}  // namespace

void IntegratorConfig::validate() const {
  if (!(rtol > 0.0) || !(atol > 0.0)) throw ConfigError("integrator tolerances must be > 0");
  if (max_steps <= 0) throw ConfigError("integrator max_steps must be > 0");
  if (initial_step < 0.0) throw ConfigError("integrator initial_step must be >= 0");
  if (krylov_threshold < 1) throw ConfigError("krylov_threshold must be >= 1");
}

// ---------------------------------------------------------------------------

Propagator::Propagator(const Operator& h, Eigen::Index krylov_threshold, double krylov_tol)
    : h_(h), krylov_tol_(krylov_tol) {
  check_hermitian(h_);
  for (auto& index : components(h_.matrix())) {
    Sector s;
    s.index = std::move(index);
    s.block = sub_block(h_.matrix(), s.index);
    s.krylov = static_cast<Eigen::Index>(s.index.size()) > krylov_threshold;
    if (!s.krylov) {
      Eigen::SelfAdjointEigenSolver<CMatrix> es(CMatrix(s.block));
      s.evals = es.eigenvalues();
      s.evecs = es.eigenvectors();
      s.block.resize(0, 0);
    }
    sectors_.push_back(std::move(s));
  }
}

Eigen::Index Propagator::largest_sector() const {
  Eigen::Index m = 0;
  for (const auto& s : sectors_) m = std::max<Eigen::Index>(m, s.index.size());
  return m;
}

QState Propagator::apply(const QState& psi, double t) const {
  if (!(psi.layout() == h_.layout())) throw ConfigError("state and Hamiltonian layouts differ");
  CVector out(psi.dim());
  for (const auto& s : sectors_) {
    const auto size = static_cast<Eigen::Index>(s.index.size());
    CVector v(size);
    for (Eigen::Index k = 0; k < size; ++k) v(k) = psi.amplitudes()(s.index[k]);
    CVector w;
    if (s.krylov) {
      w = lanczos_expm(s.block, v, t, krylov_tol_);
    } else {
      w = s.evecs * phases(s.evals, t).cwiseProduct(s.evecs.adjoint() * v);
    }
    for (Eigen::Index k = 0; k < size; ++k) out(s.index[k]) = w(k);
  }
  return QState(std::move(out), psi.layout());
}

Operator Propagator::unitary(double t) const {
  std::vector<Eigen::Triplet<Complex>> trip;
  for (const auto& s : sectors_) {
    CMatrix u;
    if (s.krylov) {
      Eigen::SelfAdjointEigenSolver<CMatrix> es(CMatrix(s.block));
      u = es.eigenvectors() * phases(es.eigenvalues(), t).asDiagonal() * es.eigenvectors().adjoint();
    } else {
      u = s.evecs * phases(s.evals, t).asDiagonal() * s.evecs.adjoint();
    }
    for (Eigen::Index r = 0; r < u.rows(); ++r)
      for (Eigen::Index c = 0; c < u.cols(); ++c)
        if (u(r, c) != Complex(0.0, 0.0)) trip.emplace_back(s.index[r], s.index[c], u(r, c));
  }
  SparseCMatrix m(h_.dim(), h_.dim());
  m.setFromTriplets(trip.begin(), trip.end());
  return Operator(std::move(m), h_.layout());
}

Operator propagate_const(const Operator& h, double t) { return Propagator(h).unitary(t); }

QState propagate_const(const Operator& h, const QState& psi, double t, const IntegratorConfig& cfg,
                       EvolutionDiagnostics* diagnostics) {
  cfg.validate();
  Propagator prop(h, cfg.krylov_threshold, cfg.krylov_tol);
  QState out = prop.apply(psi, t);
  if (diagnostics) {
    *diagnostics = {};
    diagnostics->method = prop.largest_sector() > cfg.krylov_threshold ? "krylov" : "eigen";
    diagnostics->norm_drift = std::abs(out.norm() - psi.norm());
    diagnostics->norm_flagged = diagnostics->norm_drift > 1e-6;
    diagnostics->energy_drift = std::abs((expect(h, out) - expect(h, psi)).real());
  }
  return out;
}

// ---------------------------------------------------------------------------

CVector lanczos_expm(const SparseCMatrix& h, const CVector& v, double t, double tol, int max_basis) {
  const double beta0 = v.norm();
  if (beta0 == 0.0 || t == 0.0) return v;
  const Eigen::Index n = h.rows();
  const int m_max = static_cast<int>(std::min<Eigen::Index>(max_basis, n));
  const double norm_h = std::max(gershgorin(h), 1e-300);
  const double total = std::abs(t), sign = t > 0 ? 1.0 : -1.0;

  CVector w = v;
  double done = 0.0;
  double dt = std::min(total, 10.0 / norm_h);
  while (done < total) {
    const double beta = w.norm();
    CMatrix basis(n, m_max + 1);
    std::vector<double> alpha, off;
    basis.col(0) = w / beta;
    int m = m_max;
    bool exact = false;
    for (int j = 0; j < m_max; ++j) {
      CVector u = h * basis.col(j);
      alpha.push_back(basis.col(j).dot(u).real());
      for (int pass = 0; pass < 2; ++pass) u -= basis.leftCols(j + 1) * (basis.leftCols(j + 1).adjoint() * u);
      const double b = u.norm();
      off.push_back(b);
      if (b <= 1e-13 * norm_h || j + 1 == n) {
        m = j + 1;
        exact = true;
        break;
      }
      basis.col(j + 1) = u / b;
    }
    RMatrix tri = RMatrix::Zero(m, m);
    for (int j = 0; j < m; ++j) {
      tri(j, j) = alpha[j];
      if (j + 1 < m) tri(j, j + 1) = tri(j + 1, j) = off[j];
    }
    Eigen::SelfAdjointEigenSolver<RMatrix> es(tri);
    const RVector first = es.eigenvectors().row(0).transpose();
    dt = std::min(dt, total - done);
    CVector y;
    for (;;) {
      CVector coeff(m);
      for (int k = 0; k < m; ++k) coeff(k) = std::polar(first(k), -sign * es.eigenvalues()(k) * dt);
      y = es.eigenvectors().cast<Complex>() * coeff;
      if (exact) {
        dt = total - done;
        for (int k = 0; k < m; ++k) coeff(k) = std::polar(first(k), -sign * es.eigenvalues()(k) * dt);
        y = es.eigenvectors().cast<Complex>() * coeff;
        break;
      }
      const double err = beta * off[m - 1] * std::abs(y(m - 1));
      if (err <= tol * std::max(dt / total, 1e-3) || dt < 1e-14 * total) break;
      dt *= 0.5;
    }
    w = beta * (basis.leftCols(m) * y);
    done += dt;
    dt *= 2.0;
  }
  return w;
}

// ---------------------------------------------------------------------------

TdResult evolve_td(const HamiltonianSpec& h, const QState& psi0, double t0, double t1, const IntegratorConfig& cfg) {
  namespace ode = boost::numeric::odeint;
  cfg.validate();
  if (!(psi0.layout() == h.layout())) throw ConfigError("state and Hamiltonian layouts differ");
  if (!(t1 > t0)) throw ConfigError("evolve_td needs t1 > t0");
  check_hermitian(h.evaluate(t0));

  const Eigen::Index n = psi0.dim();
  const RVector diag = h.constant().diagonal_entries().real();
  SparseCMatrix off = h.constant().matrix();
  off.prune([](Eigen::Index r, Eigen::Index c, const Complex&) { return r != c; });
  const bool has_off = off.nonZeros() > 0;

  struct Term {
    SparseCMatrix a, ad;
    Coefficient c;
  };
  std::vector<Term> terms;
  for (const auto& term : h.terms()) terms.push_back({term.op.matrix(), term.op.adjoint().matrix(), term.coeff});

  Eigen::ArrayXcd frame(n);
  auto set_frame = [&](double t) {
    const Eigen::ArrayXd th = diag.array() * t;
    frame.real() = th.cos();
    frame.imag() = th.sin();
  };
  CVector psi(n), y(n);
  auto rhs = [&](const CVector& phi, CVector& dphi, double t) {
    set_frame(t);
    psi = (phi.array() * frame.conjugate()).matrix();
    if (has_off) y.noalias() = off * psi;
    else y.setZero();
    for (const auto& term : terms) {
      const Complex c = term.c(t);
      y.noalias() += c * (term.a * psi);
      y.noalias() += std::conj(c) * (term.ad * psi);
    }
    dphi.resize(n);
    dphi = (Complex(0.0, -1.0) * (frame * y.array())).matrix();
  };

  std::vector<double> stops;
  if (cfg.dense_output)
    for (double s : cfg.sample_times)
      if (s > t0 && s < t1) stops.push_back(s);
  std::sort(stops.begin(), stops.end());
  stops.erase(std::unique(stops.begin(), stops.end()), stops.end());
  stops.push_back(t1);

  TdResult result;
  EvolutionDiagnostics& diag_out = result.diagnostics;
  diag_out.method = "dopri5";

  set_frame(t0);
  CVector phi = (psi0.amplitudes().array() * frame).matrix();
  CVector dphi(n), out(n), dout(n), err(n);
  rhs(phi, dphi, t0);

  ode::runge_kutta_dopri5<CVector, double, CVector, double, ode::vector_space_algebra> stepper;
  double t = t0;
  double step = cfg.initial_step > 0.0 ? cfg.initial_step : 1.0 / (50.0 * std::max(h.max_frequency(), 1.0 / (t1 - t0)));
  if (cfg.dense_output)
    for (double s : cfg.sample_times)
      if (s == t0) result.samples.push_back(psi0);
  bool last_rejected = false;
  std::size_t stop = 0;
  while (stop < stops.size()) {
    const double target = stops[stop];
    const double h_try = std::min(step, target - t);
    const bool lands = h_try >= target - t;
    stepper.do_step(rhs, phi, dphi, t, out, dout, h_try, err);
    double sum = 0.0;
    for (Eigen::Index k = 0; k < n; ++k) {
      const double scale = cfg.atol + cfg.rtol * std::max(std::abs(phi(k)), std::abs(out(k)));
      const double r = std::abs(err(k)) / scale;
      sum += r * r;
    }
    const double e = std::sqrt(sum / static_cast<double>(n));
    if (diag_out.steps + diag_out.rejected_steps >= cfg.max_steps)
      throw ConvergenceError("evolve_td exhausted " + std::to_string(cfg.max_steps) + " steps at t = " +
                             std::to_string(t));
    if (e <= 1.0) {
      ++diag_out.steps;
      diag_out.max_error_estimate = std::max(diag_out.max_error_estimate, err.cwiseAbs().maxCoeff());
      t = lands ? target : t + h_try;
      phi.swap(out);
      dphi.swap(dout);
      double fac = e == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(e, -0.2), 0.2, 5.0);
      if (last_rejected) fac = std::min(fac, 1.0);
      // A step clipped to land on a stop says nothing about the natural size.
      if (!lands || h_try >= step) step = h_try * fac;
      last_rejected = false;
      if (lands) {
        if (stop + 1 < stops.size()) {
          set_frame(t);
          result.samples.emplace_back(CVector((phi.array() * frame.conjugate()).matrix()), psi0.layout());
        }
        ++stop;
      }
    } else {
      ++diag_out.rejected_steps;
      step = h_try * std::max(0.2, 0.9 * std::pow(e, -0.2));
      last_rejected = true;
    }
  }
  set_frame(t1);
  result.state = QState(CVector((phi.array() * frame.conjugate()).matrix()), psi0.layout());
  if (cfg.dense_output && std::find(cfg.sample_times.begin(), cfg.sample_times.end(), t1) != cfg.sample_times.end())
    result.samples.push_back(result.state);
  diag_out.norm_drift = std::abs(result.state.norm() - psi0.norm());
  diag_out.norm_flagged = diag_out.norm_drift > 1e-6;
  if (h.is_constant())
    diag_out.energy_drift = std::abs((expect(h.constant(), result.state) - expect(h.constant(), psi0)).real());
  return result;
}

}  // namespace cvqpu
