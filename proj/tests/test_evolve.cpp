#include "doctest.h"
#include "helpers.hpp"

#include "cvqpu/evolve.hpp"
#include "cvqpu/metrics.hpp"

using namespace cvqpu;
using namespace testing;

namespace {

SubsystemLayout qubit_layout() { return SubsystemLayout::single("F", 2); }

/// Resonantly driven qubit: (w/2) sz + W (e^{-iwt} sigma_+ + h.c.).
HamiltonianSpec driven_qubit(double w, double rabi) {
  HamiltonianSpec h((0.5 * w) * qubit_op(QubitOpKind::sz, "F"));
  h.add_rotating_pair(qubit_op(QubitOpKind::raise, "F"), [=](double t) { return rabi * std::exp(-kI * (w * t)); }, w);
  return h;
}

QState coherent_jc(int n) {
  const SubsystemLayout l({{"M", n}, {"R", 2}});
  return make_state({FactorSpec::coherent(1.5), FactorSpec::ground()}, l).state;
}

Operator jc(int n) {
  const SubsystemLayout l({{"M", n}, {"R", 2}});
  return 1.0 * on(LadderKind::number, l, "M") + 0.45 * on(QubitOpKind::sz, l, "R") +
         0.05 * (on(LadderKind::annihilate, l, "M") * on(QubitOpKind::raise, l, "R") +
                 on(LadderKind::create, l, "M") * on(QubitOpKind::lower, l, "R"));
}

}  // namespace

TEST_SUITE("evolve") {
  TEST_CASE("closed-form propagators") {
    SUBCASE("zero Hamiltonian") {
      const SubsystemLayout l({{"M", 6}, {"F", 2}});
      CHECK(max_abs(propagate_const(Operator::zero(l), 3.7).dense() - CMatrix::Identity(12, 12)) < 1e-15);
    }
    SUBCASE("full period of a harmonic mode") {
      const double w = 2.5e9;
      const Operator u = propagate_const(w * ladder(LadderKind::number, 10), 2 * kPi / w);
      CHECK(max_abs(u.dense() - CMatrix::Identity(10, 10)) < 1e-9);
    }
    SUBCASE("Rabi flip") {
      const double w = 3e7;
      const QState g(factor_vector(FactorSpec::ground(), 2), qubit_layout());
      const QState out = propagate_const(w * qubit_op(QubitOpKind::sx, "F"), g, kPi / (2 * w));
      CHECK(std::abs(out.amplitudes()(0)) < 1e-12);
      CHECK(std::abs(out.amplitudes()(1) - (-kI)) < 1e-12);
    }
    SUBCASE("non-Hermitian input") {
      CHECK_THROWS_AS(propagate_const(qubit_op(QubitOpKind::raise, "F"), 1.0), ConfigError);
      const HamiltonianSpec h(qubit_op(QubitOpKind::raise, "F"));
      const QState g(factor_vector(FactorSpec::ground(), 2), qubit_layout());
      CHECK_THROWS_AS(evolve_td(h, g, 0.0, 1.0), ConfigError);
    }
  }

  TEST_CASE("eigenstates only acquire a phase") {
    const Operator h = jc(12);
    Eigen::SelfAdjointEigenSolver<CMatrix> es(h.dense());
    const QState v(es.eigenvectors().col(5), h.layout());
    const QState out = propagate_const(h, v, 17.3);
    CHECK(std::abs(std::abs(out.amplitudes().dot(v.amplitudes())) - 1.0) < 1e-12);
  }

  TEST_CASE("adaptive integrator agrees with exact propagation") {
    const Operator h = jc(24);
    const QState psi = coherent_jc(24);
    const double t1 = 40.0;
    const QState exact = propagate_const(h, psi, t1);
    const TdResult td = evolve_td(HamiltonianSpec(h), psi, 0.0, t1);
    CHECK(fidelity(exact, td.state) >= 1 - 1e-9);
    CHECK(td.diagnostics.norm_drift < 1e-7);
    CHECK(td.diagnostics.energy_drift < 1e-7 * h.max_abs());
    CHECK(td.diagnostics.method == "dopri5");
    CHECK_FALSE(td.diagnostics.norm_flagged);
  }

  TEST_CASE("resonant drive against the rotating-frame solution") {
    const double w = 2e9, rabi = 4e7;
    const HamiltonianSpec h = driven_qubit(w, rabi);
    const QState g(factor_vector(FactorSpec::ground(), 2), qubit_layout());
    for (double t : {1e-8, 2.7e-8, kPi / (4 * rabi)}) {
      const TdResult r = evolve_td(h, g, 0.0, t);
      const double pe = std::norm(r.state.amplitudes()(1));
      CHECK(std::abs(pe - std::pow(std::sin(rabi * t), 2)) < 1e-6);
    }
  }

  TEST_CASE("dense output lands on sample times") {
    const double w = 2e9, rabi = 4e7;
    IntegratorConfig cfg;
    cfg.dense_output = true;
    cfg.sample_times = {0.0, 1e-8, 2e-8, 3e-8};
    const QState g(factor_vector(FactorSpec::ground(), 2), qubit_layout());
    const TdResult r = evolve_td(driven_qubit(w, rabi), g, 0.0, 3e-8, cfg);
    REQUIRE(r.samples.size() == 4);
    for (std::size_t k = 0; k < 4; ++k)
      CHECK(std::abs(std::norm(r.samples[k].amplitudes()(1)) - std::pow(std::sin(rabi * cfg.sample_times[k]), 2)) <
            1e-6);
  }

  TEST_CASE("tolerance self-convergence") {
    const double w = 2e9, rabi = 4e7, t1 = 5e-8;
    const QState psi(CVector::Constant(2, Complex(1 / std::sqrt(2.0), 0)), qubit_layout());
    QState prev;
    double prev_gap = 1.0;
    for (double rtol : {1e-6, 1e-8, 1e-10}) {
      IntegratorConfig cfg;
      cfg.rtol = rtol;
      cfg.atol = rtol * 1e-3;
      const QState s = evolve_td(driven_qubit(w, rabi), psi, 0.0, t1, cfg).state;
      if (prev.dim() > 0) {
        const double gap = (s.amplitudes() - prev.amplitudes()).norm();
        CHECK(gap <= prev_gap);
        prev_gap = gap;
      }
      prev = s;
    }
    CHECK(prev_gap < 1e-6);
  }

  TEST_CASE("time reversal returns the initial state") {
    const double w = 2e9, rabi = 4e7, t1 = 3.3e-8;
    const HamiltonianSpec fwd = driven_qubit(w, rabi);
    HamiltonianSpec back((-0.5 * w) * qubit_op(QubitOpKind::sz, "F"));
    back.add_rotating_pair(qubit_op(QubitOpKind::raise, "F"),
                           [=](double s) { return -rabi * std::exp(-kI * (w * (t1 - s))); }, w);
    const QState psi(CVector::Constant(2, Complex(1 / std::sqrt(2.0), 0)), qubit_layout());
    const QState mid = evolve_td(fwd, psi, 0.0, t1).state;
    const QState end = evolve_td(back, mid, 0.0, t1).state;
    CHECK((end.amplitudes() - psi.amplitudes()).norm() < 1e-7);
  }

  TEST_CASE("Lanczos matches the dense path") {
    const Operator h = jc(40);
    const QState psi = coherent_jc(40);
    const CVector k = lanczos_expm(h.matrix(), psi.amplitudes(), 25.0, 1e-12);
    const CVector d = propagate_const(h, 25.0).dense() * psi.amplitudes();
    CHECK((k - d).norm() < 1e-9);
    IntegratorConfig cfg;
    cfg.krylov_threshold = 1;
    EvolutionDiagnostics diag;
    const QState viak = propagate_const(h, psi, 25.0, cfg, &diag);
    CHECK(diag.method == "krylov");
    CHECK((viak.amplitudes() - d).norm() < 1e-9);
  }

  TEST_CASE("propagator sectors") {
    const Operator h = jc(10);
    const Propagator p(h);
    // The exchange conserves n + |e><e|: sectors {|0g>}, {|n,e>,|n+1,g>} and the top |9,e>.
    CHECK(p.sector_count() == 11);
    CHECK(p.largest_sector() == 2);
    CHECK(unitarity_defect(p.unitary(4.0)) < 1e-12);
  }

  TEST_CASE("integrator config validation") {
    IntegratorConfig cfg;
    cfg.rtol = -1;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    const QState g(factor_vector(FactorSpec::ground(), 2), qubit_layout());
    CHECK_THROWS_AS(evolve_td(driven_qubit(1.0, 1.0), g, 1.0, 0.5), ConfigError);
    IntegratorConfig few;
    few.max_steps = 3;
    CHECK_THROWS_AS(evolve_td(driven_qubit(2e9, 4e7), g, 0.0, 1e-7, few), ConvergenceError);
  }
}
