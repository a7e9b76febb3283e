#include <cstdio>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "helpers.hpp"
#include "json.hpp"

#include "cvqpu/gates.hpp"
#include "cvqpu/metrics.hpp"

using namespace cvqpu;
using namespace testing;

namespace {

DensityMatrix mode_state(const CVector& v) { return DensityMatrix::pure(QState(v.normalized(), SubsystemLayout::single("M", static_cast<int>(v.size())))); }

/// Analytic Wigner function of a coherent state in the same units.
double coherent_wigner(Complex alpha, double x, double p) {
  const double x0 = std::sqrt(2.0) * alpha.real(), p0 = std::sqrt(2.0) * alpha.imag();
  return std::exp(-(x - x0) * (x - x0) - (p - p0) * (p - p0)) / kPi;
}

}  // namespace

TEST_SUITE("metrics") {
  TEST_CASE("partial trace") {
    const SubsystemLayout l({{"M", 4}, {"F", 2}});
    SUBCASE("product state keeps a pure factor") {
      const PreparedState s = make_state({FactorSpec::fock(2), FactorSpec::plus()}, l);
      const DensityMatrix m = partial_trace(s.state, {"M"});
      CHECK(m.layout() == SubsystemLayout::single("M", 4));
      CHECK(m.is_pure());
      CHECK(std::abs(m.matrix()(2, 2) - 1.0) < 1e-14);
      const DensityMatrix f = partial_trace(s.state, {"F"});
      CHECK(std::abs(f.matrix()(0, 1) - 0.5) < 1e-14);
    }
    SUBCASE("entangled state reduces to the maximally mixed state") {
      CVector v = CVector::Zero(8);
      v(0 * 2 + 1) = v(1 * 2 + 0) = 1 / std::sqrt(2.0);
      const DensityMatrix f = partial_trace(QState(v, l), {"F"});
      CHECK(max_abs(f.matrix() - 0.5 * CMatrix::Identity(2, 2)) < 1e-14);
      CHECK(f.purity() == doctest::Approx(0.5));
      f.validate();
    }
    SUBCASE("order of keep and nested traces") {
      const SubsystemLayout l3({{"M1", 3}, {"M2", 3}, {"B", 2}});
      const PreparedState s = make_state({FactorSpec::coherent(0.5), FactorSpec::fock(1), FactorSpec::excited()}, l3);
      const DensityMatrix a = partial_trace(s.state, {"B", "M1"});
      CHECK(a.layout().slots()[0].label == "M1");
      const DensityMatrix b = partial_trace(partial_trace(s.state, {"M1", "B"}), {"M1"});
      CHECK(max_abs(b.matrix() - partial_trace(s.state, {"M1"}).matrix()) < 1e-14);
      CHECK_THROWS_AS(partial_trace(s.state, {"X"}), ConfigError);
      CHECK_THROWS_AS(partial_trace(s.state, {}), ConfigError);
    }
  }

  TEST_CASE("fidelity") {
    const int n = 40;
    const DensityMatrix c2 = mode_state(coherent_amplitudes(2.0, n));
    const DensityMatrix vac = mode_state(factor_vector(FactorSpec::fock(0), n));
    CHECK(fidelity(c2, c2) == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(fidelity(c2, vac) == doctest::Approx(std::exp(-4.0)).epsilon(1e-8));
    CHECK(fidelity(vac, c2) == doctest::Approx(fidelity(c2, vac)).epsilon(1e-10));
    // Mixed states: fidelity with itself is one, and it is symmetric.
    const DensityMatrix mix(0.5 * (c2.matrix() + vac.matrix()), c2.layout());
    const DensityMatrix mix2(0.3 * c2.matrix() + 0.7 * mode_state(factor_vector(FactorSpec::fock(1), n)).matrix(),
                             c2.layout());
    CHECK(fidelity(mix, mix) == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(fidelity(mix, mix2) == doctest::Approx(fidelity(mix2, mix)).epsilon(1e-8));
    // Unitary invariance.
    const CMatrix u = ideal_gate(GateSpec::displacement(Complex(0.3, -0.2)), n).dense();
    const DensityMatrix umix(u * mix.matrix() * u.adjoint(), c2.layout());
    const DensityMatrix umix2(u * mix2.matrix() * u.adjoint(), c2.layout());
    CHECK(fidelity(umix, umix2) == doctest::Approx(fidelity(mix, mix2)).epsilon(1e-8));
    // Pure-state forms agree with the general one.
    CHECK(fidelity(coherent_amplitudes(2.0, n), vac) == doctest::Approx(std::exp(-4.0)).epsilon(1e-8));
    const QState a(coherent_amplitudes(1.0, n), c2.layout()), b(coherent_amplitudes(Complex(0, 1), n), c2.layout());
    CHECK(fidelity(a, b) == doctest::Approx(std::exp(-2.0)).epsilon(1e-8));
  }

  TEST_CASE("density matrix validation") {
    const SubsystemLayout q = SubsystemLayout::single("F", 2);
    CMatrix bad(2, 2);
    bad << 1.2, 0, 0, -0.2;
    CHECK_THROWS_AS(DensityMatrix(bad, q).validate(), ConfigError);
    bad << 0.5, 0.1, 0.3, 0.5;
    CHECK_THROWS_AS(DensityMatrix(bad, q).validate(), ConfigError);
  }

  TEST_CASE("Wigner function") {
    const int n = 40;
    WignerGridSpec spec;
    spec.nx = spec.np = 81;
    spec.x_min = spec.p_min = -6;
    spec.x_max = spec.p_max = 6;
    SUBCASE("vacuum") {
      WignerGridSpec one;
      one.x_min = one.x_max = one.p_min = one.p_max = 0.0;
      one.nx = one.np = 1;
      const WignerGrid w = wigner(mode_state(factor_vector(FactorSpec::fock(0), n)), one);
      CHECK(w.w(0, 0) == doctest::Approx(1 / kPi).epsilon(1e-12));
    }
    SUBCASE("coherent state against the Gaussian") {
      const Complex alpha(2.0, 0.5);
      const WignerGrid w = wigner(mode_state(coherent_amplitudes(alpha, n)), spec);
      double err = 0.0;
      for (int i = 0; i < spec.nx; ++i)
        for (int j = 0; j < spec.np; ++j) err = std::max(err, std::abs(w.w(i, j) - coherent_wigner(alpha, w.x(i), w.p(j))));
      CHECK(err < 1e-8);
      CHECK(w.integral() == doctest::Approx(1.0).epsilon(2e-3));
      const auto [x, p] = w.argmax();
      CHECK(std::abs(x - std::sqrt(2.0) * 2.0) <= 0.15);
      CHECK(std::abs(p - std::sqrt(2.0) * 0.5) <= 0.15);
    }
    SUBCASE("odd cat is negative at the origin") {
      const CVector cat = coherent_amplitudes(2.0, n) - coherent_amplitudes(-2.0, n);
      const WignerGrid w = wigner(mode_state(cat), spec);
      CHECK(w.min() < -0.05);
      CHECK(w.w(40, 40) == doctest::Approx(-1 / kPi).epsilon(1e-8));
    }
    SUBCASE("multi-slot input") {
      const SubsystemLayout l({{"M", 4}, {"F", 2}});
      CHECK_THROWS_AS(wigner(DensityMatrix::pure(make_state({FactorSpec::fock(0), FactorSpec::ground()}, l).state)),
                      ConfigError);
    }
  }

  TEST_CASE("photon statistics") {
    const SubsystemLayout l({{"M1", 8}, {"M2", 8}, {"B", 2}});
    const PhotonStats s =
        photon_stats(DensityMatrix::pure(make_state({FactorSpec::fock(3), FactorSpec::fock(0), FactorSpec::ground()}, l).state));
    REQUIRE(s.modes.size() == 2);
    CHECK(s.mean[0] == doctest::Approx(3.0));
    CHECK(s.mean[1] == doctest::Approx(0.0));
    CHECK(s.edge_population[0] < 1e-14);
    CHECK(s.purity == doctest::Approx(1.0));

    const int n = 160;
    const CVector sq = ideal_gate(GateSpec::squeeze(1.7), n).dense() * factor_vector(FactorSpec::fock(0), n);
    const PhotonStats ss = photon_stats(mode_state(sq));
    CHECK(ss.mean[0] == doctest::Approx(std::pow(std::sinh(1.7), 2)).epsilon(1e-2));
    CHECK(ss.mean[0] == doctest::Approx(7.00).epsilon(1e-2));

    const RVector tot = total_photon_number(l);
    CHECK(tot(((3 * 8) + 2) * 2 + 1) == 5.0);
  }

  TEST_CASE("best-fit coherent amplitude") {
    const Complex beta(1.2, -0.7);
    const Complex fit = best_fit_coherent(mode_state(coherent_amplitudes(beta, 30)));
    CHECK(std::abs(fit - beta) < 1e-5);
  }

  TEST_CASE("golden-section search") {
    const double x = golden_section_max([](double v) { return -(v - 1.3) * (v - 1.3); }, -2.0, 4.0, 1e-9);
    CHECK(x == doctest::Approx(1.3).epsilon(1e-8));
    const double edge = golden_section_max([](double v) { return v; }, 0.0, 1.0, 1e-9);
    CHECK(edge == doctest::Approx(1.0).epsilon(1e-6));
  }

  TEST_CASE("Wigner output files") {
    const auto dir = std::filesystem::temp_directory_path() / "cvqpu_metrics_test";
    std::filesystem::create_directories(dir);
    WignerGridSpec spec;
    spec.nx = 5;
    spec.np = 3;
    const WignerGrid w = wigner(mode_state(coherent_amplitudes(1.0, 20)), spec);
    write_wigner_csv(w, (dir / "w.csv").string());
    std::ifstream csv(dir / "w.csv");
    std::string line;
    int lines = 0;
    std::getline(csv, line);
    CHECK(line == "x,p,w");
    while (std::getline(csv, line)) ++lines;
    CHECK(lines == 15);
    write_wigner_json(w, (dir / "w.json").string());
    std::ifstream js(dir / "w.json");
    const auto j = nlohmann::json::parse(js);
    CHECK(j["x"].size() == 5);
    CHECK(j["w"][0].size() == 3);
    CHECK(j["w"][2][1].get<double>() == doctest::Approx(w.w(2, 1)));
    CHECK_THROWS_AS(write_wigner_csv(w, (dir / "missing" / "w.csv").string()), IoError);
    std::filesystem::remove_all(dir);
  }
}
