#include <cmath>

#include "doctest.h"
#include "supercorr/errors.hpp"
#include "supercorr/mixing.hpp"
#include "supercorr/scf.hpp"

using namespace supercorr;

namespace {

LatticeGeometry geo() { return LatticeGeometry::cubic(4.0); }
SourceDensity mu() {
  return SourceDensity(SourceKind::periodic_nuclear, {{Vec3::Zero(), 0.4, 5.0}, {Vec3::Zero(), 1.5, -4.0}});
}
SourceDensity nu(double q) { return SourceDensity(SourceKind::defect, {{Vec3::Zero(), 0.5, q}}, {}, 2); }

SCFConfig config(int L) {
  SCFConfig c;
  c.ecut = 4.0;
  c.smooth_from = 0.5;
  c.L = L;
  c.anderson_depth = 5;
  c.tol = 1e-10;
  return c;
}

const PeriodicSolution& periodic2() {
  static PeriodicSolution s = solve_periodic(geo(), mu(), config(2));
  return s;
}

}  // namespace

TEST_CASE("electron count follows the nuclear charge") {
  CHECK(electron_count(mu()) == 1);
  SourceDensity frac(SourceKind::periodic_nuclear, {{Vec3::Zero(), 0.4, 1.5}});
  CHECK_THROWS_AS(electron_count(frac), ConfigError);
}

TEST_CASE("SCF configuration validation") {
  SCFConfig c = config(2);
  CHECK_NOTHROW(c.validate());
  c.alpha = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = config(2);
  c.smooth_from = 1.5;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = config(0);
  CHECK_THROWS_AS(c.validate(), InvalidSizeError);
}

TEST_CASE("periodic ground state: converged, neutral, energy decomposition") {
  const GroundState& s = periodic2().state;
  CHECK(s.converged);
  CHECK(s.occupied == 8);
  CHECK(s.trace.back().residual < 1e-10);
  CHECK(s.rho.integral().real() == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(s.rho.is_real(1e-10));
  CHECK(s.energy == doctest::Approx(s.kinetic + s.coulomb + s.fermi_term).epsilon(1e-12));
  CHECK(s.gap > 0.5);
  CHECK(std::abs(s.V.mean_coeff()) < 1e-14);
  // Midgap Fermi level: the closest eigenvalue is half a gap away.
  CHECK(s.margin == doctest::Approx(0.5 * s.gap).epsilon(1e-8));
}

TEST_CASE("nu = 0 gives a vanishing defect energy and the same occupation") {
  GroundState d = solve_defect(geo(), mu(), nu(0.0), periodic2(), config(2));
  DefectEnergy e = defect_energy(periodic2(), d);
  CHECK(std::abs(e.J) < 1e-10);
  CHECK(e.occupied_defect == e.occupied_periodic);
}

TEST_CASE("small charged defect: charge identity, margins and quadratic scaling") {
  double lin[2], quad[2];
  double t[2] = {0.05, 0.1};
  for (int i = 0; i < 2; ++i) {
    GroundState d = solve_defect(geo(), mu(), nu(t[i]), periodic2(), config(2));
    REQUIRE(d.converged);
    DefectEnergy e = defect_energy(periodic2(), d);
    CHECK(e.occupied_defect == e.occupied_periodic);
    for (const auto& it : d.trace) CHECK(it.margin >= 0.25 * periodic2().state.gap);
    lin[i] = linear_defect_term(periodic2().state.V, nu(t[i]), 2);
    quad[i] = e.J - lin[i];
  }
  CHECK(lin[1] == doctest::Approx(2 * lin[0]).epsilon(1e-12));
  CHECK(quad[1] / quad[0] == doctest::Approx(4.0).epsilon(0.05));
}

TEST_CASE("linear term is minus the overlap of V0 and nu") {
  const PeriodicField& V = periodic2().state.V;
  PeriodicField n = nu(0.3).periodize(V.basis);
  double direct = -V.coeffs.dot(n.coeffs).real();
  CHECK(linear_defect_term(V, nu(0.3), 1) == doctest::Approx(direct).epsilon(1e-12));
}

TEST_CASE("defect larger than the supercell is rejected") {
  CHECK_THROWS_AS(solve_defect(geo(), mu(), SourceDensity(SourceKind::defect, {{Vec3::Zero(), 0.5, 0.1}}, {}, 3),
                               periodic2(), config(2)),
                  ConfigError);
}

TEST_CASE("state dump carries energies and the trace") {
  nlohmann::json j = state_to_json(periodic2().state);
  CHECK(j.at("L") == 2);
  CHECK(j.contains("energy"));
  CHECK(j.at("trace").size() == periodic2().state.trace.size());
}

TEST_CASE("Anderson mixing solves a linear fixed point; depth 0 is linear mixing") {
  Eigen::MatrixXd A(3, 3);
  A << 0.5, 0.1, 0.0, 0.0, 0.3, 0.2, 0.1, 0.0, 0.4;
  Eigen::VectorXd b(3);
  b << 1.0, -2.0, 0.5;
  Eigen::VectorXd exact = (Eigen::MatrixXd::Identity(3, 3) - A).lu().solve(b);
  AndersonMixer m(0.5, 3);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(3);
  for (int i = 0; i < 30; ++i) x = m.next(x, A * x + b);
  CHECK((x - exact).norm() < 1e-10);

  AndersonMixer lin(0.3, 0);
  Eigen::VectorXd y = Eigen::VectorXd::Ones(3), f = A * y + b;
  CHECK((lin.next(y, f) - (y + 0.3 * (f - y))).norm() < 1e-15);
  Eigen::VectorXcd z(2);
  z << cplx(1, 2), cplx(-3, 0.5);
  CHECK((unpack_complex(pack_real(z)) - z).norm() == 0.0);
}
