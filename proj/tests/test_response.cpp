#include <cmath>
#include <numbers>

#include "doctest.h"
#include "oracles.hpp"
#include "supercorr/errors.hpp"
#include "supercorr/response.hpp"
#include "supercorr/scf.hpp"

using namespace supercorr;

namespace {

LatticeGeometry geo() { return LatticeGeometry::cubic(4.0); }

const PeriodicSolution& model() {
  static PeriodicSolution s = [] {
    SCFConfig c;
    c.ecut = 4.0;
    c.smooth_from = 0.5;
    c.L = 2;
    c.anderson_depth = 5;
    c.tol = 1e-10;
    SourceDensity mu(SourceKind::periodic_nuclear, {{Vec3::Zero(), 0.4, 5.0}, {Vec3::Zero(), 1.5, -4.0}});
    return solve_periodic(geo(), mu, c);
  }();
  return s;
}

ResponseEngine engine(int P) {
  ResponseOptions o;
  o.bz_P = P;
  return ResponseEngine(model().bands.V0, model().bands.cutoff, 1, model().state.eps_F, o);
}

SourceDensity charged() { return SourceDensity(SourceKind::defect, {{Vec3::Zero(), 0.5, 0.2}}, {}, 2); }

}  // namespace

TEST_CASE("response matrix is Hermitian and positive semidefinite") {
  ResponseEngine e = engine(4);
  for (Vec3 q : {Vec3(0.25, 0, 0), Vec3(0.25, -0.5, 0.25)}) {
    ResponseMatrix R = e.build(q);
    CHECK((R.L - R.L.adjoint()).norm() < 1e-12);
    double lmin = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd>(R.L).eigenvalues().minCoeff();
    CHECK(lmin > -1e-12);
    for (std::size_t i = 0; i < R.modes.size(); ++i)
      CHECK(R.kq_norm[long(i)] == doctest::Approx(geo().recip_cart(R.modes[i].cast<double>() + q).norm()));
  }
}

TEST_CASE("response columns match the finite-field oracle") {
  ResponseEngine e = engine(4);
  // (0, 0, -2)/4 has 2q in the reciprocal lattice, where cos and sin perturbations must be separated.
  for (Vec3i qi : {Vec3i(1, 0, 0), Vec3i(1, -1, 2), Vec3i(0, 0, -2)}) {
    ResponseMatrix R = e.build(qi.cast<double>() / 4);
    for (long j : {0L, long(R.modes.size()) / 2}) {
      Eigen::VectorXcd col = oracle::finite_field_column(*model().bands.V0, model().bands.cutoff, 1, 4, qi,
                                                         R.modes[std::size_t(j)], R.modes);
      CHECK((col - R.L.col(j)).cwiseAbs().maxCoeff() < 1e-6);
    }
  }
}

TEST_CASE("dielectric matrix: Hermitian, at least the identity, scalar for the cubic crystal") {
  DielectricData d = engine(4).dielectric();
  CHECK((d.M_zero - d.M_zero.adjoint()).cwiseAbs().maxCoeff() < 1e-10);
  Eigen::Matrix3cd H = d.M_zero - Eigen::Matrix3cd::Identity();
  CHECK(Eigen::SelfAdjointEigenSolver<Eigen::Matrix3cd>(H).eigenvalues().minCoeff() > -1e-8);
  CHECK(d.isotropic_cubic);
  CHECK(d.epsilon > 1.0);
  CHECK(d.epsilon == doctest::Approx(d.M_zero(1, 1).real()).epsilon(1e-10));
  CHECK(std::abs(d.M_zero(0, 1)) < 1e-6 * d.epsilon);
  CHECK(d.M1_zero.real().trace() > 0);
}

TEST_CASE("b(0) is real and odd in K for an inversion-symmetric crystal") {
  DielectricData d = engine(4).dielectric();
  const auto& m = d.L_zero.modes;
  double scale = d.b_zero.cwiseAbs().maxCoeff();
  REQUIRE(scale > 0);
  for (std::size_t i = 0; i < m.size(); ++i) {
    long j = d.L_zero.find(-m[i]);
    REQUIRE(j >= 0);
    CHECK((d.b_zero.col(long(i)) + d.b_zero.col(j)).cwiseAbs().maxCoeff() < 1e-10 * scale);
    CHECK(d.b_zero.col(long(i)).imag().cwiseAbs().maxCoeff() < 1e-10 * scale);
  }
}

TEST_CASE("quadratic form is positive and bounded by the unscreened form") {
  ResponseEngine e = engine(4);
  Vec3 q(0.25, 0.25, 0);
  ResponseMatrix R = e.build(q);
  Eigen::VectorXcd v = coulomb_weighted_source(geo(), R, charged());
  double F = quadratic_defect_value(e, charged(), q);
  CHECK(F > 0);
  CHECK(F <= v.squaredNorm() + 1e-14);
  CHECK_THROWS_AS(quadratic_defect_value(e, charged(), Vec3::Zero()), ExcludedPointError);
  auto z = zero_block_values(e, {charged()});
  CHECK(z[0] > 0);
}

TEST_CASE("quadratic form scales as the square of the source") {
  ResponseEngine e = engine(4);
  Vec3 q(0.5, 0, 0.25);
  double F1 = quadratic_defect_value(e, charged(), q);
  double F3 = quadratic_defect_value(e, charged().scaled(3.0), q);
  CHECK(F3 == doctest::Approx(9 * F1).epsilon(1e-12));
}

TEST_CASE("symmetry orbits cover the grid and keep the sums unchanged") {
  auto G = invariance_group(geo(), *model().bands.V0, {charged()});
  CHECK(G.size() == 24);
  bool inversion = false;
  for (const auto& S : G) inversion = inversion || S == -Mat3i::Identity();
  CHECK(inversion);
  KGrid grid = kpoint_grid(geo(), 4);
  auto orbits = grid_orbits(grid, G, true);
  int total = 0;
  for (const auto& o : orbits) total += o.weight;
  CHECK(total == 63);
  // The orbit sum equals the plain sum over the grid.
  ResponseEngine e = engine(4);
  double plain = 0, reduced = 0;
  for (std::size_t i = 0; i < grid.size(); ++i)
    if (grid.index[i] != Vec3i::Zero()) plain += quadratic_defect_value(e, charged(), grid.frac(i));
  for (const auto& o : orbits) reduced += o.weight * quadratic_defect_value(e, charged(), grid.frac(o.representative));
  CHECK(reduced == doctest::Approx(plain).epsilon(1e-10));
}

TEST_CASE("supercell sums with and without the zero-mean block differ by that block") {
  SourceDensity nu = charged();
  ResponseOptions with, without;
  without.include_zero_block = false;
  const auto& b = model().bands;
  double a = supercell_riemann_sums(b.V0, b.cutoff, 1, model().state.eps_F, {nu}, 2, with)[0];
  double c = supercell_riemann_sums(b.V0, b.cutoff, 1, model().state.eps_F, {nu}, 2, without)[0];
  ResponseOptions o;
  o.bz_P = 2;
  ResponseEngine e2(b.V0, b.cutoff, 1, model().state.eps_F, o);
  CHECK(a - c == doctest::Approx(zero_block_values(e2, {nu})[0] / 8).epsilon(1e-10));
}
