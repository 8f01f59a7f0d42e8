#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "doctest.h"
#include "supercorr/bands.hpp"
#include "supercorr/errors.hpp"
#include "supercorr/scf.hpp"

using namespace supercorr;

namespace {

LatticeGeometry geo() { return LatticeGeometry::cubic(4.0); }

// Insulating model crystal with one electron per cell.
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

PeriodicField zero_potential() { return PeriodicField(std::make_shared<PlaneWaveBasis>(geo(), 1, 16.0)); }

}  // namespace

TEST_CASE("smooth kinetic symbol: exact below the edge, increasing, slope consistent") {
  Cutoff c(4.0, 0.5);
  CHECK(c.kinetic(1.5) == 1.5);
  CHECK(c.kinetic(2.0) == 2.0);
  CHECK(c.kinetic(4.0) == doctest::Approx(4.0 * Cutoff::kinetic_cap).epsilon(1e-12));
  double prev = 0;
  for (double x = 0; x <= 4.0; x += 0.01) {
    CHECK(c.kinetic(x) >= prev);
    prev = c.kinetic(x);
  }
  for (double x : {2.3, 2.9, 3.4}) {
    double h = 1e-6;
    double fd = (c.kinetic(x + h) - c.kinetic(x - h)) / (2 * h);
    CHECK(c.kinetic_slope(x) == doctest::Approx(fd).epsilon(1e-5));
  }
  Cutoff sharp(4.0, 1.0);
  CHECK(sharp.kinetic(3.99) == 3.99);
  CHECK(sharp.kinetic_slope(3.0) == 1.0);
}

TEST_CASE("fiber basis holds the plane waves inside the cutoff sphere") {
  Vec3 q(0.2, -0.1, 0.4);
  FiberBasis b = make_fiber_basis(geo(), q, Cutoff(4.0));
  for (std::size_t i = 0; i < b.size(); ++i) {
    CHECK(0.5 * b.kvec.row(long(i)).squaredNorm() <= 4.0 + 1e-12);
    CHECK(b.find(b.G[i]) == long(i));
  }
  // Count by brute force.
  int count = 0;
  for (int i = -6; i <= 6; ++i)
    for (int j = -6; j <= 6; ++j)
      for (int k = -6; k <= 6; ++k)
        if (0.5 * geo().recip_cart(Vec3(i, j, k) + q).squaredNorm() <= 4.0) ++count;
  CHECK(int(b.size()) == count);
}

TEST_CASE("free fibers: the spectrum is the sorted kinetic symbol") {
  PeriodicField V = zero_potential();
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  for (const Cutoff& c : {Cutoff(4.0, 1.0), Cutoff(4.0, 0.5)})
    for (int s = 0; s < 5; ++s) {
      BlochFiber f = diagonalize_fiber(V, Vec3(u(rng), u(rng), u(rng)), c);
      std::vector<double> T(f.basis.kinetic.data(), f.basis.kinetic.data() + f.basis.kinetic.size());
      std::sort(T.begin(), T.end());
      for (std::size_t i = 0; i < T.size(); ++i) CHECK(std::abs(f.eps[long(i)] - T[i]) <= 1e-12 * std::max(1.0, T[i]));
    }
}

TEST_CASE("time reversal: eps(q) = eps(-q) on random points") {
  const PeriodicField& V0 = *model().bands.V0;
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  for (int s = 0; s < 6; ++s) {
    Vec3 q(u(rng), u(rng), u(rng));
    BlochFiber a = diagonalize_fiber(V0, q, model().bands.cutoff);
    BlochFiber b = diagonalize_fiber(V0, -q, model().bands.cutoff);
    REQUIRE(a.eps.size() == b.eps.size());
    for (long i = 0; i < a.eps.size(); ++i) CHECK(std::abs(a.eps[i] - b.eps[i]) <= 1e-10 * std::max(1.0, std::abs(a.eps[i])));
  }
}

TEST_CASE("eigenpairs satisfy the fiber equation and are orthonormal") {
  const PeriodicField& V0 = *model().bands.V0;
  BlochFiber f = diagonalize_fiber(V0, Vec3(0.1, 0.2, -0.3), Cutoff(4.0, 1.0), true);
  Eigen::MatrixXcd H = assemble_fiber(V0, f.basis);
  CHECK((H - H.adjoint()).norm() < 1e-13);
  CHECK((H * f.u - f.u * f.eps.asDiagonal()).norm() < 1e-10);
  CHECK((f.u.adjoint() * f.u - Eigen::MatrixXcd::Identity(f.u.cols(), f.u.cols())).norm() < 1e-12);
}

TEST_CASE("Fermi level sits midgap for the insulating model") {
  const FermiData& fd = model().bands.fermi;
  CHECK(fd.N == 1);
  CHECK(fd.gap > 0.5);
  CHECK(fd.lumo - fd.homo == doctest::Approx(fd.gap));
  CHECK(fd.eps_F == doctest::Approx(0.5 * (fd.homo + fd.lumo)));
  for (const auto& f : model().bands.fibers) {
    CHECK(f->eps[0] < fd.eps_F);
    CHECK(f->eps[1] > fd.eps_F);
  }
}

TEST_CASE("free electrons with one electron per cell are metallic") {
  auto V = std::make_shared<const PeriodicField>(zero_potential());
  BandStructure b = diagonalize_grid(V, kpoint_grid(geo(), 2), Cutoff(4.0));
  CHECK_THROWS_AS(find_fermi(b, 1), MetallicSystemError);
}

TEST_CASE("fiber cache folds q and returns shared fibers") {
  FiberCache cache(model().bands.V0, model().bands.cutoff);
  auto a = cache.get(Vec3(0.25, 0, 0));
  auto b = cache.get(Vec3(1.25, -1, 2));
  CHECK(a.get() == b.get());
  CHECK(cache.size() == 1);
  CHECK(cache.get(Vec3(0.5, 0, 0)).get() == cache.get(Vec3(-0.5, 0, 0)).get());
}

TEST_CASE("band CSV is deterministic") {
  std::ostringstream a, b;
  write_bands_csv(model().bands, a);
  write_bands_csv(model().bands, b);
  CHECK(a.str() == b.str());
  CHECK(a.str().find('\n') != std::string::npos);
}
