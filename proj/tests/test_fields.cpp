#include <cmath>
#include <numbers>

#include "doctest.h"
#include "supercorr/errors.hpp"
#include "supercorr/fields.hpp"
#include "supercorr/sources.hpp"

using namespace supercorr;
using std::numbers::pi;

namespace {

BasisPtr basis(double a, int L, double ecut) {
  return std::make_shared<PlaneWaveBasis>(LatticeGeometry::cubic(a), L, ecut);
}

SourceDensity gaussian(double sigma, double w, Vec3 c = Vec3::Zero(), SourceKind k = SourceKind::defect) {
  return SourceDensity(k, {{c, sigma, w}});
}

}  // namespace

TEST_CASE("plane-wave sphere is inversion symmetric and indexed") {
  auto b = basis(3.0, 2, 6.0);
  REQUIRE(b->size() > 1);
  for (std::size_t i = 0; i < b->size(); ++i) {
    CHECK(b->k2(i) / 2 <= 6.0 + 1e-12);
    long j = b->find(-b->index(i));
    REQUIRE(j >= 0);
    CHECK((b->k(std::size_t(j)) + b->k(i)).norm() < 1e-12);
    CHECK(b->find(b->index(i)) == long(i));
  }
  CHECK(b->k2(b->zero_index()) == 0.0);
  CHECK(b->find(Vec3i(1000, 0, 0)) == -1);
  CHECK(b->volume() == doctest::Approx(27.0 * 8));
}

TEST_CASE("periodized Gaussian has its charge as integral and is real") {
  auto b = basis(4.0, 1, 20.0);
  PeriodicField f = gaussian(0.6, 0.7).periodize(b);
  CHECK(f.integral().real() == doctest::Approx(0.7).epsilon(1e-12));
  CHECK(f.is_real());
  PeriodicField g(b, cplx(0, 1) * f.coeffs);
  CHECK_THROWS_AS(g.check_real(), DomainError);
}

TEST_CASE("periodic sources repeat once per unit cell on a supercell") {
  SourceDensity mu = gaussian(0.5, 2.0, Vec3::Zero(), SourceKind::periodic_nuclear);
  for (int L : {1, 2, 3}) {
    PeriodicField f = mu.periodize(basis(3.0, L, 8.0));
    CHECK(f.integral().real() == doctest::Approx(2.0 * L * L * L).epsilon(1e-12));
    // Values agree with the unit-cell periodization at any point.
    PeriodicField u = mu.periodize(basis(3.0, 1, 8.0));
    Vec3 x(0.7, -0.3, 1.1);
    CHECK(std::abs(f.value_at(x) - u.value_at(x)) < 1e-10);
  }
  SourceDensity nu = gaussian(0.5, 2.0);
  CHECK(nu.periodize(basis(3.0, 2, 8.0)).integral().real() == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("point values match the sum of Gaussian images") {
  double a = 3.0, s = 0.7;
  auto b = basis(a, 1, 80.0);
  PeriodicField f = gaussian(s, 1.0).periodize(b);
  Vec3 x(0.4, 1.2, -0.9);
  double direct = 0;
  for (int i = -3; i <= 3; ++i)
    for (int j = -3; j <= 3; ++j)
      for (int k = -3; k <= 3; ++k) {
        Vec3 y = x - a * Vec3(i, j, k);
        direct += std::exp(-y.squaredNorm() / (2 * s * s));
      }
  direct /= std::pow(2 * pi * s * s, 1.5);
  CHECK(f.value_at(x).real() == doctest::Approx(direct).epsilon(1e-10));
}

TEST_CASE("Coulomb form, Green convolution and square root agree") {
  auto b = basis(3.0, 1, 12.0);
  PeriodicField f = gaussian(0.5, 1.0).periodize(b) - gaussian(0.8, 1.0, Vec3(0.1, 0, 0)).periodize(b);
  PeriodicField g = gaussian(0.4, 1.0, Vec3(0, 0.2, 0)).periodize(b) - gaussian(0.9, 1.0).periodize(b);
  double d = coulomb_form(f, g);
  CHECK(d == doctest::Approx(coulomb_form(g, f)).epsilon(1e-13));
  CHECK(d == doctest::Approx(f.coeffs.dot(green_convolve(g).coeffs).real()).epsilon(1e-12));
  CHECK(coulomb_form(f, f) == doctest::Approx(sqrt_vc_apply(f).coeffs.squaredNorm()).epsilon(1e-12));
  CHECK(coulomb_form(f, f) > 0);
  CoulombNorms n = coulomb_norms(f);
  CHECK(n.coulomb == doctest::Approx(std::sqrt(coulomb_form(f, f))));
}

TEST_CASE("Coulomb energy of two Gaussians in a large cell approaches the free-space value") {
  // Neutral pair: free-space energy is finite and the periodic images are dipole-free.
  double a = 14.0, s1 = 0.5, s2 = 1.0;
  auto b = basis(a, 1, 12.0);
  PeriodicField f = gaussian(s1, 1.0).periodize(b) - gaussian(s2, 1.0).periodize(b);
  // D = sum_ij w_i w_j / sqrt(pi (s_i^2 + s_j^2)/2) * sqrt(2)... written as 2 / sqrt(2 pi (s_i^2 + s_j^2)) * sqrt(pi)...
  auto pair = [](double x, double y) { return std::sqrt(2.0 / pi) / std::sqrt(x * x + y * y); };
  double free_space = pair(s1, s1) + pair(s2, s2) - 2 * pair(s1, s2);
  // The neutralizing background shifts the periodic value by O(second moment / a^3).
  CHECK(coulomb_form(f, f) == doctest::Approx(free_space).epsilon(2e-3));
}

TEST_CASE("cubic symmetry detection") {
  auto b = basis(3.0, 1, 10.0);
  CHECK(detect_cubic_symmetry(gaussian(0.5, 1.0).periodize(b)).is_isotropic_cubic);
  CHECK_FALSE(detect_cubic_symmetry(gaussian(0.5, 1.0, Vec3(0.1, 0, 0)).periodize(b)).is_isotropic_cubic);
}

TEST_CASE("field JSON round trip and restriction") {
  auto b = basis(3.0, 1, 6.0);
  PeriodicField f = gaussian(0.5, 1.0).periodize(b);
  PeriodicField g = field_from_json(field_to_json(f));
  REQUIRE(g.basis->size() == b->size());
  CHECK((g.coeffs - f.coeffs).norm() < 1e-15);
  auto small = basis(3.0, 1, 2.0);
  PeriodicField r = f.restricted_to(small);
  CHECK(r.coeffs.size() == long(small->size()));
  CHECK(std::abs(r.mean_coeff() - f.mean_coeff()) < 1e-15);
  CHECK_THROWS(require_same_basis(f, r));
}

TEST_CASE("supports are checked against the declared supercell") {
  LatticeGeometry g = LatticeGeometry::cubic(4.0);
  CHECK(SourceDensity(SourceKind::defect, {{Vec3::Zero(), 0.5, 1.0}}, {}, 2).support_fits(g));
  CHECK_FALSE(SourceDensity(SourceKind::defect, {{Vec3::Zero(), 0.6, 1.0}}, {}, 2).support_fits(g));
  CHECK(SourceDensity(SourceKind::defect, {}, {{Vec3::Zero(), 1.9, 1.0}}, 1).support_fits(g));
  CHECK_THROWS_AS(SourceDensity(SourceKind::defect, {}, {}, 0), ConfigError);
}

TEST_CASE("bump sources carry their charge") {
  SourceDensity s(SourceKind::defect, {}, {{Vec3::Zero(), 1.5, 0.3}});
  CHECK(s.charge() == doctest::Approx(0.3));
  auto b = basis(4.0, 1, 60.0);
  CHECK(s.periodize(b).integral().real() == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(std::abs(s.fourier(LatticeGeometry::cubic(4.0), Vec3::Zero()) - 0.3) < 1e-12);
}
