#include "supercorr/sources.hpp"

#include <cmath>
#include <numbers>

#include "supercorr/errors.hpp"

namespace supercorr {

namespace {

double bump_profile(double t) {
  if (t >= 1) return 0.0;
  return std::exp(1.0 - 1.0 / (1.0 - t * t));
}

double sinc(double x) { return std::abs(x) < 1e-8 ? 1.0 - x * x / 6.0 : std::sin(x) / x; }

// Mass fraction below 1e-12 lies beyond this many widths.
constexpr double kGaussianReach = 7.5;

}  // namespace

SourceDensity::SourceDensity(SourceKind kind, std::vector<GaussianCharge> g, std::vector<RadialBump> b,
                             int support_L)
    : kind_(kind), gaussians_(std::move(g)), bumps_(std::move(b)), support_L_(support_L) {
  if (support_L_ < 1) throw ConfigError("support_L must be >= 1");
  for (const auto& x : gaussians_)
    if (!(x.sigma > 0)) throw ConfigError("Gaussian width must be positive");
  for (const auto& x : bumps_)
    if (!(x.radius > 0)) throw ConfigError("bump radius must be positive");
  // The profile is flat near 1, so panels resolve the steep shoulder.
  radial_ = composite_gauss_legendre(16, 16, 0.0, 1.0);
  bump_norm_ = 4 * std::numbers::pi * integrate(radial_, [](double r) { return bump_profile(r) * r * r; });
}

double SourceDensity::charge() const {
  double q = 0;
  for (const auto& x : gaussians_) q += x.weight;
  for (const auto& x : bumps_) q += x.weight;
  return q;
}

cplx SourceDensity::fourier(const LatticeGeometry& g, const Vec3& k) const {
  cplx s = 0;
  double k2 = k.squaredNorm();
  for (const auto& x : gaussians_) {
    double phase = -k.dot(g.direct_cart(x.center_frac));
    s += x.weight * std::exp(-0.5 * x.sigma * x.sigma * k2) * cplx(std::cos(phase), std::sin(phase));
  }
  if (!bumps_.empty()) {
    double kn = std::sqrt(k2);
    for (const auto& x : bumps_) {
      double kr = kn * x.radius;
      double ft = 4 * std::numbers::pi *
                  integrate(radial_, [kr](double r) { return bump_profile(r) * r * r * sinc(kr * r); });
      double phase = -k.dot(g.direct_cart(x.center_frac));
      s += x.weight * ft / bump_norm_ * cplx(std::cos(phase), std::sin(phase));
    }
  }
  return s;
}

double SourceDensity::value(const LatticeGeometry& g, const Vec3& x) const {
  double v = 0;
  for (const auto& s : gaussians_) {
    double r2 = (x - g.direct_cart(s.center_frac)).squaredNorm();
    v += s.weight * std::exp(-0.5 * r2 / (s.sigma * s.sigma)) / std::pow(2 * std::numbers::pi * s.sigma * s.sigma, 1.5);
  }
  for (const auto& s : bumps_) {
    double r = (x - g.direct_cart(s.center_frac)).norm() / s.radius;
    v += s.weight * bump_profile(r) / (bump_norm_ * std::pow(s.radius, 3));
  }
  return v;
}

PeriodicField SourceDensity::periodize(BasisPtr basis) const {
  PeriodicField f(basis);
  double norm = 1.0 / std::sqrt(basis->volume());
  if (kind_ != SourceKind::periodic_nuclear) {
    for (std::size_t i = 0; i < basis->size(); ++i) f.coeffs[long(i)] = norm * fourier(basis->geometry(), basis->k(i));
    return f;
  }
  // One copy per unit cell: only unit-cell reciprocal vectors survive, each L^3 times.
  int L = basis->L();
  double copies = double(L) * L * L;
  for (std::size_t i = 0; i < basis->size(); ++i) {
    const Vec3i& n = basis->index(i);
    if (n[0] % L || n[1] % L || n[2] % L) continue;
    f.coeffs[long(i)] = copies * norm * fourier(basis->geometry(), basis->k(i));
  }
  return f;
}

SourceDensity SourceDensity::scaled(double t) const {
  SourceDensity out = *this;
  for (auto& x : out.gaussians_) x.weight *= t;
  for (auto& x : out.bumps_) x.weight *= t;
  return out;
}

bool SourceDensity::support_fits(const LatticeGeometry& g) const {
  auto fits = [&](const Vec3& c, double reach) {
    for (int i = 0; i < 3; ++i) {
      double spacing = 2 * std::numbers::pi / g.b(i).norm();
      double room = (0.5 * support_L_ - std::abs(c[i])) * spacing;
      if (room < reach) return false;
    }
    return true;
  };
  for (const auto& x : gaussians_)
    if (!fits(x.center_frac, kGaussianReach * x.sigma)) return false;
  for (const auto& x : bumps_)
    if (!fits(x.center_frac, x.radius)) return false;
  return true;
}

static Vec3 vec_from_json(const nlohmann::json& j) {
  auto a = j.get<std::array<double, 3>>();
  return Vec3(a[0], a[1], a[2]);
}

SourceDensity source_from_json(const nlohmann::json& j, SourceKind kind) {
  std::vector<GaussianCharge> gs;
  std::vector<RadialBump> bs;
  if (j.contains("gaussians"))
    for (const auto& e : j.at("gaussians"))
      gs.push_back({vec_from_json(e.at("center_frac")), e.at("sigma").get<double>(), e.at("weight").get<double>()});
  if (j.contains("bumps"))
    for (const auto& e : j.at("bumps"))
      bs.push_back({vec_from_json(e.at("center_frac")), e.at("radius").get<double>(), e.at("weight").get<double>()});
  return SourceDensity(kind, std::move(gs), std::move(bs), j.value("support_L", 1));
}

nlohmann::json source_to_json(const SourceDensity& s) {
  nlohmann::json g = nlohmann::json::array(), b = nlohmann::json::array();
  for (const auto& x : s.gaussians())
    g.push_back({{"center_frac", {x.center_frac[0], x.center_frac[1], x.center_frac[2]}},
                 {"sigma", x.sigma},
                 {"weight", x.weight}});
  for (const auto& x : s.bumps())
    b.push_back({{"center_frac", {x.center_frac[0], x.center_frac[1], x.center_frac[2]}},
                 {"radius", x.radius},
                 {"weight", x.weight}});
  return {{"gaussians", g}, {"bumps", b}, {"support_L", s.support_L()}, {"charge", s.charge()}};
}

}  // namespace supercorr
