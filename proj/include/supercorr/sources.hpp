#pragma once

#include <vector>

#include "json.hpp"
#include "supercorr/fields.hpp"
#include "supercorr/quadrature.hpp"

namespace supercorr {

// Normalized Gaussian of total charge `weight`.
struct GaussianCharge {
  Vec3 center_frac = Vec3::Zero();
  double sigma = 1.0;
  double weight = 1.0;
};

// Compact bump exp(1 - 1/(1 - (r/R)^2)) scaled to total charge `weight`.
struct RadialBump {
  Vec3 center_frac = Vec3::Zero();
  double radius = 1.0;
  double weight = 1.0;
};

enum class SourceKind { periodic_nuclear, defect };

class SourceDensity {
 public:
  SourceDensity() = default;
  SourceDensity(SourceKind kind, std::vector<GaussianCharge> g, std::vector<RadialBump> b = {}, int support_L = 1);

  SourceKind kind() const { return kind_; }
  const std::vector<GaussianCharge>& gaussians() const { return gaussians_; }
  const std::vector<RadialBump>& bumps() const { return bumps_; }
  int support_L() const { return support_L_; }
  double charge() const;
  bool empty() const { return gaussians_.empty() && bumps_.empty(); }

  // Whole-space transform \int f(x) e^{-ik.x} dx, centers placed with geometry g.
  cplx fourier(const LatticeGeometry& g, const Vec3& k) const;
  double value(const LatticeGeometry& g, const Vec3& x) const;
  // Periodization onto the cell of `basis`: c_k = |Gamma_L|^{-1/2} fhat(k).
  PeriodicField periodize(BasisPtr basis) const;
  SourceDensity scaled(double t) const;
  // True when every component is negligible (below 1e-12 relative) outside support_L * Gamma.
  bool support_fits(const LatticeGeometry& g) const;

 private:
  SourceKind kind_ = SourceKind::defect;
  std::vector<GaussianCharge> gaussians_;
  std::vector<RadialBump> bumps_;
  int support_L_ = 1;
  QuadratureRule radial_;  // on [0, 1]
  double bump_norm_ = 0;   // \int_{|x|<1} bump(|x|) dx
};

SourceDensity source_from_json(const nlohmann::json& j, SourceKind kind);
nlohmann::json source_to_json(const SourceDensity& s);

}  // namespace supercorr
