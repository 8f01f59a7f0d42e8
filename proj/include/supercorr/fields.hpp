#pragma once

#include <Eigen/Dense>
#include <complex>
#include <memory>
#include <vector>

#include "json.hpp"
#include "supercorr/geometry.hpp"

namespace supercorr {

using cplx = std::complex<double>;

// Wavevectors k = B n / L with |k|^2/2 <= ecut, for the supercell Gamma_L = L*Gamma.
class PlaneWaveBasis {
 public:
  PlaneWaveBasis(const LatticeGeometry& g, int L, double ecut);

  const LatticeGeometry& geometry() const { return geom_; }
  int L() const { return L_; }
  double ecut() const { return ecut_; }
  std::size_t size() const { return n_.size(); }
  const Vec3i& index(std::size_t i) const { return n_[i]; }
  const Vec3& k(std::size_t i) const { return k_[i]; }
  double k2(std::size_t i) const { return k_[i].squaredNorm(); }
  // -1 when n lies outside the sphere.
  long find(const Vec3i& n) const;
  std::size_t zero_index() const { return std::size_t(find(Vec3i::Zero())); }
  // Largest |n_i| present, per axis.
  const Vec3i& extent() const { return ext_; }
  double volume() const { return geom_.cell_volume * double(L_) * L_ * L_; }
  bool same_as(const PlaneWaveBasis& o) const;

 private:
  LatticeGeometry geom_;
  int L_;
  double ecut_;
  std::vector<Vec3i> n_;
  std::vector<Vec3> k_;
  Vec3i ext_;
  std::vector<long> lut_;
};

using BasisPtr = std::shared_ptr<const PlaneWaveBasis>;

// Normalized Fourier coefficients c_k = |Gamma_L|^{-1/2} \int f e^{-ikx}.
struct PeriodicField {
  BasisPtr basis;
  Eigen::VectorXcd coeffs;

  PeriodicField() = default;
  explicit PeriodicField(BasisPtr b) : basis(std::move(b)), coeffs(Eigen::VectorXcd::Zero(basis->size())) {}
  PeriodicField(BasisPtr b, Eigen::VectorXcd c);

  // Throws DomainError unless c_{-k} = conj(c_k) within tol.
  void check_real(double tol = 1e-12) const;
  bool is_real(double tol = 1e-12) const;
  cplx mean_coeff() const { return coeffs[basis->zero_index()]; }
  // Integral of f over the cell.
  cplx integral() const { return std::sqrt(basis->volume()) * mean_coeff(); }
  double l2_norm() const { return coeffs.norm(); }
  cplx value_at(const Vec3& x) const;

  PeriodicField operator+(const PeriodicField& o) const;
  PeriodicField operator-(const PeriodicField& o) const;
  PeriodicField operator*(double s) const;
  // Coefficients copied onto another basis of the same cell; modes missing from
  // the target are dropped.
  PeriodicField restricted_to(BasisPtr target) const;
};

void require_same_basis(const PeriodicField& f, const PeriodicField& g);

// 4*pi sum_{k != 0} conj(c_k(f)) c_k(g) / |k|^2.
cplx coulomb_form_complex(const PeriodicField& f, const PeriodicField& g);
double coulomb_form(const PeriodicField& f, const PeriodicField& g);
PeriodicField green_convolve(const PeriodicField& f);
PeriodicField sqrt_vc_apply(const PeriodicField& f);

struct CoulombNorms {
  double coulomb;       // sqrt(D(f, f))
  double beppo_levi;    // dual norm, requires zero mean
};
CoulombNorms coulomb_norms(const PeriodicField& f, double mean_tol = 1e-12);

// Tests invariance of f under S1 and S2 acting on wavevectors.
CubicSymmetryFlag detect_cubic_symmetry(const PeriodicField& f, double tol = 1e-10);

nlohmann::json basis_to_json(const PlaneWaveBasis& b);
nlohmann::json field_to_json(const PeriodicField& f);
PeriodicField field_from_json(const nlohmann::json& j);

}  // namespace supercorr
