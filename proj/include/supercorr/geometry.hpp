#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstddef>
#include <string>
#include <vector>

namespace supercorr {

using Vec3 = Eigen::Vector3d;
using Vec3i = Eigen::Vector3i;
using Mat3 = Eigen::Matrix3d;
using Mat3i = Eigen::Matrix3i;

// Reciprocal basis b = 2*pi*A^{-T} for a direct basis stored column-wise.
Mat3 reciprocal(const Mat3& direct);

struct LatticeGeometry {
  Mat3 direct;          // columns a1, a2, a3
  Mat3 recip;           // columns b1, b2, b3
  Mat3 direct_inv;
  Mat3 recip_inv;
  double cell_volume = 0;
  double bz_volume = 0;

  static LatticeGeometry from_direct(const Mat3& a);
  // Nine numbers, row i holds a_i.
  static LatticeGeometry from_rows(const std::array<double, 9>& rows);
  static LatticeGeometry cubic(double a);

  Vec3 a(int i) const { return direct.col(i); }
  Vec3 b(int i) const { return recip.col(i); }
  Vec3 recip_cart(const Vec3& frac) const { return recip * frac; }
  Vec3 recip_frac(const Vec3& k) const { return recip_inv * k; }
  Vec3 direct_cart(const Vec3& frac) const { return direct * frac; }
  // Radius of the largest ball centred at 0 inside the half-open cell of Gamma*.
  double bz_inradius() const;
  std::array<double, 9> rows() const;
};

// Supercell grid Lambda_L stored as integer triples; a point is sum_i (k_i/L) b_i.
struct KGrid {
  int L = 1;
  std::vector<Vec3i> index;

  std::size_t size() const { return index.size(); }
  Vec3 frac(std::size_t i) const { return index[i].cast<double>() / double(L); }
  Vec3 cart(const LatticeGeometry& g, std::size_t i) const { return g.recip_cart(frac(i)); }
  int lower() const { return (-L + (L % 2)) / 2; }
  // Position of the grid point congruent to n modulo L.
  std::size_t find(const Vec3i& n) const;
  // Integer triple of the grid point congruent to n modulo L.
  Vec3i reduce(const Vec3i& n) const;
};

KGrid kpoint_grid(const LatticeGeometry& g, int L);

struct FoldedFrac {
  Vec3 q;      // fractional coordinates in [-1/2, 1/2)
  Vec3i m;     // integer lattice shift, input = q + m
};
FoldedFrac fold_frac(const Vec3& frac);

struct Folded {
  Vec3 q;  // Cartesian, inside the half-open cell
  Vec3 m;  // Cartesian reciprocal-lattice vector
};
Folded fold_to_bz(const LatticeGeometry& g, const Vec3& k);

std::string format_frac(const Vec3& f);

// Group generated by the two cubic generators, as Cartesian matrices.
struct CubicSymmetryFlag {
  bool is_isotropic_cubic = false;
  Mat3i S1;
  Mat3i S2;
  CubicSymmetryFlag();
};

std::vector<Mat3> cubic_group();
// Operations expressed on reciprocal fractional coordinates; empty if the
// lattice is not mapped onto itself by every group element.
std::vector<Mat3i> cubic_group_recip_frac(const LatticeGeometry& g, double tol = 1e-10);

}  // namespace supercorr
