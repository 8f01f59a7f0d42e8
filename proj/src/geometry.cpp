#include "supercorr/geometry.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>

#include "supercorr/errors.hpp"

namespace supercorr {

Mat3 reciprocal(const Mat3& direct) {
  double det = direct.determinant();
  double scale = direct.colwise().norm().prod();
  if (!(std::abs(det) > 1e-12 * scale) || !std::isfinite(det))
    throw DegenerateLatticeError("degenerate lattice: basis vectors are linearly dependent");
  return 2.0 * std::numbers::pi * direct.inverse().transpose();
}

LatticeGeometry LatticeGeometry::from_direct(const Mat3& a) {
  LatticeGeometry g;
  g.direct = a;
  g.recip = reciprocal(a);
  g.direct_inv = a.inverse();
  g.recip_inv = g.recip.inverse();
  g.cell_volume = std::abs(a.determinant());
  g.bz_volume = std::abs(g.recip.determinant());
  return g;
}

LatticeGeometry LatticeGeometry::from_rows(const std::array<double, 9>& rows) {
  Mat3 a;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) a(j, i) = rows[3 * i + j];
  return from_direct(a);
}

LatticeGeometry LatticeGeometry::cubic(double a) { return from_direct(a * Mat3::Identity()); }

double LatticeGeometry::bz_inradius() const {
  // Faces of the cell with normal along a_i are 2*pi/|a_i| apart.
  double r = INFINITY;
  for (int i = 0; i < 3; ++i) r = std::min(r, std::numbers::pi / direct.col(i).norm());
  return r;
}

std::array<double, 9> LatticeGeometry::rows() const {
  std::array<double, 9> out{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) out[3 * i + j] = direct(j, i);
  return out;
}

static int mod_floor(int a, int n) {
  int r = a % n;
  return r < 0 ? r + n : r;
}

Vec3i KGrid::reduce(const Vec3i& n) const {
  int lo = lower();
  Vec3i out;
  for (int i = 0; i < 3; ++i) out[i] = lo + mod_floor(n[i] - lo, L);
  return out;
}

std::size_t KGrid::find(const Vec3i& n) const {
  int lo = lower();
  std::size_t idx = 0;
  for (int i = 0; i < 3; ++i) idx = idx * L + std::size_t(mod_floor(n[i] - lo, L));
  return idx;
}

KGrid kpoint_grid(const LatticeGeometry&, int L) {
  if (L <= 0) throw InvalidSizeError("k-point grid size must be positive, got " + std::to_string(L));
  KGrid grid;
  grid.L = L;
  int lo = grid.lower();
  grid.index.reserve(std::size_t(L) * L * L);
  for (int i = 0; i < L; ++i)
    for (int j = 0; j < L; ++j)
      for (int k = 0; k < L; ++k) grid.index.emplace_back(lo + i, lo + j, lo + k);
  return grid;
}

FoldedFrac fold_frac(const Vec3& frac) {
  FoldedFrac out;
  for (int i = 0; i < 3; ++i) {
    double n = std::floor(frac[i] + 0.5);
    out.m[i] = int(n);
    out.q[i] = frac[i] - n;
    if (out.q[i] >= 0.5) {  // guards rounding right at the tie
      out.q[i] -= 1.0;
      out.m[i] += 1;
    }
  }
  return out;
}

Folded fold_to_bz(const LatticeGeometry& g, const Vec3& k) {
  FoldedFrac f = fold_frac(g.recip_frac(k));
  Vec3 m = g.recip_cart(f.m.cast<double>());
  return {k - m, m};
}

std::string format_frac(const Vec3& f) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "q_frac=(%.6f, %.6f, %.6f)", f[0], f[1], f[2]);
  return buf;
}

CubicSymmetryFlag::CubicSymmetryFlag() {
  S1 << 0, 1, 0, 0, 0, 1, 1, 0, 0;
  S2 << -1, 0, 0, 0, 1, 0, 0, 0, 1;
}

std::vector<Mat3> cubic_group() {
  CubicSymmetryFlag flag;
  std::vector<Mat3> group{Mat3::Identity()};
  std::vector<Mat3> gens{flag.S1.cast<double>(), flag.S2.cast<double>()};
  for (std::size_t i = 0; i < group.size(); ++i) {
    for (const auto& s : gens) {
      Mat3 c = s * group[i];
      bool seen = false;
      for (const auto& h : group) seen = seen || (h - c).cwiseAbs().maxCoeff() < 1e-12;
      if (!seen) group.push_back(c);
    }
  }
  return group;
}

std::vector<Mat3i> cubic_group_recip_frac(const LatticeGeometry& g, double tol) {
  std::vector<Mat3i> out;
  for (const auto& s : cubic_group()) {
    Mat3 m = g.recip_inv * s * g.recip;
    Mat3 r = m.array().round().matrix();
    if ((m - r).cwiseAbs().maxCoeff() > tol) return {};
    out.push_back(r.cast<int>());
  }
  return out;
}

}  // namespace supercorr
