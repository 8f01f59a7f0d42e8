#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <ostream>

#include "supercorr/fields.hpp"

namespace supercorr {

// Orbital cutoff of the discrete model. With smooth_from < 1 the kinetic symbol
// equals |k|^2/2 up to smooth_from * ecut and then climbs smoothly towards
// kinetic_cap * ecut at the sphere, so plane waves enter the basis without a jump in q.
struct Cutoff {
  static constexpr double kinetic_cap = 1e6;
  double ecut = 4.0;
  double smooth_from = 1.0;

  Cutoff(double e = 4.0, double s = 1.0) : ecut(e), smooth_from(s) {}
  double kinetic(double half_k2) const;
  // d kinetic / d(|k|^2/2)
  double kinetic_slope(double half_k2) const;
  bool operator==(const Cutoff& o) const { return ecut == o.ecut && smooth_from == o.smooth_from; }
};

// Plane waves G of the unit cell with |G + q|^2 / 2 <= ecut (q fractional).
struct FiberBasis {
  Vec3 q_frac = Vec3::Zero();
  std::vector<Vec3i> G;
  Eigen::MatrixX3d kvec;     // rows: Cartesian G + q
  Eigen::VectorXd kinetic;   // kinetic symbol at G + q
  Eigen::MatrixX3d vel;      // rows: gradient in q of the kinetic symbol

  std::size_t size() const { return G.size(); }
  long find(const Vec3i& n) const;

  Vec3i ext = Vec3i::Zero();
  std::vector<long> lut;
};

FiberBasis make_fiber_basis(const LatticeGeometry& g, const Vec3& q_frac, const Cutoff& cut);

struct BlochFiber {
  FiberBasis basis;
  Eigen::VectorXd eps;   // ascending
  Eigen::MatrixXcd u;    // eigenvector columns
};

using PotentialPtr = std::shared_ptr<const PeriodicField>;

// H_q[G, G'] = T(G+q) delta + |Gamma|^{-1/2} V0_{G-G'}.
Eigen::MatrixXcd assemble_fiber(const PeriodicField& V0, const FiberBasis& basis);
BlochFiber diagonalize_fiber(const PeriodicField& V0, const Vec3& q_frac, const Cutoff& cut, bool check_residual = false);

struct FermiData {
  double eps_F = 0;
  int N = 0;
  double gap = 0;
  double homo = 0;  // max over q of eps_N
  double lumo = 0;  // min over q of eps_{N+1}
  int grid_L = 0;
};

struct BandStructure {
  LatticeGeometry geometry;
  Cutoff cutoff;
  PotentialPtr V0;
  KGrid grid;
  std::vector<std::shared_ptr<const BlochFiber>> fibers;
  FermiData fermi;
};

BandStructure diagonalize_grid(PotentialPtr V0, const KGrid& grid, const Cutoff& cut);
// Midgap Fermi level for N electrons per cell; throws MetallicSystemError when
// the gap is not above gap_tol.
FermiData find_fermi(const BandStructure& bands, int electrons, double gap_tol = 1e-8);
void write_bands_csv(const BandStructure& bands, std::ostream& os);

// Diagonalized fibers keyed by folded q; safe for concurrent use.
class FiberCache {
 public:
  FiberCache(PotentialPtr V0, const Cutoff& cut) : V0_(std::move(V0)), cut_(cut) {}
  // Folds q_frac into the half-open zone first.
  std::shared_ptr<const BlochFiber> get(const Vec3& q_frac);
  std::size_t size() const;
  const PeriodicField& potential() const { return *V0_; }
  const Cutoff& cutoff() const { return cut_; }

 private:
  PotentialPtr V0_;
  Cutoff cut_;
  mutable std::mutex mu_;
  std::map<std::array<long long, 3>, std::shared_ptr<const BlochFiber>> fibers_;
};

}  // namespace supercorr
