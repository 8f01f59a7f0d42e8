#include "supercorr/bands.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "supercorr/errors.hpp"
#include "supercorr/linalg.hpp"
#include "supercorr/quadrature.hpp"

namespace supercorr {

double Cutoff::kinetic(double x) const {
  double start = smooth_from * ecut;
  if (smooth_from >= 1 || x <= start) return x;
  double t = std::min(1.0, (x - start) / (ecut - start));
  return x + ecut * std::expm1(std::log(kinetic_cap) * smooth_step(t));
}

double Cutoff::kinetic_slope(double x) const {
  double start = smooth_from * ecut;
  if (smooth_from >= 1 || x <= start) return 1.0;
  double t = std::min(1.0, (x - start) / (ecut - start));
  double lc = std::log(kinetic_cap);
  return 1.0 + ecut * lc * std::exp(lc * smooth_step(t)) * smooth_step_derivative(t) / (ecut - start);
}

long FiberBasis::find(const Vec3i& n) const {
  for (int i = 0; i < 3; ++i)
    if (std::abs(n[i]) > ext[i]) return -1;
  Vec3i span = 2 * ext + Vec3i::Ones();
  return lut[(std::size_t(n[0] + ext[0]) * span[1] + std::size_t(n[1] + ext[1])) * span[2] + std::size_t(n[2] + ext[2])];
}

FiberBasis make_fiber_basis(const LatticeGeometry& g, const Vec3& q_frac, const Cutoff& cut) {
  if (!(cut.ecut > 0) || !(cut.smooth_from > 0)) throw DomainError("cutoff and smoothing start must be positive");
  double ecut = cut.ecut;
  FiberBasis b;
  b.q_frac = q_frac;
  double kmax = std::sqrt(2 * ecut);
  for (int i = 0; i < 3; ++i) b.ext[i] = int(std::floor(g.a(i).norm() * kmax / (2 * std::numbers::pi))) + 1;
  Vec3i span = 2 * b.ext + Vec3i::Ones();
  b.lut.assign(std::size_t(span.prod()), -1);
  std::vector<Vec3> ks;
  for (int x = -b.ext[0]; x <= b.ext[0]; ++x)
    for (int y = -b.ext[1]; y <= b.ext[1]; ++y)
      for (int z = -b.ext[2]; z <= b.ext[2]; ++z) {
        Vec3i n(x, y, z);
        Vec3 k = g.recip * (n.cast<double>() + q_frac);
        if (0.5 * k.squaredNorm() > ecut * (1 + 1e-12)) continue;
        b.lut[(std::size_t(x + b.ext[0]) * span[1] + std::size_t(y + b.ext[1])) * span[2] + std::size_t(z + b.ext[2])] =
            long(b.G.size());
        b.G.push_back(n);
        ks.push_back(k);
      }
  b.kvec.resize(long(ks.size()), 3);
  b.kinetic.resize(long(ks.size()));
  b.vel.resize(long(ks.size()), 3);
  for (std::size_t i = 0; i < ks.size(); ++i) {
    double x = 0.5 * ks[i].squaredNorm();
    b.kvec.row(long(i)) = ks[i].transpose();
    b.kinetic[long(i)] = cut.kinetic(x);
    b.vel.row(long(i)) = cut.kinetic_slope(x) * ks[i].transpose();
  }
  return b;
}

Eigen::MatrixXcd assemble_fiber(const PeriodicField& V0, const FiberBasis& basis) {
  if (V0.basis->L() != 1) throw BasisMismatchError("fiber potential must live on the unit cell");
  long n = long(basis.size());
  Eigen::MatrixXcd H = Eigen::MatrixXcd::Zero(n, n);
  double norm = 1.0 / std::sqrt(V0.basis->volume());
  for (long i = 0; i < n; ++i) {
    for (long j = 0; j < n; ++j) {
      long idx = V0.basis->find(basis.G[std::size_t(i)] - basis.G[std::size_t(j)]);
      if (idx < 0)
        throw CutoffTooSmallError("potential lacks the Fourier mode G - G'; use a potential cutoff of at least 4 ecut");
      H(i, j) = norm * V0.coeffs[idx];
    }
    H(i, i) += basis.kinetic[i];
  }
  return H;
}

BlochFiber diagonalize_fiber(const PeriodicField& V0, const Vec3& q_frac, const Cutoff& cut, bool check_residual) {
  BlochFiber f;
  f.basis = make_fiber_basis(V0.basis->geometry(), q_frac, cut);
  Eigen::MatrixXcd H = assemble_fiber(V0, f.basis);
  try {
    hermitian_eig(H, f.eps, f.u);
  } catch (const EigensolverError& e) {
    throw EigensolverError(std::string(e.what()) + " at " + format_frac(q_frac));
  }
  if (check_residual) {
    double res = (H * f.u - f.u * f.eps.asDiagonal()).colwise().norm().maxCoeff();
    if (res > 1e-10 * std::max(1.0, f.eps.cwiseAbs().maxCoeff()))
      throw EigensolverError("eigen-residual " + std::to_string(res) + " at " + format_frac(q_frac));
  }
  return f;
}

BandStructure diagonalize_grid(PotentialPtr V0, const KGrid& grid, const Cutoff& cut) {
  BandStructure bs;
  bs.geometry = V0->basis->geometry();
  bs.cutoff = cut;
  bs.V0 = V0;
  bs.grid = grid;
  bs.fibers.reserve(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i)
    bs.fibers.push_back(std::make_shared<const BlochFiber>(diagonalize_fiber(*V0, grid.frac(i), cut, true)));
  return bs;
}

FermiData find_fermi(const BandStructure& bands, int electrons, double gap_tol) {
  if (electrons < 1) throw DomainError("electron count per cell must be positive");
  FermiData fd;
  fd.N = electrons;
  fd.grid_L = bands.grid.L;
  fd.homo = -INFINITY;
  fd.lumo = INFINITY;
  Vec3 q_homo = Vec3::Zero(), q_lumo = Vec3::Zero();
  for (const auto& f : bands.fibers) {
    if (f->eps.size() <= electrons) throw CutoffTooSmallError("fiber basis smaller than N + 1 bands");
    if (f->eps[electrons - 1] > fd.homo) fd.homo = f->eps[electrons - 1], q_homo = f->basis.q_frac;
    if (f->eps[electrons] < fd.lumo) fd.lumo = f->eps[electrons], q_lumo = f->basis.q_frac;
  }
  fd.gap = fd.lumo - fd.homo;
  fd.eps_F = 0.5 * (fd.homo + fd.lumo);
  if (!(fd.gap > gap_tol))
    throw MetallicSystemError("no gap above band " + std::to_string(electrons) + " (g = " + std::to_string(fd.gap) + ")",
                              "homo " + format_frac(q_homo) + ", lumo " + format_frac(q_lumo));
  return fd;
}

void write_bands_csv(const BandStructure& bands, std::ostream& os) {
  os << "q_frac1,q_frac2,q_frac3,n,eps\n";
  char buf[160];
  for (const auto& f : bands.fibers)
    for (long n = 0; n < f->eps.size(); ++n) {
      std::snprintf(buf, sizeof buf, "%.10f,%.10f,%.10f,%ld,%.15e\n", f->basis.q_frac[0], f->basis.q_frac[1],
                    f->basis.q_frac[2], n + 1, f->eps[n]);
      os << buf;
    }
}

std::shared_ptr<const BlochFiber> FiberCache::get(const Vec3& q_frac) {
  Vec3 q = fold_frac(q_frac).q;
  std::array<long long, 3> key;
  for (int i = 0; i < 3; ++i) key[i] = std::llround(q[i] * 1e10);
  {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = fibers_.find(key);
    if (it != fibers_.end()) return it->second;
  }
  auto f = std::make_shared<const BlochFiber>(diagonalize_fiber(*V0_, q, cut_));
  std::lock_guard<std::mutex> lock(mu_);
  return fibers_.emplace(key, f).first->second;
}

std::size_t FiberCache::size() const {
  std::lock_guard<std::mutex> lock(mu_);
  return fibers_.size();
}

}  // namespace supercorr
