#pragma once
// Independent reference computations used by the unit and acceptance tests.

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <vector>

#include "supercorr/bands.hpp"
#include "supercorr/linalg.hpp"

namespace oracle {

using namespace supercorr;

// Density response by finite differences. Every fiber chain q', q'+q, q'+2q, ...
// of Lambda_P is perturbed by t (e^{i k x} + e^{-i k x}) and by
// i t (e^{i k x} - e^{-i k x}) with k = K' + q, the
// N * (chain length) lowest states are occupied, and the plain Fourier
// coefficient of rho at K + q is differenced at +t and -t. Returns the column
// -4 pi chi(K, K') / (|K+q| |K'+q|) over `modes`.
inline Eigen::VectorXcd finite_field_column(const PeriodicField& V0, const Cutoff& cut, int N, int P, const Vec3i& q_idx,
                                            const Vec3i& Kp, const std::vector<Vec3i>& modes, double t = 1e-4) {
  const LatticeGeometry& g = V0.basis->geometry();
  KGrid grid = kpoint_grid(g, P);
  Vec3 q = q_idx.cast<double>() / P;
  std::vector<char> done(grid.size(), 0);
  Eigen::VectorXcd col = Eigen::VectorXcd::Zero(long(modes.size()));
  for (std::size_t start = 0; start < grid.size(); ++start) {
    if (done[start]) continue;
    // Chain q' + j q with folded points p_j and shifts m_j.
    std::vector<Vec3> p;
    std::vector<Vec3i> m;
    std::vector<FiberBasis> basis;
    Vec3i idx = grid.index[start];
    for (int j = 0;; ++j) {
      Vec3 raw = grid.frac(start) + j * q;
      FoldedFrac f = fold_frac(raw);
      if (j > 0 && grid.find(idx + j * q_idx) == start) {
        p.push_back(f.q);
        m.push_back(f.m);
        break;
      }
      done[grid.find(idx + j * q_idx)] = 1;
      p.push_back(f.q);
      m.push_back(f.m);
      basis.push_back(make_fiber_basis(g, f.q, cut));
    }
    int C = int(basis.size());
    std::vector<long> off(C + 1, 0);
    for (int j = 0; j < C; ++j) off[j + 1] = off[j] + long(basis[j].size());
    Eigen::MatrixXcd H0 = Eigen::MatrixXcd::Zero(off[C], off[C]);
    for (int j = 0; j < C; ++j) H0.block(off[j], off[j], off[j + 1] - off[j], off[j + 1] - off[j]) = assemble_fiber(V0, basis[j]);
    // Coupling j -> j+1 by e^{i(K'+q)x}: G lands on G + K' + m_{j+1} - m_j.
    Eigen::MatrixXcd D = Eigen::MatrixXcd::Zero(off[C], off[C]);
    for (int j = 0; j < C; ++j) {
      int jn = (j + 1) % C;
      Vec3i shift = Kp + m[j + 1] - m[j];
      for (std::size_t a = 0; a < basis[j].size(); ++a) {
        long b = basis[jn].find(basis[j].G[a] + shift);
        if (b >= 0) D(off[jn] + b, off[j] + long(a)) += 1.0;
      }
    }
    // Cosine and sine perturbations; their combination isolates e^{ikx} even when
    // e^{-ikx} lands on the same fiber pair (2q in the reciprocal lattice).
    Eigen::MatrixXcd Dc = D + D.adjoint();
    Eigen::MatrixXcd Ds = cplx(0, 1) * (D - D.adjoint());
    auto density = [&](const Eigen::MatrixXcd& Dh, double s) {
      Eigen::VectorXd w;
      Eigen::MatrixXcd V;
      hermitian_eig(H0 + s * Dh, w, V);
      long occ = long(N) * C;
      Eigen::VectorXcd rho = Eigen::VectorXcd::Zero(long(modes.size()));
      for (std::size_t K = 0; K < modes.size(); ++K) {
        // Pairs (block j+1, block j) with G = G' + K + m_{j+1} - m_j.
        for (int j = 0; j < C; ++j) {
          int jn = (j + 1) % C;
          Vec3i shift = modes[K] + m[j + 1] - m[j];
          for (std::size_t a = 0; a < basis[j].size(); ++a) {
            long b = basis[jn].find(basis[j].G[a] + shift);
            if (b < 0) continue;
            rho[long(K)] += V.row(off[j] + long(a)).head(occ).dot(V.row(off[jn] + b).head(occ));
          }
        }
      }
      return Eigen::VectorXcd(rho);
    };
    Eigen::VectorXcd dc = (density(Dc, t) - density(Dc, -t)) / (2 * t);
    Eigen::VectorXcd ds = (density(Ds, t) - density(Ds, -t)) / (2 * t);
    col += 0.5 * (dc - cplx(0, 1) * ds);
  }
  double vol = g.cell_volume;
  double kp = (g.recip * (Kp.cast<double>() + q)).norm();
  for (std::size_t K = 0; K < modes.size(); ++K) {
    double kk = (g.recip * (modes[K].cast<double>() + q)).norm();
    // rho carried |Gamma|^{-1} and the 1/P^3 zone average.
    col[long(K)] *= -4 * std::numbers::pi / (kk * kp) / (vol * double(grid.size()));
  }
  return col;
}

}  // namespace oracle
