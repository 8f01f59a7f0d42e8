#pragma once

#include <memory>

#include "supercorr/bands.hpp"
#include "supercorr/sources.hpp"

namespace supercorr {

struct ResponseOptions {
  int bz_P = 8;                 // q' average over Lambda_P
  double response_ecut = 0;     // |K+q|^2/2 bound for response modes; 0 selects 4 * orbital cutoff
  bool two_term = false;        // pair (q', q'+q) and (q', q'-q) explicitly instead of doubling one term
  bool include_zero_block = true;  // supercell sums keep the K != 0 modes of the Q = 0 fiber
};

struct ResponseMatrix {
  Vec3 q_frac = Vec3::Zero();
  std::vector<Vec3i> modes;     // K; a mode is the plane wave e_{K+q}
  Eigen::VectorXd kq_norm;      // |K + q|
  Eigen::MatrixXcd L;
  int bz_L = 0;
  long find(const Vec3i& K) const;
};

struct DielectricData {
  Eigen::Matrix3cd M1_zero;
  Eigen::MatrixXcd b_zero;      // 3 x modes of L_zero, rows are the components
  ResponseMatrix L_zero;
  Eigen::Matrix3cd M_zero;
  bool isotropic_cubic = false;
  double epsilon = 0;           // tr M / 3 when isotropic cubic
  Mat3 M_real() const { return 0.5 * (M_zero.real() + M_zero.real().transpose()); }
};

// Sum-over-states response of the periodic Hamiltonian with potential V0.
class ResponseEngine {
 public:
  ResponseEngine(PotentialPtr V0, const Cutoff& cut, int N, double eps_F, ResponseOptions opt = {},
                 std::shared_ptr<FiberCache> cache = nullptr);
  ResponseEngine(const BandStructure& bands, ResponseOptions opt = {}, std::shared_ptr<FiberCache> cache = nullptr);

  const LatticeGeometry& geometry() const { return geom_; }
  const KGrid& bz() const { return bz_; }
  int occupied() const { return N_; }
  double fermi_level() const { return eps_F_; }
  double response_ecut() const { return resp_ecut_; }
  const Cutoff& cutoff() const { return cut_; }
  const ResponseOptions& options() const { return opt_; }
  std::shared_ptr<FiberCache> cache() const { return cache_; }

  // Modes K with |K+q|^2/2 <= response_ecut and K+q != 0.
  std::vector<Vec3i> modes(const Vec3& q_frac) const;
  // q = 0 yields the zero-mean block L_0.
  ResponseMatrix build(const Vec3& q_frac) const;
  Eigen::Matrix3cd m1_zero() const;
  Eigen::MatrixXcd b_zero(const std::vector<Vec3i>& modes) const;
  DielectricData dielectric() const;

  // Occupied fiber at q (gap-checked).
  std::shared_ptr<const BlochFiber> fiber(const Vec3& q_frac) const;

 private:
  LatticeGeometry geom_;
  PotentialPtr V0_;
  Cutoff cut_;
  int N_;
  double eps_F_;
  ResponseOptions opt_;
  double resp_ecut_;
  KGrid bz_;
  std::shared_ptr<FiberCache> cache_;
};

// v_K = sqrt(4 pi)/|K+q| |Gamma|^{-1/2} nuhat(K+q) on the modes of R.
Eigen::VectorXcd coulomb_weighted_source(const LatticeGeometry& g, const ResponseMatrix& R, const SourceDensity& nu);

// F = <(1 + L_q)^{-1} v, v>, one value per source.
std::vector<double> quadratic_defect_values(const ResponseEngine& engine, const std::vector<SourceDensity>& nus,
                                            const Vec3& q_frac);
double quadratic_defect_value(const ResponseEngine& engine, const SourceDensity& nu, const Vec3& q_frac);
// The same form on the zero-mean block at q = 0 (modes K != 0 only).
std::vector<double> zero_block_values(const ResponseEngine& engine, const std::vector<SourceDensity>& nus);

// Group elements (integer matrices on reciprocal fractional coordinates) that
// leave V0 and every source invariant, closed with -I (time reversal).
std::vector<Mat3i> invariance_group(const LatticeGeometry& g, const PeriodicField& V0,
                                    const std::vector<SourceDensity>& nus, double tol = 1e-10);

struct GridOrbit {
  std::size_t representative;   // index into the grid
  int weight;
};
std::vector<GridOrbit> grid_orbits(const KGrid& grid, const std::vector<Mat3i>& group, bool skip_origin);

// L^{-3} sum_{Q in Lambda_L \ 0} F^L(Q), one value per source; F^L uses the
// response averaged over Lambda_L itself. With include_zero_block the Q = 0
// fiber's zero-mean modes are added, which makes the sum the exact supercell form.
std::vector<double> supercell_riemann_sums(PotentialPtr V0, const Cutoff& cut, int N, double eps_F,
                                           const std::vector<SourceDensity>& nus, int L, ResponseOptions opt = {},
                                           std::shared_ptr<FiberCache> cache = nullptr);

struct BZAverageOptions {
  int gl_order = 6;       // per-axis nodes on the fractional zone
  double psi_radius = 0;  // 0 selects the zone inradius
};

// Average of F over the zone: the singular part g0 Psi/(q^T M q) exactly, the
// bounded remainder by product Gauss-Legendre.
std::vector<double> bz_average_F(const ResponseEngine& engine, const std::vector<SourceDensity>& nus, const Mat3& M0,
                                 BZAverageOptions opt = {});

// 1/2 (L^{-3} sum F^L - avg F) for each source.
std::vector<double> quadratic_energy_difference(PotentialPtr V0, const Cutoff& cut, int N, double eps_F,
                                                const std::vector<SourceDensity>& nus, int L,
                                                const std::vector<double>& bz_average, ResponseOptions opt = {},
                                                std::shared_ptr<FiberCache> cache = nullptr);

}  // namespace supercorr
