#include "supercorr/scf.hpp"

#include <fftw3.h>
#include <spdlog/spdlog.h>

#include <cmath>
#include <numbers>

#include "supercorr/errors.hpp"
#include "supercorr/linalg.hpp"
#include "supercorr/mixing.hpp"

namespace supercorr {

namespace {

int fft_friendly(int n) {
  for (;; ++n) {
    int m = n;
    for (int p : {2, 3, 5, 7})
      while (m % p == 0) m /= p;
    if (m == 1) return n;
  }
}

// |psi|^2 summed over orbital columns, returned as coefficients on `dens`.
class SupercellDensity {
 public:
  SupercellDensity(const PlaneWaveBasis& orb, BasisPtr dens) : orb_(orb), dens_(std::move(dens)) {
    for (int i = 0; i < 3; ++i) n_[i] = fft_friendly(std::max(4 * orb.extent()[i] + 1, 2 * dens_->extent()[i] + 1));
    total_ = std::size_t(n_[0]) * n_[1] * n_[2];
    buf_ = fftw_alloc_complex(total_);
    acc_ = fftw_alloc_complex(total_);
    bwd_ = fftw_plan_dft_3d(n_[0], n_[1], n_[2], buf_, buf_, FFTW_BACKWARD, FFTW_ESTIMATE);
    fwd_ = fftw_plan_dft_3d(n_[0], n_[1], n_[2], acc_, acc_, FFTW_FORWARD, FFTW_ESTIMATE);
  }
  ~SupercellDensity() {
    fftw_destroy_plan(bwd_);
    fftw_destroy_plan(fwd_);
    fftw_free(buf_);
    fftw_free(acc_);
  }
  SupercellDensity(const SupercellDensity&) = delete;
  SupercellDensity& operator=(const SupercellDensity&) = delete;

  template <class Mat>
  PeriodicField operator()(const Mat& C, long count) {
    for (std::size_t i = 0; i < total_; ++i) acc_[i][0] = acc_[i][1] = 0;
    for (long o = 0; o < count; ++o) {
      for (std::size_t i = 0; i < total_; ++i) buf_[i][0] = buf_[i][1] = 0;
      for (std::size_t k = 0; k < orb_.size(); ++k) {
        std::size_t p = slot(orb_.index(k));
        cplx c = C(long(k), o);
        buf_[p][0] = c.real();
        buf_[p][1] = c.imag();
      }
      fftw_execute(bwd_);
      for (std::size_t i = 0; i < total_; ++i) acc_[i][0] += buf_[i][0] * buf_[i][0] + buf_[i][1] * buf_[i][1];
    }
    fftw_execute(fwd_);
    PeriodicField out(dens_);
    double scale = 1.0 / (double(total_) * std::sqrt(dens_->volume()));
    for (std::size_t K = 0; K < dens_->size(); ++K) {
      std::size_t p = slot(dens_->index(K));
      out.coeffs[long(K)] = scale * cplx(acc_[p][0], acc_[p][1]);
    }
    return out;
  }

 private:
  std::size_t slot(const Vec3i& n) const {
    std::size_t p = 0;
    for (int i = 0; i < 3; ++i) p = p * std::size_t(n_[i]) + std::size_t(((n[i] % n_[i]) + n_[i]) % n_[i]);
    return p;
  }
  const PlaneWaveBasis& orb_;
  BasisPtr dens_;
  int n_[3];
  std::size_t total_;
  fftw_complex* buf_;
  fftw_complex* acc_;
  fftw_plan bwd_, fwd_;
};

// Density of the lowest `N` bands of a fiber, added to acc (unnormalized).
void accumulate_fiber_density(const BlochFiber& f, int N, const PlaneWaveBasis& dens, Eigen::VectorXcd& acc) {
  const auto& G = f.basis.G;
  for (std::size_t i = 0; i < G.size(); ++i)
    for (std::size_t j = 0; j < G.size(); ++j) {
      long K = dens.find(G[i] - G[j]);
      if (K < 0) throw CutoffTooSmallError("density basis misses an orbital product");
      cplx s = 0;
      for (int n = 0; n < N; ++n) s += f.u(long(i), n) * std::conj(f.u(long(j), n));
      acc[K] += s;
    }
}

double fiber_kinetic(const BlochFiber& f, int N) {
  double t = 0;
  for (int n = 0; n < N; ++n) t += (f.basis.kinetic.array() * f.u.col(n).array().abs2()).sum();
  return t;
}

PeriodicField embed_unit_field(const PeriodicField& unit, BasisPtr super) {
  int L = super->L();
  double scale = std::pow(double(L), 1.5);
  PeriodicField out(super);
  for (std::size_t i = 0; i < super->size(); ++i) {
    const Vec3i& n = super->index(i);
    if (n[0] % L || n[1] % L || n[2] % L) continue;
    long j = unit.basis->find(n / L);
    if (j >= 0) out.coeffs[long(i)] = scale * unit.coeffs[j];
  }
  return out;
}

bool field_is_real_valued_coeffs(const PeriodicField& f) {
  double m = f.coeffs.cwiseAbs().maxCoeff();
  return f.coeffs.imag().cwiseAbs().maxCoeff() <= 1e-13 * std::max(m, 1e-300);
}

}  // namespace

void SCFConfig::validate() const {
  if (!(alpha > 0 && alpha <= 1)) throw ConfigError("SCF mixing parameter must lie in (0, 1]");
  if (!(tol > 0)) throw ConfigError("SCF tolerance must be positive");
  if (max_iter < 1) throw ConfigError("SCF needs at least one iteration");
  if (!(ecut > 0)) throw ConfigError("cutoff must be positive");
  if (!(smooth_from > 0 && smooth_from <= 1)) throw ConfigError("kinetic smoothing start must lie in (0, 1]");
  if (L < 1) throw InvalidSizeError("supercell size must be >= 1");
  if (anderson_depth < 0) throw ConfigError("Anderson depth must be non-negative");
}

int electron_count(const SourceDensity& mu) {
  double q = mu.charge();
  long n = std::lround(q);
  if (std::abs(q - double(n)) > 1e-8 || n < 0)
    throw ConfigError("periodic nuclear charge per cell must be a non-negative integer");
  return int(n);
}

PeriodicSolution solve_periodic(const LatticeGeometry& g, const SourceDensity& mu, const SCFConfig& cfg) {
  cfg.validate();
  int N = electron_count(mu);
  auto dens = std::make_shared<const PlaneWaveBasis>(g, 1, 4 * cfg.ecut);
  PeriodicField mu_f = mu.periodize(dens);
  mu_f.check_real(1e-10);
  KGrid grid = kpoint_grid(g, cfg.L);
  long cells = long(grid.size());

  PeriodicSolution sol;
  GroundState& st = sol.state;
  st.L = cfg.L;
  st.nuclear = mu_f;
  PeriodicField rho_in = mu_f;
  AndersonMixer mixer(cfg.alpha, cfg.anderson_depth);
  std::vector<std::shared_ptr<const BlochFiber>> fibers;
  PeriodicField rho_out(dens);
  for (int it = 1; it <= cfg.max_iter; ++it) {
    auto V = std::make_shared<const PeriodicField>(green_convolve(rho_in - mu_f));
    fibers.clear();
    for (std::size_t i = 0; i < grid.size(); ++i)
      fibers.push_back(std::make_shared<const BlochFiber>(diagonalize_fiber(*V, grid.frac(i), cfg.cutoff())));
    Eigen::VectorXcd acc = Eigen::VectorXcd::Zero(long(dens->size()));
    double homo = -INFINITY, lumo = INFINITY;
    if (N > 0) {
      for (const auto& f : fibers) {
        accumulate_fiber_density(*f, N, *dens, acc);
        homo = std::max(homo, f->eps[N - 1]);
        lumo = std::min(lumo, f->eps[N]);
      }
    }
    rho_out = PeriodicField(dens, acc / (double(cells) * std::sqrt(g.cell_volume)));
    double res = (rho_out.coeffs - rho_in.coeffs).norm();
    IterationRecord rec;
    rec.iter = it;
    rec.residual = res;
    rec.eps_F = 0.5 * (homo + lumo);
    rec.margin = 0.5 * (lumo - homo);
    rec.occupied = long(N) * cells;
    st.trace.push_back(rec);
    spdlog::debug("periodic SCF L={} it={} res={:.3e} gap={:.6f}", cfg.L, it, res, lumo - homo);
    st.rho_in = rho_in;
    st.V = *V;
    if (res < cfg.tol) {
      st.converged = true;
      break;
    }
    rho_in = PeriodicField(dens, unpack_complex(mixer.next(pack_real(rho_in.coeffs), pack_real(rho_out.coeffs))));
  }
  if (!st.converged)
    throw ConvergenceError("periodic SCF did not converge in " + std::to_string(cfg.max_iter) + " iterations");

  sol.bands.geometry = g;
  sol.bands.cutoff = cfg.cutoff();
  sol.bands.V0 = std::make_shared<const PeriodicField>(st.V);
  sol.bands.grid = grid;
  sol.bands.fibers = fibers;
  st.rho = rho_out;
  if (N > 0) {
    // Gap closure at the fixed point is a metallic system.
    sol.bands.fermi = find_fermi(sol.bands, N, cfg.gap_tol);
    st.eps_F = sol.bands.fermi.eps_F;
    st.gap = sol.bands.fermi.gap;
    st.margin = 0.5 * st.gap;
  }
  st.occupied = long(N) * cells;
  st.kinetic = 0;
  for (const auto& f : fibers) st.kinetic += fiber_kinetic(*f, N);
  PeriodicField net = rho_out - mu_f;
  st.coulomb = 0.5 * double(cells) * coulomb_form(net, net);
  st.fermi_term = -st.eps_F * double(st.occupied);
  st.energy = st.kinetic + st.coulomb + st.fermi_term;
  return sol;
}

GroundState solve_defect(const LatticeGeometry& g, const SourceDensity& mu, const SourceDensity& nu,
                         const PeriodicSolution& ref, const SCFConfig& cfg, std::optional<double> eps_F) {
  cfg.validate();
  int L = cfg.L;
  if (nu.support_L() > L) throw ConfigError("supercell smaller than the defect support");
  if (!nu.support_fits(g)) throw ConfigError("defect density not contained in its declared support");
  if (!(ref.bands.cutoff == cfg.cutoff())) throw BasisMismatchError("reference solved with another cutoff");
  int N = electron_count(mu);
  long nocc = long(N) * L * L * L;

  PlaneWaveBasis orb(g, L, cfg.ecut);
  auto dens = std::make_shared<const PlaneWaveBasis>(g, L, 4 * cfg.ecut);
  PeriodicField nuclear = mu.periodize(dens) + nu.periodize(dens);
  PeriodicField nu_f = nu.periodize(dens);
  if (long(orb.size()) <= nocc) throw CutoffTooSmallError("supercell basis smaller than the occupied count");

  GroundState st;
  st.L = L;
  st.nuclear = nuclear;
  st.eps_F = eps_F.value_or(ref.state.eps_F);
  st.gap = ref.state.gap;
  PeriodicField rho_in = embed_unit_field(ref.state.rho_in, dens) + nu_f * cfg.warm_theta;
  AndersonMixer mixer(cfg.alpha, cfg.anderson_depth);
  SupercellDensity density(orb, dens);
  double norm = 1.0 / std::sqrt(dens->volume());
  double cell_norm = std::pow(double(L), -1.5);
  long nb = long(orb.size());
  long want = nocc + 1;
  Cutoff cut = cfg.cutoff();
  Eigen::VectorXd kin(nb);
  for (long i = 0; i < nb; ++i) kin[i] = cut.kinetic(0.5 * orb.k2(std::size_t(i)));

  Eigen::VectorXd w;
  Eigen::MatrixXcd C;
  PeriodicField rho_out(dens);
  for (int it = 1; it <= cfg.max_iter; ++it) {
    PeriodicField V = green_convolve(rho_in - nuclear);
    bool real = field_is_real_valued_coeffs(V);
    // H[k, k'] = T(k) delta + |Gamma_L|^{-1/2} V_{k-k'}
    if (real) {
      Eigen::MatrixXd H(nb, nb);
      for (long j = 0; j < nb; ++j)
        for (long i = 0; i < nb; ++i) H(i, j) = norm * V.coeffs[dens->find(orb.index(std::size_t(i)) - orb.index(std::size_t(j)))].real();
      for (long i = 0; i < nb; ++i) H(i, i) += kin[i];
      Eigen::MatrixXd Cr;
      symmetric_eig_lowest(H, int(want), w, Cr);
      C = Cr.cast<cplx>();
    } else {
      Eigen::MatrixXcd H(nb, nb);
      for (long j = 0; j < nb; ++j)
        for (long i = 0; i < nb; ++i) H(i, j) = norm * V.coeffs[dens->find(orb.index(std::size_t(i)) - orb.index(std::size_t(j)))];
      for (long i = 0; i < nb; ++i) H(i, i) += kin[i];
      hermitian_eig_lowest(H, int(want), w, C);
    }
    long occ = 0;
    while (occ < want && w[occ] < st.eps_F) ++occ;
    if (occ == want)
      throw DefectTooStrongError("more than " + std::to_string(nocc) + " states below the Fermi level at L=" +
                                 std::to_string(L));
    rho_out = density(C, occ);
    double res = cell_norm * (rho_out.coeffs - rho_in.coeffs).norm();
    double margin = st.eps_F - (occ > 0 ? w[occ - 1] : -INFINITY);
    margin = std::min(margin, w[occ] - st.eps_F);
    st.trace.push_back({it, res, st.eps_F, margin, occ});
    spdlog::debug("defect SCF L={} it={} res={:.3e} occ={} margin={:.5f}", L, it, res, occ, margin);
    st.rho_in = rho_in;
    st.V = V;
    st.occupied = occ;
    st.margin = margin;
    if (res < cfg.tol) {
      st.converged = true;
      break;
    }
    rho_in = PeriodicField(dens, unpack_complex(mixer.next(pack_real(rho_in.coeffs), pack_real(rho_out.coeffs))));
  }
  if (!st.converged)
    throw ConvergenceError("defect SCF did not converge in " + std::to_string(cfg.max_iter) + " iterations");
  if (st.occupied != nocc)
    throw DefectTooStrongError("occupied count " + std::to_string(st.occupied) + " differs from the defect-free " +
                               std::to_string(nocc));
  // Persistence of the gap: eigenvalues stay g/4 away from eps_F (g the full gap).
  if (st.margin < 0.25 * st.gap)
    throw DefectTooStrongError("gap margin " + std::to_string(st.margin) + " below g/4 at L=" + std::to_string(L));

  st.rho = rho_out;
  st.kinetic = 0;
  for (long o = 0; o < st.occupied; ++o)
    for (long k = 0; k < nb; ++k) st.kinetic += kin[k] * std::norm(C(k, o));
  PeriodicField net = rho_out - nuclear;
  st.coulomb = 0.5 * coulomb_form(net, net);
  st.fermi_term = -st.eps_F * double(st.occupied);
  st.energy = st.kinetic + st.coulomb + st.fermi_term;
  return st;
}

DefectEnergy defect_energy(const PeriodicSolution& per, const GroundState& def) {
  if (per.state.L != def.L) throw InvalidSizeError("periodic and defect states belong to different supercells");
  DefectEnergy e;
  e.L = def.L;
  e.occupied_defect = def.occupied;
  e.occupied_periodic = per.state.occupied;
  e.d_kinetic = def.kinetic - per.state.kinetic;
  e.d_coulomb = def.coulomb - per.state.coulomb;
  // Both energies use the defect run's Fermi level.
  e.d_fermi = -def.eps_F * double(def.occupied - per.state.occupied);
  e.I_defect = def.energy;
  e.I_periodic = per.state.kinetic + per.state.coulomb - def.eps_F * double(per.state.occupied);
  e.J = e.d_kinetic + e.d_coulomb + e.d_fermi;
  return e;
}

DefectEnergy defect_energy(const LatticeGeometry& g, const SourceDensity& mu, const SourceDensity& nu,
                           const SCFConfig& cfg) {
  PeriodicSolution per = solve_periodic(g, mu, cfg);
  GroundState def = solve_defect(g, mu, nu, per, cfg);
  return defect_energy(per, def);
}

double linear_defect_term(const PeriodicField& V0, const SourceDensity& nu, int) {
  // Only reciprocal-lattice modes of nu_L meet the unit-cell periodic V0, so the
  // value is independent of L.
  const auto& b = *V0.basis;
  cplx s = 0;
  for (std::size_t i = 0; i < b.size(); ++i) s += std::conj(V0.coeffs[long(i)]) * nu.fourier(b.geometry(), b.k(i));
  return -s.real() / std::sqrt(b.volume());
}

nlohmann::json state_to_json(const GroundState& s) {
  nlohmann::json trace = nlohmann::json::array();
  for (const auto& r : s.trace)
    trace.push_back({{"iter", r.iter}, {"residual", r.residual}, {"eps_F", r.eps_F}, {"margin", r.margin},
                     {"occupied", r.occupied}});
  return {{"L", s.L},
          {"energy", s.energy},
          {"kinetic", s.kinetic},
          {"coulomb", s.coulomb},
          {"fermi_term", s.fermi_term},
          {"eps_F", s.eps_F},
          {"gap", s.gap},
          {"margin", s.margin},
          {"occupied", s.occupied},
          {"converged", s.converged},
          {"trace", trace},
          {"rho_in", field_to_json(s.rho_in)},
          {"rho", field_to_json(s.rho)}};
}

}  // namespace supercorr
