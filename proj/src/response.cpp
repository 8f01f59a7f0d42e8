#include "supercorr/response.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include "supercorr/errors.hpp"
#include "supercorr/quadrature.hpp"

namespace supercorr {

namespace {

constexpr double kPi = std::numbers::pi;

bool is_zero(const Vec3& q) { return q.cwiseAbs().maxCoeff() == 0.0; }

// sign = +1: W[g', K] = conj(c^n[G'_{g'} + K - G0]);
// sign = -1: W[g', K] = c^n[G'_{g'} - K - G0]. Rows run over the partner fiber basis.
Eigen::MatrixXcd shifted_conj_gather(const BlochFiber& occ, long n, const FiberBasis& other,
                                     const std::vector<Vec3i>& modes, const Vec3i& G0, int sign) {
  long nb = long(other.size()), nr = long(modes.size());
  Eigen::MatrixXcd W = Eigen::MatrixXcd::Zero(nb, nr);
  for (long K = 0; K < nr; ++K) {
    Vec3i shift = sign * (modes[std::size_t(K)] - sign * G0);
    for (long g = 0; g < nb; ++g) {
      long j = occ.basis.find(other.G[std::size_t(g)] + shift);
      if (j >= 0) W(g, K) = sign > 0 ? std::conj(occ.u(j, n)) : occ.u(j, n);
    }
  }
  return W;
}

}  // namespace

long ResponseMatrix::find(const Vec3i& K) const {
  for (std::size_t i = 0; i < modes.size(); ++i)
    if (modes[i] == K) return long(i);
  return -1;
}

ResponseEngine::ResponseEngine(PotentialPtr V0, const Cutoff& cut, int N, double eps_F, ResponseOptions opt,
                               std::shared_ptr<FiberCache> cache)
    : geom_(V0->basis->geometry()),
      V0_(std::move(V0)),
      cut_(cut),
      N_(N),
      eps_F_(eps_F),
      opt_(opt),
      resp_ecut_(opt.response_ecut > 0 ? opt.response_ecut : 4 * cut.ecut),
      bz_(kpoint_grid(geom_, opt.bz_P)),
      cache_(cache ? std::move(cache) : std::make_shared<FiberCache>(V0_, cut)) {
  if (N_ < 1) throw DomainError("response needs at least one occupied band");
  if (!(cache_->cutoff() == cut_) || &cache_->potential() != V0_.get())
    throw BasisMismatchError("fiber cache built for another potential or cutoff");
}

ResponseEngine::ResponseEngine(const BandStructure& bands, ResponseOptions opt, std::shared_ptr<FiberCache> cache)
    : ResponseEngine(bands.V0, bands.cutoff, bands.fermi.N, bands.fermi.eps_F, opt, std::move(cache)) {}

std::shared_ptr<const BlochFiber> ResponseEngine::fiber(const Vec3& q_frac) const {
  auto f = cache_->get(q_frac);
  if (f->eps.size() <= N_) throw CutoffTooSmallError("fiber basis smaller than N + 1 bands");
  if (!(f->eps[N_ - 1] < eps_F_ && f->eps[N_] > eps_F_))
    throw MetallicSystemError("gap violated on a response fiber", format_frac(f->basis.q_frac));
  return f;
}

std::vector<Vec3i> ResponseEngine::modes(const Vec3& q) const {
  double kmax = std::sqrt(2 * resp_ecut_);
  Vec3i ext;
  for (int i = 0; i < 3; ++i) ext[i] = int(std::floor(geom_.a(i).norm() * kmax / (2 * kPi))) + 2;
  std::vector<Vec3i> out;
  bool zero = is_zero(q);
  for (int a = -ext[0]; a <= ext[0]; ++a)
    for (int b = -ext[1]; b <= ext[1]; ++b)
      for (int c = -ext[2]; c <= ext[2]; ++c) {
        Vec3i K(a, b, c);
        Vec3 k = geom_.recip * (K.cast<double>() + q);
        double kn = k.norm();
        if (0.5 * kn * kn > resp_ecut_ * (1 + 1e-12)) continue;
        if (kn < 1e-12) {
          if (zero && K == Vec3i::Zero()) continue;
          throw SingularModeError("|K + q| below 1e-12 for a response mode");
        }
        out.push_back(K);
      }
  return out;
}

ResponseMatrix ResponseEngine::build(const Vec3& q) const {
  ResponseMatrix R;
  R.q_frac = q;
  R.modes = modes(q);
  R.bz_L = bz_.L;
  long nr = long(R.modes.size());
  R.kq_norm.resize(nr);
  for (long K = 0; K < nr; ++K) R.kq_norm[K] = (geom_.recip * (R.modes[std::size_t(K)].cast<double>() + q)).norm();
  Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(nr, nr);
  double inv_sqrt_vol = 1.0 / std::sqrt(geom_.cell_volume);

  // Rows n, m of conj-paired transition elements divided by sqrt(eps_m - eps_n).
  auto add_pairs = [&](const BlochFiber& fo, const BlochFiber& fu, const Vec3i& G0, int sign) {
    long nb = long(fu.basis.size());
    long nun = nb - N_;
    Eigen::MatrixXcd X(long(N_) * nun, nr);
    for (long n = 0; n < N_; ++n) {
      Eigen::MatrixXcd W = shifted_conj_gather(fo, n, fu.basis, R.modes, G0, sign);
      Eigen::MatrixXcd B = sign > 0 ? Eigen::MatrixXcd(fu.u.rightCols(nun).transpose() * W)
                                    : Eigen::MatrixXcd(fu.u.rightCols(nun).adjoint() * W);
      for (long m = 0; m < nun; ++m) {
        double d = fu.eps[N_ + m] - fo.eps[n];
        X.row(n * nun + m) = B.row(m) * (inv_sqrt_vol / std::sqrt(d));
      }
    }
    acc.selfadjointView<Eigen::Lower>().rankUpdate(X.adjoint());
  };

  for (std::size_t i = 0; i < bz_.size(); ++i) {
    Vec3 qp = bz_.frac(i);
    auto fo = fiber(qp);
    // Unoccupied partner at q' - q = p + G0.
    FoldedFrac minus = fold_frac(qp - q);
    add_pairs(*fo, *fiber(minus.q), minus.m, +1);
    if (opt_.two_term) {
      FoldedFrac plus = fold_frac(qp + q);
      add_pairs(*fo, *fiber(plus.q), plus.m, -1);
    }
  }
  acc.triangularView<Eigen::StrictlyUpper>() = acc.adjoint();
  double pref = (opt_.two_term ? 4 * kPi : 8 * kPi) / double(bz_.size());
  for (long a = 0; a < nr; ++a)
    for (long b = 0; b < nr; ++b) acc(a, b) *= pref / (R.kq_norm[a] * R.kq_norm[b]);
  R.L = std::move(acc);
  return R;
}

Eigen::Matrix3cd ResponseEngine::m1_zero() const {
  Eigen::Matrix3cd M = Eigen::Matrix3cd::Zero();
  for (std::size_t i = 0; i < bz_.size(); ++i) {
    auto f = fiber(bz_.frac(i));
    long nb = long(f->basis.size()), nun = nb - N_;
    Eigen::MatrixXcd P[3];
    for (int j = 0; j < 3; ++j)
      P[j] = f->u.leftCols(N_).adjoint() * f->basis.vel.col(j).asDiagonal() * f->u.rightCols(nun);
    Eigen::MatrixXd d3(N_, nun);
    for (long n = 0; n < N_; ++n)
      for (long m = 0; m < nun; ++m) d3(n, m) = std::pow(f->eps[N_ + m] - f->eps[n], 3);
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) M(a, b) += (P[a].array() * P[b].array().conjugate() / d3.array()).sum();
  }
  M *= 8 * kPi / (geom_.cell_volume * double(bz_.size()));
  return 0.5 * (M + M.adjoint().eval());
}

Eigen::MatrixXcd ResponseEngine::b_zero(const std::vector<Vec3i>& modes) const {
  long nr = long(modes.size());
  Eigen::MatrixXcd beta = Eigen::MatrixXcd::Zero(3, nr);
  double inv_sqrt_vol = 1.0 / std::sqrt(geom_.cell_volume);
  for (std::size_t i = 0; i < bz_.size(); ++i) {
    auto f = fiber(bz_.frac(i));
    long nb = long(f->basis.size()), nun = nb - N_;
    for (long n = 0; n < N_; ++n) {
      // B[m, K] = <u_n, e_K u_m>
      Eigen::MatrixXcd W = shifted_conj_gather(*f, n, f->basis, modes, Vec3i::Zero(), +1);
      Eigen::MatrixXcd B = f->u.rightCols(nun).transpose() * W * inv_sqrt_vol;
      for (int j = 0; j < 3; ++j) {
        // <u_m | P_j u_n> / (eps_m - eps_n)^2
        Eigen::VectorXcd p = f->u.rightCols(nun).adjoint() * (f->basis.vel.col(j).array() * f->u.col(n).array()).matrix();
        for (long m = 0; m < nun; ++m) p[m] /= std::pow(f->eps[N_ + m] - f->eps[n], 2);
        beta.row(j) += p.transpose() * B;
      }
    }
  }
  for (long K = 0; K < nr; ++K) {
    double kn = (geom_.recip * modes[std::size_t(K)].cast<double>()).norm();
    beta.col(K) *= -8 * kPi * inv_sqrt_vol / (kn * double(bz_.size()));
  }
  return beta;
}

DielectricData ResponseEngine::dielectric() const {
  DielectricData d;
  d.L_zero = build(Vec3::Zero());
  d.M1_zero = m1_zero();
  d.b_zero = b_zero(d.L_zero.modes);
  long nr = long(d.L_zero.modes.size());
  Eigen::MatrixXcd A = Eigen::MatrixXcd::Identity(nr, nr) + d.L_zero.L;
  Eigen::LLT<Eigen::MatrixXcd> llt(A);
  if (llt.info() != Eigen::Success) throw EigensolverError("1 + L_0 is not numerically positive definite");
  Eigen::MatrixXcd X = llt.solve(d.b_zero.adjoint());
  Eigen::Matrix3cd M = Eigen::Matrix3cd::Identity() + d.M1_zero - d.b_zero * X;
  d.M_zero = 0.5 * (M + M.adjoint().eval());
  d.isotropic_cubic = detect_cubic_symmetry(*V0_, 1e-8).is_isotropic_cubic;
  if (d.isotropic_cubic) d.epsilon = d.M_zero.trace().real() / 3;
  return d;
}

Eigen::VectorXcd coulomb_weighted_source(const LatticeGeometry& g, const ResponseMatrix& R, const SourceDensity& nu) {
  Eigen::VectorXcd v(long(R.modes.size()));
  double pref = std::sqrt(4 * kPi / g.cell_volume);
  for (std::size_t K = 0; K < R.modes.size(); ++K) {
    Vec3 k = g.recip * (R.modes[K].cast<double>() + R.q_frac);
    v[long(K)] = pref / R.kq_norm[long(K)] * nu.fourier(g, k);
  }
  return v;
}

namespace {

std::vector<double> resolvent_forms(const ResponseEngine& engine, const std::vector<SourceDensity>& nus,
                                    const Vec3& q) {
  ResponseMatrix R = engine.build(q);
  long nr = long(R.modes.size());
  Eigen::LLT<Eigen::MatrixXcd> llt(Eigen::MatrixXcd::Identity(nr, nr) + R.L);
  if (llt.info() != Eigen::Success) throw EigensolverError("1 + L_q is not numerically positive definite");
  std::vector<double> out;
  for (const auto& nu : nus) {
    Eigen::VectorXcd v = coulomb_weighted_source(engine.geometry(), R, nu);
    out.push_back(v.dot(llt.solve(v)).real());
  }
  return out;
}

}  // namespace

std::vector<double> quadratic_defect_values(const ResponseEngine& engine, const std::vector<SourceDensity>& nus,
                                            const Vec3& q) {
  if (fold_frac(q).q.cwiseAbs().maxCoeff() < 1e-14) throw ExcludedPointError("F is not evaluated at q = 0");
  return resolvent_forms(engine, nus, q);
}

std::vector<double> zero_block_values(const ResponseEngine& engine, const std::vector<SourceDensity>& nus) {
  return resolvent_forms(engine, nus, Vec3::Zero());
}

double quadratic_defect_value(const ResponseEngine& engine, const SourceDensity& nu, const Vec3& q) {
  return quadratic_defect_values(engine, {nu}, q)[0];
}

std::vector<Mat3i> invariance_group(const LatticeGeometry& g, const PeriodicField& V0,
                                    const std::vector<SourceDensity>& nus, double tol) {
  std::vector<Mat3i> ops = cubic_group_recip_frac(g);
  std::vector<Mat3i> keep;
  double vscale = std::max(1e-300, V0.coeffs.cwiseAbs().maxCoeff());
  // Deterministic sample wavevectors for the source check.
  std::vector<Vec3> samples;
  for (int i = 0; i < 12; ++i)
    samples.emplace_back(0.37 * std::sin(1.3 * i + 0.2), 0.41 * std::cos(0.7 * i + 0.5), 0.29 * std::sin(2.1 * i + 1.1));
  for (const Mat3i& R : ops) {
    bool ok = true;
    for (std::size_t i = 0; ok && i < V0.basis->size(); ++i) {
      long j = V0.basis->find(R * V0.basis->index(i));
      ok = j >= 0 && std::abs(V0.coeffs[j] - V0.coeffs[long(i)]) <= tol * vscale;
    }
    for (const auto& nu : nus)
      for (const auto& s : samples) {
        if (!ok) break;
        cplx a = nu.fourier(g, g.recip * s), b = nu.fourier(g, g.recip * (R.cast<double>() * s));
        ok = std::abs(a - b) <= tol * std::max(1.0, std::abs(a));
      }
    if (ok) keep.push_back(R);
  }
  // Time reversal: F(-q) = F(q) for real potentials and sources.
  std::vector<Mat3i> out = keep;
  for (const Mat3i& R : keep) {
    Mat3i m = -R;
    if (std::find(out.begin(), out.end(), m) == out.end()) out.push_back(m);
  }
  if (out.empty()) out.push_back(Mat3i::Identity());
  return out;
}

std::vector<GridOrbit> grid_orbits(const KGrid& grid, const std::vector<Mat3i>& group, bool skip_origin) {
  std::vector<char> seen(grid.size(), 0);
  std::vector<GridOrbit> out;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (seen[i]) continue;
    std::set<std::size_t> members;
    for (const Mat3i& R : group) members.insert(grid.find(R * grid.index[i]));
    members.insert(i);
    for (std::size_t m : members) seen[m] = 1;
    if (skip_origin && grid.index[i] == Vec3i::Zero()) continue;
    out.push_back({i, int(members.size())});
  }
  return out;
}

std::vector<double> supercell_riemann_sums(PotentialPtr V0, const Cutoff& cut, int N, double eps_F,
                                           const std::vector<SourceDensity>& nus, int L, ResponseOptions opt,
                                           std::shared_ptr<FiberCache> cache) {
  opt.bz_P = L;
  ResponseEngine engine(V0, cut, N, eps_F, opt, std::move(cache));
  std::vector<Mat3i> group = invariance_group(engine.geometry(), *V0, nus, 1e-8);
  std::vector<GridOrbit> orbits = grid_orbits(engine.bz(), group, true);
  std::vector<std::vector<double>> terms(nus.size());
  for (const auto& o : orbits) {
    std::vector<double> F = quadratic_defect_values(engine, nus, engine.bz().frac(o.representative));
    for (std::size_t s = 0; s < nus.size(); ++s) terms[s].push_back(o.weight * F[s]);
  }
  if (opt.include_zero_block) {
    std::vector<double> F0 = zero_block_values(engine, nus);
    for (std::size_t s = 0; s < nus.size(); ++s) terms[s].push_back(F0[s]);
  }
  spdlog::debug("Riemann sum L={} over {} orbits", L, orbits.size());
  std::vector<double> out;
  for (auto& t : terms) out.push_back(pairwise_sum(t) / double(L * L * L));
  return out;
}

std::vector<double> bz_average_F(const ResponseEngine& engine, const std::vector<SourceDensity>& nus, const Mat3& M0,
                                 BZAverageOptions opt) {
  const LatticeGeometry& g = engine.geometry();
  double r = opt.psi_radius > 0 ? opt.psi_radius : g.bz_inradius();
  QuadratureRule rule = gauss_legendre(opt.gl_order, -0.5, 0.5);
  int n = opt.gl_order;

  // The node set is invariant only under signed permutations of fractional axes.
  std::vector<Mat3i> ops = invariance_group(g, engine.cache()->potential(), nus, 1e-8);
  bool signed_perm = true;
  for (const Mat3i& R : ops)
    for (int i = 0; i < 3; ++i) signed_perm = signed_perm && R.row(i).cwiseAbs().sum() == 1;
  if (!signed_perm) ops = {Mat3i::Identity()};

  std::vector<double> g0;
  for (const auto& nu : nus) {
    double q = nu.charge();
    g0.push_back(4 * kPi * q * q / g.cell_volume);
  }
  // Exact average of g0 Psi / (q^T M0 q).
  QuadratureRule rr = composite_gauss_legendre(16, 8, 0.0, r);
  double radial = integrate(rr, [r](double t) { return radial_cutoff(t, r); });
  QuadratureRule ct = gauss_legendre(48, -1.0, 1.0);
  const int nphi = 96;
  double angular = 0;
  for (std::size_t j = 0; j < ct.x.size(); ++j) {
    double st = std::sqrt(1 - ct.x[j] * ct.x[j]);
    for (int p = 0; p < nphi; ++p) {
      double phi = 2 * kPi * (p + 0.5) / nphi;
      Vec3 w(st * std::cos(phi), st * std::sin(phi), ct.x[j]);
      angular += ct.w[j] * (2 * kPi / nphi) / w.dot(M0 * w);
    }
  }
  double singular_avg = radial * angular / g.bz_volume;

  // Orbits of the product nodes, labelled by integer triples in [0, n).
  std::vector<int> seen(std::size_t(n) * n * n, 0);
  auto label = [n](const Vec3i& t) { return std::size_t((t[0] * n + t[1]) * n + t[2]); };
  std::vector<std::vector<double>> terms(nus.size());
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c) {
        Vec3i t(a, b, c);
        if (seen[label(t)]) continue;
        double weight = 0;
        for (const Mat3i& R : ops) {
          // Nodes are symmetric: index i <-> n-1-i under sign flip.
          Vec3i s;
          Vec3i centered = 2 * t - Vec3i::Constant(n - 1);
          Vec3i img = R * centered;
          s = (img + Vec3i::Constant(n - 1)) / 2;
          if (!seen[label(s)]) {
            seen[label(s)] = 1;
            weight += rule.w[std::size_t(s[0])] * rule.w[std::size_t(s[1])] * rule.w[std::size_t(s[2])];
          }
        }
        Vec3 qf(rule.x[std::size_t(a)], rule.x[std::size_t(b)], rule.x[std::size_t(c)]);
        Vec3 qc = g.recip * qf;
        std::vector<double> F = quadratic_defect_values(engine, nus, qf);
        double sing = radial_cutoff(qc.norm(), r) / qc.dot(M0 * qc);
        for (std::size_t s = 0; s < nus.size(); ++s) terms[s].push_back(weight * (F[s] - g0[s] * sing));
      }
  std::vector<double> out;
  for (std::size_t s = 0; s < nus.size(); ++s) out.push_back(pairwise_sum(terms[s]) + g0[s] * singular_avg);
  return out;
}

std::vector<double> quadratic_energy_difference(PotentialPtr V0, const Cutoff& cut, int N, double eps_F,
                                                const std::vector<SourceDensity>& nus, int L,
                                                const std::vector<double>& bz_average, ResponseOptions opt,
                                                std::shared_ptr<FiberCache> cache) {
  if (L < 2) throw InvalidSizeError("the quadratic energy difference needs L >= 2");
  if (bz_average.size() != nus.size()) throw DomainError("one zone average per source expected");
  std::vector<double> sums = supercell_riemann_sums(std::move(V0), cut, N, eps_F, nus, L, opt, std::move(cache));
  std::vector<double> out;
  for (std::size_t s = 0; s < nus.size(); ++s) out.push_back(0.5 * (sums[s] - bz_average[s]));
  return out;
}

}  // namespace supercorr
