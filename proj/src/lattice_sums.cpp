#include "supercorr/lattice_sums.hpp"

#include <gsl/gsl_sf_erf.h>

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numbers>

#include "supercorr/errors.hpp"
#include "supercorr/quadrature.hpp"

namespace supercorr {

namespace {

constexpr double kPi = std::numbers::pi;

// Calls fn(n, k) for every lattice vector k = B n with |k| <= R.
template <class Fn>
void for_each_lattice_point(const Mat3& B, double R, Fn&& fn) {
  Mat3 Binv = B.inverse();
  Vec3i ext;
  for (int i = 0; i < 3; ++i) ext[i] = int(std::floor(Binv.row(i).norm() * R + 1e-9));
  double R2 = R * R;
  for (int a = -ext[0]; a <= ext[0]; ++a)
    for (int b = -ext[1]; b <= ext[1]; ++b)
      for (int c = -ext[2]; c <= ext[2]; ++c) {
        Vec3i n(a, b, c);
        Vec3 k = B * n.cast<double>();
        if (k.squaredNorm() <= R2) fn(n, k);
      }
}

struct Tensor3Rule {
  std::vector<Vec3> s;  // fractional nodes in [-1/2, 1/2]^3
  std::vector<double> w;
};

Tensor3Rule tensor_rule(int order, int sub) {
  QuadratureRule r = composite_gauss_legendre(order, sub, -0.5, 0.5);
  Tensor3Rule t;
  for (std::size_t i = 0; i < r.x.size(); ++i)
    for (std::size_t j = 0; j < r.x.size(); ++j)
      for (std::size_t k = 0; k < r.x.size(); ++k) {
        t.s.emplace_back(r.x[i], r.x[j], r.x[k]);
        t.w.push_back(r.w[i] * r.w[j] * r.w[k]);
      }
  return t;
}

double cell_radius(const Mat3& B) {
  double r = 0;
  for (int a = -1; a <= 1; a += 2)
    for (int b = -1; b <= 1; b += 2)
      for (int c = -1; c <= 1; c += 2) r = std::max(r, (0.5 * B * Vec3(a, b, c)).norm());
  return r;
}

// Average of 1/|y|^2 over the cell, by the divergence theorem on its faces.
double origin_cell_average(const Mat3& B) {
  QuadratureRule r = composite_gauss_legendre(16, 8, -0.5, 0.5);
  double total = 0;
  for (int i = 0; i < 3; ++i) {
    Vec3 bi = B.col(i), bj = B.col((i + 1) % 3), bk = B.col((i + 2) % 3);
    std::vector<double> terms;
    terms.reserve(r.x.size() * r.x.size());
    for (std::size_t a = 0; a < r.x.size(); ++a)
      for (std::size_t b = 0; b < r.x.size(); ++b)
        terms.push_back(r.w[a] * r.w[b] / (0.5 * bi + r.x[a] * bj + r.x[b] * bk).squaredNorm());
    total += pairwise_sum(terms);
  }
  return total;
}

}  // namespace

const char* method_name(MadelungMethod m) { return m == MadelungMethod::ewald ? "ewald" : "direct_multipole"; }

double multipole_remainder(const Vec3& k, const Vec3& y) {
  double k2 = k.squaredNorm(), y2 = y.squaredNorm(), ky = k.dot(y);
  return (-y2 * k2 + 2 * ky * (2 * ky + y2)) / (k2 * k2 * (k + y).squaredNorm());
}

CellSum inverse_square_cell_sum(const Mat3& B, const LatticeSumOptions& opt) {
  if (opt.gl_order < 2) throw DomainError("Gauss-Legendre order must be at least 2");
  double bmax = B.colwise().norm().maxCoeff();
  double R0 = opt.radius_shells * bmax;
  double rc = cell_radius(B);

  std::vector<Tensor3Rule> rules(opt.gl_order + 1);
  for (int o = 2; o <= opt.gl_order; ++o) rules[o] = tensor_rule(o, 1);
  Tensor3Rule near = tensor_rule(opt.gl_order, 2);

  // Edge width proportional to R keeps the tail a pure series in 1/R; aliasing
  // in the lattice sum is ~exp(-(sigma a_min)^2 / 2).
  Mat3 A = 2 * kPi * B.inverse().transpose();
  R0 = std::max(R0, 8 * 7.5 / A.colwise().norm().minCoeff());
  const double sigma = R0 / 8;
  const double scales[5] = {1.0, 1.25, 1.5, 1.75, 2.0};
  std::vector<double> sums[5];
  for_each_lattice_point(B, scales[4] * (R0 + 9.5 * sigma), [&](const Vec3i& n, const Vec3& k) {
    if (n == Vec3i::Zero()) return;
    double kn = k.norm();
    double rho = rc / kn;
    const Tensor3Rule* rule = &near;
    if (rho < 1.0 / 3.0) {
      // Series in (y/k)^2: pick the order whose neglected term is below 1e-13.
      int o = int(std::ceil(std::log(1e-13) / (2 * std::log(rho))));
      rule = &rules[std::clamp(o, 2, opt.gl_order)];
    }
    double avg = 0;
    for (std::size_t i = 0; i < rule->s.size(); ++i) avg += rule->w[i] * multipole_remainder(k, B * rule->s[i]);
    for (int j = 0; j < 5; ++j) {
      double chi = 0.5 * std::erfc((kn - scales[j] * R0) / (std::sqrt(2.0) * sigma * scales[j]));
      if (chi > 1e-300) sums[j].push_back(chi * avg);
    }
  });

  // Tail of the cutoff sum is c1/R + c3/R^3 + c5/R^5 + O(R^-7): eliminate three
  // terms on the four largest radii; the same solve on the four smallest bounds the error.
  Eigen::VectorXd S(5);
  for (int j = 0; j < 5; ++j) S[j] = pairwise_sum(sums[j]);
  auto limit = [&](int first) {
    Eigen::Matrix4d V;
    for (int j = 0; j < 4; ++j) {
      double s = scales[first + j];
      V.row(j) << 1, 1 / s, std::pow(s, -3), std::pow(s, -5);
    }
    return V.fullPivLu().solve(S.segment<4>(first))[0];
  };
  double T = limit(1), T_low = limit(0);
  double origin = origin_cell_average(B);
  return {origin + T, std::abs(T - T_low), R0};
}

double madelung_shift(const LatticeGeometry& g) {
  double s = 0;
  for (int i = 0; i < 3; ++i) s += g.a(i).squaredNorm();
  // \int_Gamma |x|^2 = |Gamma| sum |a_i|^2 / 12.
  return 2 * kPi * s / (12 * g.cell_volume);
}

static MadelungResult madelung_ewald(const LatticeGeometry& g) {
  double vol = g.cell_volume;
  double alpha = std::sqrt(kPi) / std::cbrt(vol);
  double rcut = 6.5 / alpha;
  double kcut = 2 * alpha * 6.5;
  std::vector<double> real_terms, recip_terms;
  for_each_lattice_point(g.direct, rcut, [&](const Vec3i& n, const Vec3& R) {
    if (n == Vec3i::Zero()) return;
    double r = R.norm();
    real_terms.push_back(gsl_sf_erfc(alpha * r) / r);
  });
  for_each_lattice_point(g.recip, kcut, [&](const Vec3i& n, const Vec3& k) {
    if (n == Vec3i::Zero()) return;
    double k2 = k.squaredNorm();
    recip_terms.push_back(std::exp(-k2 / (4 * alpha * alpha)) / k2);
  });
  double m = pairwise_sum(real_terms) - 2 * alpha / std::sqrt(kPi) + 4 * kPi / vol * pairwise_sum(recip_terms) -
             kPi / (alpha * alpha * vol);
  MadelungResult out;
  out.m = m;
  out.m_prime = m + madelung_shift(g);
  out.method = MadelungMethod::ewald;
  // Neglected terms are below erfc(6.5) and exp(-6.5^2) in relative size.
  out.est_error = 1e-12 * (1 + std::abs(m));
  return out;
}

MadelungResult madelung(const LatticeGeometry& g, MadelungMethod method, const LatticeSumOptions& opt) {
  if (method == MadelungMethod::ewald) return madelung_ewald(g);
  CellSum s = inverse_square_cell_sum(g.recip, opt);
  if (s.est_error > opt.tolerance * std::max(1.0, std::abs(s.value)))
    throw IncreaseRadiusError("multipole lattice sum not converged; increase radius_shells");
  MadelungResult out;
  double scale = g.bz_volume / (2 * kPi * kPi);
  out.m = -scale * s.value;
  out.m_prime = out.m + madelung_shift(g);
  out.method = MadelungMethod::direct_multipole;
  out.est_error = scale * s.est_error;
  return out;
}

CorrectionConstant correction_constant(const LatticeGeometry& g, const Mat3& M, const LatticeSumOptions& opt) {
  if ((M - M.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, M.cwiseAbs().maxCoeff()))
    throw DomainError("correction constant needs a symmetric matrix");
  Eigen::SelfAdjointEigenSolver<Mat3> es(M);
  if (es.eigenvalues().minCoeff() <= 0) throw DomainError("correction constant needs a positive definite matrix");
  Mat3 sqrtM = es.operatorSqrt();
  CellSum s = inverse_square_cell_sum(sqrtM * g.recip, opt);
  if (s.est_error > opt.tolerance * std::max(1.0, std::abs(s.value)))
    throw IncreaseRadiusError("correction constant not converged; increase radius_shells");
  CorrectionConstant out;
  out.a = s.value;
  out.M = M;
  out.radius = s.radius;
  out.extrapolation_order = 3;
  out.est_error = s.est_error;
  return out;
}

double riemann_sums(const LatticeGeometry& g, const ScalarField& f, double lambda, RiemannMode mode, double support) {
  if (mode == RiemannMode::integral) {
    // Spherical coordinates: rho^2 f is smooth even for the 1/|q|^2 integrands used here.
    QuadratureRule rr = composite_gauss_legendre(16, 16, 0.0, support);
    QuadratureRule ct = gauss_legendre(32, -1.0, 1.0);
    const int nphi = 64;
    std::vector<double> terms;
    terms.reserve(rr.x.size() * ct.x.size() * nphi);
    for (std::size_t i = 0; i < rr.x.size(); ++i)
      for (std::size_t j = 0; j < ct.x.size(); ++j) {
        double st = std::sqrt(1 - ct.x[j] * ct.x[j]);
        for (int p = 0; p < nphi; ++p) {
          double phi = 2 * kPi * (p + 0.5) / nphi;
          Vec3 q = rr.x[i] * Vec3(st * std::cos(phi), st * std::sin(phi), ct.x[j]);
          double v = f(q);
          if (!std::isfinite(v)) throw DomainError("integrand not finite");
          terms.push_back(rr.w[i] * ct.w[j] * (2 * kPi / nphi) * rr.x[i] * rr.x[i] * v);
        }
      }
    return pairwise_sum(terms) / g.bz_volume;
  }
  std::vector<double> terms;
  for_each_lattice_point(g.recip, support * lambda, [&](const Vec3i& n, const Vec3& k) {
    if (mode == RiemannMode::punctured && n == Vec3i::Zero()) return;
    double v = f(k / lambda);
    if (!std::isfinite(v)) throw DomainError("summand not finite at a lattice point");
    terms.push_back(v);
  });
  return pairwise_sum(terms) / (lambda * lambda * lambda);
}

PowerFit fit_power_decay(const std::vector<int>& Ls, const std::vector<double>& errors, double floor) {
  std::vector<double> x, y;
  for (std::size_t i = 0; i < Ls.size(); ++i)
    if (std::abs(errors[i]) > floor && errors[i] != 0) {
      x.push_back(std::log(double(Ls[i])));
      y.push_back(std::log(std::abs(errors[i])));
    }
  PowerFit out;
  out.used = int(x.size());
  if (x.size() < 2) return out;
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) mx += x[i], my += y[i];
  mx /= x.size();
  my /= x.size();
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  out.exponent = -sxy / sxx;
  out.r_squared = syy > 0 ? sxy * sxy / (sxx * syy) : 1.0;
  return out;
}

RiemannReport rate_exponential(const ScalarField& f, const std::vector<int>& Ls, double reference) {
  RiemannReport rep;
  rep.reference = reference;
  std::vector<double> xs, ys;
  for (int L : Ls) {
    LatticeGeometry unit = LatticeGeometry::cubic(1.0);
    KGrid grid = kpoint_grid(unit, L);
    std::vector<double> terms;
    terms.reserve(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) terms.push_back(f(grid.frac(i)));
    double v = pairwise_sum(terms) / double(grid.size());
    rep.Ls.push_back(L);
    rep.values.push_back(v);
    rep.errors.push_back(std::abs(v - reference));
    if (rep.errors.back() > 0) {
      xs.push_back(L);
      ys.push_back(std::log10(rep.errors.back()));
    }
  }
  if (xs.size() >= 2) {
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) mx += xs[i], my += ys[i];
    mx /= xs.size();
    my /= xs.size();
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      sxx += (xs[i] - mx) * (xs[i] - mx);
      sxy += (xs[i] - mx) * (ys[i] - my);
      syy += (ys[i] - my) * (ys[i] - my);
    }
    rep.rate = sxy / sxx;
    rep.r_squared = syy > 0 ? sxy * sxy / (sxx * syy) : 1.0;
  }
  return rep;
}

RiemannReport rate_singular(const LatticeGeometry& geo, const ScalarField& g, const Mat3& M, CutoffParams psi,
                            const std::vector<int>& Ls, const LatticeSumOptions& opt, std::optional<double> a_known) {
  Eigen::SelfAdjointEigenSolver<Mat3> es(0.5 * (M + M.transpose()));
  if (es.eigenvalues().minCoeff() < 1 - 1e-12) throw DomainError("rate_singular requires M >= 1");
  double r = psi.r > 0 ? psi.r : 0.4 * geo.bz_inradius();
  ScalarField fpsi = [&](const Vec3& q) {
    double q2 = q.dot(M * q);
    return g(q) / q2 * radial_cutoff(q.norm(), r);
  };
  double a = a_known ? *a_known : correction_constant(geo, M, opt).a;
  double g0 = g(Vec3::Zero());
  double I = riemann_sums(geo, fpsi, 1.0, RiemannMode::integral, r);

  RiemannReport rep;
  rep.reference = a * g0;
  for (int L : Ls) {
    double D = I - riemann_sums(geo, fpsi, double(L), RiemannMode::punctured, r);
    rep.Ls.push_back(L);
    rep.values.push_back(D);
    rep.errors.push_back(D - a * g0 / L);
  }
  // Least squares on {1, 1/L}.
  Eigen::MatrixXd A(Ls.size(), 2);
  Eigen::VectorXd y(Ls.size());
  for (std::size_t i = 0; i < Ls.size(); ++i) {
    A(long(i), 0) = 1;
    A(long(i), 1) = 1.0 / Ls[i];
    y[long(i)] = rep.values[i];
  }
  Eigen::Vector2d c = A.colPivHouseholderQr().solve(y);
  rep.intercept = c[0];
  rep.inverse_L_coeff = c[1];
  double scale = 0;
  for (double v : rep.values) scale = std::max(scale, std::abs(v));
  PowerFit pf = fit_power_decay(rep.Ls, rep.errors, 1e-12 * std::max(scale, 1e-300) * 100);
  rep.rate = pf.exponent;
  rep.r_squared = pf.r_squared;
  return rep;
}

RiemannReport rate_sobolev(const LatticeGeometry& geo, const ScalarField& f, double support, double integral,
                           const std::vector<int>& Ls) {
  RiemannReport rep;
  rep.reference = integral;
  for (int L : Ls) {
    double v = riemann_sums(geo, f, double(L), RiemannMode::full, support);
    rep.Ls.push_back(L);
    rep.values.push_back(v);
    rep.errors.push_back(std::abs(integral - v));
  }
  PowerFit pf = fit_power_decay(rep.Ls, rep.errors, 0);
  rep.rate = pf.exponent;
  rep.r_squared = pf.r_squared;
  return rep;
}

}  // namespace supercorr
