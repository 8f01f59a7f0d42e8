#include "supercorr/fields.hpp"

#include <cmath>
#include <numbers>

#include "supercorr/errors.hpp"

namespace supercorr {

namespace {
constexpr double kFourPi = 4.0 * std::numbers::pi;
}

PlaneWaveBasis::PlaneWaveBasis(const LatticeGeometry& g, int L, double ecut) : geom_(g), L_(L), ecut_(ecut) {
  if (L <= 0) throw InvalidSizeError("plane-wave basis needs L >= 1");
  if (!(ecut >= 0)) throw DomainError("cutoff must be non-negative");
  double kmax = std::sqrt(2.0 * ecut);
  // n_i = L a_i.k / (2 pi), so |n_i| <= L |a_i| kmax / (2 pi).
  for (int i = 0; i < 3; ++i)
    ext_[i] = int(std::floor(L * g.a(i).norm() * kmax / (2 * std::numbers::pi) + 1e-9));
  Vec3i span = 2 * ext_ + Vec3i::Ones();
  lut_.assign(std::size_t(span.prod()), -1);
  for (int a = -ext_[0]; a <= ext_[0]; ++a)
    for (int b = -ext_[1]; b <= ext_[1]; ++b)
      for (int c = -ext_[2]; c <= ext_[2]; ++c) {
        Vec3i n(a, b, c);
        Vec3 k = g.recip * n.cast<double>() / double(L);
        if (0.5 * k.squaredNorm() > ecut * (1 + 1e-12)) continue;
        std::size_t pos = (std::size_t(a + ext_[0]) * span[1] + std::size_t(b + ext_[1])) * span[2] +
                          std::size_t(c + ext_[2]);
        lut_[pos] = long(n_.size());
        n_.push_back(n);
        k_.push_back(k);
      }
}

long PlaneWaveBasis::find(const Vec3i& n) const {
  for (int i = 0; i < 3; ++i)
    if (std::abs(n[i]) > ext_[i]) return -1;
  Vec3i span = 2 * ext_ + Vec3i::Ones();
  std::size_t pos = (std::size_t(n[0] + ext_[0]) * span[1] + std::size_t(n[1] + ext_[1])) * span[2] +
                    std::size_t(n[2] + ext_[2]);
  return lut_[pos];
}

bool PlaneWaveBasis::same_as(const PlaneWaveBasis& o) const {
  return this == &o || (L_ == o.L_ && ecut_ == o.ecut_ && n_.size() == o.n_.size() &&
                        (geom_.direct - o.geom_.direct).cwiseAbs().maxCoeff() < 1e-14);
}

PeriodicField::PeriodicField(BasisPtr b, Eigen::VectorXcd c) : basis(std::move(b)), coeffs(std::move(c)) {
  if (std::size_t(coeffs.size()) != basis->size())
    throw BasisMismatchError("coefficient count does not match the basis");
}

bool PeriodicField::is_real(double tol) const {
  double scale = std::max(1.0, coeffs.cwiseAbs().maxCoeff());
  for (std::size_t i = 0; i < basis->size(); ++i) {
    long j = basis->find(-basis->index(i));
    if (std::abs(coeffs[long(j)] - std::conj(coeffs[long(i)])) > tol * scale) return false;
  }
  return true;
}

void PeriodicField::check_real(double tol) const {
  if (!is_real(tol)) throw DomainError("field flagged real violates c_{-k} = conj(c_k)");
}

cplx PeriodicField::value_at(const Vec3& x) const {
  cplx s = 0;
  for (std::size_t i = 0; i < basis->size(); ++i) s += coeffs[long(i)] * std::exp(cplx(0, basis->k(i).dot(x)));
  return s / std::sqrt(basis->volume());
}

void require_same_basis(const PeriodicField& f, const PeriodicField& g) {
  if (!f.basis || !g.basis || !f.basis->same_as(*g.basis))
    throw BasisMismatchError("fields live on different plane-wave bases");
}

PeriodicField PeriodicField::operator+(const PeriodicField& o) const {
  require_same_basis(*this, o);
  return PeriodicField(basis, coeffs + o.coeffs);
}

PeriodicField PeriodicField::operator-(const PeriodicField& o) const {
  require_same_basis(*this, o);
  return PeriodicField(basis, coeffs - o.coeffs);
}

PeriodicField PeriodicField::operator*(double s) const { return PeriodicField(basis, coeffs * s); }

PeriodicField PeriodicField::restricted_to(BasisPtr target) const {
  if (target->L() != basis->L() || (target->geometry().direct - basis->geometry().direct).cwiseAbs().maxCoeff() > 1e-14)
    throw BasisMismatchError("restriction needs bases of the same cell");
  PeriodicField out(target);
  for (std::size_t i = 0; i < target->size(); ++i) {
    long j = basis->find(target->index(i));
    if (j >= 0) out.coeffs[long(i)] = coeffs[j];
  }
  return out;
}

cplx coulomb_form_complex(const PeriodicField& f, const PeriodicField& g) {
  require_same_basis(f, g);
  cplx s = 0;
  const auto& b = *f.basis;
  for (std::size_t i = 0; i < b.size(); ++i) {
    double k2 = b.k2(i);
    if (k2 == 0) continue;
    s += std::conj(f.coeffs[long(i)]) * g.coeffs[long(i)] / k2;
  }
  return kFourPi * s;
}

double coulomb_form(const PeriodicField& f, const PeriodicField& g) { return coulomb_form_complex(f, g).real(); }

PeriodicField green_convolve(const PeriodicField& f) {
  PeriodicField out(f.basis);
  for (std::size_t i = 0; i < f.basis->size(); ++i) {
    double k2 = f.basis->k2(i);
    if (k2 > 0) out.coeffs[long(i)] = kFourPi * f.coeffs[long(i)] / k2;
  }
  return out;
}

PeriodicField sqrt_vc_apply(const PeriodicField& f) {
  PeriodicField out(f.basis);
  double s = std::sqrt(kFourPi);
  for (std::size_t i = 0; i < f.basis->size(); ++i) {
    double k2 = f.basis->k2(i);
    if (k2 > 0) out.coeffs[long(i)] = s * f.coeffs[long(i)] / std::sqrt(k2);
  }
  return out;
}

CoulombNorms coulomb_norms(const PeriodicField& f, double mean_tol) {
  double scale = std::max(1.0, f.l2_norm());
  if (std::abs(f.mean_coeff()) > mean_tol * scale)
    throw DomainError("the dual Coulomb norm requires a zero-mean field");
  double c = 0, bl = 0;
  for (std::size_t i = 0; i < f.basis->size(); ++i) {
    double k2 = f.basis->k2(i);
    if (k2 == 0) continue;
    double a = std::norm(f.coeffs[long(i)]);
    c += a / k2;
    bl += a * k2;
  }
  return {std::sqrt(kFourPi * c), std::sqrt(bl / kFourPi)};
}

CubicSymmetryFlag detect_cubic_symmetry(const PeriodicField& f, double tol) {
  CubicSymmetryFlag flag;
  const auto& b = *f.basis;
  const auto& g = b.geometry();
  double scale = std::max(1e-300, f.coeffs.cwiseAbs().maxCoeff());
  for (const Mat3i& s : {flag.S1, flag.S2}) {
    // S acts on integer wavevector labels through B^{-1} S B.
    Mat3 m = g.recip_inv * s.cast<double>() * g.recip;
    Mat3 r = m.array().round().matrix();
    if ((m - r).cwiseAbs().maxCoeff() > 1e-10) return flag;
    Mat3i mi = r.cast<int>();
    for (std::size_t i = 0; i < b.size(); ++i) {
      long j = b.find(mi * b.index(i));
      if (j < 0) return flag;
      if (std::abs(f.coeffs[j] - f.coeffs[long(i)]) > tol * scale) return flag;
    }
  }
  flag.is_isotropic_cubic = true;
  return flag;
}

nlohmann::json basis_to_json(const PlaneWaveBasis& b) {
  return {{"lattice", b.geometry().rows()}, {"L", b.L()}, {"cutoff", b.ecut()}};
}

nlohmann::json field_to_json(const PeriodicField& f) {
  nlohmann::json coeffs = nlohmann::json::array();
  for (std::size_t i = 0; i < f.basis->size(); ++i) {
    const Vec3i& n = f.basis->index(i);
    cplx c = f.coeffs[long(i)];
    coeffs.push_back({n[0], n[1], n[2], c.real(), c.imag()});
  }
  return {{"basis", basis_to_json(*f.basis)}, {"coeffs", coeffs}};
}

PeriodicField field_from_json(const nlohmann::json& j) {
  const auto& jb = j.at("basis");
  auto rows = jb.at("lattice").get<std::array<double, 9>>();
  auto basis = std::make_shared<const PlaneWaveBasis>(LatticeGeometry::from_rows(rows), jb.at("L").get<int>(),
                                                      jb.at("cutoff").get<double>());
  PeriodicField f(basis);
  for (const auto& e : j.at("coeffs")) {
    Vec3i n(e[0].get<int>(), e[1].get<int>(), e[2].get<int>());
    long i = basis->find(n);
    if (i < 0) throw BasisMismatchError("serialized wavevector outside the basis sphere");
    f.coeffs[i] = cplx(e[3].get<double>(), e[4].get<double>());
  }
  return f;
}

}  // namespace supercorr
