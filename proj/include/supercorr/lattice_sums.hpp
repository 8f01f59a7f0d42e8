#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "supercorr/geometry.hpp"

namespace supercorr {

enum class MadelungMethod { ewald, direct_multipole };
const char* method_name(MadelungMethod m);

struct MadelungResult {
  double m = 0;
  double m_prime = 0;
  MadelungMethod method = MadelungMethod::ewald;
  double est_error = 0;
};

struct LatticeSumOptions {
  int gl_order = 8;             // per-axis Gauss-Legendre order for cell averages
  double radius_shells = 12.0;  // base cutoff radius in units of the longest reciprocal basis vector
  double tolerance = 1e-9;      // accepted Richardson spread
};

struct CorrectionConstant {
  double a = 0;
  Mat3 M = Mat3::Identity();
  double radius = 0;            // base cutoff radius used (Cartesian, transformed lattice)
  int extrapolation_order = 0;  // number of removed tail orders
  double est_error = 0;
};

// Sum over the lattice generated by `basis` (columns) of the cell averages of
// 1/|k+y|^2 - 1(k != 0)/|k|^2, y uniform in the half-open cell of `basis`.
struct CellSum {
  double value;
  double est_error;
  double radius;
};
CellSum inverse_square_cell_sum(const Mat3& basis, const LatticeSumOptions& opt = {});

MadelungResult madelung(const LatticeGeometry& g, MadelungMethod method, const LatticeSumOptions& opt = {});
// m' - m = 2 pi |Gamma|^{-2} \int_Gamma |x|^2.
double madelung_shift(const LatticeGeometry& g);

CorrectionConstant correction_constant(const LatticeGeometry& g, const Mat3& M, const LatticeSumOptions& opt = {});

// Multipole remainder 1/|k+y|^2 - 1/|k|^2 + 2 k.y/|k|^4 written without cancellation.
double multipole_remainder(const Vec3& k, const Vec3& y);

// Riemann sums over the reciprocal lattice of g.
using ScalarField = std::function<double(const Vec3&)>;
enum class RiemannMode { integral, full, punctured };
// integral: I(f) = |Gamma*|^{-1} \int f, evaluated in spherical coordinates on
// the ball of radius `support` (f must vanish outside it).
// full: I_lambda(f) = lambda^{-3} sum_k f(k/lambda) over |k/lambda| < support.
// punctured: I_lambda^0, the same sum without k = 0.
double riemann_sums(const LatticeGeometry& g, const ScalarField& f, double lambda, RiemannMode mode, double support);

struct RiemannReport {
  std::vector<int> Ls;
  std::vector<double> values;   // the sums or differences per L
  std::vector<double> errors;   // |I - I_L| or residual after the 1/L term
  double rate = 0;              // fitted exponent (or slope of log10 error for the exponential mode)
  double r_squared = 0;
  double inverse_L_coeff = 0;   // singular mode only
  double intercept = 0;
  double reference = 0;         // integral or predicted coefficient
};

// f is Gamma*-periodic and given on fractional coordinates; `reference` is its BZ average.
RiemannReport rate_exponential(const ScalarField& f_frac, const std::vector<int>& Ls, double reference);

struct CutoffParams {
  double r = 0;  // Psi = 1 on [0, r/2], 0 beyond r; 0 selects 0.4 * BZ inradius
};

// D_L = I(f Psi) - I_L^0(f Psi) with f = g/(q^T M q); fits D_L on {1, 1/L} and the
// decay of D_L - a g(0)/L where a = correction_constant(g, M).
RiemannReport rate_singular(const LatticeGeometry& geo, const ScalarField& g, const Mat3& M, CutoffParams psi,
                            const std::vector<int>& Ls, const LatticeSumOptions& opt = {},
                            std::optional<double> a_known = std::nullopt);

// Errors |I(f) - I_L(f)| for compactly supported f with known integral I(f).
RiemannReport rate_sobolev(const LatticeGeometry& geo, const ScalarField& f, double support, double integral,
                           const std::vector<int>& Ls);

// Least-squares slope of log|e| against log L using only entries above `floor`.
struct PowerFit {
  double exponent = 0;
  double r_squared = 0;
  int used = 0;
};
PowerFit fit_power_decay(const std::vector<int>& Ls, const std::vector<double>& errors, double floor = 0);

}  // namespace supercorr
