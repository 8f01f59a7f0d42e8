#pragma once

#include <functional>
#include <vector>

namespace supercorr {

struct QuadratureRule {
  std::vector<double> x;
  std::vector<double> w;
};

// Gauss-Legendre rule with n nodes on [a, b].
QuadratureRule gauss_legendre(int n, double a = -1.0, double b = 1.0);
// Composite rule: `panels` equal panels of n-point Gauss-Legendre on [a, b].
QuadratureRule composite_gauss_legendre(int n, int panels, double a, double b);

double integrate(const QuadratureRule& rule, const std::function<double(double)>& f);

// Smooth step: 0 for t <= 0, 1 for t >= 1, C-infinity in between.
double smooth_step(double t);
double smooth_step_derivative(double t);
// Radial cutoff: 1 on [0, r/2], 0 on [r, inf), smooth and non-increasing.
double radial_cutoff(double rho, double r);

// Pairwise (cascade) summation for reproducible reductions.
double pairwise_sum(const std::vector<double>& v);

}  // namespace supercorr
