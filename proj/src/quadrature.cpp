#include "supercorr/quadrature.hpp"

#include <gsl/gsl_integration.h>

#include <cmath>
#include <memory>
#include <stdexcept>

namespace supercorr {

QuadratureRule gauss_legendre(int n, double a, double b) {
  if (n < 1) throw std::invalid_argument("Gauss-Legendre order must be positive");
  std::unique_ptr<gsl_integration_glfixed_table, void (*)(gsl_integration_glfixed_table*)> table(
      gsl_integration_glfixed_table_alloc(std::size_t(n)), gsl_integration_glfixed_table_free);
  QuadratureRule rule;
  rule.x.resize(n);
  rule.w.resize(n);
  for (int i = 0; i < n; ++i) gsl_integration_glfixed_point(a, b, std::size_t(i), &rule.x[i], &rule.w[i], table.get());
  return rule;
}

QuadratureRule composite_gauss_legendre(int n, int panels, double a, double b) {
  QuadratureRule rule;
  double h = (b - a) / panels;
  for (int p = 0; p < panels; ++p) {
    QuadratureRule r = gauss_legendre(n, a + p * h, a + (p + 1) * h);
    rule.x.insert(rule.x.end(), r.x.begin(), r.x.end());
    rule.w.insert(rule.w.end(), r.w.begin(), r.w.end());
  }
  return rule;
}

double integrate(const QuadratureRule& rule, const std::function<double(double)>& f) {
  std::vector<double> terms(rule.x.size());
  for (std::size_t i = 0; i < rule.x.size(); ++i) terms[i] = rule.w[i] * f(rule.x[i]);
  return pairwise_sum(terms);
}

double smooth_step(double t) {
  if (t <= 0) return 0.0;
  if (t >= 1) return 1.0;
  double a = std::exp(-1.0 / t);
  double b = std::exp(-1.0 / (1.0 - t));
  return a / (a + b);
}

double smooth_step_derivative(double t) {
  if (t <= 0 || t >= 1) return 0.0;
  double a = std::exp(-1.0 / t);
  double b = std::exp(-1.0 / (1.0 - t));
  return a * b * (1.0 / (t * t) + 1.0 / ((1 - t) * (1 - t))) / ((a + b) * (a + b));
}

double radial_cutoff(double rho, double r) { return 1.0 - smooth_step((rho - 0.5 * r) / (0.5 * r)); }

static double pairwise_range(const double* v, std::size_t n) {
  if (n <= 8) {
    double s = 0;
    for (std::size_t i = 0; i < n; ++i) s += v[i];
    return s;
  }
  std::size_t h = n / 2;
  return pairwise_range(v, h) + pairwise_range(v + h, n - h);
}

double pairwise_sum(const std::vector<double>& v) { return pairwise_range(v.data(), v.size()); }

}  // namespace supercorr
