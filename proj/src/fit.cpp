#include "supercorr/fit.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <set>


#include "supercorr/errors.hpp"

namespace supercorr {

InverseLFit fit_inverse_L(const std::vector<double>& values, const std::vector<int>& Ls, double noise_floor) {
  if (values.size() != Ls.size()) throw DomainError("one value per L expected");
  std::set<int> distinct(Ls.begin(), Ls.end());
  if (distinct.size() < 3) throw RankDeficientError("fit on {1, 1/L} needs at least three distinct L");
  long n = long(Ls.size());
  Eigen::MatrixXd A(n, 2);
  Eigen::VectorXd y(n);
  for (long i = 0; i < n; ++i) {
    if (Ls[std::size_t(i)] <= 0) throw DomainError("L must be positive");
    A(i, 0) = 1;
    A(i, 1) = 1.0 / Ls[std::size_t(i)];
    y[i] = values[std::size_t(i)];
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  Eigen::Vector2d c = svd.solve(y);
  InverseLFit out;
  out.intercept = c[0];
  out.slope = c[1];
  out.condition = svd.singularValues()[0] / svd.singularValues()[1];
  Eigen::VectorXd r = y - A * c;
  out.residuals.assign(r.data(), r.data() + n);
  if (r.cwiseAbs().maxCoeff() <= noise_floor || n < 4) return out;

  // Exponent of the leading correction: p minimizing the misfit of {1, 1/L, L^-p}.
  auto misfit = [&](double p) {
    Eigen::MatrixXd B(n, 3);
    B.leftCols(2) = A;
    for (long i = 0; i < n; ++i) B(i, 2) = std::pow(double(Ls[std::size_t(i)]), -p);
    Eigen::VectorXd c3 = B.colPivHouseholderQr().solve(y);
    return (y - B * c3).norm();
  };
  double best = 0.5, best_val = misfit(best);
  for (double p = 0.55; p <= 8.0; p += 0.05) {
    double v = misfit(p);
    if (v < best_val) best = p, best_val = v;
  }
  double lo = std::max(0.3, best - 0.05), hi = best + 0.05;
  const double phi = 0.5 * (std::sqrt(5.0) - 1);
  for (int it = 0; it < 60; ++it) {
    double a = hi - phi * (hi - lo), b = lo + phi * (hi - lo);
    if (misfit(a) < misfit(b)) hi = b; else lo = a;
  }
  out.residual_exponent = 0.5 * (lo + hi);
  out.residual_points = int(n);
  return out;
}

}  // namespace supercorr
