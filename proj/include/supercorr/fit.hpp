#pragma once

#include <vector>

namespace supercorr {

struct InverseLFit {
  double intercept = 0;
  double slope = 0;
  double residual_exponent = 0;   // p of the best {1, 1/L, L^-p} model; 0 when residuals are at noise level
  int residual_points = 0;
  double condition = 0;           // 2-norm condition number of the design matrix
  std::vector<double> residuals;
};

// Least squares of values on {1, 1/L}; the residual exponent comes from the best
// three-term model {1, 1/L, L^-p}.
// No exponent is fitted when every residual is below noise_floor.
InverseLFit fit_inverse_L(const std::vector<double>& values, const std::vector<int>& Ls, double noise_floor = 0);

}  // namespace supercorr
