#include "supercorr/mixing.hpp"

#include "supercorr/errors.hpp"

namespace supercorr {

AndersonMixer::AndersonMixer(double alpha, int depth) : alpha_(alpha), depth_(depth) {
  if (!(alpha > 0 && alpha <= 1)) throw ConfigError("mixing parameter must lie in (0, 1]");
  if (depth < 0) throw ConfigError("Anderson depth must be non-negative");
}

void AndersonMixer::reset() {
  last_x_.resize(0);
  last_f_.resize(0);
  dx_.clear();
  df_.clear();
}

Eigen::VectorXd AndersonMixer::next(const Eigen::VectorXd& x, const Eigen::VectorXd& fx) {
  Eigen::VectorXd f = fx - x;
  if (depth_ == 0) return x + alpha_ * f;
  if (last_x_.size() == x.size()) {
    dx_.push_back(x - last_x_);
    df_.push_back(f - last_f_);
    if (int(dx_.size()) > depth_) {
      dx_.pop_front();
      df_.pop_front();
    }
  }
  last_x_ = x;
  last_f_ = f;
  if (dx_.empty()) return x + alpha_ * f;
  long m = long(df_.size());
  Eigen::MatrixXd DF(x.size(), m), DX(x.size(), m);
  for (long j = 0; j < m; ++j) {
    DF.col(j) = df_[std::size_t(j)];
    DX.col(j) = dx_[std::size_t(j)];
  }
  Eigen::VectorXd gamma = DF.completeOrthogonalDecomposition().solve(f);
  return x + alpha_ * f - (DX + alpha_ * DF) * gamma;
}

Eigen::VectorXd pack_real(const Eigen::VectorXcd& z) {
  Eigen::VectorXd v(2 * z.size());
  v.head(z.size()) = z.real();
  v.tail(z.size()) = z.imag();
  return v;
}

Eigen::VectorXcd unpack_complex(const Eigen::VectorXd& v) {
  long n = v.size() / 2;
  Eigen::VectorXcd z(n);
  z.real() = v.head(n);
  z.imag() = v.tail(n);
  return z;
}

}  // namespace supercorr
