#pragma once

#include <Eigen/Dense>
#include <deque>

namespace supercorr {

// Anderson acceleration on x -> F(x); depth 0 reduces to linear mixing
// x + alpha (F(x) - x). Works on real vectors so that real fields stay real.
class AndersonMixer {
 public:
  AndersonMixer(double alpha, int depth);
  Eigen::VectorXd next(const Eigen::VectorXd& x_in, const Eigen::VectorXd& x_out);
  void reset();

 private:
  double alpha_;
  int depth_;
  Eigen::VectorXd last_x_, last_f_;
  std::deque<Eigen::VectorXd> dx_, df_;
};

Eigen::VectorXd pack_real(const Eigen::VectorXcd& z);
Eigen::VectorXcd unpack_complex(const Eigen::VectorXd& v);

}  // namespace supercorr
