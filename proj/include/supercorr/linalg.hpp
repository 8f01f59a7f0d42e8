#pragma once

#include <Eigen/Dense>

namespace supercorr {

// All eigenpairs of a Hermitian matrix, ascending (LAPACK zheevd).
void hermitian_eig(const Eigen::MatrixXcd& H, Eigen::VectorXd& w, Eigen::MatrixXcd& V);
// The `count` lowest eigenpairs (LAPACK zheevr, index range).
void hermitian_eig_lowest(const Eigen::MatrixXcd& H, int count, Eigen::VectorXd& w, Eigen::MatrixXcd& V);
// Real symmetric variant (dsyevr).
void symmetric_eig_lowest(const Eigen::MatrixXd& H, int count, Eigen::VectorXd& w, Eigen::MatrixXd& V);

}  // namespace supercorr
