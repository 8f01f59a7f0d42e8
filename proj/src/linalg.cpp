#include "supercorr/linalg.hpp"

#include <lapacke.h>

#include <algorithm>
#include <string>
#include <vector>

#include "supercorr/errors.hpp"

namespace supercorr {

namespace {

// Householder reduction loses about eps * ||H|| absolutely, which the smoothed
// kinetic edge (entries near 1e6 * ecut) turns into 1e-9 errors on the low
// states. The Rayleigh quotient is only second order in the vector error, so
// recomputing it restores the eigenvalues to rounding level.
template <class Mat, class Vecs>
void rayleigh_refine(const Mat& H, Eigen::VectorXd& w, Vecs& V) {
  if (w.size() == 0) return;
  Vecs HV = H * V;
  for (long i = 0; i < w.size(); ++i) w[i] = std::real(V.col(i).dot(HV.col(i))) / V.col(i).squaredNorm();
  for (long i = 1; i < w.size(); ++i) {
    if (w[i] >= w[i - 1]) continue;
    // Rare swap of nearly degenerate values; restore the ascending order.
    std::vector<long> p(std::size_t(w.size()));
    for (long k = 0; k < w.size(); ++k) p[std::size_t(k)] = k;
    std::stable_sort(p.begin(), p.end(), [&w](long a, long b) { return w[a] < w[b]; });
    Eigen::VectorXd w2(w.size());
    Vecs V2(V.rows(), V.cols());
    for (long k = 0; k < w.size(); ++k) {
      w2[k] = w[p[std::size_t(k)]];
      V2.col(k) = V.col(p[std::size_t(k)]);
    }
    w = std::move(w2);
    V = std::move(V2);
    return;
  }
}

}  // namespace

void hermitian_eig(const Eigen::MatrixXcd& H, Eigen::VectorXd& w, Eigen::MatrixXcd& V) {
  lapack_int n = lapack_int(H.rows());
  V = H;
  w.resize(n);
  if (n == 0) return;
  lapack_int info = LAPACKE_zheevd(LAPACK_COL_MAJOR, 'V', 'U', n, reinterpret_cast<lapack_complex_double*>(V.data()),
                                   n, w.data());
  if (info > 0) {
    // Divide and conquer occasionally fails on badly scaled spectra; QR iteration is slower but robust.
    V = H;
    info = LAPACKE_zheev(LAPACK_COL_MAJOR, 'V', 'U', n, reinterpret_cast<lapack_complex_double*>(V.data()), n,
                         w.data());
  }
  if (info != 0) throw EigensolverError("zheev failed with info " + std::to_string(info));
  rayleigh_refine(H, w, V);
}

void hermitian_eig_lowest(const Eigen::MatrixXcd& H, int count, Eigen::VectorXd& w, Eigen::MatrixXcd& V) {
  lapack_int n = lapack_int(H.rows());
  if (count < 1 || count > n) throw EigensolverError("requested eigenpair count out of range");
  Eigen::MatrixXcd A = H;
  Eigen::VectorXd all(n);
  V.resize(n, count);
  std::vector<lapack_int> isuppz(2 * std::size_t(count));
  lapack_int found = 0;
  lapack_int info = LAPACKE_zheevr(LAPACK_COL_MAJOR, 'V', 'I', 'U', n,
                                   reinterpret_cast<lapack_complex_double*>(A.data()), n, 0.0, 0.0, 1, count, 0.0,
                                   &found, all.data(), reinterpret_cast<lapack_complex_double*>(V.data()), n,
                                   isuppz.data());
  if (info != 0 || found != count) throw EigensolverError("zheevr failed with info " + std::to_string(info));
  w = all.head(count);
  rayleigh_refine(H, w, V);
}

void symmetric_eig_lowest(const Eigen::MatrixXd& H, int count, Eigen::VectorXd& w, Eigen::MatrixXd& V) {
  lapack_int n = lapack_int(H.rows());
  if (count < 1 || count > n) throw EigensolverError("requested eigenpair count out of range");
  Eigen::MatrixXd A = H;
  Eigen::VectorXd all(n);
  V.resize(n, count);
  std::vector<lapack_int> isuppz(2 * std::size_t(count));
  lapack_int found = 0;
  lapack_int info = LAPACKE_dsyevr(LAPACK_COL_MAJOR, 'V', 'I', 'U', n, A.data(), n, 0.0, 0.0, 1, count, 0.0, &found,
                                   all.data(), V.data(), n, isuppz.data());
  if (info != 0 || found != count) throw EigensolverError("dsyevr failed with info " + std::to_string(info));
  w = all.head(count);
  rayleigh_refine(H, w, V);
}

}  // namespace supercorr
