#include "satrack/estimation/block_tridiag.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

namespace satrack {
namespace {

// Forward Schur sweep: S_0 = D_0, S_k = D_k - U_{k-1}^T S_{k-1}^{-1} U_{k-1}.
bool forward_sweep(const std::vector<Mat6>& d, const std::vector<Mat6>& u,
                   std::vector<Eigen::LLT<Mat6>>& llts, std::vector<Mat6>* schur) {
  const int n = static_cast<int>(d.size());
  llts.resize(n);
  if (schur) schur->resize(n);
  Mat6 s = d[0];
  for (int k = 0; k < n; ++k) {
    if (k > 0) s = d[k] - u[k - 1].transpose() * llts[k - 1].solve(u[k - 1]);
    if (schur) (*schur)[k] = s;
    llts[k].compute(s);
    if (llts[k].info() != Eigen::Success) return false;
  }
  return true;
}

}  // namespace

bool solve_damped(const BlockTridiag& sys, double lambda, std::vector<Vec6>& delta) {
  const int n = sys.size();
  delta.assign(n, Vec6::Zero());
  if (n == 0) return true;

  std::vector<Mat6> d(n);
  for (int k = 0; k < n; ++k) {
    d[k] = sys.d[k];
    d[k].diagonal() += lambda * sys.d[k].diagonal();
  }

  std::vector<Eigen::LLT<Mat6>> llts;
  if (!forward_sweep(d, sys.u, llts, nullptr)) return false;

  std::vector<Vec6> z(n);
  z[0] = -sys.g[0];
  for (int k = 1; k < n; ++k)
    z[k] = -sys.g[k] - sys.u[k - 1].transpose() * llts[k - 1].solve(z[k - 1]);

  delta[n - 1] = llts[n - 1].solve(z[n - 1]);
  for (int k = n - 2; k >= 0; --k)
    delta[k] = llts[k].solve(z[k] - sys.u[k] * delta[k + 1]);
  return true;
}

bool marginal_covariances(const BlockTridiag& sys, std::vector<Mat6>& cov) {
  const int n = sys.size();
  cov.assign(n, Mat6::Zero());
  if (n == 0) return true;

  bool clean = true;
  std::vector<Mat6> d = sys.d;
  std::vector<Eigen::LLT<Mat6>> fwd;
  std::vector<Mat6> s;
  if (!forward_sweep(d, sys.u, fwd, &s)) {
    clean = false;
    for (auto& blk : d) blk.diagonal().array() += 1e-9;
    if (!forward_sweep(d, sys.u, fwd, &s)) {
      for (auto& blk : d) blk.diagonal().array() += 1e-6;
      forward_sweep(d, sys.u, fwd, &s);
    }
  }

  // Backward sweep: T_{n-1} = D_{n-1}, T_k = D_k - U_k T_{k+1}^{-1} U_k^T.
  // The marginal information of node k is S_k + T_k - D_k.
  std::vector<Mat6> t(n);
  t[n - 1] = d[n - 1];
  for (int k = n - 2; k >= 0; --k) {
    Eigen::LLT<Mat6> llt(t[k + 1]);
    if (llt.info() != Eigen::Success) {
      clean = false;
      Mat6 jittered = t[k + 1];
      jittered.diagonal().array() += 1e-9;
      llt.compute(jittered);
    }
    t[k] = d[k] - sys.u[k] * llt.solve(sys.u[k].transpose());
  }

  for (int k = 0; k < n; ++k) {
    const Mat6 info = s[k] + t[k] - d[k];
    Eigen::LLT<Mat6> llt(info);
    Mat6 c;
    if (llt.info() == Eigen::Success) {
      c = llt.solve(Mat6::Identity());
    } else {
      clean = false;
      Mat6 jittered = info;
      jittered.diagonal().array() += 1e-9;
      llt.compute(jittered);
      c = llt.info() == Eigen::Success ? Mat6(llt.solve(Mat6::Identity())) : Mat6::Identity();
    }
    c = 0.5 * (c + c.transpose());
    // Floor eigenvalues so downstream SymMatrix validation always holds.
    Eigen::LLT<Mat6> check(c);
    if (check.info() != Eigen::Success) {
      clean = false;
      Eigen::SelfAdjointEigenSolver<Mat6> eig(c);
      const Vec6 vals = eig.eigenvalues().cwiseMax(1e-12);
      c = eig.eigenvectors() * vals.asDiagonal() * eig.eigenvectors().transpose();
      c = 0.5 * (c + c.transpose());
    }
    cov[k] = c;
  }
  return clean;
}

}  // namespace satrack
