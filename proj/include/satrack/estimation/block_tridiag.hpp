#pragma once

#include "satrack/types.hpp"

#include <vector>

namespace satrack {

/// Symmetric block-tridiagonal normal equations of a window: 6x6 diagonal
/// blocks d[k], upper off-diagonal blocks u[k] coupling (k, k+1), and the
/// gradient g. This is the whole sparsity structure of the smoother, so
/// solves and marginal covariances are O(n) in the window length.
struct BlockTridiag {
  std::vector<Mat6> d;
  std::vector<Mat6> u;
  std::vector<Vec6> g;

  void reset(int n) {
    d.assign(n, Mat6::Zero());
    u.assign(n > 0 ? n - 1 : 0, Mat6::Zero());
    g.assign(n, Vec6::Zero());
  }
  int size() const { return static_cast<int>(d.size()); }
};

/// Solve (H + lambda * diag(H)) delta = -g by block Thomas elimination.
/// Returns false when a pivot block is not positive definite.
bool solve_damped(const BlockTridiag& sys, double lambda, std::vector<Vec6>& delta);

/// Diagonal 6x6 blocks of H^{-1} via forward/backward Schur sweeps.
/// If H needs conditioning (+1e-9 I) or an eigenvalue floor to produce valid
/// covariances, the output is still filled and the function returns false.
bool marginal_covariances(const BlockTridiag& sys, std::vector<Mat6>& cov);

}  // namespace satrack
