#pragma once

#include "satrack/types.hpp"

#include <Eigen/Cholesky>

#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

namespace satrack {

enum class QpSolveStatus { optimal, infeasible, max_iter };

template <int N>
struct QpSolutionT {
  Eigen::Matrix<double, N, 1> x = Eigen::Matrix<double, N, 1>::Zero();
  // Lagrange multipliers per row (>= 0). When status == infeasible this
  // instead holds a Farkas certificate: duals >= 0, G^T duals = 0, h^T duals < 0.
  VecX duals;
  QpSolveStatus status = QpSolveStatus::max_iter;
  int iterations = 0;
};

/// Dense convex QP  min 1/2 x^T P x + q^T x  s.t.  G x <= h,  P positive
/// definite, solved with the Goldfarb-Idnani dual active-set method. Rows
/// are normalized internally, so the solution is invariant to positive row
/// scaling. `warm_hint` constraints are processed first; the optimum is the
/// same either way (P PD makes it unique).
template <int N>
QpSolutionT<N> solve_qp(const Eigen::Matrix<double, N, N>& p,
                        const Eigen::Matrix<double, N, 1>& q,
                        const Eigen::Matrix<double, Eigen::Dynamic, N>& g_in,
                        const VecX& h_in, std::span<const int> warm_hint = {}) {
  using VecN = Eigen::Matrix<double, N, 1>;
  constexpr double kFeasTol = 1e-10;
  constexpr double kZeroTol = 1e-11;
  constexpr int kMaxIter = 200;
  const int m = static_cast<int>(g_in.rows());

  QpSolutionT<N> sol;
  sol.duals = VecX::Zero(m);

  Eigen::LLT<Eigen::Matrix<double, N, N>> llt(p);
  if (llt.info() != Eigen::Success) return sol;  // max_iter: P not usable

  // Row normalization; zero rows reduce to 0 <= h_i.
  Eigen::Matrix<double, Eigen::Dynamic, N> g = g_in;
  VecX h = h_in;
  VecX row_scale = VecX::Ones(m);
  for (int i = 0; i < m; ++i) {
    const double n = g.row(i).norm();
    if (n < 1e-300) {
      if (h(i) < -kFeasTol) {
        sol.status = QpSolveStatus::infeasible;
        sol.duals.setZero();
        sol.duals(i) = 1.0;  // 0 <= h_i with h_i < 0 is its own certificate
        return sol;
      }
      g.row(i).setZero();
      h(i) = std::numeric_limits<double>::infinity();
      continue;
    }
    row_scale(i) = n;
    g.row(i) /= n;
    h(i) /= n;
  }

  VecN x = llt.solve(-q);
  std::vector<int> active;
  VecX lambda_active;  // multipliers for the active set, same order as `active`

  const auto slack = [&](int i) { return g.row(i).dot(x) - h(i); };
  const auto in_active = [&](int i) {
    for (int a : active)
      if (a == i) return true;
    return false;
  };
  // Re-solve the KKT equality system on the final active set; the iterates
  // carry O(1e-9) drift that this removes (active rows tight to machine
  // precision, exact stationarity). Degenerate duals are dropped.
  const auto refine = [&]() {
    std::vector<int> trial_active = active;
    for (size_t guard = 0; guard <= active.size() + 1; ++guard) {
      const int na = static_cast<int>(trial_active.size());
      VecX lam(na);
      VecN x_ref;
      if (na == 0) {
        x_ref = llt.solve(-q);
      } else {
        Eigen::Matrix<double, N, Eigen::Dynamic> n_act(N, na);
        VecX h_act(na);
        for (int j = 0; j < na; ++j) {
          n_act.col(j) = g.row(trial_active[j]).transpose();
          h_act(j) = h(trial_active[j]);
        }
        const Eigen::Matrix<double, N, Eigen::Dynamic> pinv_n = llt.solve(n_act);
        const MatX m_mat = n_act.transpose() * pinv_n;
        lam = -m_mat.ldlt().solve(h_act + n_act.transpose() * llt.solve(q));
        int worst = -1;
        double worst_lam = -1e-9;
        for (int j = 0; j < na; ++j) {
          if (lam(j) < worst_lam) {
            worst_lam = lam(j);
            worst = j;
          }
        }
        if (worst >= 0) {
          trial_active.erase(trial_active.begin() + worst);
          continue;
        }
        x_ref = llt.solve(-(q + n_act * lam));
      }
      double violation = 0.0;
      for (int i = 0; i < m; ++i)
        if (std::isfinite(h(i))) violation = std::max(violation, g.row(i).dot(x_ref) - h(i));
      if (violation <= 1e-9) {
        x = x_ref;
        active = std::move(trial_active);
        lambda_active = lam;
      }
      return;
    }
  };

  const auto finalize = [&]() {
    sol.x = x;
    if (sol.status != QpSolveStatus::infeasible) {
      sol.duals.setZero();
      for (size_t j = 0; j < active.size(); ++j)
        sol.duals(active[j]) = lambda_active(static_cast<int>(j)) / row_scale(active[j]);
    }
    return sol;
  };

  int iter = 0;
  // Drives constraint p into the active set (or detects infeasibility).
  // Returns false on infeasibility or iteration overrun.
  const auto add_constraint = [&](int p_idx) -> bool {
    const VecN gp = g.row(p_idx).transpose();
    double lambda_p = 0.0;
    while (iter++ < kMaxIter) {
      const int na = static_cast<int>(active.size());
      // r = M^-1 N^T P^-1 gp,  z = P^-1 (N r - gp)  with M = N^T P^-1 N;
      // z is the primal direction keeping the active set tight.
      Eigen::Matrix<double, N, Eigen::Dynamic> n_act(N, na);
      for (int j = 0; j < na; ++j) n_act.col(j) = g.row(active[j]).transpose();
      const Eigen::Matrix<double, N, Eigen::Dynamic> pinv_n = llt.solve(n_act);
      const VecN pinv_gp = llt.solve(gp);
      VecX r(na);
      if (na > 0) {
        const MatX m_mat = n_act.transpose() * pinv_n;
        r = m_mat.ldlt().solve(n_act.transpose() * pinv_gp);
      }
      const VecN z = (na > 0) ? VecN(pinv_n * r - pinv_gp) : VecN(-pinv_gp);

      const double s_p = slack(p_idx);
      if (s_p <= kFeasTol) {
        if (lambda_p > 0.0) {
          active.push_back(p_idx);
          lambda_active.conservativeResize(na + 1);
          lambda_active(na) = lambda_p;
        }
        return true;
      }

      const double dir = gp.dot(z);  // equals -z^T P z, < 0 when z is useful
      double t2 = std::numeric_limits<double>::infinity();
      if (z.template lpNorm<Eigen::Infinity>() > kZeroTol && dir < -kZeroTol) t2 = -s_p / dir;

      double t1 = std::numeric_limits<double>::infinity();
      int blocking = -1;
      for (int j = 0; j < na; ++j) {
        if (r(j) > kZeroTol) {
          const double t = lambda_active(j) / r(j);
          if (t < t1) {
            t1 = t;
            blocking = j;
          }
        }
      }

      const double t = std::min(t1, t2);
      if (!std::isfinite(t)) {
        // No primal progress possible and no blocking dual: infeasible.
        // Certificate: weight 1 on row p, -r on the active rows.
        sol.status = QpSolveStatus::infeasible;
        sol.duals.setZero();
        sol.duals(p_idx) = 1.0 / row_scale(p_idx);
        for (int j = 0; j < na; ++j)
          sol.duals(active[j]) = std::max(0.0, -r(j)) / row_scale(active[j]);
        return false;
      }

      if (t2 < std::numeric_limits<double>::infinity()) x += t * z;
      for (int j = 0; j < na; ++j) lambda_active(j) -= t * r(j);
      lambda_p += t;

      if (t == t1 && blocking >= 0) {
        active.erase(active.begin() + blocking);
        VecX nl(na - 1);
        int k = 0;
        for (int j = 0; j < na; ++j)
          if (j != blocking) nl(k++) = lambda_active(j);
        lambda_active = nl;
        continue;  // re-solve with the smaller active set
      }
      // Full step: p is now tight; the next pass lands in the s_p branch.
    }
    return false;
  };

  for (int idx : warm_hint) {
    if (idx < 0 || idx >= m || in_active(idx)) continue;
    if (slack(idx) > kFeasTol && !add_constraint(idx)) return finalize();
  }

  while (iter < kMaxIter) {
    int worst = -1;
    double worst_s = kFeasTol;
    for (int i = 0; i < m; ++i) {
      if (in_active(i)) continue;
      const double s = slack(i);
      if (s > worst_s) {
        worst_s = s;
        worst = i;
      }
    }
    if (worst < 0) {
      sol.status = QpSolveStatus::optimal;
      refine();
      break;
    }
    if (!add_constraint(worst)) break;
  }

  sol.iterations = iter;
  return finalize();
}

/// Spec-facing 3-variable problem: min 1/2 u^T P u + q^T u, G u <= h.
struct QpProblem {
  SymMatrix3 p = SymMatrix3::identity();
  Vec3 q = Vec3::Zero();
  Eigen::Matrix<double, Eigen::Dynamic, 3> g;
  VecX h;
};

struct QpSolution {
  Vec3 x = Vec3::Zero();
  VecX duals;
  QpSolveStatus status = QpSolveStatus::max_iter;
};

inline QpSolution solve(const QpProblem& prob, std::span<const int> warm_hint = {}) {
  if (prob.g.rows() != prob.h.size())
    throw std::invalid_argument("QpProblem: G and h row counts differ");
  if (prob.g.rows() > 16) throw std::invalid_argument("QpProblem: more than 16 rows");
  Eigen::SelfAdjointEigenSolver<Mat3> eig(prob.p.dense());
  if (eig.eigenvalues().minCoeff() < 1e-9)
    throw std::invalid_argument("QpProblem: P must be positive definite (min eig >= 1e-9)");
  const auto s = solve_qp<3>(prob.p.dense(), prob.q, prob.g, prob.h, warm_hint);
  return {s.x, s.duals, s.status};
}

}  // namespace satrack
