#include "satrack/estimation/window.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <stdexcept>

namespace satrack {
namespace {

constexpr double kStepTol = 1e-8;
constexpr int kMaxIterations = 25;
constexpr double kLambdaInit = 1e-4;

Mat6 sqrt_info_from_cov6(const Mat6& cov) {
  Eigen::LLT<Mat6> llt(cov);
  if (llt.info() != Eigen::Success) {
    Mat6 jittered = cov;
    jittered.diagonal().array() += 1e-12;
    llt.compute(jittered);
    if (llt.info() != Eigen::Success)
      throw std::invalid_argument("FactorGraphWindow: covariance is not positive definite");
  }
  return llt.matrixL().solve(Mat6::Identity());
}

Mat2 sqrt_info_from_cov2(const Mat2& cov) {
  Mat2 floored = cov;
  floored.diagonal().array() += 1e-18;  // keeps zero-noise studies finite
  Eigen::LLT<Mat2> llt(floored);
  return llt.matrixL().solve(Mat2::Identity());
}

}  // namespace

FactorGraphWindow::FactorGraphWindow(const SimConfig& cfg, bool robust)
    : cfg_(cfg), robust_(robust) {
  const auto [a, b] = make_transition_matrices(cfg.dt);
  (void)b;
  a_ = a;
  dyn_sqrt_info_ = sqrt_info_from_cov6(default_target_process_cov());
}

void FactorGraphWindow::initialize_with_prior(const GaussianBelief& prior) {
  if (!empty()) throw std::logic_error("FactorGraphWindow: already initialized");
  nodes_.push_back(prior.mean.to_vec());
  factors_.push_back(PriorFactor{0, prior.mean.to_vec(), sqrt_info_from_cov6(prior.cov.dense())});
  pushes_ = 1;
}

void FactorGraphWindow::append_predicted_node() {
  const int k = size();
  nodes_.push_back(a_ * nodes_.back());
  factors_.push_back(DynamicsFactor{k - 1, a_, dyn_sqrt_info_});
  ++pushes_;
}

void FactorGraphWindow::push_timestep(const UavState& pose, const RangeMeasurement& z_r,
                                      const std::optional<BearingMeasurement>& z_b) {
  if (empty()) {
    if (!z_b)
      throw std::invalid_argument("FactorGraphWindow: first push needs a bearing measurement");
    initialize_with_prior(initialize_belief(pose, z_r, *z_b, cfg_));
    return;
  }
  append_predicted_node();
  const int k = size() - 1;
  const PoseSnapshot snap{pose.state.position, pose.pose_rotation};
  factors_.push_back(RangeFactor{k, z_r.z_r, std::max(z_r.sigma_r, 1e-9), snap});
  if (z_b && std::isfinite(z_b->azimuth) && std::isfinite(z_b->elevation)) {
    const UnitBearing z = angles_to_unit(*z_b);
    bool usable = true;
    const Vec3 rel_s = pose.pose_rotation * (nodes_[k].head<3>() - pose.state.position);
    if (rel_s.norm() > 1e-9) {
      // Antipodal w.r.t. the predicted bearing has no log map: range-only step.
      const double cosang = z.v.dot(rel_s / rel_s.norm());
      usable = cosang > -1.0 + 1e-9;
    }
    if (usable)
      factors_.push_back(BearingFactor{k, z, sqrt_info_from_cov2(z_b->cov.dense()), snap, true});
  }
  if (size() > cfg_.window_size) marginalize_oldest();
}

void FactorGraphWindow::push_timestep_linear(const Vec3& z, const SymMatrix3& cov) {
  if (empty())
    throw std::logic_error("FactorGraphWindow: linear push requires initialize_with_prior");
  append_predicted_node();
  const int k = size() - 1;
  Mat3 floored = cov.dense();
  floored.diagonal().array() += 1e-18;
  Eigen::LLT<Mat3> llt(floored);
  factors_.push_back(PositionFactor{k, z, llt.matrixL().solve(Mat3::Identity())});
  if (size() > cfg_.window_size) marginalize_oldest();
}

double FactorGraphWindow::accumulate(std::span<const Vec6> means, bool robust,
                                     BlockTridiag* sys) const {
  double cost = 0.0;
  for (const auto& f : factors_) {
    const auto ev = evaluate_factor(f, means);
    if (!ev) continue;  // degenerate at this linearization: excluded
    const auto s = factor_sqrt_info(f);
    const Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 6, 1> rw = s * ev->residual;
    const double sq = rw.squaredNorm();
    double w = 1.0;
    if (robust && is_robust_bearing(f)) {
      cost += 0.5 * cauchy_loss(sq, cfg_.cauchy_c);
      w = cauchy_weight(sq, cfg_.cauchy_c);
    } else {
      cost += 0.5 * sq;
    }
    if (!sys) continue;
    const Eigen::Matrix<double, Eigen::Dynamic, 6, Eigen::RowMajor, 6, 6> ja = s * ev->jac_a;
    const int ia = ev->node_a;
    sys->d[ia].noalias() += w * ja.transpose() * ja;
    sys->g[ia].noalias() += w * ja.transpose() * rw;
    if (ev->node_b >= 0) {
      const Eigen::Matrix<double, Eigen::Dynamic, 6, Eigen::RowMajor, 6, 6> jb = s * ev->jac_b;
      const int ib = ev->node_b;
      sys->d[ib].noalias() += w * jb.transpose() * jb;
      sys->g[ib].noalias() += w * jb.transpose() * rw;
      sys->u[ia].noalias() += w * ja.transpose() * jb;
    }
  }
  return cost;
}

std::vector<GaussianBelief> FactorGraphWindow::optimize(bool robust) {
  if (empty()) return {};
  const int n = size();
  BlockTridiag sys;
  sys.reset(n);
  double cost = accumulate(nodes_, robust, &sys);
  double lambda = kLambdaInit;
  std::vector<Vec6> delta;
  bool need_relin = false;

  for (int it = 0; it < kMaxIterations; ++it) {
    if (need_relin) {
      sys.reset(n);
      cost = accumulate(nodes_, robust, &sys);
      need_relin = false;
    }
    if (!solve_damped(sys, lambda, delta)) {
      lambda = std::min(lambda * 10.0, 1e12);
      continue;
    }
    std::vector<Vec6> trial(nodes_);
    double step_sq = 0.0;
    for (int k = 0; k < n; ++k) {
      trial[k] += delta[k];
      step_sq += delta[k].squaredNorm();
    }
    const double trial_cost = accumulate(trial, robust, nullptr);
    if (trial_cost <= cost * (1.0 + 1e-14) + 1e-300) {
      nodes_ = std::move(trial);
      cost = trial_cost;
      lambda = std::max(lambda * 0.1, 1e-12);
      if (std::sqrt(step_sq) < kStepTol) break;
      need_relin = true;
    } else {
      lambda = std::min(lambda * 10.0, 1e12);
    }
  }

  sys.reset(n);
  accumulate(nodes_, robust, &sys);
  std::vector<Mat6> cov;
  const bool clean = marginal_covariances(sys, cov);

  std::vector<GaussianBelief> beliefs(n);
  for (int k = 0; k < n; ++k) {
    beliefs[k].mean = State6::from_vec(nodes_[k]);
    beliefs[k].cov = SymMatrix6::from(cov[k]);
    beliefs[k].degraded = !clean;
  }
  return beliefs;
}

void FactorGraphWindow::marginalize_oldest() {
  using Mat12 = Eigen::Matrix<double, 12, 12>;
  using Vec12 = Eigen::Matrix<double, 12, 1>;
  Mat12 h = Mat12::Zero();
  Vec12 g = Vec12::Zero();

  std::vector<Factor> kept;
  kept.reserve(factors_.size());
  for (const auto& f : factors_) {
    const bool touches0 = factor_node(f) == 0;
    if (!touches0) {
      kept.push_back(f);
      continue;
    }
    const auto ev = evaluate_factor(f, nodes_);
    if (!ev) continue;  // degenerate: drops out of the summary
    const auto s = factor_sqrt_info(f);
    const Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 6, 1> rw = s * ev->residual;
    double w = 1.0;
    if (robust_ && is_robust_bearing(f)) w = cauchy_weight(rw.squaredNorm(), cfg_.cauchy_c);
    const Eigen::Matrix<double, Eigen::Dynamic, 6, Eigen::RowMajor, 6, 6> ja = s * ev->jac_a;
    h.topLeftCorner<6, 6>().noalias() += w * ja.transpose() * ja;
    g.head<6>().noalias() += w * ja.transpose() * rw;
    if (ev->node_b == 1) {
      const Eigen::Matrix<double, Eigen::Dynamic, 6, Eigen::RowMajor, 6, 6> jb = s * ev->jac_b;
      h.bottomRightCorner<6, 6>().noalias() += w * jb.transpose() * jb;
      g.tail<6>().noalias() += w * jb.transpose() * rw;
      h.topRightCorner<6, 6>().noalias() += w * ja.transpose() * jb;
    }
  }
  h.bottomLeftCorner<6, 6>() = h.topRightCorner<6, 6>().transpose();

  const Mat6 h00 = h.topLeftCorner<6, 6>();
  const Mat6 h01 = h.topRightCorner<6, 6>();
  const Mat6 h11 = h.bottomRightCorner<6, 6>();
  const Eigen::LDLT<Mat6> ldlt(h00);
  Mat6 info = h11 - h01.transpose() * ldlt.solve(h01);
  info = 0.5 * (info + info.transpose());
  Vec6 grad = g.tail<6>() - h01.transpose() * ldlt.solve(g.head<6>());

  Eigen::LLT<Mat6> info_llt(info);
  for (double jitter = 1e-12; info_llt.info() != Eigen::Success && jitter < 1.0; jitter *= 10) {
    Mat6 jittered = info;
    jittered.diagonal().array() += jitter;
    info_llt.compute(jittered);
  }
  const Vec6 mean = nodes_[1] - info_llt.solve(grad);
  const Mat6 sqrt_info = Mat6(info_llt.matrixL()).transpose();

  nodes_.erase(nodes_.begin());
  for (auto& f : kept) std::visit([](auto& x) { x.node -= 1; }, f);
  factors_ = std::move(kept);
  factors_.insert(factors_.begin(), PriorFactor{0, mean, sqrt_info});
}

}  // namespace satrack
