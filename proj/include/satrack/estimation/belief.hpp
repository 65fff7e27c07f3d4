#pragma once

#include "satrack/config.hpp"
#include "satrack/dynamics.hpp"
#include "satrack/sensing.hpp"
#include "satrack/types.hpp"

namespace satrack {

/// Per-step estimator output: MAP/posterior mean and 6x6 marginal covariance.
/// `degraded` marks beliefs whose information matrix needed conditioning.
struct GaussianBelief {
  State6 mean;
  SymMatrix6 cov = SymMatrix6::identity();
  bool degraded = false;
};

/// Back-project the first range/bearing pair into an initial belief:
/// position p_R + z_r * R_SE^T * unit(z_b), zero velocity, position
/// covariance from first-order propagation of the measurement noise and a
/// large (1 m/s per axis) velocity prior.
GaussianBelief initialize_belief(const UavState& pose, const RangeMeasurement& z_r,
                                 const BearingMeasurement& z_b, const SimConfig& cfg);

}  // namespace satrack
