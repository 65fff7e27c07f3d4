#pragma once

#include "satrack/estimation/belief.hpp"

#include <optional>

namespace satrack {

/// One EKF cycle: predict with the double-integrator model, then sequential
/// range (scalar) and bearing (2-vector, wrapped azimuth innovation)
/// updates, Joseph form. A non-PD innovation covariance skips that update,
/// doubles the state covariance and flags the belief as degraded.
GaussianBelief ekf_step(const GaussianBelief& belief, const UavState& pose,
                        const RangeMeasurement& z_r,
                        const std::optional<BearingMeasurement>& z_b, const SimConfig& cfg);

}  // namespace satrack
