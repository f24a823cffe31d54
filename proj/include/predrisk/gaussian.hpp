#pragma once

#include <vector>

#include "predrisk/errors.hpp"

namespace predrisk {

// Global sampling constants shared by the data pipeline, predictor, and
// downstream consumers: 0.2 s steps, 3.2 s history (16 frames), 5 s
// horizon (25 frames).
inline constexpr double kDt = 0.2;
inline constexpr int kHistoryLen = 16;
inline constexpr int kFutureLen = 25;
inline constexpr double kHorizon = kDt * kFutureLen;

// One predicted position distribution.
struct GaussianParams {
  double mu_x = 0.0;
  double mu_y = 0.0;
  double sigma_x = 1.0;
  double sigma_y = 1.0;
  double rho = 0.0;

  void validate() const {
    if (!(sigma_x > 0.0) || !(sigma_y > 0.0))
      throw InvalidValue("gaussian sigma must be positive");
    if (!(rho > -1.0 && rho < 1.0))
      throw InvalidValue("gaussian correlation must lie in (-1, 1)");
  }
};

// Predicted distribution sequence at t0 + dt, ..., t0 + 25*dt.
struct GaussianTrajectory {
  std::vector<GaussianParams> steps;

  void validate() const {
    if (static_cast<int>(steps.size()) != kFutureLen)
      throw InvalidValue("gaussian trajectory must have 25 steps");
    for (const auto& s : steps) s.validate();
  }
};

struct VehicleDims {
  double length = 5.21;
  double width = 2.04;
};

}  // namespace predrisk
