#pragma once

#include <array>
#include <string>
#include <vector>

#include "predrisk/errors.hpp"
#include "predrisk/gaussian.hpp"
#include "predrisk/scene.hpp"

namespace predrisk {

// Augmented per-step SV state: absolute motion followed by motion relative
// to the OV at the same timestamp.
// Layout: x, y, vx, vy, ax, ay, dx, dy, dvx, dvy, dax, day.
using SvState = std::array<double, 12>;

struct SvHistory {
  int cell = -1;  // ContextGrid flat cell index
  VehicleId vehicle_id;
  std::vector<SvState> states;  // 16 steps, oldest first

  void validate() const;
};

// One training/evaluation window: 3.2 s of history (16 steps including t0)
// and 5 s of future (25 steps excluding t0) for the observed vehicle, plus
// the surrounding-vehicle histories keyed by grid slot.
struct Sample {
  std::string id;
  double t0 = 0.0;
  std::vector<MotionState> ov_history;            // 16 steps, oldest first
  std::vector<SvHistory> sv_histories;            // occupied slots, ascending cell
  std::vector<std::array<double, 2>> ov_future;   // 25 absolute positions; empty when unknown
  ContextGrid grid;

  void validate() const;
};

}  // namespace predrisk
