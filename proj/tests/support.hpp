// Shared builders for synthetic interaction samples used by the unit and
// acceptance suites. All motion is constant-acceleration, so histories and
// futures are kinematically consistent by construction.
#pragma once

#include <array>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "predrisk/sample.hpp"
#include "predrisk/scene.hpp"

namespace testsupport {

struct MotionSpec {
  double x0 = 0.0;  // position at t0
  double y0 = 2.0;
  double vx = 20.0;  // velocity at t0
  double vy = 0.0;
  double ax = 0.0;
  double ay = 0.0;
};

inline predrisk::MotionState state_at_offset(const MotionSpec& m, double t0, double tau) {
  predrisk::MotionState s;
  s.t = t0 + tau;
  s.x = m.x0 + m.vx * tau + 0.5 * m.ax * tau * tau;
  s.y = m.y0 + m.vy * tau + 0.5 * m.ay * tau * tau;
  s.vx = m.vx + m.ax * tau;
  s.vy = m.vy + m.ay * tau;
  s.ax = m.ax;
  s.ay = m.ay;
  return s;
}

// Sample whose OV follows the spec; future filled from the same motion.
inline predrisk::Sample make_sample(const MotionSpec& ov, double t0 = 3.0,
                                    const std::string& id = "synthetic") {
  predrisk::Sample sample;
  sample.id = id;
  sample.t0 = t0;
  for (int i = 0; i < predrisk::kHistoryLen; ++i) {
    double tau = -predrisk::kDt * (predrisk::kHistoryLen - 1 - i);
    sample.ov_history.push_back(state_at_offset(ov, t0, tau));
  }
  for (int i = 1; i <= predrisk::kFutureLen; ++i) {
    auto s = state_at_offset(ov, t0, predrisk::kDt * i);
    sample.ov_future.push_back({s.x, s.y});
  }
  return sample;
}

// Adds one surrounding vehicle at the given grid cell, offset from the OV.
inline void add_sv(predrisk::Sample& sample, int cell, const MotionSpec& ov,
                   const MotionSpec& sv, const std::string& id) {
  predrisk::SvHistory hist;
  hist.cell = cell;
  hist.vehicle_id = id;
  for (int i = 0; i < predrisk::kHistoryLen; ++i) {
    double tau = -predrisk::kDt * (predrisk::kHistoryLen - 1 - i);
    auto so = state_at_offset(ov, sample.t0, tau);
    auto ss = state_at_offset(sv, sample.t0, tau);
    predrisk::SvState row{ss.x,          ss.y,          ss.vx,          ss.vy,
                          ss.ax,         ss.ay,         ss.x - so.x,    ss.y - so.y,
                          ss.vx - so.vx, ss.vy - so.vy, ss.ax - so.ax,  ss.ay - so.ay};
    hist.states.push_back(row);
  }
  // keep the histories cell-sorted as the sample contract requires
  auto it = sample.sv_histories.begin();
  while (it != sample.sv_histories.end() && it->cell < cell) ++it;
  sample.sv_histories.insert(it, std::move(hist));
  sample.grid.cells[static_cast<size_t>(cell)] = id;
}

// Deterministic batch of varied interaction samples: lead/rear/adjacent
// vehicles with randomized kinematics around the OV.
inline std::vector<predrisk::Sample> make_dataset(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uv(12.0, 30.0);
  std::uniform_real_distribution<double> ua(-1.5, 1.5);
  std::uniform_real_distribution<double> ug(12.0, 40.0);
  std::vector<predrisk::Sample> out;
  out.reserve(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    MotionSpec ov;
    ov.x0 = 100.0 + 3.0 * i;
    ov.y0 = (i % 2) ? 6.0 : 2.0;
    ov.vx = uv(rng);
    ov.ax = ua(rng);
    ov.vy = 0.05 * ua(rng);
    predrisk::Sample sample = make_sample(ov, 3.0, "synthetic:" + std::to_string(i));
    if (i % 4 != 3) {  // most samples have a lead vehicle
      MotionSpec lead = ov;
      lead.x0 = ov.x0 + ug(rng);
      lead.vx = uv(rng);
      lead.ax = ua(rng);
      add_sv(sample, predrisk::ContextGrid::cell_index(1, 1), ov, lead, "lead");
    }
    if (i % 3 == 0) {
      MotionSpec side = ov;
      side.x0 = ov.x0 + 2.0;
      side.y0 = ov.y0 + 4.0;
      side.vx = uv(rng);
      add_sv(sample, predrisk::ContextGrid::cell_index(2, 0), ov, side, "side");
    }
    if (i % 5 == 0) {
      MotionSpec rear = ov;
      rear.x0 = ov.x0 - ug(rng);
      rear.vx = uv(rng);
      add_sv(sample, predrisk::ContextGrid::cell_index(3, 1), ov, rear, "rear");
    }
    sample.grid.cells[predrisk::ContextGrid::kOvCell] = "ov";
    out.push_back(std::move(sample));
  }
  return out;
}

}  // namespace testsupport
