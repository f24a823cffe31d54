#include "predrisk/risk.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>

namespace predrisk {

void RiskParams::validate(double tf) const {
  if (!(sigma1 > 0.0 && sigma2 > 0.0 && sigma3 > 0.0 && sigma4 > 0.0))
    throw InvalidParams("risk sigmas must be positive");
  if (std::abs(w_ttc + w_mdm - 1.0) > 1e-12)
    throw InvalidParams("risk weights must sum to 1");
  if (!(check_step > 0.0)) throw InvalidParams("check_step must be positive");
  double steps = tf / check_step;
  if (std::abs(steps - std::round(steps)) > 1e-9)
    throw InvalidParams("check_step must divide the horizon");
}

namespace {

double dot(const std::array<double, 2>& a, const std::array<double, 2>& b) {
  return a[0] * b[0] + a[1] * b[1];
}

// Half-extent of the box projected onto the unit axis.
double projected_radius(const Obb& box, const std::array<double, 2>& axis) {
  return box.half_length * std::abs(dot(box.axis_long(), axis)) +
         box.half_width * std::abs(dot(box.axis_lat(), axis));
}

double margin_on_axis(const Obb& a, const Obb& b, const std::array<double, 2>& axis) {
  std::array<double, 2> t{b.cx - a.cx, b.cy - a.cy};
  double gap = std::abs(dot(t, axis)) - projected_radius(a, axis) - projected_radius(b, axis);
  return std::max(0.0, gap);
}

Obb av_obb_at(const CandidateTrajectory& av, double t, const PairDims& dims,
              const LaneGeometry& lanes) {
  Pose p = eval_pose(av, t, lanes);
  return obb_from_pose(p.x, p.y, p.heading, dims.av.length, dims.av.width);
}

Obb ov_obb_at(const SplineTrajectory& ov, double t, const PairDims& dims,
              const LaneGeometry& lanes) {
  Pose p = eval_pose(ov, t, lanes);
  return obb_from_pose(p.x, p.y, p.heading, dims.ov.length, dims.ov.width);
}

}  // namespace

bool sat_overlap(const Obb& a, const Obb& b) {
  a.validate();
  b.validate();
  std::array<double, 2> t{b.cx - a.cx, b.cy - a.cy};
  const std::array<std::array<double, 2>, 4> axes{a.axis_long(), a.axis_lat(),
                                                  b.axis_long(), b.axis_lat()};
  for (const auto& axis : axes) {
    if (std::abs(dot(t, axis)) > projected_radius(a, axis) + projected_radius(b, axis))
      return false;  // separating axis found
  }
  return true;
}

double distance_margin(const Obb& a, const Obb& b, const std::array<double, 2>& axis) {
  a.validate();
  b.validate();
  if (std::abs(std::hypot(axis[0], axis[1]) - 1.0) > 1e-9)
    throw InvalidAxis("distance_margin axis must be a unit vector");
  return margin_on_axis(a, b, axis);
}

MdmResult mdm(const Obb& a, const Obb& b,
              const std::array<double, 2>& long_axis,
              const std::array<double, 2>& lat_axis) {
  a.validate();
  b.validate();
  MdmResult r;
  const std::array<std::array<double, 2>, 4> axes{a.axis_long(), a.axis_lat(),
                                                  b.axis_long(), b.axis_lat()};
  r.mdm = margin_on_axis(a, b, axes[0]);
  for (std::size_t i = 1; i < axes.size(); ++i)
    r.mdm = std::min(r.mdm, margin_on_axis(a, b, axes[i]));
  r.mdm_x = distance_margin(a, b, long_axis);
  r.mdm_y = distance_margin(a, b, lat_axis);
  return r;
}

double ttc(const CandidateTrajectory& av, const SplineTrajectory& ov,
           const PairDims& dims, const LaneGeometry& lanes, const RiskParams& params) {
  double tf = av.tf;
  params.validate(tf);
  lanes.validate();
  auto steps = static_cast<int>(std::llround(tf / params.check_step));
  for (int k = 0; k <= steps; ++k) {
    double t = av.t0 + params.check_step * static_cast<double>(k);
    if (sat_overlap(av_obb_at(av, t, dims, lanes), ov_obb_at(ov, t, dims, lanes)))
      return params.check_step * static_cast<double>(k);
  }
  return tf;
}

RiskProfile pair_risk(const CandidateTrajectory& av, const SplineTrajectory& ov,
                      VehicleId ov_id, const PairDims& dims,
                      const LaneGeometry& lanes, const RiskParams& params) {
  double tf = av.tf;
  params.validate(tf);
  lanes.validate();

  RiskProfile prof;
  prof.ov_id = ov_id;
  prof.ttc = ttc(av, ov, dims, lanes, params);

  double s1 = 2.0 * params.sigma1 * params.sigma1;
  double s2 = 2.0 * params.sigma2 * params.sigma2;
  double s3 = 2.0 * params.sigma3 * params.sigma3;
  double s4 = 2.0 * params.sigma4 * params.sigma4;
  double ttc_exponent = params.squared_ttc ? prof.ttc * prof.ttc / s1 : prof.ttc / s1;
  double ttc_magnitude = std::exp(-ttc_exponent);

  auto steps = static_cast<int>(std::llround(tf / params.check_step));
  prof.times.reserve(static_cast<std::size_t>(steps) + 1);
  for (int k = 0; k <= steps; ++k) {
    double t = av.t0 + params.check_step * static_cast<double>(k);
    double tau = params.check_step * static_cast<double>(k);
    MdmResult m = mdm(av_obb_at(av, t, dims, lanes), ov_obb_at(ov, t, dims, lanes),
                      lanes.longitudinal_axis, lanes.lateral_axis);
    double temporal = ttc_magnitude * std::exp(-(tau - prof.ttc) * (tau - prof.ttc) / s2);
    double spatial = std::exp(-m.mdm_x * m.mdm_x / s3) * std::exp(-m.mdm_y * m.mdm_y / s4);
    prof.times.push_back(t);
    prof.risk.push_back(params.w_ttc * temporal + params.w_mdm * spatial);
    prof.mdm_x.push_back(m.mdm_x);
    prof.mdm_y.push_back(m.mdm_y);
  }
  return prof;
}

std::vector<double> aggregate_risk(const std::vector<RiskProfile>& profiles) {
  if (profiles.empty()) return {};
  const auto& grid = profiles.front().times;
  for (const auto& p : profiles) {
    if (p.times.size() != grid.size()) throw GridError("risk profiles on different grids");
    for (std::size_t i = 0; i < grid.size(); ++i)
      if (std::abs(p.times[i] - grid[i]) > 1e-9)
        throw GridError("risk profiles on different grids");
    if (p.risk.size() != grid.size()) throw GridError("risk series length mismatch");
  }
  std::vector<double> out(grid.size(), 0.0);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    double survive = 1.0;
    for (const auto& p : profiles) survive *= 1.0 - p.risk[i];
    out[i] = 1.0 - survive;
  }
  return out;
}

RiskMap risk_map(const MotionState& av_state, const VehicleDims& av_dims,
                 const std::vector<OvPrediction>& ovs, const LaneGeometry& lanes,
                 const RiskParams& params, const CandidateGridOptions& grid) {
  params.validate(grid.tf);
  lanes.validate();
  if (!av_state.finite()) throw InvalidValue("AV state is not finite");

  RiskMap map;
  map.t0 = av_state.t;
  map.params = params;
  auto steps = static_cast<int>(std::llround(grid.tf / params.check_step));
  map.times.reserve(static_cast<std::size_t>(steps) + 1);
  for (int k = 0; k <= steps; ++k)
    map.times.push_back(av_state.t + params.check_step * static_cast<double>(k));

  // Predicted mean positions -> time-continuous trajectories.
  std::vector<SplineTrajectory> splines;
  splines.reserve(ovs.size());
  for (const auto& ov : ovs) {
    ov.prediction.validate();
    if (!ov.state0.finite()) throw InvalidValue("OV state is not finite");
    map.ov_ids.push_back(ov.id);
    std::vector<std::array<double, 2>> pts;
    pts.reserve(ov.prediction.steps.size() + 1);
    pts.push_back({ov.state0.x, ov.state0.y});
    for (const auto& s : ov.prediction.steps) pts.push_back({s.mu_x, s.mu_y});
    splines.push_back(spline_fit(pts, ov.state0.t, kDt, ov.state0.vx, ov.state0.ax,
                                 ov.state0.vy, ov.state0.ay));
  }

  auto targets = adjacent_lane_targets(av_state.y, lanes);
  auto cands = candidates(av_state, targets, grid);
  map.entries.reserve(cands.size());
  for (const auto& cand : cands) {
    RiskMapEntry entry;
    entry.ax = cand.ax;
    entry.lateral_target = cand.lateral_target;
    std::vector<RiskProfile> profiles;
    profiles.reserve(ovs.size());
    for (std::size_t i = 0; i < ovs.size(); ++i) {
      PairDims dims{av_dims, ovs[i].dims};
      profiles.push_back(pair_risk(cand, splines[i], ovs[i].id, dims, lanes, params));
      entry.ttcs.push_back(profiles.back().ttc);
    }
    entry.risk = profiles.empty() ? std::vector<double>(map.times.size(), 0.0)
                                  : aggregate_risk(profiles);
    map.entries.push_back(std::move(entry));
  }
  return map;
}

}  // namespace predrisk
