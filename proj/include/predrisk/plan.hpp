#pragma once

#include <array>
#include <vector>

#include "predrisk/errors.hpp"
#include "predrisk/scene.hpp"

namespace predrisk {

struct Pose {
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;
};

// Ego candidate: constant longitudinal acceleration (speed floored at zero)
// plus a quintic lateral profile. Coefficients are in local time
// tau = t - t0, so y(tau) = c0 + c1 tau + ... + c5 tau^5.
struct CandidateTrajectory {
  double ax = 0.0;            // longitudinal behavior label, m/s^2
  double lateral_target = 0.0;  // y(t0 + tf), m
  std::array<double, 6> coeffs{};
  double t0 = 0.0;
  double tf = 5.0;
  double x0 = 0.0;
  double vx0 = 0.0;
  double y0 = 0.0;
  double vy0 = 0.0;
  double ay0 = 0.0;

  // Longitudinal position/velocity at tau with the zero-speed floor.
  double x_at(double tau) const;
  double vx_at(double tau) const;
  double y_at(double tau) const;
  double vy_at(double tau) const;
};

// Time-continuous interpolant of predicted positions: per axis, one cubic
// per dt interval in local time tau = t - t0.
struct SplineTrajectory {
  struct Axis {
    std::vector<std::array<double, 4>> segments;  // c0..c3 per segment, local tau
    double v0 = 0.0;  // initial first derivative (clamped)
    double a0 = 0.0;  // initial second derivative of the data (stored, not clamped)
  };
  Axis x;
  Axis y;
  double t0 = 0.0;
  double dt = 0.2;

  double tf() const { return dt * static_cast<double>(x.segments.size()); }
  double value(const Axis& ax, double tau) const;
  double deriv(const Axis& ax, double tau) const;
};

// Unique quintic with y(0)=y0, y'(0)=vy0, y''(0)=ay0 and
// y(tf)=y_target, y'(tf)=0, y''(tf)=0, solved from the 6x6 linear system.
std::array<double, 6> quintic_lateral(double y0, double vy0, double ay0,
                                      double y_target, double tf = 5.0);

struct CandidateGridOptions {
  double ax_min = -5.0;
  double ax_max = 5.0;
  double ax_step = 0.5;
  double tf = 5.0;
};

// Cartesian product of the longitudinal acceleration grid and the lateral
// targets (current lane center plus reachable adjacent lane centers).
std::vector<CandidateTrajectory> candidates(const MotionState& av_state,
                                            const std::vector<double>& lateral_targets,
                                            const CandidateGridOptions& opts = {});

// Lateral targets for a state: its lane center and the adjacent lane centers.
std::vector<double> adjacent_lane_targets(double y, const LaneGeometry& lanes);

// Clamped cubic spline through the 26 points (t0 and 25 predictions) per
// axis. First derivative is clamped to v0 at t0; the far-end slope is taken
// from the cubic through the last four points, which keeps the solve
// well-conditioned and reproduces cubic data exactly. a0 is recorded on the
// result for downstream use.
SplineTrajectory spline_fit(const std::vector<std::array<double, 2>>& points,
                            double t0, double dt,
                            double vx0, double ax0, double vy0, double ay0);

Pose eval_pose(const CandidateTrajectory& traj, double t,
               const LaneGeometry& lanes, double speed_floor = 0.1);
Pose eval_pose(const SplineTrajectory& traj, double t,
               const LaneGeometry& lanes, double speed_floor = 0.1);

}  // namespace predrisk
