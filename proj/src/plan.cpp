#include "predrisk/plan.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>

namespace predrisk {

namespace {

// Solve a small dense linear system in place by Gaussian elimination with
// partial pivoting. a is n x n row-major, b is the right-hand side.
void solve_dense(std::vector<double>& a, std::vector<double>& b, std::size_t n) {
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    double best = std::abs(a[col * n + col]);
    for (std::size_t r = col + 1; r < n; ++r) {
      double v = std::abs(a[r * n + col]);
      if (v > best) {
        best = v;
        pivot = r;
      }
    }
    if (best < 1e-14) throw NumericalError("singular system in quintic solve");
    if (pivot != col) {
      for (std::size_t c = 0; c < n; ++c) std::swap(a[col * n + c], a[pivot * n + c]);
      std::swap(b[col], b[pivot]);
    }
    double d = a[col * n + col];
    for (std::size_t r = col + 1; r < n; ++r) {
      double f = a[r * n + col] / d;
      if (f == 0.0) continue;
      for (std::size_t c = col; c < n; ++c) a[r * n + c] -= f * a[col * n + c];
      b[r] -= f * b[col];
    }
  }
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t c = i + 1; c < n; ++c) s -= a[i * n + c] * b[c];
    b[i] = s / a[i * n + i];
  }
}

double poly_eval(const std::array<double, 6>& c, double tau) {
  double v = 0.0;
  for (std::size_t i = 6; i-- > 0;) v = v * tau + c[i];
  return v;
}

double poly_deriv(const std::array<double, 6>& c, double tau) {
  double v = 0.0;
  for (std::size_t i = 6; i-- > 1;) v = v * tau + static_cast<double>(i) * c[i];
  return v;
}

}  // namespace

double CandidateTrajectory::x_at(double tau) const {
  // Constant acceleration until speed would cross zero, frozen after.
  if (ax < 0.0 && vx0 > 0.0) {
    double ts = -vx0 / ax;
    if (tau >= ts) return x0 + vx0 * ts + 0.5 * ax * ts * ts;
  } else if (ax < 0.0 && vx0 <= 0.0) {
    return x0;
  }
  return x0 + vx0 * tau + 0.5 * ax * tau * tau;
}

double CandidateTrajectory::vx_at(double tau) const {
  if (ax < 0.0 && vx0 > 0.0) {
    double ts = -vx0 / ax;
    if (tau >= ts) return 0.0;
  } else if (ax < 0.0 && vx0 <= 0.0) {
    return 0.0;
  }
  return vx0 + ax * tau;
}

double CandidateTrajectory::y_at(double tau) const { return poly_eval(coeffs, tau); }

double CandidateTrajectory::vy_at(double tau) const { return poly_deriv(coeffs, tau); }

std::array<double, 6> quintic_lateral(double y0, double vy0, double ay0,
                                      double y_target, double tf) {
  if (!(tf > 0.0)) throw InvalidHorizon("quintic horizon must be positive");
  // Rows: y(0), y'(0), y''(0), y(tf), y'(tf), y''(tf) over c0..c5.
  std::vector<double> a(36, 0.0);
  std::vector<double> b(6, 0.0);
  a[0 * 6 + 0] = 1.0;
  b[0] = y0;
  a[1 * 6 + 1] = 1.0;
  b[1] = vy0;
  a[2 * 6 + 2] = 2.0;
  b[2] = ay0;
  double p = 1.0;
  for (int j = 0; j < 6; ++j) {
    a[3 * 6 + j] = p;
    p *= tf;
  }
  p = 1.0;
  for (int j = 1; j < 6; ++j) {
    a[4 * 6 + j] = static_cast<double>(j) * p;
    p *= tf;
  }
  p = 1.0;
  for (int j = 2; j < 6; ++j) {
    a[5 * 6 + j] = static_cast<double>(j) * static_cast<double>(j - 1) * p;
    p *= tf;
  }
  b[3] = y_target;
  b[4] = 0.0;
  b[5] = 0.0;
  solve_dense(a, b, 6);
  std::array<double, 6> c{};
  std::copy_n(b.begin(), 6, c.begin());
  return c;
}

std::vector<double> adjacent_lane_targets(double y, const LaneGeometry& lanes) {
  lanes.validate();
  auto idx = lanes.lane_index(y);
  if (!idx) throw InvalidValue("position is not inside any lane");
  std::vector<double> targets;
  int n = static_cast<int>(lanes.lane_centers.size());
  for (int d : {0, -1, 1}) {
    int j = *idx + d;
    if (j >= 0 && j < n) targets.push_back(lanes.lane_centers[static_cast<std::size_t>(j)]);
  }
  std::sort(targets.begin(), targets.end());
  return targets;
}

std::vector<CandidateTrajectory> candidates(const MotionState& av_state,
                                            const std::vector<double>& lateral_targets,
                                            const CandidateGridOptions& opts) {
  if (!av_state.finite()) throw InvalidValue("candidate seed state is not finite");
  if (!(opts.ax_step > 0.0)) throw InvalidParameter("ax_step must be positive");
  if (!(opts.tf > 0.0)) throw InvalidHorizon("candidate horizon must be positive");
  if (lateral_targets.empty()) throw InvalidValue("no lateral targets supplied");

  std::vector<CandidateTrajectory> out;
  int steps = static_cast<int>(std::llround((opts.ax_max - opts.ax_min) / opts.ax_step));
  for (int i = 0; i <= steps; ++i) {
    double ax = opts.ax_min + opts.ax_step * static_cast<double>(i);
    for (double target : lateral_targets) {
      CandidateTrajectory c;
      c.ax = ax;
      c.lateral_target = target;
      c.t0 = av_state.t;
      c.tf = opts.tf;
      c.x0 = av_state.x;
      c.vx0 = av_state.vx;
      c.y0 = av_state.y;
      c.vy0 = av_state.vy;
      c.ay0 = av_state.ay;
      c.coeffs = quintic_lateral(av_state.y, av_state.vy, av_state.ay, target, opts.tf);
      out.push_back(c);
    }
  }
  return out;
}

double SplineTrajectory::value(const Axis& ax, double tau) const {
  if (ax.segments.empty()) throw SplineError("empty spline");
  double total = dt * static_cast<double>(ax.segments.size());
  if (tau < -1e-9 || tau > total + 1e-9) throw OutOfHorizon("spline evaluated outside horizon");
  tau = std::clamp(tau, 0.0, total);
  auto k = static_cast<std::size_t>(tau / dt);
  if (k >= ax.segments.size()) k = ax.segments.size() - 1;
  double u = tau - dt * static_cast<double>(k);
  const auto& c = ax.segments[k];
  return ((c[3] * u + c[2]) * u + c[1]) * u + c[0];
}

double SplineTrajectory::deriv(const Axis& ax, double tau) const {
  if (ax.segments.empty()) throw SplineError("empty spline");
  double total = dt * static_cast<double>(ax.segments.size());
  if (tau < -1e-9 || tau > total + 1e-9) throw OutOfHorizon("spline evaluated outside horizon");
  tau = std::clamp(tau, 0.0, total);
  auto k = static_cast<std::size_t>(tau / dt);
  if (k >= ax.segments.size()) k = ax.segments.size() - 1;
  double u = tau - dt * static_cast<double>(k);
  const auto& c = ax.segments[k];
  return (3.0 * c[3] * u + 2.0 * c[2]) * u + c[1];
}

namespace {

// Clamped cubic spline on a uniform grid: first derivative fixed at both
// ends. Solves the standard tridiagonal system for the interior second
// derivatives. Returns per-segment coefficients in local u = tau - tau_k.
SplineTrajectory::Axis fit_axis(const std::vector<double>& y, double dt,
                                double v0, double a0) {
  std::size_t n = y.size();  // number of knots, n - 1 segments
  if (n < 2) throw InsufficientData("spline needs at least two points");

  // End slope from the cubic through the last four points (one-sided
  // finite difference, exact for cubic data). Falls back to lower order
  // when there are fewer points.
  double vn;
  if (n >= 4) {
    vn = (11.0 * y[n - 1] - 18.0 * y[n - 2] + 9.0 * y[n - 3] - 2.0 * y[n - 4]) / (6.0 * dt);
  } else if (n == 3) {
    vn = (3.0 * y[2] - 4.0 * y[1] + y[0]) / (2.0 * dt);
  } else {
    vn = (y[1] - y[0]) / dt;
  }

  // Tridiagonal system for second derivatives m[0..n-1] of the clamped
  // spline (Thomas algorithm). h is uniform.
  std::vector<double> m(n, 0.0);
  std::vector<double> diag(n, 0.0), rhs(n, 0.0), upper(n, 0.0), lower(n, 0.0);
  double h = dt;
  diag[0] = 2.0 * h;
  upper[0] = h;
  rhs[0] = 6.0 * ((y[1] - y[0]) / h - v0);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    lower[i] = h;
    diag[i] = 4.0 * h;
    upper[i] = h;
    rhs[i] = 6.0 * ((y[i + 1] - y[i]) / h - (y[i] - y[i - 1]) / h);
  }
  lower[n - 1] = h;
  diag[n - 1] = 2.0 * h;
  rhs[n - 1] = 6.0 * (vn - (y[n - 1] - y[n - 2]) / h);

  for (std::size_t i = 1; i < n; ++i) {
    double w = lower[i] / diag[i - 1];
    diag[i] -= w * upper[i - 1];
    rhs[i] -= w * rhs[i - 1];
  }
  m[n - 1] = rhs[n - 1] / diag[n - 1];
  for (std::size_t i = n - 1; i-- > 0;) m[i] = (rhs[i] - upper[i] * m[i + 1]) / diag[i];

  SplineTrajectory::Axis axis;
  axis.v0 = v0;
  axis.a0 = a0;
  axis.segments.resize(n - 1);
  for (std::size_t k = 0; k + 1 < n; ++k) {
    double c0 = y[k];
    double c2 = m[k] / 2.0;
    double c3 = (m[k + 1] - m[k]) / (6.0 * h);
    double c1 = (y[k + 1] - y[k]) / h - h * (2.0 * m[k] + m[k + 1]) / 6.0;
    axis.segments[k] = {c0, c1, c2, c3};
  }
  return axis;
}

}  // namespace

SplineTrajectory spline_fit(const std::vector<std::array<double, 2>>& points,
                            double t0, double dt,
                            double vx0, double ax0, double vy0, double ay0) {
  if (!(dt > 0.0)) throw InvalidValue("spline dt must be positive");
  if (points.empty()) throw InsufficientData("spline needs at least one predicted point");
  std::vector<double> xs, ys;
  xs.reserve(points.size());
  ys.reserve(points.size());
  for (const auto& p : points) {
    if (!std::isfinite(p[0]) || !std::isfinite(p[1]))
      throw InvalidValue("non-finite point passed to spline fit");
    xs.push_back(p[0]);
    ys.push_back(p[1]);
  }
  SplineTrajectory s;
  s.t0 = t0;
  s.dt = dt;
  s.x = fit_axis(xs, dt, vx0, ax0);
  s.y = fit_axis(ys, dt, vy0, ay0);
  return s;
}

namespace {

Pose heading_pose(double x, double y, double vx, double vy,
                  const LaneGeometry& lanes, double speed_floor) {
  Pose p;
  p.x = x;
  p.y = y;
  if (std::hypot(vx, vy) < speed_floor) {
    p.heading = std::atan2(lanes.longitudinal_axis[1], lanes.longitudinal_axis[0]);
  } else {
    p.heading = std::atan2(vy, vx);
  }
  return p;
}

}  // namespace

Pose eval_pose(const CandidateTrajectory& traj, double t,
               const LaneGeometry& lanes, double speed_floor) {
  double tau = t - traj.t0;
  if (tau < -1e-9 || tau > traj.tf + 1e-9)
    throw OutOfHorizon("candidate evaluated outside horizon");
  tau = std::clamp(tau, 0.0, traj.tf);
  return heading_pose(traj.x_at(tau), traj.y_at(tau), traj.vx_at(tau), traj.vy_at(tau),
                      lanes, speed_floor);
}

Pose eval_pose(const SplineTrajectory& traj, double t,
               const LaneGeometry& lanes, double speed_floor) {
  double tau = t - traj.t0;
  return heading_pose(traj.value(traj.x, tau), traj.value(traj.y, tau),
                      traj.deriv(traj.x, tau), traj.deriv(traj.y, tau),
                      lanes, speed_floor);
}

}  // namespace predrisk
