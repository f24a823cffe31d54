#include "predrisk/scene.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace predrisk {

bool MotionState::finite() const {
  return std::isfinite(t) && std::isfinite(x) && std::isfinite(y) &&
         std::isfinite(vx) && std::isfinite(vy) &&
         std::isfinite(ax) && std::isfinite(ay);
}

double Track::dt() const {
  if (states.size() < 2) throw InvalidValue("Track::dt: fewer than 2 states");
  return states[1].t - states[0].t;
}

void Track::validate() const {
  if (length <= 0.0 || width <= 0.0)
    throw InvalidValue("Track " + vehicle_id + ": non-positive dimensions");
  if (states.size() < 2) return;
  const double step = states[1].t - states[0].t;
  if (step <= 0.0) throw InvalidValue("Track " + vehicle_id + ": non-increasing timestamps");
  for (size_t i = 0; i + 1 < states.size(); ++i) {
    const double d = states[i + 1].t - states[i].t;
    if (std::abs(d - step) > 1e-9)
      throw InvalidValue("Track " + vehicle_id + ": non-uniform time step");
    if (!states[i].finite())
      throw InvalidValue("Track " + vehicle_id + ": non-finite state");
  }
}

std::optional<MotionState> Track::state_at(double t, double tol) const {
  if (states.empty()) return std::nullopt;
  const double step = states.size() > 1 ? states[1].t - states[0].t : 1.0;
  const double rel = (t - states[0].t) / step;
  const auto idx = static_cast<long>(std::llround(rel));
  if (idx < 0 || idx >= static_cast<long>(states.size())) return std::nullopt;
  const MotionState& s = states[static_cast<size_t>(idx)];
  if (std::abs(s.t - t) > tol) return std::nullopt;
  return s;
}

void LaneGeometry::validate() const {
  if (lane_centers.empty()) throw InvalidValue("LaneGeometry: no lane centers");
  for (size_t i = 0; i + 1 < lane_centers.size(); ++i)
    if (lane_centers[i + 1] <= lane_centers[i])
      throw InvalidValue("LaneGeometry: lane centers not strictly increasing");
  const double dot = longitudinal_axis[0] * lateral_axis[0] + longitudinal_axis[1] * lateral_axis[1];
  if (std::abs(dot) > 1e-9) throw InvalidValue("LaneGeometry: axes not orthogonal");
}

std::optional<int> LaneGeometry::lane_index(double y) const {
  int best = -1;
  double best_d = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < lane_centers.size(); ++i) {
    const double d = std::abs(y - lane_centers[i]);
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(i);
    }
  }
  if (best < 0 || best_d > lane_width) return std::nullopt;
  return best;
}

int ContextGrid::occupied_count() const {
  int n = 0;
  for (const auto& c : cells)
    if (!c.empty()) ++n;
  return n;
}

std::vector<int> ContextGrid::occupied_sv_cells() const {
  std::vector<int> out;
  for (int i = 0; i < kRows * kCols; ++i)
    if (i != kOvCell && occupied(i)) out.push_back(i);
  return out;
}

void Obb::validate() const {
  if (half_length <= 0.0 || half_width <= 0.0)
    throw InvalidValue("Obb: non-positive half extents");
  if (!std::isfinite(cx) || !std::isfinite(cy) || !std::isfinite(heading))
    throw InvalidPose("Obb: non-finite pose");
}

std::array<double, 2> Obb::axis_long() const {
  return {std::cos(heading), std::sin(heading)};
}

std::array<double, 2> Obb::axis_lat() const {
  return {-std::sin(heading), std::cos(heading)};
}

std::array<std::array<double, 2>, 4> Obb::corners() const {
  const auto ex = axis_long();
  const auto ey = axis_lat();
  std::array<std::array<double, 2>, 4> out{};
  const double sx[4] = {1, 1, -1, -1};
  const double sy[4] = {1, -1, -1, 1};
  for (int i = 0; i < 4; ++i) {
    out[static_cast<size_t>(i)] = {cx + sx[i] * half_length * ex[0] + sy[i] * half_width * ey[0],
                                   cy + sx[i] * half_length * ex[1] + sy[i] * half_width * ey[1]};
  }
  return out;
}

namespace {

struct SlotCandidate {
  const FrameEntry* entry;
  double dx;  // longitudinal offset from the OV
};

// Fills the two ahead slots (front, front-front), the alongside slot and the
// behind slot of one column from the candidates in that lane.
void fill_column(ContextGrid& grid, int col, std::vector<SlotCandidate> cands,
                 double alongside_band, bool center) {
  std::vector<SlotCandidate> ahead, beside, behind;
  for (const auto& c : cands) {
    if (c.dx > alongside_band)
      ahead.push_back(c);
    else if (c.dx < -alongside_band)
      behind.push_back(c);
    else
      beside.push_back(c);
  }
  auto nearer = [](const SlotCandidate& a, const SlotCandidate& b) {
    if (std::abs(a.dx) != std::abs(b.dx)) return std::abs(a.dx) < std::abs(b.dx);
    return a.entry->track->vehicle_id < b.entry->track->vehicle_id;  // tie break
  };
  std::sort(ahead.begin(), ahead.end(), nearer);
  std::sort(beside.begin(), beside.end(), nearer);
  std::sort(behind.begin(), behind.end(), nearer);

  if (!ahead.empty()) grid.cells[static_cast<size_t>(ContextGrid::cell_index(1, col))] = ahead[0].entry->track->vehicle_id;
  if (ahead.size() > 1) grid.cells[static_cast<size_t>(ContextGrid::cell_index(0, col))] = ahead[1].entry->track->vehicle_id;
  if (!behind.empty()) grid.cells[static_cast<size_t>(ContextGrid::cell_index(3, col))] = behind[0].entry->track->vehicle_id;
  // The center alongside cell belongs to the OV; a same-lane vehicle inside
  // the alongside band has nowhere to go and is dropped.
  if (!center && !beside.empty())
    grid.cells[static_cast<size_t>(ContextGrid::cell_index(2, col))] = beside[0].entry->track->vehicle_id;
}

}  // namespace

ContextGrid assign_context_grid(const std::vector<FrameEntry>& frame,
                                const VehicleId& ov_id,
                                const LaneGeometry& lanes,
                                const GridOptions& opts) {
  lanes.validate();
  const FrameEntry* ov = nullptr;
  for (const auto& e : frame)
    if (e.track && e.track->vehicle_id == ov_id) ov = &e;
  if (!ov) throw MissingVehicle("assign_context_grid: OV '" + ov_id + "' not in frame");

  const auto ov_lane = lanes.lane_index(ov->state.y);
  if (!ov_lane) throw MissingVehicle("assign_context_grid: OV off the lane map");

  ContextGrid grid;
  grid.cells[static_cast<size_t>(ContextGrid::kOvCell)] = ov_id;

  // lane offset +1 (left, higher y) -> column 0; 0 -> column 1; -1 -> column 2
  std::array<std::vector<SlotCandidate>, 3> by_col;
  for (const auto& e : frame) {
    if (!e.track || e.track->vehicle_id == ov_id) continue;
    const auto lane = lanes.lane_index(e.state.y);
    if (!lane) continue;  // off the lane map: skipped
    const int offset = *lane - *ov_lane;
    if (offset < -1 || offset > 1) continue;
    const double dx = e.state.x - ov->state.x;
    if (std::abs(dx) > opts.longitudinal_window) continue;
    by_col[static_cast<size_t>(1 - offset)].push_back({&e, dx});
  }
  for (int col = 0; col < 3; ++col)
    fill_column(grid, col, by_col[static_cast<size_t>(col)], opts.alongside_band, col == 1);
  return grid;
}

Obb obb_from_pose(double x, double y, double heading, double length, double width) {
  if (!std::isfinite(x) || !std::isfinite(y) || !std::isfinite(heading))
    throw InvalidPose("obb_from_pose: non-finite pose");
  if (length <= 0.0 || width <= 0.0) throw InvalidValue("obb_from_pose: non-positive dims");
  Obb b;
  b.cx = x;
  b.cy = y;
  b.heading = heading;
  b.half_length = 0.5 * length;
  b.half_width = 0.5 * width;
  return b;
}

Obb obb_at(double x, double y, double vx, double vy,
           double length, double width,
           const LaneGeometry& lanes, double speed_floor) {
  if (!std::isfinite(x) || !std::isfinite(y) || !std::isfinite(vx) || !std::isfinite(vy))
    throw InvalidPose("obb_at: non-finite pose");
  const double speed = std::hypot(vx, vy);
  double heading;
  if (speed < speed_floor)
    heading = std::atan2(lanes.longitudinal_axis[1], lanes.longitudinal_axis[0]);
  else
    heading = std::atan2(vy, vx);
  return obb_from_pose(x, y, heading, length, width);
}

}  // namespace predrisk
