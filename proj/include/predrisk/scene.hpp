#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "predrisk/errors.hpp"

namespace predrisk {

// Kinematic state in the road-aligned frame: x longitudinal, y lateral.
struct MotionState {
  double t = 0.0;   // s
  double x = 0.0;   // m
  double y = 0.0;   // m
  double vx = 0.0;  // m/s
  double vy = 0.0;  // m/s
  double ax = 0.0;  // m/s^2
  double ay = 0.0;  // m/s^2

  bool finite() const;
};

using VehicleId = std::string;

// Time-ordered state sequence at uniform step dt.
struct Track {
  VehicleId vehicle_id;
  double length = 0.0;  // m
  double width = 0.0;   // m
  std::vector<MotionState> states;

  // Uniform step between consecutive states; throws if fewer than 2 states.
  double dt() const;
  // Validates monotone timestamps with constant step (tol 1e-9) and positive dims.
  void validate() const;
  // State at time t (exact match within tol), if any.
  std::optional<MotionState> state_at(double t, double tol = 1e-6) const;
};

struct LaneGeometry {
  std::vector<double> lane_centers;  // lateral positions, strictly monotone
  double lane_width = 4.0;
  std::array<double, 2> longitudinal_axis{1.0, 0.0};
  std::array<double, 2> lateral_axis{0.0, 1.0};

  void validate() const;
  // Index of the lane whose center is nearest to lateral position y,
  // or nullopt if y is farther than one lane width from every center.
  std::optional<int> lane_index(double y) const;
};

// The 4x3 local traffic context around the OV.
// Rows are longitudinal ranks: 0 front-front, 1 front, 2 alongside, 3 behind.
// Columns are lanes: 0 left (+1 lane offset), 1 center, 2 right (-1).
// The OV always sits at (row 2, col 1).
struct ContextGrid {
  static constexpr int kRows = 4;
  static constexpr int kCols = 3;
  static constexpr int kOvRow = 2;
  static constexpr int kOvCol = 1;
  static constexpr int kOvCell = kOvRow * kCols + kOvCol;  // = 7

  // cell index -> vehicle id; empty string = unoccupied
  std::array<VehicleId, kRows * kCols> cells{};

  static int cell_index(int row, int col) { return row * kCols + col; }
  bool occupied(int cell) const { return !cells[static_cast<size_t>(cell)].empty(); }
  const VehicleId& at(int row, int col) const { return cells[static_cast<size_t>(cell_index(row, col))]; }
  int occupied_count() const;
  std::vector<int> occupied_sv_cells() const;  // all occupied cells except the OV cell
};

// 2-D oriented bounding box.
struct Obb {
  double cx = 0.0;
  double cy = 0.0;
  double heading = 0.0;      // rad
  double half_length = 0.0;  // along heading
  double half_width = 0.0;

  void validate() const;
  std::array<double, 2> axis_long() const;   // unit vector along heading
  std::array<double, 2> axis_lat() const;    // unit vector normal to heading
  std::array<std::array<double, 2>, 4> corners() const;
};

struct GridOptions {
  double longitudinal_window = 90.0;  // m, capture window each way
  double alongside_band = 5.0;        // m, |dx| below this counts as alongside
};

struct FrameEntry {
  const Track* track = nullptr;
  MotionState state;  // at the common frame time
};

// Assigns vehicles around the OV to the 4x3 grid by lane offset and
// longitudinal rank. Vehicles beyond +/-1 lane, outside the longitudinal
// window, or off the lane map are dropped. When several vehicles compete
// for a slot the one nearest the OV longitudinally wins.
ContextGrid assign_context_grid(const std::vector<FrameEntry>& frame,
                                const VehicleId& ov_id,
                                const LaneGeometry& lanes,
                                const GridOptions& opts = {});

// Box at a pose. Heading comes from the velocity tangent atan2(vy, vx);
// below speed_floor the road longitudinal axis is used instead.
Obb obb_at(double x, double y, double vx, double vy,
           double length, double width,
           const LaneGeometry& lanes, double speed_floor = 0.1);

Obb obb_from_pose(double x, double y, double heading, double length, double width);

}  // namespace predrisk
