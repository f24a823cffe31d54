#pragma once

#include <array>
#include <string>
#include <vector>

#include "predrisk/errors.hpp"
#include "predrisk/gaussian.hpp"
#include "predrisk/plan.hpp"
#include "predrisk/scene.hpp"

namespace predrisk {

struct RiskParams {
  double sigma1 = 2.04;  // s, TTC magnitude scale
  double sigma2 = 2.04;  // s, TTC temporal spread
  double sigma3 = 45.0;  // m, longitudinal margin scale
  double sigma4 = 1.6;   // m, lateral margin scale
  double w_ttc = 0.6;
  double w_mdm = 0.4;
  double check_step = 0.05;  // s, sampling grid for overlap checks and risk
  // The TTC magnitude exponent divides TTC (not TTC^2) by 2*sigma1^2 by
  // default; set true to use the squared variant instead.
  bool squared_ttc = false;

  void validate(double tf) const;
};

// Per-OV risk time series for one AV candidate.
struct RiskProfile {
  VehicleId ov_id;
  double ttc = 0.0;            // s, relative to t0
  std::vector<double> times;   // absolute t on the check grid
  std::vector<double> risk;    // values in [0, 1]
  std::vector<double> mdm_x;   // m, per time
  std::vector<double> mdm_y;   // m, per time
};

// One OV's prediction bundled with the state it was issued from.
struct OvPrediction {
  VehicleId id;
  MotionState state0;  // last observed state at t0
  VehicleDims dims;
  GaussianTrajectory prediction;
};

struct RiskMapEntry {
  double ax = 0.0;
  double lateral_target = 0.0;
  std::vector<double> risk;  // aggregated over OVs, per time
  std::vector<double> ttcs;  // per OV, aligned with RiskMap::ov_ids
};

struct RiskMap {
  double t0 = 0.0;
  std::vector<double> times;  // absolute t on the check grid
  RiskParams params;
  std::string scenario_id;
  std::vector<VehicleId> ov_ids;
  std::vector<RiskMapEntry> entries;  // one per (ax, lateral target)
};

struct PairDims {
  VehicleDims av;
  VehicleDims ov;
};

// True iff the boxes' projections overlap on all four edge axes (exact for
// 2-D oriented boxes; touching counts as overlap).
bool sat_overlap(const Obb& a, const Obb& b);

// max(0, |T.L| - sum of projected half-extents) along the given unit axis.
double distance_margin(const Obb& a, const Obb& b, const std::array<double, 2>& axis);

struct MdmResult {
  double mdm = 0.0;    // min margin over the four edge axes
  double mdm_x = 0.0;  // margin along the road longitudinal axis
  double mdm_y = 0.0;  // margin along the road lateral axis
};

MdmResult mdm(const Obb& a, const Obb& b,
              const std::array<double, 2>& long_axis = {1.0, 0.0},
              const std::array<double, 2>& lat_axis = {0.0, 1.0});

// Earliest sampled time offset with box overlap, or tf when the pair never
// overlaps on the grid.
double ttc(const CandidateTrajectory& av, const SplineTrajectory& ov,
           const PairDims& dims, const LaneGeometry& lanes, const RiskParams& params);

RiskProfile pair_risk(const CandidateTrajectory& av, const SplineTrajectory& ov,
                      VehicleId ov_id, const PairDims& dims,
                      const LaneGeometry& lanes, const RiskParams& params);

// Probabilistic union 1 - prod(1 - r_i) per time. All profiles must share
// the same grid. Empty input yields an empty series.
std::vector<double> aggregate_risk(const std::vector<RiskProfile>& profiles);

// Full candidate-grid evaluation: fits a spline to each OV's predicted mean
// positions, generates the (ax x lateral-target) candidate set from the AV
// state, and aggregates per-OV risk for every candidate.
RiskMap risk_map(const MotionState& av_state, const VehicleDims& av_dims,
                 const std::vector<OvPrediction>& ovs, const LaneGeometry& lanes,
                 const RiskParams& params, const CandidateGridOptions& grid = {});

}  // namespace predrisk
