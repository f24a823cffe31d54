#pragma once

#include <string>
#include <vector>

#include "predrisk/errors.hpp"
#include "predrisk/sample.hpp"
#include "predrisk/scene.hpp"

namespace predrisk {

// A hand-written assessment scene: one designated AV plus the surrounding
// vehicles, all sampled at the 0.2 s step, with the lane map in a comment
// header. File layout:
//
//   # lane_centers = 2, 6, 14.4, 18.4
//   # lane_width = 4
//   # av = ego
//   vehicle_id,t,x,y,vx,vy,ax,ay,length,width
//   ego,0.0,0.0,2.0,25.0,0.0,0.0,0.0,5.21,2.04
//   ...
struct Scenario {
  std::string name;  // file stem
  VehicleId av_id;
  LaneGeometry lanes;
  std::vector<Track> tracks;

  const Track& av() const;  // MissingVehicle when av_id has no track
};

Scenario parse_scenario(const std::string& path);

// Cuts the inference sample for ov_id at t0: 16-step history, context grid
// over all tracks, surrounding histories for slots with a full 3.2 s of
// aligned data (shorter occupants are treated as absent). ov_future is
// filled when the track extends 25 steps past t0, else left empty.
// MissingVehicle when ov_id has no state at t0; InsufficientData when its
// history is too short.
Sample cut_sample(const std::vector<Track>& tracks, const VehicleId& ov_id,
                  double t0, const LaneGeometry& lanes, const GridOptions& opts = {});

}  // namespace predrisk
