#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "predrisk/errors.hpp"
#include "predrisk/sample.hpp"
#include "predrisk/scene.hpp"

namespace predrisk {

enum class Source { kNgsim, kHighd };

struct RawRecording {
  Source source = Source::kNgsim;
  double native_rate = 10.0;  // Hz
  std::vector<Track> tracks;
  LaneGeometry lanes;
};

// NGSIM trajectory CSV: columns located by header name (Vehicle_ID,
// Frame_ID, Local_X, Local_Y, v_Vel, v_Acc, Lane_ID, optionally v_Length
// and v_Width). Feet are converted to meters; Local_Y becomes longitudinal
// x and Local_X lateral y. Lateral velocity/acceleration are derived by
// central differences since the dataset only carries the along-road speed.
// Frame gaps split a vehicle into separate tracks. Lane centers are
// estimated as the per-lane-id mean lateral position.
RawRecording parse_ngsim(const std::string& path);

// highD per-recording CSV pair. Tracks are in meters at the meta file's
// frame rate (must be 25 Hz); box corners are converted to centers; the
// driving direction is normalized per track so x increases along travel.
// Lane centers come from the meta lane markings.
RawRecording parse_highd(const std::string& tracks_path, const std::string& meta_path);

// Single forward pass of the first-order discrete Butterworth filter
// (bilinear transform with prewarped cutoff), initialized at the first
// sample so constants pass through exactly.
std::vector<double> butterworth_forward(const std::vector<double>& series,
                                        double fc, double fs);

// Zero-phase variant: forward pass, then a second pass over the reversed
// signal.
std::vector<double> butterworth_lowpass(const std::vector<double>& series,
                                        double fc, double fs);

// Applies the zero-phase filter to every state series (x, y, vx, vy, ax,
// ay) of every track, independently.
void filter_recording(RawRecording& recording, double fc);

// Keeps every k-th state so the step becomes dt; the native step must
// divide dt. Timestamps are reissued as exact multiples of dt.
Track resample(const Track& track, double dt = kDt);

// Cuts every vehicle's resampled track into samples: 16 history steps
// (including t0) plus 25 future steps, window start advancing by stride
// seconds. The context grid is taken at t0; SVs without a complete history
// are treated as absent. recording_label prefixes the sample ids.
std::vector<Sample> extract_windows(const RawRecording& recording,
                                    const GridOptions& opts = {},
                                    double stride = 1.0,
                                    const std::string& recording_label = "rec");

struct SplitManifest {
  std::uint64_t seed = 0;
  std::vector<std::string> train;
  std::vector<std::string> val;
  std::vector<std::string> test;

  std::string to_json() const;
  static SplitManifest from_json(const std::string& text);
};

// Deterministic shuffle then 70/10/20 partition of the sample ids.
SplitManifest split_dataset(const std::vector<Sample>& samples, std::uint64_t seed);

struct SplitSets {
  std::vector<Sample> train;
  std::vector<Sample> val;
  std::vector<Sample> test;
};

SplitSets apply_split(const std::vector<Sample>& samples, const SplitManifest& manifest);

// Sample store: one JSON document per line.
void write_samples_jsonl(const std::string& path, const std::vector<Sample>& samples);
std::vector<Sample> read_samples_jsonl(const std::string& path);

}  // namespace predrisk
