#pragma once

#include <cstdint>
#include <string>

#include "predrisk/errors.hpp"
#include "predrisk/model.hpp"
#include "predrisk/plan.hpp"
#include "predrisk/risk.hpp"
#include "predrisk/scene.hpp"
#include "predrisk/train.hpp"

namespace predrisk {

inline constexpr const char* kVersion = "0.1.0";

struct DataConfig {
  std::string format = "ngsim";  // ngsim | highd
  std::string input;             // trajectory CSV (highd: tracks CSV)
  std::string meta;              // highd recording-meta CSV
  double cutoff_hz = 1.0;        // zero-phase filter cutoff; <= 0 disables
  double stride_s = 1.0;         // window stride, seconds
  GridOptions grid;
};

// Everything a run needs, loadable from one key = value file with
// command-line overrides. Defaults equal the reference values wherever one
// exists.
struct RunConfig {
  DataConfig data;
  ModelConfig model;
  AblationConfig ablation;
  TrainConfig train;
  CandidateGridOptions plan;
  RiskParams risk;
  std::string output_dir = "out";
  std::uint64_t split_seed = 0;

  void validate() const;  // ConfigError when a field is out of range
  // Stable hash over every field; identical configs hash identically.
  std::string fingerprint() const;
};

// "1", "12", "13", "123": which prediction channels are enabled. Channel 1
// is mandatory.
void set_channels(AblationConfig& ablation, const std::string& channels);
std::string channels_string(const AblationConfig& ablation);

// pos | pos_vel | pos_vel_acc
FeatureKind feature_kind_from(const std::string& name);
std::string to_string(FeatureKind kind);

}  // namespace predrisk
