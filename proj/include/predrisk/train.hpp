#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "predrisk/errors.hpp"
#include "predrisk/model.hpp"
#include "predrisk/sample.hpp"
#include "predrisk/tensor.hpp"

namespace predrisk {

struct TrainConfig {
  int batch_size = 256;
  double lr = 0.001;
  int pretrain_epochs = 5;
  int formal_epochs = 10;
  int early_stop_patience = 2;
  std::uint64_t seed = 0;

  void validate() const;
};

struct EvalReport {
  std::array<double, 5> rmse_at{};  // horizons 1..5 s (future steps 5,10,15,20,25)
  int sample_count = 0;
  std::string config_fingerprint;

  std::string to_csv() const;   // header row 1s..5s plus one value row
  std::string to_json() const;
};

// Square root of the mean over all steps and both coordinates of the
// squared position error.
double rmse_loss(const std::vector<std::array<double, 2>>& predicted,
                 const std::vector<std::array<double, 2>>& truth);

// Sum over steps of the negative log bivariate-Gaussian density of the
// truth under the step's distribution.
double nll_loss(const GaussianTrajectory& trajectory,
                const std::vector<std::array<double, 2>>& truth);

// Differentiable counterparts over decoder heads; truth must be in the
// same (recentered) frame as the heads.
ad::Tensor rmse_loss_graph(const std::vector<Model::StepHead>& steps,
                           const std::vector<std::array<double, 2>>& truth);
ad::Tensor nll_loss_graph(const std::vector<Model::StepHead>& steps,
                          const std::vector<std::array<double, 2>>& truth);

struct LossRow {
  int epoch = 0;
  std::string phase;  // "pretrain" | "formal"
  double train_loss = 0.0;
  double val_loss = 0.0;
};

// Snapshot of the formal phase taken when training returns, sufficient to
// continue it later with exactly the loss sequence an uninterrupted longer
// run would have produced (optimizer moments, shuffle position, early-stop
// bookkeeping, and both the last and the best weights).
struct TrainState {
  int formal_epochs_done = 0;
  std::uint64_t shuffle_draws = 0;  // generator outputs consumed so far
  double best_val = std::numeric_limits<double>::infinity();
  int stall = 0;
  std::int64_t adam_steps = 0;
  std::vector<std::vector<double>> adam_m;
  std::vector<std::vector<double>> adam_v;
  std::vector<std::vector<double>> last_params;
  std::vector<std::vector<double>> best_params;

  std::string to_json() const;
  static TrainState from_json(const std::string& text);
};

struct TrainResult {
  Model model;  // weights of the best formal-phase validation epoch
  std::vector<LossRow> curve;
  TrainState state;
};

// Two-phase protocol: pretrain_epochs of position RMSE on the mean heads,
// then formal_epochs of NLL. Validation loss is logged after every epoch;
// a phase stops early when its validation loss fails to improve for
// early_stop_patience consecutive epochs. Deterministic per seed.
TrainResult train(const std::vector<Sample>& train_set, const std::vector<Sample>& val_set,
                  const ModelConfig& model_config, const TrainConfig& train_config,
                  const AblationConfig& ablation);

// Continues the formal phase from a snapshot. The model must carry the
// same architecture the snapshot was taken from; train_config.seed and the
// splits must match the original run for the replay to be exact. Runs
// epochs formal_epochs_done+1 .. formal_epochs.
TrainResult resume_formal(Model model, const TrainState& state,
                          const std::vector<Sample>& train_set,
                          const std::vector<Sample>& val_set,
                          const TrainConfig& train_config);

// Per-horizon prediction quality: for each horizon second, the square root
// of the mean over samples of the squared Euclidean position error at that
// step.
EvalReport evaluate(const Model& model, const std::vector<Sample>& test_set);
EvalReport evaluate_baseline(BaselineKind kind, const std::vector<Sample>& test_set);

void write_loss_csv(const std::string& path, const std::vector<LossRow>& curve);

}  // namespace predrisk
