#include "predrisk/train.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "json.hpp"

namespace predrisk {

using ad::Tensor;

void TrainConfig::validate() const {
  if (batch_size <= 0 || pretrain_epochs <= 0 || formal_epochs <= 0 ||
      early_stop_patience <= 0)
    throw ConfigError("training counts must be positive");
  if (!(lr > 0.0)) throw ConfigError("learning rate must be positive");
}

double rmse_loss(const std::vector<std::array<double, 2>>& predicted,
                 const std::vector<std::array<double, 2>>& truth) {
  if (predicted.size() != truth.size())
    throw ShapeError("rmse length mismatch: (" + std::to_string(predicted.size()) +
                     ") vs (" + std::to_string(truth.size()) + ")");
  if (predicted.empty()) throw ShapeError("rmse of empty sequences");
  double acc = 0.0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    double dx = predicted[i][0] - truth[i][0];
    double dy = predicted[i][1] - truth[i][1];
    acc += dx * dx + dy * dy;
  }
  return std::sqrt(acc / (2.0 * static_cast<double>(predicted.size())));
}

double nll_loss(const GaussianTrajectory& trajectory,
                const std::vector<std::array<double, 2>>& truth) {
  if (trajectory.steps.size() != truth.size())
    throw ShapeError("nll length mismatch: (" + std::to_string(trajectory.steps.size()) +
                     ") vs (" + std::to_string(truth.size()) + ")");
  double total = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const GaussianParams& p = trajectory.steps[i];
    if (!(p.sigma_x > 0.0) || !(p.sigma_y > 0.0) || !(p.rho > -1.0 && p.rho < 1.0))
      throw InvalidParams("invalid covariance at step " + std::to_string(i));
    double dx = truth[i][0] - p.mu_x;
    double dy = truth[i][1] - p.mu_y;
    double one_m_r2 = 1.0 - p.rho * p.rho;
    double zx = dx / p.sigma_x;
    double zy = dy / p.sigma_y;
    double z = zx * zx - 2.0 * p.rho * zx * zy + zy * zy;
    total += std::log(2.0 * M_PI * p.sigma_x * p.sigma_y * std::sqrt(one_m_r2)) +
             z / (2.0 * one_m_r2);
  }
  return total;
}

ad::Tensor rmse_loss_graph(const std::vector<Model::StepHead>& steps,
                           const std::vector<std::array<double, 2>>& truth) {
  if (steps.size() != truth.size())
    throw ShapeError("rmse length mismatch: (" + std::to_string(steps.size()) +
                     ") vs (" + std::to_string(truth.size()) + ")");
  std::vector<Tensor> mus;
  std::vector<double> flat;
  mus.reserve(steps.size());
  for (std::size_t i = 0; i < steps.size(); ++i) {
    mus.push_back(steps[i].mu);
    flat.push_back(truth[i][0]);
    flat.push_back(truth[i][1]);
  }
  Tensor pred = ad::concat(mus);
  Tensor target = Tensor::from_vector({static_cast<int>(flat.size())}, flat);
  Tensor diff = ad::sub(pred, target);
  return ad::sqrt(ad::mean(ad::mul(diff, diff)));
}

ad::Tensor nll_loss_graph(const std::vector<Model::StepHead>& steps,
                          const std::vector<std::array<double, 2>>& truth) {
  if (steps.size() != truth.size())
    throw ShapeError("nll length mismatch: (" + std::to_string(steps.size()) +
                     ") vs (" + std::to_string(truth.size()) + ")");
  Tensor total = Tensor::scalar(0.0);
  Tensor one = Tensor::scalar(1.0);
  Tensor log2pi = Tensor::scalar(std::log(2.0 * M_PI));
  for (std::size_t i = 0; i < steps.size(); ++i) {
    const auto& s = steps[i];
    Tensor target = Tensor::from_vector({2}, {truth[i][0], truth[i][1]});
    Tensor d = ad::sub(target, s.mu);
    Tensor sx = ad::exp(s.log_sx);
    Tensor sy = ad::exp(s.log_sy);
    Tensor zx = ad::div(ad::slice(d, {0}, {1}), sx);
    Tensor zy = ad::div(ad::slice(d, {1}, {1}), sy);
    Tensor one_m_r2 = ad::sub(one, ad::mul(s.rho, s.rho));
    Tensor quad = ad::add(ad::sub(ad::mul(zx, zx),
                                  ad::mul_scalar(ad::mul(s.rho, ad::mul(zx, zy)), 2.0)),
                          ad::mul(zy, zy));
    // log(2 pi sx sy sqrt(1-rho^2)) = log 2pi + log sx + log sy + 0.5 log(1-rho^2)
    Tensor log_norm = ad::add(ad::add(log2pi, ad::add(s.log_sx, s.log_sy)),
                              ad::mul_scalar(ad::log(one_m_r2), 0.5));
    Tensor step_nll = ad::add(log_norm, ad::div(quad, ad::mul_scalar(one_m_r2, 2.0)));
    total = ad::add(total, step_nll);
  }
  return total;
}

namespace {

enum class Phase { kPretrain, kFormal };

std::vector<std::array<double, 2>> recentered_truth(const Sample& sample) {
  double ox = sample.ov_history.back().x;
  double oy = sample.ov_history.back().y;
  std::vector<std::array<double, 2>> out;
  out.reserve(sample.ov_future.size());
  for (const auto& p : sample.ov_future) out.push_back({p[0] - ox, p[1] - oy});
  return out;
}

Tensor sample_loss_graph(const Model& model, const Sample& sample, Phase phase) {
  Model::ForwardResult fwd = model.forward(sample);
  auto truth = recentered_truth(sample);
  return phase == Phase::kPretrain ? rmse_loss_graph(fwd.steps, truth)
                                   : nll_loss_graph(fwd.steps, truth);
}

double dataset_loss(const Model& model, const std::vector<Sample>& set, Phase phase) {
  double acc = 0.0;
  for (const auto& s : set) acc += sample_loss_graph(model, s, phase).item();
  return acc / static_cast<double>(set.size());
}

// In-place Fisher-Yates with the given generator; modulo bias is irrelevant
// here and keeps the sequence identical across standard libraries.
void deterministic_shuffle(std::vector<std::size_t>& idx, std::mt19937_64& rng) {
  for (std::size_t i = 0; i + 1 < idx.size(); ++i) {
    std::size_t j = i + static_cast<std::size_t>(rng() % (idx.size() - i));
    std::swap(idx[i], idx[j]);
  }
}

std::vector<std::vector<double>> snapshot(const std::vector<Tensor>& params) {
  std::vector<std::vector<double>> out;
  out.reserve(params.size());
  for (const auto& p : params) out.push_back(p.data());
  return out;
}

void restore(std::vector<Tensor>& params, const std::vector<std::vector<double>>& snap) {
  for (std::size_t i = 0; i < params.size(); ++i) params[i].node()->data = snap[i];
}

// State a phase carries across epochs; a formal-phase instance survives
// into TrainState so training can resume later.
struct PhaseCarry {
  ad::AdamState adam;
  double best_val = std::numeric_limits<double>::infinity();
  int stall = 0;
  std::vector<std::vector<double>> best;
  int epochs_done = 0;          // epochs completed in this phase
  std::uint64_t shuffles = 0;   // shuffle passes consumed from the generator
};

// Runs epochs first_epoch..last_epoch of one phase, updating carry in place.
void run_phase(Model& model, Phase phase, int first_epoch, int last_epoch,
               const std::vector<Sample>& train_set,
               const std::vector<Sample>& val_set,
               const TrainConfig& cfg, std::mt19937_64& rng,
               std::vector<LossRow>& curve, PhaseCarry& carry) {
  auto params = model.parameters();
  std::vector<std::size_t> order(train_set.size());
  const char* phase_name = phase == Phase::kPretrain ? "pretrain" : "formal";

  for (int epoch = first_epoch; epoch <= last_epoch; ++epoch) {
    // restart from identity before shuffling: the epoch's permutation must be
    // a function of the generator draws alone, or a resumed run (which replays
    // the draw count but not the permuted vector) would batch differently
    std::iota(order.begin(), order.end(), 0);
    deterministic_shuffle(order, rng);
    ++carry.shuffles;
    double train_acc = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      ad::zero_grads(params);
      Tensor batch_loss;
      try {
        std::vector<Tensor> losses;
        for (std::size_t i = start; i < end; ++i)
          losses.push_back(sample_loss_graph(model, train_set[order[i]], phase));
        Tensor total = losses.front();
        for (std::size_t i = 1; i < losses.size(); ++i) total = ad::add(total, losses[i]);
        batch_loss = ad::mul_scalar(total, 1.0 / static_cast<double>(losses.size()));
        if (!std::isfinite(batch_loss.item()))
          throw NumericalError("non-finite batch loss");
        ad::backward(batch_loss);
      } catch (const NumericalError& e) {
        throw NumericalError(std::string(phase_name) + " epoch " + std::to_string(epoch) +
                             " batch " + std::to_string(batches) + ": " + e.what());
      }
      ad::adam_step(params, carry.adam, cfg.lr);
      train_acc += batch_loss.item();
      ++batches;
    }

    double val_loss = dataset_loss(model, val_set, phase);
    curve.push_back({epoch, phase_name, train_acc / static_cast<double>(batches), val_loss});
    carry.epochs_done = epoch;

    if (val_loss < carry.best_val) {
      carry.best_val = val_loss;
      carry.best = snapshot(params);
      carry.stall = 0;
    } else if (++carry.stall >= cfg.early_stop_patience) {
      break;
    }
  }
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << v;
  return os.str();
}

}  // namespace

namespace {

// Number of generator outputs one shuffle pass consumes.
std::uint64_t draws_per_shuffle(std::size_t n) { return n > 0 ? n - 1 : 0; }

TrainState make_state(const PhaseCarry& formal, std::uint64_t total_shuffles,
                      std::size_t train_n, const std::vector<ad::Tensor>& params) {
  TrainState st;
  st.formal_epochs_done = formal.epochs_done;
  st.shuffle_draws = total_shuffles * draws_per_shuffle(train_n);
  st.best_val = formal.best_val;
  st.stall = formal.stall;
  st.adam_steps = formal.adam.step_count;
  st.adam_m = formal.adam.m;
  st.adam_v = formal.adam.v;
  st.last_params = snapshot(params);
  st.best_params = formal.best;
  return st;
}

}  // namespace

TrainResult train(const std::vector<Sample>& train_set, const std::vector<Sample>& val_set,
                  const ModelConfig& model_config, const TrainConfig& train_config,
                  const AblationConfig& ablation) {
  train_config.validate();
  if (train_set.empty() || val_set.empty())
    throw InsufficientData("training needs nonempty train and validation splits");

  TrainResult result{Model(model_config, ablation, train_config.seed), {}, {}};
  auto params = result.model.parameters();
  std::mt19937_64 shuffle_rng(train_config.seed ^ 0x9E3779B97F4A7C15ULL);

  // Phase 1 initializes; its final (not best) weights seed phase 2. Each
  // phase gets a fresh optimizer: the loss surface changes.
  PhaseCarry pretrain;
  pretrain.best = snapshot(params);
  run_phase(result.model, Phase::kPretrain, 1, train_config.pretrain_epochs,
            train_set, val_set, train_config, shuffle_rng, result.curve, pretrain);
  PhaseCarry formal;
  formal.best = snapshot(params);
  run_phase(result.model, Phase::kFormal, 1, train_config.formal_epochs,
            train_set, val_set, train_config, shuffle_rng, result.curve, formal);

  result.state = make_state(formal, pretrain.shuffles + formal.shuffles,
                            train_set.size(), params);
  restore(params, formal.best);
  return result;
}

TrainResult resume_formal(Model model, const TrainState& state,
                          const std::vector<Sample>& train_set,
                          const std::vector<Sample>& val_set,
                          const TrainConfig& train_config) {
  train_config.validate();
  if (train_set.empty() || val_set.empty())
    throw InsufficientData("training needs nonempty train and validation splits");
  if (state.last_params.empty())
    throw ConfigError("resume: snapshot carries no weights");

  TrainResult result{std::move(model), {}, {}};
  auto params = result.model.parameters();
  if (state.last_params.size() != params.size())
    throw ConfigError("resume: snapshot does not match the model architecture");
  restore(params, state.last_params);

  // Re-derive the generator position the original run had reached.
  std::mt19937_64 shuffle_rng(train_config.seed ^ 0x9E3779B97F4A7C15ULL);
  shuffle_rng.discard(state.shuffle_draws);

  PhaseCarry formal;
  formal.adam.step_count = state.adam_steps;
  formal.adam.m = state.adam_m;
  formal.adam.v = state.adam_v;
  formal.best_val = state.best_val;
  formal.stall = state.stall;
  formal.best = state.best_params.empty() ? snapshot(params) : state.best_params;
  formal.epochs_done = state.formal_epochs_done;
  run_phase(result.model, Phase::kFormal, state.formal_epochs_done + 1,
            train_config.formal_epochs, train_set, val_set, train_config,
            shuffle_rng, result.curve, formal);

  const std::uint64_t prior_shuffles =
      state.shuffle_draws / std::max<std::uint64_t>(1, draws_per_shuffle(train_set.size()));
  result.state = make_state(formal, prior_shuffles + formal.shuffles,
                            train_set.size(), params);
  restore(params, formal.best);
  return result;
}

namespace {

EvalReport horizon_report(const std::vector<std::vector<std::array<double, 2>>>& predictions,
                          const std::vector<Sample>& test_set, std::string fingerprint) {
  EvalReport report;
  report.sample_count = static_cast<int>(test_set.size());
  report.config_fingerprint = std::move(fingerprint);
  for (int h = 1; h <= 5; ++h) {
    std::size_t step = static_cast<std::size_t>(5 * h) - 1;
    double acc = 0.0;
    for (std::size_t i = 0; i < test_set.size(); ++i) {
      double dx = predictions[i][step][0] - test_set[i].ov_future[step][0];
      double dy = predictions[i][step][1] - test_set[i].ov_future[step][1];
      acc += dx * dx + dy * dy;
    }
    report.rmse_at[static_cast<std::size_t>(h - 1)] =
        std::sqrt(acc / static_cast<double>(test_set.size()));
  }
  return report;
}

}  // namespace

EvalReport evaluate(const Model& model, const std::vector<Sample>& test_set) {
  if (test_set.empty()) throw InsufficientData("evaluation needs a nonempty test split");
  std::vector<std::vector<std::array<double, 2>>> preds;
  preds.reserve(test_set.size());
  for (const auto& s : test_set) {
    GaussianTrajectory traj = model.predict(s);
    std::vector<std::array<double, 2>> mu;
    mu.reserve(traj.steps.size());
    for (const auto& step : traj.steps) mu.push_back({step.mu_x, step.mu_y});
    preds.push_back(std::move(mu));
  }
  nlohmann::ordered_json cfg;
  cfg["seed"] = model.seed();
  cfg["encoder_hidden"] = model.config().encoder_hidden;
  cfg["decoder_hidden"] = model.config().decoder_hidden;
  cfg["use_ch2"] = model.ablation().use_ch2;
  cfg["use_ch3"] = model.ablation().use_ch3;
  return horizon_report(preds, test_set, "model-" + hex64(fnv1a(cfg.dump())));
}

EvalReport evaluate_baseline(BaselineKind kind, const std::vector<Sample>& test_set) {
  if (test_set.empty()) throw InsufficientData("evaluation needs a nonempty test split");
  std::vector<std::vector<std::array<double, 2>>> preds;
  preds.reserve(test_set.size());
  for (const auto& s : test_set) preds.push_back(baseline_predict(s, kind));
  return horizon_report(preds, test_set,
                        kind == BaselineKind::kCv ? "baseline-cv" : "baseline-ca");
}

std::string EvalReport::to_csv() const {
  std::ostringstream os;
  os << "1s,2s,3s,4s,5s,sample_count,config\n";
  os.precision(17);
  for (std::size_t i = 0; i < rmse_at.size(); ++i) os << rmse_at[i] << ',';
  os << sample_count << ',' << config_fingerprint << '\n';
  return os.str();
}

std::string EvalReport::to_json() const {
  nlohmann::ordered_json j;
  nlohmann::ordered_json rmse;
  for (std::size_t i = 0; i < rmse_at.size(); ++i)
    rmse[std::to_string(i + 1) + "s"] = rmse_at[i];
  j["rmse_m"] = rmse;
  j["sample_count"] = sample_count;
  j["config"] = config_fingerprint;
  return j.dump(2);
}

std::string TrainState::to_json() const {
  nlohmann::ordered_json j;
  j["formal_epochs_done"] = formal_epochs_done;
  j["shuffle_draws"] = shuffle_draws;
  // +inf (nothing improved yet) has no JSON literal; null stands in
  j["best_val"] = std::isfinite(best_val) ? nlohmann::ordered_json(best_val)
                                          : nlohmann::ordered_json();
  j["stall"] = stall;
  j["adam_steps"] = adam_steps;
  j["adam_m"] = adam_m;
  j["adam_v"] = adam_v;
  j["last_params"] = last_params;
  j["best_params"] = best_params;
  return j.dump();
}

TrainState TrainState::from_json(const std::string& text) {
  TrainState st;
  try {
    const auto j = nlohmann::ordered_json::parse(text);
    st.formal_epochs_done = j.at("formal_epochs_done").get<int>();
    st.shuffle_draws = j.at("shuffle_draws").get<std::uint64_t>();
    st.best_val = j.at("best_val").is_null() ? std::numeric_limits<double>::infinity()
                                             : j.at("best_val").get<double>();
    st.stall = j.at("stall").get<int>();
    st.adam_steps = j.at("adam_steps").get<std::int64_t>();
    st.adam_m = j.at("adam_m").get<std::vector<std::vector<double>>>();
    st.adam_v = j.at("adam_v").get<std::vector<std::vector<double>>>();
    st.last_params = j.at("last_params").get<std::vector<std::vector<double>>>();
    st.best_params = j.at("best_params").get<std::vector<std::vector<double>>>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("train state: ") + e.what());
  }
  return st;
}

void write_loss_csv(const std::string& path, const std::vector<LossRow>& curve) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open loss csv for writing: " + path);
  out << "epoch,phase,train_loss,val_loss\n";
  out.precision(17);
  for (const auto& row : curve)
    out << row.epoch << ',' << row.phase << ',' << row.train_loss << ',' << row.val_loss << '\n';
  if (!out) throw FormatError("failed writing loss csv: " + path);
}

}  // namespace predrisk
