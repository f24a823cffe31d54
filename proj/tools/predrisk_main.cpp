// Command-line frontend: ingest -> train -> eval for the prediction model,
// predict for single-sample dumps, assess for scenario risk maps.
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "predrisk/config.hpp"
#include "predrisk/data.hpp"
#include "predrisk/model.hpp"
#include "predrisk/plan.hpp"
#include "predrisk/risk.hpp"
#include "predrisk/scenario.hpp"
#include "predrisk/train.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace predrisk;

namespace {

// Shortest round-trip decimal form, for readable yet exact CSV numbers.
std::string num(double v) { return json(v).dump(); }

void write_text(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << content;
  if (!out) throw Error("failed writing " + path.string());
}

void require_file(const std::string& path, const std::string& what) {
  if (path.empty()) throw ConfigError(what + " is required");
  if (!fs::exists(path)) throw ConfigError(what + " not found: " + path);
}

std::string sanitize(std::string s) {
  for (char& c : s)
    if (c == ':' || c == '/' || c == '\\' || c == ' ') c = '_';
  return s;
}

void write_run_metadata(const RunConfig& cfg, const std::string& command) {
  json j;
  j["command"] = command;
  j["version"] = kVersion;
  j["config_fingerprint"] = cfg.fingerprint();
  j["seeds"] = {{"train", cfg.train.seed}, {"split", cfg.split_seed}};
  write_text(fs::path(cfg.output_dir) / ("run_" + command + ".json"), j.dump(2) + "\n");
}

std::vector<Sample> load_split(const std::string& dir, const std::string& split) {
  const fs::path path = fs::path(dir) / ("samples_" + split + ".jsonl");
  require_file(path.string(), "sample store " + path.string());
  return read_samples_jsonl(path.string());
}

BaselineKind baseline_from(const std::string& name) {
  if (name == "cv") return BaselineKind::kCv;
  if (name == "ca") return BaselineKind::kCa;
  throw ConfigError("baseline must be cv or ca, got '" + name + "'");
}

// ---- ingest -------------------------------------------------------------

void cmd_ingest(const RunConfig& cfg) {
  cfg.validate();
  require_file(cfg.data.input, "data.input");
  RawRecording rec;
  if (cfg.data.format == "ngsim") {
    rec = parse_ngsim(cfg.data.input);
    if (cfg.data.cutoff_hz > 0.0) filter_recording(rec, cfg.data.cutoff_hz);
  } else {
    require_file(cfg.data.meta, "data.meta");
    rec = parse_highd(cfg.data.input, cfg.data.meta);  // already smoothed upstream
  }

  RawRecording resampled;
  resampled.source = rec.source;
  resampled.native_rate = rec.native_rate;
  resampled.lanes = rec.lanes;
  for (const Track& tr : rec.tracks)
    if (tr.states.size() >= 2) resampled.tracks.push_back(resample(tr, kDt));

  const std::string label = fs::path(cfg.data.input).stem().string();
  const std::vector<Sample> samples =
      extract_windows(resampled, cfg.data.grid, cfg.data.stride_s, label);
  const SplitManifest manifest = split_dataset(samples, cfg.split_seed);
  const SplitSets sets = apply_split(samples, manifest);

  const fs::path out(cfg.output_dir);
  fs::create_directories(out);
  write_samples_jsonl((out / "samples_train.jsonl").string(), sets.train);
  write_samples_jsonl((out / "samples_val.jsonl").string(), sets.val);
  write_samples_jsonl((out / "samples_test.jsonl").string(), sets.test);
  write_text(out / "split.json", manifest.to_json());

  json m;
  m["version"] = kVersion;
  m["config_fingerprint"] = cfg.fingerprint();
  m["seed"] = cfg.split_seed;
  m["source"] = {{"format", cfg.data.format}, {"input", cfg.data.input}, {"meta", cfg.data.meta}};
  m["preprocessing"] = {{"cutoff_hz", cfg.data.cutoff_hz},
                        {"stride_s", cfg.data.stride_s},
                        {"longitudinal_window", cfg.data.grid.longitudinal_window},
                        {"alongside_band", cfg.data.grid.alongside_band},
                        {"dt", kDt}};
  m["counts"] = {{"tracks", resampled.tracks.size()},
                 {"samples", samples.size()},
                 {"train", sets.train.size()},
                 {"val", sets.val.size()},
                 {"test", sets.test.size()}};
  write_text(out / "manifest.json", m.dump(2) + "\n");
  write_run_metadata(cfg, "ingest");

  std::cout << "ingested " << samples.size() << " samples from " << resampled.tracks.size()
            << " tracks (train " << sets.train.size() << ", val " << sets.val.size()
            << ", test " << sets.test.size() << ")\n"
            << "wrote sample store and manifest under " << out.string() << "\n";
}

// ---- train --------------------------------------------------------------

void cmd_train(const RunConfig& cfg, const std::string& samples_dir,
               const std::string& resume_path) {
  cfg.validate();
  const std::string dir = samples_dir.empty() ? cfg.output_dir : samples_dir;
  const std::vector<Sample> train_set = load_split(dir, "train");
  const std::vector<Sample> val_set = load_split(dir, "val");

  TrainResult result = [&]() -> TrainResult {
    if (resume_path.empty())
      return train(train_set, val_set, cfg.model, cfg.train, cfg.ablation);
    require_file(resume_path, "checkpoint");
    std::string meta_text;
    Model model = load_checkpoint(resume_path, &meta_text);
    const json meta = json::parse(meta_text);
    if (!meta.contains("train_state"))
      throw ConfigError("checkpoint carries no training state to resume from");
    const TrainState state = TrainState::from_json(meta.at("train_state").dump());
    return resume_formal(std::move(model), state, train_set, val_set, cfg.train);
  }();

  const fs::path out(cfg.output_dir);
  fs::create_directories(out);
  json meta;
  meta["config_fingerprint"] = cfg.fingerprint();
  meta["channels"] = channels_string(result.model.ablation());
  meta["features"] = to_string(result.model.ablation().features);
  meta["train_state"] = json::parse(result.state.to_json());
  save_checkpoint((out / "model.ckpt").string(), result.model, meta.dump());
  write_loss_csv((out / "loss.csv").string(), result.curve);
  write_run_metadata(cfg, "train");

  const LossRow& last = result.curve.back();
  std::cout << "trained " << result.curve.size() << " epochs ("
            << result.state.formal_epochs_done << " formal); last " << last.phase
            << " epoch " << last.epoch << ": train " << num(last.train_loss) << ", val "
            << num(last.val_loss) << "\n"
            << "wrote " << (out / "model.ckpt").string() << " and "
            << (out / "loss.csv").string() << "\n";
}

// ---- eval ---------------------------------------------------------------

void cmd_eval(const RunConfig& cfg, const std::string& samples_dir,
              const std::string& checkpoint, const std::string& baseline,
              const std::string& split) {
  if (checkpoint.empty() == baseline.empty())
    throw ConfigError("pass exactly one of --checkpoint or --baseline");
  const std::string dir = samples_dir.empty() ? cfg.output_dir : samples_dir;
  const std::vector<Sample> set = load_split(dir, split);

  EvalReport report;
  if (baseline.empty()) {
    require_file(checkpoint, "checkpoint");
    report = evaluate(load_checkpoint(checkpoint), set);
  } else {
    report = evaluate_baseline(baseline_from(baseline), set);
  }

  const fs::path out(cfg.output_dir);
  fs::create_directories(out);
  write_text(out / "eval.csv", report.to_csv());
  write_text(out / "eval.json", report.to_json() + "\n");
  write_run_metadata(cfg, "eval");
  std::cout << report.to_csv();
}

// ---- predict ------------------------------------------------------------

void cmd_predict(const RunConfig& cfg, const std::string& samples_file,
                 const std::string& sample_id, const std::string& checkpoint,
                 const std::string& baseline) {
  if (checkpoint.empty() == baseline.empty())
    throw ConfigError("pass exactly one of --checkpoint or --baseline");
  require_file(samples_file, "sample store");
  const std::vector<Sample> samples = read_samples_jsonl(samples_file);
  if (samples.empty()) throw InsufficientData("sample store is empty: " + samples_file);

  const Sample* sample = nullptr;
  if (sample_id.empty()) {
    sample = &samples.front();
  } else {
    for (const Sample& s : samples)
      if (s.id == sample_id) {
        sample = &s;
        break;
      }
    if (!sample) throw ConfigError("no sample with id '" + sample_id + "'");
  }

  GaussianTrajectory traj;
  if (baseline.empty()) {
    require_file(checkpoint, "checkpoint");
    traj = load_checkpoint(checkpoint).predict(*sample);
  } else {
    traj = to_gaussian(baseline_predict(*sample, baseline_from(baseline)));
  }

  std::string csv = "step,t,mu_x,mu_y,sigma_x,sigma_y,rho,truth_x,truth_y\n";
  for (size_t k = 0; k < traj.steps.size(); ++k) {
    const GaussianParams& p = traj.steps[k];
    csv += std::to_string(k + 1) + "," + num(sample->t0 + kDt * static_cast<double>(k + 1)) +
           "," + num(p.mu_x) + "," + num(p.mu_y) + "," + num(p.sigma_x) + "," +
           num(p.sigma_y) + "," + num(p.rho);
    if (k < sample->ov_future.size())
      csv += "," + num(sample->ov_future[k][0]) + "," + num(sample->ov_future[k][1]);
    else
      csv += ",,";
    csv += "\n";
  }
  const fs::path out(cfg.output_dir);
  fs::create_directories(out);
  const fs::path path = out / ("prediction_" + sanitize(sample->id) + ".csv");
  write_text(path, csv);
  write_run_metadata(cfg, "predict");
  std::cout << "predicted sample " << sample->id << " -> " << path.string() << "\n";
}

// ---- assess -------------------------------------------------------------

std::string pose_csv_rows(const std::string& prefix, const std::vector<double>& times,
                          const std::function<Pose(double)>& pose_at) {
  std::string rows;
  for (double t : times) {
    const Pose p = pose_at(t);
    rows += prefix + num(t) + "," + num(p.x) + "," + num(p.y) + "," + num(p.heading) + "\n";
  }
  return rows;
}

void cmd_assess(const RunConfig& cfg, const std::string& scenario_path,
                const std::string& checkpoint, const std::string& baseline) {
  cfg.validate();
  if (!checkpoint.empty() && !baseline.empty())
    throw ConfigError("pass at most one of --checkpoint or --baseline");
  require_file(scenario_path, "scenario");
  const Scenario sc = parse_scenario(scenario_path);
  const Track& av = sc.av();
  if (static_cast<int>(av.states.size()) < kHistoryLen)
    throw InsufficientData("AV track has under 3 s of history");
  const MotionState av0 = av.states.back();
  const double t0 = av0.t;

  std::optional<Model> model;
  if (!checkpoint.empty()) {
    require_file(checkpoint, "checkpoint");
    model.emplace(load_checkpoint(checkpoint));
  }
  const BaselineKind kind = baseline_from(baseline.empty() ? "cv" : baseline);

  std::vector<OvPrediction> ovs;
  std::vector<Sample> ov_samples;
  for (const Track& tr : sc.tracks) {
    if (tr.vehicle_id == sc.av_id) continue;
    Sample sample = cut_sample(sc.tracks, tr.vehicle_id, t0, sc.lanes, cfg.data.grid);
    OvPrediction ov;
    ov.id = tr.vehicle_id;
    ov.state0 = *tr.state_at(t0);
    ov.dims = VehicleDims{tr.length, tr.width};
    ov.prediction = model ? model->predict(sample)
                          : to_gaussian(baseline_predict(sample, kind));
    ovs.push_back(std::move(ov));
    ov_samples.push_back(std::move(sample));
  }

  RiskMap rm = risk_map(av0, VehicleDims{av.length, av.width}, ovs, sc.lanes,
                        cfg.risk, cfg.plan);
  rm.scenario_id = sc.name;

  const fs::path out(cfg.output_dir);
  fs::create_directories(out);

  // risk map: one row per candidate per grid time
  std::string risk_csv = "ax,lateral_target,t,risk\n";
  for (const RiskMapEntry& e : rm.entries) {
    const std::string prefix = num(e.ax) + "," + num(e.lateral_target) + ",";
    for (size_t k = 0; k < rm.times.size(); ++k)
      risk_csv += prefix + num(rm.times[k]) + "," + num(e.risk[k]) + "\n";
  }
  write_text(out / "riskmap.csv", risk_csv);

  // header/summary JSON
  json hdr;
  hdr["scenario"] = rm.scenario_id;
  hdr["t0"] = rm.t0;
  hdr["version"] = kVersion;
  hdr["config_fingerprint"] = cfg.fingerprint();
  hdr["predictor"] = model ? "model" : (kind == BaselineKind::kCv ? "baseline-cv" : "baseline-ca");
  hdr["params"] = {{"sigma1", rm.params.sigma1},   {"sigma2", rm.params.sigma2},
                   {"sigma3", rm.params.sigma3},   {"sigma4", rm.params.sigma4},
                   {"w_ttc", rm.params.w_ttc},     {"w_mdm", rm.params.w_mdm},
                   {"check_step", rm.params.check_step},
                   {"squared_ttc", rm.params.squared_ttc},
                   {"tf", cfg.plan.tf},
                   {"ax_min", cfg.plan.ax_min},
                   {"ax_max", cfg.plan.ax_max},
                   {"ax_step", cfg.plan.ax_step}};
  hdr["ov_ids"] = rm.ov_ids;
  json cands = json::array();
  double best_risk = 2.0;
  const RiskMapEntry* best = nullptr;
  for (const RiskMapEntry& e : rm.entries) {
    json c;
    c["ax"] = e.ax;
    c["lateral_target"] = e.lateral_target;
    c["end_risk"] = e.risk.empty() ? 0.0 : e.risk.back();
    json ttcs;
    for (size_t i = 0; i < rm.ov_ids.size(); ++i) ttcs[rm.ov_ids[i]] = e.ttcs[i];
    c["ttc"] = std::move(ttcs);
    cands.push_back(std::move(c));
    const double end_risk = e.risk.empty() ? 0.0 : e.risk.back();
    if (end_risk < best_risk) {
      best_risk = end_risk;
      best = &e;
    }
  }
  hdr["candidates"] = std::move(cands);
  json ov_summary = json::array();
  for (size_t i = 0; i < rm.ov_ids.size(); ++i) {
    double min_ttc = cfg.plan.tf;
    for (const RiskMapEntry& e : rm.entries) min_ttc = std::min(min_ttc, e.ttcs[i]);
    ov_summary.push_back({{"id", rm.ov_ids[i]}, {"min_ttc", min_ttc}});
  }
  hdr["ovs"] = std::move(ov_summary);
  write_text(out / "riskmap.json", hdr.dump(2) + "\n");

  // candidate poses for plotting
  const std::vector<double> targets = adjacent_lane_targets(av0.y, sc.lanes);
  std::string cand_csv = "ax,lateral_target,t,x,y,heading\n";
  for (const CandidateTrajectory& c : candidates(av0, targets, cfg.plan)) {
    const std::string prefix = num(c.ax) + "," + num(c.lateral_target) + ",";
    cand_csv += pose_csv_rows(prefix, rm.times,
                              [&](double t) { return eval_pose(c, t, sc.lanes); });
  }
  write_text(out / "candidates.csv", cand_csv);

  // per-OV spline poses and predicted-vs-truth overlays
  for (size_t i = 0; i < ovs.size(); ++i) {
    const OvPrediction& ov = ovs[i];
    std::vector<std::array<double, 2>> pts;
    pts.push_back({ov.state0.x, ov.state0.y});
    for (const GaussianParams& p : ov.prediction.steps) pts.push_back({p.mu_x, p.mu_y});
    const SplineTrajectory spline = spline_fit(pts, t0, kDt, ov.state0.vx, ov.state0.ax,
                                               ov.state0.vy, ov.state0.ay);
    std::string spline_csv = "t,x,y,heading\n";
    spline_csv += pose_csv_rows("", rm.times,
                                [&](double t) { return eval_pose(spline, t, sc.lanes); });
    write_text(out / ("ov_spline_" + sanitize(ov.id) + ".csv"), spline_csv);

    std::string overlay = "step,t,mu_x,mu_y,sigma_x,sigma_y,rho,truth_x,truth_y\n";
    const std::vector<std::array<double, 2>>& truth = ov_samples[i].ov_future;
    for (size_t k = 0; k < ov.prediction.steps.size(); ++k) {
      const GaussianParams& p = ov.prediction.steps[k];
      overlay += std::to_string(k + 1) + "," + num(t0 + kDt * static_cast<double>(k + 1)) +
                 "," + num(p.mu_x) + "," + num(p.mu_y) + "," + num(p.sigma_x) + "," +
                 num(p.sigma_y) + "," + num(p.rho);
      if (k < truth.size())
        overlay += "," + num(truth[k][0]) + "," + num(truth[k][1]);
      else
        overlay += ",,";
      overlay += "\n";
    }
    write_text(out / ("overlay_" + sanitize(ov.id) + ".csv"), overlay);
  }

  write_run_metadata(cfg, "assess");
  std::cout << "risk map over " << rm.entries.size() << " candidates x " << rm.times.size()
            << " times, " << ovs.size() << " object vehicles\n";
  if (best)
    std::cout << "lowest horizon-end risk: ax " << num(best->ax) << " m/s^2 toward y "
              << num(best->lateral_target) << " m (risk " << num(best_risk) << ")\n";
  std::cout << "wrote risk map, candidates, and overlays under " << out.string() << "\n";
}

int map_exit(const std::function<void()>& body) {
  const auto fail = [](int code, const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return code;
  };
  try {
    body();
    return 0;
  } catch (const InsufficientData& e) {
    return fail(3, e);
  } catch (const MissingVehicle& e) {
    return fail(3, e);
  } catch (const InvalidHorizon& e) {
    return fail(3, e);
  } catch (const OutOfHorizon& e) {
    return fail(3, e);
  } catch (const NumericalError& e) {
    return fail(4, e);
  } catch (const SplineError& e) {
    return fail(4, e);
  } catch (const std::exception& e) {
    return fail(2, e);
  }
}

}  // namespace

int main(int argc, char** argv) {
  RunConfig cfg;
  std::string channels = "123";
  std::string features = "pos_vel_acc";

  CLI::App app{"vehicle trajectory prediction and collision-risk assessment"};
  app.fallthrough();  // global options may follow the subcommand name
  app.set_config("--config,-c", "", "key = value configuration file with [section] headers");
  app.require_subcommand(1);

  app.add_option("--data.format", cfg.data.format, "ngsim | highd");
  app.add_option("--data.input", cfg.data.input, "trajectory CSV (highd: tracks CSV)");
  app.add_option("--data.meta", cfg.data.meta, "highd recording-meta CSV");
  app.add_option("--data.cutoff_hz", cfg.data.cutoff_hz, "zero-phase filter cutoff; <=0 disables");
  app.add_option("--data.stride_s", cfg.data.stride_s, "window stride in seconds");
  app.add_option("--data.window_m", cfg.data.grid.longitudinal_window, "capture window each way");
  app.add_option("--data.alongside_band_m", cfg.data.grid.alongside_band, "alongside band");

  app.add_option("--model.embed_dim", cfg.model.embed_dim);
  app.add_option("--model.encoder_hidden", cfg.model.encoder_hidden);
  app.add_option("--model.decoder_hidden", cfg.model.decoder_hidden);
  app.add_option("--model.conv1_filters", cfg.model.conv1_filters);
  app.add_option("--model.conv2_filters", cfg.model.conv2_filters);
  app.add_option("--model.gat_dim", cfg.model.gat_dim);
  app.add_option("--model.ch1_dim", cfg.model.ch1_dim);
  app.add_option("--model.leaky_slope", cfg.model.leaky_slope);
  app.add_option("--model.shared_sv_encoder", cfg.model.shared_sv_encoder,
                 "one encoder for all SV slots (false: per-slot weights)");

  app.add_option("--ablation.channels", channels, "enabled channels: 1, 12, 13, or 123");
  app.add_option("--ablation.features", features, "pos | pos_vel | pos_vel_acc");
  app.add_option("--ablation.relative", cfg.ablation.relative,
                 "append SV-minus-OV relative motion to SV features");

  app.add_option("--train.batch_size", cfg.train.batch_size);
  app.add_option("--train.lr", cfg.train.lr);
  app.add_option("--train.pretrain_epochs", cfg.train.pretrain_epochs);
  app.add_option("--train.formal_epochs", cfg.train.formal_epochs);
  app.add_option("--train.early_stop_patience", cfg.train.early_stop_patience);
  app.add_option("--train.seed", cfg.train.seed);

  app.add_option("--plan.ax_min", cfg.plan.ax_min);
  app.add_option("--plan.ax_max", cfg.plan.ax_max);
  app.add_option("--plan.ax_step", cfg.plan.ax_step);
  app.add_option("--plan.tf", cfg.plan.tf, "candidate horizon in seconds");

  app.add_option("--risk.sigma1", cfg.risk.sigma1);
  app.add_option("--risk.sigma2", cfg.risk.sigma2);
  app.add_option("--risk.sigma3", cfg.risk.sigma3);
  app.add_option("--risk.sigma4", cfg.risk.sigma4);
  app.add_option("--risk.w_ttc", cfg.risk.w_ttc);
  app.add_option("--risk.w_mdm", cfg.risk.w_mdm);
  app.add_option("--risk.check_step", cfg.risk.check_step);
  app.add_option("--risk.squared_ttc", cfg.risk.squared_ttc,
                 "square TTC in the magnitude exponent");

  app.add_option("--run.output_dir,-o", cfg.output_dir, "artifact directory");
  app.add_option("--run.split_seed", cfg.split_seed, "dataset split seed");

  CLI::App* ingest = app.add_subcommand("ingest", "parse, filter, resample, window, and split");

  CLI::App* train_cmd = app.add_subcommand("train", "two-phase training run");
  std::string samples_dir, resume_path;
  train_cmd->add_option("--samples-dir", samples_dir, "sample store directory (default: output dir)");
  train_cmd->add_option("--resume", resume_path, "checkpoint to continue formal training from");

  CLI::App* eval_cmd = app.add_subcommand("eval", "per-horizon RMSE report");
  std::string eval_samples_dir, eval_ckpt, eval_baseline, eval_split = "test";
  eval_cmd->add_option("--samples-dir", eval_samples_dir, "sample store directory (default: output dir)");
  eval_cmd->add_option("--checkpoint", eval_ckpt, "trained model checkpoint");
  eval_cmd->add_option("--baseline", eval_baseline, "cv | ca");
  eval_cmd->add_option("--split", eval_split, "train | val | test")
      ->check(CLI::IsMember({"train", "val", "test"}));

  CLI::App* predict_cmd = app.add_subcommand("predict", "dump one sample's predicted trajectory");
  std::string pred_samples, pred_id, pred_ckpt, pred_baseline;
  predict_cmd->add_option("--samples", pred_samples, "sample store (JSON lines)")->required();
  predict_cmd->add_option("--id", pred_id, "sample id (default: first sample)");
  predict_cmd->add_option("--checkpoint", pred_ckpt, "trained model checkpoint");
  predict_cmd->add_option("--baseline", pred_baseline, "cv | ca");

  CLI::App* assess_cmd = app.add_subcommand("assess", "risk map for a scenario file");
  std::string scenario_path, assess_ckpt, assess_baseline;
  assess_cmd->add_option("--scenario", scenario_path, "scenario CSV")->required();
  assess_cmd->add_option("--checkpoint", assess_ckpt, "trained model checkpoint");
  assess_cmd->add_option("--baseline", assess_baseline, "cv | ca (default cv without checkpoint)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  return map_exit([&] {
    set_channels(cfg.ablation, channels);
    cfg.ablation.features = feature_kind_from(features);
    if (*ingest) return cmd_ingest(cfg);
    if (*train_cmd) return cmd_train(cfg, samples_dir, resume_path);
    if (*eval_cmd) return cmd_eval(cfg, eval_samples_dir, eval_ckpt, eval_baseline, eval_split);
    if (*predict_cmd) return cmd_predict(cfg, pred_samples, pred_id, pred_ckpt, pred_baseline);
    if (*assess_cmd) return cmd_assess(cfg, scenario_path, assess_ckpt, assess_baseline);
  });
}
