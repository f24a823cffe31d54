#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <array>
#include <string>
#include <utility>
#include <vector>

#include "predrisk/config.hpp"
#include "predrisk/data.hpp"
#include "predrisk/errors.hpp"
#include "predrisk/gaussian.hpp"
#include "predrisk/model.hpp"
#include "predrisk/plan.hpp"
#include "predrisk/risk.hpp"
#include "predrisk/sample.hpp"
#include "predrisk/scenario.hpp"
#include "predrisk/scene.hpp"
#include "predrisk/train.hpp"

namespace py = pybind11;
using namespace predrisk;

namespace {

void bind_errors(py::module_& m) {
  // Base first: pybind11 tries translators newest-first, so the derived
  // registrations below take precedence over this one.
  static py::exception<Error> base(m, "Error");
#define PREDRISK_EXC(name) py::register_exception<name>(m, #name, base.ptr())
  PREDRISK_EXC(MissingVehicle);
  PREDRISK_EXC(InvalidPose);
  PREDRISK_EXC(ParseError);
  PREDRISK_EXC(InvalidValue);
  PREDRISK_EXC(FormatError);
  PREDRISK_EXC(ResampleError);
  PREDRISK_EXC(InsufficientData);
  PREDRISK_EXC(InvalidParameter);
  PREDRISK_EXC(ShapeError);
  PREDRISK_EXC(NotScalar);
  PREDRISK_EXC(NumericalError);
  PREDRISK_EXC(InvalidHorizon);
  PREDRISK_EXC(SplineError);
  PREDRISK_EXC(OutOfHorizon);
  PREDRISK_EXC(InvalidAxis);
  PREDRISK_EXC(InvalidParams);
  PREDRISK_EXC(GridError);
  PREDRISK_EXC(ConfigError);
#undef PREDRISK_EXC
}

void bind_scene(py::module_& m) {
  py::class_<MotionState>(m, "MotionState")
      .def(py::init<>())
      .def_readwrite("t", &MotionState::t)
      .def_readwrite("x", &MotionState::x)
      .def_readwrite("y", &MotionState::y)
      .def_readwrite("vx", &MotionState::vx)
      .def_readwrite("vy", &MotionState::vy)
      .def_readwrite("ax", &MotionState::ax)
      .def_readwrite("ay", &MotionState::ay)
      .def("finite", &MotionState::finite);

  py::class_<Track>(m, "Track")
      .def(py::init<>())
      .def_readwrite("vehicle_id", &Track::vehicle_id)
      .def_readwrite("length", &Track::length)
      .def_readwrite("width", &Track::width)
      .def_readwrite("states", &Track::states)
      .def("dt", &Track::dt)
      .def("validate", &Track::validate)
      .def("state_at", &Track::state_at, py::arg("t"), py::arg("tol") = 1e-6);

  py::class_<LaneGeometry>(m, "LaneGeometry")
      .def(py::init<>())
      .def_readwrite("lane_centers", &LaneGeometry::lane_centers)
      .def_readwrite("lane_width", &LaneGeometry::lane_width)
      .def("validate", &LaneGeometry::validate)
      .def("lane_index", &LaneGeometry::lane_index, py::arg("y"));

  py::class_<ContextGrid>(m, "ContextGrid")
      .def(py::init<>())
      .def_readwrite("cells", &ContextGrid::cells)
      .def_static("cell_index", &ContextGrid::cell_index, py::arg("row"), py::arg("col"))
      .def("occupied", &ContextGrid::occupied, py::arg("cell"))
      .def("at", &ContextGrid::at, py::arg("row"), py::arg("col"))
      .def("occupied_count", &ContextGrid::occupied_count)
      .def("occupied_sv_cells", &ContextGrid::occupied_sv_cells)
      .def_readonly_static("OV_CELL", &ContextGrid::kOvCell);

  py::class_<Obb>(m, "Obb")
      .def(py::init<>())
      .def_readwrite("cx", &Obb::cx)
      .def_readwrite("cy", &Obb::cy)
      .def_readwrite("heading", &Obb::heading)
      .def_readwrite("half_length", &Obb::half_length)
      .def_readwrite("half_width", &Obb::half_width)
      .def("validate", &Obb::validate)
      .def("corners", &Obb::corners);

  py::class_<GridOptions>(m, "GridOptions")
      .def(py::init<>())
      .def_readwrite("longitudinal_window", &GridOptions::longitudinal_window)
      .def_readwrite("alongside_band", &GridOptions::alongside_band);

  // Python-side convenience: the frame is taken from each track's state at t.
  m.def(
      "assign_context_grid",
      [](const std::vector<Track>& tracks, double t, const VehicleId& ov_id,
         const LaneGeometry& lanes, const GridOptions& opts) {
        std::vector<FrameEntry> frame;
        for (const auto& tr : tracks) {
          auto s = tr.state_at(t);
          if (s) frame.push_back({&tr, *s});
        }
        return assign_context_grid(frame, ov_id, lanes, opts);
      },
      py::arg("tracks"), py::arg("t"), py::arg("ov_id"), py::arg("lanes"),
      py::arg("opts") = GridOptions{});

  m.def("obb_at", &obb_at, py::arg("x"), py::arg("y"), py::arg("vx"), py::arg("vy"),
        py::arg("length"), py::arg("width"), py::arg("lanes"), py::arg("speed_floor") = 0.1);
  m.def("obb_from_pose", &obb_from_pose, py::arg("x"), py::arg("y"), py::arg("heading"),
        py::arg("length"), py::arg("width"));
}

void bind_sample(py::module_& m) {
  py::class_<GaussianParams>(m, "GaussianParams")
      .def(py::init<>())
      .def_readwrite("mu_x", &GaussianParams::mu_x)
      .def_readwrite("mu_y", &GaussianParams::mu_y)
      .def_readwrite("sigma_x", &GaussianParams::sigma_x)
      .def_readwrite("sigma_y", &GaussianParams::sigma_y)
      .def_readwrite("rho", &GaussianParams::rho)
      .def("validate", &GaussianParams::validate);

  py::class_<GaussianTrajectory>(m, "GaussianTrajectory")
      .def(py::init<>())
      .def_readwrite("steps", &GaussianTrajectory::steps)
      .def("validate", &GaussianTrajectory::validate);

  py::class_<VehicleDims>(m, "VehicleDims")
      .def(py::init<>())
      .def_readwrite("length", &VehicleDims::length)
      .def_readwrite("width", &VehicleDims::width);

  py::class_<SvHistory>(m, "SvHistory")
      .def(py::init<>())
      .def_readwrite("cell", &SvHistory::cell)
      .def_readwrite("vehicle_id", &SvHistory::vehicle_id)
      .def_readwrite("states", &SvHistory::states)
      .def("validate", &SvHistory::validate);

  py::class_<Sample>(m, "Sample")
      .def(py::init<>())
      .def_readwrite("id", &Sample::id)
      .def_readwrite("t0", &Sample::t0)
      .def_readwrite("ov_history", &Sample::ov_history)
      .def_readwrite("sv_histories", &Sample::sv_histories)
      .def_readwrite("ov_future", &Sample::ov_future)
      .def_readwrite("grid", &Sample::grid)
      .def("validate", &Sample::validate);
}

void bind_data(py::module_& m) {
  py::enum_<Source>(m, "Source")
      .value("NGSIM", Source::kNgsim)
      .value("HIGHD", Source::kHighd);

  py::class_<RawRecording>(m, "RawRecording")
      .def(py::init<>())
      .def_readwrite("source", &RawRecording::source)
      .def_readwrite("native_rate", &RawRecording::native_rate)
      .def_readwrite("tracks", &RawRecording::tracks)
      .def_readwrite("lanes", &RawRecording::lanes);

  py::class_<SplitManifest>(m, "SplitManifest")
      .def(py::init<>())
      .def_readwrite("seed", &SplitManifest::seed)
      .def_readwrite("train", &SplitManifest::train)
      .def_readwrite("val", &SplitManifest::val)
      .def_readwrite("test", &SplitManifest::test)
      .def("to_json", &SplitManifest::to_json)
      .def_static("from_json", &SplitManifest::from_json, py::arg("text"));

  py::class_<SplitSets>(m, "SplitSets")
      .def(py::init<>())
      .def_readwrite("train", &SplitSets::train)
      .def_readwrite("val", &SplitSets::val)
      .def_readwrite("test", &SplitSets::test);

  m.def("parse_ngsim", &parse_ngsim, py::arg("path"));
  m.def("parse_highd", &parse_highd, py::arg("tracks_path"), py::arg("meta_path"));
  m.def("butterworth_forward", &butterworth_forward, py::arg("series"), py::arg("fc"),
        py::arg("fs"));
  m.def("butterworth_lowpass", &butterworth_lowpass, py::arg("series"), py::arg("fc"),
        py::arg("fs"));
  m.def("filter_recording", &filter_recording, py::arg("recording"), py::arg("fc"));
  m.def("resample", &resample, py::arg("track"), py::arg("dt") = kDt);
  m.def("extract_windows", &extract_windows, py::arg("recording"),
        py::arg("opts") = GridOptions{}, py::arg("stride") = 1.0,
        py::arg("recording_label") = "rec");
  m.def("split_dataset", &split_dataset, py::arg("samples"), py::arg("seed"));
  m.def("apply_split", &apply_split, py::arg("samples"), py::arg("manifest"));
  m.def("write_samples_jsonl", &write_samples_jsonl, py::arg("path"), py::arg("samples"));
  m.def("read_samples_jsonl", &read_samples_jsonl, py::arg("path"));
}

void bind_model(py::module_& m) {
  py::enum_<FeatureKind>(m, "FeatureKind")
      .value("POS", FeatureKind::kPos)
      .value("POS_VEL", FeatureKind::kPosVel)
      .value("POS_VEL_ACC", FeatureKind::kPosVelAcc);

  py::enum_<BaselineKind>(m, "BaselineKind")
      .value("CV", BaselineKind::kCv)
      .value("CA", BaselineKind::kCa);

  py::class_<AblationConfig>(m, "AblationConfig")
      .def(py::init<>())
      .def_readwrite("use_ch2", &AblationConfig::use_ch2)
      .def_readwrite("use_ch3", &AblationConfig::use_ch3)
      .def_readwrite("features", &AblationConfig::features)
      .def_readwrite("relative", &AblationConfig::relative)
      .def("ov_feature_width", &AblationConfig::ov_feature_width)
      .def("sv_feature_width", &AblationConfig::sv_feature_width)
      .def("validate", &AblationConfig::validate);

  py::class_<ModelConfig>(m, "ModelConfig")
      .def(py::init<>())
      .def_readwrite("embed_dim", &ModelConfig::embed_dim)
      .def_readwrite("encoder_hidden", &ModelConfig::encoder_hidden)
      .def_readwrite("decoder_hidden", &ModelConfig::decoder_hidden)
      .def_readwrite("conv1_filters", &ModelConfig::conv1_filters)
      .def_readwrite("conv2_filters", &ModelConfig::conv2_filters)
      .def_readwrite("gat_dim", &ModelConfig::gat_dim)
      .def_readwrite("ch1_dim", &ModelConfig::ch1_dim)
      .def_readwrite("history_len", &ModelConfig::history_len)
      .def_readwrite("future_len", &ModelConfig::future_len)
      .def_readwrite("leaky_slope", &ModelConfig::leaky_slope)
      .def_readwrite("shared_sv_encoder", &ModelConfig::shared_sv_encoder)
      .def_readwrite("pool_stride", &ModelConfig::pool_stride)
      .def("validate", &ModelConfig::validate)
      .def("ch2_dim", &ModelConfig::ch2_dim)
      .def("context_dim", &ModelConfig::context_dim, py::arg("ablation"));

  py::class_<Model>(m, "Model")
      .def(py::init<ModelConfig, AblationConfig, std::uint64_t>(), py::arg("config"),
           py::arg("ablation"), py::arg("seed"))
      .def("predict", &Model::predict, py::arg("sample"))
      .def_property_readonly("config", &Model::config)
      .def_property_readonly("ablation", &Model::ablation)
      .def_property_readonly("seed", &Model::seed)
      .def("parameter_count", [](const Model& model) {
        std::int64_t n = 0;
        for (const auto& p : model.parameters()) n += p.numel();
        return n;
      });

  m.def("ov_features", &ov_features, py::arg("sample"), py::arg("ablation"));
  m.def("sv_features", &sv_features, py::arg("sample"), py::arg("sv_index"),
        py::arg("ablation"));
  m.def("baseline_predict", &baseline_predict, py::arg("sample"), py::arg("kind"));
  m.def("to_gaussian", &to_gaussian, py::arg("positions"));
  m.def("save_checkpoint", &save_checkpoint, py::arg("path"), py::arg("model"),
        py::arg("metadata_json") = "{}");
  m.def(
      "load_checkpoint",
      [](const std::string& path) {
        std::string meta;
        Model model = load_checkpoint(path, &meta);
        return py::make_tuple(std::move(model), meta);
      },
      py::arg("path"), "Returns (model, metadata_json).");
}

void bind_train(py::module_& m) {
  py::class_<TrainConfig>(m, "TrainConfig")
      .def(py::init<>())
      .def_readwrite("batch_size", &TrainConfig::batch_size)
      .def_readwrite("lr", &TrainConfig::lr)
      .def_readwrite("pretrain_epochs", &TrainConfig::pretrain_epochs)
      .def_readwrite("formal_epochs", &TrainConfig::formal_epochs)
      .def_readwrite("early_stop_patience", &TrainConfig::early_stop_patience)
      .def_readwrite("seed", &TrainConfig::seed)
      .def("validate", &TrainConfig::validate);

  py::class_<LossRow>(m, "LossRow")
      .def(py::init<>())
      .def_readwrite("epoch", &LossRow::epoch)
      .def_readwrite("phase", &LossRow::phase)
      .def_readwrite("train_loss", &LossRow::train_loss)
      .def_readwrite("val_loss", &LossRow::val_loss);

  py::class_<TrainState>(m, "TrainState")
      .def(py::init<>())
      .def_readwrite("formal_epochs_done", &TrainState::formal_epochs_done)
      .def_readwrite("shuffle_draws", &TrainState::shuffle_draws)
      .def_readwrite("best_val", &TrainState::best_val)
      .def_readwrite("stall", &TrainState::stall)
      .def("to_json", &TrainState::to_json)
      .def_static("from_json", &TrainState::from_json, py::arg("text"));

  py::class_<TrainResult>(m, "TrainResult")
      .def_readonly("model", &TrainResult::model)
      .def_readonly("curve", &TrainResult::curve)
      .def_readonly("state", &TrainResult::state);

  py::class_<EvalReport>(m, "EvalReport")
      .def(py::init<>())
      .def_readwrite("rmse_at", &EvalReport::rmse_at)
      .def_readwrite("sample_count", &EvalReport::sample_count)
      .def_readwrite("config_fingerprint", &EvalReport::config_fingerprint)
      .def("to_csv", &EvalReport::to_csv)
      .def("to_json", &EvalReport::to_json);

  m.def("rmse_loss", &rmse_loss, py::arg("predicted"), py::arg("truth"));
  m.def("nll_loss", &nll_loss, py::arg("trajectory"), py::arg("truth"));
  m.def("train", &train, py::arg("train_set"), py::arg("val_set"), py::arg("model_config"),
        py::arg("train_config"), py::arg("ablation"));
  m.def("resume_formal", &resume_formal, py::arg("model"), py::arg("state"),
        py::arg("train_set"), py::arg("val_set"), py::arg("train_config"));
  m.def("evaluate", &evaluate, py::arg("model"), py::arg("test_set"));
  m.def("evaluate_baseline", &evaluate_baseline, py::arg("kind"), py::arg("test_set"));
  m.def("write_loss_csv", &write_loss_csv, py::arg("path"), py::arg("curve"));
}

void bind_plan(py::module_& m) {
  py::class_<Pose>(m, "Pose")
      .def(py::init<>())
      .def_readwrite("x", &Pose::x)
      .def_readwrite("y", &Pose::y)
      .def_readwrite("heading", &Pose::heading);

  py::class_<CandidateTrajectory>(m, "CandidateTrajectory")
      .def(py::init<>())
      .def_readwrite("ax", &CandidateTrajectory::ax)
      .def_readwrite("lateral_target", &CandidateTrajectory::lateral_target)
      .def_readwrite("coeffs", &CandidateTrajectory::coeffs)
      .def_readwrite("t0", &CandidateTrajectory::t0)
      .def_readwrite("tf", &CandidateTrajectory::tf)
      .def_readwrite("x0", &CandidateTrajectory::x0)
      .def_readwrite("vx0", &CandidateTrajectory::vx0)
      .def_readwrite("y0", &CandidateTrajectory::y0)
      .def_readwrite("vy0", &CandidateTrajectory::vy0)
      .def_readwrite("ay0", &CandidateTrajectory::ay0)
      .def("x_at", &CandidateTrajectory::x_at, py::arg("tau"))
      .def("vx_at", &CandidateTrajectory::vx_at, py::arg("tau"))
      .def("y_at", &CandidateTrajectory::y_at, py::arg("tau"))
      .def("vy_at", &CandidateTrajectory::vy_at, py::arg("tau"));

  py::class_<SplineTrajectory>(m, "SplineTrajectory")
      .def(py::init<>())
      .def_readwrite("t0", &SplineTrajectory::t0)
      .def_readwrite("dt", &SplineTrajectory::dt)
      .def("tf", &SplineTrajectory::tf)
      .def("x_at",
           [](const SplineTrajectory& s, double tau) { return s.value(s.x, tau); })
      .def("y_at",
           [](const SplineTrajectory& s, double tau) { return s.value(s.y, tau); })
      .def("vx_at",
           [](const SplineTrajectory& s, double tau) { return s.deriv(s.x, tau); })
      .def("vy_at",
           [](const SplineTrajectory& s, double tau) { return s.deriv(s.y, tau); });

  py::class_<CandidateGridOptions>(m, "CandidateGridOptions")
      .def(py::init<>())
      .def_readwrite("ax_min", &CandidateGridOptions::ax_min)
      .def_readwrite("ax_max", &CandidateGridOptions::ax_max)
      .def_readwrite("ax_step", &CandidateGridOptions::ax_step)
      .def_readwrite("tf", &CandidateGridOptions::tf);

  m.def("quintic_lateral", &quintic_lateral, py::arg("y0"), py::arg("vy0"), py::arg("ay0"),
        py::arg("y_target"), py::arg("tf") = 5.0);
  m.def("candidates", &candidates, py::arg("av_state"), py::arg("lateral_targets"),
        py::arg("opts") = CandidateGridOptions{});
  m.def("adjacent_lane_targets", &adjacent_lane_targets, py::arg("y"), py::arg("lanes"));
  m.def("spline_fit", &spline_fit, py::arg("points"), py::arg("t0"), py::arg("dt"),
        py::arg("vx0"), py::arg("ax0"), py::arg("vy0"), py::arg("ay0"));
  m.def("eval_pose",
        py::overload_cast<const CandidateTrajectory&, double, const LaneGeometry&, double>(
            &eval_pose),
        py::arg("traj"), py::arg("t"), py::arg("lanes"), py::arg("speed_floor") = 0.1);
  m.def("eval_pose",
        py::overload_cast<const SplineTrajectory&, double, const LaneGeometry&, double>(
            &eval_pose),
        py::arg("traj"), py::arg("t"), py::arg("lanes"), py::arg("speed_floor") = 0.1);
}

void bind_risk(py::module_& m) {
  py::class_<RiskParams>(m, "RiskParams")
      .def(py::init<>())
      .def_readwrite("sigma1", &RiskParams::sigma1)
      .def_readwrite("sigma2", &RiskParams::sigma2)
      .def_readwrite("sigma3", &RiskParams::sigma3)
      .def_readwrite("sigma4", &RiskParams::sigma4)
      .def_readwrite("w_ttc", &RiskParams::w_ttc)
      .def_readwrite("w_mdm", &RiskParams::w_mdm)
      .def_readwrite("check_step", &RiskParams::check_step)
      .def_readwrite("squared_ttc", &RiskParams::squared_ttc)
      .def("validate", &RiskParams::validate, py::arg("tf"));

  py::class_<RiskProfile>(m, "RiskProfile")
      .def(py::init<>())
      .def_readwrite("ov_id", &RiskProfile::ov_id)
      .def_readwrite("ttc", &RiskProfile::ttc)
      .def_readwrite("times", &RiskProfile::times)
      .def_readwrite("risk", &RiskProfile::risk)
      .def_readwrite("mdm_x", &RiskProfile::mdm_x)
      .def_readwrite("mdm_y", &RiskProfile::mdm_y);

  py::class_<OvPrediction>(m, "OvPrediction")
      .def(py::init<>())
      .def_readwrite("id", &OvPrediction::id)
      .def_readwrite("state0", &OvPrediction::state0)
      .def_readwrite("dims", &OvPrediction::dims)
      .def_readwrite("prediction", &OvPrediction::prediction);

  py::class_<RiskMapEntry>(m, "RiskMapEntry")
      .def(py::init<>())
      .def_readwrite("ax", &RiskMapEntry::ax)
      .def_readwrite("lateral_target", &RiskMapEntry::lateral_target)
      .def_readwrite("risk", &RiskMapEntry::risk)
      .def_readwrite("ttcs", &RiskMapEntry::ttcs);

  py::class_<RiskMap>(m, "RiskMap")
      .def(py::init<>())
      .def_readwrite("t0", &RiskMap::t0)
      .def_readwrite("times", &RiskMap::times)
      .def_readwrite("params", &RiskMap::params)
      .def_readwrite("scenario_id", &RiskMap::scenario_id)
      .def_readwrite("ov_ids", &RiskMap::ov_ids)
      .def_readwrite("entries", &RiskMap::entries);

  py::class_<PairDims>(m, "PairDims")
      .def(py::init<>())
      .def_readwrite("av", &PairDims::av)
      .def_readwrite("ov", &PairDims::ov);

  py::class_<MdmResult>(m, "MdmResult")
      .def(py::init<>())
      .def_readwrite("mdm", &MdmResult::mdm)
      .def_readwrite("mdm_x", &MdmResult::mdm_x)
      .def_readwrite("mdm_y", &MdmResult::mdm_y);

  m.def("sat_overlap", &sat_overlap, py::arg("a"), py::arg("b"));
  m.def("distance_margin", &distance_margin, py::arg("a"), py::arg("b"), py::arg("axis"));
  m.def("mdm", &mdm, py::arg("a"), py::arg("b"),
        py::arg("long_axis") = std::array<double, 2>{1.0, 0.0},
        py::arg("lat_axis") = std::array<double, 2>{0.0, 1.0});
  m.def("ttc", &ttc, py::arg("av"), py::arg("ov"), py::arg("dims"), py::arg("lanes"),
        py::arg("params"));
  m.def("pair_risk", &pair_risk, py::arg("av"), py::arg("ov"), py::arg("ov_id"),
        py::arg("dims"), py::arg("lanes"), py::arg("params"));
  m.def("aggregate_risk", &aggregate_risk, py::arg("profiles"));
  m.def("risk_map", &risk_map, py::arg("av_state"), py::arg("av_dims"), py::arg("ovs"),
        py::arg("lanes"), py::arg("params"), py::arg("grid") = CandidateGridOptions{});
}

void bind_scenario(py::module_& m) {
  py::class_<Scenario>(m, "Scenario")
      .def(py::init<>())
      .def_readwrite("name", &Scenario::name)
      .def_readwrite("av_id", &Scenario::av_id)
      .def_readwrite("lanes", &Scenario::lanes)
      .def_readwrite("tracks", &Scenario::tracks)
      .def("av", &Scenario::av);

  m.def("parse_scenario", &parse_scenario, py::arg("path"));
  m.def("cut_sample", &cut_sample, py::arg("tracks"), py::arg("ov_id"), py::arg("t0"),
        py::arg("lanes"), py::arg("opts") = GridOptions{});
}

void bind_config(py::module_& m) {
  py::class_<DataConfig>(m, "DataConfig")
      .def(py::init<>())
      .def_readwrite("format", &DataConfig::format)
      .def_readwrite("input", &DataConfig::input)
      .def_readwrite("meta", &DataConfig::meta)
      .def_readwrite("cutoff_hz", &DataConfig::cutoff_hz)
      .def_readwrite("stride_s", &DataConfig::stride_s)
      .def_readwrite("grid", &DataConfig::grid);

  py::class_<RunConfig>(m, "RunConfig")
      .def(py::init<>())
      .def_readwrite("data", &RunConfig::data)
      .def_readwrite("model", &RunConfig::model)
      .def_readwrite("ablation", &RunConfig::ablation)
      .def_readwrite("train", &RunConfig::train)
      .def_readwrite("plan", &RunConfig::plan)
      .def_readwrite("risk", &RunConfig::risk)
      .def_readwrite("output_dir", &RunConfig::output_dir)
      .def_readwrite("split_seed", &RunConfig::split_seed)
      .def("validate", &RunConfig::validate)
      .def("fingerprint", &RunConfig::fingerprint);

  m.def("set_channels",
        [](AblationConfig& ablation, const std::string& channels) {
          set_channels(ablation, channels);
        },
        py::arg("ablation"), py::arg("channels"));
  m.def("channels_string", &channels_string, py::arg("ablation"));
  m.def("feature_kind_from", &feature_kind_from, py::arg("name"));
  m.def("feature_kind_name", [](FeatureKind kind) { return to_string(kind); },
        py::arg("kind"));
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Vehicle trajectory prediction and collision-risk assessment";
  m.attr("__version__") = kVersion;
  m.attr("DT") = kDt;
  m.attr("HISTORY_LEN") = kHistoryLen;
  m.attr("FUTURE_LEN") = kFutureLen;
  m.attr("HORIZON") = kHorizon;

  bind_errors(m);
  bind_scene(m);
  bind_sample(m);
  bind_data(m);
  bind_model(m);
  bind_train(m);
  bind_plan(m);
  bind_risk(m);
  bind_scenario(m);
  bind_config(m);
}
