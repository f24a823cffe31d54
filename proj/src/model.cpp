#include "predrisk/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include "json.hpp"

namespace predrisk {

using ad::Shape;
using ad::Tensor;
using json = nlohmann::ordered_json;

namespace {

constexpr double kLogSigmaLo = -6.907755278982137;  // log 1e-3
constexpr double kLogSigmaHi = 6.907755278982137;   // log 1e3
constexpr double kRhoScale = 0.999;

int base_feature_width(FeatureKind kind) {
  switch (kind) {
    case FeatureKind::kPos: return 2;
    case FeatureKind::kPosVel: return 4;
    case FeatureKind::kPosVelAcc: return 6;
  }
  throw InvalidValue("unknown feature kind");
}

std::string feature_kind_name(FeatureKind kind) {
  switch (kind) {
    case FeatureKind::kPos: return "pos";
    case FeatureKind::kPosVel: return "pos_vel";
    case FeatureKind::kPosVelAcc: return "pos_vel_acc";
  }
  throw InvalidValue("unknown feature kind");
}

FeatureKind feature_kind_from(const std::string& name) {
  if (name == "pos") return FeatureKind::kPos;
  if (name == "pos_vel") return FeatureKind::kPosVel;
  if (name == "pos_vel_acc") return FeatureKind::kPosVelAcc;
  throw FormatError("unknown feature kind: " + name);
}

// Rank of an SV cell among the 11 non-OV cells, ascending cell order.
int sv_cell_rank(int cell) {
  if (cell < 0 || cell >= ContextGrid::kRows * ContextGrid::kCols ||
      cell == ContextGrid::kOvCell)
    throw GridError("invalid SV cell index " + std::to_string(cell));
  return cell < ContextGrid::kOvCell ? cell : cell - 1;
}

}  // namespace

int AblationConfig::ov_feature_width() const { return base_feature_width(features); }

int AblationConfig::sv_feature_width() const {
  return ov_feature_width() * (relative ? 2 : 1);
}

void AblationConfig::validate() const {
  base_feature_width(features);  // rejects corrupt enum values
}

void ModelConfig::validate() const {
  if (embed_dim <= 0 || encoder_hidden <= 0 || decoder_hidden <= 0 ||
      conv1_filters <= 0 || conv2_filters <= 0 || gat_dim <= 0 || ch1_dim <= 0)
    throw ConfigError("model dimensions must be positive");
  if (history_len != kHistoryLen || future_len != kFutureLen)
    throw ConfigError("history/future lengths are fixed at 16/25");
  if (!(leaky_slope > 0.0 && leaky_slope < 1.0))
    throw ConfigError("leaky slope must lie in (0, 1)");
  if (pool_stride < 1) throw ConfigError("pool stride must be at least 1");
}

int ModelConfig::ch2_dim() const {
  // Social grid 4x3 -> conv 2x2 -> (3,2) -> conv 1x2 -> (3,1)
  // -> maxpool 2x1 stride (pool_stride,1).
  int rows = ContextGrid::kRows - 2 + 1;
  int cols = ContextGrid::kCols - 2 + 1;
  cols = cols - 2 + 1;
  rows = (rows - 2) / pool_stride + 1;
  return conv2_filters * rows * cols;
}

int ModelConfig::context_dim(const AblationConfig& abl) const {
  int dim = ch1_dim;
  if (abl.use_ch2) dim += ch2_dim();
  if (abl.use_ch3) dim += gat_dim;
  return dim;
}

std::vector<std::vector<double>> ov_features(const Sample& sample, const AblationConfig& abl) {
  int width = abl.ov_feature_width();
  double ox = sample.ov_history.back().x;
  double oy = sample.ov_history.back().y;
  std::vector<std::vector<double>> rows;
  rows.reserve(sample.ov_history.size());
  for (const auto& s : sample.ov_history) {
    std::vector<double> row{s.x - ox, s.y - oy};
    if (width >= 4) {
      row.push_back(s.vx);
      row.push_back(s.vy);
    }
    if (width >= 6) {
      row.push_back(s.ax);
      row.push_back(s.ay);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<std::vector<double>> sv_features(const Sample& sample, std::size_t sv_index,
                                             const AblationConfig& abl) {
  if (sv_index >= sample.sv_histories.size())
    throw InvalidValue("sv index out of range");
  int base = abl.ov_feature_width();
  double ox = sample.ov_history.back().x;
  double oy = sample.ov_history.back().y;
  const auto& hist = sample.sv_histories[sv_index];
  std::vector<std::vector<double>> rows;
  rows.reserve(hist.states.size());
  for (const auto& s : hist.states) {
    std::vector<double> row{s[0] - ox, s[1] - oy};
    for (int k = 2; k < base; ++k) row.push_back(s[static_cast<std::size_t>(k)]);
    if (abl.relative)
      for (int k = 0; k < base; ++k) row.push_back(s[static_cast<std::size_t>(6 + k)]);
    rows.push_back(std::move(row));
  }
  return rows;
}

Model::Model(ModelConfig config, AblationConfig ablation, std::uint64_t seed)
    : config_(config), ablation_(ablation), seed_(seed) {
  config_.validate();
  ablation_.validate();

  std::mt19937_64 rng(seed);
  auto weight = [&](const std::string& name, Shape shape, int fan_in, int fan_out) {
    params_.emplace_back(name, ad::xavier_uniform(shape, fan_in, fan_out, rng));
  };
  auto bias = [&](const std::string& name, int len) {
    params_.emplace_back(name, Tensor::zeros({len}, true));
  };

  int embed = config_.embed_dim;
  int enc = config_.encoder_hidden;
  int dec = config_.decoder_hidden;

  auto encoder_set = [&](const std::string& prefix, int input_width) {
    weight("fc_" + prefix + "_embed_w", {embed, input_width}, input_width, embed);
    bias("fc_" + prefix + "_embed_b", embed);
    weight("lstm_" + prefix + "_w_ih", {4 * enc, embed}, embed, 4 * enc);
    weight("lstm_" + prefix + "_w_hh", {4 * enc, enc}, enc, 4 * enc);
    bias("lstm_" + prefix + "_b", 4 * enc);
  };

  encoder_set("ov", ablation_.ov_feature_width());
  if (config_.shared_sv_encoder) {
    encoder_set("sv", ablation_.sv_feature_width());
  } else {
    for (int rank = 0; rank < ContextGrid::kRows * ContextGrid::kCols - 1; ++rank)
      encoder_set("sv" + std::to_string(rank), ablation_.sv_feature_width());
  }

  weight("ch1_w", {config_.ch1_dim, enc}, enc, config_.ch1_dim);
  bias("ch1_b", config_.ch1_dim);

  weight("conv1_k", {config_.conv1_filters, enc, 2, 2}, enc * 4, config_.conv1_filters * 4);
  bias("conv1_b", config_.conv1_filters);
  weight("conv2_k", {config_.conv2_filters, config_.conv1_filters, 1, 2},
         config_.conv1_filters * 2, config_.conv2_filters * 2);
  bias("conv2_b", config_.conv2_filters);

  weight("gat_w", {config_.gat_dim, enc}, enc, config_.gat_dim);
  weight("gat_a", {2 * config_.gat_dim}, 2 * config_.gat_dim, 1);

  int ctx = config_.context_dim(ablation_);
  weight("dec_w_ih", {4 * dec, ctx}, ctx, 4 * dec);
  weight("dec_w_hh", {4 * dec, dec}, dec, 4 * dec);
  bias("dec_b", 4 * dec);
  weight("out_w", {5, dec}, dec, 5);
  bias("out_b", 5);
}

const Tensor& Model::find(const std::string& name) const {
  for (const auto& [n, t] : params_)
    if (n == name) return t;
  throw ConfigError("unknown parameter " + name);
}

EncoderState Model::encode_vehicle(const std::vector<std::vector<double>>& history,
                                   Role role, int slot_cell) const {
  int width = role == Role::kOv ? ablation_.ov_feature_width()
                                : ablation_.sv_feature_width();
  if (static_cast<int>(history.size()) != config_.history_len)
    throw ShapeError("encoder history must have " + std::to_string(config_.history_len) +
                     " rows, got " + std::to_string(history.size()));
  std::string prefix = "ov";
  if (role == Role::kSv) {
    prefix = config_.shared_sv_encoder
                 ? "sv"
                 : "sv" + std::to_string(sv_cell_rank(slot_cell));
  }
  const Tensor& we = find("fc_" + prefix + "_embed_w");
  const Tensor& be = find("fc_" + prefix + "_embed_b");
  const Tensor& w_ih = find("lstm_" + prefix + "_w_ih");
  const Tensor& w_hh = find("lstm_" + prefix + "_w_hh");
  const Tensor& b = find("lstm_" + prefix + "_b");

  EncoderState st{Tensor::zeros({config_.encoder_hidden}),
                  Tensor::zeros({config_.encoder_hidden})};
  for (const auto& row : history) {
    if (static_cast<int>(row.size()) != width)
      throw ShapeError("encoder feature width mismatch: expected (" + std::to_string(width) +
                       "), got (" + std::to_string(row.size()) + ")");
    Tensor x = Tensor::from_vector({width}, row);
    Tensor e = ad::leaky_relu(ad::add(ad::matmul(we, x), be), config_.leaky_slope);
    std::tie(st.h, st.c) = ad::lstm_cell(e, st.h, st.c, w_ih, w_hh, b);
  }
  return st;
}

Tensor Model::channel1(const EncoderState& ov) const {
  return ad::add(ad::matmul(find("ch1_w"), ov.h), find("ch1_b"));
}

Tensor Model::assemble_social_tensor(const EncoderState& ov,
                                     const std::vector<std::pair<int, EncoderState>>& svs) const {
  std::vector<Tensor> cells(ContextGrid::kRows * ContextGrid::kCols);
  cells[ContextGrid::kOvCell] = ov.h;
  for (const auto& [cell, st] : svs) {
    sv_cell_rank(cell);  // bounds + OV-cell check
    if (cells[static_cast<std::size_t>(cell)].defined())
      throw GridError("duplicate SV cell " + std::to_string(cell));
    cells[static_cast<std::size_t>(cell)] = st.h;
  }
  return ad::stack_grid(cells, ContextGrid::kRows, ContextGrid::kCols);
}

Tensor Model::conv_social_pool(const Tensor& social) const {
  Shape expected{config_.encoder_hidden, ContextGrid::kRows, ContextGrid::kCols};
  if (social.shape() != expected)
    throw ShapeError("social tensor shape " + ad::shape_str(social.shape()) +
                     " does not match " + ad::shape_str(expected));
  Tensor a = ad::leaky_relu(ad::conv2d(social, find("conv1_k"), find("conv1_b")),
                            config_.leaky_slope);
  Tensor b = ad::leaky_relu(ad::conv2d(a, find("conv2_k"), find("conv2_b")),
                            config_.leaky_slope);
  Tensor pooled = ad::maxpool2d(b, 2, 1, config_.pool_stride, 1);
  return ad::reshape(pooled, {config_.ch2_dim()});
}

Tensor Model::graph_attention(const EncoderState& ov, const std::vector<EncoderState>& svs,
                              Tensor* alpha_out) const {
  if (alpha_out) *alpha_out = Tensor();
  if (svs.empty()) return Tensor::zeros({config_.gat_dim});

  const Tensor& w = find("gat_w");
  const Tensor& a = find("gat_a");
  int g = config_.gat_dim;
  Tensor who = ad::matmul(w, ov.h);
  std::vector<Tensor> scores;
  std::vector<Tensor> projections;
  Tensor a_row = ad::reshape(a, {1, 2 * g});
  for (const auto& sv : svs) {
    Tensor whs = ad::matmul(w, sv.h);
    projections.push_back(whs);
    Tensor score = ad::leaky_relu(ad::matmul(a_row, ad::concat({whs, who})),
                                  config_.leaky_slope);
    scores.push_back(score);
  }
  int n = static_cast<int>(svs.size());
  Tensor alpha = ad::softmax(ad::concat(scores));
  if (alpha_out) *alpha_out = alpha;
  Tensor stacked = ad::reshape(ad::concat(projections), {n, g});
  Tensor context = ad::reshape(ad::matmul(ad::reshape(alpha, {1, n}), stacked), {g});
  return ad::tanh(context);
}

Tensor Model::fuse_context(const Tensor& c1, const Tensor& c2, const Tensor& c3) const {
  std::vector<Tensor> parts{c1};
  if (ablation_.use_ch2) {
    if (!c2.defined()) throw ShapeError("channel 2 enabled but its context is missing");
    parts.push_back(c2);
  }
  if (ablation_.use_ch3) {
    if (!c3.defined()) throw ShapeError("channel 3 enabled but its context is missing");
    parts.push_back(c3);
  }
  return ad::concat(parts);
}

std::vector<Model::StepHead> Model::decode_future(const Tensor& c_cont) const {
  Shape expected{config_.context_dim(ablation_)};
  if (c_cont.shape() != expected)
    throw ShapeError("context shape " + ad::shape_str(c_cont.shape()) +
                     " does not match " + ad::shape_str(expected));
  const Tensor& w_ih = find("dec_w_ih");
  const Tensor& w_hh = find("dec_w_hh");
  const Tensor& b = find("dec_b");
  const Tensor& out_w = find("out_w");
  const Tensor& out_b = find("out_b");

  Tensor h = Tensor::zeros({config_.decoder_hidden});
  Tensor c = Tensor::zeros({config_.decoder_hidden});
  std::vector<StepHead> steps;
  steps.reserve(static_cast<std::size_t>(config_.future_len));
  for (int t = 0; t < config_.future_len; ++t) {
    std::tie(h, c) = ad::lstm_cell(c_cont, h, c, w_ih, w_hh, b);
    Tensor raw = ad::add(ad::matmul(out_w, h), out_b);
    StepHead s;
    s.mu = ad::slice(raw, {0}, {2});
    s.log_sx = ad::clamp(ad::slice(raw, {2}, {1}), kLogSigmaLo, kLogSigmaHi);
    s.log_sy = ad::clamp(ad::slice(raw, {3}, {1}), kLogSigmaLo, kLogSigmaHi);
    s.rho = ad::mul_scalar(ad::tanh(ad::slice(raw, {4}, {1})), kRhoScale);
    steps.push_back(std::move(s));
  }
  return steps;
}

Model::ForwardResult Model::forward(const Sample& sample) const {
  sample.validate();
  ForwardResult res;
  res.origin = {sample.ov_history.back().x, sample.ov_history.back().y};

  EncoderState ov = encode_vehicle(ov_features(sample, ablation_), Role::kOv);
  std::vector<std::pair<int, EncoderState>> cell_states;
  std::vector<EncoderState> sv_states;
  for (std::size_t i = 0; i < sample.sv_histories.size(); ++i) {
    EncoderState st = encode_vehicle(sv_features(sample, i, ablation_), Role::kSv,
                                     sample.sv_histories[i].cell);
    cell_states.emplace_back(sample.sv_histories[i].cell, st);
    sv_states.push_back(st);
  }

  Tensor c1 = channel1(ov);
  Tensor c2, c3;
  if (ablation_.use_ch2) c2 = conv_social_pool(assemble_social_tensor(ov, cell_states));
  if (ablation_.use_ch3) c3 = graph_attention(ov, sv_states, &res.alpha);
  res.steps = decode_future(fuse_context(c1, c2, c3));
  return res;
}

GaussianTrajectory Model::predict(const Sample& sample) const {
  ForwardResult fwd = forward(sample);
  GaussianTrajectory traj;
  traj.steps.reserve(fwd.steps.size());
  for (const auto& s : fwd.steps) {
    GaussianParams p;
    p.mu_x = s.mu.data()[0] + fwd.origin[0];
    p.mu_y = s.mu.data()[1] + fwd.origin[1];
    p.sigma_x = std::exp(s.log_sx.item());
    p.sigma_y = std::exp(s.log_sy.item());
    p.rho = s.rho.item();
    if (!std::isfinite(p.mu_x) || !std::isfinite(p.mu_y) || !std::isfinite(p.sigma_x) ||
        !std::isfinite(p.sigma_y) || !std::isfinite(p.rho))
      throw NumericalError("non-finite prediction output");
    traj.steps.push_back(p);
  }
  traj.validate();
  return traj;
}

std::vector<Tensor> Model::parameters() const {
  std::vector<Tensor> out;
  out.reserve(params_.size());
  for (const auto& [name, t] : params_) out.push_back(t);
  return out;
}

std::vector<std::array<double, 2>> baseline_predict(const Sample& sample, BaselineKind kind) {
  sample.validate();
  const MotionState& s0 = sample.ov_history.back();
  std::vector<std::array<double, 2>> out;
  out.reserve(static_cast<std::size_t>(kFutureLen));
  for (int k = 1; k <= kFutureLen; ++k) {
    double tau = kDt * static_cast<double>(k);
    double x = s0.x + s0.vx * tau;
    double y = s0.y + s0.vy * tau;
    if (kind == BaselineKind::kCa) {
      x += 0.5 * s0.ax * tau * tau;
      y += 0.5 * s0.ay * tau * tau;
    }
    out.push_back({x, y});
  }
  return out;
}

GaussianTrajectory to_gaussian(const std::vector<std::array<double, 2>>& positions) {
  if (static_cast<int>(positions.size()) != kFutureLen)
    throw InvalidValue("expected 25 positions");
  GaussianTrajectory traj;
  traj.steps.reserve(positions.size());
  for (const auto& p : positions) {
    GaussianParams g;
    g.mu_x = p[0];
    g.mu_y = p[1];
    traj.steps.push_back(g);
  }
  return traj;
}

// ---- checkpoint I/O ----------------------------------------------------------

namespace {

json config_to_json(const ModelConfig& c) {
  json j;
  j["embed_dim"] = c.embed_dim;
  j["encoder_hidden"] = c.encoder_hidden;
  j["decoder_hidden"] = c.decoder_hidden;
  j["conv1_filters"] = c.conv1_filters;
  j["conv2_filters"] = c.conv2_filters;
  j["gat_dim"] = c.gat_dim;
  j["ch1_dim"] = c.ch1_dim;
  j["history_len"] = c.history_len;
  j["future_len"] = c.future_len;
  j["leaky_slope"] = c.leaky_slope;
  j["shared_sv_encoder"] = c.shared_sv_encoder;
  j["pool_stride"] = c.pool_stride;
  return j;
}

ModelConfig config_from_json(const json& j) {
  ModelConfig c;
  c.embed_dim = j.at("embed_dim").get<int>();
  c.encoder_hidden = j.at("encoder_hidden").get<int>();
  c.decoder_hidden = j.at("decoder_hidden").get<int>();
  c.conv1_filters = j.at("conv1_filters").get<int>();
  c.conv2_filters = j.at("conv2_filters").get<int>();
  c.gat_dim = j.at("gat_dim").get<int>();
  c.ch1_dim = j.at("ch1_dim").get<int>();
  c.history_len = j.at("history_len").get<int>();
  c.future_len = j.at("future_len").get<int>();
  c.leaky_slope = j.at("leaky_slope").get<double>();
  c.shared_sv_encoder = j.at("shared_sv_encoder").get<bool>();
  c.pool_stride = j.at("pool_stride").get<int>();
  return c;
}

json ablation_to_json(const AblationConfig& a) {
  json j;
  j["use_ch2"] = a.use_ch2;
  j["use_ch3"] = a.use_ch3;
  j["features"] = feature_kind_name(a.features);
  j["relative"] = a.relative;
  return j;
}

AblationConfig ablation_from_json(const json& j) {
  AblationConfig a;
  a.use_ch2 = j.at("use_ch2").get<bool>();
  a.use_ch3 = j.at("use_ch3").get<bool>();
  a.features = feature_kind_from(j.at("features").get<std::string>());
  a.relative = j.at("relative").get<bool>();
  return a;
}

}  // namespace

void save_checkpoint(const std::string& path, const Model& model,
                     const std::string& metadata_json) {
  json doc;
  doc["format"] = "predrisk-checkpoint-v1";
  doc["seed"] = model.seed();
  doc["model_config"] = config_to_json(model.config());
  doc["ablation"] = ablation_to_json(model.ablation());
  try {
    doc["metadata"] = json::parse(metadata_json);
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("checkpoint metadata is not valid JSON: ") + e.what());
  }
  json params = json::object();
  for (const auto& [name, t] : model.named_parameters()) {
    json p;
    p["shape"] = t.shape();
    p["data"] = t.data();
    params[name] = std::move(p);
  }
  doc["parameters"] = std::move(params);

  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open checkpoint for writing: " + path);
  out << doc.dump() << '\n';
  if (!out) throw FormatError("failed writing checkpoint: " + path);
}

Model load_checkpoint(const std::string& path, std::string* metadata_json) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open checkpoint: " + path);
  json doc;
  try {
    in >> doc;
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("malformed checkpoint JSON: ") + e.what());
  }
  if (doc.value("format", "") != "predrisk-checkpoint-v1")
    throw FormatError("unrecognized checkpoint format tag");

  Model model(config_from_json(doc.at("model_config")),
              ablation_from_json(doc.at("ablation")),
              doc.at("seed").get<std::uint64_t>());
  const json& params = doc.at("parameters");
  for (const auto& [name, t] : model.named_parameters()) {
    if (!params.contains(name)) throw FormatError("checkpoint missing parameter " + name);
    const json& p = params.at(name);
    auto shape = p.at("shape").get<std::vector<int>>();
    if (shape != t.shape())
      throw FormatError("checkpoint shape mismatch for " + name + ": stored " +
                        ad::shape_str(shape) + " vs model " + ad::shape_str(t.shape()));
    auto data = p.at("data").get<std::vector<double>>();
    if (data.size() != t.data().size())
      throw FormatError("checkpoint data length mismatch for " + name);
    t.node()->data = std::move(data);
  }
  if (metadata_json) *metadata_json = doc.at("metadata").dump();
  return model;
}

}  // namespace predrisk
