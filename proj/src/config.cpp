#include "predrisk/config.hpp"

#include <sstream>

#include "json.hpp"

namespace predrisk {

void RunConfig::validate() const {
  if (data.format != "ngsim" && data.format != "highd")
    throw ConfigError("data.format must be ngsim or highd");
  if (data.stride_s <= 0.0) throw ConfigError("data.stride_s must be positive");
  if (data.grid.longitudinal_window <= 0.0 || data.grid.alongside_band < 0.0)
    throw ConfigError("capture window must be positive, alongside band nonnegative");
  model.validate();
  ablation.validate();
  train.validate();
  if (plan.ax_step <= 0.0 || plan.ax_min > plan.ax_max || plan.tf <= 0.0)
    throw ConfigError("candidate grid: need ax_step > 0, ax_min <= ax_max, tf > 0");
  risk.validate(plan.tf);
}

namespace {

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace

std::string RunConfig::fingerprint() const {
  nlohmann::ordered_json j;
  j["data"] = {{"format", data.format},       {"input", data.input},
               {"meta", data.meta},           {"cutoff_hz", data.cutoff_hz},
               {"stride_s", data.stride_s},   {"window", data.grid.longitudinal_window},
               {"band", data.grid.alongside_band}};
  j["model"] = {{"embed_dim", model.embed_dim},
                {"encoder_hidden", model.encoder_hidden},
                {"decoder_hidden", model.decoder_hidden},
                {"conv1_filters", model.conv1_filters},
                {"conv2_filters", model.conv2_filters},
                {"gat_dim", model.gat_dim},
                {"ch1_dim", model.ch1_dim},
                {"history_len", model.history_len},
                {"future_len", model.future_len},
                {"leaky_slope", model.leaky_slope},
                {"shared_sv_encoder", model.shared_sv_encoder},
                {"pool_stride", model.pool_stride}};
  j["ablation"] = {{"channels", channels_string(ablation)},
                   {"features", to_string(ablation.features)},
                   {"relative", ablation.relative}};
  j["train"] = {{"batch_size", train.batch_size},
                {"lr", train.lr},
                {"pretrain_epochs", train.pretrain_epochs},
                {"formal_epochs", train.formal_epochs},
                {"early_stop_patience", train.early_stop_patience},
                {"seed", train.seed}};
  j["plan"] = {{"ax_min", plan.ax_min},
               {"ax_max", plan.ax_max},
               {"ax_step", plan.ax_step},
               {"tf", plan.tf}};
  j["risk"] = {{"sigma1", risk.sigma1},   {"sigma2", risk.sigma2},
               {"sigma3", risk.sigma3},   {"sigma4", risk.sigma4},
               {"w_ttc", risk.w_ttc},     {"w_mdm", risk.w_mdm},
               {"check_step", risk.check_step},
               {"squared_ttc", risk.squared_ttc}};
  j["output_dir"] = output_dir;
  j["split_seed"] = split_seed;

  std::ostringstream os;
  os << std::hex << fnv1a(j.dump());
  return os.str();
}

void set_channels(AblationConfig& ablation, const std::string& channels) {
  bool ch1 = false, ch2 = false, ch3 = false;
  for (char c : channels) {
    if (c == '1') ch1 = true;
    else if (c == '2') ch2 = true;
    else if (c == '3') ch3 = true;
    else throw ConfigError("channels must name a subset of 123, got '" + channels + "'");
  }
  if (!ch1) throw ConfigError("channel 1 is mandatory");
  ablation.use_ch2 = ch2;
  ablation.use_ch3 = ch3;
}

std::string channels_string(const AblationConfig& ablation) {
  std::string s = "1";
  if (ablation.use_ch2) s += "2";
  if (ablation.use_ch3) s += "3";
  return s;
}

FeatureKind feature_kind_from(const std::string& name) {
  if (name == "pos") return FeatureKind::kPos;
  if (name == "pos_vel") return FeatureKind::kPosVel;
  if (name == "pos_vel_acc") return FeatureKind::kPosVelAcc;
  throw ConfigError("features must be pos, pos_vel, or pos_vel_acc, got '" + name + "'");
}

std::string to_string(FeatureKind kind) {
  switch (kind) {
    case FeatureKind::kPos: return "pos";
    case FeatureKind::kPosVel: return "pos_vel";
    case FeatureKind::kPosVelAcc: return "pos_vel_acc";
  }
  throw ConfigError("unknown feature kind");
}

}  // namespace predrisk
