#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "predrisk/errors.hpp"
#include "predrisk/gaussian.hpp"
#include "predrisk/sample.hpp"
#include "predrisk/tensor.hpp"

namespace predrisk {

enum class FeatureKind { kPos, kPosVel, kPosVelAcc };

// Which interaction channels and input features the network uses. The
// historical-motion channel is always on; the social-pooling and
// graph-attention channels and the feature columns are switchable.
struct AblationConfig {
  bool use_ch2 = true;
  bool use_ch3 = true;
  FeatureKind features = FeatureKind::kPosVelAcc;
  bool relative = true;  // append SV-minus-OV deltas to SV features

  int ov_feature_width() const;
  int sv_feature_width() const;
  void validate() const;
};

struct ModelConfig {
  int embed_dim = 32;
  int encoder_hidden = 64;
  int decoder_hidden = 128;
  int conv1_filters = 64;
  int conv2_filters = 16;
  int gat_dim = 64;
  int ch1_dim = 32;
  int history_len = kHistoryLen;
  int future_len = kFutureLen;
  double leaky_slope = 0.1;
  bool shared_sv_encoder = true;  // one weight set for all SV slots vs per-slot
  int pool_stride = 1;

  void validate() const;
  // Flattened social-pooling output length for this config.
  int ch2_dim() const;
  int context_dim(const AblationConfig& abl) const;
};

struct EncoderState {
  ad::Tensor h;
  ad::Tensor c;
};

// Feature-row assembly from a sample per the ablation config. Positions are
// recentered on the OV position at t0; velocities and accelerations stay
// absolute; relative columns are SV minus OV componentwise.
std::vector<std::vector<double>> ov_features(const Sample& sample, const AblationConfig& abl);
std::vector<std::vector<double>> sv_features(const Sample& sample, std::size_t sv_index,
                                             const AblationConfig& abl);

class Model {
 public:
  Model(ModelConfig config, AblationConfig ablation, std::uint64_t seed);

  // -- network stages (tensor-level, differentiable) --

  enum class Role { kOv, kSv };
  // Embeds each feature row and runs the role's LSTM over the 16 steps.
  // slot_cell selects the per-slot weight set when shared_sv_encoder is off.
  EncoderState encode_vehicle(const std::vector<std::vector<double>>& history,
                              Role role, int slot_cell = -1) const;

  // Single affine layer on the OV hidden state.
  ad::Tensor channel1(const EncoderState& ov) const;

  // (encoder_hidden, 4, 3) social tensor: h vectors of occupied cells, OV
  // at its fixed cell, zeros elsewhere. svs pairs are (cell index, state).
  ad::Tensor assemble_social_tensor(const EncoderState& ov,
                                    const std::vector<std::pair<int, EncoderState>>& svs) const;

  // conv 2x2 + LeakyReLU, conv 1x2 + LeakyReLU, maxpool 2x1, flatten.
  ad::Tensor conv_social_pool(const ad::Tensor& social) const;

  // Additive-score attention over the occupied SV slots; returns the
  // tanh-bounded context vector, zeros when no SVs exist. alpha_out, when
  // given, receives the normalized attention weights.
  ad::Tensor graph_attention(const EncoderState& ov, const std::vector<EncoderState>& svs,
                             ad::Tensor* alpha_out = nullptr) const;

  // Concatenation in fixed channel order 1 || 2 || 3 (enabled channels only).
  ad::Tensor fuse_context(const ad::Tensor& c1, const ad::Tensor& c2,
                          const ad::Tensor& c3) const;

  // Per-step distribution heads in the recentered frame.
  struct StepHead {
    ad::Tensor mu;      // (2)
    ad::Tensor log_sx;  // (1), clamped log sigma_x
    ad::Tensor log_sy;  // (1)
    ad::Tensor rho;     // (1), in (-0.999, 0.999)
  };

  // 25 decoder LSTM steps with c_cont as the input at every step, each
  // followed by the 5-way output head.
  std::vector<StepHead> decode_future(const ad::Tensor& c_cont) const;

  struct ForwardResult {
    std::vector<StepHead> steps;
    ad::Tensor alpha;                 // attention weights; undefined without SVs/ch3
    std::array<double, 2> origin{};   // OV position at t0 (recentering offset)
  };

  ForwardResult forward(const Sample& sample) const;

  // Absolute-frame distribution sequence; throws NumericalError on
  // non-finite outputs.
  GaussianTrajectory predict(const Sample& sample) const;

  // -- parameter access --

  std::vector<ad::Tensor> parameters() const;
  const std::vector<std::pair<std::string, ad::Tensor>>& named_parameters() const {
    return params_;
  }
  const ModelConfig& config() const { return config_; }
  const AblationConfig& ablation() const { return ablation_; }
  std::uint64_t seed() const { return seed_; }

 private:
  ad::Tensor param(const std::string& name) const;
  const ad::Tensor& find(const std::string& name) const;

  ModelConfig config_;
  AblationConfig ablation_;
  std::uint64_t seed_ = 0;
  std::vector<std::pair<std::string, ad::Tensor>> params_;
};

enum class BaselineKind { kCv, kCa };

// Physics extrapolation from the OV state at t0: 25 positions at dt steps.
std::vector<std::array<double, 2>> baseline_predict(const Sample& sample, BaselineKind kind);

// Wraps plain positions as unit-variance uncorrelated Gaussian steps.
GaussianTrajectory to_gaussian(const std::vector<std::array<double, 2>>& positions);

// ---- checkpoint I/O ----------------------------------------------------------

// JSON container with named parameter arrays, shapes, seed, both configs,
// and free-form metadata. Stable key order, so identical models serialize
// byte-identically.
void save_checkpoint(const std::string& path, const Model& model,
                     const std::string& metadata_json = "{}");
Model load_checkpoint(const std::string& path, std::string* metadata_json = nullptr);

}  // namespace predrisk
