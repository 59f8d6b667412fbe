// core/include/vclab/model.h

// Copyright 2026  The vclab Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef VCLAB_MODEL_H_
#define VCLAB_MODEL_H_

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "vclab/nn.h"

namespace vclab {
namespace model {

using nn::MatrixXd;
using nn::VectorXd;

enum class Variant { kFramewise, kFcn };
enum class Domain { kSp, kMcc };

Variant VariantFromString(const std::string &s);  // throws ConfigError on unknown
std::string VariantToString(Variant v);

/// Architecture knobs.  Defaults are the full-scale configuration; every
/// value can be overridden (small configs keep CPU experiments fast).
struct ArchConfig {
  Variant variant = Variant::kFcn;
  bool f0_conditioning = false;
  int sp_dim = 513;
  int mcc_dim = 35;
  int latent_dim = 16;
  int speaker_dim = 16;
  // FCN: 2-D convolutions over (feature height x time); time stride is 1
  // everywhere so latents stay per-frame.
  std::vector<int> fcn_channels = {16, 32, 32, 16};
  std::vector<int> fcn_freq_strides = {2, 2, 2, 2};
  int fcn_kernel_freq = 5;
  int fcn_kernel_time = 5;
  // Frame-wise: fully connected ladder (input -> hidden... -> heads).
  std::vector<int> framewise_hidden = {256, 128, 64};
  double leaky_slope = 0.2;
  double layernorm_eps = 1e-5;

  int FeatureDim(Domain d) const { return d == Domain::kSp ? sp_dim : mcc_dim; }
  int CondDim() const { return speaker_dim + (f0_conditioning ? 2 : 0); }
  void Validate() const;  // throws ConfigError
};

/// Per-frame posterior and sampled code.
struct LatentSequence {
  MatrixXd mu;      // N x latent_dim
  MatrixXd logvar;  // N x latent_dim
  MatrixXd z;       // N x latent_dim
};

/// z = mu + exp(logvar / 2) .* noise
MatrixXd Reparameterize(const MatrixXd &mu, const MatrixXd &logvar, const MatrixXd &noise);

/// Decoder-side F0 conditioning: standardized ln cont-F0 plus the uv flag.
struct F0Condition {
  VectorXd contf0_std_ln;  // N, standardized ln cont-F0
  VectorXd uv;             // N, {0,1}
};

class Encoder {
 public:
  virtual ~Encoder() = default;
  struct Cache {
    virtual ~Cache() = default;
  };
  virtual int input_dim() const = 0;
  /// x is standardized, N x input_dim.  Fills one (mu, logvar) row per frame.
  virtual std::unique_ptr<Cache> Forward(const MatrixXd &x, MatrixXd *mu,
                                         MatrixXd *logvar) const = 0;
  virtual void Backward(const MatrixXd &gmu, const MatrixXd &glogvar, const Cache &cache,
                        nn::GradBuffer *grads) const = 0;
  virtual void Register(nn::ParamRegistry *reg) = 0;
  virtual void Init(Rng *rng) = 0;
};

class Decoder {
 public:
  virtual ~Decoder() = default;
  struct Cache {
    virtual ~Cache() = default;
  };
  virtual int output_dim() const = 0;
  /// z: N x latent_dim, cond: N x cond_dim; output standardized, N x D.
  virtual std::unique_ptr<Cache> Forward(const MatrixXd &z, const MatrixXd &cond,
                                         MatrixXd *out) const = 0;
  virtual void Backward(const MatrixXd &gout, const Cache &cache, nn::GradBuffer *grads,
                        MatrixXd *gz, MatrixXd *gcond) const = 0;
  virtual void Register(nn::ParamRegistry *reg) = 0;
  virtual void Init(Rng *rng) = 0;
};

/// Cross-domain VAE: one encoder-decoder pair per spectral feature kind
/// plus a trainable speaker-code table conditioning both decoders.
/// Feature and cont-F0 standardization constants live with the model (and
/// in its checkpoints) so training and conversion scale inputs identically.
class CdvaeModel {
 public:
  CdvaeModel(const ArchConfig &arch, const std::vector<std::string> &speakers, uint64_t seed);

  const ArchConfig &arch() const { return arch_; }
  const std::vector<std::string> &speakers() const { return speakers_; }
  uint64_t init_seed() const { return init_seed_; }
  int SpeakerIndex(const std::string &id) const;  // throws DataError on unknown id

  Encoder &encoder(Domain d) { return d == Domain::kSp ? *enc_sp_ : *enc_mcc_; }
  const Encoder &encoder(Domain d) const { return d == Domain::kSp ? *enc_sp_ : *enc_mcc_; }
  Decoder &decoder(Domain d) { return d == Domain::kSp ? *dec_sp_ : *dec_mcc_; }
  const Decoder &decoder(Domain d) const { return d == Domain::kSp ? *dec_sp_ : *dec_mcc_; }

  nn::ParamRegistry &registry() { return registry_; }
  const nn::ParamRegistry &registry() const { return registry_; }
  nn::Parameter &speaker_codes() { return speaker_codes_; }
  const nn::Parameter &speaker_codes() const { return speaker_codes_; }

  // Feature standardization (identity until set).
  void SetFeatureStandardization(Domain d, const VectorXd &mean, const VectorXd &std);
  void SetF0Standardization(double ln_mean, double ln_std);
  double f0_ln_mean() const { return f0_ln_mean_; }
  double f0_ln_std() const { return f0_ln_std_; }
  const VectorXd &feature_mean(Domain d) const {
    return d == Domain::kSp ? sp_mean_ : mcc_mean_;
  }
  const VectorXd &feature_std(Domain d) const { return d == Domain::kSp ? sp_std_ : mcc_std_; }

  MatrixXd StandardizeInput(Domain d, const MatrixXd &x) const;
  MatrixXd DestandardizeOutput(Domain d, const MatrixXd &y) const;
  /// Standardized ln of a cont-F0 contour in Hz.
  VectorXd StandardizeContF0(const VectorXd &contf0_hz) const;

  /// Conditioning matrix: speaker code broadcast over frames, with the two
  /// F0 channels appended when the model is F0-conditioned.
  MatrixXd BuildCond(int speaker_index, int n_frames,
                     const std::optional<F0Condition> &f0) const;

  // --- public inference API (raw feature domain) ---

  /// Encodes a raw feature sequence; throws ShapeError on a wrong width.
  void Encode(Domain d, const MatrixXd &x_raw, MatrixXd *mu, MatrixXd *logvar) const;

  /// Decodes to the raw feature domain.  The F0 condition must be present
  /// exactly when the model is F0-conditioned (ConfigError otherwise).
  MatrixXd Decode(Domain d, const MatrixXd &z, const std::string &speaker,
                  const std::optional<F0Condition> &f0 = std::nullopt) const;

 private:
  ArchConfig arch_;
  std::vector<std::string> speakers_;
  uint64_t init_seed_ = 0;
  std::unique_ptr<Encoder> enc_sp_, enc_mcc_;
  std::unique_ptr<Decoder> dec_sp_, dec_mcc_;
  nn::Parameter speaker_codes_;  // n_speakers x speaker_dim
  nn::ParamRegistry registry_;
  VectorXd sp_mean_, sp_std_, mcc_mean_, mcc_std_;
  double f0_ln_mean_ = 0.0, f0_ln_std_ = 1.0;
};

// ---------------------------------------------------------------------------
// Checkpoints: architecture + speaker table + parameters + optimizer
// moments + standardization constants + (seed, step).  Counter-based RNG
// streams make (seed, step) a complete resume state.

struct CheckpointState {
  int64_t step = 0;
  uint64_t seed = 0;
  std::string config_hash;
  int64_t adam_step_count = 0;
  std::vector<MatrixXd> adam_m, adam_v;  // empty when the file predates training
};

void SaveCheckpoint(const CdvaeModel &model, const CheckpointState &state,
                    const std::string &path);

struct LoadedCheckpoint {
  std::unique_ptr<CdvaeModel> model;
  CheckpointState state;
};
LoadedCheckpoint LoadCheckpoint(const std::string &path);

}  // namespace model
}  // namespace vclab

#endif  // VCLAB_MODEL_H_
