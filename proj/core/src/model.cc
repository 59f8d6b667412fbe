// core/src/model.cc

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

#include "vclab/model.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "vclab/container.h"
#include "vclab/error.h"

namespace vclab {
namespace model {

using nlohmann::json;
using nn::Conv2D;
using nn::Deconv2D;
using nn::GluCache;
using nn::GradBuffer;
using nn::LayerNormChannel;
using nn::LayerNormRow;
using nn::Linear;
using nn::ParamRegistry;
using nn::Tensor3;

Variant VariantFromString(const std::string &s) {
  if (s == "framewise") return Variant::kFramewise;
  if (s == "fcn") return Variant::kFcn;
  throw ConfigError("unknown model variant: '" + s + "' (expected framewise|fcn)");
}

std::string VariantToString(Variant v) {
  return v == Variant::kFramewise ? "framewise" : "fcn";
}

void ArchConfig::Validate() const {
  if (sp_dim < 2 || mcc_dim < 2) throw ConfigError("feature dimensions must be >= 2");
  if (latent_dim < 1) throw ConfigError("latent_dim must be >= 1");
  if (speaker_dim < 1) throw ConfigError("speaker_dim must be >= 1");
  if (variant == Variant::kFcn) {
    if (fcn_channels.empty()) throw ConfigError("fcn_channels must not be empty");
    if (fcn_channels.size() != fcn_freq_strides.size())
      throw ConfigError("fcn_channels and fcn_freq_strides must have equal length");
    for (int c : fcn_channels)
      if (c < 1) throw ConfigError("fcn channel counts must be >= 1");
    for (int s : fcn_freq_strides)
      if (s < 1) throw ConfigError("fcn strides must be >= 1");
    if (fcn_kernel_freq % 2 == 0 || fcn_kernel_time % 2 == 0 || fcn_kernel_freq < 1 ||
        fcn_kernel_time < 1)
      throw ConfigError("fcn kernel sizes must be odd and positive");
  } else {
    if (framewise_hidden.empty()) throw ConfigError("framewise_hidden must not be empty");
    for (int hdim : framewise_hidden)
      if (hdim < 1) throw ConfigError("framewise hidden widths must be >= 1");
  }
  if (!(leaky_slope > 0.0 && leaky_slope < 1.0))
    throw ConfigError("leaky_slope must lie in (0, 1)");
}

MatrixXd Reparameterize(const MatrixXd &mu, const MatrixXd &logvar, const MatrixXd &noise) {
  if (mu.rows() != logvar.rows() || mu.cols() != logvar.cols() || mu.rows() != noise.rows() ||
      mu.cols() != noise.cols())
    throw ShapeError("Reparameterize: mu/logvar/noise shapes disagree");
  return mu.array() + (logvar.array() / 2.0).exp() * noise.array();
}

namespace {

int ConvOutHeight(int h, int kh, int stride) { return (h + 2 * (kh / 2) - kh) / stride + 1; }

// Height ladder of the FCN encoder for a given input feature dimension.
std::vector<int> HeightLadder(const ArchConfig &arch, int input_dim) {
  std::vector<int> h{input_dim};
  for (size_t i = 0; i < arch.fcn_channels.size(); ++i)
    h.push_back(ConvOutHeight(h.back(), arch.fcn_kernel_freq, arch.fcn_freq_strides[i]));
  return h;
}

// --------------------------------------------------------------------------
// FCN encoder: [conv -> leaky relu -> layer norm] x L, then per-frame linear
// heads for mu and logvar on the flattened (channels x height) features.

class FcnEncoder : public Encoder {
 public:
  FcnEncoder(const std::string &name, const ArchConfig &arch, int input_dim)
      : arch_(arch), input_dim_(input_dim), heights_(HeightLadder(arch, input_dim)) {
    const auto &ch = arch.fcn_channels;
    for (size_t i = 0; i < ch.size(); ++i) {
      int cin = i == 0 ? 1 : ch[i - 1];
      convs_.emplace_back(name + ".conv" + std::to_string(i), cin, ch[i],
                          arch.fcn_kernel_freq, arch.fcn_kernel_time, arch.fcn_freq_strides[i]);
      norms_.emplace_back(name + ".ln" + std::to_string(i), ch[i], arch.layernorm_eps);
    }
    int flat = ch.back() * heights_.back();
    mu_head_ = Linear(name + ".mu", flat, arch.latent_dim);
    logvar_head_ = Linear(name + ".logvar", flat, arch.latent_dim);
  }

  int input_dim() const override { return input_dim_; }

  struct CacheImpl : Cache {
    std::vector<Conv2D::Cache> conv;
    std::vector<Tensor3> pre_act;  // conv outputs, before the rectifier
    std::vector<LayerNormChannel::Cache> norm;
    Linear::Cache mu, logvar;
    int n_frames = 0;
  };

  std::unique_ptr<Cache> Forward(const MatrixXd &x, MatrixXd *mu,
                                 MatrixXd *logvar) const override {
    auto cache = std::make_unique<CacheImpl>();
    const int n = static_cast<int>(x.rows());
    cache->n_frames = n;
    cache->conv.resize(convs_.size());
    cache->pre_act.resize(convs_.size());
    cache->norm.resize(convs_.size());

    Tensor3 t(1, input_dim_, n);
    for (int y = 0; y < input_dim_; ++y)
      for (int f = 0; f < n; ++f) t.At(0, y, f) = x(f, y);
    for (size_t i = 0; i < convs_.size(); ++i) {
      Tensor3 pre = convs_[i].Forward(t, &cache->conv[i]);
      cache->pre_act[i] = pre;
      Tensor3 act = nn::LeakyRelu(pre, arch_.leaky_slope);
      t = norms_[i].Forward(act, &cache->norm[i]);
    }
    MatrixXd flat = nn::FlattenFrames(t);
    *mu = mu_head_.Forward(flat, &cache->mu);
    *logvar = logvar_head_.Forward(flat, &cache->logvar);
    return cache;
  }

  void Backward(const MatrixXd &gmu, const MatrixXd &glogvar, const Cache &cache,
                GradBuffer *grads) const override {
    const auto &c = static_cast<const CacheImpl &>(cache);
    MatrixXd gflat = mu_head_.Backward(gmu, c.mu, grads);
    gflat += logvar_head_.Backward(glogvar, c.logvar, grads);
    Tensor3 gt = nn::UnflattenFrames(gflat, arch_.fcn_channels.back(), heights_.back());
    for (int i = static_cast<int>(convs_.size()) - 1; i >= 0; --i) {
      Tensor3 gact = norms_[i].Backward(gt, c.norm[i], grads);
      Tensor3 gpre = nn::LeakyReluBackward(gact, c.pre_act[i], arch_.leaky_slope);
      gt = convs_[i].Backward(gpre, c.conv[i], grads);
    }
  }

  void Register(ParamRegistry *reg) override {
    for (size_t i = 0; i < convs_.size(); ++i) {
      convs_[i].Register(reg);
      norms_[i].Register(reg);
    }
    mu_head_.Register(reg);
    logvar_head_.Register(reg);
  }

  void Init(Rng *rng) override {
    for (auto &conv : convs_) conv.Init(rng, std::sqrt(2.0));
    mu_head_.Init(rng, 1.0);
    logvar_head_.Init(rng, 1.0);
  }

 private:
  ArchConfig arch_;
  int input_dim_;
  std::vector<int> heights_;
  std::vector<Conv2D> convs_;
  std::vector<LayerNormChannel> norms_;
  Linear mu_head_, logvar_head_;
};

// --------------------------------------------------------------------------
// FCN decoder: per-frame projection to the deepest (channels x height) map,
// then mirrored transposed convolutions with gated linear units.  The
// conditioning vector rides along as extra channels into every level, which
// is what keeps speaker (and F0) information reachable deep in the stack.

class FcnDecoder : public Decoder {
 public:
  FcnDecoder(const std::string &name, const ArchConfig &arch, int output_dim)
      : arch_(arch), output_dim_(output_dim), heights_(HeightLadder(arch, output_dim)) {
    const auto &ch = arch.fcn_channels;
    const int levels = static_cast<int>(ch.size());
    proj_ = Linear(name + ".proj", arch.latent_dim + arch.CondDim(),
                   ch.back() * heights_.back());
    // level j expands heights_[L-j] -> heights_[L-j-1]
    for (int j = 0; j < levels; ++j) {
      int enc_level = levels - 1 - j;  // mirrored encoder conv
      int cin = (j == 0 ? ch.back() : ch[enc_level]) + arch.CondDim();
      bool last = enc_level == 0;
      int cout = last ? 1 : 2 * ch[enc_level - 1];
      deconvs_.emplace_back(name + ".deconv" + std::to_string(j), cin, cout,
                            arch.fcn_kernel_freq, arch.fcn_kernel_time,
                            arch.fcn_freq_strides[enc_level], heights_[enc_level + 1],
                            heights_[enc_level]);
    }
  }

  int output_dim() const override { return output_dim_; }

  struct CacheImpl : Cache {
    Linear::Cache proj;
    std::vector<Deconv2D::Cache> deconv;
    std::vector<GluCache> glu;
    MatrixXd cond;
    int n_frames = 0;
  };

  std::unique_ptr<Cache> Forward(const MatrixXd &z, const MatrixXd &cond,
                                 MatrixXd *out) const override {
    auto cache = std::make_unique<CacheImpl>();
    const int n = static_cast<int>(z.rows());
    const int levels = static_cast<int>(deconvs_.size());
    cache->n_frames = n;
    cache->cond = cond;
    cache->deconv.resize(levels);
    cache->glu.resize(levels);

    MatrixXd u(n, z.cols() + cond.cols());
    u << z, cond;
    MatrixXd proj = proj_.Forward(u, &cache->proj);
    Tensor3 t = nn::UnflattenFrames(proj, arch_.fcn_channels.back(), heights_.back());
    for (int j = 0; j < levels; ++j) {
      Tensor3 with_cond = nn::ConcatCondChannels(t, cond);
      Tensor3 pre = deconvs_[j].Forward(with_cond, &cache->deconv[j]);
      if (j < levels - 1) {
        t = nn::Glu(pre, &cache->glu[j]);
      } else {
        t = pre;  // output level is linear
      }
    }
    out->resize(n, output_dim_);
    for (int f = 0; f < n; ++f)
      for (int y = 0; y < output_dim_; ++y) (*out)(f, y) = t.At(0, y, f);
    return cache;
  }

  void Backward(const MatrixXd &gout, const Cache &cache, GradBuffer *grads, MatrixXd *gz,
                MatrixXd *gcond) const override {
    const auto &c = static_cast<const CacheImpl &>(cache);
    const int n = c.n_frames;
    const int levels = static_cast<int>(deconvs_.size());
    const int cdim = static_cast<int>(c.cond.cols());
    MatrixXd gcond_acc = MatrixXd::Zero(n, cdim);

    Tensor3 gt(1, output_dim_, n);
    for (int f = 0; f < n; ++f)
      for (int y = 0; y < output_dim_; ++y) gt.At(0, y, f) = gout(f, y);

    for (int j = levels - 1; j >= 0; --j) {
      Tensor3 gpre = (j < levels - 1) ? nn::GluBackward(gt, c.glu[j]) : gt;
      Tensor3 gin = deconvs_[j].Backward(gpre, c.deconv[j], grads);
      int x_channels = gin.c - cdim;
      gt = nn::SplitCondChannels(gin, x_channels, &gcond_acc);
    }
    MatrixXd gproj = nn::FlattenFrames(gt);
    MatrixXd gu = proj_.Backward(gproj, c.proj, grads);
    if (gz != nullptr) *gz = gu.leftCols(gu.cols() - cdim);
    gcond_acc += gu.rightCols(cdim);
    if (gcond != nullptr) *gcond = gcond_acc;
  }

  void Register(ParamRegistry *reg) override {
    proj_.Register(reg);
    for (auto &d : deconvs_) d.Register(reg);
  }

  void Init(Rng *rng) override {
    proj_.Init(rng, 1.0);
    for (size_t j = 0; j < deconvs_.size(); ++j)
      deconvs_[j].Init(rng, j + 1 == deconvs_.size() ? 1.0 : std::sqrt(2.0));
  }

 private:
  ArchConfig arch_;
  int output_dim_;
  std::vector<int> heights_;
  Linear proj_;
  std::vector<Deconv2D> deconvs_;
};

// --------------------------------------------------------------------------
// Frame-wise encoder/decoder: fully connected ladders, one frame at a time.

class FramewiseEncoder : public Encoder {
 public:
  FramewiseEncoder(const std::string &name, const ArchConfig &arch, int input_dim)
      : arch_(arch), input_dim_(input_dim) {
    int prev = input_dim;
    for (size_t i = 0; i < arch.framewise_hidden.size(); ++i) {
      int width = arch.framewise_hidden[i];
      layers_.emplace_back(name + ".fc" + std::to_string(i), prev, width);
      norms_.emplace_back(name + ".ln" + std::to_string(i), width, arch.layernorm_eps);
      prev = width;
    }
    mu_head_ = Linear(name + ".mu", prev, arch.latent_dim);
    logvar_head_ = Linear(name + ".logvar", prev, arch.latent_dim);
  }

  int input_dim() const override { return input_dim_; }

  struct CacheImpl : Cache {
    std::vector<Linear::Cache> fc;
    std::vector<MatrixXd> pre_act;
    std::vector<LayerNormRow::Cache> norm;
    Linear::Cache mu, logvar;
  };

  std::unique_ptr<Cache> Forward(const MatrixXd &x, MatrixXd *mu,
                                 MatrixXd *logvar) const override {
    auto cache = std::make_unique<CacheImpl>();
    cache->fc.resize(layers_.size());
    cache->pre_act.resize(layers_.size());
    cache->norm.resize(layers_.size());
    MatrixXd h = x;
    for (size_t i = 0; i < layers_.size(); ++i) {
      MatrixXd pre = layers_[i].Forward(h, &cache->fc[i]);
      cache->pre_act[i] = pre;
      h = norms_[i].Forward(nn::LeakyRelu(pre, arch_.leaky_slope), &cache->norm[i]);
    }
    *mu = mu_head_.Forward(h, &cache->mu);
    *logvar = logvar_head_.Forward(h, &cache->logvar);
    return cache;
  }

  void Backward(const MatrixXd &gmu, const MatrixXd &glogvar, const Cache &cache,
                GradBuffer *grads) const override {
    const auto &c = static_cast<const CacheImpl &>(cache);
    MatrixXd gh = mu_head_.Backward(gmu, c.mu, grads);
    gh += logvar_head_.Backward(glogvar, c.logvar, grads);
    for (int i = static_cast<int>(layers_.size()) - 1; i >= 0; --i) {
      MatrixXd gact = norms_[i].Backward(gh, c.norm[i], grads);
      MatrixXd gpre = nn::LeakyReluBackward(gact, c.pre_act[i], arch_.leaky_slope);
      gh = layers_[i].Backward(gpre, c.fc[i], grads);
    }
  }

  void Register(ParamRegistry *reg) override {
    for (size_t i = 0; i < layers_.size(); ++i) {
      layers_[i].Register(reg);
      norms_[i].Register(reg);
    }
    mu_head_.Register(reg);
    logvar_head_.Register(reg);
  }

  void Init(Rng *rng) override {
    for (auto &l : layers_) l.Init(rng, std::sqrt(2.0));
    mu_head_.Init(rng, 1.0);
    logvar_head_.Init(rng, 1.0);
  }

 private:
  ArchConfig arch_;
  int input_dim_;
  std::vector<Linear> layers_;
  std::vector<LayerNormRow> norms_;
  Linear mu_head_, logvar_head_;
};

class FramewiseDecoder : public Decoder {
 public:
  FramewiseDecoder(const std::string &name, const ArchConfig &arch, int output_dim)
      : arch_(arch), output_dim_(output_dim) {
    int prev = arch.latent_dim + arch.CondDim();
    std::vector<int> widths(arch.framewise_hidden.rbegin(), arch.framewise_hidden.rend());
    for (size_t i = 0; i < widths.size(); ++i) {
      layers_.emplace_back(name + ".fc" + std::to_string(i), prev, widths[i]);
      norms_.emplace_back(name + ".ln" + std::to_string(i), widths[i], arch.layernorm_eps);
      prev = widths[i];
    }
    out_ = Linear(name + ".out", prev, output_dim);
  }

  int output_dim() const override { return output_dim_; }

  struct CacheImpl : Cache {
    std::vector<Linear::Cache> fc;
    std::vector<MatrixXd> pre_act;
    std::vector<LayerNormRow::Cache> norm;
    Linear::Cache out;
    int cond_dim = 0;
  };

  std::unique_ptr<Cache> Forward(const MatrixXd &z, const MatrixXd &cond,
                                 MatrixXd *out) const override {
    auto cache = std::make_unique<CacheImpl>();
    cache->fc.resize(layers_.size());
    cache->pre_act.resize(layers_.size());
    cache->norm.resize(layers_.size());
    cache->cond_dim = static_cast<int>(cond.cols());
    MatrixXd h(z.rows(), z.cols() + cond.cols());
    h << z, cond;
    for (size_t i = 0; i < layers_.size(); ++i) {
      MatrixXd pre = layers_[i].Forward(h, &cache->fc[i]);
      cache->pre_act[i] = pre;
      h = norms_[i].Forward(nn::LeakyRelu(pre, arch_.leaky_slope), &cache->norm[i]);
    }
    *out = out_.Forward(h, &cache->out);
    return cache;
  }

  void Backward(const MatrixXd &gout, const Cache &cache, GradBuffer *grads, MatrixXd *gz,
                MatrixXd *gcond) const override {
    const auto &c = static_cast<const CacheImpl &>(cache);
    MatrixXd gh = out_.Backward(gout, c.out, grads);
    for (int i = static_cast<int>(layers_.size()) - 1; i >= 0; --i) {
      MatrixXd gact = norms_[i].Backward(gh, c.norm[i], grads);
      MatrixXd gpre = nn::LeakyReluBackward(gact, c.pre_act[i], arch_.leaky_slope);
      gh = layers_[i].Backward(gpre, c.fc[i], grads);
    }
    if (gz != nullptr) *gz = gh.leftCols(gh.cols() - c.cond_dim);
    if (gcond != nullptr) *gcond = gh.rightCols(c.cond_dim);
  }

  void Register(ParamRegistry *reg) override {
    for (size_t i = 0; i < layers_.size(); ++i) {
      layers_[i].Register(reg);
      norms_[i].Register(reg);
    }
    out_.Register(reg);
  }

  void Init(Rng *rng) override {
    for (auto &l : layers_) l.Init(rng, std::sqrt(2.0));
    out_.Init(rng, 1.0);
  }

 private:
  ArchConfig arch_;
  int output_dim_;
  std::vector<Linear> layers_;
  std::vector<LayerNormRow> norms_;
  Linear out_;
};

std::unique_ptr<Encoder> MakeEncoder(const std::string &name, const ArchConfig &arch,
                                     int input_dim) {
  if (arch.variant == Variant::kFcn)
    return std::make_unique<FcnEncoder>(name, arch, input_dim);
  return std::make_unique<FramewiseEncoder>(name, arch, input_dim);
}

std::unique_ptr<Decoder> MakeDecoder(const std::string &name, const ArchConfig &arch,
                                     int output_dim) {
  if (arch.variant == Variant::kFcn)
    return std::make_unique<FcnDecoder>(name, arch, output_dim);
  return std::make_unique<FramewiseDecoder>(name, arch, output_dim);
}

}  // namespace

// ---------------------------------------------------------------------------

CdvaeModel::CdvaeModel(const ArchConfig &arch, const std::vector<std::string> &speakers,
                       uint64_t seed)
    : arch_(arch), speakers_(speakers), init_seed_(seed) {
  arch_.Validate();
  if (speakers_.empty()) throw ConfigError("model needs at least one speaker");
  std::set<std::string> unique(speakers_.begin(), speakers_.end());
  if (unique.size() != speakers_.size()) throw ConfigError("duplicate speaker ids");

  enc_sp_ = MakeEncoder("enc_sp", arch_, arch_.sp_dim);
  enc_mcc_ = MakeEncoder("enc_mcc", arch_, arch_.mcc_dim);
  dec_sp_ = MakeDecoder("dec_sp", arch_, arch_.sp_dim);
  dec_mcc_ = MakeDecoder("dec_mcc", arch_, arch_.mcc_dim);
  speaker_codes_.name = "spk.codes";
  speaker_codes_.value =
      MatrixXd::Zero(static_cast<long>(speakers_.size()), arch_.speaker_dim);

  enc_sp_->Register(&registry_);
  enc_mcc_->Register(&registry_);
  dec_sp_->Register(&registry_);
  dec_mcc_->Register(&registry_);
  registry_.Register(&speaker_codes_);

  Rng rng(MixSeed(seed, 0x1217c0de));
  enc_sp_->Init(&rng);
  enc_mcc_->Init(&rng);
  dec_sp_->Init(&rng);
  dec_mcc_->Init(&rng);
  // Small speaker codes avoid saturating the decoders before they learn.
  for (long i = 0; i < speaker_codes_.value.size(); ++i)
    speaker_codes_.value.data()[i] = 0.1 * rng.Normal();

  sp_mean_ = VectorXd::Zero(arch_.sp_dim);
  sp_std_ = VectorXd::Ones(arch_.sp_dim);
  mcc_mean_ = VectorXd::Zero(arch_.mcc_dim);
  mcc_std_ = VectorXd::Ones(arch_.mcc_dim);
}

int CdvaeModel::SpeakerIndex(const std::string &id) const {
  for (size_t i = 0; i < speakers_.size(); ++i)
    if (speakers_[i] == id) return static_cast<int>(i);
  throw DataError("unknown speaker: " + id);
}

void CdvaeModel::SetFeatureStandardization(Domain d, const VectorXd &mean,
                                           const VectorXd &std) {
  int dim = arch_.FeatureDim(d);
  if (mean.size() != dim || std.size() != dim)
    throw ShapeError("standardization vectors must have dimension " + std::to_string(dim));
  if (std.minCoeff() <= 0.0) throw DataError("standardization std must be positive");
  if (d == Domain::kSp) {
    sp_mean_ = mean;
    sp_std_ = std;
  } else {
    mcc_mean_ = mean;
    mcc_std_ = std;
  }
}

void CdvaeModel::SetF0Standardization(double ln_mean, double ln_std) {
  if (!(ln_std > 0.0)) throw DataError("F0 standardization std must be positive");
  f0_ln_mean_ = ln_mean;
  f0_ln_std_ = ln_std;
}

MatrixXd CdvaeModel::StandardizeInput(Domain d, const MatrixXd &x) const {
  const VectorXd &mean = feature_mean(d);
  const VectorXd &std = feature_std(d);
  if (x.cols() != mean.size())
    throw ShapeError("feature width " + std::to_string(x.cols()) + " does not match " +
                     std::to_string(mean.size()));
  return ((x.rowwise() - mean.transpose()).array().rowwise() /
          std.transpose().array())
      .matrix();
}

MatrixXd CdvaeModel::DestandardizeOutput(Domain d, const MatrixXd &y) const {
  const VectorXd &mean = feature_mean(d);
  const VectorXd &std = feature_std(d);
  return ((y.array().rowwise() * std.transpose().array()).matrix().rowwise() +
          mean.transpose());
}

VectorXd CdvaeModel::StandardizeContF0(const VectorXd &contf0_hz) const {
  if (contf0_hz.size() > 0 && contf0_hz.minCoeff() <= 0.0)
    throw DataError("cont-F0 must be strictly positive");
  return (contf0_hz.array().log() - f0_ln_mean_) / f0_ln_std_;
}

MatrixXd CdvaeModel::BuildCond(int speaker_index, int n_frames,
                               const std::optional<F0Condition> &f0) const {
  if (speaker_index < 0 || speaker_index >= static_cast<int>(speakers_.size()))
    throw DataError("speaker index out of range");
  if (f0.has_value() != arch_.f0_conditioning)
    throw ConfigError(arch_.f0_conditioning
                          ? "model is F0-conditioned but no F0 condition was supplied"
                          : "model is not F0-conditioned yet an F0 condition was supplied");
  MatrixXd cond(n_frames, arch_.CondDim());
  cond.leftCols(arch_.speaker_dim) =
      speaker_codes_.value.row(speaker_index).replicate(n_frames, 1);
  if (f0.has_value()) {
    if (f0->contf0_std_ln.size() != n_frames || f0->uv.size() != n_frames)
      throw ShapeError("F0 condition length does not match the frame count");
    cond.col(arch_.speaker_dim) = f0->contf0_std_ln;
    cond.col(arch_.speaker_dim + 1) = f0->uv;
  }
  return cond;
}

void CdvaeModel::Encode(Domain d, const MatrixXd &x_raw, MatrixXd *mu,
                        MatrixXd *logvar) const {
  const int dim = arch_.FeatureDim(d);
  if (x_raw.cols() != dim)
    throw ShapeError("Encode: feature width " + std::to_string(x_raw.cols()) +
                     ", expected " + std::to_string(dim));
  if (x_raw.rows() < 1) throw ShapeError("Encode: empty sequence");
  encoder(d).Forward(StandardizeInput(d, x_raw), mu, logvar);
}

MatrixXd CdvaeModel::Decode(Domain d, const MatrixXd &z, const std::string &speaker,
                            const std::optional<F0Condition> &f0) const {
  if (z.cols() != arch_.latent_dim)
    throw ShapeError("Decode: latent width " + std::to_string(z.cols()) + ", expected " +
                     std::to_string(arch_.latent_dim));
  MatrixXd cond = BuildCond(SpeakerIndex(speaker), static_cast<int>(z.rows()), f0);
  MatrixXd out;
  decoder(d).Forward(z, cond, &out);
  return DestandardizeOutput(d, out);
}

// ---------------------------------------------------------------------------
// Checkpoints: "<path>" holds float64 arrays, "<path>.json" the header.

namespace {

json ArchToJson(const ArchConfig &a) {
  return json{{"variant", VariantToString(a.variant)},
              {"f0_conditioning", a.f0_conditioning},
              {"sp_dim", a.sp_dim},
              {"mcc_dim", a.mcc_dim},
              {"latent_dim", a.latent_dim},
              {"speaker_dim", a.speaker_dim},
              {"fcn_channels", a.fcn_channels},
              {"fcn_freq_strides", a.fcn_freq_strides},
              {"fcn_kernel_freq", a.fcn_kernel_freq},
              {"fcn_kernel_time", a.fcn_kernel_time},
              {"framewise_hidden", a.framewise_hidden},
              {"leaky_slope", a.leaky_slope},
              {"layernorm_eps", a.layernorm_eps}};
}

ArchConfig ArchFromJson(const json &j) {
  ArchConfig a;
  a.variant = VariantFromString(j.at("variant").get<std::string>());
  a.f0_conditioning = j.at("f0_conditioning").get<bool>();
  a.sp_dim = j.at("sp_dim").get<int>();
  a.mcc_dim = j.at("mcc_dim").get<int>();
  a.latent_dim = j.at("latent_dim").get<int>();
  a.speaker_dim = j.at("speaker_dim").get<int>();
  a.fcn_channels = j.at("fcn_channels").get<std::vector<int>>();
  a.fcn_freq_strides = j.at("fcn_freq_strides").get<std::vector<int>>();
  a.fcn_kernel_freq = j.at("fcn_kernel_freq").get<int>();
  a.fcn_kernel_time = j.at("fcn_kernel_time").get<int>();
  a.framewise_hidden = j.at("framewise_hidden").get<std::vector<int>>();
  a.leaky_slope = j.at("leaky_slope").get<double>();
  a.layernorm_eps = j.at("layernorm_eps").get<double>();
  return a;
}

}  // namespace

void SaveCheckpoint(const CdvaeModel &model, const CheckpointState &state,
                    const std::string &path) {
  json header;
  header["format_version"] = 1;
  header["arch"] = ArchToJson(model.arch());
  header["speakers"] = model.speakers();
  header["init_seed"] = model.init_seed();
  header["step"] = state.step;
  header["seed"] = state.seed;
  header["config_hash"] = state.config_hash;
  header["adam_step_count"] = state.adam_step_count;
  header["has_adam"] = !state.adam_m.empty();
  header["f0_ln_mean"] = model.f0_ln_mean();
  header["f0_ln_std"] = model.f0_ln_std();

  std::vector<NamedArray> arrays;
  const nn::ParamRegistry &reg = model.registry();
  for (int i = 0; i < reg.size(); ++i)
    arrays.push_back({"param/" + reg.at(i).name, reg.at(i).value});
  if (!state.adam_m.empty()) {
    if (static_cast<int>(state.adam_m.size()) != reg.size() ||
        static_cast<int>(state.adam_v.size()) != reg.size())
      throw ShapeError("optimizer state does not match the parameter registry");
    for (int i = 0; i < reg.size(); ++i) {
      arrays.push_back({"adam_m/" + reg.at(i).name, state.adam_m[i]});
      arrays.push_back({"adam_v/" + reg.at(i).name, state.adam_v[i]});
    }
  }
  arrays.push_back({"norm/sp_mean", model.feature_mean(Domain::kSp)});
  arrays.push_back({"norm/sp_std", model.feature_std(Domain::kSp)});
  arrays.push_back({"norm/mcc_mean", model.feature_mean(Domain::kMcc)});
  arrays.push_back({"norm/mcc_std", model.feature_std(Domain::kMcc)});

  WriteArrayFile(path, arrays, /*float64=*/true);
  const std::string tmp = path + ".json.tmp";
  {
    std::ofstream os(tmp);
    if (!os) throw FormatError("cannot write " + tmp);
    os << header.dump(2) << "\n";
  }
  std::filesystem::rename(tmp, path + ".json");
}

LoadedCheckpoint LoadCheckpoint(const std::string &path) {
  std::ifstream is(path + ".json");
  if (!is) throw FormatError("missing checkpoint header: " + path + ".json");
  json header;
  try {
    is >> header;
  } catch (const json::exception &e) {
    throw FormatError("bad checkpoint header: " + std::string(e.what()));
  }

  LoadedCheckpoint out;
  try {
    ArchConfig arch = ArchFromJson(header.at("arch"));
    auto speakers = header.at("speakers").get<std::vector<std::string>>();
    uint64_t init_seed = header.at("init_seed").get<uint64_t>();
    out.model = std::make_unique<CdvaeModel>(arch, speakers, init_seed);
    out.state.step = header.at("step").get<int64_t>();
    out.state.seed = header.at("seed").get<uint64_t>();
    out.state.config_hash = header.value("config_hash", "");
    out.state.adam_step_count = header.value("adam_step_count", int64_t{0});
    out.model->SetF0Standardization(header.at("f0_ln_mean").get<double>(),
                                    header.at("f0_ln_std").get<double>());
  } catch (const json::exception &e) {
    throw FormatError("bad checkpoint header field: " + std::string(e.what()));
  }

  std::vector<NamedArray> arrays = ReadArrayFile(path, /*float64=*/true);
  auto find = [&](const std::string &name) -> const NamedArray * {
    for (const NamedArray &a : arrays)
      if (a.name == name) return &a;
    return nullptr;
  };
  auto require = [&](const std::string &name) -> const NamedArray & {
    const NamedArray *a = find(name);
    if (a == nullptr) throw FormatError(path + ": checkpoint missing array '" + name + "'");
    return *a;
  };

  nn::ParamRegistry &reg = out.model->registry();
  bool has_adam = header.value("has_adam", false);
  for (int i = 0; i < reg.size(); ++i) {
    const NamedArray &a = require("param/" + reg.at(i).name);
    if (a.values.rows() != reg.at(i).value.rows() || a.values.cols() != reg.at(i).value.cols())
      throw FormatError(path + ": shape mismatch for parameter '" + reg.at(i).name + "'");
    reg.at(i).value = a.values;
    if (has_adam) {
      out.state.adam_m.push_back(require("adam_m/" + reg.at(i).name).values);
      out.state.adam_v.push_back(require("adam_v/" + reg.at(i).name).values);
    }
  }

  const NamedArray &spm = require("norm/sp_mean");
  const NamedArray &sps = require("norm/sp_std");
  const NamedArray &mcm = require("norm/mcc_mean");
  const NamedArray &mcs = require("norm/mcc_std");
  out.model->SetFeatureStandardization(Domain::kSp, spm.values.col(0), sps.values.col(0));
  out.model->SetFeatureStandardization(Domain::kMcc, mcm.values.col(0), mcs.values.col(0));
  return out;
}

}  // namespace model
}  // namespace vclab
