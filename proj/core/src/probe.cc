// core/src/probe.cc

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

#include "vclab/probe.h"

#include <cmath>
#include <cstdio>

#include "vclab/error.h"
#include "vclab/training.h"

namespace vclab {
namespace probe {

using nn::Conv2D;
using nn::GradBuffer;
using nn::LayerNormChannel;
using nn::Linear;
using nn::ParamRegistry;
using nn::Tensor3;

namespace {

enum : uint64_t { kStreamProbeBatch = 0x9601be, kStreamProbeInit = 0x1736 };

int ConvOutHeight(int h, int kh, int stride) { return (h + 2 * (kh / 2) - kh) / stride + 1; }

// Latent-to-F0 predictor with the encoder's convolutional structure and two
// per-frame heads.
class ProbeNet {
 public:
  ProbeNet(const ProbeConfig &config, int latent_dim) : config_(config) {
    int h = latent_dim;
    for (size_t i = 0; i < config.channels.size(); ++i) {
      int cin = i == 0 ? 1 : config.channels[i - 1];
      convs_.emplace_back("probe.conv" + std::to_string(i), cin, config.channels[i],
                          config.kernel_freq, config.kernel_time, config.freq_strides[i]);
      norms_.emplace_back("probe.ln" + std::to_string(i), config.channels[i]);
      heights_.push_back(h);
      h = ConvOutHeight(h, config.kernel_freq, config.freq_strides[i]);
    }
    heights_.push_back(h);
    int flat = config.channels.back() * h;
    f0_head_ = Linear("probe.f0", flat, 1);
    uv_head_ = Linear("probe.uv", flat, 1);

    for (auto &conv : convs_) conv.Register(&registry_);
    for (auto &norm : norms_) norm.Register(&registry_);
    f0_head_.Register(&registry_);
    uv_head_.Register(&registry_);

    Rng rng(MixSeed(config.seed, kStreamProbeInit));
    for (auto &conv : convs_) conv.Init(&rng, std::sqrt(2.0));
    f0_head_.Init(&rng, 1.0);
    uv_head_.Init(&rng, 1.0);
  }

  ParamRegistry &registry() { return registry_; }

  struct Cache {
    std::vector<Conv2D::Cache> conv;
    std::vector<Tensor3> pre_act;
    std::vector<LayerNormChannel::Cache> norm;
    Linear::Cache f0, uv;
  };

  void Forward(const nn::MatrixXd &latents, Cache *cache, nn::MatrixXd *f0_pred,
               nn::MatrixXd *uv_logit) const {
    const int n = static_cast<int>(latents.rows());
    cache->conv.resize(convs_.size());
    cache->pre_act.resize(convs_.size());
    cache->norm.resize(convs_.size());
    Tensor3 t(1, static_cast<int>(latents.cols()), n);
    for (int y = 0; y < latents.cols(); ++y)
      for (int f = 0; f < n; ++f) t.At(0, y, f) = latents(f, y);
    for (size_t i = 0; i < convs_.size(); ++i) {
      Tensor3 pre = convs_[i].Forward(t, &cache->conv[i]);
      cache->pre_act[i] = pre;
      t = norms_[i].Forward(nn::LeakyRelu(pre, config_.leaky_slope), &cache->norm[i]);
    }
    nn::MatrixXd flat = nn::FlattenFrames(t);
    *f0_pred = f0_head_.Forward(flat, &cache->f0);
    *uv_logit = uv_head_.Forward(flat, &cache->uv);
  }

  void Backward(const nn::MatrixXd &gf0, const nn::MatrixXd &guv, const Cache &cache,
                GradBuffer *grads) const {
    nn::MatrixXd gflat = f0_head_.Backward(gf0, cache.f0, grads);
    gflat += uv_head_.Backward(guv, cache.uv, grads);
    Tensor3 gt = nn::UnflattenFrames(gflat, config_.channels.back(), heights_.back());
    for (int i = static_cast<int>(convs_.size()) - 1; i >= 0; --i) {
      Tensor3 gact = norms_[i].Backward(gt, cache.norm[i], grads);
      Tensor3 gpre = nn::LeakyReluBackward(gact, cache.pre_act[i], config_.leaky_slope);
      gt = convs_[i].Backward(gpre, cache.conv[i], grads);
    }
  }

 private:
  ProbeConfig config_;
  std::vector<int> heights_;
  std::vector<Conv2D> convs_;
  std::vector<LayerNormChannel> norms_;
  Linear f0_head_, uv_head_;
  ParamRegistry registry_;
};

// Numerically stable binary cross entropy with logits.
double BceWithLogits(const nn::MatrixXd &logits, const nn::VectorXd &targets) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    double l = logits(i, 0), t = targets[i];
    acc += std::max(l, 0.0) - l * t + std::log1p(std::exp(-std::abs(l)));
  }
  return acc / static_cast<double>(logits.rows());
}

struct ProbeCrop {
  nn::MatrixXd latents;
  nn::VectorXd f0, uv;
};

}  // namespace

ProbeDataset BuildProbeDataset(const model::CdvaeModel &model, const toyvoc::ToyCorpus &corpus,
                               model::Domain domain) {
  ProbeDataset out;
  for (const toyvoc::ToyUtterance &u : corpus.utterances) {
    nn::MatrixXd mu, lv;
    const nn::MatrixXd &x = domain == model::Domain::kSp ? u.feats.sp : u.feats.mcc;
    model.Encode(domain, x, &mu, &lv);
    out.latents.push_back(mu);
    out.f0_targets.push_back(model.StandardizeContF0(u.feats.contf0));
    out.uv_targets.push_back(u.feats.uv);
  }
  return out;
}

ProbeCurves TrainF0Probe(const ProbeDataset &dataset, const ProbeConfig &config) {
  const int n_utts = static_cast<int>(dataset.latents.size());
  if (n_utts == 0) throw ConfigError("TrainF0Probe: empty dataset");
  if (n_utts < config.batch_size)
    throw ConfigError("TrainF0Probe: need at least batch_size (" +
                      std::to_string(config.batch_size) + ") utterances, got " +
                      std::to_string(n_utts));
  if (dataset.f0_targets.size() != dataset.latents.size() ||
      dataset.uv_targets.size() != dataset.latents.size())
    throw ShapeError("TrainF0Probe: dataset arrays disagree");
  if (config.channels.size() != config.freq_strides.size() || config.channels.empty())
    throw ConfigError("TrainF0Probe: bad conv stack configuration");

  const int zdim = static_cast<int>(dataset.latents.front().cols());
  ProbeNet net(config, zdim);
  nn::Adam adam(net.registry(), {config.lr, config.beta1, config.beta2, 1e-8});

  // Constant-predictor bound: the variance of the pooled f0 target.
  double sum = 0.0, sq = 0.0;
  long count = 0;
  for (const nn::VectorXd &t : dataset.f0_targets) {
    sum += t.sum();
    sq += t.array().square().sum();
    count += t.size();
  }
  double mean = sum / count;
  double variance = std::max(0.0, sq / count - mean * mean);

  ProbeCurves curves;
  curves.target_variance = variance;
  GradBuffer grads(net.registry());

  for (int64_t step = 1; step <= config.steps; ++step) {
    Rng rng(MixSeed(config.seed, MixSeed(kStreamProbeBatch, static_cast<uint64_t>(step))));
    std::vector<ProbeCrop> batch;
    batch.reserve(config.batch_size);
    for (int b = 0; b < config.batch_size; ++b) {
      int u = rng.UniformInt(n_utts);
      const nn::MatrixXd &lat = dataset.latents[u];
      const int n = static_cast<int>(lat.rows());
      ProbeCrop crop;
      crop.latents.resize(config.crop_frames, zdim);
      crop.f0.resize(config.crop_frames);
      crop.uv.resize(config.crop_frames);
      if (n >= config.crop_frames) {
        int offset = rng.UniformInt(n - config.crop_frames + 1);
        crop.latents = lat.middleRows(offset, config.crop_frames);
        crop.f0 = dataset.f0_targets[u].segment(offset, config.crop_frames);
        crop.uv = dataset.uv_targets[u].segment(offset, config.crop_frames);
      } else {
        std::vector<int> map = training::ReflectIndices(n, config.crop_frames);
        for (int j = 0; j < config.crop_frames; ++j) {
          crop.latents.row(j) = lat.row(map[j]);
          crop.f0[j] = dataset.f0_targets[u][map[j]];
          crop.uv[j] = dataset.uv_targets[u][map[j]];
        }
      }
      batch.push_back(std::move(crop));
    }

    const double inv_batch = 1.0 / config.batch_size;
    struct CropOut {
      double f0_mse = 0.0, uv_bce = 0.0;
      std::unique_ptr<GradBuffer> grads;
    };
    std::vector<CropOut> outs(config.batch_size);
    nn::ParallelFor(config.batch_size, config.threads, [&](int b) {
      const ProbeCrop &crop = batch[b];
      ProbeNet::Cache cache;
      nn::MatrixXd f0_pred, uv_logit;
      net.Forward(crop.latents, &cache, &f0_pred, &uv_logit);
      const int n = static_cast<int>(crop.latents.rows());
      outs[b].f0_mse = (f0_pred.col(0) - crop.f0).squaredNorm() / n;
      outs[b].uv_bce = BceWithLogits(uv_logit, crop.uv);
      outs[b].grads = std::make_unique<GradBuffer>(net.registry());
      nn::MatrixXd gf0 = (2.0 * inv_batch / n) * (f0_pred.col(0) - crop.f0);
      nn::MatrixXd guv(n, 1);
      for (int i = 0; i < n; ++i) {
        double sig = 1.0 / (1.0 + std::exp(-uv_logit(i, 0)));
        guv(i, 0) = inv_batch / n * (sig - crop.uv[i]);
      }
      net.Backward(gf0, guv, cache, outs[b].grads.get());
    });

    ProbeStep ps;
    ps.step = step;
    grads.SetZero();
    for (int b = 0; b < config.batch_size; ++b) {
      ps.f0_mse += outs[b].f0_mse * inv_batch;
      ps.uv_bce += outs[b].uv_bce * inv_batch;
      grads.Add(*outs[b].grads);
    }
    if (!std::isfinite(ps.f0_mse + ps.uv_bce))
      throw DataError("probe training diverged at step " + std::to_string(step));
    adam.Step(&net.registry(), grads);
    curves.steps.push_back(ps);
  }

  const int tail = std::max<int>(1, config.steps / 20);
  double f0_acc = 0.0, uv_acc = 0.0;
  for (int i = config.steps - tail; i < config.steps; ++i) {
    f0_acc += curves.steps[i].f0_mse;
    uv_acc += curves.steps[i].uv_bce;
  }
  curves.final_f0_mse = f0_acc / tail;
  curves.final_uv_bce = uv_acc / tail;
  return curves;
}

std::string FormatProbeLine(const ProbeStep &s) {
  char buf[128];
  std::snprintf(buf, sizeof(buf), "%lld\t%.17g\t%.17g", static_cast<long long>(s.step),
                s.f0_mse, s.uv_bce);
  return buf;
}

}  // namespace probe
}  // namespace vclab
