// core/src/training.cc

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

#include "vclab/training.h"

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "vclab/error.h"

namespace vclab {
namespace training {

using model::F0Condition;
using nn::GradBuffer;

namespace {

// Stream tags for per-step counter-based seeding.
enum : uint64_t { kStreamBatch = 0xba7c4, kStreamNoise = 0x2015e };

double Sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

}  // namespace

double KlLoss(const MatrixXd &mu, const MatrixXd &logvar) {
  if (mu.rows() != logvar.rows() || mu.cols() != logvar.cols())
    throw ShapeError("KlLoss: mu/logvar shapes disagree");
  if (mu.rows() == 0) throw ShapeError("KlLoss: empty input");
  double acc = (mu.array().square() + logvar.array().exp() - logvar.array() - 1.0).sum();
  return 0.5 * acc / static_cast<double>(mu.rows());
}

double ReconLoss(const MatrixXd &x, const MatrixXd &xhat) {
  if (x.rows() != xhat.rows() || x.cols() != xhat.cols())
    throw ShapeError("ReconLoss: shapes disagree");
  return (x - xhat).array().square().mean();
}

double LatentSimilarityLoss(const MatrixXd &za, const MatrixXd &zb) {
  if (za.rows() != zb.rows() || za.cols() != zb.cols())
    throw ShapeError("LatentSimilarityLoss: shapes disagree");
  return (za - zb).array().abs().mean();
}

std::vector<int> ReflectIndices(int length, int crop_frames) {
  std::vector<int> idx(crop_frames);
  if (length <= 1) {
    std::fill(idx.begin(), idx.end(), 0);
    return idx;
  }
  const int period = 2 * (length - 1);
  for (int j = 0; j < crop_frames; ++j) {
    int r = j % period;
    idx[j] = r < length ? r : period - r;
  }
  return idx;
}

Batch SampleCrops(const toyvoc::ToyCorpus &corpus, int crop_frames, int batch_size, Rng *rng) {
  if (corpus.utterances.empty()) throw DataError("SampleCrops: empty corpus");
  if (crop_frames < 1 || batch_size < 1)
    throw ConfigError("SampleCrops: crop_frames and batch_size must be positive");
  Batch batch;
  batch.crops.reserve(batch_size);
  for (int b = 0; b < batch_size; ++b) {
    const auto &utt = corpus.utterances[rng->UniformInt(
        static_cast<int>(corpus.utterances.size()))];
    const int n = utt.feats.NumFrames();
    Crop crop;
    crop.speaker_index = utt.speaker_index;
    crop.sp.resize(crop_frames, utt.feats.sp.cols());
    crop.mcc.resize(crop_frames, utt.feats.mcc.cols());
    crop.contf0.resize(crop_frames);
    crop.uv.resize(crop_frames);
    if (n >= crop_frames) {
      int offset = rng->UniformInt(n - crop_frames + 1);
      crop.sp = utt.feats.sp.middleRows(offset, crop_frames);
      crop.mcc = utt.feats.mcc.middleRows(offset, crop_frames);
      crop.contf0 = utt.feats.contf0.segment(offset, crop_frames);
      crop.uv = utt.feats.uv.segment(offset, crop_frames);
    } else {
      std::vector<int> map = ReflectIndices(n, crop_frames);
      for (int j = 0; j < crop_frames; ++j) {
        crop.sp.row(j) = utt.feats.sp.row(map[j]);
        crop.mcc.row(j) = utt.feats.mcc.row(map[j]);
        crop.contf0[j] = utt.feats.contf0[map[j]];
        crop.uv[j] = utt.feats.uv[map[j]];
      }
    }
    batch.crops.push_back(std::move(crop));
  }
  return batch;
}

NoiseDraws DrawNoise(const Batch &batch, int latent_dim, Rng *rng) {
  NoiseDraws noise;
  for (const Crop &crop : batch.crops) {
    const int n = static_cast<int>(crop.sp.rows());
    MatrixXd eps_sp(n, latent_dim), eps_mcc(n, latent_dim);
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < latent_dim; ++c) eps_sp(r, c) = rng->Normal();
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < latent_dim; ++c) eps_mcc(r, c) = rng->Normal();
    noise.eps_sp.push_back(std::move(eps_sp));
    noise.eps_mcc.push_back(std::move(eps_mcc));
  }
  return noise;
}

namespace {

struct CropResult {
  double l_in = 0.0, l_kld = 0.0, l_cross = 0.0, l_sim = 0.0;
  std::unique_ptr<GradBuffer> grads;
};

// Full forward/backward for one crop.  `inv_batch` carries the batch-mean
// factor into every gradient term.
CropResult CropLossAndGrad(const CdvaeModel &model, const Crop &crop, const MatrixXd &eps_sp,
                           const MatrixXd &eps_mcc, bool want_grads, double inv_batch) {
  CropResult result;
  const int n = static_cast<int>(crop.sp.rows());
  const int zdim = model.arch().latent_dim;

  MatrixXd xs = model.StandardizeInput(Domain::kSp, crop.sp);
  MatrixXd xm = model.StandardizeInput(Domain::kMcc, crop.mcc);

  MatrixXd mu_s, lv_s, mu_m, lv_m;
  auto enc_sp_cache = model.encoder(Domain::kSp).Forward(xs, &mu_s, &lv_s);
  auto enc_mcc_cache = model.encoder(Domain::kMcc).Forward(xm, &mu_m, &lv_m);
  MatrixXd z_s = model::Reparameterize(mu_s, lv_s, eps_sp);
  MatrixXd z_m = model::Reparameterize(mu_m, lv_m, eps_mcc);

  std::optional<F0Condition> f0;
  if (model.arch().f0_conditioning)
    f0 = F0Condition{model.StandardizeContF0(crop.contf0), crop.uv};
  MatrixXd cond = model.BuildCond(crop.speaker_index, n, f0);

  MatrixXd d_ss, d_mm, d_sm, d_ms;
  auto dec_ss_cache = model.decoder(Domain::kSp).Forward(z_s, cond, &d_ss);
  auto dec_mm_cache = model.decoder(Domain::kMcc).Forward(z_m, cond, &d_mm);
  auto dec_sm_cache = model.decoder(Domain::kMcc).Forward(z_s, cond, &d_sm);
  auto dec_ms_cache = model.decoder(Domain::kSp).Forward(z_m, cond, &d_ms);

  result.l_in = ReconLoss(xs, d_ss) + ReconLoss(xm, d_mm);
  result.l_cross = ReconLoss(xm, d_sm) + ReconLoss(xs, d_ms);
  result.l_kld = KlLoss(mu_s, lv_s) + KlLoss(mu_m, lv_m);
  result.l_sim = LatentSimilarityLoss(z_s, z_m);

  if (!want_grads) return result;

  result.grads = std::make_unique<GradBuffer>(model.registry());
  GradBuffer *grads = result.grads.get();

  auto mse_grad = [inv_batch](const MatrixXd &out, const MatrixXd &target) {
    return (2.0 * inv_batch / static_cast<double>(out.size())) * (out - target);
  };

  MatrixXd gz_s = MatrixXd::Zero(n, zdim);
  MatrixXd gz_m = MatrixXd::Zero(n, zdim);
  MatrixXd gcond_total = MatrixXd::Zero(n, cond.cols());
  MatrixXd gz_tmp, gcond_tmp;

  model.decoder(Domain::kSp).Backward(mse_grad(d_ss, xs), *dec_ss_cache, grads, &gz_tmp,
                                      &gcond_tmp);
  gz_s += gz_tmp;
  gcond_total += gcond_tmp;
  model.decoder(Domain::kMcc).Backward(mse_grad(d_mm, xm), *dec_mm_cache, grads, &gz_tmp,
                                       &gcond_tmp);
  gz_m += gz_tmp;
  gcond_total += gcond_tmp;
  model.decoder(Domain::kMcc).Backward(mse_grad(d_sm, xm), *dec_sm_cache, grads, &gz_tmp,
                                       &gcond_tmp);
  gz_s += gz_tmp;
  gcond_total += gcond_tmp;
  model.decoder(Domain::kSp).Backward(mse_grad(d_ms, xs), *dec_ms_cache, grads, &gz_tmp,
                                      &gcond_tmp);
  gz_m += gz_tmp;
  gcond_total += gcond_tmp;

  // latent similarity: d/dz mean|z_s - z_m|
  const double sim_scale = inv_batch / static_cast<double>(z_s.size());
  for (long i = 0; i < z_s.size(); ++i) {
    double s = Sign(z_s.data()[i] - z_m.data()[i]) * sim_scale;
    gz_s.data()[i] += s;
    gz_m.data()[i] -= s;
  }

  // reparameterization: z = mu + exp(lv/2) .* eps
  MatrixXd gmu_s = gz_s;
  MatrixXd glv_s = (gz_s.array() * (lv_s.array() / 2.0).exp() * eps_sp.array() * 0.5).matrix();
  MatrixXd gmu_m = gz_m;
  MatrixXd glv_m = (gz_m.array() * (lv_m.array() / 2.0).exp() * eps_mcc.array() * 0.5).matrix();

  // KL term gradients (mean over frames)
  const double kl_scale = inv_batch / static_cast<double>(n);
  gmu_s += kl_scale * mu_s;
  glv_s.array() += 0.5 * kl_scale * (lv_s.array().exp() - 1.0);
  gmu_m += kl_scale * mu_m;
  glv_m.array() += 0.5 * kl_scale * (lv_m.array().exp() - 1.0);

  model.encoder(Domain::kSp).Backward(gmu_s, glv_s, *enc_sp_cache, grads);
  model.encoder(Domain::kMcc).Backward(gmu_m, glv_m, *enc_mcc_cache, grads);

  // conditioning: speaker-code rows collect the per-frame gradients; the F0
  // channels are inputs and need none.
  const nn::Parameter &codes = model.speaker_codes();
  (*grads)[codes].row(crop.speaker_index) +=
      gcond_total.leftCols(model.arch().speaker_dim).colwise().sum();
  return result;
}

}  // namespace

LossReport CdvaeLoss(const CdvaeModel &model, const Batch &batch, const NoiseDraws &noise,
                     GradBuffer *grads, int threads) {
  const int b = static_cast<int>(batch.crops.size());
  if (b == 0) throw DataError("CdvaeLoss: empty batch");
  if (static_cast<int>(noise.eps_sp.size()) != b ||
      static_cast<int>(noise.eps_mcc.size()) != b)
    throw ShapeError("CdvaeLoss: noise draws do not match the batch");
  for (const Crop &crop : batch.crops) {
    if (crop.sp.rows() != crop.mcc.rows() || crop.sp.rows() != crop.contf0.size() ||
        crop.sp.rows() != crop.uv.size())
      throw ShapeError("CdvaeLoss: crop arrays disagree on frame count");
    if (crop.speaker_index < 0 ||
        crop.speaker_index >= static_cast<int>(model.speakers().size()))
      throw DataError("CdvaeLoss: crop speaker index out of range");
  }

  const double inv_batch = 1.0 / static_cast<double>(b);
  std::vector<CropResult> results(b);
  nn::ParallelFor(b, threads, [&](int i) {
    results[i] = CropLossAndGrad(model, batch.crops[i], noise.eps_sp[i], noise.eps_mcc[i],
                                 grads != nullptr, inv_batch);
  });

  LossReport report;
  for (int i = 0; i < b; ++i) {
    report.l_in += results[i].l_in * inv_batch;
    report.l_kld += results[i].l_kld * inv_batch;
    report.l_cross += results[i].l_cross * inv_batch;
    report.l_sim += results[i].l_sim * inv_batch;
    if (grads != nullptr) grads->Add(*results[i].grads);
  }
  report.total = report.l_in + report.l_kld + report.l_cross + report.l_sim;
  return report;
}

void FitStandardization(CdvaeModel *model, const toyvoc::ToyCorpus &corpus) {
  if (corpus.utterances.empty()) throw DataError("FitStandardization: empty corpus");
  const int sp_dim = model->arch().sp_dim;
  const int mcc_dim = model->arch().mcc_dim;

  VectorXd sp_sum = VectorXd::Zero(sp_dim), sp_sq = VectorXd::Zero(sp_dim);
  VectorXd mcc_sum = VectorXd::Zero(mcc_dim), mcc_sq = VectorXd::Zero(mcc_dim);
  double f0_sum = 0.0, f0_sq = 0.0;
  long frames = 0;
  for (const auto &utt : corpus.utterances) {
    if (utt.feats.sp.cols() != sp_dim || utt.feats.mcc.cols() != mcc_dim)
      throw ShapeError("FitStandardization: corpus feature widths do not match the model");
    sp_sum += utt.feats.sp.colwise().sum().transpose();
    sp_sq += utt.feats.sp.array().square().matrix().colwise().sum().transpose();
    mcc_sum += utt.feats.mcc.colwise().sum().transpose();
    mcc_sq += utt.feats.mcc.array().square().matrix().colwise().sum().transpose();
    for (int t = 0; t < utt.feats.NumFrames(); ++t) {
      double lf = std::log(utt.feats.contf0[t]);
      f0_sum += lf;
      f0_sq += lf * lf;
    }
    frames += utt.feats.NumFrames();
  }
  const double inv = 1.0 / static_cast<double>(frames);
  auto finish = [&](const VectorXd &sum, const VectorXd &sq) {
    VectorXd mean = sum * inv;
    VectorXd var = (sq * inv - mean.cwiseProduct(mean)).cwiseMax(0.0);
    // Dead dimensions get a unit scale instead of an explosive one.
    VectorXd sd = var.cwiseSqrt().cwiseMax(1e-8);
    return std::make_pair(mean, sd);
  };
  auto [sp_mean, sp_sd] = finish(sp_sum, sp_sq);
  auto [mcc_mean, mcc_sd] = finish(mcc_sum, mcc_sq);
  model->SetFeatureStandardization(Domain::kSp, sp_mean, sp_sd);
  model->SetFeatureStandardization(Domain::kMcc, mcc_mean, mcc_sd);

  double f0_mean = f0_sum * inv;
  double f0_var = std::max(0.0, f0_sq * inv - f0_mean * f0_mean);
  model->SetF0Standardization(f0_mean, std::max(std::sqrt(f0_var), 1e-8));
}

std::string FormatLossLine(const LossReport &report) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%lld\t%.17g\t%.17g\t%.17g\t%.17g\t%.17g",
                static_cast<long long>(report.step), report.l_in, report.l_kld, report.l_cross,
                report.l_sim, report.total);
  return buf;
}

std::vector<LossReport> TrainLoop(const TrainConfig &config, CdvaeModel *model, nn::Adam *adam,
                                  const toyvoc::ToyCorpus &corpus, int64_t start_step,
                                  const std::string &checkpoint_dir,
                                  const std::string &config_hash,
                                  const TrainCallbacks &callbacks) {
  if (config.max_steps <= start_step)
    throw ConfigError("TrainLoop: max_steps must exceed the starting step");
  if (!checkpoint_dir.empty()) std::filesystem::create_directories(checkpoint_dir);

  auto save = [&](int64_t step, const std::string &name) {
    if (checkpoint_dir.empty()) return;
    model::CheckpointState state;
    state.step = step;
    state.seed = config.seed;
    state.config_hash = config_hash;
    state.adam_step_count = adam->step_count();
    for (int i = 0; i < model->registry().size(); ++i) {
      state.adam_m.push_back(adam->moment1(i));
      state.adam_v.push_back(adam->moment2(i));
    }
    model::SaveCheckpoint(*model, state, checkpoint_dir + "/" + name);
  };

  std::vector<LossReport> reports;
  nn::GradBuffer grads(model->registry());
  for (int64_t step = start_step + 1; step <= config.max_steps; ++step) {
    Rng batch_rng(MixSeed(config.seed, MixSeed(kStreamBatch, static_cast<uint64_t>(step))));
    Batch batch = SampleCrops(corpus, config.crop_frames, config.batch_size, &batch_rng);
    Rng noise_rng(MixSeed(config.seed, MixSeed(kStreamNoise, static_cast<uint64_t>(step))));
    NoiseDraws noise = DrawNoise(batch, model->arch().latent_dim, &noise_rng);

    grads.SetZero();
    LossReport report = CdvaeLoss(*model, batch, noise, &grads, config.threads);
    report.step = step;
    if (!std::isfinite(report.total))
      throw DataError("training diverged: non-finite loss at step " + std::to_string(step));
    adam->Step(&model->registry(), grads);

    if (callbacks.on_log && (step % std::max<int64_t>(1, config.log_interval) == 0 ||
                             step == config.max_steps))
      callbacks.on_log(report);
    reports.push_back(report);

    if (config.checkpoint_interval > 0 && step % config.checkpoint_interval == 0 &&
        step != config.max_steps)
      save(step, "ckpt_" + std::to_string(step));
  }
  save(config.max_steps, "final");
  return reports;
}

}  // namespace training
}  // namespace vclab
