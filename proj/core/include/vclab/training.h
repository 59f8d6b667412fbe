// core/include/vclab/training.h

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

#ifndef VCLAB_TRAINING_H_
#define VCLAB_TRAINING_H_

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "vclab/model.h"
#include "vclab/toyvoc.h"

namespace vclab {
namespace training {

using model::CdvaeModel;
using model::Domain;
using nn::MatrixXd;
using nn::VectorXd;

/// Optimizer and sampling settings; defaults are the full-scale recipe
/// (Adam 1e-4 / 0.5 / 0.999, batch 16, 128-frame crops), all overridable.
struct TrainConfig {
  int batch_size = 16;
  int crop_frames = 128;
  double lr = 1e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  int64_t max_steps = 0;
  uint64_t seed = 0;
  int64_t checkpoint_interval = 0;  // 0: only the final checkpoint
  int64_t log_interval = 1;
  int threads = 0;  // 0: hardware concurrency; results never depend on it
};

/// One optimization step's loss terms.  total is their plain sum.
struct LossReport {
  int64_t step = 0;
  double l_in = 0.0;
  double l_kld = 0.0;
  double l_cross = 0.0;
  double l_sim = 0.0;
  double total = 0.0;
};

/// Mean over frames of the per-frame KL divergence to the standard normal
/// prior: 0.5 * sum_d (mu^2 + exp(logvar) - logvar - 1).
double KlLoss(const MatrixXd &mu, const MatrixXd &logvar);

/// Mean squared error over frames and dimensions.
double ReconLoss(const MatrixXd &x, const MatrixXd &xhat);

/// Mean absolute difference between two latent sequences.
double LatentSimilarityLoss(const MatrixXd &za, const MatrixXd &zb);

/// A training example: aligned SP/MCC crops with their F0 conditioning
/// signal and speaker index.
struct Crop {
  MatrixXd sp;       // crop_frames x sp_dim (raw domain)
  MatrixXd mcc;      // crop_frames x mcc_dim
  VectorXd contf0;   // crop_frames, Hz
  VectorXd uv;       // crop_frames
  int speaker_index = 0;
};

struct Batch {
  std::vector<Crop> crops;
};

/// Uniform utterance and start offset; utterances shorter than the crop are
/// reflect-padded (all arrays share the same index map).
Batch SampleCrops(const toyvoc::ToyCorpus &corpus, int crop_frames, int batch_size, Rng *rng);

/// Reflect-padding index map used by SampleCrops, exposed for tests.
std::vector<int> ReflectIndices(int length, int crop_frames);

/// One reparameterization draw per encoder per crop.
struct NoiseDraws {
  std::vector<MatrixXd> eps_sp;   // per crop, crop_frames x latent_dim
  std::vector<MatrixXd> eps_mcc;
};
NoiseDraws DrawNoise(const Batch &batch, int latent_dim, Rng *rng);

/// Four-path objective.  Reconstruction targets and decoder outputs live in
/// the model's standardized feature domain.  When `grads` is non-null the
/// full gradient lands there (summed over the batch mean).  Per-crop work
/// may run on `threads` threads; gradients reduce in crop order, so results
/// are bitwise independent of the thread count.
LossReport CdvaeLoss(const CdvaeModel &model, const Batch &batch, const NoiseDraws &noise,
                     nn::GradBuffer *grads, int threads = 1);

/// Corpus-wide feature and ln-cont-F0 statistics, written into the model so
/// checkpoints carry them.
void FitStandardization(CdvaeModel *model, const toyvoc::ToyCorpus &corpus);

struct TrainCallbacks {
  std::function<void(const LossReport &)> on_log;           // every log_interval
  std::function<void(int64_t, const CdvaeModel &)> on_ckpt; // unused by TrainLoop itself
};

/// Runs steps start_step+1 .. max_steps.  Deterministic given (config.seed,
/// corpus): batches and noise derive from per-step counters, so resuming
/// from any checkpointed step reproduces an uninterrupted run bit-exactly.
/// Saves "ckpt_<step>" every checkpoint_interval steps and "final" at the
/// end (into checkpoint_dir unless it is empty).  Throws DataError when the
/// total loss leaves the finite range.
std::vector<LossReport> TrainLoop(const TrainConfig &config, CdvaeModel *model,
                                  nn::Adam *adam, const toyvoc::ToyCorpus &corpus,
                                  int64_t start_step, const std::string &checkpoint_dir,
                                  const std::string &config_hash,
                                  const TrainCallbacks &callbacks = {});

/// Formats one loss-curve line: step and the four terms plus total, tab
/// separated, full double precision.
std::string FormatLossLine(const LossReport &report);
constexpr const char *kLossHeader = "step\tl_in\tl_kld\tl_cross\tl_sim\ttotal";

}  // namespace training
}  // namespace vclab

#endif  // VCLAB_TRAINING_H_
