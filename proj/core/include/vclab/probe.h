// core/include/vclab/probe.h

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

#ifndef VCLAB_PROBE_H_
#define VCLAB_PROBE_H_

#include <string>
#include <vector>

#include "vclab/model.h"
#include "vclab/toyvoc.h"

namespace vclab {
namespace probe {

using nn::MatrixXd;
using nn::VectorXd;

/// How much F0 information a frozen model leaves in its latent codes:
/// a predictor network with the encoder's convolutional structure (input
/// height = latent dimension) is trained to map latent sequences to
/// standardized ln cont-F0 (MSE head) and uv (cross-entropy head), and the
/// training loss curves are the measurement — recoverable F0 means low
/// final loss.

struct ProbeDataset {
  std::vector<MatrixXd> latents;      // per utterance, N x latent_dim
  std::vector<VectorXd> f0_targets;   // standardized ln cont-F0
  std::vector<VectorXd> uv_targets;   // {0,1}
};

struct ProbeConfig {
  int steps = 1500;
  int batch_size = 16;
  int crop_frames = 128;
  double lr = 1e-4;          // optimizer settings shared with main training
  double beta1 = 0.5;
  double beta2 = 0.999;
  uint64_t seed = 0;
  int threads = 0;
  // probe conv stack (mirrors the encoder defaults; heights auto-clamp)
  std::vector<int> channels = {16, 32, 32, 16};
  std::vector<int> freq_strides = {2, 2, 2, 2};
  int kernel_freq = 5;
  int kernel_time = 5;
  double leaky_slope = 0.2;
};

struct ProbeStep {
  int64_t step = 0;
  double f0_mse = 0.0;
  double uv_bce = 0.0;
};

struct ProbeCurves {
  std::vector<ProbeStep> steps;
  double final_f0_mse = 0.0;     // mean over the last 5% of steps
  double final_uv_bce = 0.0;
  double target_variance = 0.0;  // constant-predictor bound on the dataset
};

/// Deterministic given (config.seed, dataset).  Throws ConfigError when
/// fewer utterances than the batch size are supplied.
ProbeCurves TrainF0Probe(const ProbeDataset &dataset, const ProbeConfig &config);

/// Encodes every corpus utterance with the frozen model (posterior mean of
/// the chosen domain's encoder) and pairs it with the standardized targets.
ProbeDataset BuildProbeDataset(const model::CdvaeModel &model, const toyvoc::ToyCorpus &corpus,
                               model::Domain domain);

std::string FormatProbeLine(const ProbeStep &s);
constexpr const char *kProbeHeader = "step\tf0_mse\tuv_bce";

}  // namespace probe
}  // namespace vclab

#endif  // VCLAB_PROBE_H_
