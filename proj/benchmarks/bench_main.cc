// benchmarks/bench_main.cc

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

#include <benchmark/benchmark.h>

#include "vclab/evaluation.h"
#include "vclab/features.h"
#include "vclab/model.h"
#include "vclab/toyvoc.h"
#include "vclab/training.h"

namespace {

using namespace vclab;

toyvoc::ToyCorpusSpec BenchSpec() {
  toyvoc::ToyCorpusSpec spec;
  spec.n_speakers = 2;
  spec.n_contents = 2;
  spec.utterances_per_speaker = 2;
  spec.frames_min = 96;
  spec.frames_max = 96;
  spec.seed = 1;
  return spec;
}

model::ArchConfig BenchArch(model::Variant variant) {
  model::ArchConfig arch;
  arch.variant = variant;
  arch.latent_dim = 8;
  arch.speaker_dim = 8;
  arch.fcn_channels = {4, 8, 8, 8};
  arch.fcn_freq_strides = {4, 4, 4, 2};
  arch.fcn_kernel_freq = 3;
  arch.fcn_kernel_time = 3;
  return arch;
}

void BM_McdExtraction(benchmark::State &state) {
  features::MccAnalyzer analyzer;
  toyvoc::ToyCorpus corpus = toyvoc::GenerateCorpus(BenchSpec());
  const Eigen::MatrixXd &sp = corpus.utterances.front().feats.sp;
  for (auto _ : state) benchmark::DoNotOptimize(analyzer.Extract(sp));
  state.SetItemsProcessed(state.iterations() * sp.rows());
}
BENCHMARK(BM_McdExtraction);

void BM_DtwAlign(benchmark::State &state) {
  toyvoc::ToyCorpus corpus = toyvoc::GenerateCorpus(BenchSpec());
  const Eigen::MatrixXd &a = corpus.utterances[0].feats.mcc;
  const Eigen::MatrixXd &b = corpus.utterances[2].feats.mcc;
  for (auto _ : state) benchmark::DoNotOptimize(evaluation::DtwAlign(a, b));
}
BENCHMARK(BM_DtwAlign);

void BM_TrainStep(benchmark::State &state) {
  const bool fcn = state.range(0) == 1;
  toyvoc::ToyCorpus corpus = toyvoc::GenerateCorpus(BenchSpec());
  model::ArchConfig arch =
      BenchArch(fcn ? model::Variant::kFcn : model::Variant::kFramewise);
  model::CdvaeModel m(arch, {"spk00", "spk01"}, 3);
  training::FitStandardization(&m, corpus);
  training::TrainConfig cfg;
  cfg.batch_size = 4;
  cfg.crop_frames = 48;
  cfg.threads = 2;
  nn::GradBuffer grads(m.registry());
  int64_t step = 0;
  for (auto _ : state) {
    ++step;
    Rng batch_rng(MixSeed(7, step));
    training::Batch batch =
        training::SampleCrops(corpus, cfg.crop_frames, cfg.batch_size, &batch_rng);
    Rng noise_rng(MixSeed(9, step));
    training::NoiseDraws noise = training::DrawNoise(batch, arch.latent_dim, &noise_rng);
    grads.SetZero();
    benchmark::DoNotOptimize(
        training::CdvaeLoss(m, batch, noise, &grads, cfg.threads));
  }
}
BENCHMARK(BM_TrainStep)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
