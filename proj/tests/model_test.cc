// tests/model_test.cc

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

#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "vclab/error.h"
#include "vclab/toyvoc.h"
#include "vclab/training.h"

using namespace vclab;
using namespace vclab::model;
using nn::MatrixXd;
using nn::VectorXd;

namespace {

ArchConfig SmallFcn(bool f0 = false) {
  ArchConfig arch;
  arch.variant = Variant::kFcn;
  arch.f0_conditioning = f0;
  arch.sp_dim = 33;
  arch.mcc_dim = 9;
  arch.latent_dim = 4;
  arch.speaker_dim = 4;
  arch.fcn_channels = {3, 4};
  arch.fcn_freq_strides = {2, 2};
  arch.fcn_kernel_freq = 3;
  arch.fcn_kernel_time = 3;
  return arch;
}

ArchConfig SmallFramewise(bool f0 = false) {
  ArchConfig arch = SmallFcn(f0);
  arch.variant = Variant::kFramewise;
  arch.framewise_hidden = {16, 8};
  return arch;
}

MatrixXd RandomFrames(int n, int d, uint64_t seed) {
  Rng rng(seed);
  MatrixXd x(n, d);
  for (long i = 0; i < x.size(); ++i) x.data()[i] = rng.Normal();
  return x;
}

F0Condition RandomF0Cond(int n, uint64_t seed) {
  Rng rng(seed);
  F0Condition cond;
  cond.contf0_std_ln.resize(n);
  cond.uv.resize(n);
  for (int t = 0; t < n; ++t) {
    cond.contf0_std_ln[t] = rng.Normal();
    cond.uv[t] = rng.Uniform() < 0.7 ? 1.0 : 0.0;
  }
  return cond;
}

bool ParamsEqual(const CdvaeModel &a, const CdvaeModel &b) {
  if (a.registry().size() != b.registry().size()) return false;
  for (int i = 0; i < a.registry().size(); ++i) {
    if (a.registry().at(i).name != b.registry().at(i).name) return false;
    if (a.registry().at(i).value.rows() != b.registry().at(i).value.rows() ||
        a.registry().at(i).value.cols() != b.registry().at(i).value.cols())
      return false;
    if ((a.registry().at(i).value - b.registry().at(i).value).cwiseAbs().maxCoeff() != 0.0)
      return false;
  }
  return true;
}

}  // namespace

TEST_CASE("reparameterize follows z = mu + exp(logvar/2) * noise") {
  MatrixXd mu = MatrixXd::Zero(1, 1), lv = MatrixXd::Zero(1, 1), n = MatrixXd::Zero(1, 1);

  SUBCASE("zero noise returns mu exactly") {
    mu(0, 0) = 3.25;
    lv(0, 0) = 1.7;
    CHECK(Reparameterize(mu, lv, n)(0, 0) == 3.25);
  }
  SUBCASE("unit variance adds the noise directly") {
    mu(0, 0) = 1.0;
    n(0, 0) = 2.5;
    CHECK(Reparameterize(mu, lv, n)(0, 0) == doctest::Approx(3.5).epsilon(1e-15));
  }
  SUBCASE("logvar = 2 ln 2 doubles unit noise") {
    lv(0, 0) = 2.0 * std::log(2.0);
    n(0, 0) = 1.0;
    CHECK(Reparameterize(mu, lv, n)(0, 0) == doctest::Approx(2.0).epsilon(1e-15));
  }
  SUBCASE("shape mismatches are rejected") {
    CHECK_THROWS_AS(Reparameterize(MatrixXd::Zero(2, 1), lv, n), ShapeError);
  }
}

TEST_CASE("same seed builds bit-identical models; variants and errors") {
  CdvaeModel a(SmallFcn(), {"s0", "s1"}, 99);
  CdvaeModel b(SmallFcn(), {"s0", "s1"}, 99);
  CHECK(ParamsEqual(a, b));
  CdvaeModel c(SmallFcn(), {"s0", "s1"}, 100);
  CHECK(!ParamsEqual(a, c));

  CHECK_THROWS_AS(VariantFromString("recurrent"), ConfigError);
  CHECK(VariantFromString("fcn") == Variant::kFcn);
  CHECK(VariantFromString("framewise") == Variant::kFramewise);

  ArchConfig bad = SmallFcn();
  bad.fcn_kernel_freq = 4;  // even kernels cannot keep centered padding
  CHECK_THROWS_AS(CdvaeModel(bad, {"s0"}, 1), ConfigError);
  CHECK_THROWS_AS(CdvaeModel(SmallFcn(), {"s0", "s0"}, 1), ConfigError);
}

TEST_CASE("frame-wise default parameter count is frozen") {
  // Hand tally for 513/35 inputs, hidden 256/128/64, latent 16, speaker 16,
  // 4 speakers:
  //   enc_sp  513*256+256 + 256*128+128 + 128*64+64 + 2*(256+128+64)
  //           + 2*(64*16+16)                                   = 175712
  //   enc_mcc same with 35-dim input                           =  53344
  //   dec_sp  32->64->128->256->513 ladder + norms             = 176193
  //   dec_mcc 32->64->128->256->35 ladder + norms              =  53347
  //   speaker codes 4*16                                       =     64
  ArchConfig arch;
  arch.variant = Variant::kFramewise;
  CdvaeModel m(arch, {"a", "b", "c", "d"}, 1);
  CHECK(m.registry().TotalCount() == 458660);
}

TEST_CASE("encode preserves frame counts for both variants") {
  for (bool fcn : {true, false}) {
    ArchConfig arch = fcn ? SmallFcn() : SmallFramewise();
    CdvaeModel m(arch, {"s0", "s1"}, 7);
    for (int n : {1, 64, 128, 137}) {
      MatrixXd mu, lv;
      m.Encode(Domain::kSp, RandomFrames(n, arch.sp_dim, 50 + n), &mu, &lv);
      CHECK(mu.rows() == n);
      CHECK(lv.rows() == n);
      CHECK(mu.cols() == arch.latent_dim);
      m.Encode(Domain::kMcc, RandomFrames(n, arch.mcc_dim, 60 + n), &mu, &lv);
      CHECK(mu.rows() == n);
    }
    MatrixXd mu, lv;
    CHECK_THROWS_AS(m.Encode(Domain::kSp, RandomFrames(8, arch.sp_dim + 1, 3), &mu, &lv),
                    ShapeError);
  }
}

TEST_CASE("encoding is deterministic") {
  CdvaeModel m(SmallFcn(), {"s0"}, 5);
  MatrixXd x = RandomFrames(21, 33, 8);
  MatrixXd mu1, lv1, mu2, lv2;
  m.Encode(Domain::kSp, x, &mu1, &lv1);
  m.Encode(Domain::kSp, x, &mu2, &lv2);
  CHECK((mu1 - mu2).cwiseAbs().maxCoeff() == 0.0);
  CHECK((lv1 - lv2).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("decode honors frame counts, purity, and the conditioning contract") {
  for (bool fcn : {true, false}) {
    ArchConfig arch = fcn ? SmallFcn() : SmallFramewise();
    CdvaeModel m(arch, {"s0", "s1"}, 11);

    MatrixXd z1 = RandomFrames(1, arch.latent_dim, 70);
    MatrixXd out1 = m.Decode(Domain::kSp, z1, "s0");
    CHECK(out1.rows() == 1);
    CHECK(out1.cols() == arch.sp_dim);

    MatrixXd z = RandomFrames(23, arch.latent_dim, 71);
    MatrixXd outa = m.Decode(Domain::kMcc, z, "s0");
    MatrixXd outb = m.Decode(Domain::kMcc, z, "s0");
    CHECK((outa - outb).cwiseAbs().maxCoeff() == 0.0);

    // the decoder of an unconditioned model cannot even receive F0 arrays
    CHECK_THROWS_AS(m.Decode(Domain::kMcc, z, "s0", RandomF0Cond(23, 5)), ConfigError);
    CHECK_THROWS_AS(m.Decode(Domain::kMcc, z, "missing"), DataError);
  }
}

TEST_CASE("an F0-conditioned model requires its condition and responds to it") {
  CdvaeModel m(SmallFcn(true), {"s0"}, 13);
  MatrixXd z = RandomFrames(12, 4, 72);
  CHECK_THROWS_AS(m.Decode(Domain::kSp, z, "s0"), ConfigError);
  MatrixXd out1 = m.Decode(Domain::kSp, z, "s0", RandomF0Cond(12, 6));
  MatrixXd out2 = m.Decode(Domain::kSp, z, "s0", RandomF0Cond(12, 7));
  CHECK((out1 - out2).cwiseAbs().maxCoeff() > 0.0);
  // length mismatch in the condition
  CHECK_THROWS_AS(m.Decode(Domain::kSp, z, "s0", RandomF0Cond(11, 6)), ShapeError);
}

TEST_CASE("round-trip length preservation for every variant and length") {
  for (bool fcn : {true, false}) {
    ArchConfig arch = fcn ? SmallFcn() : SmallFramewise();
    CdvaeModel m(arch, {"s0"}, 17);
    for (int n : {1, 64, 128, 137}) {
      MatrixXd mu, lv;
      m.Encode(Domain::kSp, RandomFrames(n, arch.sp_dim, 80 + n), &mu, &lv);
      MatrixXd out = m.Decode(Domain::kSp, mu, "s0");
      CHECK(out.rows() == n);
      CHECK(out.cols() == arch.sp_dim);
    }
  }
}

TEST_CASE("a briefly trained model separates speakers in its output") {
  toyvoc::ToyCorpusSpec spec;
  spec.n_speakers = 2;
  spec.n_contents = 2;
  spec.utterances_per_speaker = 2;
  spec.frames_min = 40;
  spec.frames_max = 48;
  spec.seed = 3;
  toyvoc::ToyCorpus corpus = toyvoc::GenerateCorpus(spec);

  ArchConfig arch = SmallFcn();
  arch.sp_dim = features::kSpDim;
  arch.mcc_dim = features::kMccDim;
  arch.fcn_freq_strides = {4, 4};
  CdvaeModel m(arch, {"spk00", "spk01"}, 19);
  training::FitStandardization(&m, corpus);
  training::TrainConfig cfg;
  cfg.batch_size = 4;
  cfg.crop_frames = 32;
  cfg.lr = 1e-3;
  cfg.max_steps = 60;
  cfg.seed = 19;
  cfg.threads = 2;
  nn::Adam adam(m.registry(), {cfg.lr, cfg.beta1, cfg.beta2, 1e-8});
  training::TrainLoop(cfg, &m, &adam, corpus, 0, "", "");

  MatrixXd mu, lv;
  m.Encode(Domain::kMcc, corpus.utterances.front().feats.mcc, &mu, &lv);
  MatrixXd out0 = m.Decode(Domain::kMcc, mu, "spk00");
  MatrixXd out1 = m.Decode(Domain::kMcc, mu, "spk01");
  CHECK((out0 - out1).cwiseAbs().mean() > 0.0);
}

TEST_CASE("checkpoints restore parameters, constants, and outputs bit-exactly") {
  const std::string dir = (std::filesystem::temp_directory_path() / "vclab_ckpt_test").string();
  std::filesystem::create_directories(dir);
  const std::string path = dir + "/model.ckpt";

  ArchConfig arch = SmallFcn(true);
  CdvaeModel m(arch, {"s0", "s1"}, 23);
  m.SetF0Standardization(4.9, 0.31);
  VectorXd mean = VectorXd::Constant(arch.sp_dim, 0.25);
  VectorXd sd = VectorXd::Constant(arch.sp_dim, 2.0);
  m.SetFeatureStandardization(Domain::kSp, mean, sd);

  CheckpointState state;
  state.step = 41;
  state.seed = 23;
  state.config_hash = "cafef00d";
  SaveCheckpoint(m, state, path);

  LoadedCheckpoint loaded = LoadCheckpoint(path);
  CHECK(loaded.state.step == 41);
  CHECK(loaded.state.config_hash == "cafef00d");
  CHECK(loaded.model->arch().f0_conditioning);
  CHECK(ParamsEqual(m, *loaded.model));
  CHECK(loaded.model->f0_ln_mean() == 4.9);
  CHECK(loaded.model->f0_ln_std() == 0.31);
  CHECK((loaded.model->feature_std(Domain::kSp) - sd).cwiseAbs().maxCoeff() == 0.0);

  MatrixXd x = RandomFrames(9, arch.sp_dim, 90);
  MatrixXd mu1, lv1, mu2, lv2;
  m.Encode(Domain::kSp, x, &mu1, &lv1);
  loaded.model->Encode(Domain::kSp, x, &mu2, &lv2);
  CHECK((mu1 - mu2).cwiseAbs().maxCoeff() == 0.0);

  // truncated file -> format error
  std::filesystem::resize_file(path, std::filesystem::file_size(path) / 2);
  CHECK_THROWS_AS(LoadCheckpoint(path), FormatError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("adam state rides along in checkpoints") {
  const std::string dir = (std::filesystem::temp_directory_path() / "vclab_ckpt_adam").string();
  std::filesystem::create_directories(dir);
  ArchConfig arch = SmallFramewise();
  CdvaeModel m(arch, {"s0"}, 29);
  nn::Adam adam(m.registry(), {});
  nn::GradBuffer g(m.registry());
  for (int i = 0; i < m.registry().size(); ++i) g.at(i).setConstant(0.01);
  adam.Step(&m.registry(), g);
  adam.Step(&m.registry(), g);

  CheckpointState state;
  state.step = 2;
  state.adam_step_count = adam.step_count();
  for (int i = 0; i < m.registry().size(); ++i) {
    state.adam_m.push_back(adam.moment1(i));
    state.adam_v.push_back(adam.moment2(i));
  }
  SaveCheckpoint(m, state, dir + "/m.ckpt");
  LoadedCheckpoint loaded = LoadCheckpoint(dir + "/m.ckpt");
  CHECK(loaded.state.adam_step_count == 2);
  REQUIRE(loaded.state.adam_m.size() == static_cast<size_t>(m.registry().size()));
  for (int i = 0; i < m.registry().size(); ++i)
    CHECK((loaded.state.adam_m[i] - adam.moment1(i)).cwiseAbs().maxCoeff() == 0.0);
  std::filesystem::remove_all(dir);
}
