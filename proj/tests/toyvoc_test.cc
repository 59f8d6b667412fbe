// tests/toyvoc_test.cc

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

#include "vclab/toyvoc.h"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <map>

#include "vclab/error.h"

using namespace vclab;
using namespace vclab::toyvoc;

namespace {

ToyCorpusSpec SmallSpec(uint64_t seed = 5) {
  ToyCorpusSpec spec;
  spec.n_speakers = 3;
  spec.n_contents = 3;
  spec.utterances_per_speaker = 3;
  spec.frames_min = 48;
  spec.frames_max = 72;
  spec.seed = seed;
  return spec;
}

}  // namespace

TEST_CASE("same spec and seed give bit-identical corpora") {
  ToyCorpus a = GenerateCorpus(SmallSpec());
  ToyCorpus b = GenerateCorpus(SmallSpec());
  REQUIRE(a.utterances.size() == b.utterances.size());
  for (size_t i = 0; i < a.utterances.size(); ++i) {
    CHECK((a.utterances[i].feats.sp - b.utterances[i].feats.sp).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a.utterances[i].feats.mcc - b.utterances[i].feats.mcc).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a.utterances[i].feats.f0 - b.utterances[i].feats.f0).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a.utterances[i].feats.energy - b.utterances[i].feats.energy).cwiseAbs().maxCoeff() ==
          0.0);
  }
  ToyCorpus c = GenerateCorpus(SmallSpec(6));
  bool any_diff = false;
  for (size_t i = 0; i < a.utterances.size() && !any_diff; ++i)
    any_diff = (a.utterances[i].feats.sp - c.utterances[i].feats.sp).cwiseAbs().maxCoeff() > 0;
  CHECK(any_diff);
}

TEST_CASE("parallel corpus: every speaker realizes every content at equal length") {
  ToyCorpus corpus = GenerateCorpus(SmallSpec());
  std::map<int, int> content_len;
  for (const ToyUtterance &u : corpus.utterances) {
    if (content_len.count(u.content)) {
      CHECK(content_len[u.content] == u.feats.NumFrames());
    } else {
      content_len[u.content] = u.feats.NumFrames();
    }
  }
  CHECK(content_len.size() == 3);
  // speakers share content ids but differ in spectra
  const ToyUtterance *first = nullptr, *second = nullptr;
  for (const ToyUtterance &u : corpus.utterances) {
    if (u.content != 0 || u.take != 0) continue;
    if (first == nullptr) {
      first = &u;
    } else if (second == nullptr) {
      second = &u;
    }
  }
  REQUIRE(first != nullptr);
  REQUIRE(second != nullptr);
  CHECK(first->speaker_index != second->speaker_index);
  CHECK((first->feats.sp - second->feats.sp).cwiseAbs().maxCoeff() > 1e-6);
}

TEST_CASE("length jitter breaks parallel frame counts so DTW has work to do") {
  ToyCorpusSpec spec = SmallSpec();
  spec.length_jitter = true;
  ToyCorpus corpus = GenerateCorpus(spec);
  std::map<int, std::vector<int>> lens;
  for (const ToyUtterance &u : corpus.utterances) lens[u.content].push_back(u.feats.NumFrames());
  bool any_uneven = false;
  for (auto &[content, v] : lens)
    for (int len : v) any_uneven |= len != v.front();
  CHECK(any_uneven);
}

TEST_CASE("every utterance carries voiced and unvoiced runs and exact F0 ground truth") {
  ToyCorpus corpus = GenerateCorpus(SmallSpec());
  for (const ToyUtterance &u : corpus.utterances) {
    CHECK(u.feats.uv.maxCoeff() == 1.0);
    CHECK(u.feats.uv.minCoeff() == 0.0);
    for (int t = 0; t < u.feats.NumFrames(); ++t) {
      if (u.feats.uv[t] == 1.0) {
        CHECK(u.feats.f0[t] == u.true_f0_contour[t]);  // the generator is the oracle
      } else {
        CHECK(u.feats.f0[t] == 0.0);
      }
    }
    features::ValidateFeatures(u.feats);  // container invariants hold as generated
  }
}

TEST_CASE("speaker log-F0 ladders respect the declared separation") {
  ToyCorpus corpus = GenerateCorpus(SmallSpec());
  std::vector<double> means(corpus.speakers.size(), 0.0);
  std::vector<long> counts(corpus.speakers.size(), 0);
  for (const ToyUtterance &u : corpus.utterances)
    for (int t = 0; t < u.feats.NumFrames(); ++t)
      if (u.feats.f0[t] > 0) {
        means[u.speaker_index] += std::log(u.feats.f0[t]);
        ++counts[u.speaker_index];
      }
  for (size_t s = 0; s < means.size(); ++s) means[s] /= counts[s];
  std::sort(means.begin(), means.end());
  for (size_t s = 1; s < means.size(); ++s)
    CHECK(means[s] - means[s - 1] >= corpus.spec.min_log_f0_separation);
}

TEST_CASE("harmonic structure makes the spectrum F0 dependent") {
  // Two utterances with the same content from speakers an octave-ish apart
  // must differ in their low-frequency spectral shape, not only in tilt:
  // compare unit-sum spectra on voiced frames.
  ToyCorpusSpec spec = SmallSpec();
  spec.n_speakers = 2;
  spec.f0_range_hz = {{110.0, 160.0}, {220.0, 320.0}};
  ToyCorpus corpus = GenerateCorpus(spec);
  const ToyUtterance *low = nullptr, *high = nullptr;
  for (const ToyUtterance &u : corpus.utterances) {
    if (u.content != 0 || u.take != 0) continue;
    (u.speaker_index == 0 ? low : high) = &u;
  }
  REQUIRE(low != nullptr);
  REQUIRE(high != nullptr);
  int t_low = -1, t_high = -1;
  for (int t = 0; t < low->feats.NumFrames(); ++t)
    if (low->feats.uv[t] == 1.0 && high->feats.uv[t] == 1.0) {
      t_low = t_high = t;
      break;
    }
  REQUIRE(t_low >= 0);
  double diff =
      (low->feats.sp.row(t_low).head(80) - high->feats.sp.row(t_high).head(80)).cwiseAbs().sum();
  CHECK(diff > 1e-3);
}

TEST_CASE("corpus save/load round-trips through the manifest") {
  ToyCorpus corpus = GenerateCorpus(SmallSpec());
  const std::string dir = (std::filesystem::temp_directory_path() / "vclab_toyvoc_rt").string();
  std::filesystem::remove_all(dir);
  SaveCorpus(corpus, dir, {{"config_hash", "deadbeef"}});
  ToyCorpus loaded = LoadCorpus(dir);
  REQUIRE(loaded.utterances.size() == corpus.utterances.size());
  CHECK(loaded.speakers.size() == corpus.speakers.size());
  for (size_t i = 0; i < corpus.utterances.size(); ++i) {
    CHECK(loaded.utterances[i].content == corpus.utterances[i].content);
    CHECK(loaded.utterances[i].speaker_index == corpus.utterances[i].speaker_index);
    CHECK(loaded.utterances[i].feats.NumFrames() == corpus.utterances[i].feats.NumFrames());
    // float32 container storage: loaded arrays match to float precision
    CHECK((loaded.utterances[i].feats.mcc - corpus.utterances[i].feats.mcc)
              .cwiseAbs()
              .maxCoeff() < 1e-5);
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("spec validation rejects inconsistent factor designs") {
  ToyCorpusSpec spec = SmallSpec();
  spec.utterances_per_speaker = 2;  // cannot cover 3 contents
  CHECK_THROWS_AS(GenerateCorpus(spec), ConfigError);
  spec = SmallSpec();
  spec.f0_range_hz = {{110, 160}};  // one range for three speakers
  CHECK_THROWS_AS(GenerateCorpus(spec), ConfigError);
  spec = SmallSpec();
  spec.n_speakers = 1;
  CHECK_THROWS_AS(GenerateCorpus(spec), ConfigError);
}

TEST_CASE("gender labels split the default ladder") {
  ToyCorpusSpec spec;
  spec.seed = 4;
  ToyCorpus corpus = GenerateCorpus(ResolveSpec(spec));
  int m = 0, f = 0;
  for (const auto &s : corpus.speakers) (s.gender == "M" ? m : f)++;
  CHECK(m == 2);
  CHECK(f == 2);
}
