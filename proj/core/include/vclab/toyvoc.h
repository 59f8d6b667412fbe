// core/include/vclab/toyvoc.h

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

#ifndef VCLAB_TOYVOC_H_
#define VCLAB_TOYVOC_H_

#include <string>
#include <utility>
#include <vector>

#include "vclab/features.h"

namespace vclab {
namespace toyvoc {

// Synthetic vocoder-feature corpus with independently controlled content,
// speaker and F0 factors.  Spectra are sums of Gaussian bumps at harmonic
// positions (so F0 measurably shapes the spectral features) times a
// speaker tilt, with content controlling a formant-like template sequence.
// Everything is a pure function of (spec, seed): per-utterance streams are
// derived by counter-based seeding, so parallel generation cannot change
// the result.

struct ToyCorpusSpec {
  int n_speakers = 4;
  int n_contents = 6;
  int utterances_per_speaker = 6;  // content = u % n_contents, take = u / n_contents
  int frames_min = 84;             // body frames per content, before silence pad
  int frames_max = 132;
  int silence_frames = 6;          // unvoiced low-energy pad on each side
  bool length_jitter = false;      // vary parallel lengths so DTW is exercised
  double min_log_f0_separation = 0.15;  // asserted between speaker log-F0 means
  uint64_t seed = 0;
  // Per-speaker F0 range in Hz; filled with a geometric ladder when empty.
  std::vector<std::pair<double, double>> f0_range_hz;
};

struct ToySpeaker {
  std::string id;
  std::string gender;  // "F" or "M", assigned from the F0 range
  double f0_min_hz = 0.0;
  double f0_max_hz = 0.0;
};

struct ToyUtterance {
  features::UtteranceFeatures feats;
  int speaker_index = 0;
  int content = 0;
  int take = 0;
  Eigen::VectorXd true_f0_contour;  // Hz, continuous, before unvoicing
};

struct ToyCorpus {
  ToyCorpusSpec spec;
  std::vector<ToySpeaker> speakers;
  std::vector<ToyUtterance> utterances;

  const ToySpeaker &SpeakerById(const std::string &id) const;
  std::vector<const features::UtteranceFeatures *> UtterancesOfSpeaker(int speaker_index) const;
};

/// Expands defaults (F0 ladder, gender labels) and validates the spec.
ToyCorpusSpec ResolveSpec(const ToyCorpusSpec &spec);

ToyCorpus GenerateCorpus(const ToyCorpusSpec &spec);

/// Writes feature containers plus manifest.json under dir.  Extra
/// provenance entries (config_hash, seed) land in the manifest.
void SaveCorpus(const ToyCorpus &corpus, const std::string &dir,
                const std::vector<std::pair<std::string, std::string>> &provenance = {});

/// Loads a corpus directory written by SaveCorpus (or any directory with a
/// compatible manifest; factor labels default when absent).
ToyCorpus LoadCorpus(const std::string &dir);

}  // namespace toyvoc
}  // namespace vclab

#endif  // VCLAB_TOYVOC_H_
