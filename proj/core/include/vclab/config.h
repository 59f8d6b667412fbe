// core/include/vclab/config.h

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

#ifndef VCLAB_CONFIG_H_
#define VCLAB_CONFIG_H_

#include <string>
#include <vector>

#include "vclab/conversion.h"
#include "vclab/evaluation.h"
#include "vclab/model.h"
#include "vclab/probe.h"
#include "vclab/toyvoc.h"
#include "vclab/training.h"

namespace vclab {
namespace config {

/// Experiment description parsed from a sectioned key-value file:
///
///   [corpus]   kind = toy | external, toy generator knobs or dir
///   [model]    variant, f0_conditioning, architecture overrides
///   [train]    optimizer and sampling settings
///   [eval]     conversion pairs, path, f0 mode, probe settings
///   [output]   dir, seed
///
/// Unknown sections or keys are rejected; validation reports every invalid
/// key in one pass.  Results depend only on config + seed; paths and
/// verbosity ride on CLI flags.
struct ExperimentConfig {
  // [corpus]
  std::string corpus_kind = "toy";  // toy | external
  std::string corpus_dir;           // external only
  toyvoc::ToyCorpusSpec toy;

  // [model]
  model::ArchConfig arch;

  // [train]
  training::TrainConfig train;

  // [eval]
  std::vector<evaluation::ConversionPair> eval_pairs;
  conversion::Path eval_path = conversion::Path::kMccToMcc;
  conversion::F0Mode eval_f0_mode = conversion::F0Mode::kLinearMeanVariance;
  std::string eval_latent_domain = "mcc";  // mcc | sp
  double eval_nonsilent_db = 30.0;
  probe::ProbeConfig probe;

  // [output]
  std::string output_dir = "out";
  uint64_t seed = 0;

  evaluation::EvalSettings EvalSettings() const;
};

/// Parses and validates; error messages enumerate every bad key at once.
ExperimentConfig ParseConfigFile(const std::string &path);
ExperimentConfig ParseConfigText(const std::string &text, const std::string &origin = "<config>");

/// FNV-1a over the canonical resolved form (sorted section.key=value lines,
/// every schema key present, seed and output dir excluded).  Identical
/// experiments hash identically regardless of file formatting.
std::string ConfigHash(const ExperimentConfig &config);

/// The canonical form the hash covers (provenance dumps).
std::string CanonicalConfig(const ExperimentConfig &config);

}  // namespace config
}  // namespace vclab

#endif  // VCLAB_CONFIG_H_
