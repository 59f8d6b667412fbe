// core/include/vclab/conversion.h

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

#ifndef VCLAB_CONVERSION_H_
#define VCLAB_CONVERSION_H_

#include <optional>
#include <string>

#include "vclab/features.h"
#include "vclab/model.h"

namespace vclab {
namespace conversion {

using features::F0Stats;
using features::UtteranceFeatures;
using model::CdvaeModel;

/// The four latent routes between the two spectral feature kinds.
enum class Path { kSpToSp, kSpToMcc, kMccToSp, kMccToMcc };

Path PathFromString(const std::string &s);  // e.g. "MCC-MCC"; throws ConfigError
std::string PathToString(Path p);
model::Domain SourceDomain(Path p);
model::Domain TargetDomain(Path p);

enum class F0Mode { kLinearMeanVariance, kPassthrough };
F0Mode F0ModeFromString(const std::string &s);
std::string F0ModeToString(F0Mode m);

struct ConversionSpec {
  std::string target_speaker;
  Path path = Path::kMccToMcc;  // the route reported best in listening tests
  F0Mode f0_mode = F0Mode::kLinearMeanVariance;
  bool deterministic = true;    // z = posterior mean
  uint64_t sampling_seed = 0;   // used only when deterministic == false
};

/// Encodes the source, decodes with the target speaker code (and the
/// converted cont-F0 + uv when the model is F0-conditioned), and assembles
/// a complete converted container: energy and AP pass through bit-exactly,
/// F0 follows f0_mode, and the spectral feature outside the converted
/// domain is filled consistently (SP reconstructed from converted MCC, or
/// MCC re-extracted from converted SP).
UtteranceFeatures Convert(const CdvaeModel &model, const UtteranceFeatures &source,
                          const ConversionSpec &spec, const F0Stats *src_stats,
                          const F0Stats *tgt_stats);

/// Conversion provenance recorded into the output container's metadata.
std::vector<std::pair<std::string, std::string>> ConversionProvenance(
    const CdvaeModel &model, const UtteranceFeatures &source, const ConversionSpec &spec);

/// Writes the feature container plus "<path>.synth.json", a manifest that
/// names each array's synthesis role for an external vocoder.  Throws
/// DataError when the container lacks arrays synthesis needs.
void ExportForSynthesis(const UtteranceFeatures &converted, const std::string &path,
                        const std::vector<std::pair<std::string, std::string>> &provenance = {});

}  // namespace conversion
}  // namespace vclab

#endif  // VCLAB_CONVERSION_H_
