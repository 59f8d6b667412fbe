// core/src/conversion.cc

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

#include "vclab/conversion.h"

#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "vclab/error.h"
#include "vclab/rng.h"

namespace vclab {
namespace conversion {

using model::Domain;
using model::F0Condition;
using nn::MatrixXd;
using nn::VectorXd;

Path PathFromString(const std::string &s) {
  if (s == "SP-SP") return Path::kSpToSp;
  if (s == "SP-MCC") return Path::kSpToMcc;
  if (s == "MCC-SP") return Path::kMccToSp;
  if (s == "MCC-MCC") return Path::kMccToMcc;
  throw ConfigError("unknown conversion path: '" + s +
                    "' (expected SP-SP|SP-MCC|MCC-SP|MCC-MCC)");
}

std::string PathToString(Path p) {
  switch (p) {
    case Path::kSpToSp: return "SP-SP";
    case Path::kSpToMcc: return "SP-MCC";
    case Path::kMccToSp: return "MCC-SP";
    case Path::kMccToMcc: return "MCC-MCC";
  }
  return "?";
}

Domain SourceDomain(Path p) {
  return (p == Path::kSpToSp || p == Path::kSpToMcc) ? Domain::kSp : Domain::kMcc;
}

Domain TargetDomain(Path p) {
  return (p == Path::kSpToSp || p == Path::kMccToSp) ? Domain::kSp : Domain::kMcc;
}

F0Mode F0ModeFromString(const std::string &s) {
  if (s == "linear-mean-variance") return F0Mode::kLinearMeanVariance;
  if (s == "passthrough") return F0Mode::kPassthrough;
  throw ConfigError("unknown f0_mode: '" + s + "' (expected linear-mean-variance|passthrough)");
}

std::string F0ModeToString(F0Mode m) {
  return m == F0Mode::kLinearMeanVariance ? "linear-mean-variance" : "passthrough";
}

UtteranceFeatures Convert(const CdvaeModel &model, const UtteranceFeatures &source,
                          const ConversionSpec &spec, const F0Stats *src_stats,
                          const F0Stats *tgt_stats) {
  features::ValidateFeatures(source);
  model.SpeakerIndex(spec.target_speaker);  // fail early on unknown targets
  const int n = source.NumFrames();

  // Converted F0 first; the conditioned decoder consumes it.
  VectorXd converted_f0;
  if (spec.f0_mode == F0Mode::kLinearMeanVariance) {
    if (src_stats == nullptr || tgt_stats == nullptr)
      throw DataError("Convert: linear-mean-variance F0 mode needs source and target stats");
    converted_f0 = features::ConvertF0(source.f0, *src_stats, *tgt_stats);
  } else {
    converted_f0 = source.f0;
  }
  auto [converted_contf0, converted_uv] = features::ContinuousF0(converted_f0);

  const Domain src_domain = SourceDomain(spec.path);
  const Domain tgt_domain = TargetDomain(spec.path);
  const MatrixXd &x = src_domain == Domain::kSp ? source.sp : source.mcc;

  MatrixXd mu, logvar;
  model.Encode(src_domain, x, &mu, &logvar);
  MatrixXd z;
  if (spec.deterministic) {
    z = mu;
  } else {
    Rng rng(MixSeed(spec.sampling_seed, 0x5a3b1e));
    MatrixXd noise(mu.rows(), mu.cols());
    for (long i = 0; i < noise.size(); ++i) noise.data()[i] = rng.Normal();
    z = model::Reparameterize(mu, logvar, noise);
  }

  std::optional<F0Condition> f0cond;
  if (model.arch().f0_conditioning)
    f0cond = F0Condition{model.StandardizeContF0(converted_contf0), converted_uv};
  MatrixXd decoded = model.Decode(tgt_domain, z, spec.target_speaker, f0cond);

  UtteranceFeatures out;
  out.speaker = spec.target_speaker;
  out.frame_period_ms = source.frame_period_ms;
  out.sample_rate_hz = source.sample_rate_hz;
  out.energy = source.energy;  // kept unmodified
  out.ap = source.ap;          // kept unmodified
  out.f0 = converted_f0;
  out.contf0 = converted_contf0;
  out.uv = converted_uv;

  features::MccAnalyzer analyzer;
  if (tgt_domain == Domain::kSp) {
    // Clamp and renormalize rows so the unit-sum container invariant holds,
    // then re-extract a matching MCC array.
    MatrixXd sp = decoded.cwiseMax(0.0);
    for (int t = 0; t < n; ++t) {
      double s = sp.row(t).sum();
      if (s > 0.0) {
        sp.row(t) /= s;
      } else {
        sp.row(t).setConstant(1.0 / sp.cols());
      }
    }
    out.sp = sp;
    out.mcc = analyzer.Extract(sp);
  } else {
    out.mcc = decoded;
    out.sp = analyzer.ReconstructSp(decoded);
  }
  features::ValidateFeatures(out);
  return out;
}

std::vector<std::pair<std::string, std::string>> ConversionProvenance(
    const CdvaeModel &model, const UtteranceFeatures &source, const ConversionSpec &spec) {
  std::vector<std::pair<std::string, std::string>> prov;
  prov.emplace_back("source_speaker", source.speaker);
  prov.emplace_back("conversion_path", PathToString(spec.path));
  prov.emplace_back("f0_mode", F0ModeToString(spec.f0_mode));
  prov.emplace_back("deterministic", spec.deterministic ? "1" : "0");
  if (model.arch().f0_conditioning && spec.f0_mode == F0Mode::kPassthrough)
    prov.emplace_back("f0_provenance_mismatch", "conditioned-model-with-passthrough-f0");
  return prov;
}

void ExportForSynthesis(const UtteranceFeatures &converted, const std::string &path,
                        const std::vector<std::pair<std::string, std::string>> &provenance) {
  if (converted.ap.size() == 0) throw DataError("ExportForSynthesis: missing AP array");
  if (converted.f0.size() == 0) throw DataError("ExportForSynthesis: missing F0 array");
  if (converted.sp.size() == 0) throw DataError("ExportForSynthesis: missing SP array");
  if (converted.energy.size() == 0) throw DataError("ExportForSynthesis: missing energy array");
  features::SaveFeatures(converted, path, provenance);

  nlohmann::json manifest;
  manifest["feature_file"] = std::filesystem::path(path).filename().string();
  manifest["frame_period_ms"] = converted.frame_period_ms;
  manifest["sample_rate_hz"] = converted.sample_rate_hz;
  manifest["n_frames"] = converted.NumFrames();
  manifest["speaker"] = converted.speaker;
  manifest["roles"] = {{"sp", "spectral_envelope_unit_sum"},
                       {"energy", "frame_energy_scale"},
                       {"ap", "aperiodicity"},
                       {"f0", "f0_hz"},
                       {"contf0", "continuous_f0_hz"},
                       {"uv", "voicing_flag"},
                       {"mcc", "mel_cepstrum"}};
  for (const auto &[k, v] : provenance) manifest[k] = v;

  const std::string mpath = path + ".synth.json";
  const std::string tmp = mpath + ".tmp";
  {
    std::ofstream os(tmp);
    if (!os) throw FormatError("cannot write " + tmp);
    os << manifest.dump(2) << "\n";
  }
  std::filesystem::rename(tmp, mpath);
}

}  // namespace conversion
}  // namespace vclab
