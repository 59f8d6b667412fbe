// core/include/vclab/evaluation.h

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

#ifndef VCLAB_EVALUATION_H_
#define VCLAB_EVALUATION_H_

#include <string>
#include <vector>

#include "vclab/conversion.h"
#include "vclab/model.h"
#include "vclab/toyvoc.h"

namespace vclab {
namespace evaluation {

using nn::MatrixXd;
using nn::VectorXd;

struct AlignPair {
  int i = 0;  // frame in the first sequence
  int j = 0;  // frame in the second sequence
};

/// Monotone, boundary-complete dynamic time warping path minimizing the
/// summed Euclidean frame distance.  Steps are (1,0), (0,1), (1,1).
std::vector<AlignPair> DtwAlign(const MatrixXd &a, const MatrixXd &b);

/// Cost of an alignment under the DTW local distance (for tests).
double AlignmentCost(const MatrixXd &a, const MatrixXd &b,
                     const std::vector<AlignPair> &path);

/// Frames whose energy exceeds (max energy) * 10^(-threshold_db/10).
std::vector<bool> NonSilentMask(const VectorXd &energy, double threshold_db = 30.0);

/// Mel-cepstral distortion in dB over aligned pairs whose reference frame
/// is non-silent: mean of (10/ln10) * sqrt(2 * sum_{d>=1} (c_d - chat_d)^2).
/// Coefficient 0 carries energy and is excluded.  Throws EvalError when no
/// aligned non-silent pair remains.
double McdDb(const MatrixXd &mcc_ref, const MatrixXd &mcc_cnv,
             const std::vector<AlignPair> &alignment, const std::vector<bool> &ref_nonsilent);

struct LatentDistance {
  double rmse = 0.0;
  double cosine = 0.0;       // mean per-aligned-frame cosine similarity
  int cosine_skipped = 0;    // frames skipped because one vector was zero
};

/// RMSE over aligned latent elements plus mean per-frame cosine similarity.
/// Zero-norm frames are skipped from the cosine mean and counted.
LatentDistance LatentDistanceOf(const MatrixXd &za, const MatrixXd &zb,
                                const std::vector<AlignPair> &alignment);

// ---------------------------------------------------------------------------
// Pairwise evaluation over a corpus

struct EvalSettings {
  conversion::Path path = conversion::Path::kMccToMcc;
  conversion::F0Mode f0_mode = conversion::F0Mode::kLinearMeanVariance;
  model::Domain latent_domain = model::Domain::kMcc;  // encoder probed for Table-style latents
  double nonsilent_db = 30.0;
  int threads = 0;
};

struct PairResult {
  std::string source, target;
  std::string group;  // "F-F", "F-M", "M-F", "M-M"
  int content = 0;
  double mcd_db = 0.0;
  double latent_rmse = 0.0;
  double latent_cosine = 0.0;
  int cosine_skipped = 0;
};

struct GroupAverage {
  std::string group;
  double mcd_db = 0.0;
  double latent_rmse = 0.0;
  double latent_cosine = 0.0;
  int count = 0;
};

struct SystemReport {
  std::string system;
  std::vector<PairResult> pairs;
  std::vector<GroupAverage> groups;  // F-F, F-M, M-F, M-M then Avg.
};

struct EvalReport {
  std::vector<SystemReport> systems;
  std::string config_hash;
  uint64_t seed = 0;
};

/// Speaker pairs requested for conversion, by toy-corpus speaker id.
struct ConversionPair {
  std::string source, target;
};

/// Runs convert -> MCD and encode -> latent distance for every requested
/// pair over every shared content.  MCD aligns converted-to-reference MCC
/// (dims 1..order-1) by DTW and masks silence on the reference side; latent
/// pairs align the two natural utterances the same way and keep frames
/// non-silent on both sides.
SystemReport EvaluateSystem(const std::string &system_name, const model::CdvaeModel &model,
                            const toyvoc::ToyCorpus &corpus,
                            const std::vector<ConversionPair> &pairs,
                            const EvalSettings &settings);

/// Table-style text rendering (rows: systems, columns: groups + Avg.),
/// one block for MCD and one for each latent metric.  Includes the
/// published full-scale reference averages as explicitly non-reproducible
/// context.
std::string RenderReportTables(const EvalReport &report);

/// Line-oriented dump: one row per pair, tab separated, for the plot tool.
std::string RenderReportTsv(const EvalReport &report);

/// Recomputes every average from the per-pair rows (report invariant).
void CheckReportConsistency(const EvalReport &report, double tol = 1e-9);

}  // namespace evaluation
}  // namespace vclab

#endif  // VCLAB_EVALUATION_H_
