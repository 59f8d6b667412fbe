// core/include/vclab/features.h

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

#ifndef VCLAB_FEATURES_H_
#define VCLAB_FEATURES_H_

#include <Eigen/Core>
#include <string>
#include <utility>
#include <vector>

namespace vclab {
namespace features {

constexpr int kSpDim = 513;   // spectral envelope bins (fft 1024, bins 0..512)
constexpr int kMccDim = 35;   // mel-cepstral coefficients kept
constexpr double kDefaultWarpAlpha = 0.455;  // all-pass warp for 22.05 kHz
constexpr double kLogFloor = 1e-10;          // spectrum floor before log

/// Per-utterance vocoder features.  All arrays share the frame count N.
/// sp rows are unit-sum; energy carries the removed per-frame scale so
/// energy[t] * sp.row(t) reconstructs the raw spectrum.  f0 is in Hz with
/// 0 marking unvoiced frames; contf0 is strictly positive everywhere and
/// equals f0 on voiced frames; uv is the binary voicing flag.
struct UtteranceFeatures {
  std::string speaker;
  double frame_period_ms = 5.0;
  double sample_rate_hz = 22050.0;
  Eigen::MatrixXd sp;      // N x 513
  Eigen::VectorXd energy;  // N
  Eigen::MatrixXd mcc;     // N x 35
  Eigen::MatrixXd ap;      // N x 513, values in [0, 1]
  Eigen::VectorXd f0;      // N, Hz, 0 = unvoiced
  Eigen::VectorXd contf0;  // N, Hz, > 0
  Eigen::VectorXd uv;      // N, {0, 1}

  int NumFrames() const { return static_cast<int>(f0.size()); }
};

/// Checks every container invariant; throws DataError/ShapeError with the
/// first violated one named.
void ValidateFeatures(const UtteranceFeatures &utt);

/// Per-speaker statistics of ln(F0) over voiced frames.
struct F0Stats {
  std::string speaker;
  double log_mean = 0.0;
  double log_std = 0.0;  // population convention; > 0 enforced
  long voiced_frame_count = 0;
};

/// Splits a raw non-negative spectrum frame into a unit-sum shape and its
/// scale.  Throws DataError for an all-zero (or negative) frame.
std::pair<Eigen::VectorXd, double> NormalizeSp(const Eigen::VectorXd &raw_sp_frame);

/// Warped-cepstrum analyzer.  The unit-sum spectrum is floored, logged,
/// resampled on an all-pass-warped frequency grid and projected onto a
/// cosine basis; the first `order` coefficients are the MCCs.  Analysis
/// and synthesis matrices are exact adjoint projections, so
/// ExtractFromWarpedLog(ReconstructWarpedLog(c)) == c up to rounding.
class MccAnalyzer {
 public:
  explicit MccAnalyzer(int order = kMccDim, double warp_alpha = kDefaultWarpAlpha,
                       int sp_dim = kSpDim);

  int order() const { return order_; }
  double warp_alpha() const { return warp_alpha_; }

  /// sp: N x sp_dim unit-sum rows  ->  N x order MCC rows.
  Eigen::MatrixXd Extract(const Eigen::MatrixXd &sp) const;

  /// Warped log spectrum of sp (N x sp_dim), before cosine projection.
  Eigen::MatrixXd WarpedLogSpectrum(const Eigen::MatrixXd &sp) const;

  /// mcc: N x order  ->  smoothed warped log spectrum, N x sp_dim.
  Eigen::MatrixXd ReconstructWarpedLog(const Eigen::MatrixXd &mcc) const;

  /// Projects a warped log spectrum back onto the MCC basis.
  Eigen::MatrixXd ExtractFromWarpedLog(const Eigen::MatrixXd &warped_log) const;

  /// Full inverse path: MCC -> linear-frequency spectrum, clamped
  /// non-negative and renormalized to unit-sum rows.
  Eigen::MatrixXd ReconstructSp(const Eigen::MatrixXd &mcc) const;

 private:
  int order_;
  double warp_alpha_;
  int sp_dim_;
  Eigen::MatrixXd analysis_;     // order x sp_dim, includes warp resampling
  Eigen::MatrixXd synthesis_;    // sp_dim x order, warped-domain cosine basis
  Eigen::MatrixXd warp_;         // sp_dim x sp_dim, linear -> warped resample
  Eigen::MatrixXd unwarp_;       // sp_dim x sp_dim, warped -> linear resample
  Eigen::MatrixXd basis_;        // sp_dim x order (warped-domain analysis)
};

/// Convenience wrapper using a process-wide default analyzer.
Eigen::MatrixXd ExtractMcc(const Eigen::MatrixXd &unit_sp, int order = kMccDim,
                           double warp_alpha = kDefaultWarpAlpha);

/// Fills unvoiced gaps of f0 by linear interpolation in Hz between the
/// nearest voiced neighbors; edge gaps hold the nearest voiced value.
/// Returns (contf0, uv).  Throws DataError when no frame is voiced.
std::pair<Eigen::VectorXd, Eigen::VectorXd> ContinuousF0(const Eigen::VectorXd &f0);

/// ln-F0 mean/std over every voiced frame of the given utterances.
/// Population standard deviation; throws DataError when fewer than two
/// voiced frames exist or when the deviation is degenerate (zero).
F0Stats ComputeF0Statistics(const std::vector<UtteranceFeatures> &utterances,
                            const std::string &speaker = "");

/// Log-domain linear mean-variance transform of voiced frames; unvoiced
/// frames stay exactly 0.  Identical src/tgt stats pass f0 through
/// untouched so self-conversion is exact.
Eigen::VectorXd ConvertF0(const Eigen::VectorXd &f0, const F0Stats &src,
                          const F0Stats &tgt);

/// Feature container I/O.  `path` gets the float32 array file; metadata
/// goes to "<path>.meta".  `extra_meta` adds provenance keys (config_hash,
/// seed, conversion provenance); required keys are always written.
void SaveFeatures(const UtteranceFeatures &utt, const std::string &path,
                  const std::vector<std::pair<std::string, std::string>> &extra_meta = {});
UtteranceFeatures LoadFeatures(const std::string &path);

}  // namespace features
}  // namespace vclab

#endif  // VCLAB_FEATURES_H_
