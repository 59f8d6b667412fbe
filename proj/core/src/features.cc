// core/src/features.cc

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

#include "vclab/features.h"

#include <cmath>
#include <memory>
#include <mutex>
#include <sstream>

#include "vclab/container.h"
#include "vclab/error.h"

namespace vclab {
namespace features {

namespace {

std::string Dim2(const Eigen::MatrixXd &m) {
  std::ostringstream os;
  os << m.rows() << "x" << m.cols();
  return os.str();
}

// First-order all-pass frequency warp.  Maps [0, pi] onto [0, pi]
// monotonically; positive alpha stretches low frequencies.
double WarpFrequency(double omega, double alpha) {
  return omega + 2.0 * std::atan2(alpha * std::sin(omega), 1.0 - alpha * std::cos(omega));
}

// Linear-interpolation resampling matrix: rows are target grid points,
// columns source samples on the uniform grid over [0, pi].
Eigen::MatrixXd ResampleMatrix(const Eigen::VectorXd &target_omega, int n_source) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(target_omega.size(), n_source);
  const double step = M_PI / (n_source - 1);
  for (Eigen::Index i = 0; i < target_omega.size(); ++i) {
    double pos = target_omega[i] / step;
    int lo = static_cast<int>(std::floor(pos));
    if (lo < 0) lo = 0;
    if (lo >= n_source - 1) lo = n_source - 2;
    double frac = pos - lo;
    if (frac < 0.0) frac = 0.0;
    if (frac > 1.0) frac = 1.0;
    m(i, lo) = 1.0 - frac;
    m(i, lo + 1) = frac;
  }
  return m;
}

}  // namespace

void ValidateFeatures(const UtteranceFeatures &utt) {
  const int n = utt.NumFrames();
  if (n <= 0) throw ShapeError("utterance has no frames");
  auto check_rows = [&](const char *name, Eigen::Index rows) {
    if (rows != n)
      throw ShapeError(std::string("array '") + name + "' has " + std::to_string(rows) +
                       " frames, expected " + std::to_string(n));
  };
  check_rows("sp", utt.sp.rows());
  check_rows("energy", utt.energy.size());
  check_rows("mcc", utt.mcc.rows());
  check_rows("ap", utt.ap.rows());
  check_rows("contf0", utt.contf0.size());
  check_rows("uv", utt.uv.size());
  if (utt.sp.cols() != kSpDim)
    throw ShapeError("sp must have " + std::to_string(kSpDim) + " columns, got " + Dim2(utt.sp));
  if (utt.ap.cols() != kSpDim)
    throw ShapeError("ap must have " + std::to_string(kSpDim) + " columns, got " + Dim2(utt.ap));
  if (utt.mcc.cols() != kMccDim)
    throw ShapeError("mcc must have " + std::to_string(kMccDim) + " columns, got " + Dim2(utt.mcc));
  for (int t = 0; t < n; ++t) {
    double row_sum = utt.sp.row(t).sum();
    if (std::abs(row_sum - 1.0) > 1e-6)
      throw DataError("sp row " + std::to_string(t) + " sums to " + std::to_string(row_sum) +
                      ", not unit-sum");
    if (utt.energy[t] <= 0.0)
      throw DataError("energy must be positive at frame " + std::to_string(t));
    bool voiced = utt.f0[t] > 0.0;
    if ((utt.uv[t] != 0.0) != voiced)
      throw DataError("uv flag disagrees with f0 at frame " + std::to_string(t));
    if (utt.contf0[t] <= 0.0)
      throw DataError("contf0 must be strictly positive at frame " + std::to_string(t));
    if (voiced && utt.contf0[t] != utt.f0[t])
      throw DataError("contf0 differs from f0 on voiced frame " + std::to_string(t));
  }
  if (utt.ap.minCoeff() < 0.0 || utt.ap.maxCoeff() > 1.0)
    throw DataError("ap values must lie in [0, 1]");
}

std::pair<Eigen::VectorXd, double> NormalizeSp(const Eigen::VectorXd &raw_sp_frame) {
  if (raw_sp_frame.minCoeff() < 0.0)
    throw DataError("NormalizeSp: negative bin in raw spectrum frame");
  double energy = raw_sp_frame.sum();
  if (!(energy > 0.0))
    throw DataError("NormalizeSp: degenerate all-zero spectrum frame");
  return {raw_sp_frame / energy, energy};
}

MccAnalyzer::MccAnalyzer(int order, double warp_alpha, int sp_dim)
    : order_(order), warp_alpha_(warp_alpha), sp_dim_(sp_dim) {
  if (order < 2 || order > sp_dim)
    throw ConfigError("MCC order must lie in [2, " + std::to_string(sp_dim) + "], got " +
                      std::to_string(order));
  if (std::abs(warp_alpha) >= 1.0)
    throw ConfigError("warp alpha must satisfy |alpha| < 1");

  const int m = sp_dim;           // warped-grid points
  const int segs = m - 1;         // cosine basis period divisor

  // Uniform warped grid; its preimage under the warp gives the linear-
  // frequency sampling points (the all-pass warp inverts by negating alpha).
  Eigen::VectorXd warped_grid(m), source_of_warped(m), warped_of_linear(m);
  for (int i = 0; i < m; ++i) {
    double omega = M_PI * i / segs;
    warped_grid[i] = omega;
    source_of_warped[i] = WarpFrequency(omega, -warp_alpha);
    warped_of_linear[i] = WarpFrequency(omega, warp_alpha);
  }
  warp_ = ResampleMatrix(source_of_warped, m);    // samples log-spec at warped grid
  unwarp_ = ResampleMatrix(warped_of_linear, m);  // samples warped function at linear grid

  // DCT-I style cosine basis with trapezoidal end weights; orthogonal under
  // that weighting, so analysis followed by synthesis is an exact projection.
  basis_ = Eigen::MatrixXd(m, order);
  Eigen::MatrixXd analysis_warped(order, m);
  for (int d = 0; d < order; ++d) {
    double norm = (d == 0) ? segs : segs / 2.0;
    for (int i = 0; i < m; ++i) {
      double c = std::cos(M_PI * static_cast<double>(d) * i / segs);
      double w = (i == 0 || i == m - 1) ? 0.5 : 1.0;
      basis_(i, d) = c;
      analysis_warped(d, i) = w * c / norm;
    }
  }
  synthesis_ = basis_;
  analysis_ = analysis_warped * warp_;
}

Eigen::MatrixXd MccAnalyzer::WarpedLogSpectrum(const Eigen::MatrixXd &sp) const {
  if (sp.cols() != sp_dim_)
    throw ShapeError("MccAnalyzer: expected " + std::to_string(sp_dim_) + " bins, got " +
                     Dim2(sp));
  Eigen::MatrixXd logsp = sp.cwiseMax(kLogFloor).array().log().matrix();
  return logsp * warp_.transpose();
}

Eigen::MatrixXd MccAnalyzer::Extract(const Eigen::MatrixXd &sp) const {
  if (sp.cols() != sp_dim_)
    throw ShapeError("MccAnalyzer: expected " + std::to_string(sp_dim_) + " bins, got " +
                     Dim2(sp));
  Eigen::MatrixXd logsp = sp.cwiseMax(kLogFloor).array().log().matrix();
  return logsp * analysis_.transpose();
}

Eigen::MatrixXd MccAnalyzer::ReconstructWarpedLog(const Eigen::MatrixXd &mcc) const {
  if (mcc.cols() != order_)
    throw ShapeError("MccAnalyzer: expected order " + std::to_string(order_) + ", got " +
                     Dim2(mcc));
  return mcc * synthesis_.transpose();
}

Eigen::MatrixXd MccAnalyzer::ExtractFromWarpedLog(const Eigen::MatrixXd &warped_log) const {
  if (warped_log.cols() != sp_dim_)
    throw ShapeError("MccAnalyzer: expected " + std::to_string(sp_dim_) + " warped bins, got " +
                     Dim2(warped_log));
  // Analysis without the warp resample: input already lives on the warped grid.
  Eigen::MatrixXd coeffs(warped_log.rows(), order_);
  const int m = sp_dim_;
  const int segs = m - 1;
  for (int d = 0; d < order_; ++d) {
    double norm = (d == 0) ? segs : segs / 2.0;
    Eigen::VectorXd row(m);
    for (int i = 0; i < m; ++i) {
      double w = (i == 0 || i == m - 1) ? 0.5 : 1.0;
      row[i] = w * basis_(i, d) / norm;
    }
    coeffs.col(d) = warped_log * row;
  }
  return coeffs;
}

Eigen::MatrixXd MccAnalyzer::ReconstructSp(const Eigen::MatrixXd &mcc) const {
  Eigen::MatrixXd warped_log = ReconstructWarpedLog(mcc);
  Eigen::MatrixXd linear_log = warped_log * unwarp_.transpose();
  Eigen::MatrixXd sp = linear_log.array().exp().matrix();
  for (Eigen::Index t = 0; t < sp.rows(); ++t) {
    double s = sp.row(t).sum();
    if (!(s > 0.0)) {
      sp.row(t).setConstant(1.0 / sp_dim_);
    } else {
      sp.row(t) /= s;
    }
  }
  return sp;
}

Eigen::MatrixXd ExtractMcc(const Eigen::MatrixXd &unit_sp, int order, double warp_alpha) {
  static std::mutex mu;
  static std::unique_ptr<MccAnalyzer> cached;
  std::lock_guard<std::mutex> lock(mu);
  if (!cached || cached->order() != order || cached->warp_alpha() != warp_alpha)
    cached = std::make_unique<MccAnalyzer>(order, warp_alpha);
  return cached->Extract(unit_sp);
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> ContinuousF0(const Eigen::VectorXd &f0) {
  const int n = static_cast<int>(f0.size());
  if (n == 0) throw ShapeError("ContinuousF0: empty f0");
  if (f0.minCoeff() < 0.0) throw DataError("ContinuousF0: negative f0 value");
  Eigen::VectorXd uv(n), contf0(n);
  int first_voiced = -1, last_voiced = -1;
  for (int t = 0; t < n; ++t) {
    uv[t] = f0[t] > 0.0 ? 1.0 : 0.0;
    if (f0[t] > 0.0) {
      if (first_voiced < 0) first_voiced = t;
      last_voiced = t;
    }
  }
  if (first_voiced < 0)
    throw DataError("ContinuousF0: utterance has no voiced frame");
  int prev = -1;
  for (int t = 0; t < n; ++t) {
    if (f0[t] > 0.0) {
      contf0[t] = f0[t];
      prev = t;
    } else if (t < first_voiced) {
      contf0[t] = f0[first_voiced];
    } else if (t > last_voiced) {
      contf0[t] = f0[last_voiced];
    } else {
      // interior gap: prev is the voiced frame before t; find the next one
      int next = t + 1;
      while (f0[next] <= 0.0) ++next;
      double frac = static_cast<double>(t - prev) / (next - prev);
      contf0[t] = f0[prev] + frac * (f0[next] - f0[prev]);
    }
  }
  return {contf0, uv};
}

F0Stats ComputeF0Statistics(const std::vector<UtteranceFeatures> &utterances,
                            const std::string &speaker) {
  std::vector<double> logs;
  for (const UtteranceFeatures &utt : utterances)
    for (int t = 0; t < utt.NumFrames(); ++t)
      if (utt.f0[t] > 0.0) logs.push_back(std::log(utt.f0[t]));
  if (logs.size() < 2)
    throw DataError("ComputeF0Statistics: need at least 2 voiced frames, got " +
                    std::to_string(logs.size()));
  double mean = 0.0;
  for (double v : logs) mean += v;
  mean /= static_cast<double>(logs.size());
  double var = 0.0;
  for (double v : logs) var += (v - mean) * (v - mean);
  var /= static_cast<double>(logs.size());  // population convention
  double sd = std::sqrt(var);
  if (!(sd > 0.0))
    throw DataError("ComputeF0Statistics: degenerate corpus, log-F0 deviation is zero");
  F0Stats stats;
  stats.speaker = speaker;
  stats.log_mean = mean;
  stats.log_std = sd;
  stats.voiced_frame_count = static_cast<long>(logs.size());
  return stats;
}

Eigen::VectorXd ConvertF0(const Eigen::VectorXd &f0, const F0Stats &src, const F0Stats &tgt) {
  if (!(src.log_std > 0.0)) throw DataError("ConvertF0: source log_std must be positive");
  if (src.log_mean == tgt.log_mean && src.log_std == tgt.log_std)
    return f0;  // identity transform is exact, not merely within rounding
  Eigen::VectorXd out(f0.size());
  double ratio = tgt.log_std / src.log_std;
  for (Eigen::Index t = 0; t < f0.size(); ++t) {
    if (f0[t] > 0.0) {
      out[t] = std::exp((std::log(f0[t]) - src.log_mean) * ratio + tgt.log_mean);
    } else {
      out[t] = 0.0;
    }
  }
  return out;
}

namespace {

constexpr const char *kRequiredMeta[] = {"speaker", "frame_period_ms", "sample_rate_hz",
                                         "n_frames"};

double ParseMetaNumber(const std::map<std::string, std::string> &meta, const std::string &key,
                       const std::string &path) {
  auto it = meta.find(key);
  if (it == meta.end())
    throw FormatError(path + ": metadata missing required key '" + key + "'");
  try {
    size_t used = 0;
    double v = std::stod(it->second, &used);
    if (used != it->second.size()) throw std::invalid_argument("trailing junk");
    return v;
  } catch (const std::exception &) {
    throw FormatError(path + ": metadata key '" + key + "' is not a number: " + it->second);
  }
}

}  // namespace

void SaveFeatures(const UtteranceFeatures &utt, const std::string &path,
                  const std::vector<std::pair<std::string, std::string>> &extra_meta) {
  ValidateFeatures(utt);
  std::vector<NamedArray> arrays;
  arrays.push_back({"sp", utt.sp});
  arrays.push_back({"energy", utt.energy});
  arrays.push_back({"mcc", utt.mcc});
  arrays.push_back({"ap", utt.ap});
  arrays.push_back({"f0", utt.f0});
  arrays.push_back({"contf0", utt.contf0});
  arrays.push_back({"uv", utt.uv});
  WriteArrayFile(path, arrays, /*float64=*/false);

  std::map<std::string, std::string> meta;
  meta["speaker"] = utt.speaker;
  std::ostringstream fp, sr;
  fp.precision(17);
  sr.precision(17);
  fp << utt.frame_period_ms;
  sr << utt.sample_rate_hz;
  meta["frame_period_ms"] = fp.str();
  meta["sample_rate_hz"] = sr.str();
  meta["n_frames"] = std::to_string(utt.NumFrames());
  for (const auto &[k, v] : extra_meta) meta[k] = v;
  WriteKeyValueFile(path + ".meta", meta);
}

UtteranceFeatures LoadFeatures(const std::string &path) {
  std::vector<NamedArray> arrays = ReadArrayFile(path, /*float64=*/false);
  auto find = [&](const std::string &name) -> const NamedArray & {
    for (const NamedArray &a : arrays)
      if (a.name == name) return a;
    throw FormatError(path + ": missing required array '" + name + "'");
  };

  std::map<std::string, std::string> meta = ReadKeyValueFile(path + ".meta");
  for (const char *key : kRequiredMeta)
    if (meta.find(key) == meta.end())
      throw FormatError(path + ": metadata missing required key '" + std::string(key) + "'");

  UtteranceFeatures utt;
  utt.speaker = meta.at("speaker");
  utt.frame_period_ms = ParseMetaNumber(meta, "frame_period_ms", path);
  utt.sample_rate_hz = ParseMetaNumber(meta, "sample_rate_hz", path);
  const int n = static_cast<int>(ParseMetaNumber(meta, "n_frames", path));

  auto take_matrix = [&](const std::string &name, int cols) {
    const NamedArray &a = find(name);
    if (a.values.rows() != n || a.values.cols() != cols)
      throw FormatError(path + ": array '" + name + "' is " + Dim2(a.values) + ", expected " +
                        std::to_string(n) + "x" + std::to_string(cols));
    return a.values;
  };
  auto take_vector = [&](const std::string &name) -> Eigen::VectorXd {
    const NamedArray &a = find(name);
    if (a.values.rows() != n || a.values.cols() != 1)
      throw FormatError(path + ": array '" + name + "' is " + Dim2(a.values) + ", expected " +
                        std::to_string(n) + "x1");
    return a.values.col(0);
  };

  utt.sp = take_matrix("sp", kSpDim);
  utt.energy = take_vector("energy");
  utt.mcc = take_matrix("mcc", kMccDim);
  utt.ap = take_matrix("ap", kSpDim);
  utt.f0 = take_vector("f0");
  utt.contf0 = take_vector("contf0");
  utt.uv = take_vector("uv");
  ValidateFeatures(utt);
  return utt;
}

}  // namespace features
}  // namespace vclab
