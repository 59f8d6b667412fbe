// tests/features_test.cc

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

#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "vclab/container.h"
#include "vclab/error.h"
#include "vclab/rng.h"

using namespace vclab;
using namespace vclab::features;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

VectorXd PaddedFrame(std::initializer_list<double> head) {
  VectorXd v = VectorXd::Zero(kSpDim);
  int i = 0;
  for (double x : head) v[i++] = x;
  return v;
}

// Strictly positive random frame, already unit-sum.
VectorXd RandomUnitFrame(Rng *rng) {
  VectorXd v(kSpDim);
  for (int i = 0; i < kSpDim; ++i) v[i] = 0.05 + rng->Uniform();
  return v / v.sum();
}

}  // namespace

TEST_CASE("NormalizeSp splits scale from shape") {
  auto [unit, energy] = NormalizeSp(PaddedFrame({2.0, 3.0, 5.0}));
  CHECK(energy == doctest::Approx(10.0).epsilon(1e-15));
  CHECK(unit[0] == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(unit[1] == doctest::Approx(0.3).epsilon(1e-15));
  CHECK(unit[2] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(unit.tail(kSpDim - 3).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("NormalizeSp of a uniform frame") {
  const double v = 0.37;
  auto [unit, energy] = NormalizeSp(VectorXd::Constant(kSpDim, v));
  CHECK(energy == doctest::Approx(kSpDim * v).epsilon(1e-14));
  for (int i = 0; i < kSpDim; ++i) CHECK(unit[i] == doctest::Approx(1.0 / kSpDim).epsilon(1e-14));
}

TEST_CASE("NormalizeSp rejects degenerate frames") {
  CHECK_THROWS_AS(NormalizeSp(VectorXd::Zero(kSpDim)), DataError);
  VectorXd neg = PaddedFrame({1.0});
  neg[5] = -0.25;
  CHECK_THROWS_AS(NormalizeSp(neg), DataError);
}

TEST_CASE("normalize then de-normalize is machine-precision exact") {
  Rng rng(11);
  for (int trial = 0; trial < 25; ++trial) {
    VectorXd raw(kSpDim);
    for (int i = 0; i < kSpDim; ++i) raw[i] = rng.Uniform() * 10.0 + 1e-6;
    auto [unit, energy] = NormalizeSp(raw);
    CHECK(unit.sum() == doctest::Approx(1.0).epsilon(1e-12));
    VectorXd back = energy * unit;
    for (int i = 0; i < kSpDim; ++i)
      CHECK(back[i] == doctest::Approx(raw[i]).epsilon(1e-14));
  }
}

TEST_CASE("MCC of a spectrally flat frame is a pure gain coefficient") {
  MccAnalyzer analyzer;
  MatrixXd sp = MatrixXd::Constant(1, kSpDim, 1.0 / kSpDim);
  MatrixXd mcc = analyzer.Extract(sp);
  REQUIRE(mcc.cols() == kMccDim);
  CHECK(std::abs(mcc(0, 0)) > 1e-3);  // the log level, ln(1/513)
  CHECK(mcc(0, 0) == doctest::Approx(std::log(1.0 / kSpDim)).epsilon(1e-10));
  for (int d = 1; d < kMccDim; ++d) CHECK(std::abs(mcc(0, d)) < 1e-8);
}

TEST_CASE("MCC output width follows the order") {
  Rng rng(12);
  MatrixXd sp(3, kSpDim);
  for (int t = 0; t < 3; ++t) sp.row(t) = RandomUnitFrame(&rng).transpose();
  CHECK(MccAnalyzer().Extract(sp).cols() == 35);
  CHECK(MccAnalyzer(20).Extract(sp).cols() == 20);
}

TEST_CASE("MCC order bounds are enforced") {
  CHECK_THROWS_AS(MccAnalyzer(1), ConfigError);
  CHECK_THROWS_AS(MccAnalyzer(514), ConfigError);
  CHECK_NOTHROW(MccAnalyzer(2));
  CHECK_NOTHROW(MccAnalyzer(513));
}

TEST_CASE("MCC round-trip through the warped log spectrum is idempotent") {
  MccAnalyzer analyzer;
  Rng rng(13);
  MatrixXd sp(4, kSpDim);
  for (int t = 0; t < 4; ++t) sp.row(t) = RandomUnitFrame(&rng).transpose();
  MatrixXd mcc = analyzer.Extract(sp);
  MatrixXd rebuilt = analyzer.ReconstructWarpedLog(mcc);
  MatrixXd again = analyzer.ExtractFromWarpedLog(rebuilt);
  CHECK((again - mcc).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("scaling the spectrum moves only coefficient 0") {
  MccAnalyzer analyzer;
  Rng rng(14);
  for (double k : {0.5, 2.0, 17.0}) {
    MatrixXd sp(1, kSpDim);
    sp.row(0) = RandomUnitFrame(&rng).transpose();
    MatrixXd base = analyzer.Extract(sp);
    MatrixXd scaled = analyzer.Extract(k * sp);
    CHECK(scaled(0, 0) - base(0, 0) == doctest::Approx(std::log(k)).epsilon(1e-9));
    for (int d = 1; d < kMccDim; ++d)
      CHECK(scaled(0, d) == doctest::Approx(base(0, d)).epsilon(1e-9));
  }
}

TEST_CASE("ContinuousF0 interpolates interior gaps linearly") {
  VectorXd f0(4);
  f0 << 100.0, 0.0, 0.0, 160.0;
  auto [contf0, uv] = ContinuousF0(f0);
  CHECK(contf0[0] == doctest::Approx(100.0));
  CHECK(contf0[1] == doctest::Approx(120.0));
  CHECK(contf0[2] == doctest::Approx(140.0));
  CHECK(contf0[3] == doctest::Approx(160.0));
  CHECK(uv[0] == 1.0);
  CHECK(uv[1] == 0.0);
  CHECK(uv[2] == 0.0);
  CHECK(uv[3] == 1.0);
}

TEST_CASE("ContinuousF0 on fully voiced input is the identity") {
  VectorXd f0(5);
  f0 << 100, 110, 120, 115, 105;
  auto [contf0, uv] = ContinuousF0(f0);
  CHECK((contf0 - f0).cwiseAbs().maxCoeff() == 0.0);
  CHECK(uv.minCoeff() == 1.0);
}

TEST_CASE("ContinuousF0 holds edges at the nearest voiced value") {
  VectorXd f0(3);
  f0 << 0.0, 0.0, 150.0;
  auto [contf0, uv] = ContinuousF0(f0);
  CHECK(contf0[0] == 150.0);
  CHECK(contf0[1] == 150.0);
  CHECK(contf0[2] == 150.0);
  CHECK(uv[0] == 0.0);
  CHECK(uv[2] == 1.0);
}

TEST_CASE("ContinuousF0 rejects all-unvoiced input") {
  CHECK_THROWS_AS(ContinuousF0(VectorXd::Zero(6)), DataError);
}

TEST_CASE("ContinuousF0 is idempotent on its own voiced projection") {
  Rng rng(15);
  for (int trial = 0; trial < 20; ++trial) {
    int n = 5 + rng.UniformInt(40);
    VectorXd f0(n);
    bool any = false;
    for (int t = 0; t < n; ++t) {
      bool voiced = rng.Uniform() < 0.6;
      f0[t] = voiced ? 80.0 + 200.0 * rng.Uniform() : 0.0;
      any |= voiced;
    }
    if (!any) f0[n / 2] = 120.0;
    auto [contf0, uv] = ContinuousF0(f0);
    VectorXd masked = contf0.cwiseProduct(uv);
    auto [contf0_again, uv_again] = ContinuousF0(masked);
    CHECK((contf0_again - contf0).cwiseAbs().maxCoeff() == 0.0);
    CHECK((uv_again - uv).cwiseAbs().maxCoeff() == 0.0);
  }
}

namespace {

UtteranceFeatures TinyUtterance(const VectorXd &f0, const std::string &speaker = "spkA") {
  UtteranceFeatures utt;
  const int n = static_cast<int>(f0.size());
  utt.speaker = speaker;
  utt.sp = MatrixXd::Constant(n, kSpDim, 1.0 / kSpDim);
  utt.energy = VectorXd::Constant(n, 2.0);
  utt.ap = MatrixXd::Constant(n, kSpDim, 0.5);
  utt.f0 = f0;
  auto [contf0, uv] = ContinuousF0(f0);
  utt.contf0 = contf0;
  utt.uv = uv;
  utt.mcc = MccAnalyzer().Extract(utt.sp);
  return utt;
}

}  // namespace

TEST_CASE("F0 statistics use the population convention over voiced frames") {
  VectorXd f0(3);
  f0 << 100.0, 100.0 * std::exp(1.0), 0.0;
  F0Stats stats = ComputeF0Statistics({TinyUtterance(f0)}, "spkA");
  CHECK(stats.log_mean == doctest::Approx(std::log(100.0) + 0.5).epsilon(1e-12));
  CHECK(stats.log_std == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(stats.voiced_frame_count == 2);
}

TEST_CASE("F0 statistics ignore unvoiced frames entirely") {
  VectorXd f0a(4), f0b(6);
  f0a << 90, 140, 0, 180;
  f0b << 90, 140, 0, 180, 0, 0;
  F0Stats a = ComputeF0Statistics({TinyUtterance(f0a)});
  F0Stats b = ComputeF0Statistics({TinyUtterance(f0b)});
  CHECK(a.log_mean == b.log_mean);
  CHECK(a.log_std == b.log_std);
  CHECK(a.voiced_frame_count == b.voiced_frame_count);
}

TEST_CASE("F0 statistics reject degenerate corpora") {
  VectorXd constant(3);
  constant << 100, 100, 100;
  CHECK_THROWS_AS(ComputeF0Statistics({TinyUtterance(constant)}), DataError);
  VectorXd single(2);
  single << 100, 0;
  CHECK_THROWS_AS(ComputeF0Statistics({TinyUtterance(single)}), DataError);
}

TEST_CASE("ConvertF0 identity transform is exact") {
  F0Stats s{"a", std::log(140.0), 0.3, 100};
  VectorXd f0(4);
  f0 << 101.7, 0.0, 155.3, 98.2;
  VectorXd out = ConvertF0(f0, s, s);
  for (int t = 0; t < 4; ++t) CHECK(out[t] == f0[t]);
}

TEST_CASE("ConvertF0 closed-form cases") {
  F0Stats src{"a", std::log(100.0), 0.4, 10};
  F0Stats tgt{"b", std::log(200.0), 0.4, 10};
  VectorXd f0(2);
  f0 << 100.0, 0.0;
  VectorXd out = ConvertF0(f0, src, tgt);
  CHECK(out[0] == doctest::Approx(200.0).epsilon(1e-12));
  CHECK(out[1] == 0.0);  // unvoiced stays unvoiced

  VectorXd high(1);
  high << 100.0 * std::exp(0.4);
  VectorXd out2 = ConvertF0(high, src, tgt);
  CHECK(out2[0] == doctest::Approx(200.0 * std::exp(0.4)).epsilon(1e-12));
}

TEST_CASE("ConvertF0 with swapped stats inverts within 1e-9") {
  F0Stats src{"a", std::log(120.0), 0.25, 10};
  F0Stats tgt{"b", std::log(210.0), 0.45, 10};
  Rng rng(16);
  VectorXd f0(50);
  for (int t = 0; t < 50; ++t) f0[t] = rng.Uniform() < 0.3 ? 0.0 : 80.0 + 200.0 * rng.Uniform();
  VectorXd there = ConvertF0(f0, src, tgt);
  VectorXd back = ConvertF0(there, tgt, src);
  for (int t = 0; t < 50; ++t) {
    if (f0[t] == 0.0) {
      CHECK(back[t] == 0.0);
    } else {
      CHECK(std::abs(back[t] - f0[t]) / f0[t] < 1e-9);
    }
  }
}

TEST_CASE("converting the stats-producing corpus lands on the target stats") {
  Rng rng(17);
  VectorXd f0(400);
  for (int t = 0; t < 400; ++t)
    f0[t] = rng.Uniform() < 0.25 ? 0.0 : std::exp(4.7 + 0.35 * rng.Normal());
  UtteranceFeatures utt = TinyUtterance(f0);
  F0Stats src = ComputeF0Statistics({utt});
  F0Stats tgt{"b", std::log(240.0), 0.2, 10};
  UtteranceFeatures converted = utt;
  converted.f0 = ConvertF0(utt.f0, src, tgt);
  auto [contf0, uv] = ContinuousF0(converted.f0);
  converted.contf0 = contf0;
  converted.uv = uv;
  F0Stats result = ComputeF0Statistics({converted});
  CHECK(std::abs(result.log_mean - tgt.log_mean) < 1e-6);
  CHECK(std::abs(result.log_std - tgt.log_std) < 1e-6);
}

TEST_CASE("feature container round-trips bit-exactly at storage width") {
  Rng rng(18);
  VectorXd f0(7);
  f0 << 100, 0, 120, 0, 0, 140, 130;
  UtteranceFeatures utt = TinyUtterance(f0, "spk03");
  for (int t = 0; t < 7; ++t) {
    VectorXd raw(kSpDim);
    for (int i = 0; i < kSpDim; ++i) raw[i] = 0.01 + rng.Uniform();
    auto [unit, energy] = NormalizeSp(raw);
    utt.sp.row(t) = unit.transpose();
    utt.energy[t] = energy;
  }
  utt.mcc = MccAnalyzer().Extract(utt.sp);

  const std::string dir = (std::filesystem::temp_directory_path() / "vclab_feat_test").string();
  std::filesystem::create_directories(dir);
  const std::string path = dir + "/utt.vcf";
  SaveFeatures(utt, path);
  UtteranceFeatures once = LoadFeatures(path);
  CHECK(once.speaker == "spk03");
  CHECK(once.NumFrames() == 7);

  // After one float32 quantization, further round trips are the identity.
  SaveFeatures(once, path);
  UtteranceFeatures twice = LoadFeatures(path);
  CHECK((once.sp - twice.sp).cwiseAbs().maxCoeff() == 0.0);
  CHECK((once.mcc - twice.mcc).cwiseAbs().maxCoeff() == 0.0);
  CHECK((once.ap - twice.ap).cwiseAbs().maxCoeff() == 0.0);
  CHECK((once.energy - twice.energy).cwiseAbs().maxCoeff() == 0.0);
  CHECK((once.f0 - twice.f0).cwiseAbs().maxCoeff() == 0.0);
  CHECK((once.contf0 - twice.contf0).cwiseAbs().maxCoeff() == 0.0);
  CHECK((once.uv - twice.uv).cwiseAbs().maxCoeff() == 0.0);
  std::filesystem::remove_all(dir);
}

TEST_CASE("loading reports missing arrays and frame-count mismatches by name") {
  VectorXd f0(3);
  f0 << 100, 0, 150;
  UtteranceFeatures utt = TinyUtterance(f0);
  const std::string dir = (std::filesystem::temp_directory_path() / "vclab_feat_err").string();
  std::filesystem::create_directories(dir);
  const std::string path = dir + "/utt.vcf";
  SaveFeatures(utt, path);

  // Drop the uv array: rewrite the container without it.
  auto arrays = ReadArrayFile(path, false);
  std::vector<NamedArray> without;
  for (auto &a : arrays)
    if (a.name != "uv") without.push_back(a);
  WriteArrayFile(path, without, false);
  try {
    LoadFeatures(path);
    FAIL("expected FormatError");
  } catch (const FormatError &e) {
    CHECK(std::string(e.what()).find("uv") != std::string::npos);
  }

  // Shrink f0 so frame counts disagree.
  SaveFeatures(utt, path);
  arrays = ReadArrayFile(path, false);
  for (auto &a : arrays)
    if (a.name == "f0") a.values = a.values.topRows(2).eval();
  WriteArrayFile(path, arrays, false);
  CHECK_THROWS_AS(LoadFeatures(path), FormatError);
  std::filesystem::remove_all(dir);
}
