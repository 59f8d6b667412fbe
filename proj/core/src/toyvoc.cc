// core/src/toyvoc.cc

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

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "vclab/error.h"
#include "vclab/rng.h"

namespace vclab {
namespace toyvoc {

namespace {

using features::UtteranceFeatures;
using nlohmann::json;

constexpr double kSampleRateHz = 22050.0;
constexpr double kFramePeriodMs = 5.0;
constexpr double kNyquistHz = kSampleRateHz / 2.0;
constexpr double kSilenceLoudness = 2e-4;  // keeps pads below the -30 dB gate

// Stream tags for counter-based seed derivation.
enum : uint64_t { kStreamSpeaker = 1, kStreamContent = 2, kStreamUtterance = 3 };

struct SpeakerParams {
  double tilt_coef = 0.0;       // spectral tilt steepness
  double formant_shift = 1.0;   // multiplies content formant positions
  double resonance_hz = 0.0;    // broad speaker-specific bump
};

struct Segment {
  bool voiced = true;
  double f1_hz = 0.0, f2_hz = 0.0;  // formant-like bump centers
  double b1_hz = 0.0, b2_hz = 0.0;  // bump widths
  double energy = 1.0;
  double f0_pos = 0.5;              // target position inside the speaker range
};

struct ContentTemplate {
  std::vector<Segment> segments;
  int body_frames = 0;
};

SpeakerParams MakeSpeakerParams(uint64_t seed, int s) {
  Rng rng(MixSeed(MixSeed(seed, kStreamSpeaker), static_cast<uint64_t>(s)));
  SpeakerParams p;
  p.tilt_coef = 1.2 + 1.6 * rng.Uniform();
  p.formant_shift = 0.88 + 0.26 * rng.Uniform();
  p.resonance_hz = 2800.0 + 1400.0 * rng.Uniform();
  return p;
}

ContentTemplate MakeContentTemplate(const ToyCorpusSpec &spec, int c) {
  Rng rng(MixSeed(MixSeed(spec.seed, kStreamContent), static_cast<uint64_t>(c)));
  ContentTemplate tpl;
  int n_segments = 4 + rng.UniformInt(3);
  tpl.segments.resize(n_segments);
  for (Segment &seg : tpl.segments) {
    seg.voiced = rng.Uniform() < 0.75;
    seg.f1_hz = 260.0 + 640.0 * rng.Uniform();
    seg.f2_hz = 1100.0 + 1500.0 * rng.Uniform();
    seg.b1_hz = 80.0 + 70.0 * rng.Uniform();
    seg.b2_hz = 120.0 + 130.0 * rng.Uniform();
    seg.energy = 0.6 + 0.4 * rng.Uniform();
    seg.f0_pos = 0.15 + 0.7 * rng.Uniform();
  }
  // Guarantee at least one voiced and one interior unvoiced segment so
  // every utterance has both kinds of run.
  tpl.segments.front().voiced = true;
  bool any_unvoiced = false;
  for (const Segment &seg : tpl.segments) any_unvoiced |= !seg.voiced;
  if (!any_unvoiced) tpl.segments[n_segments / 2].voiced = false;

  int span = spec.frames_max - spec.frames_min;
  tpl.body_frames = spec.frames_min + (span > 0 ? rng.UniformInt(span + 1) : 0);
  return tpl;
}

void AddGaussianBump(Eigen::VectorXd *spec, double center_hz, double sigma_hz,
                     double amplitude) {
  const int bins = static_cast<int>(spec->size());
  const double bin_hz = kNyquistHz / (bins - 1);
  int lo = std::max(0, static_cast<int>(std::floor((center_hz - 4.0 * sigma_hz) / bin_hz)));
  int hi = std::min(bins - 1, static_cast<int>(std::ceil((center_hz + 4.0 * sigma_hz) / bin_hz)));
  for (int k = lo; k <= hi; ++k) {
    double d = k * bin_hz - center_hz;
    (*spec)[k] += amplitude * std::exp(-d * d / (2.0 * sigma_hz * sigma_hz));
  }
}

double Smoothstep(double x) {
  x = std::clamp(x, 0.0, 1.0);
  return x * x * (3.0 - 2.0 * x);
}

// Piecewise-smooth interpolation of per-segment values at fractional
// segment position `pos` (in units of segments).
double SegmentInterp(const std::vector<double> &values, double pos) {
  const int n = static_cast<int>(values.size());
  if (pos <= 0.0) return values.front();
  if (pos >= n - 1) return values.back();
  int i = static_cast<int>(std::floor(pos));
  double f = Smoothstep(pos - i);
  return values[i] * (1.0 - f) + values[i + 1] * f;
}

}  // namespace

const ToySpeaker &ToyCorpus::SpeakerById(const std::string &id) const {
  for (const ToySpeaker &s : speakers)
    if (s.id == id) return s;
  throw DataError("unknown toy speaker: " + id);
}

std::vector<const UtteranceFeatures *> ToyCorpus::UtterancesOfSpeaker(int speaker_index) const {
  std::vector<const UtteranceFeatures *> out;
  for (const ToyUtterance &u : utterances)
    if (u.speaker_index == speaker_index) out.push_back(&u.feats);
  return out;
}

ToyCorpusSpec ResolveSpec(const ToyCorpusSpec &spec) {
  ToyCorpusSpec out = spec;
  if (out.n_speakers < 2) throw ConfigError("toy corpus needs at least 2 speakers");
  if (out.n_contents < 1) throw ConfigError("toy corpus needs at least 1 content");
  if (out.utterances_per_speaker < out.n_contents)
    throw ConfigError("utterances_per_speaker must cover every content template");
  if (out.frames_min < 16 || out.frames_max < out.frames_min)
    throw ConfigError("invalid frames_per_utterance range");
  if (out.silence_frames < 1) throw ConfigError("silence_frames must be >= 1");
  if (out.f0_range_hz.empty()) {
    // Geometric ladder: adjacent speakers sit ln(1.25) apart in log-F0.
    for (int s = 0; s < out.n_speakers; ++s) {
      double lo = 110.0 * std::pow(1.25, s);
      out.f0_range_hz.emplace_back(lo, lo * 1.45);
    }
  }
  if (static_cast<int>(out.f0_range_hz.size()) != out.n_speakers)
    throw ConfigError("f0_range_hz must list one (min,max) per speaker");
  for (auto &[lo, hi] : out.f0_range_hz)
    if (!(lo > 0.0) || !(hi > lo)) throw ConfigError("invalid f0 range");
  return out;
}

ToyCorpus GenerateCorpus(const ToyCorpusSpec &raw_spec) {
  const ToyCorpusSpec spec = ResolveSpec(raw_spec);
  ToyCorpus corpus;
  corpus.spec = spec;

  features::MccAnalyzer analyzer;

  std::vector<SpeakerParams> spk_params;
  for (int s = 0; s < spec.n_speakers; ++s) {
    ToySpeaker sp;
    char buf[16];
    std::snprintf(buf, sizeof(buf), "spk%02d", s);
    sp.id = buf;
    sp.f0_min_hz = spec.f0_range_hz[s].first;
    sp.f0_max_hz = spec.f0_range_hz[s].second;
    sp.gender = std::sqrt(sp.f0_min_hz * sp.f0_max_hz) < 185.0 ? "M" : "F";
    corpus.speakers.push_back(sp);
    spk_params.push_back(MakeSpeakerParams(spec.seed, s));
  }

  std::vector<ContentTemplate> templates;
  for (int c = 0; c < spec.n_contents; ++c) templates.push_back(MakeContentTemplate(spec, c));

  const int bins = features::kSpDim;
  const double bin_hz = kNyquistHz / (bins - 1);

  for (int s = 0; s < spec.n_speakers; ++s) {
    const SpeakerParams &sp = spk_params[s];
    const double ln_lo = std::log(spec.f0_range_hz[s].first);
    const double ln_span = std::log(spec.f0_range_hz[s].second) - ln_lo;

    // Speaker tilt with a broad personal resonance, reused for all frames.
    Eigen::VectorXd tilt(bins);
    for (int k = 0; k < bins; ++k) {
      double f = k * bin_hz;
      tilt[k] = std::exp(-sp.tilt_coef * f / kNyquistHz) *
                (1.0 + 0.8 * std::exp(-(f - sp.resonance_hz) * (f - sp.resonance_hz) /
                                      (2.0 * 600.0 * 600.0)));
    }

    for (int u = 0; u < spec.utterances_per_speaker; ++u) {
      const int c = u % spec.n_contents;
      const int take = u / spec.n_contents;
      const ContentTemplate &tpl = templates[c];
      Rng rng(MixSeed(MixSeed(MixSeed(spec.seed, kStreamUtterance),
                              static_cast<uint64_t>(s) * 7919u + static_cast<uint64_t>(c)),
                      static_cast<uint64_t>(take)));

      int body = tpl.body_frames;
      if (spec.length_jitter) body = std::max(16, body + rng.UniformInt(17) - 8);
      const int n = body + 2 * spec.silence_frames;
      const int n_segments = static_cast<int>(tpl.segments.size());

      const double vibrato_phase = 2.0 * M_PI * rng.Uniform();
      const double take_shift = 0.04 * (rng.Uniform() - 0.5);
      const double take_loudness = 0.9 + 0.2 * rng.Uniform();

      std::vector<double> f0_pos(n_segments), energies(n_segments);
      std::vector<double> f1(n_segments), f2(n_segments), b1(n_segments), b2(n_segments);
      for (int i = 0; i < n_segments; ++i) {
        f0_pos[i] = tpl.segments[i].f0_pos;
        energies[i] = tpl.segments[i].energy;
        f1[i] = tpl.segments[i].f1_hz;
        f2[i] = tpl.segments[i].f2_hz;
        b1[i] = tpl.segments[i].b1_hz;
        b2[i] = tpl.segments[i].b2_hz;
      }

      UtteranceFeatures feats;
      feats.speaker = corpus.speakers[s].id;
      feats.frame_period_ms = kFramePeriodMs;
      feats.sample_rate_hz = kSampleRateHz;
      feats.sp.resize(n, bins);
      feats.energy.resize(n);
      feats.ap.resize(n, bins);
      feats.f0.resize(n);
      feats.uv.resize(n);
      Eigen::VectorXd true_contour(n);

      for (int t = 0; t < n; ++t) {
        const bool in_body = t >= spec.silence_frames && t < n - spec.silence_frames;
        const int tb = t - spec.silence_frames;
        // fractional segment position over the body
        double pos = in_body ? (static_cast<double>(tb) / std::max(1, body - 1)) * (n_segments - 1)
                             : (t < spec.silence_frames ? 0.0 : n_segments - 1.0);

        double m = SegmentInterp(f0_pos, pos) + 0.02 * std::sin(2.0 * M_PI * t / 19.0 + vibrato_phase) +
                   take_shift;
        double f0t = std::exp(ln_lo + ln_span * std::clamp(m, 0.0, 1.0));
        true_contour[t] = f0t;

        int seg_idx = std::clamp(static_cast<int>(std::lround(pos)), 0, n_segments - 1);
        bool voiced = in_body && tpl.segments[seg_idx].voiced;
        feats.uv[t] = voiced ? 1.0 : 0.0;
        feats.f0[t] = voiced ? f0t : 0.0;

        double loudness = take_loudness * (0.5 + 0.5 * SegmentInterp(energies, pos));
        if (in_body) {
          loudness *= 0.7 + 0.3 * std::sin(M_PI * (tb + 0.5) / body);
        } else {
          loudness = kSilenceLoudness;
        }

        // Content-driven formant envelope, shifted by the speaker.
        Eigen::VectorXd env = Eigen::VectorXd::Constant(bins, 0.2);
        AddGaussianBump(&env, SegmentInterp(f1, pos) * sp.formant_shift,
                        SegmentInterp(b1, pos), 1.0);
        AddGaussianBump(&env, SegmentInterp(f2, pos) * sp.formant_shift,
                        SegmentInterp(b2, pos), 0.75);

        // Excitation: harmonic comb when voiced, tilted broadband otherwise.
        Eigen::VectorXd exc = Eigen::VectorXd::Zero(bins);
        if (voiced) {
          double sigma = std::max(0.10 * f0t, 28.0);
          int max_h = std::min(12, static_cast<int>(4800.0 / f0t));
          for (int h = 1; h <= max_h; ++h)
            AddGaussianBump(&exc, h * f0t, sigma, 1.0 / (1.0 + 0.3 * (h - 1)));
          exc.array() += 0.05;
        } else {
          for (int k = 0; k < bins; ++k) exc[k] = 0.55 + 0.25 * (k * bin_hz / kNyquistHz);
        }

        Eigen::VectorXd raw(bins);
        for (int k = 0; k < bins; ++k)
          raw[k] = loudness * tilt[k] * (env[k] * exc[k]) + 1e-6 * (1.0 + tilt[k]);

        auto [unit, energy] = features::NormalizeSp(raw);
        feats.sp.row(t) = unit.transpose();
        feats.energy[t] = energy;

        for (int k = 0; k < bins; ++k) {
          double base = 0.1 + 0.8 * std::pow(k * bin_hz / kNyquistHz, 2.0);
          feats.ap(t, k) = std::clamp(voiced ? 0.45 * base : 0.25 + 0.7 * base, 0.0, 1.0);
        }
      }

      auto [contf0, uv2] = features::ContinuousF0(feats.f0);
      feats.contf0 = contf0;
      feats.mcc = analyzer.Extract(feats.sp);
      features::ValidateFeatures(feats);

      ToyUtterance toy;
      toy.feats = std::move(feats);
      toy.speaker_index = s;
      toy.content = c;
      toy.take = take;
      toy.true_f0_contour = std::move(true_contour);
      corpus.utterances.push_back(std::move(toy));
    }
  }

  // Construction-time checks: the factor design must actually hold.
  std::vector<double> log_means;
  for (int s = 0; s < spec.n_speakers; ++s) {
    double sum = 0.0;
    long count = 0;
    for (const ToyUtterance &u : corpus.utterances) {
      if (u.speaker_index != s) continue;
      for (int t = 0; t < u.feats.NumFrames(); ++t)
        if (u.feats.f0[t] > 0.0) {
          sum += std::log(u.feats.f0[t]);
          ++count;
        }
    }
    if (count < 2) throw DataError("toy speaker has fewer than 2 voiced frames");
    log_means.push_back(sum / count);
  }
  std::vector<double> sorted = log_means;
  std::sort(sorted.begin(), sorted.end());
  for (size_t i = 1; i < sorted.size(); ++i)
    if (sorted[i] - sorted[i - 1] < spec.min_log_f0_separation)
      throw DataError("toy corpus: speaker log-F0 means closer than the declared separation");

  return corpus;
}

namespace {

std::string UtteranceFileName(const ToyCorpus &corpus, const ToyUtterance &u) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s_c%02d_t%02d.vcf",
                corpus.speakers[u.speaker_index].id.c_str(), u.content, u.take);
  return buf;
}

}  // namespace

void SaveCorpus(const ToyCorpus &corpus, const std::string &dir,
                const std::vector<std::pair<std::string, std::string>> &provenance) {
  std::filesystem::create_directories(dir);
  json manifest;
  manifest["frame_period_ms"] = kFramePeriodMs;
  manifest["sample_rate_hz"] = kSampleRateHz;
  manifest["seed"] = corpus.spec.seed;
  for (const auto &[k, v] : provenance) manifest[k] = v;
  manifest["speakers"] = json::array();
  for (const ToySpeaker &s : corpus.speakers) {
    manifest["speakers"].push_back({{"id", s.id},
                                    {"gender", s.gender},
                                    {"f0_min_hz", s.f0_min_hz},
                                    {"f0_max_hz", s.f0_max_hz}});
  }
  manifest["utterances"] = json::array();
  for (const ToyUtterance &u : corpus.utterances) {
    std::string file = UtteranceFileName(corpus, u);
    features::SaveFeatures(u.feats, dir + "/" + file, provenance);
    manifest["utterances"].push_back({{"file", file},
                                      {"speaker", corpus.speakers[u.speaker_index].id},
                                      {"content", u.content},
                                      {"take", u.take},
                                      {"n_frames", u.feats.NumFrames()}});
  }
  const std::string tmp = dir + "/manifest.json.tmp";
  {
    std::ofstream os(tmp);
    if (!os) throw FormatError("cannot write " + tmp);
    os << manifest.dump(2) << "\n";
  }
  std::filesystem::rename(tmp, dir + "/manifest.json");
}

ToyCorpus LoadCorpus(const std::string &dir) {
  std::ifstream is(dir + "/manifest.json");
  if (!is) throw FormatError("missing corpus manifest: " + dir + "/manifest.json");
  json manifest;
  try {
    is >> manifest;
  } catch (const json::exception &e) {
    throw FormatError("bad corpus manifest: " + std::string(e.what()));
  }
  ToyCorpus corpus;
  corpus.spec.seed = manifest.value("seed", 0ull);
  if (!manifest.contains("speakers") || !manifest.contains("utterances"))
    throw FormatError("corpus manifest missing 'speakers' or 'utterances'");
  for (const json &s : manifest["speakers"]) {
    ToySpeaker sp;
    sp.id = s.at("id").get<std::string>();
    sp.gender = s.value("gender", "F");
    sp.f0_min_hz = s.value("f0_min_hz", 0.0);
    sp.f0_max_hz = s.value("f0_max_hz", 0.0);
    corpus.speakers.push_back(sp);
  }
  corpus.spec.n_speakers = static_cast<int>(corpus.speakers.size());
  for (const json &u : manifest["utterances"]) {
    ToyUtterance toy;
    std::string file = u.at("file").get<std::string>();
    toy.feats = features::LoadFeatures(dir + "/" + file);
    std::string spk = u.at("speaker").get<std::string>();
    toy.speaker_index = -1;
    for (size_t i = 0; i < corpus.speakers.size(); ++i)
      if (corpus.speakers[i].id == spk) toy.speaker_index = static_cast<int>(i);
    if (toy.speaker_index < 0)
      throw FormatError("manifest utterance references unknown speaker " + spk);
    toy.content = u.value("content", 0);
    toy.take = u.value("take", 0);
    toy.true_f0_contour = toy.feats.contf0;
    corpus.utterances.push_back(std::move(toy));
  }
  if (corpus.utterances.empty()) throw FormatError("corpus manifest lists no utterances");
  return corpus;
}

}  // namespace toyvoc
}  // namespace vclab
