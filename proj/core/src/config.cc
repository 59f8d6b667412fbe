// core/src/config.cc

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

#include "vclab/config.h"

#include <algorithm>
#include <cstdio>
#include <functional>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "vclab/error.h"

namespace vclab {
namespace config {

namespace {

struct RawConfig {
  // section -> key -> value, with file positions for error messages
  std::map<std::string, std::map<std::string, std::string>> sections;
};

std::string Trim(const std::string &s) {
  size_t b = s.find_first_not_of(" \t\r");
  size_t e = s.find_last_not_of(" \t\r");
  return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

RawConfig ParseIni(const std::string &text, const std::string &origin) {
  RawConfig raw;
  std::istringstream is(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    std::string t = Trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    if (t.front() == '[') {
      if (t.back() != ']')
        throw ConfigError(origin + ":" + std::to_string(lineno) + ": unterminated section");
      section = Trim(t.substr(1, t.size() - 2));
      if (section.empty())
        throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty section name");
      raw.sections[section];
      continue;
    }
    auto eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
    if (section.empty())
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": key before any [section]");
    std::string key = Trim(t.substr(0, eq));
    std::string value = Trim(t.substr(eq + 1));
    if (key.empty())
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
    if (raw.sections[section].count(key))
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": duplicate key '" + section +
                        "." + key + "'");
    raw.sections[section][key] = value;
  }
  return raw;
}

// Collects every validation problem before failing.
class Checker {
 public:
  explicit Checker(RawConfig raw) : raw_(std::move(raw)) {}

  bool Has(const std::string &section, const std::string &key) {
    seen_[section].insert(key);
    auto s = raw_.sections.find(section);
    return s != raw_.sections.end() && s->second.count(key) > 0;
  }

  std::string Get(const std::string &section, const std::string &key) {
    return raw_.sections.at(section).at(key);
  }

  template <typename Fn>
  void Apply(const std::string &section, const std::string &key, Fn fn) {
    if (!Has(section, key)) return;
    try {
      fn(Get(section, key));
    } catch (const std::exception &e) {
      errors_.push_back(section + "." + key + ": " + e.what());
    }
  }

  void AddError(const std::string &msg) { errors_.push_back(msg); }

  // After all Apply calls: reject unknown sections/keys and throw everything.
  void Finish(const std::string &origin) {
    for (const auto &[section, keys] : raw_.sections) {
      auto seen = seen_.find(section);
      if (seen == seen_.end()) {
        errors_.push_back("unknown section [" + section + "]");
        continue;
      }
      for (const auto &[key, value] : keys)
        if (!seen->second.count(key)) errors_.push_back("unknown key " + section + "." + key);
    }
    if (errors_.empty()) return;
    std::sort(errors_.begin(), errors_.end());
    std::string msg = origin + ": invalid configuration:";
    for (const std::string &e : errors_) msg += "\n  " + e;
    throw ConfigError(msg);
  }

 private:
  RawConfig raw_;
  std::map<std::string, std::set<std::string>> seen_;
  std::vector<std::string> errors_;
};

long ParseInt(const std::string &v) {
  size_t used = 0;
  long out = std::stol(v, &used);
  if (used != v.size()) throw std::invalid_argument("not an integer: '" + v + "'");
  return out;
}

uint64_t ParseUint64(const std::string &v) {
  size_t used = 0;
  unsigned long long out = std::stoull(v, &used);
  if (used != v.size()) throw std::invalid_argument("not an integer: '" + v + "'");
  return out;
}

double ParseDouble(const std::string &v) {
  size_t used = 0;
  double out = std::stod(v, &used);
  if (used != v.size()) throw std::invalid_argument("not a number: '" + v + "'");
  return out;
}

bool ParseBool(const std::string &v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw std::invalid_argument("not a boolean: '" + v + "'");
}

std::vector<int> ParseIntList(const std::string &v) {
  std::vector<int> out;
  std::istringstream is(v);
  std::string item;
  while (std::getline(is, item, ',')) {
    item = Trim(item);
    if (item.empty()) throw std::invalid_argument("empty list entry");
    out.push_back(static_cast<int>(ParseInt(item)));
  }
  if (out.empty()) throw std::invalid_argument("empty list");
  return out;
}

// "spk00:spk01, spk02:spk03"
std::vector<evaluation::ConversionPair> ParsePairs(const std::string &v) {
  std::vector<evaluation::ConversionPair> out;
  std::istringstream is(v);
  std::string item;
  while (std::getline(is, item, ',')) {
    item = Trim(item);
    if (item.empty()) continue;
    auto colon = item.find(':');
    if (colon == std::string::npos)
      throw std::invalid_argument("expected 'source:target', got '" + item + "'");
    evaluation::ConversionPair pair;
    pair.source = Trim(item.substr(0, colon));
    pair.target = Trim(item.substr(colon + 1));
    if (pair.source.empty() || pair.target.empty())
      throw std::invalid_argument("empty speaker in pair '" + item + "'");
    out.push_back(pair);
  }
  if (out.empty()) throw std::invalid_argument("no pairs listed");
  return out;
}

}  // namespace

evaluation::EvalSettings ExperimentConfig::EvalSettings() const {
  evaluation::EvalSettings s;
  s.path = eval_path;
  s.f0_mode = eval_f0_mode;
  s.latent_domain = eval_latent_domain == "sp" ? model::Domain::kSp : model::Domain::kMcc;
  s.nonsilent_db = eval_nonsilent_db;
  s.threads = train.threads;
  return s;
}

ExperimentConfig ParseConfigText(const std::string &text, const std::string &origin) {
  Checker check(ParseIni(text, origin));
  ExperimentConfig c;

  // [corpus]
  check.Apply("corpus", "kind", [&](const std::string &v) {
    if (v != "toy" && v != "external") throw std::invalid_argument("expected toy|external");
    c.corpus_kind = v;
  });
  check.Apply("corpus", "dir", [&](const std::string &v) { c.corpus_dir = v; });
  check.Apply("corpus", "n_speakers",
              [&](const std::string &v) { c.toy.n_speakers = static_cast<int>(ParseInt(v)); });
  check.Apply("corpus", "n_contents",
              [&](const std::string &v) { c.toy.n_contents = static_cast<int>(ParseInt(v)); });
  check.Apply("corpus", "utterances_per_speaker", [&](const std::string &v) {
    c.toy.utterances_per_speaker = static_cast<int>(ParseInt(v));
  });
  check.Apply("corpus", "frames_min",
              [&](const std::string &v) { c.toy.frames_min = static_cast<int>(ParseInt(v)); });
  check.Apply("corpus", "frames_max",
              [&](const std::string &v) { c.toy.frames_max = static_cast<int>(ParseInt(v)); });
  check.Apply("corpus", "silence_frames", [&](const std::string &v) {
    c.toy.silence_frames = static_cast<int>(ParseInt(v));
  });
  check.Apply("corpus", "length_jitter",
              [&](const std::string &v) { c.toy.length_jitter = ParseBool(v); });
  check.Apply("corpus", "min_log_f0_separation",
              [&](const std::string &v) { c.toy.min_log_f0_separation = ParseDouble(v); });

  // [model]
  check.Apply("model", "variant",
              [&](const std::string &v) { c.arch.variant = model::VariantFromString(v); });
  check.Apply("model", "f0_conditioning",
              [&](const std::string &v) { c.arch.f0_conditioning = ParseBool(v); });
  check.Apply("model", "latent_dim",
              [&](const std::string &v) { c.arch.latent_dim = static_cast<int>(ParseInt(v)); });
  check.Apply("model", "speaker_dim", [&](const std::string &v) {
    c.arch.speaker_dim = static_cast<int>(ParseInt(v));
  });
  check.Apply("model", "fcn_channels",
              [&](const std::string &v) { c.arch.fcn_channels = ParseIntList(v); });
  check.Apply("model", "fcn_freq_strides",
              [&](const std::string &v) { c.arch.fcn_freq_strides = ParseIntList(v); });
  check.Apply("model", "fcn_kernel_freq", [&](const std::string &v) {
    c.arch.fcn_kernel_freq = static_cast<int>(ParseInt(v));
  });
  check.Apply("model", "fcn_kernel_time", [&](const std::string &v) {
    c.arch.fcn_kernel_time = static_cast<int>(ParseInt(v));
  });
  check.Apply("model", "framewise_hidden",
              [&](const std::string &v) { c.arch.framewise_hidden = ParseIntList(v); });
  check.Apply("model", "leaky_slope",
              [&](const std::string &v) { c.arch.leaky_slope = ParseDouble(v); });

  // [train]
  check.Apply("train", "batch_size", [&](const std::string &v) {
    c.train.batch_size = static_cast<int>(ParseInt(v));
  });
  check.Apply("train", "crop_frames", [&](const std::string &v) {
    c.train.crop_frames = static_cast<int>(ParseInt(v));
  });
  check.Apply("train", "lr", [&](const std::string &v) { c.train.lr = ParseDouble(v); });
  check.Apply("train", "beta1", [&](const std::string &v) { c.train.beta1 = ParseDouble(v); });
  check.Apply("train", "beta2", [&](const std::string &v) { c.train.beta2 = ParseDouble(v); });
  check.Apply("train", "max_steps",
              [&](const std::string &v) { c.train.max_steps = ParseInt(v); });
  check.Apply("train", "checkpoint_interval",
              [&](const std::string &v) { c.train.checkpoint_interval = ParseInt(v); });
  check.Apply("train", "log_interval",
              [&](const std::string &v) { c.train.log_interval = ParseInt(v); });
  check.Apply("train", "threads",
              [&](const std::string &v) { c.train.threads = static_cast<int>(ParseInt(v)); });

  // [eval]
  check.Apply("eval", "pairs", [&](const std::string &v) { c.eval_pairs = ParsePairs(v); });
  check.Apply("eval", "path",
              [&](const std::string &v) { c.eval_path = conversion::PathFromString(v); });
  check.Apply("eval", "f0_mode",
              [&](const std::string &v) { c.eval_f0_mode = conversion::F0ModeFromString(v); });
  check.Apply("eval", "latent_domain", [&](const std::string &v) {
    if (v != "sp" && v != "mcc") throw std::invalid_argument("expected sp|mcc");
    c.eval_latent_domain = v;
  });
  check.Apply("eval", "nonsilent_db",
              [&](const std::string &v) { c.eval_nonsilent_db = ParseDouble(v); });
  check.Apply("eval", "probe_steps",
              [&](const std::string &v) { c.probe.steps = static_cast<int>(ParseInt(v)); });
  check.Apply("eval", "probe_batch_size", [&](const std::string &v) {
    c.probe.batch_size = static_cast<int>(ParseInt(v));
  });
  check.Apply("eval", "probe_crop_frames", [&](const std::string &v) {
    c.probe.crop_frames = static_cast<int>(ParseInt(v));
  });
  check.Apply("eval", "probe_lr", [&](const std::string &v) { c.probe.lr = ParseDouble(v); });
  check.Apply("eval", "probe_channels",
              [&](const std::string &v) { c.probe.channels = ParseIntList(v); });
  check.Apply("eval", "probe_freq_strides",
              [&](const std::string &v) { c.probe.freq_strides = ParseIntList(v); });
  check.Apply("eval", "probe_kernel_freq", [&](const std::string &v) {
    c.probe.kernel_freq = static_cast<int>(ParseInt(v));
  });
  check.Apply("eval", "probe_kernel_time", [&](const std::string &v) {
    c.probe.kernel_time = static_cast<int>(ParseInt(v));
  });

  // [output]
  check.Apply("output", "dir", [&](const std::string &v) { c.output_dir = v; });
  check.Apply("output", "seed", [&](const std::string &v) {
    c.seed = ParseUint64(v);
  });

  // Cross-field checks join the same error report.
  if (c.corpus_kind == "external" && c.corpus_dir.empty())
    check.AddError("corpus.dir: required when corpus.kind = external");
  if (c.train.batch_size < 1) check.AddError("train.batch_size: must be positive");
  if (c.train.crop_frames < 1) check.AddError("train.crop_frames: must be positive");
  if (c.train.max_steps < 0) check.AddError("train.max_steps: must be non-negative");
  try {
    c.arch.Validate();
  } catch (const std::exception &e) {
    check.AddError(std::string("model: ") + e.what());
  }
  check.Finish(origin);

  // keep derived seeds consistent
  c.toy.seed = c.seed;
  c.train.seed = c.seed;
  c.probe.seed = c.seed;
  c.probe.threads = c.train.threads;
  c.probe.leaky_slope = c.arch.leaky_slope;
  return c;
}

ExperimentConfig ParseConfigFile(const std::string &path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file: " + path);
  std::stringstream buffer;
  buffer << is.rdbuf();
  return ParseConfigText(buffer.str(), path);
}

namespace {

std::string JoinInts(const std::vector<int> &v) {
  std::string out;
  for (size_t i = 0; i < v.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(v[i]);
  }
  return out;
}

std::string FormatDouble(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

std::string CanonicalConfig(const ExperimentConfig &c) {
  // Every result-affecting key in sorted section.key order.  Seed and
  // output dir are provenance, not identity.
  std::vector<std::pair<std::string, std::string>> kv;
  kv.emplace_back("corpus.kind", c.corpus_kind);
  kv.emplace_back("corpus.dir", c.corpus_dir);
  kv.emplace_back("corpus.n_speakers", std::to_string(c.toy.n_speakers));
  kv.emplace_back("corpus.n_contents", std::to_string(c.toy.n_contents));
  kv.emplace_back("corpus.utterances_per_speaker",
                  std::to_string(c.toy.utterances_per_speaker));
  kv.emplace_back("corpus.frames_min", std::to_string(c.toy.frames_min));
  kv.emplace_back("corpus.frames_max", std::to_string(c.toy.frames_max));
  kv.emplace_back("corpus.silence_frames", std::to_string(c.toy.silence_frames));
  kv.emplace_back("corpus.length_jitter", c.toy.length_jitter ? "true" : "false");
  kv.emplace_back("corpus.min_log_f0_separation", FormatDouble(c.toy.min_log_f0_separation));
  kv.emplace_back("model.variant", model::VariantToString(c.arch.variant));
  kv.emplace_back("model.f0_conditioning", c.arch.f0_conditioning ? "true" : "false");
  kv.emplace_back("model.latent_dim", std::to_string(c.arch.latent_dim));
  kv.emplace_back("model.speaker_dim", std::to_string(c.arch.speaker_dim));
  kv.emplace_back("model.fcn_channels", JoinInts(c.arch.fcn_channels));
  kv.emplace_back("model.fcn_freq_strides", JoinInts(c.arch.fcn_freq_strides));
  kv.emplace_back("model.fcn_kernel_freq", std::to_string(c.arch.fcn_kernel_freq));
  kv.emplace_back("model.fcn_kernel_time", std::to_string(c.arch.fcn_kernel_time));
  kv.emplace_back("model.framewise_hidden", JoinInts(c.arch.framewise_hidden));
  kv.emplace_back("model.leaky_slope", FormatDouble(c.arch.leaky_slope));
  kv.emplace_back("train.batch_size", std::to_string(c.train.batch_size));
  kv.emplace_back("train.crop_frames", std::to_string(c.train.crop_frames));
  kv.emplace_back("train.lr", FormatDouble(c.train.lr));
  kv.emplace_back("train.beta1", FormatDouble(c.train.beta1));
  kv.emplace_back("train.beta2", FormatDouble(c.train.beta2));
  kv.emplace_back("train.max_steps", std::to_string(c.train.max_steps));
  kv.emplace_back("train.checkpoint_interval", std::to_string(c.train.checkpoint_interval));
  std::string pairs;
  for (size_t i = 0; i < c.eval_pairs.size(); ++i) {
    if (i) pairs += ",";
    pairs += c.eval_pairs[i].source + ":" + c.eval_pairs[i].target;
  }
  kv.emplace_back("eval.pairs", pairs);
  kv.emplace_back("eval.path", conversion::PathToString(c.eval_path));
  kv.emplace_back("eval.f0_mode", conversion::F0ModeToString(c.eval_f0_mode));
  kv.emplace_back("eval.latent_domain", c.eval_latent_domain);
  kv.emplace_back("eval.nonsilent_db", FormatDouble(c.eval_nonsilent_db));
  kv.emplace_back("eval.probe_steps", std::to_string(c.probe.steps));
  kv.emplace_back("eval.probe_batch_size", std::to_string(c.probe.batch_size));
  kv.emplace_back("eval.probe_crop_frames", std::to_string(c.probe.crop_frames));
  kv.emplace_back("eval.probe_lr", FormatDouble(c.probe.lr));
  kv.emplace_back("eval.probe_channels", JoinInts(c.probe.channels));
  kv.emplace_back("eval.probe_freq_strides", JoinInts(c.probe.freq_strides));
  kv.emplace_back("eval.probe_kernel_freq", std::to_string(c.probe.kernel_freq));
  kv.emplace_back("eval.probe_kernel_time", std::to_string(c.probe.kernel_time));
  std::sort(kv.begin(), kv.end());
  std::string out;
  for (const auto &[k, v] : kv) out += k + "=" + v + "\n";
  return out;
}

std::string ConfigHash(const ExperimentConfig &config) {
  const std::string canonical = CanonicalConfig(config);
  uint64_t hash = 1469598103934665603ull;  // FNV-1a 64
  for (unsigned char ch : canonical) {
    hash ^= ch;
    hash *= 1099511628211ull;
  }
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(hash));
  return buf;
}

}  // namespace config
}  // namespace vclab
