// tests/cli_test.cc

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

// Drives the actual CLI binary end to end in a scratch directory.

#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

const char *kCliPath = VCLAB_CLI_PATH;

struct RunResult {
  int exit_code = -1;
  std::string output;  // stdout + stderr
};

RunResult Run(const std::string &args) {
  const std::string out_file =
      (fs::temp_directory_path() / "vclab_cli_out.txt").string();
  std::string cmd = std::string(kCliPath) + " " + args + " > " + out_file + " 2>&1";
  int rc = std::system(cmd.c_str());
  RunResult r;
  r.exit_code = WEXITSTATUS(rc);
  std::ifstream is(out_file);
  std::stringstream ss;
  ss << is.rdbuf();
  r.output = ss.str();
  return r;
}

std::string ReadFile(const std::string &path) {
  std::ifstream is(path);
  REQUIRE(is.good());
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

struct Workspace {
  fs::path root;
  std::string config;

  Workspace() {
    root = fs::temp_directory_path() / "vclab_cli_ws";
    fs::remove_all(root);
    fs::create_directories(root);
    config = (root / "exp.ini").string();
    std::ofstream os(config);
    os << R"([corpus]
kind = toy
n_speakers = 4
n_contents = 3
utterances_per_speaker = 3
frames_min = 40
frames_max = 56

[model]
variant = fcn
f0_conditioning = false
latent_dim = 6
speaker_dim = 6
fcn_channels = 3,4,4
fcn_freq_strides = 4,4,4
fcn_kernel_freq = 3
fcn_kernel_time = 3

[train]
batch_size = 3
crop_frames = 32
max_steps = 40
checkpoint_interval = 20
threads = 2

[eval]
pairs = spk00:spk02, spk02:spk00
probe_steps = 15
probe_batch_size = 4
probe_crop_frames = 32
probe_channels = 3,4
probe_freq_strides = 2,2
probe_kernel_freq = 3
probe_kernel_time = 3

[output]
)";
    os << "dir = " << (root / "out").string() << "\nseed = 41\n";
  }
  ~Workspace() { fs::remove_all(root); }

  std::string Out(const std::string &rel) const { return (root / "out" / rel).string(); }
};

}  // namespace

TEST_CASE("full pipeline: generate, train, convert, evaluate, probe, plot") {
  Workspace ws;

  RunResult gen = Run("generate --config " + ws.config);
  CHECK(gen.exit_code == 0);
  CHECK(fs::exists(ws.Out("corpus/manifest.json")));
  CHECK(fs::exists(ws.Out("corpus/spk00_c00_t00.vcf")));
  CHECK(fs::exists(ws.Out("corpus/spk00_c00_t00.vcf.meta")));

  RunResult train = Run("train --config " + ws.config);
  CHECK(train.exit_code == 0);
  CHECK(fs::exists(ws.Out("train/final")));
  CHECK(fs::exists(ws.Out("train/final.json")));
  CHECK(fs::exists(ws.Out("train/ckpt_20")));
  std::string loss = ReadFile(ws.Out("train/loss_curve.tsv"));
  CHECK(loss.find("# config_hash=") != std::string::npos);
  CHECK(loss.find("step\tl_in\tl_kld\tl_cross\tl_sim\ttotal") != std::string::npos);

  RunResult convert =
      Run("convert --config " + ws.config + " --checkpoint " + ws.Out("train/final"));
  CHECK(convert.exit_code == 0);
  CHECK(fs::exists(ws.Out("converted/spk00-spk02/spk00_c00_t00_to_spk02.vcf")));
  CHECK(fs::exists(ws.Out("converted/spk00-spk02/spk00_c00_t00_to_spk02.vcf.synth.json")));
  std::string meta = ReadFile(ws.Out("converted/spk00-spk02/spk00_c00_t00_to_spk02.vcf.meta"));
  CHECK(meta.find("config_hash") != std::string::npos);
  CHECK(meta.find("f0_mode = linear-mean-variance") != std::string::npos);

  RunResult eval =
      Run("evaluate --config " + ws.config + " --checkpoints sys=" + ws.Out("train/final"));
  CHECK(eval.exit_code == 0);
  std::string report = ReadFile(ws.Out("eval/report.txt"));
  CHECK(report.find("MCD dB") != std::string::npos);
  CHECK(report.find("config_hash=") != std::string::npos);

  RunResult probe =
      Run("probe --config " + ws.config + " --checkpoint " + ws.Out("train/final"));
  CHECK(probe.exit_code == 0);
  std::string curve = ReadFile(ws.Out("probe/probe_curve.tsv"));
  CHECK(curve.find("step\tf0_mse\tuv_bce") != std::string::npos);

  RunResult plot = Run("plot --inputs " + ws.Out("train/loss_curve.tsv") + " --out " +
                       ws.Out("plots"));
  CHECK(plot.exit_code == 0);
  std::string svg = ReadFile(ws.Out("plots/curves.svg"));
  CHECK(svg.find("<svg") != std::string::npos);
  CHECK(svg.find("polyline") != std::string::npos);
}

TEST_CASE("outputs are write-once and reruns reproduce bit-exact artifacts") {
  Workspace ws;
  REQUIRE(Run("generate --config " + ws.config).exit_code == 0);
  std::string manifest_a = ReadFile(ws.Out("corpus/manifest.json"));

  // second run without --overwrite refuses
  RunResult blocked = Run("generate --config " + ws.config);
  CHECK(blocked.exit_code != 0);
  CHECK(blocked.output.find("error: ") != std::string::npos);
  CHECK(blocked.output.find("--overwrite") != std::string::npos);

  RunResult redo = Run("generate --config " + ws.config + " --overwrite");
  CHECK(redo.exit_code == 0);
  CHECK(ReadFile(ws.Out("corpus/manifest.json")) == manifest_a);

  // training twice gives identical final checkpoints
  REQUIRE(Run("train --config " + ws.config).exit_code == 0);
  std::string ckpt_a = ReadFile(ws.Out("train/final"));
  std::string loss_a = ReadFile(ws.Out("train/loss_curve.tsv"));
  REQUIRE(Run("train --config " + ws.config + " --overwrite").exit_code == 0);
  CHECK(ReadFile(ws.Out("train/final")) == ckpt_a);
  CHECK(ReadFile(ws.Out("train/loss_curve.tsv")) == loss_a);

  // a different seed changes results
  REQUIRE(Run("train --config " + ws.config + " --overwrite --seed 42").exit_code == 0);
  CHECK(ReadFile(ws.Out("train/final")) != ckpt_a);
}

TEST_CASE("resume continues to the same final checkpoint") {
  Workspace ws;
  REQUIRE(Run("train --config " + ws.config).exit_code == 0);
  std::string full = ReadFile(ws.Out("train/final"));

  // rerun the tail from the mid checkpoint into a fresh directory
  fs::copy(ws.Out("train/ckpt_20"), ws.Out("ckpt_20_copy"));
  fs::copy(ws.Out("train/ckpt_20.json"), ws.Out("ckpt_20_copy.json"));
  RunResult resumed = Run("train --config " + ws.config + " --overwrite --resume " +
                          ws.Out("ckpt_20_copy"));
  CHECK(resumed.exit_code == 0);
  CHECK(ReadFile(ws.Out("train/final")) == full);
}

TEST_CASE("failures are single-line, machine-parsable, and name the path") {
  Workspace ws;
  RunResult missing = Run("evaluate --config " + ws.config +
                          " --checkpoints sys=" + ws.Out("train/nope"));
  CHECK(missing.exit_code != 0);
  REQUIRE(missing.output.rfind("error: ", 0) == 0);
  CHECK(missing.output.find(ws.Out("train/nope")) != std::string::npos);
  CHECK(missing.output.find('\n') == missing.output.size() - 1);  // exactly one line

  std::ofstream bad(ws.root / "bad.ini");
  bad << "[corpus]\nkind = banana\n[mystery]\nx = 1\n";
  bad.close();
  RunResult invalid = Run("generate --config " + (ws.root / "bad.ini").string());
  CHECK(invalid.exit_code != 0);
  REQUIRE(invalid.output.rfind("error: ", 0) == 0);
  CHECK(invalid.output.find("corpus.kind") != std::string::npos);
  CHECK(invalid.output.find("mystery") != std::string::npos);
  CHECK(invalid.output.find('\n') == invalid.output.size() - 1);
}
