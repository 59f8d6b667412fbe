// tools/vclab_main.cc

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

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "plot.h"
#include "vclab/config.h"
#include "vclab/error.h"

namespace fs = std::filesystem;
using vclab::config::ExperimentConfig;

namespace {

struct CommonOpts {
  std::string config_path;
  std::string out_override;
  std::optional<uint64_t> seed_override;
  bool overwrite = false;
};

void AddCommonFlags(CLI::App *cmd, CommonOpts *opts, bool config_required = true) {
  auto *cfg = cmd->add_option("--config", opts->config_path, "experiment config file");
  if (config_required) cfg->required();
  cmd->add_option("--out", opts->out_override, "override [output] dir");
  cmd->add_option("--seed", opts->seed_override, "override [output] seed");
  cmd->add_flag("--overwrite", opts->overwrite, "allow replacing existing outputs");
}

ExperimentConfig LoadConfig(const CommonOpts &opts) {
  ExperimentConfig cfg = vclab::config::ParseConfigFile(opts.config_path);
  if (!opts.out_override.empty()) cfg.output_dir = opts.out_override;
  if (opts.seed_override.has_value()) {
    cfg.seed = *opts.seed_override;
    cfg.toy.seed = cfg.seed;
    cfg.train.seed = cfg.seed;
    cfg.probe.seed = cfg.seed;
  }
  return cfg;
}

// Outputs are write-once: an existing non-empty target needs --overwrite.
void PrepareDir(const std::string &dir, bool overwrite) {
  if (fs::exists(dir) && !fs::is_empty(dir)) {
    if (!overwrite)
      throw vclab::ConfigError("output directory already exists: " + dir +
                               " (pass --overwrite to replace it)");
    fs::remove_all(dir);
  }
  fs::create_directories(dir);
}

void WriteText(const std::string &path, const std::string &content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream os(tmp);
    if (!os) throw vclab::FormatError("cannot write " + path);
    os << content;
  }
  fs::rename(tmp, path);
}

std::string ProvenanceComment(const ExperimentConfig &cfg) {
  return "# config_hash=" + vclab::config::ConfigHash(cfg) +
         " seed=" + std::to_string(cfg.seed) + "\n";
}

vclab::toyvoc::ToyCorpus AcquireCorpus(const ExperimentConfig &cfg) {
  if (cfg.corpus_kind == "toy") return vclab::toyvoc::GenerateCorpus(cfg.toy);
  return vclab::toyvoc::LoadCorpus(cfg.corpus_dir);
}

std::vector<std::string> SpeakerIds(const vclab::toyvoc::ToyCorpus &corpus) {
  std::vector<std::string> ids;
  for (const auto &s : corpus.speakers) ids.push_back(s.id);
  return ids;
}

void RequireFile(const std::string &path, const std::string &what) {
  if (!fs::exists(path)) throw vclab::ConfigError(what + " not found: " + path);
}

// --------------------------------------------------------------------------

int CmdGenerate(const CommonOpts &opts) {
  ExperimentConfig cfg = LoadConfig(opts);
  if (cfg.corpus_kind != "toy")
    throw vclab::ConfigError("generate needs corpus.kind = toy");
  const std::string dir = cfg.output_dir + "/corpus";
  PrepareDir(dir, opts.overwrite);
  vclab::toyvoc::ToyCorpus corpus = vclab::toyvoc::GenerateCorpus(cfg.toy);
  vclab::toyvoc::SaveCorpus(corpus, dir,
                            {{"config_hash", vclab::config::ConfigHash(cfg)},
                             {"seed", std::to_string(cfg.seed)}});
  std::cout << "wrote " << corpus.utterances.size() << " utterances to " << dir << "\n";
  return 0;
}

int CmdTrain(const CommonOpts &opts, const std::string &resume) {
  ExperimentConfig cfg = LoadConfig(opts);
  if (cfg.train.max_steps <= 0) throw vclab::ConfigError("train.max_steps must be positive");
  const std::string dir = cfg.output_dir + "/train";
  const std::string hash = vclab::config::ConfigHash(cfg);
  vclab::toyvoc::ToyCorpus corpus = AcquireCorpus(cfg);

  std::unique_ptr<vclab::model::CdvaeModel> m;
  std::unique_ptr<vclab::nn::Adam> adam;
  int64_t start_step = 0;
  if (resume.empty()) {
    PrepareDir(dir, opts.overwrite);
    m = std::make_unique<vclab::model::CdvaeModel>(cfg.arch, SpeakerIds(corpus), cfg.seed);
    vclab::training::FitStandardization(m.get(), corpus);
    adam = std::make_unique<vclab::nn::Adam>(
        m->registry(),
        vclab::nn::Adam::Config{cfg.train.lr, cfg.train.beta1, cfg.train.beta2, 1e-8});
  } else {
    RequireFile(resume, "checkpoint");
    fs::create_directories(dir);
    vclab::model::LoadedCheckpoint loaded = vclab::model::LoadCheckpoint(resume);
    if (loaded.state.config_hash != hash)
      throw vclab::ConfigError("checkpoint was trained under config hash " +
                               loaded.state.config_hash + ", current config is " + hash);
    m = std::move(loaded.model);
    adam = std::make_unique<vclab::nn::Adam>(
        m->registry(),
        vclab::nn::Adam::Config{cfg.train.lr, cfg.train.beta1, cfg.train.beta2, 1e-8});
    adam->set_step_count(loaded.state.adam_step_count);
    for (int i = 0; i < m->registry().size(); ++i) {
      adam->moment1(i) = loaded.state.adam_m.at(i);
      adam->moment2(i) = loaded.state.adam_v.at(i);
    }
    start_step = loaded.state.step;
  }

  std::ofstream loss_out(dir + "/loss_curve.tsv", resume.empty() ? std::ios::out : std::ios::app);
  if (!loss_out) throw vclab::FormatError("cannot write " + dir + "/loss_curve.tsv");
  if (resume.empty()) {
    loss_out << ProvenanceComment(cfg);
    loss_out << vclab::training::kLossHeader << "\n";
  }

  vclab::training::TrainCallbacks callbacks;
  callbacks.on_log = [&](const vclab::training::LossReport &r) {
    loss_out << vclab::training::FormatLossLine(r) << "\n";
  };
  std::vector<vclab::training::LossReport> reports = vclab::training::TrainLoop(
      cfg.train, m.get(), adam.get(), corpus, start_step, dir, hash, callbacks);
  std::cout << "trained to step " << cfg.train.max_steps << ", final total loss "
            << reports.back().total << ", checkpoints in " << dir << "\n";
  return 0;
}

int CmdConvert(const CommonOpts &opts, const std::string &checkpoint,
               const std::string &pairs_arg) {
  ExperimentConfig cfg = LoadConfig(opts);
  RequireFile(checkpoint, "checkpoint");
  const std::string dir = cfg.output_dir + "/converted";
  PrepareDir(dir, opts.overwrite);
  vclab::toyvoc::ToyCorpus corpus = AcquireCorpus(cfg);
  vclab::model::LoadedCheckpoint loaded = vclab::model::LoadCheckpoint(checkpoint);

  std::vector<vclab::evaluation::ConversionPair> pairs = cfg.eval_pairs;
  if (!pairs_arg.empty()) {
    pairs.clear();
    std::istringstream is(pairs_arg);
    std::string item;
    while (std::getline(is, item, ',')) {
      auto colon = item.find(':');
      if (colon == std::string::npos)
        throw vclab::ConfigError("bad --pairs entry '" + item + "', expected source:target");
      pairs.push_back({item.substr(0, colon), item.substr(colon + 1)});
    }
  }
  if (pairs.empty()) throw vclab::ConfigError("no conversion pairs (config [eval] pairs empty)");

  // Per-speaker F0 statistics from the corpus.
  std::map<std::string, vclab::features::F0Stats> stats;
  for (size_t s = 0; s < corpus.speakers.size(); ++s) {
    std::vector<vclab::features::UtteranceFeatures> utts;
    for (const auto &u : corpus.utterances)
      if (u.speaker_index == static_cast<int>(s)) utts.push_back(u.feats);
    stats[corpus.speakers[s].id] =
        vclab::features::ComputeF0Statistics(utts, corpus.speakers[s].id);
  }

  const std::string hash = vclab::config::ConfigHash(cfg);
  int written = 0;
  for (const auto &pair : pairs) {
    corpus.SpeakerById(pair.source);
    corpus.SpeakerById(pair.target);
    for (const auto &utt : corpus.utterances) {
      if (corpus.speakers[utt.speaker_index].id != pair.source) continue;
      vclab::conversion::ConversionSpec spec;
      spec.target_speaker = pair.target;
      spec.path = cfg.eval_path;
      spec.f0_mode = cfg.eval_f0_mode;
      vclab::features::UtteranceFeatures converted = vclab::conversion::Convert(
          *loaded.model, utt.feats, spec, &stats.at(pair.source), &stats.at(pair.target));
      auto prov = vclab::conversion::ConversionProvenance(*loaded.model, utt.feats, spec);
      prov.emplace_back("config_hash", hash);
      prov.emplace_back("seed", std::to_string(cfg.seed));
      char name[128];
      std::snprintf(name, sizeof(name), "%s_c%02d_t%02d_to_%s.vcf", pair.source.c_str(),
                    utt.content, utt.take, pair.target.c_str());
      const std::string subdir = dir + "/" + pair.source + "-" + pair.target;
      fs::create_directories(subdir);
      vclab::conversion::ExportForSynthesis(converted, subdir + "/" + name, prov);
      ++written;
    }
  }
  std::cout << "wrote " << written << " converted utterances to " << dir << "\n";
  return 0;
}

int CmdEvaluate(const CommonOpts &opts, const std::vector<std::string> &checkpoint_args) {
  ExperimentConfig cfg = LoadConfig(opts);
  if (checkpoint_args.empty())
    throw vclab::ConfigError("evaluate needs at least one --checkpoints name=path entry");
  if (cfg.eval_pairs.empty()) throw vclab::ConfigError("config [eval] pairs is empty");
  const std::string dir = cfg.output_dir + "/eval";
  PrepareDir(dir, opts.overwrite);
  vclab::toyvoc::ToyCorpus corpus = AcquireCorpus(cfg);

  vclab::evaluation::EvalReport report;
  report.config_hash = vclab::config::ConfigHash(cfg);
  report.seed = cfg.seed;
  for (const std::string &arg : checkpoint_args) {
    auto eq = arg.find('=');
    if (eq == std::string::npos)
      throw vclab::ConfigError("bad --checkpoints entry '" + arg + "', expected name=path");
    std::string name = arg.substr(0, eq);
    std::string path = arg.substr(eq + 1);
    RequireFile(path, "checkpoint");
    vclab::model::LoadedCheckpoint loaded = vclab::model::LoadCheckpoint(path);
    report.systems.push_back(vclab::evaluation::EvaluateSystem(
        name, *loaded.model, corpus, cfg.eval_pairs, cfg.EvalSettings()));
  }
  vclab::evaluation::CheckReportConsistency(report);
  WriteText(dir + "/report.txt", vclab::evaluation::RenderReportTables(report));
  WriteText(dir + "/report.tsv", vclab::evaluation::RenderReportTsv(report));
  std::cout << vclab::evaluation::RenderReportTables(report);
  std::cout << "wrote " << dir << "/report.txt and report.tsv\n";
  return 0;
}

int CmdProbe(const CommonOpts &opts, const std::string &checkpoint) {
  ExperimentConfig cfg = LoadConfig(opts);
  RequireFile(checkpoint, "checkpoint");
  const std::string dir = cfg.output_dir + "/probe";
  PrepareDir(dir, opts.overwrite);
  vclab::toyvoc::ToyCorpus corpus = AcquireCorpus(cfg);
  vclab::model::LoadedCheckpoint loaded = vclab::model::LoadCheckpoint(checkpoint);

  vclab::probe::ProbeDataset dataset = vclab::probe::BuildProbeDataset(
      *loaded.model, corpus, cfg.EvalSettings().latent_domain);
  vclab::probe::ProbeCurves curves = vclab::probe::TrainF0Probe(dataset, cfg.probe);

  std::ostringstream os;
  os << ProvenanceComment(cfg);
  os.precision(17);
  os << "# final_f0_mse=" << curves.final_f0_mse << " final_uv_bce=" << curves.final_uv_bce
     << " target_variance=" << curves.target_variance << "\n";
  os << vclab::probe::kProbeHeader << "\n";
  for (const auto &s : curves.steps) os << vclab::probe::FormatProbeLine(s) << "\n";
  WriteText(dir + "/probe_curve.tsv", os.str());
  std::cout << "probe final cont-F0 MSE " << curves.final_f0_mse << ", uv BCE "
            << curves.final_uv_bce << " (constant-predictor bound " << curves.target_variance
            << "); curves in " << dir << "\n";
  return 0;
}

int CmdPlot(const CommonOpts &opts, const std::vector<std::string> &inputs, bool log_y) {
  if (inputs.empty()) throw vclab::ConfigError("plot needs at least one --inputs file");
  std::string out_dir = opts.out_override.empty() ? "plots" : opts.out_override;
  PrepareDir(out_dir, opts.overwrite);
  std::vector<vclab::plot::Series> all;
  std::string provenance;  // carry the inputs' hash/seed comments along
  for (const std::string &path : inputs) {
    RequireFile(path, "curve file");
    std::string label = fs::path(path).stem().string();
    for (auto &s : vclab::plot::LoadTsvCurves(path, label)) all.push_back(std::move(s));
    std::ifstream is(path);
    std::string line;
    while (std::getline(is, line) && !line.empty() && line[0] == '#')
      provenance += "# " + label + " " + line.substr(1) + "\n";
  }
  std::string title = "curves";
  std::string svg = vclab::plot::RenderSvg(title, all, log_y);
  if (!provenance.empty()) {
    std::string comment = "<!--\n" + provenance + "-->\n";
    svg.insert(svg.find('\n') + 1, comment);
  }
  WriteText(out_dir + "/curves.svg", svg);
  WriteText(out_dir + "/curves.txt", provenance + vclab::plot::RenderAscii(title, all));
  std::cout << "wrote " << out_dir << "/curves.svg and curves.txt\n";
  return 0;
}

std::string OneLine(std::string msg) {
  for (char &c : msg)
    if (c == '\n') c = ';';
  return msg;
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"vclab: desk-scale cross-domain VAE voice conversion laboratory"};
  app.require_subcommand(1);

  CommonOpts generate_opts, train_opts, convert_opts, evaluate_opts, probe_opts, plot_opts;
  std::string resume, convert_ckpt, probe_ckpt, convert_pairs;
  std::vector<std::string> eval_ckpts, plot_inputs;
  bool plot_logy = false;

  CLI::App *generate = app.add_subcommand("generate", "write a synthetic feature corpus");
  AddCommonFlags(generate, &generate_opts);

  CLI::App *train = app.add_subcommand("train", "train a model on the configured corpus");
  AddCommonFlags(train, &train_opts);
  train->add_option("--resume", resume, "checkpoint to resume from");

  CLI::App *convert = app.add_subcommand("convert", "convert utterances between speakers");
  AddCommonFlags(convert, &convert_opts);
  convert->add_option("--checkpoint", convert_ckpt, "trained model checkpoint")->required();
  convert->add_option("--pairs", convert_pairs, "source:target[,source:target...]");

  CLI::App *evaluate = app.add_subcommand("evaluate", "MCD and latent-distance report");
  AddCommonFlags(evaluate, &evaluate_opts);
  evaluate->add_option("--checkpoints", eval_ckpts, "name=path entries")
      ->required()
      ->delimiter(',');

  CLI::App *probe_cmd = app.add_subcommand("probe", "train the F0 prediction probe");
  AddCommonFlags(probe_cmd, &probe_opts);
  probe_cmd->add_option("--checkpoint", probe_ckpt, "trained model checkpoint")->required();

  CLI::App *plot = app.add_subcommand("plot", "render loss/metric curves to SVG and text");
  AddCommonFlags(plot, &plot_opts, /*config_required=*/false);
  plot->add_option("--inputs", plot_inputs, "TSV curve files")->required()->delimiter(',');
  plot->add_flag("--log-y", plot_logy, "logarithmic y axis");

  CLI11_PARSE(app, argc, argv);

  try {
    if (generate->parsed()) return CmdGenerate(generate_opts);
    if (train->parsed()) return CmdTrain(train_opts, resume);
    if (convert->parsed()) return CmdConvert(convert_opts, convert_ckpt, convert_pairs);
    if (evaluate->parsed()) return CmdEvaluate(evaluate_opts, eval_ckpts);
    if (probe_cmd->parsed()) return CmdProbe(probe_opts, probe_ckpt);
    if (plot->parsed()) return CmdPlot(plot_opts, plot_inputs, plot_logy);
  } catch (const std::exception &e) {
    std::cerr << "error: " << OneLine(e.what()) << "\n";
    return 1;
  }
  std::cerr << "error: no subcommand\n";
  return 1;
}
