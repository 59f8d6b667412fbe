// core/src/evaluation.cc

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

#include "vclab/evaluation.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "vclab/error.h"

namespace vclab {
namespace evaluation {

namespace {

// Local DTW cost: Euclidean distance between two frames.
double FrameDistance(const MatrixXd &a, int i, const MatrixXd &b, int j) {
  return (a.row(i) - b.row(j)).norm();
}

constexpr double kMcdConst = 10.0 / M_LN10;

}  // namespace

std::vector<AlignPair> DtwAlign(const MatrixXd &a, const MatrixXd &b) {
  const int na = static_cast<int>(a.rows());
  const int nb = static_cast<int>(b.rows());
  if (na == 0 || nb == 0) throw EvalError("DtwAlign: empty sequence");
  if (a.cols() != b.cols()) throw ShapeError("DtwAlign: feature widths disagree");

  MatrixXd acc(na, nb);
  // 0: diagonal, 1: from the left (j-1), 2: from above (i-1)
  Eigen::Matrix<signed char, Eigen::Dynamic, Eigen::Dynamic> from(na, nb);
  for (int i = 0; i < na; ++i) {
    for (int j = 0; j < nb; ++j) {
      double d = FrameDistance(a, i, b, j);
      if (i == 0 && j == 0) {
        acc(i, j) = d;
        from(i, j) = 0;
      } else {
        double best = std::numeric_limits<double>::infinity();
        signed char arg = 0;
        if (i > 0 && j > 0) {
          best = acc(i - 1, j - 1);
          arg = 0;
        }
        if (j > 0 && acc(i, j - 1) < best) {
          best = acc(i, j - 1);
          arg = 1;
        }
        if (i > 0 && acc(i - 1, j) < best) {
          best = acc(i - 1, j);
          arg = 2;
        }
        acc(i, j) = best + d;
        from(i, j) = arg;
      }
    }
  }

  std::vector<AlignPair> path;
  int i = na - 1, j = nb - 1;
  while (true) {
    path.push_back({i, j});
    if (i == 0 && j == 0) break;
    switch (from(i, j)) {
      case 0: --i; --j; break;
      case 1: --j; break;
      default: --i; break;
    }
  }
  std::reverse(path.begin(), path.end());
  return path;
}

double AlignmentCost(const MatrixXd &a, const MatrixXd &b, const std::vector<AlignPair> &path) {
  double cost = 0.0;
  for (const AlignPair &p : path) cost += FrameDistance(a, p.i, b, p.j);
  return cost;
}

std::vector<bool> NonSilentMask(const VectorXd &energy, double threshold_db) {
  if (energy.size() == 0) throw EvalError("NonSilentMask: empty energy");
  double gate = energy.maxCoeff() * std::pow(10.0, -threshold_db / 10.0);
  std::vector<bool> mask(energy.size());
  for (Eigen::Index t = 0; t < energy.size(); ++t) mask[t] = energy[t] > gate;
  return mask;
}

double McdDb(const MatrixXd &mcc_ref, const MatrixXd &mcc_cnv,
             const std::vector<AlignPair> &alignment, const std::vector<bool> &ref_nonsilent) {
  if (mcc_ref.cols() != mcc_cnv.cols()) throw ShapeError("McdDb: MCC orders disagree");
  if (static_cast<Eigen::Index>(ref_nonsilent.size()) != mcc_ref.rows())
    throw ShapeError("McdDb: mask length does not match the reference");
  double sum = 0.0;
  long used = 0;
  for (const AlignPair &p : alignment) {
    if (p.i < 0 || p.i >= mcc_ref.rows() || p.j < 0 || p.j >= mcc_cnv.rows())
      throw EvalError("McdDb: alignment indexes out of range");
    if (!ref_nonsilent[p.i]) continue;
    double sq = 0.0;
    for (Eigen::Index d = 1; d < mcc_ref.cols(); ++d) {
      double diff = mcc_ref(p.i, d) - mcc_cnv(p.j, d);
      sq += diff * diff;
    }
    sum += kMcdConst * std::sqrt(2.0 * sq);
    ++used;
  }
  if (used == 0) throw EvalError("McdDb: no aligned non-silent frame pair");
  return sum / static_cast<double>(used);
}

LatentDistance LatentDistanceOf(const MatrixXd &za, const MatrixXd &zb,
                                const std::vector<AlignPair> &alignment) {
  if (za.cols() != zb.cols()) throw ShapeError("LatentDistanceOf: latent widths disagree");
  if (alignment.empty()) throw EvalError("LatentDistanceOf: empty alignment");
  double sq_sum = 0.0, cos_sum = 0.0;
  long sq_count = 0, cos_count = 0;
  int skipped = 0;
  for (const AlignPair &p : alignment) {
    if (p.i < 0 || p.i >= za.rows() || p.j < 0 || p.j >= zb.rows())
      throw EvalError("LatentDistanceOf: alignment indexes out of range");
    sq_sum += (za.row(p.i) - zb.row(p.j)).squaredNorm();
    sq_count += za.cols();
    double na = za.row(p.i).norm();
    double nb = zb.row(p.j).norm();
    if (na == 0.0 || nb == 0.0) {
      ++skipped;
      continue;
    }
    cos_sum += za.row(p.i).dot(zb.row(p.j)) / (na * nb);
    ++cos_count;
  }
  LatentDistance out;
  out.rmse = std::sqrt(sq_sum / static_cast<double>(sq_count));
  out.cosine = cos_count > 0 ? cos_sum / static_cast<double>(cos_count) : 0.0;
  out.cosine_skipped = skipped;
  return out;
}

// ---------------------------------------------------------------------------

namespace {

using conversion::ConversionSpec;
using features::F0Stats;
using features::UtteranceFeatures;
using toyvoc::ToyCorpus;
using toyvoc::ToyUtterance;

const ToyUtterance *FindUtterance(const ToyCorpus &corpus, const std::string &speaker,
                                  int content) {
  for (const ToyUtterance &u : corpus.utterances)
    if (corpus.speakers[u.speaker_index].id == speaker && u.content == content && u.take == 0)
      return &u;
  return nullptr;
}

std::string GenderGroup(const ToyCorpus &corpus, const std::string &src,
                        const std::string &tgt) {
  return corpus.SpeakerById(src).gender + "-" + corpus.SpeakerById(tgt).gender;
}

// DTW over MCC dims 1..order-1 (energy coefficient excluded, same columns
// MCD uses).
std::vector<AlignPair> AlignByMcc(const MatrixXd &mcc_a, const MatrixXd &mcc_b) {
  return DtwAlign(mcc_a.rightCols(mcc_a.cols() - 1), mcc_b.rightCols(mcc_b.cols() - 1));
}

}  // namespace

SystemReport EvaluateSystem(const std::string &system_name, const model::CdvaeModel &model,
                            const ToyCorpus &corpus, const std::vector<ConversionPair> &pairs,
                            const EvalSettings &settings) {
  if (pairs.empty()) throw ConfigError("EvaluateSystem: no conversion pairs requested");

  // Per-speaker F0 statistics once.
  std::map<std::string, F0Stats> stats;
  for (size_t s = 0; s < corpus.speakers.size(); ++s) {
    std::vector<UtteranceFeatures> utts;
    for (const ToyUtterance &u : corpus.utterances)
      if (u.speaker_index == static_cast<int>(s)) utts.push_back(u.feats);
    stats[corpus.speakers[s].id] =
        features::ComputeF0Statistics(utts, corpus.speakers[s].id);
  }

  // Work items: every requested pair crossed with every shared content.
  struct Item {
    ConversionPair pair;
    int content;
  };
  std::vector<Item> items;
  for (const ConversionPair &pair : pairs) {
    corpus.SpeakerById(pair.source);
    corpus.SpeakerById(pair.target);
    for (int c = 0;; ++c) {
      const ToyUtterance *src = FindUtterance(corpus, pair.source, c);
      const ToyUtterance *tgt = FindUtterance(corpus, pair.target, c);
      if (src == nullptr || tgt == nullptr) break;
      items.push_back({pair, c});
    }
  }
  if (items.empty()) throw EvalError("EvaluateSystem: no parallel content found for the pairs");

  SystemReport report;
  report.system = system_name;
  report.pairs.resize(items.size());

  nn::ParallelFor(static_cast<int>(items.size()), settings.threads, [&](int idx) {
    const Item &item = items[idx];
    const ToyUtterance &src = *FindUtterance(corpus, item.pair.source, item.content);
    const ToyUtterance &tgt = *FindUtterance(corpus, item.pair.target, item.content);

    ConversionSpec spec;
    spec.target_speaker = item.pair.target;
    spec.path = settings.path;
    spec.f0_mode = settings.f0_mode;
    spec.deterministic = true;
    UtteranceFeatures converted = conversion::Convert(
        model, src.feats, spec, &stats.at(item.pair.source), &stats.at(item.pair.target));

    // MCD: converted vs. the target speaker's natural parallel utterance.
    std::vector<AlignPair> mcd_path = AlignByMcc(tgt.feats.mcc, converted.mcc);
    std::vector<bool> ref_mask = NonSilentMask(tgt.feats.energy, settings.nonsilent_db);
    double mcd = McdDb(tgt.feats.mcc, converted.mcc, mcd_path, ref_mask);

    // Latent pair distance: both natural utterances through the encoder.
    MatrixXd mu_src, lv_src, mu_tgt, lv_tgt;
    const MatrixXd &xs = settings.latent_domain == model::Domain::kSp ? src.feats.sp
                                                                      : src.feats.mcc;
    const MatrixXd &xt = settings.latent_domain == model::Domain::kSp ? tgt.feats.sp
                                                                      : tgt.feats.mcc;
    model.Encode(settings.latent_domain, xs, &mu_src, &lv_src);
    model.Encode(settings.latent_domain, xt, &mu_tgt, &lv_tgt);
    std::vector<AlignPair> lat_path = AlignByMcc(src.feats.mcc, tgt.feats.mcc);
    std::vector<bool> src_mask = NonSilentMask(src.feats.energy, settings.nonsilent_db);
    std::vector<bool> tgt_mask = NonSilentMask(tgt.feats.energy, settings.nonsilent_db);
    std::vector<AlignPair> kept;
    for (const AlignPair &p : lat_path)
      if (src_mask[p.i] && tgt_mask[p.j]) kept.push_back(p);
    if (kept.empty()) throw EvalError("EvaluateSystem: silence removed the whole alignment");
    LatentDistance lat = LatentDistanceOf(mu_src, mu_tgt, kept);

    PairResult &r = report.pairs[idx];
    r.source = item.pair.source;
    r.target = item.pair.target;
    r.group = GenderGroup(corpus, item.pair.source, item.pair.target);
    r.content = item.content;
    r.mcd_db = mcd;
    r.latent_rmse = lat.rmse;
    r.latent_cosine = lat.cosine;
    r.cosine_skipped = lat.cosine_skipped;
  });

  // Group means in fixed order plus the overall average.
  const char *order[] = {"F-F", "F-M", "M-F", "M-M"};
  for (const char *g : order) {
    GroupAverage avg;
    avg.group = g;
    for (const PairResult &r : report.pairs) {
      if (r.group != g) continue;
      avg.mcd_db += r.mcd_db;
      avg.latent_rmse += r.latent_rmse;
      avg.latent_cosine += r.latent_cosine;
      ++avg.count;
    }
    if (avg.count > 0) {
      avg.mcd_db /= avg.count;
      avg.latent_rmse /= avg.count;
      avg.latent_cosine /= avg.count;
    }
    report.groups.push_back(avg);
  }
  GroupAverage overall;
  overall.group = "Avg.";
  for (const PairResult &r : report.pairs) {
    overall.mcd_db += r.mcd_db;
    overall.latent_rmse += r.latent_rmse;
    overall.latent_cosine += r.latent_cosine;
    ++overall.count;
  }
  overall.mcd_db /= overall.count;
  overall.latent_rmse /= overall.count;
  overall.latent_cosine /= overall.count;
  report.groups.push_back(overall);
  return report;
}

void CheckReportConsistency(const EvalReport &report, double tol) {
  for (const SystemReport &sys : report.systems) {
    for (const GroupAverage &g : sys.groups) {
      double mcd = 0.0, rmse = 0.0, cos = 0.0;
      int count = 0;
      for (const PairResult &r : sys.pairs) {
        if (g.group != "Avg." && r.group != g.group) continue;
        mcd += r.mcd_db;
        rmse += r.latent_rmse;
        cos += r.latent_cosine;
        ++count;
      }
      if (count != g.count) throw EvalError("report group count mismatch: " + g.group);
      if (count == 0) continue;
      if (std::abs(mcd / count - g.mcd_db) > tol ||
          std::abs(rmse / count - g.latent_rmse) > tol ||
          std::abs(cos / count - g.latent_cosine) > tol)
        throw EvalError("report averages disagree with per-pair entries: " + g.group);
    }
  }
}

namespace {

// Full-scale reference averages published for these three systems on the
// VCC2018 benchmark; context only — synthetic-corpus runs cannot and
// should not reproduce them.
struct ReferenceRow {
  const char *system;
  double mcd_avg;
};
constexpr ReferenceRow kReferenceMcd[] = {
    {"CDVAE", 6.42}, {"FCN-CDVAE", 6.39}, {"F0-FCN-CDVAE", 6.38}};
constexpr double kReferenceLatentRmse[2] = {0.333, 0.283};   // FCN vs F0-FCN
constexpr double kReferenceLatentCos[2] = {0.524, 0.565};

void RenderBlock(std::ostringstream &os, const EvalReport &report, const char *title,
                 double PairResult::*field) {
  os << "[" << title << "]\n";
  char head[64];
  std::snprintf(head, sizeof(head), "%-14s", "System");
  os << head;
  for (const char *g : {"F-F", "F-M", "M-F", "M-M", "Avg."}) {
    char cell[16];
    std::snprintf(cell, sizeof(cell), "%10s", g);
    os << cell;
  }
  os << "\n";
  for (const SystemReport &sys : report.systems) {
    char name[64];
    std::snprintf(name, sizeof(name), "%-14s", sys.system.c_str());
    os << name;
    for (const GroupAverage &g : sys.groups) {
      double mean = 0.0;
      int count = 0;
      for (const PairResult &r : sys.pairs) {
        if (g.group != "Avg." && r.group != g.group) continue;
        mean += r.*field;
        ++count;
      }
      char cell[32];
      if (count == 0) {
        std::snprintf(cell, sizeof(cell), "%10s", "-");
      } else {
        std::snprintf(cell, sizeof(cell), "%10.4f", mean / count);
      }
      os << cell;
    }
    os << "\n";
  }
  os << "\n";
}

}  // namespace

std::string RenderReportTables(const EvalReport &report) {
  std::ostringstream os;
  os << "# config_hash=" << report.config_hash << " seed=" << report.seed << "\n\n";
  RenderBlock(os, report, "MCD dB over non-silent frames", &PairResult::mcd_db);
  RenderBlock(os, report, "Latent RMSE over parallel pairs", &PairResult::latent_rmse);
  RenderBlock(os, report, "Latent cosine similarity over parallel pairs",
              &PairResult::latent_cosine);
  os << "# Reference (full-scale training, published averages; not reproducible here):\n";
  for (const ReferenceRow &row : kReferenceMcd)
    os << "#   " << row.system << " MCD avg " << row.mcd_avg << " dB\n";
  os << "#   latent RMSE FCN-CDVAE " << kReferenceLatentRmse[0] << " -> F0-FCN-CDVAE "
     << kReferenceLatentRmse[1] << "\n";
  os << "#   latent cosine FCN-CDVAE " << kReferenceLatentCos[0] << " -> F0-FCN-CDVAE "
     << kReferenceLatentCos[1] << "\n";
  return os.str();
}

std::string RenderReportTsv(const EvalReport &report) {
  std::ostringstream os;
  os << "# config_hash=" << report.config_hash << " seed=" << report.seed << "\n";
  os << "system\tsource\ttarget\tgroup\tcontent\tmcd_db\tlatent_rmse\tlatent_cosine\tcosine_skipped\n";
  os.precision(17);
  for (const SystemReport &sys : report.systems)
    for (const PairResult &r : sys.pairs)
      os << sys.system << "\t" << r.source << "\t" << r.target << "\t" << r.group << "\t"
         << r.content << "\t" << r.mcd_db << "\t" << r.latent_rmse << "\t" << r.latent_cosine
         << "\t" << r.cosine_skipped << "\n";
  return os.str();
}

}  // namespace evaluation
}  // namespace vclab
