// tools/plot.cc

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

#include "plot.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "vclab/error.h"

namespace vclab {
namespace plot {

std::vector<Series> LoadTsvCurves(const std::string &path, const std::string &label) {
  std::ifstream is(path);
  if (!is) throw FormatError("cannot open curve file: " + path);
  std::string line;
  std::vector<std::string> header;
  std::vector<std::vector<double>> columns;
  int expected = -1;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ls, cell, '\t')) cells.push_back(cell);
    if (header.empty()) {
      header = cells;
      expected = static_cast<int>(cells.size());
      columns.resize(expected);
      continue;
    }
    if (static_cast<int>(cells.size()) != expected)
      throw FormatError(path + ": ragged row (" + std::to_string(cells.size()) + " cells, " +
                        std::to_string(expected) + " expected)");
    for (int i = 0; i < expected; ++i) {
      try {
        columns[i].push_back(std::stod(cells[i]));
      } catch (const std::exception &) {
        throw FormatError(path + ": non-numeric cell '" + cells[i] + "'");
      }
    }
  }
  if (header.size() < 2 || columns[0].empty())
    throw FormatError(path + ": need a header plus at least one data row");
  std::vector<Series> out;
  for (size_t c = 1; c < header.size(); ++c) {
    Series s;
    s.label = label + ":" + header[c];
    s.x = columns[0];
    s.y = columns[c];
    out.push_back(std::move(s));
  }
  return out;
}

namespace {

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  void Update(double v) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  double Span() const { return hi > lo ? hi - lo : 1.0; }
};

const char *kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                         "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

std::string FormatShort(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

}  // namespace

std::string RenderSvg(const std::string &title, const std::vector<Series> &series, bool log_y) {
  if (series.empty()) throw DataError("RenderSvg: no series");
  const int width = 760, height = 420;
  const int ml = 70, mr = 16, mt = 34, mb = 44;
  Range rx, ry;
  for (const Series &s : series)
    for (size_t i = 0; i < s.x.size(); ++i) {
      double y = s.y[i];
      if (log_y && y <= 0.0) continue;
      rx.Update(s.x[i]);
      ry.Update(log_y ? std::log10(y) : y);
    }
  if (!std::isfinite(rx.lo) || !std::isfinite(ry.lo))
    throw DataError("RenderSvg: no plottable points");

  auto px = [&](double x) { return ml + (x - rx.lo) / rx.Span() * (width - ml - mr); };
  auto py = [&](double y) {
    double v = log_y ? std::log10(y) : y;
    return height - mb - (v - ry.lo) / ry.Span() * (height - mt - mb);
  };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
     << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << width / 2 << "\" y=\"20\" text-anchor=\"middle\" font-family=\"sans-serif\" "
        "font-size=\"14\">"
     << title << (log_y ? " (log y)" : "") << "</text>\n";
  // frame and axis labels
  os << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << width - ml - mr
     << "\" height=\"" << height - mt - mb
     << "\" fill=\"none\" stroke=\"#444\" stroke-width=\"1\"/>\n";
  auto label = [&](double xpix, double ypix, const std::string &text, const char *anchor) {
    os << "<text x=\"" << xpix << "\" y=\"" << ypix << "\" text-anchor=\"" << anchor
       << "\" font-family=\"sans-serif\" font-size=\"11\" fill=\"#333\">" << text
       << "</text>\n";
  };
  label(ml, height - mb + 16, FormatShort(rx.lo), "middle");
  label(width - mr, height - mb + 16, FormatShort(rx.hi), "middle");
  double ylo = log_y ? std::pow(10.0, ry.lo) : ry.lo;
  double yhi = log_y ? std::pow(10.0, ry.hi) : ry.hi;
  label(ml - 6, height - mb, FormatShort(ylo), "end");
  label(ml - 6, mt + 10, FormatShort(yhi), "end");

  for (size_t si = 0; si < series.size(); ++si) {
    const Series &s = series[si];
    os << "<polyline fill=\"none\" stroke=\"" << kColors[si % 8]
       << "\" stroke-width=\"1.5\" points=\"";
    for (size_t i = 0; i < s.x.size(); ++i) {
      if (log_y && s.y[i] <= 0.0) continue;
      os << FormatShort(px(s.x[i])) << "," << FormatShort(py(s.y[i])) << " ";
    }
    os << "\"/>\n";
    // legend entry
    double ly = mt + 16 + 16 * static_cast<double>(si);
    os << "<line x1=\"" << ml + 8 << "\" y1=\"" << ly - 4 << "\" x2=\"" << ml + 28 << "\" y2=\""
       << ly - 4 << "\" stroke=\"" << kColors[si % 8] << "\" stroke-width=\"2\"/>\n";
    label(ml + 34, ly, s.label, "start");
  }
  os << "</svg>\n";
  return os.str();
}

std::string RenderAscii(const std::string &title, const std::vector<Series> &series) {
  if (series.empty()) throw DataError("RenderAscii: no series");
  const int cols = 72, rows = 22;
  Range rx, ry;
  for (const Series &s : series)
    for (size_t i = 0; i < s.x.size(); ++i) {
      rx.Update(s.x[i]);
      ry.Update(s.y[i]);
    }
  std::vector<std::string> grid(rows, std::string(cols, ' '));
  const char marks[] = "*+ox#%@&";
  for (size_t si = 0; si < series.size(); ++si) {
    const Series &s = series[si];
    for (size_t i = 0; i < s.x.size(); ++i) {
      int cx = static_cast<int>((s.x[i] - rx.lo) / rx.Span() * (cols - 1) + 0.5);
      int cy = static_cast<int>((s.y[i] - ry.lo) / ry.Span() * (rows - 1) + 0.5);
      cx = std::clamp(cx, 0, cols - 1);
      cy = std::clamp(cy, 0, rows - 1);
      grid[rows - 1 - cy][cx] = marks[si % 8];
    }
  }
  std::ostringstream os;
  os << title << "\n";
  for (size_t si = 0; si < series.size(); ++si)
    os << "  [" << marks[si % 8] << "] " << series[si].label << "\n";
  os << FormatShort(ry.hi) << "\n";
  for (const std::string &row : grid) os << "|" << row << "\n";
  os << FormatShort(ry.lo) << " x: " << FormatShort(rx.lo) << " .. " << FormatShort(rx.hi)
     << "\n";
  return os.str();
}

}  // namespace plot
}  // namespace vclab
