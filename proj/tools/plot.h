// tools/plot.h

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

#ifndef VCLAB_TOOLS_PLOT_H_
#define VCLAB_TOOLS_PLOT_H_

#include <string>
#include <vector>

namespace vclab {
namespace plot {

/// One named series of (x, y) points.
struct Series {
  std::string label;
  std::vector<double> x, y;
};

/// Tab-separated curve file: optional '#' comment lines, a header row, then
/// numeric rows.  The first column is x; every other column becomes a
/// series labeled "<file label>:<column>".
std::vector<Series> LoadTsvCurves(const std::string &path, const std::string &label);

/// Static SVG line plot (deterministic output, no timestamps).
std::string RenderSvg(const std::string &title, const std::vector<Series> &series,
                      bool log_y = false);

/// 72x22 character terminal plot of the same data.
std::string RenderAscii(const std::string &title, const std::vector<Series> &series);

}  // namespace plot
}  // namespace vclab

#endif  // VCLAB_TOOLS_PLOT_H_
