// core/include/vclab/container.h

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

#ifndef VCLAB_CONTAINER_H_
#define VCLAB_CONTAINER_H_

#include <Eigen/Core>
#include <map>
#include <string>
#include <vector>

namespace vclab {

// Named-array container file.  Byte layout (all integers little-endian):
//
//   magic           8 bytes, "VCARR32\n" (float32 payload) or "VCARR64\n"
//   n_arrays        uint32
//   per array, in file order:
//     name_len      uint16
//     name          name_len bytes, ASCII
//     rows          uint32
//     cols          uint32
//     data          rows*cols floats (4 or 8 bytes each), row-major
//
// Feature containers use the float32 flavor, checkpoints the float64 one.
// The layout is documented in docs/FORMATS.md so non-C++ tools can read it.

struct NamedArray {
  std::string name;
  Eigen::MatrixXd values;  // held in double; file precision set at write time
};

/// Writes arrays in the given order.  The file appears atomically:
/// data goes to "<path>.tmp" first and is renamed on success.
void WriteArrayFile(const std::string &path, const std::vector<NamedArray> &arrays,
                    bool float64);

/// Reads every array in file order.  Throws FormatError on malformed input.
std::vector<NamedArray> ReadArrayFile(const std::string &path, bool float64);

/// Line-oriented "key = value" sidecar, written atomically.  Keys keep file
/// order on read (std::map on write sorts them for canonical output).
void WriteKeyValueFile(const std::string &path,
                       const std::map<std::string, std::string> &entries);
std::map<std::string, std::string> ReadKeyValueFile(const std::string &path);

}  // namespace vclab

#endif  // VCLAB_CONTAINER_H_
