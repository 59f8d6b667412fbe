// core/include/vclab/error.h

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

#ifndef VCLAB_ERROR_H_
#define VCLAB_ERROR_H_

#include <stdexcept>
#include <string>

namespace vclab {

/// Base class for all vclab failures.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string &msg) : std::runtime_error(msg) {}
};

/// Invalid data fed to an operation (degenerate frame, all-unvoiced
/// utterance, insufficient voiced frames, mismatched batch, ...).
class DataError : public Error {
 public:
  using Error::Error;
};

/// Array shape disagrees with what an operation requires.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration value or inconsistent model/config combination.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed file on disk (feature container, checkpoint, manifest).
class FormatError : public Error {
 public:
  using Error::Error;
};

/// A metric could not be computed (empty alignment, no non-silent frames).
class EvalError : public Error {
 public:
  using Error::Error;
};

}  // namespace vclab

#endif  // VCLAB_ERROR_H_
