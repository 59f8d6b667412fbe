// core/include/vclab/rng.h

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

#ifndef VCLAB_RNG_H_
#define VCLAB_RNG_H_

#include <cstdint>

namespace vclab {

/// Mixes (seed, stream) into a new seed.  Used for counter-based stream
/// derivation: every consumer (training step, utterance, parameter) draws
/// from its own stream, so runs are reproducible under any execution order
/// and resume needs no saved generator state beyond (seed, counter).
uint64_t MixSeed(uint64_t seed, uint64_t stream);

/// Deterministic PRNG with fully specified output.  splitmix64 state
/// transition; uniform doubles use the top 53 bits; normals use Box-Muller.
/// Unlike std::normal_distribution, the sequence is identical on every
/// platform and standard library.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {}

  uint64_t NextUint64();

  /// Uniform in [0, 1) with 53-bit resolution.
  double Uniform();

  /// Uniform integer in [0, n).  Requires n > 0.
  int UniformInt(int n);

  /// Standard normal deviate.
  double Normal();

 private:
  uint64_t state_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace vclab

#endif  // VCLAB_RNG_H_
