// core/include/vclab/nn.h

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

#ifndef VCLAB_NN_H_
#define VCLAB_NN_H_

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "vclab/rng.h"

namespace vclab {
namespace nn {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using RowMajorMatrixXd = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Dense (channels, height, width) tensor; width is the time axis.
struct Tensor3 {
  int c = 0, h = 0, w = 0;
  VectorXd data;  // layout ((ci * h) + y) * w + x

  Tensor3() = default;
  Tensor3(int c_, int h_, int w_)
      : c(c_), h(h_), w(w_), data(VectorXd::Zero(static_cast<long>(c_) * h_ * w_)) {}

  long size() const { return static_cast<long>(c) * h * w; }
  double &At(int ci, int y, int x) { return data[(static_cast<long>(ci) * h + y) * w + x]; }
  double At(int ci, int y, int x) const {
    return data[(static_cast<long>(ci) * h + y) * w + x];
  }
  // (c) x (h*w) row-major view of the payload
  Eigen::Map<RowMajorMatrixXd> AsMatrix() {
    return Eigen::Map<RowMajorMatrixXd>(data.data(), c, static_cast<long>(h) * w);
  }
  Eigen::Map<const RowMajorMatrixXd> AsMatrix() const {
    return Eigen::Map<const RowMajorMatrixXd>(data.data(), c, static_cast<long>(h) * w);
  }
};

/// Frames-as-rows (w x c*h) matrix from a tensor; inverse of UnflattenFrames.
MatrixXd FlattenFrames(const Tensor3 &t);
Tensor3 UnflattenFrames(const MatrixXd &frames, int c, int h);

// ---------------------------------------------------------------------------
// Parameters

struct Parameter {
  std::string name;
  int index = -1;  // registry slot
  MatrixXd value;
};

/// Flat list of every trainable array, in registration order.  Order is the
/// contract for gradient buffers, Adam state and checkpoints.
class ParamRegistry {
 public:
  void Register(Parameter *p);
  int size() const { return static_cast<int>(params_.size()); }
  Parameter &at(int i) { return *params_[i]; }
  const Parameter &at(int i) const { return *params_[i]; }
  long TotalCount() const;

  // Flat-coordinate access across all parameters (finite-difference probes).
  double GetCoord(long k) const;
  void AddToCoord(long k, double delta);

 private:
  std::vector<Parameter *> params_;
};

/// Per-call gradient accumulator with one slot per registered parameter.
class GradBuffer {
 public:
  explicit GradBuffer(const ParamRegistry &reg);
  MatrixXd &operator[](const Parameter &p) { return grads_[p.index]; }
  const MatrixXd &operator[](const Parameter &p) const { return grads_[p.index]; }
  MatrixXd &at(int i) { return grads_[i]; }
  const MatrixXd &at(int i) const { return grads_[i]; }
  int size() const { return static_cast<int>(grads_.size()); }
  void SetZero();
  void Add(const GradBuffer &other);
  double GetCoord(long k) const;

 private:
  std::vector<MatrixXd> grads_;
};

// ---------------------------------------------------------------------------
// Layers.  Forward methods are const and reentrant; every call fills a
// caller-owned cache consumed by the matching Backward.  Backward methods
// accumulate (+=) parameter gradients.

class Linear {
 public:
  Linear() = default;
  Linear(const std::string &name, int in_dim, int out_dim);
  void Register(ParamRegistry *reg);
  void Init(Rng *rng, double scale);  // normal(0, scale/sqrt(fan_in))

  struct Cache {
    MatrixXd x;
  };
  // x: N x in  ->  N x out
  MatrixXd Forward(const MatrixXd &x, Cache *cache) const;
  MatrixXd Backward(const MatrixXd &gout, const Cache &cache, GradBuffer *grads) const;

  int in_dim() const { return static_cast<int>(weight_.value.cols()); }
  int out_dim() const { return static_cast<int>(weight_.value.rows()); }

 private:
  Parameter weight_;  // out x in
  Parameter bias_;    // out x 1
};

/// 2-D convolution over (height, time); stride along time is always 1 and
/// both axes use centered zero padding (kernel sizes must be odd), so the
/// frame count passes through unchanged for any input length.
class Conv2D {
 public:
  Conv2D() = default;
  Conv2D(const std::string &name, int cin, int cout, int kh, int kw, int stride_h);
  void Register(ParamRegistry *reg);
  void Init(Rng *rng, double scale);

  int OutHeight(int h_in) const;

  struct Cache {
    Tensor3 x;
  };
  Tensor3 Forward(const Tensor3 &x, Cache *cache) const;
  Tensor3 Backward(const Tensor3 &gout, const Cache &cache, GradBuffer *grads) const;

  int cin() const { return cin_; }
  int cout() const { return cout_; }

 private:
  int cin_ = 0, cout_ = 0, kh_ = 0, kw_ = 0, sh_ = 0;
  Parameter weight_;  // cout x (cin*kh*kw)
  Parameter bias_;    // cout x 1
};

/// Transposed convolution mirroring Conv2D along the height axis.  The
/// target output height is part of the layer (output padding is derived
/// from it), matching the encoder height ladder exactly.
class Deconv2D {
 public:
  Deconv2D() = default;
  Deconv2D(const std::string &name, int cin, int cout, int kh, int kw, int stride_h,
           int h_in, int h_out);
  void Register(ParamRegistry *reg);
  void Init(Rng *rng, double scale);

  int h_in() const { return h_in_; }
  int h_out() const { return h_out_; }
  int cout() const { return cout_; }

  struct Cache {
    Tensor3 x;
  };
  Tensor3 Forward(const Tensor3 &x, Cache *cache) const;
  Tensor3 Backward(const Tensor3 &gout, const Cache &cache, GradBuffer *grads) const;

 private:
  int cin_ = 0, cout_ = 0, kh_ = 0, kw_ = 0, sh_ = 0, h_in_ = 0, h_out_ = 0;
  Parameter weight_;  // (cout*kh*kw) x cin
  Parameter bias_;    // cout x 1
};

/// Layer normalization over the feature axis of a frames-as-rows matrix,
/// with per-dimension affine parameters.
class LayerNormRow {
 public:
  LayerNormRow() = default;
  LayerNormRow(const std::string &name, int dim, double eps = 1e-5);
  void Register(ParamRegistry *reg);

  struct Cache {
    MatrixXd xhat;
    VectorXd inv_std;
  };
  MatrixXd Forward(const MatrixXd &x, Cache *cache) const;
  MatrixXd Backward(const MatrixXd &gout, const Cache &cache, GradBuffer *grads) const;

 private:
  double eps_ = 1e-5;
  Parameter gain_;  // dim x 1
  Parameter bias_;  // dim x 1
};

/// Layer normalization of a tensor over (channels, height) at each time
/// step, with per-channel affine parameters.  Frames normalize
/// independently, so any sequence length behaves identically.
class LayerNormChannel {
 public:
  LayerNormChannel() = default;
  LayerNormChannel(const std::string &name, int channels, double eps = 1e-5);
  void Register(ParamRegistry *reg);

  struct Cache {
    Tensor3 xhat;
    VectorXd inv_std;  // per time step
  };
  Tensor3 Forward(const Tensor3 &x, Cache *cache) const;
  Tensor3 Backward(const Tensor3 &gout, const Cache &cache, GradBuffer *grads) const;

 private:
  double eps_ = 1e-5;
  Parameter gain_;  // channels x 1
  Parameter bias_;  // channels x 1
};

// Leaky rectifier, elementwise.
MatrixXd LeakyRelu(const MatrixXd &x, double slope);
MatrixXd LeakyReluBackward(const MatrixXd &gout, const MatrixXd &x, double slope);
Tensor3 LeakyRelu(const Tensor3 &x, double slope);
Tensor3 LeakyReluBackward(const Tensor3 &gout, const Tensor3 &x, double slope);

/// Gated linear unit over channels: the first half of the channels passes
/// through scaled by the sigmoid of the second half.
struct GluCache {
  Tensor3 a;
  Tensor3 sig_b;
};
Tensor3 Glu(const Tensor3 &x, GluCache *cache);
Tensor3 GluBackward(const Tensor3 &gout, const GluCache &cache);

/// Appends one constant-over-height channel per conditioning column.
Tensor3 ConcatCondChannels(const Tensor3 &x, const MatrixXd &cond);
/// Splits the gradient of ConcatCondChannels; adds the conditioning part
/// into gcond (N x cond_dim) and returns the gradient of x.
Tensor3 SplitCondChannels(const Tensor3 &gout, int x_channels, MatrixXd *gcond);

// ---------------------------------------------------------------------------

class Adam {
 public:
  struct Config {
    double lr = 1e-4;
    double beta1 = 0.5;
    double beta2 = 0.999;
    double eps = 1e-8;
  };

  Adam(const ParamRegistry &reg, const Config &config);
  void Step(ParamRegistry *reg, const GradBuffer &grads);

  int64_t step_count() const { return t_; }
  void set_step_count(int64_t t) { t_ = t; }
  const Config &config() const { return config_; }
  MatrixXd &moment1(int i) { return m_[i]; }
  MatrixXd &moment2(int i) { return v_[i]; }

 private:
  Config config_;
  int64_t t_ = 0;
  std::vector<MatrixXd> m_, v_;
};

/// Runs fn(0..n-1) on up to `threads` std::threads (static striding).
/// Callers keep determinism by writing only to per-index slots.
void ParallelFor(int n, int threads, const std::function<void(int)> &fn);

}  // namespace nn
}  // namespace vclab

#endif  // VCLAB_NN_H_
