// core/src/nn.cc

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

#include "vclab/nn.h"

#include <cmath>
#include <thread>

#include "vclab/error.h"

namespace vclab {
namespace nn {

namespace {

// Patch geometry shared by Conv2D and Deconv2D.  im2col gathers padded
// patches of the "big" tensor into a (c*kh*kw) x (h_small*w_small) matrix;
// col2im is its exact transpose (scatter-add), which is what makes the
// conv/deconv pair mutually adjoint.
struct PatchGeom {
  int c, kh, kw, sh;
  int h_big, w_big;
  int h_small, w_small;
  int ph, pw;
};

RowMajorMatrixXd Im2Col(const Tensor3 &big, const PatchGeom &g) {
  RowMajorMatrixXd col =
      RowMajorMatrixXd::Zero(static_cast<long>(g.c) * g.kh * g.kw,
                             static_cast<long>(g.h_small) * g.w_small);
  for (int ci = 0; ci < g.c; ++ci) {
    for (int ky = 0; ky < g.kh; ++ky) {
      for (int kx = 0; kx < g.kw; ++kx) {
        const long row = (static_cast<long>(ci) * g.kh + ky) * g.kw + kx;
        // valid time range: 0 <= ox - pw + kx < w_big
        const int ox_lo = std::max(0, g.pw - kx);
        const int ox_hi = std::min(g.w_small, g.w_big + g.pw - kx);
        if (ox_lo >= ox_hi) continue;
        for (int oy = 0; oy < g.h_small; ++oy) {
          const int iy = oy * g.sh - g.ph + ky;
          if (iy < 0 || iy >= g.h_big) continue;
          const double *src =
              big.data.data() + (static_cast<long>(ci) * g.h_big + iy) * g.w_big;
          double *dst = col.data() + row * col.cols() + static_cast<long>(oy) * g.w_small;
          for (int ox = ox_lo; ox < ox_hi; ++ox) dst[ox] = src[ox - g.pw + kx];
        }
      }
    }
  }
  return col;
}

Tensor3 Col2Im(const RowMajorMatrixXd &col, const PatchGeom &g) {
  Tensor3 big(g.c, g.h_big, g.w_big);
  for (int ci = 0; ci < g.c; ++ci) {
    for (int ky = 0; ky < g.kh; ++ky) {
      for (int kx = 0; kx < g.kw; ++kx) {
        const long row = (static_cast<long>(ci) * g.kh + ky) * g.kw + kx;
        const int ox_lo = std::max(0, g.pw - kx);
        const int ox_hi = std::min(g.w_small, g.w_big + g.pw - kx);
        if (ox_lo >= ox_hi) continue;
        for (int oy = 0; oy < g.h_small; ++oy) {
          const int iy = oy * g.sh - g.ph + ky;
          if (iy < 0 || iy >= g.h_big) continue;
          double *dst = big.data.data() + (static_cast<long>(ci) * g.h_big + iy) * g.w_big;
          const double *src =
              col.data() + row * col.cols() + static_cast<long>(oy) * g.w_small;
          for (int ox = ox_lo; ox < ox_hi; ++ox) dst[ox - g.pw + kx] += src[ox];
        }
      }
    }
  }
  return big;
}

void RequireOdd(int k, const char *what) {
  if (k < 1 || k % 2 == 0)
    throw ConfigError(std::string(what) + " must be a positive odd number, got " +
                      std::to_string(k));
}

}  // namespace

MatrixXd FlattenFrames(const Tensor3 &t) {
  MatrixXd frames(t.w, static_cast<long>(t.c) * t.h);
  for (int ci = 0; ci < t.c; ++ci)
    for (int y = 0; y < t.h; ++y)
      for (int x = 0; x < t.w; ++x) frames(x, static_cast<long>(ci) * t.h + y) = t.At(ci, y, x);
  return frames;
}

Tensor3 UnflattenFrames(const MatrixXd &frames, int c, int h) {
  if (frames.cols() != static_cast<long>(c) * h)
    throw ShapeError("UnflattenFrames: got " + std::to_string(frames.cols()) +
                     " features, expected " + std::to_string(static_cast<long>(c) * h));
  Tensor3 t(c, h, static_cast<int>(frames.rows()));
  for (int ci = 0; ci < c; ++ci)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < t.w; ++x) t.At(ci, y, x) = frames(x, static_cast<long>(ci) * h + y);
  return t;
}

// ---------------------------------------------------------------------------

void ParamRegistry::Register(Parameter *p) {
  p->index = static_cast<int>(params_.size());
  params_.push_back(p);
}

long ParamRegistry::TotalCount() const {
  long n = 0;
  for (const Parameter *p : params_) n += p->value.size();
  return n;
}

double ParamRegistry::GetCoord(long k) const {
  for (const Parameter *p : params_) {
    if (k < p->value.size()) return p->value.data()[k];
    k -= p->value.size();
  }
  throw ShapeError("parameter coordinate out of range");
}

void ParamRegistry::AddToCoord(long k, double delta) {
  for (Parameter *p : params_) {
    if (k < p->value.size()) {
      p->value.data()[k] += delta;
      return;
    }
    k -= p->value.size();
  }
  throw ShapeError("parameter coordinate out of range");
}

GradBuffer::GradBuffer(const ParamRegistry &reg) {
  grads_.reserve(reg.size());
  for (int i = 0; i < reg.size(); ++i)
    grads_.push_back(MatrixXd::Zero(reg.at(i).value.rows(), reg.at(i).value.cols()));
}

void GradBuffer::SetZero() {
  for (MatrixXd &g : grads_) g.setZero();
}

void GradBuffer::Add(const GradBuffer &other) {
  for (size_t i = 0; i < grads_.size(); ++i) grads_[i] += other.grads_[i];
}

double GradBuffer::GetCoord(long k) const {
  for (const MatrixXd &g : grads_) {
    if (k < g.size()) return g.data()[k];
    k -= g.size();
  }
  throw ShapeError("gradient coordinate out of range");
}

// ---------------------------------------------------------------------------

Linear::Linear(const std::string &name, int in_dim, int out_dim) {
  weight_.name = name + ".w";
  weight_.value = MatrixXd::Zero(out_dim, in_dim);
  bias_.name = name + ".b";
  bias_.value = MatrixXd::Zero(out_dim, 1);
}

void Linear::Register(ParamRegistry *reg) {
  reg->Register(&weight_);
  reg->Register(&bias_);
}

void Linear::Init(Rng *rng, double scale) {
  double sd = scale / std::sqrt(static_cast<double>(weight_.value.cols()));
  for (long i = 0; i < weight_.value.size(); ++i) weight_.value.data()[i] = sd * rng->Normal();
  bias_.value.setZero();
}

MatrixXd Linear::Forward(const MatrixXd &x, Cache *cache) const {
  if (x.cols() != weight_.value.cols())
    throw ShapeError("Linear " + weight_.name + ": input width " + std::to_string(x.cols()) +
                     " != " + std::to_string(weight_.value.cols()));
  if (cache != nullptr) cache->x = x;
  MatrixXd out = x * weight_.value.transpose();
  out.rowwise() += bias_.value.col(0).transpose();
  return out;
}

MatrixXd Linear::Backward(const MatrixXd &gout, const Cache &cache, GradBuffer *grads) const {
  if (grads != nullptr) {
    (*grads)[weight_] += gout.transpose() * cache.x;
    (*grads)[bias_].col(0) += gout.colwise().sum().transpose();
  }
  return gout * weight_.value;
}

// ---------------------------------------------------------------------------

Conv2D::Conv2D(const std::string &name, int cin, int cout, int kh, int kw, int stride_h)
    : cin_(cin), cout_(cout), kh_(kh), kw_(kw), sh_(stride_h) {
  RequireOdd(kh, "conv kernel height");
  RequireOdd(kw, "conv kernel width");
  if (stride_h < 1) throw ConfigError("conv stride must be >= 1");
  weight_.name = name + ".w";
  weight_.value = MatrixXd::Zero(cout, static_cast<long>(cin) * kh * kw);
  bias_.name = name + ".b";
  bias_.value = MatrixXd::Zero(cout, 1);
}

void Conv2D::Register(ParamRegistry *reg) {
  reg->Register(&weight_);
  reg->Register(&bias_);
}

void Conv2D::Init(Rng *rng, double scale) {
  double sd = scale / std::sqrt(static_cast<double>(weight_.value.cols()));
  for (long i = 0; i < weight_.value.size(); ++i) weight_.value.data()[i] = sd * rng->Normal();
  bias_.value.setZero();
}

int Conv2D::OutHeight(int h_in) const {
  return (h_in + 2 * (kh_ / 2) - kh_) / sh_ + 1;
}

Tensor3 Conv2D::Forward(const Tensor3 &x, Cache *cache) const {
  if (x.c != cin_)
    throw ShapeError("Conv2D " + weight_.name + ": input channels " + std::to_string(x.c) +
                     " != " + std::to_string(cin_));
  if (cache != nullptr) cache->x = x;
  PatchGeom g{cin_, kh_, kw_, sh_, x.h, x.w, OutHeight(x.h), x.w, kh_ / 2, kw_ / 2};
  RowMajorMatrixXd col = Im2Col(x, g);
  Tensor3 out(cout_, g.h_small, g.w_small);
  out.AsMatrix() = weight_.value * col;
  for (int co = 0; co < cout_; ++co)
    out.AsMatrix().row(co).array() += bias_.value(co, 0);
  return out;
}

Tensor3 Conv2D::Backward(const Tensor3 &gout, const Cache &cache, GradBuffer *grads) const {
  const Tensor3 &x = cache.x;
  PatchGeom g{cin_, kh_, kw_, sh_, x.h, x.w, gout.h, gout.w, kh_ / 2, kw_ / 2};
  RowMajorMatrixXd col = Im2Col(x, g);
  if (grads != nullptr) {
    (*grads)[weight_] += gout.AsMatrix() * col.transpose();
    for (int co = 0; co < cout_; ++co)
      (*grads)[bias_](co, 0) += gout.AsMatrix().row(co).sum();
  }
  RowMajorMatrixXd gcol = weight_.value.transpose() * gout.AsMatrix();
  return Col2Im(gcol, g);
}

// ---------------------------------------------------------------------------

Deconv2D::Deconv2D(const std::string &name, int cin, int cout, int kh, int kw, int stride_h,
                   int h_in, int h_out)
    : cin_(cin), cout_(cout), kh_(kh), kw_(kw), sh_(stride_h), h_in_(h_in), h_out_(h_out) {
  RequireOdd(kh, "deconv kernel height");
  RequireOdd(kw, "deconv kernel width");
  if (stride_h < 1) throw ConfigError("deconv stride must be >= 1");
  int base = (h_in - 1) * stride_h - 2 * (kh / 2) + kh;
  int output_padding = h_out - base;
  if (output_padding < 0 || output_padding >= stride_h)
    throw ConfigError("Deconv2D " + name + ": target height " + std::to_string(h_out) +
                      " unreachable from " + std::to_string(h_in) + " with stride " +
                      std::to_string(stride_h));
  weight_.name = name + ".w";
  weight_.value = MatrixXd::Zero(static_cast<long>(cout) * kh * kw, cin);
  bias_.name = name + ".b";
  bias_.value = MatrixXd::Zero(cout, 1);
}

void Deconv2D::Register(ParamRegistry *reg) {
  reg->Register(&weight_);
  reg->Register(&bias_);
}

void Deconv2D::Init(Rng *rng, double scale) {
  // fan-in of the transposed op is cin per kernel tap
  double sd = scale / std::sqrt(static_cast<double>(cin_) * kh_ * kw_ / sh_);
  for (long i = 0; i < weight_.value.size(); ++i) weight_.value.data()[i] = sd * rng->Normal();
  bias_.value.setZero();
}

Tensor3 Deconv2D::Forward(const Tensor3 &x, Cache *cache) const {
  if (x.c != cin_ || x.h != h_in_)
    throw ShapeError("Deconv2D " + weight_.name + ": input " + std::to_string(x.c) + "x" +
                     std::to_string(x.h) + ", expected " + std::to_string(cin_) + "x" +
                     std::to_string(h_in_));
  if (cache != nullptr) cache->x = x;
  PatchGeom g{cout_, kh_, kw_, sh_, h_out_, x.w, h_in_, x.w, kh_ / 2, kw_ / 2};
  RowMajorMatrixXd col = weight_.value * x.AsMatrix();
  Tensor3 out = Col2Im(col, g);
  for (int co = 0; co < cout_; ++co)
    out.AsMatrix().row(co).array() += bias_.value(co, 0);
  return out;
}

Tensor3 Deconv2D::Backward(const Tensor3 &gout, const Cache &cache, GradBuffer *grads) const {
  PatchGeom g{cout_, kh_, kw_, sh_, h_out_, gout.w, h_in_, gout.w, kh_ / 2, kw_ / 2};
  RowMajorMatrixXd col = Im2Col(gout, g);
  if (grads != nullptr) {
    (*grads)[weight_] += col * cache.x.AsMatrix().transpose();
    for (int co = 0; co < cout_; ++co)
      (*grads)[bias_](co, 0) += gout.AsMatrix().row(co).sum();
  }
  Tensor3 gx(cin_, h_in_, gout.w);
  gx.AsMatrix() = weight_.value.transpose() * col;
  return gx;
}

// ---------------------------------------------------------------------------

LayerNormRow::LayerNormRow(const std::string &name, int dim, double eps) : eps_(eps) {
  gain_.name = name + ".g";
  gain_.value = MatrixXd::Ones(dim, 1);
  bias_.name = name + ".b";
  bias_.value = MatrixXd::Zero(dim, 1);
}

void LayerNormRow::Register(ParamRegistry *reg) {
  reg->Register(&gain_);
  reg->Register(&bias_);
}

MatrixXd LayerNormRow::Forward(const MatrixXd &x, Cache *cache) const {
  const long n = x.cols();
  MatrixXd xhat(x.rows(), n);
  VectorXd inv_std(x.rows());
  for (long r = 0; r < x.rows(); ++r) {
    double mean = x.row(r).mean();
    double var = (x.row(r).array() - mean).square().sum() / n;
    double is = 1.0 / std::sqrt(var + eps_);
    xhat.row(r) = (x.row(r).array() - mean) * is;
    inv_std[r] = is;
  }
  MatrixXd out = xhat.array().rowwise() * gain_.value.col(0).transpose().array();
  out.rowwise() += bias_.value.col(0).transpose();
  if (cache != nullptr) {
    cache->xhat = std::move(xhat);
    cache->inv_std = std::move(inv_std);
  }
  return out;
}

MatrixXd LayerNormRow::Backward(const MatrixXd &gout, const Cache &cache,
                                GradBuffer *grads) const {
  const long n = gout.cols();
  if (grads != nullptr) {
    (*grads)[gain_].col(0) +=
        (gout.array() * cache.xhat.array()).matrix().colwise().sum().transpose();
    (*grads)[bias_].col(0) += gout.colwise().sum().transpose();
  }
  MatrixXd gx(gout.rows(), n);
  for (long r = 0; r < gout.rows(); ++r) {
    Eigen::ArrayXd gg = gout.row(r).transpose().array() * gain_.value.col(0).array();
    double mean_gg = gg.mean();
    double mean_ggx = (gg * cache.xhat.row(r).transpose().array()).mean();
    gx.row(r) = ((gg - mean_gg - cache.xhat.row(r).transpose().array() * mean_ggx) *
                 cache.inv_std[r])
                    .transpose();
  }
  return gx;
}

// ---------------------------------------------------------------------------

LayerNormChannel::LayerNormChannel(const std::string &name, int channels, double eps)
    : eps_(eps) {
  gain_.name = name + ".g";
  gain_.value = MatrixXd::Ones(channels, 1);
  bias_.name = name + ".b";
  bias_.value = MatrixXd::Zero(channels, 1);
}

void LayerNormChannel::Register(ParamRegistry *reg) {
  reg->Register(&gain_);
  reg->Register(&bias_);
}

Tensor3 LayerNormChannel::Forward(const Tensor3 &x, Cache *cache) const {
  const long group = static_cast<long>(x.c) * x.h;
  Tensor3 xhat(x.c, x.h, x.w);
  VectorXd inv_std(x.w);
  for (int t = 0; t < x.w; ++t) {
    double sum = 0.0, sq = 0.0;
    for (int ci = 0; ci < x.c; ++ci)
      for (int y = 0; y < x.h; ++y) sum += x.At(ci, y, t);
    double mean = sum / group;
    for (int ci = 0; ci < x.c; ++ci)
      for (int y = 0; y < x.h; ++y) {
        double d = x.At(ci, y, t) - mean;
        sq += d * d;
      }
    double is = 1.0 / std::sqrt(sq / group + eps_);
    inv_std[t] = is;
    for (int ci = 0; ci < x.c; ++ci)
      for (int y = 0; y < x.h; ++y) xhat.At(ci, y, t) = (x.At(ci, y, t) - mean) * is;
  }
  Tensor3 out(x.c, x.h, x.w);
  for (int ci = 0; ci < x.c; ++ci) {
    double g = gain_.value(ci, 0), b = bias_.value(ci, 0);
    for (int y = 0; y < x.h; ++y)
      for (int t = 0; t < x.w; ++t) out.At(ci, y, t) = g * xhat.At(ci, y, t) + b;
  }
  if (cache != nullptr) {
    cache->xhat = std::move(xhat);
    cache->inv_std = std::move(inv_std);
  }
  return out;
}

Tensor3 LayerNormChannel::Backward(const Tensor3 &gout, const Cache &cache,
                                   GradBuffer *grads) const {
  const Tensor3 &xhat = cache.xhat;
  const long group = static_cast<long>(gout.c) * gout.h;
  if (grads != nullptr) {
    for (int ci = 0; ci < gout.c; ++ci) {
      double gg = 0.0, gb = 0.0;
      for (int y = 0; y < gout.h; ++y)
        for (int t = 0; t < gout.w; ++t) {
          gg += gout.At(ci, y, t) * xhat.At(ci, y, t);
          gb += gout.At(ci, y, t);
        }
      (*grads)[gain_](ci, 0) += gg;
      (*grads)[bias_](ci, 0) += gb;
    }
  }
  Tensor3 gx(gout.c, gout.h, gout.w);
  for (int t = 0; t < gout.w; ++t) {
    double mean_gg = 0.0, mean_ggx = 0.0;
    for (int ci = 0; ci < gout.c; ++ci) {
      double g = gain_.value(ci, 0);
      for (int y = 0; y < gout.h; ++y) {
        double v = gout.At(ci, y, t) * g;
        mean_gg += v;
        mean_ggx += v * xhat.At(ci, y, t);
      }
    }
    mean_gg /= group;
    mean_ggx /= group;
    double is = cache.inv_std[t];
    for (int ci = 0; ci < gout.c; ++ci) {
      double g = gain_.value(ci, 0);
      for (int y = 0; y < gout.h; ++y) {
        double v = gout.At(ci, y, t) * g;
        gx.At(ci, y, t) = (v - mean_gg - xhat.At(ci, y, t) * mean_ggx) * is;
      }
    }
  }
  return gx;
}

// ---------------------------------------------------------------------------

MatrixXd LeakyRelu(const MatrixXd &x, double slope) {
  return x.unaryExpr([slope](double v) { return v > 0.0 ? v : slope * v; });
}

MatrixXd LeakyReluBackward(const MatrixXd &gout, const MatrixXd &x, double slope) {
  MatrixXd gx = gout;
  for (long i = 0; i < x.size(); ++i)
    if (x.data()[i] <= 0.0) gx.data()[i] *= slope;
  return gx;
}

Tensor3 LeakyRelu(const Tensor3 &x, double slope) {
  Tensor3 out = x;
  for (long i = 0; i < out.size(); ++i)
    if (out.data[i] <= 0.0) out.data[i] *= slope;
  return out;
}

Tensor3 LeakyReluBackward(const Tensor3 &gout, const Tensor3 &x, double slope) {
  Tensor3 gx = gout;
  for (long i = 0; i < x.size(); ++i)
    if (x.data[i] <= 0.0) gx.data[i] *= slope;
  return gx;
}

Tensor3 Glu(const Tensor3 &x, GluCache *cache) {
  if (x.c % 2 != 0) throw ShapeError("GLU needs an even channel count");
  const int half = x.c / 2;
  Tensor3 a(half, x.h, x.w), sig_b(half, x.h, x.w), out(half, x.h, x.w);
  for (int ci = 0; ci < half; ++ci)
    for (int y = 0; y < x.h; ++y)
      for (int t = 0; t < x.w; ++t) {
        double av = x.At(ci, y, t);
        double sb = 1.0 / (1.0 + std::exp(-x.At(ci + half, y, t)));
        a.At(ci, y, t) = av;
        sig_b.At(ci, y, t) = sb;
        out.At(ci, y, t) = av * sb;
      }
  if (cache != nullptr) {
    cache->a = std::move(a);
    cache->sig_b = std::move(sig_b);
  }
  return out;
}

Tensor3 GluBackward(const Tensor3 &gout, const GluCache &cache) {
  const int half = gout.c;
  Tensor3 gx(2 * half, gout.h, gout.w);
  for (int ci = 0; ci < half; ++ci)
    for (int y = 0; y < gout.h; ++y)
      for (int t = 0; t < gout.w; ++t) {
        double g = gout.At(ci, y, t);
        double sb = cache.sig_b.At(ci, y, t);
        gx.At(ci, y, t) = g * sb;
        gx.At(ci + half, y, t) = g * cache.a.At(ci, y, t) * sb * (1.0 - sb);
      }
  return gx;
}

Tensor3 ConcatCondChannels(const Tensor3 &x, const MatrixXd &cond) {
  if (cond.rows() != x.w)
    throw ShapeError("conditioning has " + std::to_string(cond.rows()) + " frames, tensor has " +
                     std::to_string(x.w));
  const int cdim = static_cast<int>(cond.cols());
  Tensor3 out(x.c + cdim, x.h, x.w);
  std::copy(x.data.data(), x.data.data() + x.size(), out.data.data());
  for (int j = 0; j < cdim; ++j)
    for (int y = 0; y < x.h; ++y)
      for (int t = 0; t < x.w; ++t) out.At(x.c + j, y, t) = cond(t, j);
  return out;
}

Tensor3 SplitCondChannels(const Tensor3 &gout, int x_channels, MatrixXd *gcond) {
  const int cdim = gout.c - x_channels;
  Tensor3 gx(x_channels, gout.h, gout.w);
  std::copy(gout.data.data(), gout.data.data() + gx.size(), gx.data.data());
  if (gcond != nullptr) {
    for (int j = 0; j < cdim; ++j)
      for (int y = 0; y < gout.h; ++y)
        for (int t = 0; t < gout.w; ++t) (*gcond)(t, j) += gout.At(x_channels + j, y, t);
  }
  return gx;
}

// ---------------------------------------------------------------------------

Adam::Adam(const ParamRegistry &reg, const Config &config) : config_(config) {
  m_.reserve(reg.size());
  v_.reserve(reg.size());
  for (int i = 0; i < reg.size(); ++i) {
    m_.push_back(MatrixXd::Zero(reg.at(i).value.rows(), reg.at(i).value.cols()));
    v_.push_back(MatrixXd::Zero(reg.at(i).value.rows(), reg.at(i).value.cols()));
  }
}

void Adam::Step(ParamRegistry *reg, const GradBuffer &grads) {
  ++t_;
  const double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
  for (int i = 0; i < reg->size(); ++i) {
    const MatrixXd &g = grads.at(i);
    m_[i] = config_.beta1 * m_[i] + (1.0 - config_.beta1) * g;
    v_[i] = config_.beta2 * v_[i] + (1.0 - config_.beta2) * g.cwiseProduct(g);
    MatrixXd mhat = m_[i] / bc1;
    MatrixXd vhat = v_[i] / bc2;
    reg->at(i).value.array() -=
        config_.lr * mhat.array() / (vhat.array().sqrt() + config_.eps);
  }
}

void ParallelFor(int n, int threads, const std::function<void(int)> &fn) {
  if (threads <= 0) threads = static_cast<int>(std::thread::hardware_concurrency());
  threads = std::max(1, std::min(threads, n));
  if (threads == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&, t]() {
      for (int i = t; i < n; i += threads) fn(i);
    });
  }
  for (std::thread &th : pool) th.join();
}

}  // namespace nn
}  // namespace vclab
