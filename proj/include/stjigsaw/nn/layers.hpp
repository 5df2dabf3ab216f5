#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "stjigsaw/nn/parallel.hpp"
#include "stjigsaw/nn/tensor.hpp"
#include "stjigsaw/rng.hpp"

namespace stj::nn {

using RowMat = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapRM = Eigen::Map<RowMat>;
using CMapRM = Eigen::Map<const RowMat>;

/// One named parameter blob with its gradient, exposed for the optimizer
/// and for checkpointing.
struct ParamRef {
  std::string name;
  std::vector<float>* w;
  std::vector<float>* g;
};

namespace detail {

/// Gathers the receptive fields of every output voxel into a row-major
/// (cin*kt*kh*kw) x (T*H*W) matrix, applying max(0, .) to each tap.
/// Out-of-range taps are zero (padding kt/2, kh/2, kw/2; stride 1).
inline void im2col_relu(const float* x, int cin, int T, int H, int W, int kt, int kh,
                        int kw, float* col) {
  const int pt = kt / 2, ph = kh / 2, pw = kw / 2;
  const std::size_t plane = static_cast<std::size_t>(H) * W;
  const std::size_t n = static_cast<std::size_t>(T) * plane;
  float* row = col;
  for (int c = 0; c < cin; ++c) {
    const float* xc = x + static_cast<std::size_t>(c) * T * plane;
    for (int dt = -pt; dt <= pt; ++dt)
      for (int dy = -ph; dy <= ph; ++dy)
        for (int dx = -pw; dx <= pw; ++dx) {
          for (int t = 0; t < T; ++t) {
            float* dst = row + static_cast<std::size_t>(t) * plane;
            const int ts = t + dt;
            if (ts < 0 || ts >= T) {
              std::fill(dst, dst + plane, 0.f);
              continue;
            }
            const float* xt = xc + static_cast<std::size_t>(ts) * plane;
            for (int y = 0; y < H; ++y, dst += W) {
              const int ys = y + dy;
              if (ys < 0 || ys >= H) {
                std::fill(dst, dst + W, 0.f);
                continue;
              }
              const float* xr = xt + static_cast<std::size_t>(ys) * W;
              const int x_lo = std::max(0, -dx), x_hi = std::min(W, W - dx);
              for (int i = 0; i < x_lo; ++i) dst[i] = 0.f;
              for (int i = x_lo; i < x_hi; ++i) dst[i] = std::max(0.f, xr[i + dx]);
              for (int i = x_hi; i < W; ++i) dst[i] = 0.f;
            }
          }
          row += n;
        }
  }
}

/// Transpose scatter of im2col: accumulates dcol back onto the input grid,
/// then applies the relu mask of the stored input.
inline void col2im_masked(const float* dcol, const float* x, int cin, int T, int H, int W,
                          int kt, int kh, int kw, float* dx) {
  const int pt = kt / 2, ph = kh / 2, pw = kw / 2;
  const std::size_t plane = static_cast<std::size_t>(H) * W;
  const std::size_t n = static_cast<std::size_t>(T) * plane;
  std::fill(dx, dx + static_cast<std::size_t>(cin) * T * plane, 0.f);
  const float* row = dcol;
  for (int c = 0; c < cin; ++c) {
    float* dxc = dx + static_cast<std::size_t>(c) * T * plane;
    for (int dt = -pt; dt <= pt; ++dt)
      for (int dy = -ph; dy <= ph; ++dy)
        for (int dx2 = -pw; dx2 <= pw; ++dx2) {
          for (int t = 0; t < T; ++t) {
            const float* src = row + static_cast<std::size_t>(t) * plane;
            const int ts = t + dt;
            if (ts < 0 || ts >= T) continue;
            float* dxt = dxc + static_cast<std::size_t>(ts) * plane;
            for (int y = 0; y < H; ++y, src += W) {
              const int ys = y + dy;
              if (ys < 0 || ys >= H) continue;
              float* dxr = dxt + static_cast<std::size_t>(ys) * W;
              const int x_lo = std::max(0, -dx2), x_hi = std::min(W, W - dx2);
              for (int i = x_lo; i < x_hi; ++i) dxr[i + dx2] += src[i];
            }
          }
          row += n;
        }
  }
  const float* xs = x;
  for (std::size_t i = 0; i < static_cast<std::size_t>(cin) * T * plane; ++i)
    if (xs[i] <= 0.f) dx[i] = 0.f;
}

}  // namespace detail

/// 3-D convolution, stride 1, zero padding k/2, no bias (each conv is
/// followed by instance normalization). The input passes through max(0, .)
/// as it is gathered, so a stored pre-activation feeds the next conv
/// without a separate relu buffer. kt = 1 gives a plain 2-D convolution.
class Conv3d {
 public:
  Conv3d(std::string name, int cin, int cout, int kt)
      : name_(std::move(name)), cin_(cin), cout_(cout), kt_(kt),
        k_(cin * kt * 9),
        w_(static_cast<std::size_t>(cout) * k_),
        g_(w_.size(), 0.f) {}

  void init(Rng& rng) {
    const double std = std::sqrt(2.0 / static_cast<double>(k_));
    for (float& v : w_) v = static_cast<float>(normal01(rng) * std);
  }

  ParamRef param() { return {name_ + ".w", &w_, &g_}; }
  int cout() const { return cout_; }

  void forward(const Tensor& x, Tensor& y) const {
    const int B = x.d[0], T = x.d[2], H = x.d[3], W = x.d[4];
    if (x.d[1] != cin_) throw std::invalid_argument(name_ + ": channel mismatch");
    y.resize(B, cout_, T, H, W);
    const std::size_t n = static_cast<std::size_t>(T) * H * W;
    parallel_chunks(B, [&](int, int lo, int hi) {
      std::vector<float> col(static_cast<std::size_t>(k_) * n);
      for (int b = lo; b < hi; ++b) {
        detail::im2col_relu(x.sample(b), cin_, T, H, W, kt_, 3, 3, col.data());
        CMapRM wm(w_.data(), cout_, k_);
        CMapRM cm(col.data(), k_, static_cast<Eigen::Index>(n));
        MapRM ym(y.sample(b), cout_, static_cast<Eigen::Index>(n));
        ym.noalias() = wm * cm;
      }
    });
  }

  /// Accumulates the weight gradient and (unless dx is null) the input
  /// gradient, already masked by the input's relu.
  void backward(const Tensor& x, const Tensor& dy, Tensor* dx) {
    const int B = x.d[0], T = x.d[2], H = x.d[3], W = x.d[4];
    const std::size_t n = static_cast<std::size_t>(T) * H * W;
    if (dx) dx->resize(B, cin_, T, H, W);

    const int chunks = effective_workers(B);
    std::vector<std::vector<float>> gw_part(static_cast<std::size_t>(chunks));
    parallel_chunks(B, [&](int chunk, int lo, int hi) {
      auto& gw = gw_part[static_cast<std::size_t>(chunk)];
      gw.assign(w_.size(), 0.f);
      std::vector<float> col(static_cast<std::size_t>(k_) * n);
      std::vector<float> dcol(dx ? col.size() : 0);
      for (int b = lo; b < hi; ++b) {
        detail::im2col_relu(x.sample(b), cin_, T, H, W, kt_, 3, 3, col.data());
        CMapRM cm(col.data(), k_, static_cast<Eigen::Index>(n));
        CMapRM dym(dy.sample(b), cout_, static_cast<Eigen::Index>(n));
        MapRM gwm(gw.data(), cout_, k_);
        gwm.noalias() += dym * cm.transpose();
        if (dx) {
          CMapRM wm(w_.data(), cout_, k_);
          MapRM dcm(dcol.data(), k_, static_cast<Eigen::Index>(n));
          dcm.noalias() = wm.transpose() * dym;
          detail::col2im_masked(dcol.data(), x.sample(b), cin_, T, H, W, kt_, 3, 3,
                                dx->sample(b));
        }
      }
    });
    for (const auto& gw : gw_part)
      if (!gw.empty())
        for (std::size_t i = 0; i < g_.size(); ++i) g_[i] += gw[i];
  }

 private:
  std::string name_;
  int cin_, cout_, kt_, k_;
  std::vector<float> w_, g_;
};

/// Instance normalization without affine parameters: every (sample,
/// channel) slice is normalized over its spatial(-temporal) extent.
/// Forward runs in place; backward needs the normalized output.
class InstanceNorm {
 public:
  static constexpr double kEps = 1e-5;

  /// Normalizes y in place and records 1/sigma per (b, c).
  void forward(Tensor& y) {
    const int B = y.d[0], C = y.d[1];
    const std::size_t n = y.sample_size() / static_cast<std::size_t>(C);
    invstd_.assign(static_cast<std::size_t>(B) * C, 0.f);
    parallel_chunks(B, [&](int, int lo, int hi) {
      for (int b = lo; b < hi; ++b)
        for (int c = 0; c < C; ++c) {
          float* p = y.sample(b) + static_cast<std::size_t>(c) * n;
          double mean = 0.0;
          for (std::size_t i = 0; i < n; ++i) mean += p[i];
          mean /= static_cast<double>(n);
          double var = 0.0;
          for (std::size_t i = 0; i < n; ++i) {
            const double d = p[i] - mean;
            var += d * d;
          }
          var /= static_cast<double>(n);
          const float is = static_cast<float>(1.0 / std::sqrt(var + kEps));
          invstd_[static_cast<std::size_t>(b) * C + c] = is;
          for (std::size_t i = 0; i < n; ++i)
            p[i] = static_cast<float>((p[i] - mean) * is);
        }
    });
  }

  /// dx = invstd * (dy - mean(dy) - y * mean(dy * y)), in place on dy.
  void backward(const Tensor& y, Tensor& dy) const {
    const int B = y.d[0], C = y.d[1];
    const std::size_t n = y.sample_size() / static_cast<std::size_t>(C);
    parallel_chunks(B, [&](int, int lo, int hi) {
      for (int b = lo; b < hi; ++b)
        for (int c = 0; c < C; ++c) {
          const float* yp = y.sample(b) + static_cast<std::size_t>(c) * n;
          float* dp = dy.sample(b) + static_cast<std::size_t>(c) * n;
          double mg = 0.0, mgy = 0.0;
          for (std::size_t i = 0; i < n; ++i) {
            mg += dp[i];
            mgy += static_cast<double>(dp[i]) * yp[i];
          }
          mg /= static_cast<double>(n);
          mgy /= static_cast<double>(n);
          const float is = invstd_[static_cast<std::size_t>(b) * C + c];
          for (std::size_t i = 0; i < n; ++i)
            dp[i] = static_cast<float>(is * (dp[i] - mg - yp[i] * mgy));
        }
    });
  }

 private:
  std::vector<float> invstd_;
};

/// Max pooling over (T, H, W) windows with stride = kernel. kt = -1 pools
/// the full temporal extent (global temporal pooling). The input passes
/// through max(0, .): pooling and relu commute, so absorbing the relu here
/// matches conv/IN/relu/pool without a relu buffer.
class MaxPool3d {
 public:
  MaxPool3d(int kt, int kh, int kw) : kt_(kt), kh_(kh), kw_(kw) {}

  void forward(const Tensor& x, Tensor& y, std::vector<std::int32_t>& argmax) const {
    const int B = x.d[0], C = x.d[1], T = x.d[2], H = x.d[3], W = x.d[4];
    const int kt = kt_ < 0 ? T : kt_;
    const int To = T / kt, Ho = H / kh_, Wo = W / kw_;
    if (To < 1 || Ho < 1 || Wo < 1) throw std::invalid_argument("MaxPool3d: input too small");
    y.resize(B, C, To, Ho, Wo);
    argmax.assign(y.numel(), 0);
    const std::size_t in_plane = static_cast<std::size_t>(H) * W;
    parallel_chunks(B, [&](int, int lo, int hi) {
      for (int b = lo; b < hi; ++b) {
        const float* xs = x.sample(b);
        float* ys = y.sample(b);
        std::int32_t* am = argmax.data() + y.sample_size() * static_cast<std::size_t>(b);
        std::size_t o = 0;
        for (int c = 0; c < C; ++c) {
          const std::size_t cbase = static_cast<std::size_t>(c) * T * in_plane;
          for (int to = 0; to < To; ++to)
            for (int ho = 0; ho < Ho; ++ho)
              for (int wo = 0; wo < Wo; ++wo, ++o) {
                float best = -std::numeric_limits<float>::infinity();
                std::int32_t best_i = 0;
                for (int dt = 0; dt < kt; ++dt)
                  for (int dh = 0; dh < kh_; ++dh)
                    for (int dw = 0; dw < kw_; ++dw) {
                      const std::size_t i = cbase +
                          (static_cast<std::size_t>(to * kt + dt) * H + ho * kh_ + dh) * W +
                          wo * kw_ + dw;
                      if (xs[i] > best) {
                        best = xs[i];
                        best_i = static_cast<std::int32_t>(i);
                      }
                    }
                ys[o] = std::max(0.f, best);
                am[o] = best_i;
              }
        }
      }
    });
  }

  void backward(const Tensor& y, const std::vector<std::int32_t>& argmax, const Tensor& dy,
                Tensor& dx, const std::array<int, 5>& in_dims) const {
    dx.resize(in_dims[0], in_dims[1], in_dims[2], in_dims[3], in_dims[4]);
    const int B = y.d[0];
    parallel_chunks(B, [&](int, int lo, int hi) {
      for (int b = lo; b < hi; ++b) {
        const float* ys = y.sample(b);
        const float* dys = dy.sample(b);
        float* dxs = dx.sample(b);
        const std::int32_t* am = argmax.data() + y.sample_size() * static_cast<std::size_t>(b);
        for (std::size_t o = 0; o < y.sample_size(); ++o)
          if (ys[o] > 0.f) dxs[am[o]] += dys[o];
      }
    });
  }

 private:
  int kt_, kh_, kw_;
};

/// Channel dropout on a pooled 2-D map: whole (sample, channel) slices are
/// zeroed with probability `rate`, survivors scaled by 1/(1-rate). Channel
/// dropout commutes with max pooling, so it is applied after the pool.
class Dropout2d {
 public:
  explicit Dropout2d(float rate) : rate_(rate) {
    if (rate < 0.f || rate >= 1.f) throw std::invalid_argument("Dropout2d: bad rate");
  }

  void forward(Tensor& y, bool train, Rng& rng) {
    const int B = y.d[0], C = y.d[1];
    scale_.assign(static_cast<std::size_t>(B) * C, 1.f);
    if (!train || rate_ == 0.f) return;
    const float keep_scale = 1.f / (1.f - rate_);
    const std::size_t n = y.sample_size() / static_cast<std::size_t>(C);
    for (int b = 0; b < B; ++b)
      for (int c = 0; c < C; ++c) {
        const bool keep = uniform_real01(rng) >= rate_;
        const float s = keep ? keep_scale : 0.f;
        scale_[static_cast<std::size_t>(b) * C + c] = s;
        float* p = y.sample(b) + static_cast<std::size_t>(c) * n;
        for (std::size_t i = 0; i < n; ++i) p[i] *= s;
      }
  }

  void backward(Tensor& dy) const {
    const int B = dy.d[0], C = dy.d[1];
    const std::size_t n = dy.sample_size() / static_cast<std::size_t>(C);
    for (int b = 0; b < B; ++b)
      for (int c = 0; c < C; ++c) {
        const float s = scale_[static_cast<std::size_t>(b) * C + c];
        if (s == 1.f) continue;
        float* p = dy.sample(b) + static_cast<std::size_t>(c) * n;
        for (std::size_t i = 0; i < n; ++i) p[i] *= s;
      }
  }

 private:
  float rate_;
  std::vector<float> scale_;
};

/// Fully connected layer with bias; optionally applies max(0, .) to its
/// input (for a stored pre-activation hidden layer).
class Linear {
 public:
  Linear(std::string name, int in, int out, bool relu_input)
      : name_(std::move(name)), in_(in), out_(out), relu_input_(relu_input),
        w_(static_cast<std::size_t>(in) * out), gw_(w_.size(), 0.f),
        b_(static_cast<std::size_t>(out), 0.f), gb_(b_.size(), 0.f) {}

  void init(Rng& rng) {
    const double std = std::sqrt(2.0 / static_cast<double>(in_));
    for (float& v : w_) v = static_cast<float>(normal01(rng) * std);
    std::fill(b_.begin(), b_.end(), 0.f);
  }

  ParamRef weight() { return {name_ + ".w", &w_, &gw_}; }
  ParamRef bias() { return {name_ + ".b", &b_, &gb_}; }
  int out() const { return out_; }

  void forward(const Tensor& x, Tensor& y) const {
    const int B = x.d[0];
    if (static_cast<int>(x.sample_size()) != in_)
      throw std::invalid_argument(name_ + ": input size mismatch");
    y.resize(B, out_);
    CMapRM xm(x.v.data(), B, in_);
    CMapRM wm(w_.data(), out_, in_);
    MapRM ym(y.v.data(), B, out_);
    if (relu_input_)
      ym.noalias() = xm.cwiseMax(0.f) * wm.transpose();
    else
      ym.noalias() = xm * wm.transpose();
    Eigen::Map<const Eigen::VectorXf> bm(b_.data(), out_);
    ym.rowwise() += bm.transpose();
  }

  void backward(const Tensor& x, const Tensor& dy, Tensor& dx) {
    const int B = x.d[0];
    CMapRM xm(x.v.data(), B, in_);
    CMapRM dym(dy.v.data(), B, out_);
    MapRM gwm(gw_.data(), out_, in_);
    if (relu_input_)
      gwm.noalias() += dym.transpose() * xm.cwiseMax(0.f);
    else
      gwm.noalias() += dym.transpose() * xm;
    Eigen::Map<Eigen::VectorXf> gbm(gb_.data(), out_);
    gbm.noalias() += dym.colwise().sum().transpose();

    dx.resize(B, in_);
    MapRM dxm(dx.v.data(), B, in_);
    CMapRM wm(w_.data(), out_, in_);
    dxm.noalias() = dym * wm;
    if (relu_input_) {
      for (std::size_t i = 0; i < dx.v.size(); ++i)
        if (x.v[i] <= 0.f) dx.v[i] = 0.f;
    }
  }

 private:
  std::string name_;
  int in_, out_;
  bool relu_input_;
  std::vector<float> w_, gw_, b_, gb_;
};

}  // namespace stj::nn
