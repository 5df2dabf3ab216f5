#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace stj {

/// A dense float image, values in [0,1], interleaved channels, row-major.
struct Frame {
  int h = 0;
  int w = 0;
  int c = 0;
  std::vector<float> v;

  Frame() = default;
  Frame(int h_, int w_, int c_, float fill = 0.f)
      : h(h_), w(w_), c(c_), v(static_cast<std::size_t>(h_) * w_ * c_, fill) {}

  float& at(int y, int x, int ch) {
    return v[(static_cast<std::size_t>(y) * w + x) * c + ch];
  }
  const float& at(int y, int x, int ch) const {
    return v[(static_cast<std::size_t>(y) * w + x) * c + ch];
  }
  std::size_t size() const { return v.size(); }

  bool operator==(const Frame& o) const = default;
};

/// Integer pixel rectangle, half-open: [x0, x1) x [y0, y1).
struct Rect {
  int x0 = 0, y0 = 0, x1 = 0, y1 = 0;
  int width() const { return x1 - x0; }
  int height() const { return y1 - y0; }
  bool empty() const { return width() <= 0 || height() <= 0; }
};

namespace detail {

/// Precomputed 1-D bilinear taps for scaling n_src samples to n_dst.
/// Half-pixel-center convention: src = (dst + 0.5) * n_src / n_dst - 0.5.
struct LinearTaps {
  std::vector<int> i0, i1;
  std::vector<float> w1;  // weight of i1; weight of i0 is 1 - w1
  LinearTaps(int n_src, int n_dst) : i0(n_dst), i1(n_dst), w1(n_dst) {
    const double scale = static_cast<double>(n_src) / n_dst;
    for (int d = 0; d < n_dst; ++d) {
      double s = (d + 0.5) * scale - 0.5;
      s = std::clamp(s, 0.0, static_cast<double>(n_src - 1));
      int lo = static_cast<int>(std::floor(s));
      int hi = std::min(lo + 1, n_src - 1);
      i0[d] = lo;
      i1[d] = hi;
      w1[d] = static_cast<float>(s - lo);
    }
  }
};

}  // namespace detail

/// Bilinear resample of a sub-rectangle of src into an oh x ow frame.
/// The rect must be non-empty and inside src.
inline Frame resize_region(const Frame& src, const Rect& r, int oh, int ow) {
  if (r.empty() || r.x0 < 0 || r.y0 < 0 || r.x1 > src.w || r.y1 > src.h)
    throw std::invalid_argument("resize_region: rect outside frame");
  if (oh < 1 || ow < 1) throw std::invalid_argument("resize_region: bad output size");

  const detail::LinearTaps ty(r.height(), oh), tx(r.width(), ow);
  Frame out(oh, ow, src.c);
  for (int y = 0; y < oh; ++y) {
    const int sy0 = r.y0 + ty.i0[y], sy1 = r.y0 + ty.i1[y];
    const float fy = ty.w1[y];
    for (int x = 0; x < ow; ++x) {
      const int sx0 = r.x0 + tx.i0[x], sx1 = r.x0 + tx.i1[x];
      const float fx = tx.w1[x];
      for (int ch = 0; ch < src.c; ++ch) {
        const float a = src.at(sy0, sx0, ch), b = src.at(sy0, sx1, ch);
        const float c = src.at(sy1, sx0, ch), d = src.at(sy1, sx1, ch);
        const float top = a + (b - a) * fx;
        const float bot = c + (d - c) * fx;
        out.at(y, x, ch) = top + (bot - top) * fy;
      }
    }
  }
  return out;
}

/// Bilinear resample of the whole frame.
inline Frame resize(const Frame& src, int oh, int ow) {
  if (src.h == oh && src.w == ow) return src;
  return resize_region(src, Rect{0, 0, src.w, src.h}, oh, ow);
}

/// Mean absolute per-pixel difference between two frames of equal shape.
inline double mean_abs_diff(const Frame& a, const Frame& b) {
  if (a.h != b.h || a.w != b.w || a.c != b.c)
    throw std::invalid_argument("mean_abs_diff: shape mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.v.size(); ++i) s += std::abs(double(a.v[i]) - b.v[i]);
  return a.v.empty() ? 0.0 : s / static_cast<double>(a.v.size());
}

}  // namespace stj
