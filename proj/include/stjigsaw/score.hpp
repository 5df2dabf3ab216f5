#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "stjigsaw/puzzle.hpp"

namespace stj {

/// Column-stochastic k x k position-probability matrix produced by one
/// solver head on an unshuffled cube. probs(p, e) is the predicted
/// probability that the element at slot e originally sat at position p;
/// each column sums to one, and the diagonal carries the "already in
/// order" confidence.
struct PredictionMatrix {
  int k = 0;
  PuzzleKind kind = PuzzleKind::temporal;
  std::vector<float> probs;  // row-major (position, element)

  float at(int pos, int elem) const {
    return probs[static_cast<std::size_t>(pos) * k + elem];
  }
};

/// Object-level regularity: the minimum diagonal entry. One misplaced
/// element is enough to make a sequence irregular, hence min not mean.
inline double object_regularity(const PredictionMatrix& m) {
  if (m.k < 1 || m.probs.size() != static_cast<std::size_t>(m.k) * m.k)
    throw std::invalid_argument("object_regularity: malformed matrix");
  double best = m.at(0, 0);
  for (int i = 1; i < m.k; ++i) best = std::min(best, static_cast<double>(m.at(i, i)));
  return best;
}

/// One scored object in one frame.
struct ObjectScore {
  int frame = 0;
  float box[4] = {0, 0, 0, 0};  // x1, y1, x2, y2 in frame pixels
  double r_s = 1.0;             // spatial regularity
  double r_t = 1.0;             // temporal regularity
};

struct ScoreMapConfig {
  int kernel_t = 7;    // 3D mean filter extent over (time, height, width);
  int kernel_h = 15;   // all three must be odd
  int kernel_w = 15;
  int downsample = 4;  // spatial downsampling of the score map
};

namespace detail {

/// In-place 1-D sliding mean along one axis of a (T, H, W) volume. The
/// window is clipped at the borders and normalized by its actual length.
inline void box_mean_axis(std::vector<double>& v, int nt, int nh, int nw, int axis,
                          int kernel) {
  if (kernel <= 1) return;
  const int radius = kernel / 2;
  const int n = axis == 0 ? nt : axis == 1 ? nh : nw;
  const std::size_t stride = axis == 0 ? static_cast<std::size_t>(nh) * nw
                           : axis == 1 ? static_cast<std::size_t>(nw)
                                       : 1;
  const int lines = static_cast<int>(v.size() / static_cast<std::size_t>(n));
  std::vector<double> line(static_cast<std::size_t>(n));
  std::vector<double> prefix(static_cast<std::size_t>(n) + 1);

  for (int li = 0; li < lines; ++li) {
    // Map the line index to the base offset of this 1-D slice.
    std::size_t base;
    if (axis == 0) {
      base = static_cast<std::size_t>(li);
    } else if (axis == 1) {
      const int t = li / nw, x = li % nw;
      base = static_cast<std::size_t>(t) * nh * nw + static_cast<std::size_t>(x);
    } else {
      base = static_cast<std::size_t>(li) * nw;
    }
    for (int i = 0; i < n; ++i) line[static_cast<std::size_t>(i)] = v[base + stride * i];
    prefix[0] = 0.0;
    for (int i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + line[static_cast<std::size_t>(i)];
    for (int i = 0; i < n; ++i) {
      const int lo = std::max(0, i - radius), hi = std::min(n - 1, i + radius);
      v[base + stride * i] = (prefix[hi + 1] - prefix[lo]) / (hi - lo + 1);
    }
  }
}

}  // namespace detail

/// A (T, H, W) regularity volume for one video, min-aggregated per cell.
class ScoreMap {
 public:
  ScoreMap(int frames, int frame_h, int frame_w, const ScoreMapConfig& cfg)
      : cfg_(cfg), nt_(frames), nh_((frame_h + cfg.downsample - 1) / cfg.downsample),
        nw_((frame_w + cfg.downsample - 1) / cfg.downsample),
        v_(static_cast<std::size_t>(nt_) * nh_ * nw_, 1.0) {
    if (frames < 1 || frame_h < 1 || frame_w < 1)
      throw std::invalid_argument("ScoreMap: bad dimensions");
    if (cfg.kernel_t % 2 == 0 || cfg.kernel_h % 2 == 0 || cfg.kernel_w % 2 == 0)
      throw std::invalid_argument("ScoreMap: mean filter kernel must be odd");
    if (cfg.downsample < 1) throw std::invalid_argument("ScoreMap: bad downsample");
  }

  /// Applies one object's score to its box region: cells keep the minimum.
  void add(int frame, const float box[4], double score) {
    if (frame < 0 || frame >= nt_) return;
    const int d = cfg_.downsample;
    const int x0 = std::clamp(static_cast<int>(std::floor(box[0] / d)), 0, nw_ - 1);
    const int y0 = std::clamp(static_cast<int>(std::floor(box[1] / d)), 0, nh_ - 1);
    const int x1 = std::clamp(static_cast<int>(std::ceil(box[2] / d)), x0 + 1, nw_);
    const int y1 = std::clamp(static_cast<int>(std::ceil(box[3] / d)), y0 + 1, nh_);
    for (int y = y0; y < y1; ++y)
      for (int x = x0; x < x1; ++x) {
        double& cell = v_[idx(frame, y, x)];
        cell = std::min(cell, score);
      }
  }

  /// 3D mean filter over (time, height, width), then per-frame minimum.
  /// Frames whose map kept the initial value everywhere score 1.0 before
  /// filtering.
  std::vector<double> frame_scores() {
    detail::box_mean_axis(v_, nt_, nh_, nw_, 0, cfg_.kernel_t);
    detail::box_mean_axis(v_, nt_, nh_, nw_, 1, cfg_.kernel_h);
    detail::box_mean_axis(v_, nt_, nh_, nw_, 2, cfg_.kernel_w);
    std::vector<double> out(static_cast<std::size_t>(nt_), 1.0);
    for (int t = 0; t < nt_; ++t) {
      double m = v_[idx(t, 0, 0)];
      for (int y = 0; y < nh_; ++y)
        for (int x = 0; x < nw_; ++x) m = std::min(m, v_[idx(t, y, x)]);
      out[static_cast<std::size_t>(t)] = m;
    }
    return out;
  }

 private:
  std::size_t idx(int t, int y, int x) const {
    return (static_cast<std::size_t>(t) * nh_ + y) * nw_ + x;
  }

  ScoreMapConfig cfg_;
  int nt_, nh_, nw_;
  std::vector<double> v_;
};

/// Builds the two per-frame regularity tracks of one video from its object
/// scores (min over the filtered score maps).
inline std::pair<std::vector<double>, std::vector<double>> frame_regularity(
    const std::vector<ObjectScore>& objects, int frames, int frame_h, int frame_w,
    const ScoreMapConfig& cfg) {
  ScoreMap map_s(frames, frame_h, frame_w, cfg), map_t(frames, frame_h, frame_w, cfg);
  for (const ObjectScore& o : objects) {
    map_s.add(o.frame, o.box, o.r_s);
    map_t.add(o.frame, o.box, o.r_t);
  }
  return {map_s.frame_scores(), map_t.frame_scores()};
}

/// Min-max normalization to [0,1] within one video. A constant track has no
/// range and maps to all zeros.
inline std::vector<double> normalize_per_video(const std::vector<double>& scores) {
  if (scores.empty()) throw std::invalid_argument("normalize_per_video: empty input");
  const auto [lo_it, hi_it] = std::minmax_element(scores.begin(), scores.end());
  const double lo = *lo_it, hi = *hi_it;
  std::vector<double> out(scores.size(), 0.0);
  if (hi > lo)
    for (std::size_t i = 0; i < scores.size(); ++i) out[i] = (scores[i] - lo) / (hi - lo);
  return out;
}

/// Gaussian kernel of standard deviation sigma, truncated at 4*sigma and
/// normalized to sum 1. sigma <= 0 yields the identity kernel.
inline std::vector<double> gaussian_kernel(double sigma) {
  const int radius = sigma > 0 ? static_cast<int>(std::lround(4.0 * sigma)) : 0;
  std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    const double w = sigma > 0 ? std::exp(-0.5 * (i / sigma) * (i / sigma)) : 1.0;
    k[static_cast<std::size_t>(i + radius)] = w;
    sum += w;
  }
  for (double& w : k) w /= sum;
  return k;
}

/// 1-D convolution with reflective boundary (half-sample: x[-1] = x[0]).
inline std::vector<double> gaussian_smooth(const std::vector<double>& x, double sigma) {
  const std::vector<double> k = gaussian_kernel(sigma);
  const int radius = static_cast<int>(k.size() / 2);
  const int n = static_cast<int>(x.size());
  std::vector<double> out(x.size(), 0.0);
  for (int i = 0; i < n; ++i) {
    double s = 0.0;
    for (int d = -radius; d <= radius; ++d) {
      int j = i + d;
      while (j < 0 || j >= n) j = j < 0 ? -j - 1 : 2 * n - 1 - j;
      s += x[static_cast<std::size_t>(j)] * k[static_cast<std::size_t>(d + radius)];
    }
    out[static_cast<std::size_t>(i)] = s;
  }
  return out;
}

/// Weighted fusion of the two normalized tracks followed by temporal
/// Gaussian smoothing: R = w * R_s + (1 - w) * R_t.
inline std::vector<double> fuse_and_smooth(const std::vector<double>& r_s,
                                           const std::vector<double>& r_t, double w,
                                           double sigma) {
  if (r_s.size() != r_t.size())
    throw std::invalid_argument("fuse_and_smooth: length mismatch");
  if (w < 0.0 || w > 1.0) throw std::invalid_argument("fuse_and_smooth: w outside [0,1]");
  std::vector<double> fused(r_s.size());
  for (std::size_t i = 0; i < fused.size(); ++i) fused[i] = w * r_s[i] + (1.0 - w) * r_t[i];
  return gaussian_smooth(fused, sigma);
}

/// Per-frame regularity scores of one video, before and after fusion.
struct ScoreTimeline {
  std::string video_id;
  std::vector<double> r_s;      // normalized spatial regularity
  std::vector<double> r_t;      // normalized temporal regularity
  std::vector<double> fused;    // w * r_s + (1-w) * r_t, smoothed
  std::vector<double> anomaly;  // 1 - fused; higher = more anomalous
};

/// Full per-video scoring chain: score maps -> mean filter -> per-frame min
/// -> per-video min-max normalization -> fusion -> Gaussian smoothing ->
/// anomaly inversion.
inline ScoreTimeline build_timeline(const std::string& video_id,
                                    const std::vector<ObjectScore>& objects, int frames,
                                    int frame_h, int frame_w, const ScoreMapConfig& map_cfg,
                                    double w, double sigma) {
  ScoreTimeline tl;
  tl.video_id = video_id;
  auto [raw_s, raw_t] = frame_regularity(objects, frames, frame_h, frame_w, map_cfg);
  tl.r_s = normalize_per_video(raw_s);
  tl.r_t = normalize_per_video(raw_t);
  tl.fused = fuse_and_smooth(tl.r_s, tl.r_t, w, sigma);
  tl.anomaly.resize(tl.fused.size());
  for (std::size_t i = 0; i < tl.fused.size(); ++i) tl.anomaly[i] = 1.0 - tl.fused[i];
  return tl;
}

}  // namespace stj
