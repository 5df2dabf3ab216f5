#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "stjigsaw/detection.hpp"
#include "stjigsaw/frame_io.hpp"
#include "stjigsaw/image.hpp"
#include "stjigsaw/rng.hpp"

namespace stj {

/// Synthetic dataset description. Train videos contain only the normal
/// motion family (smooth rightward drift); each test video carries one
/// anomaly type inside a fixed frame interval.
struct SynthSpec {
  std::uint64_t seed = 7;
  int train_videos = 20;
  int test_videos = 8;
  int frames = 300;
  int height = 240;
  int width = 320;
  int sprites = 2;  // normal sprites per video, staggered spawn times
  double speed_min = 1.0;
  double speed_max = 2.0;
  std::vector<std::string> anomaly_types{"speed", "reverse", "jitter", "shape"};
  int anomaly_start = 120;
  int anomaly_len = 80;
  int sprite_min = 24;
  int sprite_max = 34;
};

struct GeneratedVideo {
  std::string id;
  int frames = 0;
  std::string anomaly;  // empty for train videos
  int anomaly_start = 0;
  int anomaly_len = 0;
};

struct SynthResult {
  std::vector<GeneratedVideo> train;
  std::vector<GeneratedVideo> test;
};

namespace synth_detail {

// 0 = square, 1 = disc (the normal kinds), 2 = the held-out triangle whose
// texture gradients run transposed to the normal kinds.
inline bool sprite_mask(int kind, int y, int x, int s) {
  if (kind == 0) return true;
  const double c = 0.5 * (s - 1);
  if (kind == 1) {
    const double dy = y - c, dx = x - c;
    return dy * dy + dx * dx <= c * c;
  }
  return std::abs(x - c) <= 0.5 * y + 0.5;  // triangle widening downward
}

inline void sprite_color(int kind, int y, int x, int s, float rgb[3]) {
  const double u = s > 1 ? static_cast<double>(x) / (s - 1) : 0.0;
  const double v = s > 1 ? static_cast<double>(y) / (s - 1) : 0.0;
  if (kind != 2) {
    rgb[0] = static_cast<float>(0.15 + 0.7 * v);
    rgb[2] = static_cast<float>(0.15 + 0.7 * u);
    const bool ring = u < 0.14 || u > 0.86 || v < 0.14 || v > 0.86;
    rgb[1] = ring ? 0.92f : 0.22f;
  } else {
    rgb[0] = static_cast<float>(0.15 + 0.7 * (1.0 - u));
    rgb[2] = static_cast<float>(0.15 + 0.7 * (1.0 - v));
    const bool blob = std::abs(u - 0.5) < 0.22 && std::abs(v - 0.5) < 0.22;
    rgb[1] = blob ? 0.92f : 0.22f;
  }
}

inline void draw_sprite(Frame& frame, int kind, int xi, int yi, int s) {
  for (int y = 0; y < s; ++y) {
    const int fy = yi + y;
    if (fy < 0 || fy >= frame.h) continue;
    for (int x = 0; x < s; ++x) {
      const int fx = xi + x;
      if (fx < 0 || fx >= frame.w) continue;
      if (!sprite_mask(kind, y, x, s)) continue;
      float rgb[3];
      sprite_color(kind, y, x, s, rgb);
      frame.at(fy, fx, 0) = rgb[0];
      frame.at(fy, fx, 1) = rgb[1];
      frame.at(fy, fx, 2) = rgb[2];
    }
  }
}

inline Frame make_background(int h, int w) {
  Frame f(h, w, 3);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const float base = 0.55f + 0.08f * (static_cast<float>(x) / w) -
                         0.06f * (static_cast<float>(y) / h);
      f.at(y, x, 0) = base;
      f.at(y, x, 1) = base + 0.03f;
      f.at(y, x, 2) = base - 0.03f;
    }
  return f;
}

struct Sprite {
  int kind = 0;
  int size = 24;
  int spawn_frame = 0;
  double x = 0, y = 0;
  double vx = 1, vy = 0;
  bool anomalous = false;  // receives the video's motion anomaly
  bool unseen_extra = false;
};

/// Reflects the value into [lo, hi], flipping the velocity on a bounce.
inline void bounce(double& p, double& v, double lo, double hi) {
  if (p < lo) {
    p = lo + (lo - p);
    v = -v;
  } else if (p > hi) {
    p = hi - (p - hi);
    v = -v;
  }
  p = std::clamp(p, lo, hi);
}

struct VideoData {
  std::vector<Frame> frames;
  std::vector<Detection> detections;
  std::vector<int> labels;
};

inline VideoData simulate_video(const SynthSpec& spec, const std::string& video_id,
                                std::uint64_t video_seed, const std::string& anomaly) {
  Rng rng(video_seed);
  const double margin = 6.0;
  const int a_lo = spec.anomaly_start;
  const int a_hi = spec.anomaly_start + spec.anomaly_len;

  std::vector<Sprite> sprites;
  for (int j = 0; j < spec.sprites; ++j) {
    Sprite s;
    s.kind = j % 2;
    s.size = spec.sprite_min +
             static_cast<int>(uniform_index(rng, spec.sprite_max - spec.sprite_min + 1));
    s.spawn_frame = j * (spec.frames / (spec.sprites + 1));
    s.x = margin + uniform_real(rng, 0.0, 4.0);
    s.y = uniform_real(rng, margin, spec.height - margin - s.size);
    const bool motion_anomaly = !anomaly.empty() && anomaly != "shape" && j == 0;
    // The anomalous sprite stays slow enough to still be mid-scene when the
    // interval starts.
    const double vmax = motion_anomaly ? std::min(spec.speed_max, 1.3) : spec.speed_max;
    s.vx = uniform_real(rng, spec.speed_min, vmax);
    s.vy = s.vx * std::tan(uniform_real(rng, -0.26, 0.26));
    s.anomalous = motion_anomaly;
    sprites.push_back(s);
  }
  if (anomaly == "shape") {
    Sprite s;
    s.kind = 2;
    s.size = spec.sprite_min +
             static_cast<int>(uniform_index(rng, spec.sprite_max - spec.sprite_min + 1));
    s.spawn_frame = a_lo;
    s.x = 0.3 * spec.width;
    s.y = uniform_real(rng, margin + 20.0, spec.height - margin - 20.0 - s.size);
    s.vx = uniform_real(rng, spec.speed_min, std::min(spec.speed_max, 1.4));
    s.vy = s.vx * std::tan(uniform_real(rng, -0.26, 0.26));
    s.unseen_extra = true;
    sprites.push_back(s);
  }

  const Frame background = make_background(spec.height, spec.width);
  VideoData out;
  out.frames.reserve(static_cast<std::size_t>(spec.frames));
  out.labels.assign(static_cast<std::size_t>(spec.frames), 0);

  for (int t = 0; t < spec.frames; ++t) {
    const bool in_interval = !anomaly.empty() && t >= a_lo && t < a_hi;
    if (in_interval) out.labels[static_cast<std::size_t>(t)] = 1;

    Frame frame = background;
    for (Sprite& s : sprites) {
      if (t < s.spawn_frame) continue;
      if (s.unseen_extra && t >= a_hi) continue;
      if (t > s.spawn_frame) {
        // Advance from the previous frame.
        double vx = s.vx, vy = s.vy;
        if (s.anomalous && in_interval) {
          if (anomaly == "speed") {
            vx *= 3.0;
            vy *= 3.0;
          } else if (anomaly == "reverse") {
            vx = -vx;
          } else if (anomaly == "jitter") {
            const double ang = uniform_real(rng, 0.0, 6.283185307179586);
            vx = 3.0 * std::cos(ang);
            vy = 3.0 * std::sin(ang);
          }
        }
        s.x += vx;
        s.y += vy;
        if (s.anomalous && in_interval) {
          // Keep the anomalous sprite on stage for the whole interval.
          double hvx = vx;
          bounce(s.x, hvx, margin, spec.width - margin - s.size);
        }
        bounce(s.y, s.vy, margin, spec.height - margin - s.size);
      }
      const int xi = static_cast<int>(std::lround(s.x));
      const int yi = static_cast<int>(std::lround(s.y));
      draw_sprite(frame, s.kind, xi, yi, s.size);
      const bool fully_visible = xi >= 0 && yi >= 0 && xi + s.size <= spec.width &&
                                 yi + s.size <= spec.height;
      if (fully_visible) {
        Detection d;
        d.video_id = video_id;
        d.frame_index = t;
        d.x1 = static_cast<float>(xi);
        d.y1 = static_cast<float>(yi);
        d.x2 = static_cast<float>(xi + s.size);
        d.y2 = static_cast<float>(yi + s.size);
        d.confidence = 1.0f;  // oracle boxes
        out.detections.push_back(d);
      }
    }
    out.frames.push_back(std::move(frame));
  }
  return out;
}

}  // namespace synth_detail

inline std::string zero_pad(int value, int width) {
  std::string s = std::to_string(value);
  while (static_cast<int>(s.size()) < width) s.insert(s.begin(), '0');
  return s;
}

/// Renders the full dataset under out_dir:
///   train/frames/<id>/NNNNNN.png, train/detections.jsonl,
///   test/frames/..., test/detections.jsonl, test/gt/<id>.txt,
///   dataset.json (per-video anomaly metadata).
/// Fully reproducible from spec.seed.
inline SynthResult generate(const SynthSpec& spec, const std::filesystem::path& out_dir) {
  namespace fs = std::filesystem;
  if (spec.frames < 1 || spec.train_videos < 0 || spec.test_videos < 0 ||
      spec.sprite_min < 8 || spec.sprite_max < spec.sprite_min)
    throw std::invalid_argument("generate: bad spec");
  if (spec.anomaly_start < 0 || spec.anomaly_start + spec.anomaly_len > spec.frames)
    throw std::invalid_argument("generate: anomaly interval outside video bounds");
  if (spec.test_videos > 0 && spec.anomaly_types.empty())
    throw std::invalid_argument("generate: test videos need anomaly types");

  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec || !fs::is_directory(out_dir))
    throw std::runtime_error("cannot create output directory: " + out_dir.string());

  SynthResult result;
  auto write_split = [&](const std::string& split, int count, bool test) {
    const fs::path split_dir = out_dir / split;
    fs::create_directories(split_dir / "frames");
    if (test) fs::create_directories(split_dir / "gt");
    std::ofstream det_out(split_dir / "detections.jsonl");

    for (int v = 0; v < count; ++v) {
      std::string anomaly;
      if (test)
        anomaly = spec.anomaly_types[static_cast<std::size_t>(v) % spec.anomaly_types.size()];
      const std::string id =
          test ? "t" + zero_pad(v, 2) + "_" + anomaly : "train" + zero_pad(v, 2);
      const std::uint64_t vseed = derive_seed(spec.seed, (test ? 1000u : 0u) + v);
      synth_detail::VideoData data =
          synth_detail::simulate_video(spec, id, vseed, anomaly);

      const fs::path vdir = split_dir / "frames" / id;
      fs::create_directories(vdir);
      for (int t = 0; t < static_cast<int>(data.frames.size()); ++t)
        write_frame_png(vdir / (zero_pad(t, 6) + ".png"), data.frames[static_cast<std::size_t>(t)]);
      write_detections(det_out, data.detections);
      if (test) {
        std::ofstream gt(split_dir / "gt" / (id + ".txt"));
        for (int lab : data.labels) gt << lab << '\n';
      }
      GeneratedVideo gv{id, spec.frames, anomaly,
                        anomaly.empty() ? 0 : spec.anomaly_start,
                        anomaly.empty() ? 0 : spec.anomaly_len};
      (test ? result.test : result.train).push_back(gv);
    }
  };

  write_split("train", spec.train_videos, false);
  write_split("test", spec.test_videos, true);

  nlohmann::json manifest;
  manifest["seed"] = spec.seed;
  manifest["frame"] = {{"height", spec.height}, {"width", spec.width}};
  auto vids_json = [](const std::vector<GeneratedVideo>& vs) {
    nlohmann::json arr = nlohmann::json::array();
    for (const GeneratedVideo& v : vs)
      arr.push_back({{"id", v.id},
                     {"frames", v.frames},
                     {"anomaly", v.anomaly},
                     {"anomaly_start", v.anomaly_start},
                     {"anomaly_len", v.anomaly_len}});
    return arr;
  };
  manifest["train"] = vids_json(result.train);
  manifest["test"] = vids_json(result.test);
  std::ofstream mf(out_dir / "dataset.json");
  mf << manifest.dump(2) << '\n';
  return result;
}

}  // namespace stj
