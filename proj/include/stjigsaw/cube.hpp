#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "stjigsaw/detection.hpp"
#include "stjigsaw/image.hpp"

namespace stj {

/// Read access to the frames of one video. Implementations must either be
/// safe for concurrent frame() calls or documented single-threaded.
class FrameAccessor {
 public:
  virtual ~FrameAccessor() = default;
  virtual int frame_count() const = 0;
  virtual const Frame& frame(int index) const = 0;
};

/// In-memory accessor; used by tests and by the synthetic generator path.
class MemoryFrames : public FrameAccessor {
 public:
  explicit MemoryFrames(std::vector<Frame> frames) : frames_(std::move(frames)) {}
  int frame_count() const override { return static_cast<int>(frames_.size()); }
  const Frame& frame(int index) const override {
    return frames_[static_cast<std::size_t>(index)];
  }

 private:
  std::vector<Frame> frames_;
};

/// An object-centric spatio-temporal cube: l patches cropped with the same
/// box from consecutive frames and rescaled to patch_size x patch_size.
struct ObjectCube {
  std::string video_id;
  int center_frame = 0;
  float box[4] = {0, 0, 0, 0};  // x1, y1, x2, y2 of the source detection
  std::vector<Frame> patches;   // l frames, each patch_size^2 x C, values in [0,1]

  int l() const { return static_cast<int>(patches.size()); }
  int channels() const { return patches.empty() ? 0 : patches[0].c; }
};

/// The frame indices a length-l window centered on `center` covers, clamped
/// to [0, frame_count): indices past either end replicate the edge frame.
inline std::vector<int> cube_frame_indices(int center, int l, int frame_count) {
  const int t = (l - 1) / 2;
  std::vector<int> idx;
  idx.reserve(static_cast<std::size_t>(l));
  for (int d = -t; d <= t; ++d)
    idx.push_back(std::clamp(center + d, 0, frame_count - 1));
  return idx;
}

/// Crops det's box from the l frames temporally adjacent to det.frame_index
/// and rescales each crop to patch_size^2 (bilinear). Returns nullopt when
/// the box is degenerate after clamping to the frame bounds (skip signal).
inline std::optional<ObjectCube> extract_cube(const FrameAccessor& video,
                                              const Detection& det, int l,
                                              int patch_size = 64) {
  if (l < 1 || l % 2 == 0) throw std::invalid_argument("extract_cube: l must be odd");
  if (video.frame_count() < 1) throw std::invalid_argument("extract_cube: empty video");
  if (patch_size < 1) throw std::invalid_argument("extract_cube: bad patch size");

  const Frame& center = video.frame(std::clamp(det.frame_index, 0, video.frame_count() - 1));
  Rect r{std::clamp(static_cast<int>(std::floor(det.x1)), 0, center.w),
         std::clamp(static_cast<int>(std::floor(det.y1)), 0, center.h),
         std::clamp(static_cast<int>(std::ceil(det.x2)), 0, center.w),
         std::clamp(static_cast<int>(std::ceil(det.y2)), 0, center.h)};
  if (r.empty()) return std::nullopt;

  ObjectCube cube;
  cube.video_id = det.video_id;
  cube.center_frame = det.frame_index;
  cube.box[0] = det.x1;
  cube.box[1] = det.y1;
  cube.box[2] = det.x2;
  cube.box[3] = det.y2;
  cube.patches.reserve(static_cast<std::size_t>(l));
  for (int fi : cube_frame_indices(det.frame_index, l, video.frame_count()))
    cube.patches.push_back(resize_region(video.frame(fi), r, patch_size, patch_size));
  return cube;
}

/// True iff the cube carries only static content: the mean absolute
/// per-pixel difference between consecutive patches, averaged over the
/// cube, is below eps. Single-patch cubes are static by definition.
inline bool is_static(const ObjectCube& cube, double eps) {
  if (cube.l() <= 1) return true;
  double total = 0.0;
  for (int i = 0; i + 1 < cube.l(); ++i)
    total += mean_abs_diff(cube.patches[static_cast<std::size_t>(i)],
                           cube.patches[static_cast<std::size_t>(i) + 1]);
  return total / (cube.l() - 1) < eps;
}

}  // namespace stj
