#pragma once

#include <algorithm>
#include <filesystem>
#include <string>
#include <vector>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "stjigsaw/common.hpp"
#include "stjigsaw/cube.hpp"
#include "stjigsaw/image.hpp"

namespace stj {

/// Converts an 8-bit OpenCV image (BGR or grayscale) to a [0,1] float Frame.
/// Color frames are kept in RGB channel order.
inline Frame to_frame(const cv::Mat& m) {
  if (m.empty()) throw ParseError("to_frame: empty image");
  cv::Mat img = m;
  if (img.depth() != CV_8U) {
    cv::Mat tmp;
    img.convertTo(tmp, CV_8U);
    img = tmp;
  }
  const int ch = img.channels();
  if (ch != 1 && ch != 3) throw ParseError("to_frame: unsupported channel count");
  Frame f(img.rows, img.cols, ch);
  for (int y = 0; y < img.rows; ++y) {
    const std::uint8_t* row = img.ptr<std::uint8_t>(y);
    for (int x = 0; x < img.cols; ++x) {
      if (ch == 1) {
        f.at(y, x, 0) = row[x] / 255.f;
      } else {
        // OpenCV loads BGR.
        f.at(y, x, 0) = row[x * 3 + 2] / 255.f;
        f.at(y, x, 1) = row[x * 3 + 1] / 255.f;
        f.at(y, x, 2) = row[x * 3 + 0] / 255.f;
      }
    }
  }
  return f;
}

inline cv::Mat to_mat(const Frame& f) {
  cv::Mat m(f.h, f.w, f.c == 1 ? CV_8UC1 : CV_8UC3);
  for (int y = 0; y < f.h; ++y) {
    std::uint8_t* row = m.ptr<std::uint8_t>(y);
    for (int x = 0; x < f.w; ++x) {
      auto q = [&](int ch) {
        float v = std::clamp(f.at(y, x, ch), 0.f, 1.f);
        return static_cast<std::uint8_t>(std::lround(v * 255.f));
      };
      if (f.c == 1) {
        row[x] = q(0);
      } else {
        row[x * 3 + 0] = q(2);
        row[x * 3 + 1] = q(1);
        row[x * 3 + 2] = q(0);
      }
    }
  }
  return m;
}

inline void write_frame_png(const std::filesystem::path& path, const Frame& f) {
  if (!cv::imwrite(path.string(), to_mat(f)))
    throw std::runtime_error("failed to write image: " + path.string());
}

/// Frame accessor over a directory of numbered image files (one video).
/// Files are ordered by name; the whole video is decoded eagerly and held
/// in memory, so this accessor is safe for concurrent reads.
class ImageDirFrames : public FrameAccessor {
 public:
  explicit ImageDirFrames(const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir)) throw MissingArtifact("frame directory not found: " + dir.string());
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir))
      if (e.is_regular_file()) files.push_back(e.path());
    std::sort(files.begin(), files.end());
    if (files.empty()) throw MissingArtifact("no frames in " + dir.string());
    frames_.reserve(files.size());
    for (const auto& p : files) {
      cv::Mat img = cv::imread(p.string(), cv::IMREAD_UNCHANGED);
      if (img.empty()) throw ParseError("unreadable image: " + p.string());
      frames_.push_back(to_frame(img));
    }
  }

  int frame_count() const override { return static_cast<int>(frames_.size()); }
  const Frame& frame(int index) const override {
    return frames_[static_cast<std::size_t>(index)];
  }

 private:
  std::vector<Frame> frames_;
};

/// Lists the per-video frame subdirectories of a dataset frames/ directory.
inline std::vector<std::string> list_video_ids(const std::filesystem::path& frames_dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(frames_dir))
    throw MissingArtifact("frames directory not found: " + frames_dir.string());
  std::vector<std::string> ids;
  for (const auto& e : fs::directory_iterator(frames_dir))
    if (e.is_directory()) ids.push_back(e.path().filename().string());
  std::sort(ids.begin(), ids.end());
  return ids;
}

}  // namespace stj
