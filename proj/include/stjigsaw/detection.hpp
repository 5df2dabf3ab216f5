#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "stjigsaw/common.hpp"

namespace stj {

/// One detector output box. Only localization is kept; class labels from the
/// upstream detector are discarded.
struct Detection {
  std::string video_id;
  int frame_index = 0;
  float x1 = 0, y1 = 0, x2 = 0, y2 = 0;  // pixels, x1 < x2 and y1 < y2
  float confidence = 0;
};

/// Loads a detection file (one JSON object per line, keys: video_id, frame,
/// x1, y1, x2, y2, conf) keeping records with confidence >= threshold.
/// The same threshold must be used for training and test extraction.
inline std::vector<Detection> load_detections(const std::filesystem::path& path,
                                              double threshold) {
  std::ifstream in(path);
  if (!in) throw MissingArtifact("detection file not found: " + path.string());

  std::vector<Detection> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string where = path.filename().string() + ":" + std::to_string(line_no);
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded()) throw ParseError(where + ": invalid JSON");
    Detection d;
    try {
      d.video_id = j.at("video_id").get<std::string>();
      d.frame_index = j.at("frame").get<int>();
      d.x1 = j.at("x1").get<float>();
      d.y1 = j.at("y1").get<float>();
      d.x2 = j.at("x2").get<float>();
      d.y2 = j.at("y2").get<float>();
      d.confidence = j.at("conf").get<float>();
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(where + ": " + e.what());
    }
    if (d.frame_index < 0) throw ParseError(where + ": negative frame index");
    if (!(d.x1 < d.x2) || !(d.y1 < d.y2)) throw ParseError(where + ": degenerate box");
    if (d.confidence < 0.f || d.confidence > 1.f)
      throw ParseError(where + ": confidence outside [0,1]");
    if (d.confidence >= static_cast<float>(threshold)) out.push_back(std::move(d));
  }
  return out;
}

inline void write_detections(std::ostream& os, const std::vector<Detection>& dets) {
  for (const Detection& d : dets) {
    nlohmann::json j{{"video_id", d.video_id}, {"frame", d.frame_index},
                     {"x1", d.x1},             {"y1", d.y1},
                     {"x2", d.x2},             {"y2", d.y2},
                     {"conf", d.confidence}};
    os << j.dump() << '\n';
  }
}

}  // namespace stj
