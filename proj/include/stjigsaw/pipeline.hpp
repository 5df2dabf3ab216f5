#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "stjigsaw/detection.hpp"
#include "stjigsaw/eval.hpp"
#include "stjigsaw/frame_io.hpp"
#include "stjigsaw/net.hpp"
#include "stjigsaw/score.hpp"
#include "stjigsaw/train.hpp"

namespace stj {

struct ExtractConfig {
  int l = 7;
  double threshold = 0.5;
  int stride = 1;  // keep detections whose frame index is a multiple
  int patch = 64;
};

/// Builds a cube store from a dataset directory holding frames/<video>/ and
/// detections.jsonl. Detections are processed per video in (frame, box)
/// order; degenerate boxes are skipped. Every video is registered, even
/// without detections, so scoring can emit its all-regular timeline.
inline CubeStore extract_dataset(const std::filesystem::path& data_dir,
                                 const ExtractConfig& cfg) {
  namespace fs = std::filesystem;
  const fs::path det_path = data_dir / "detections.jsonl";
  const fs::path frames_dir = data_dir / "frames";
  std::vector<Detection> dets = load_detections(det_path, cfg.threshold);

  std::map<std::string, std::vector<Detection>> by_video;
  for (Detection& d : dets) by_video[d.video_id].push_back(std::move(d));

  CubeStore store;
  bool initialized = false;
  for (const std::string& vid : list_video_ids(frames_dir)) {
    ImageDirFrames video(frames_dir / vid);
    const int channels = video.frame(0).c;
    if (!initialized) {
      store = CubeStore(cfg.l, cfg.patch, channels);
      initialized = true;
    } else if (channels != store.channels()) {
      throw ParseError("mixed channel counts across videos (" + vid + ")");
    }
    const VideoInfo info{vid, video.frame_count(), video.frame(0).h, video.frame(0).w};
    const int vidx = store.register_video(info);

    auto it = by_video.find(vid);
    if (it == by_video.end()) continue;
    std::stable_sort(it->second.begin(), it->second.end(),
                     [](const Detection& a, const Detection& b) {
                       return a.frame_index < b.frame_index;
                     });
    for (const Detection& d : it->second) {
      if (cfg.stride > 1 && d.frame_index % cfg.stride != 0) continue;
      if (auto cube = extract_cube(video, d, cfg.l, cfg.patch)) store.add(*cube, vidx);
    }
  }
  if (!initialized) throw MissingArtifact("no videos under " + frames_dir.string());
  return store;
}

struct ScoreConfig {
  double w = 0.5;       // spatial weight in the fusion
  double sigma = 3.0;   // temporal Gaussian smoothing
  ScoreMapConfig map;   // 3D mean filter + downsampling
  int batch = 64;       // inference batch size
};

/// Runs the solver on every (unshuffled) cube and collects per-object
/// regularity scores grouped by video.
inline std::map<std::string, std::vector<ObjectScore>> score_cubes(JigsawSolver& net,
                                                                   const CubeStore& cubes,
                                                                   int batch) {
  std::map<std::string, std::vector<ObjectScore>> out;
  for (const VideoInfo& v : cubes.videos()) out[v.id];  // keep empty videos present

  Rng rng(0);  // unused at inference (no dropout)
  const SolverConfig& sc = net.config();
  const int kt = sc.temporal_classes(), ks = sc.spatial_classes();
  std::vector<ObjectCube> pending;
  std::vector<std::size_t> pending_idx;
  auto flush = [&]() {
    if (pending.empty()) return;
    std::vector<const ObjectCube*> ptrs;
    for (const ObjectCube& c : pending) ptrs.push_back(&c);
    const nn::Tensor x = assemble_cubes(ptrs, sc);
    const HeadLogits& logits = net.forward(x, /*train=*/false, rng);
    for (int b = 0; b < static_cast<int>(pending.size()); ++b) {
      const std::size_t i = pending_idx[static_cast<std::size_t>(b)];
      ObjectScore s;
      s.frame = cubes.center_frame(i);
      std::memcpy(s.box, cubes.box(i), sizeof(s.box));
      s.r_t = object_regularity(to_prediction_matrix(
          {logits.temporal.sample(b), static_cast<std::size_t>(kt) * kt}, kt,
          PuzzleKind::temporal));
      s.r_s = object_regularity(to_prediction_matrix(
          {logits.spatial.sample(b), static_cast<std::size_t>(ks) * ks}, ks,
          PuzzleKind::spatial));
      out[cubes.video_of(i).id].push_back(s);
    }
    pending.clear();
    pending_idx.clear();
  };

  for (std::size_t i = 0; i < cubes.size(); ++i) {
    pending.push_back(cubes.materialize(i));
    pending_idx.push_back(i);
    if (static_cast<int>(pending.size()) >= batch) flush();
  }
  flush();
  return out;
}

/// Full scoring chain for a test cube store: per-object inference, score
/// maps, normalization, fusion, smoothing. Returns one timeline per video
/// in the store.
inline std::vector<ScoreTimeline> score_dataset(JigsawSolver& net, const CubeStore& cubes,
                                                const ScoreConfig& cfg) {
  auto by_video = score_cubes(net, cubes, cfg.batch);
  std::vector<ScoreTimeline> out;
  for (const VideoInfo& v : cubes.videos())
    out.push_back(build_timeline(v.id, by_video[v.id], v.frames, v.height, v.width,
                                 cfg.map, cfg.w, cfg.sigma));
  return out;
}

// ---- score CSV + ground truth io -------------------------------------------

inline void write_timeline_csv(const std::filesystem::path& path, const ScoreTimeline& tl) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write scores: " + path.string());
  out << "frame_index,r_s,r_t,r,anomaly_score\n";
  char buf[256];
  for (std::size_t i = 0; i < tl.anomaly.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%zu,%.9g,%.9g,%.9g,%.9g\n", i, tl.r_s[i], tl.r_t[i],
                  tl.fused[i], tl.anomaly[i]);
    out << buf;
  }
}

inline ScoreTimeline read_timeline_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingArtifact("score file not found: " + path.string());
  ScoreTimeline tl;
  tl.video_id = path.stem().string();
  std::string line;
  std::getline(in, line);  // header
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    double fi, rs, rt, r, an;
    if (std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf,%lf", &fi, &rs, &rt, &r, &an) != 5)
      throw ParseError(path.filename().string() + ":" + std::to_string(line_no) +
                       ": bad score row");
    tl.r_s.push_back(rs);
    tl.r_t.push_back(rt);
    tl.fused.push_back(r);
    tl.anomaly.push_back(an);
  }
  return tl;
}

/// Reads per-frame 0/1 labels, one per line.
inline std::vector<int> read_gt_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingArtifact("ground truth not found: " + path.string());
  std::vector<int> labels;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line != "0" && line != "1")
      throw ParseError(path.filename().string() + ":" + std::to_string(line_no) +
                       ": labels must be 0 or 1");
    labels.push_back(line == "1" ? 1 : 0);
  }
  return labels;
}

/// Ground truth for a dataset: either a directory of <video_id>.txt files
/// or a single JSON manifest mapping video_id to a label array.
inline std::map<std::string, std::vector<int>> read_ground_truth(
    const std::filesystem::path& path) {
  namespace fs = std::filesystem;
  std::map<std::string, std::vector<int>> gt;
  if (fs::is_directory(path)) {
    for (const auto& e : fs::directory_iterator(path))
      if (e.is_regular_file() && e.path().extension() == ".txt")
        gt[e.path().stem().string()] = read_gt_lines(e.path());
  } else if (fs::is_regular_file(path)) {
    std::ifstream in(path);
    nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded()) throw ParseError("invalid ground-truth manifest: " + path.string());
    for (auto it = j.begin(); it != j.end(); ++it)
      gt[it.key()] = it.value().get<std::vector<int>>();
  } else {
    throw MissingArtifact("ground truth not found: " + path.string());
  }
  if (gt.empty()) throw MissingArtifact("no ground-truth entries in " + path.string());
  return gt;
}

/// Pairs score timelines with ground truth for evaluation. Only videos in
/// `keep` are used when it is non-empty.
inline std::vector<VideoScores> pair_scores_with_gt(
    const std::vector<ScoreTimeline>& timelines,
    const std::map<std::string, std::vector<int>>& gt,
    const std::vector<std::string>& keep = {}) {
  std::vector<VideoScores> out;
  for (const ScoreTimeline& tl : timelines) {
    if (!keep.empty() && std::find(keep.begin(), keep.end(), tl.video_id) == keep.end())
      continue;
    auto it = gt.find(tl.video_id);
    if (it == gt.end()) throw MissingArtifact("no ground truth for video " + tl.video_id);
    if (it->second.size() != tl.anomaly.size())
      throw std::invalid_argument("ground truth length mismatch for " + tl.video_id);
    out.push_back({tl.video_id, tl.anomaly, it->second});
  }
  return out;
}

}  // namespace stj
