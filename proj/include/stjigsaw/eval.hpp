#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "stjigsaw/common.hpp"

namespace stj {

/// Per-frame binary annotations for one video; 1 marks an anomalous frame.
struct GroundTruth {
  std::string video_id;
  std::vector<int> labels;
};

/// Frame-level AUROC, computed as the Mann-Whitney statistic via average
/// ranks: the fraction of (positive, negative) pairs where the positive
/// frame scores higher, ties counting one half.
inline double auroc(const std::vector<double>& scores, const std::vector<int>& labels) {
  if (scores.size() != labels.size())
    throw std::invalid_argument("auroc: length mismatch");
  const std::size_t n = scores.size();
  std::size_t pos = 0;
  for (int l : labels) {
    if (l != 0 && l != 1) throw std::invalid_argument("auroc: labels must be 0/1");
    pos += static_cast<std::size_t>(l);
  }
  const std::size_t neg = n - pos;
  if (pos == 0 || neg == 0)
    throw MetricUndefined("auroc: needs both classes present");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Sum of average ranks (1-based) over positives, handling tie groups.
  double rank_sum_pos = 0.0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double avg_rank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j + 1));
    for (std::size_t t = i; t <= j; ++t)
      if (labels[order[t]] == 1) rank_sum_pos += avg_rank;
    i = j + 1;
  }
  const double p = static_cast<double>(pos), q = static_cast<double>(neg);
  return (rank_sum_pos - p * (p + 1.0) / 2.0) / (p * q);
}

struct VideoScores {
  std::string video_id;
  std::vector<double> scores;  // anomaly scores, higher = more anomalous
  std::vector<int> labels;
};

/// Micro-averaged AUROC: all frames of all videos concatenated.
inline double micro_auroc(const std::vector<VideoScores>& videos) {
  std::vector<double> s;
  std::vector<int> l;
  for (const VideoScores& v : videos) {
    if (v.scores.size() != v.labels.size())
      throw std::invalid_argument("micro_auroc: length mismatch in " + v.video_id);
    s.insert(s.end(), v.scores.begin(), v.scores.end());
    l.insert(l.end(), v.labels.begin(), v.labels.end());
  }
  if (s.empty()) throw MetricUndefined("micro_auroc: no frames");
  return auroc(s, l);
}

struct MacroResult {
  double value = 0.0;
  std::map<std::string, double> per_video;
  std::vector<std::string> skipped;  // videos lacking one of the classes
};

/// Macro-averaged AUROC: unweighted mean of per-video AUROCs. Videos with a
/// single class have no per-video AUROC and are skipped (reported back so
/// callers can warn).
inline MacroResult macro_auroc(const std::vector<VideoScores>& videos) {
  MacroResult res;
  double sum = 0.0;
  for (const VideoScores& v : videos) {
    bool has_pos = false, has_neg = false;
    for (int l : v.labels) (l ? has_pos : has_neg) = true;
    if (!has_pos || !has_neg) {
      res.skipped.push_back(v.video_id);
      continue;
    }
    const double a = auroc(v.scores, v.labels);
    res.per_video[v.video_id] = a;
    sum += a;
  }
  if (res.per_video.empty())
    throw MetricUndefined("macro_auroc: no video has both classes");
  res.value = sum / static_cast<double>(res.per_video.size());
  return res;
}

struct EvalReport {
  double micro = 0.0;
  double macro = 0.0;
  std::map<std::string, double> per_video;
  std::vector<std::string> skipped;
};

inline EvalReport evaluate(const std::vector<VideoScores>& videos) {
  EvalReport r;
  r.micro = micro_auroc(videos);
  MacroResult m = macro_auroc(videos);
  r.macro = m.value;
  r.per_video = std::move(m.per_video);
  r.skipped = std::move(m.skipped);
  return r;
}

inline nlohmann::json report_to_json(const EvalReport& r) {
  nlohmann::json j;
  j["micro_auroc"] = r.micro;
  j["macro_auroc"] = r.macro;
  j["per_video"] = r.per_video;
  j["skipped_videos"] = r.skipped;
  return j;
}

}  // namespace stj
