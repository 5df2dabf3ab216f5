#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "stjigsaw/common.hpp"
#include "stjigsaw/cube.hpp"
#include "stjigsaw/net.hpp"
#include "stjigsaw/puzzle.hpp"

namespace stj {

/// Video metadata kept alongside extracted cubes so scoring does not need
/// to revisit the frame files.
struct VideoInfo {
  std::string id;
  int frames = 0;
  int height = 0;
  int width = 0;
};

/// A compact on-disk/in-memory collection of object cubes. Patch pixels are
/// quantized to 8 bits (sources are 8-bit video anyway); materialize()
/// restores [0,1] floats.
class CubeStore {
 public:
  CubeStore() = default;
  CubeStore(int l, int patch, int channels) : l_(l), patch_(patch), channels_(channels) {}

  int l() const { return l_; }
  int patch() const { return patch_; }
  int channels() const { return channels_; }
  std::size_t size() const { return cubes_.size(); }
  bool empty() const { return cubes_.empty(); }

  const std::vector<VideoInfo>& videos() const { return videos_; }
  const VideoInfo& video_of(std::size_t cube_index) const {
    return videos_[static_cast<std::size_t>(cubes_[cube_index].video)];
  }

  int register_video(const VideoInfo& info) {
    for (std::size_t i = 0; i < videos_.size(); ++i)
      if (videos_[i].id == info.id) return static_cast<int>(i);
    videos_.push_back(info);
    return static_cast<int>(videos_.size()) - 1;
  }

  void add(const ObjectCube& cube, int video_index) {
    if (cube.l() != l_ || cube.patches[0].h != patch_ || cube.channels() != channels_)
      throw std::invalid_argument("CubeStore: cube shape mismatch");
    Record r;
    r.video = video_index;
    r.center_frame = cube.center_frame;
    std::memcpy(r.box, cube.box, sizeof(r.box));
    r.data.reserve(static_cast<std::size_t>(l_) * patch_ * patch_ * channels_);
    for (const Frame& f : cube.patches)
      for (float v : f.v)
        r.data.push_back(static_cast<std::uint8_t>(
            std::lround(std::clamp(v, 0.f, 1.f) * 255.f)));
    cubes_.push_back(std::move(r));
  }

  ObjectCube materialize(std::size_t i) const {
    const Record& r = cubes_[i];
    ObjectCube cube;
    cube.video_id = videos_[static_cast<std::size_t>(r.video)].id;
    cube.center_frame = r.center_frame;
    std::memcpy(cube.box, r.box, sizeof(cube.box));
    cube.patches.reserve(static_cast<std::size_t>(l_));
    const std::size_t per_frame = static_cast<std::size_t>(patch_) * patch_ * channels_;
    for (int t = 0; t < l_; ++t) {
      Frame f(patch_, patch_, channels_);
      const std::uint8_t* src = r.data.data() + static_cast<std::size_t>(t) * per_frame;
      for (std::size_t j = 0; j < per_frame; ++j) f.v[j] = src[j] / 255.f;
      cube.patches.push_back(std::move(f));
    }
    return cube;
  }

  int center_frame(std::size_t i) const { return cubes_[i].center_frame; }
  const float* box(std::size_t i) const { return cubes_[i].box; }

  void save(const std::filesystem::path& path) const {
    nlohmann::json header;
    header["l"] = l_;
    header["patch"] = patch_;
    header["channels"] = channels_;
    header["count"] = cubes_.size();
    nlohmann::json vids = nlohmann::json::array();
    for (const VideoInfo& v : videos_)
      vids.push_back({{"id", v.id}, {"frames", v.frames}, {"height", v.height},
                      {"width", v.width}});
    header["videos"] = vids;

    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write cube store: " + path.string());
    const std::string h = header.dump();
    const std::uint64_t hlen = h.size();
    out.write(kMagic, 8);
    out.write(reinterpret_cast<const char*>(&hlen), sizeof(hlen));
    out.write(h.data(), static_cast<std::streamsize>(h.size()));
    for (const Record& r : cubes_) {
      const std::int32_t vid = r.video, cf = r.center_frame;
      out.write(reinterpret_cast<const char*>(&vid), sizeof(vid));
      out.write(reinterpret_cast<const char*>(&cf), sizeof(cf));
      out.write(reinterpret_cast<const char*>(r.box), sizeof(r.box));
      out.write(reinterpret_cast<const char*>(r.data.data()),
                static_cast<std::streamsize>(r.data.size()));
    }
    if (!out) throw std::runtime_error("cube store write failed: " + path.string());
  }

  static CubeStore load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MissingArtifact("cube store not found: " + path.string());
    char magic[8];
    std::uint64_t hlen = 0;
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kMagic, 8) != 0)
      throw ParseError("not a cube store: " + path.string());
    in.read(reinterpret_cast<char*>(&hlen), sizeof(hlen));
    std::string h(hlen, '\0');
    in.read(h.data(), static_cast<std::streamsize>(hlen));
    if (!in) throw ParseError("truncated cube store header: " + path.string());
    nlohmann::json header = nlohmann::json::parse(h);

    CubeStore store(header.at("l").get<int>(), header.at("patch").get<int>(),
                    header.at("channels").get<int>());
    for (const auto& v : header.at("videos"))
      store.videos_.push_back({v.at("id").get<std::string>(), v.at("frames").get<int>(),
                               v.at("height").get<int>(), v.at("width").get<int>()});
    const std::size_t count = header.at("count").get<std::size_t>();
    const std::size_t bytes = static_cast<std::size_t>(store.l_) * store.patch_ *
                              store.patch_ * store.channels_;
    store.cubes_.resize(count);
    for (Record& r : store.cubes_) {
      std::int32_t vid = 0, cf = 0;
      in.read(reinterpret_cast<char*>(&vid), sizeof(vid));
      in.read(reinterpret_cast<char*>(&cf), sizeof(cf));
      in.read(reinterpret_cast<char*>(r.box), sizeof(r.box));
      r.video = vid;
      r.center_frame = cf;
      r.data.resize(bytes);
      in.read(reinterpret_cast<char*>(r.data.data()), static_cast<std::streamsize>(bytes));
      if (!in) throw ParseError("truncated cube store: " + path.string());
    }
    return store;
  }

 private:
  static constexpr const char* kMagic = "STJCUBE1";

  struct Record {
    int video = 0;
    int center_frame = 0;
    float box[4] = {0, 0, 0, 0};
    std::vector<std::uint8_t> data;
  };

  int l_ = 0, patch_ = 0, channels_ = 0;
  std::vector<VideoInfo> videos_;
  std::vector<Record> cubes_;
};

struct TrainConfig {
  int epochs = 100;
  int batch_size = 192;
  nn::AdamConfig adam;          // lr 1e-4, beta1 0.9, beta2 0.999
  std::uint64_t seed = 1;
  double r = 0.5;               // spatial-branch probability
  double zeta = 1e-4;           // identity spatial probability
  double static_eps = 0.005;    // static-cube threshold for the temporal branch
};

struct EpochMetrics {
  int epoch = 0;
  double loss_total = 0.0;
  double loss_t = 0.0;
  double loss_s = 0.0;
  double acc_t = 0.0;  // element-level accuracy of the temporal head
  double acc_s = 0.0;
};

/// Mini-batch composition counters, accumulated over the whole run.
struct TrainStats {
  long long spatial = 0;
  long long temporal = 0;
  long long identity_spatial = 0;
  long long static_dropped = 0;
};

struct TrainResult {
  std::vector<EpochMetrics> curve;
  TrainStats stats;
};

/// Trains the solver on a cube store with the mixed spatial/temporal batch
/// loop. per_epoch(metrics, net) is invoked after every epoch (metrics
/// logging, checkpointing).
template <typename PerEpoch>
TrainResult train_solver(JigsawSolver& net, const CubeStore& data, const TrainConfig& cfg,
                         PerEpoch&& per_epoch) {
  if (data.empty()) throw ConfigError("train: cube store is empty");
  const SolverConfig& sc = net.config();
  if (data.l() != sc.l) throw ConfigError("train: cube length != solver l");

  Rng rng(derive_seed(cfg.seed, 0x545241494e));  // train stream
  nn::Adam adam(net.params(), cfg.adam);
  TrainResult result;

  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  const int kt = sc.temporal_classes(), ks = sc.spatial_classes();
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    shuffle(order, rng);
    EpochMetrics em;
    em.epoch = epoch;
    double sum_loss = 0.0, sum_loss_t = 0.0, sum_loss_s = 0.0;
    long long n_samples = 0, n_t = 0, n_s = 0;
    long long el_correct_t = 0, el_total_t = 0, el_correct_s = 0, el_total_s = 0;

    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
      std::vector<PuzzleSample> samples;
      samples.reserve(stop - start);
      for (std::size_t i = start; i < stop; ++i) {
        const ObjectCube cube = data.materialize(order[i]);
        const double u = uniform_real01(rng);
        if (u <= cfg.r) {
          Permutation p = (u <= cfg.zeta) ? identity(ks) : sample_uniform(ks, rng);
          if (p == identity(ks)) ++result.stats.identity_spatial;
          ++result.stats.spatial;
          samples.push_back(spatial_shuffle(cube, p, sc.n));
        } else {
          if (is_static(cube, cfg.static_eps)) {
            ++result.stats.static_dropped;
            continue;
          }
          ++result.stats.temporal;
          samples.push_back(temporal_shuffle(cube, sample_uniform(kt, rng)));
        }
      }
      if (samples.empty()) continue;

      std::vector<const PuzzleSample*> ptrs;
      ptrs.reserve(samples.size());
      for (const PuzzleSample& s : samples) ptrs.push_back(&s);
      const nn::Tensor x = assemble_samples(ptrs, sc);
      const HeadLogits& logits = net.forward(x, /*train=*/true, rng);

      const int B = static_cast<int>(samples.size());
      nn::Tensor dlt(B, kt * kt), dls(B, ks * ks);
      adam.zero_grad();
      for (int b = 0; b < B; ++b) {
        const PuzzleSample& s = samples[static_cast<std::size_t>(b)];
        double loss;
        if (s.kind == PuzzleKind::temporal) {
          std::span<const float> lrow(logits.temporal.sample(b),
                                      static_cast<std::size_t>(kt) * kt);
          loss = puzzle_loss_grad(lrow, s.labels,
                                  {dlt.sample(b), static_cast<std::size_t>(kt) * kt},
                                  1.0 / B);
          sum_loss_t += loss;
          ++n_t;
          el_correct_t += correct_elements(lrow, s.labels);
          el_total_t += kt;
        } else {
          std::span<const float> lrow(logits.spatial.sample(b),
                                      static_cast<std::size_t>(ks) * ks);
          loss = puzzle_loss_grad(lrow, s.labels,
                                  {dls.sample(b), static_cast<std::size_t>(ks) * ks},
                                  1.0 / B);
          sum_loss_s += loss;
          ++n_s;
          el_correct_s += correct_elements(lrow, s.labels);
          el_total_s += ks;
        }
        sum_loss += loss;
        ++n_samples;
      }
      net.backward(dlt, dls);
      adam.step();
    }

    em.loss_total = n_samples ? sum_loss / n_samples : 0.0;
    em.loss_t = n_t ? sum_loss_t / n_t : 0.0;
    em.loss_s = n_s ? sum_loss_s / n_s : 0.0;
    em.acc_t = el_total_t ? static_cast<double>(el_correct_t) / el_total_t : 0.0;
    em.acc_s = el_total_s ? static_cast<double>(el_correct_s) / el_total_s : 0.0;
    result.curve.push_back(em);
    per_epoch(em, net);
  }
  return result;
}

inline void write_metrics_csv(const std::filesystem::path& path,
                              const std::vector<EpochMetrics>& curve) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write metrics: " + path.string());
  out << "epoch,loss_total,loss_t,loss_s,acc_t,acc_s\n";
  char buf[192];
  for (const EpochMetrics& m : curve) {
    std::snprintf(buf, sizeof(buf), "%d,%.6f,%.6f,%.6f,%.6f,%.6f\n", m.epoch,
                  m.loss_total, m.loss_t, m.loss_s, m.acc_t, m.acc_s);
    out << buf;
  }
}

}  // namespace stj
