#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "stjigsaw/nn/adam.hpp"
#include "stjigsaw/nn/layers.hpp"
#include "stjigsaw/nn/tensor.hpp"
#include "stjigsaw/puzzle.hpp"
#include "stjigsaw/score.hpp"

namespace stj {

/// Architecture of the jigsaw solver: a shared 3-D convolutional backbone
/// (three blocks of two 3x3x3 convs, instance norm + relu after every conv,
/// spatial max pooling after blocks 1-2, global temporal pooling after
/// block 3), one 2-D block (conv, IN, relu, channel dropout, 2x2 pool), and
/// two disjoint fully connected heads sized l^2 and (n^2)^2.
struct SolverConfig {
  int l = 7;                                        // frames per cube
  int n = 3;                                        // spatial grid side
  int patch = 64;                                   // cube patch size
  int input_size = 0;                               // 0 = derived: (patch/n)*n
  std::array<int, 6> widths{32, 32, 64, 64, 64, 64};  // 3-D conv widths
  int width_2d = 64;
  int hidden = 512;
  float dropout = 0.3f;

  /// Network input resolution: the largest size <= patch divisible by n,
  /// so spatial puzzles have exactly equal-sized cells (64 -> 63 for n=3).
  int resolved_input() const { return input_size > 0 ? input_size : (patch / n) * n; }

  int temporal_classes() const { return l; }
  int spatial_classes() const { return n * n; }
};

inline nlohmann::json solver_config_to_json(const SolverConfig& c) {
  return nlohmann::json{{"l", c.l},
                        {"n", c.n},
                        {"patch", c.patch},
                        {"input_size", c.input_size},
                        {"widths", c.widths},
                        {"width_2d", c.width_2d},
                        {"hidden", c.hidden},
                        {"dropout", c.dropout}};
}

inline SolverConfig solver_config_from_json(const nlohmann::json& j) {
  SolverConfig c;
  c.l = j.at("l").get<int>();
  c.n = j.at("n").get<int>();
  c.patch = j.at("patch").get<int>();
  c.input_size = j.at("input_size").get<int>();
  c.widths = j.at("widths").get<std::array<int, 6>>();
  c.width_2d = j.at("width_2d").get<int>();
  c.hidden = j.at("hidden").get<int>();
  c.dropout = j.at("dropout").get<float>();
  return c;
}

/// Per-batch head outputs: row s of each tensor is the flat k x k logits
/// (row-major element x position) of sample s.
struct HeadLogits {
  nn::Tensor temporal;  // (B, l^2)
  nn::Tensor spatial;   // (B, (n^2)^2)
};

/// Mean cross-entropy between each element's predicted position
/// distribution and its true position. logits are k x k row-major
/// (element, position); labels[e] is element e's original position.
inline double puzzle_loss(std::span<const float> logits, const Permutation& labels) {
  const int k = labels.k();
  if (static_cast<int>(logits.size()) != k * k)
    throw std::invalid_argument("puzzle_loss: logits size != k^2");
  double total = 0.0;
  for (int e = 0; e < k; ++e) {
    const float* row = logits.data() + static_cast<std::size_t>(e) * k;
    double mx = row[0];
    for (int p = 1; p < k; ++p) mx = std::max(mx, static_cast<double>(row[p]));
    double sum = 0.0;
    for (int p = 0; p < k; ++p) sum += std::exp(row[p] - mx);
    total += std::log(sum) - (row[labels[e]] - mx);
  }
  return total / k;
}

/// puzzle_loss plus its gradient: dlogits += scale * d(mean CE)/d(logits).
inline double puzzle_loss_grad(std::span<const float> logits, const Permutation& labels,
                               std::span<float> dlogits, double scale) {
  const int k = labels.k();
  double total = 0.0;
  for (int e = 0; e < k; ++e) {
    const float* row = logits.data() + static_cast<std::size_t>(e) * k;
    float* drow = dlogits.data() + static_cast<std::size_t>(e) * k;
    double mx = row[0];
    for (int p = 1; p < k; ++p) mx = std::max(mx, static_cast<double>(row[p]));
    double sum = 0.0;
    for (int p = 0; p < k; ++p) sum += std::exp(row[p] - mx);
    total += std::log(sum) - (row[labels[e]] - mx);
    const double g = scale / k;
    for (int p = 0; p < k; ++p) {
      const double soft = std::exp(row[p] - mx) / sum;
      drow[p] += static_cast<float>(g * (soft - (p == labels[e] ? 1.0 : 0.0)));
    }
  }
  return total / k;
}

/// Number of elements whose argmax position prediction is correct.
inline int correct_elements(std::span<const float> logits, const Permutation& labels) {
  const int k = labels.k();
  int correct = 0;
  for (int e = 0; e < k; ++e) {
    const float* row = logits.data() + static_cast<std::size_t>(e) * k;
    int best = 0;
    for (int p = 1; p < k; ++p)
      if (row[p] > row[best]) best = p;
    if (best == labels[e]) ++correct;
  }
  return correct;
}

/// Column softmax of a flat k x k logits block into the (position, element)
/// prediction matrix.
inline PredictionMatrix to_prediction_matrix(std::span<const float> logits, int k,
                                             PuzzleKind kind) {
  PredictionMatrix m;
  m.k = k;
  m.kind = kind;
  m.probs.assign(static_cast<std::size_t>(k) * k, 0.f);
  for (int e = 0; e < k; ++e) {
    const float* row = logits.data() + static_cast<std::size_t>(e) * k;
    double mx = row[0];
    for (int p = 1; p < k; ++p) mx = std::max(mx, static_cast<double>(row[p]));
    double sum = 0.0;
    for (int p = 0; p < k; ++p) sum += std::exp(row[p] - mx);
    for (int p = 0; p < k; ++p)
      m.probs[static_cast<std::size_t>(p) * k + e] =
          static_cast<float>(std::exp(row[p] - mx) / sum);
  }
  return m;
}

/// The jigsaw solver network. Forward keeps per-stage activations so a
/// matching backward() can be called immediately afterwards; buffers are
/// reused across batches.
class JigsawSolver {
 public:
  explicit JigsawSolver(const SolverConfig& cfg)
      : cfg_(cfg),
        conv1_("conv1", 3, cfg.widths[0], 3),
        conv2_("conv2", cfg.widths[0], cfg.widths[1], 3),
        conv3_("conv3", cfg.widths[1], cfg.widths[2], 3),
        conv4_("conv4", cfg.widths[2], cfg.widths[3], 3),
        conv5_("conv5", cfg.widths[3], cfg.widths[4], 3),
        conv6_("conv6", cfg.widths[4], cfg.widths[5], 3),
        conv7_("conv7", cfg.widths[5], cfg.width_2d, 1),
        pool12_(1, 2, 2),
        pool3_(-1, 2, 2),
        pool4_(1, 2, 2),
        dropout_(cfg.dropout),
        fc_t1_("head_t.fc1", flat_dim(), cfg.hidden, false),
        fc_t2_("head_t.fc2", cfg.hidden, cfg.l * cfg.l, true),
        fc_s1_("head_s.fc1", flat_dim(), cfg.hidden, false),
        fc_s2_("head_s.fc2", cfg.hidden, cfg.n * cfg.n * cfg.n * cfg.n, true) {}

  const SolverConfig& config() const { return cfg_; }

  /// Spatial size after the three 2x pools and the 2-D block pool.
  int final_spatial() const {
    int s = cfg_.resolved_input();
    for (int i = 0; i < 4; ++i) {
      s /= 2;
      if (s < 1)
        throw std::invalid_argument("SolverConfig: input too small for the backbone");
    }
    return s;
  }
  int flat_dim() const { return cfg_.width_2d * final_spatial() * final_spatial(); }

  void init(std::uint64_t seed) {
    Rng rng(derive_seed(seed, 0x57454947));  // weight stream
    conv1_.init(rng);
    conv2_.init(rng);
    conv3_.init(rng);
    conv4_.init(rng);
    conv5_.init(rng);
    conv6_.init(rng);
    conv7_.init(rng);
    fc_t1_.init(rng);
    fc_t2_.init(rng);
    fc_s1_.init(rng);
    fc_s2_.init(rng);
  }

  std::vector<nn::ParamRef> params() {
    return {conv1_.param(),  conv2_.param(),  conv3_.param(),  conv4_.param(),
            conv5_.param(),  conv6_.param(),  conv7_.param(),  fc_t1_.weight(),
            fc_t1_.bias(),   fc_t2_.weight(), fc_t2_.bias(),   fc_s1_.weight(),
            fc_s1_.bias(),   fc_s2_.weight(), fc_s2_.bias()};
  }

  /// x: (B, 3, l, S, S) with S = resolved_input(). rng is only consumed in
  /// training mode (channel dropout).
  const HeadLogits& forward(const nn::Tensor& x, bool train, Rng& rng) {
    const int S = cfg_.resolved_input();
    if (x.d[1] != 3 || x.d[2] != cfg_.l || x.d[3] != S || x.d[4] != S)
      throw std::invalid_argument("JigsawSolver: input shape mismatch");
    x_ = &x;

    conv1_.forward(x, y1_);
    in1_.forward(y1_);
    conv2_.forward(y1_, y2_);
    in2_.forward(y2_);
    pool12_.forward(y2_, z1_, am1_);
    conv3_.forward(z1_, y3_);
    in3_.forward(y3_);
    conv4_.forward(y3_, y4_);
    in4_.forward(y4_);
    pool12_.forward(y4_, z2_, am2_);
    conv5_.forward(z2_, y5_);
    in5_.forward(y5_);
    conv6_.forward(y5_, y6_);
    in6_.forward(y6_);
    pool3_.forward(y6_, z3_, am3_);
    conv7_.forward(z3_, y7_);
    in7_.forward(y7_);
    pool4_.forward(y7_, z4_, am4_);
    dropout_.forward(z4_, train, rng);

    flat_ = z4_;  // same storage, viewed as (B, F)
    flat_.d = {z4_.d[0], static_cast<int>(z4_.sample_size()), 1, 1, 1};

    fc_t1_.forward(flat_, ht_);
    fc_t2_.forward(ht_, logits_.temporal);
    fc_s1_.forward(flat_, hs_);
    fc_s2_.forward(hs_, logits_.spatial);
    return logits_;
  }

  /// Accumulates parameter gradients for the last forward() batch.
  /// dlogits rows of samples that do not belong to a head must be zero.
  void backward(const nn::Tensor& dlogits_t, const nn::Tensor& dlogits_s) {
    nn::Tensor dht, dhs, dflat_t, dflat_s;
    fc_t2_.backward(ht_, dlogits_t, dht);
    fc_t1_.backward(flat_, dht, dflat_t);
    fc_s2_.backward(hs_, dlogits_s, dhs);
    fc_s1_.backward(flat_, dhs, dflat_s);
    for (std::size_t i = 0; i < dflat_t.v.size(); ++i) dflat_t.v[i] += dflat_s.v[i];
    dflat_t.d = z4_.d;

    dropout_.backward(dflat_t);
    nn::Tensor dy7;
    pool4_.backward(z4_, am4_, dflat_t, dy7, y7_.d);
    in7_.backward(y7_, dy7);
    nn::Tensor dz3;
    conv7_.backward(z3_, dy7, &dz3);
    nn::Tensor dy6;
    pool3_.backward(z3_, am3_, dz3, dy6, y6_.d);
    in6_.backward(y6_, dy6);
    nn::Tensor dy5;
    conv6_.backward(y5_, dy6, &dy5);
    in5_.backward(y5_, dy5);
    nn::Tensor dz2;
    conv5_.backward(z2_, dy5, &dz2);
    nn::Tensor dy4;
    pool12_.backward(z2_, am2_, dz2, dy4, y4_.d);
    in4_.backward(y4_, dy4);
    nn::Tensor dy3;
    conv4_.backward(y3_, dy4, &dy3);
    in3_.backward(y3_, dy3);
    nn::Tensor dz1;
    conv3_.backward(z1_, dy3, &dz1);
    nn::Tensor dy2;
    pool12_.backward(z1_, am1_, dz1, dy2, y2_.d);
    in2_.backward(y2_, dy2);
    nn::Tensor dy1;
    conv2_.backward(y1_, dy2, &dy1);
    in1_.backward(y1_, dy1);
    conv1_.backward(*x_, dy1, nullptr);
  }

 private:
  SolverConfig cfg_;
  nn::Conv3d conv1_, conv2_, conv3_, conv4_, conv5_, conv6_, conv7_;
  nn::InstanceNorm in1_, in2_, in3_, in4_, in5_, in6_, in7_;
  nn::MaxPool3d pool12_, pool3_, pool4_;
  nn::Dropout2d dropout_;
  nn::Linear fc_t1_, fc_t2_, fc_s1_, fc_s2_;

  // Saved activations of the last forward pass.
  const nn::Tensor* x_ = nullptr;
  nn::Tensor y1_, y2_, y3_, y4_, y5_, y6_, y7_;
  nn::Tensor z1_, z2_, z3_, z4_, flat_, ht_, hs_;
  std::vector<std::int32_t> am1_, am2_, am3_, am4_;
  HeadLogits logits_;
};

/// Copies puzzle-sample frames into a network input tensor, resampling to
/// the network resolution and replicating grayscale to three channels.
inline void fill_input_slice(nn::Tensor& x, int b, const std::vector<Frame>& frames,
                             int size) {
  const int l = static_cast<int>(frames.size());
  for (int t = 0; t < l; ++t) {
    const Frame& raw = frames[static_cast<std::size_t>(t)];
    const Frame f = (raw.h == size && raw.w == size) ? raw : resize(raw, size, size);
    float* xs = x.sample(b);
    const std::size_t plane = static_cast<std::size_t>(size) * size;
    const std::size_t tplane = static_cast<std::size_t>(l) * plane;
    for (int c = 0; c < 3; ++c) {
      float* dst = xs + static_cast<std::size_t>(c) * tplane +
                   static_cast<std::size_t>(t) * plane;
      const int src_c = f.c == 3 ? c : 0;
      for (int y = 0; y < size; ++y)
        for (int xx = 0; xx < size; ++xx)
          dst[static_cast<std::size_t>(y) * size + xx] = f.at(y, xx, src_c);
    }
  }
}

inline nn::Tensor assemble_samples(const std::vector<const PuzzleSample*>& samples,
                                   const SolverConfig& cfg) {
  const int S = cfg.resolved_input();
  nn::Tensor x(static_cast<int>(samples.size()), 3, cfg.l, S, S);
  for (int b = 0; b < static_cast<int>(samples.size()); ++b)
    fill_input_slice(x, b, samples[static_cast<std::size_t>(b)]->frames, S);
  return x;
}

/// Unshuffled cubes, as fed at inference time.
inline nn::Tensor assemble_cubes(const std::vector<const ObjectCube*>& cubes,
                                 const SolverConfig& cfg) {
  const int S = cfg.resolved_input();
  nn::Tensor x(static_cast<int>(cubes.size()), 3, cfg.l, S, S);
  for (int b = 0; b < static_cast<int>(cubes.size()); ++b)
    fill_input_slice(x, b, cubes[static_cast<std::size_t>(b)]->patches, S);
  return x;
}

// ---- checkpoint io ---------------------------------------------------------

constexpr char kCheckpointMagic[8] = {'S', 'T', 'J', 'C', 'K', 'P', 'T', '1'};

struct CheckpointMeta {
  SolverConfig config;
  std::uint64_t seed = 0;
  int epoch = 0;
};

inline void save_checkpoint(const std::filesystem::path& path, JigsawSolver& net,
                            const CheckpointMeta& meta) {
  nlohmann::json header;
  header["config"] = solver_config_to_json(meta.config);
  header["seed"] = meta.seed;
  header["epoch"] = meta.epoch;
  nlohmann::json plist = nlohmann::json::array();
  for (nn::ParamRef p : net.params())
    plist.push_back({{"name", p.name}, {"size", p.w->size()}});
  header["params"] = plist;

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint: " + path.string());
  const std::string h = header.dump();
  const std::uint64_t hlen = h.size();
  out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  out.write(reinterpret_cast<const char*>(&hlen), sizeof(hlen));
  out.write(h.data(), static_cast<std::streamsize>(h.size()));
  for (nn::ParamRef p : net.params())
    out.write(reinterpret_cast<const char*>(p.w->data()),
              static_cast<std::streamsize>(p.w->size() * sizeof(float)));
  if (!out) throw std::runtime_error("checkpoint write failed: " + path.string());
}

inline CheckpointMeta read_checkpoint_meta(std::ifstream& in,
                                           const std::filesystem::path& path) {
  char magic[8];
  std::uint64_t hlen = 0;
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0)
    throw ParseError("not a checkpoint file: " + path.string());
  in.read(reinterpret_cast<char*>(&hlen), sizeof(hlen));
  std::string h(hlen, '\0');
  in.read(h.data(), static_cast<std::streamsize>(hlen));
  if (!in) throw ParseError("truncated checkpoint header: " + path.string());
  nlohmann::json header = nlohmann::json::parse(h);
  CheckpointMeta meta;
  meta.config = solver_config_from_json(header.at("config"));
  meta.seed = header.at("seed").get<std::uint64_t>();
  meta.epoch = header.at("epoch").get<int>();
  return meta;
}

/// Loads config + weights; the returned solver is ready for inference.
inline std::pair<JigsawSolver, CheckpointMeta> load_checkpoint(
    const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingArtifact("checkpoint not found: " + path.string());
  CheckpointMeta meta = read_checkpoint_meta(in, path);
  JigsawSolver net(meta.config);
  for (nn::ParamRef p : net.params()) {
    in.read(reinterpret_cast<char*>(p.w->data()),
            static_cast<std::streamsize>(p.w->size() * sizeof(float)));
    if (!in) throw ParseError("truncated checkpoint weights: " + path.string());
  }
  return {std::move(net), meta};
}

}  // namespace stj
