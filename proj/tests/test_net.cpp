#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>

#include "stjigsaw/pipeline.hpp"
#include "stjigsaw/train.hpp"

using namespace stj;
using nn::Tensor;

namespace {

SolverConfig tiny_config(int l = 7, int n = 3, int patch = 33) {
  SolverConfig cfg;
  cfg.l = l;
  cfg.n = n;
  cfg.patch = patch;
  cfg.widths = {2, 2, 4, 4, 4, 4};
  cfg.width_2d = 4;
  cfg.hidden = 16;
  cfg.dropout = 0.1f;
  return cfg;
}

// A cube with a bright block sweeping rightward; solvable both ways: patch
// position is readable from the block's coordinates, frame order from its
// horizontal offset.
ObjectCube sweep_cube(int l, int size, int x0, int y0, int step) {
  ObjectCube cube;
  cube.center_frame = l / 2;
  for (int t = 0; t < l; ++t) {
    Frame f(size, size, 1, 0.05f);
    const int bx = std::clamp(x0 + step * t, 0, size - 9);
    for (int y = 0; y < 8; ++y)
      for (int x = 0; x < 8; ++x) {
        f.at(std::min(size - 1, y0 + y), bx + x, 0) =
            0.3f + 0.08f * static_cast<float>(y);
      }
    cube.patches.push_back(std::move(f));
  }
  return cube;
}

CubeStore sweep_store(int count, int l, int patch) {
  CubeStore store(l, patch, 1);
  const int vid = store.register_video({"v0", 100, patch, patch});
  Rng rng(6);
  for (int i = 0; i < count; ++i) {
    const int x0 = static_cast<int>(uniform_index(rng, 8));
    const int y0 = static_cast<int>(uniform_index(rng, patch - 10));
    store.add(sweep_cube(l, patch, x0, y0, 2), vid);
  }
  return store;
}

}  // namespace

TEST_CASE("head output shapes are l^2 and (n^2)^2") {
  const SolverConfig cfg = tiny_config(7, 3, 63);
  REQUIRE(cfg.resolved_input() == 63);
  JigsawSolver net(cfg);
  net.init(1);
  Rng rng(2);
  Tensor x(2, 3, 7, 63, 63);
  for (float& v : x.v) v = static_cast<float>(uniform_real01(rng));
  const HeadLogits& lg = net.forward(x, false, rng);
  REQUIRE(lg.temporal.d[0] == 2);
  REQUIRE(lg.temporal.d[1] == 7 * 7);
  REQUIRE(lg.spatial.d[1] == 9 * 9);
}

TEST_CASE("prediction matrix columns are distributions") {
  const SolverConfig cfg = tiny_config();
  JigsawSolver net(cfg);
  net.init(3);
  Rng rng(4);
  Tensor x(1, 3, 7, 33, 33);
  for (float& v : x.v) v = static_cast<float>(uniform_real01(rng));
  const HeadLogits& lg = net.forward(x, false, rng);

  for (auto [span_size, k, kind] :
       {std::tuple{49, 7, PuzzleKind::temporal}, std::tuple{81, 9, PuzzleKind::spatial}}) {
    const float* data =
        kind == PuzzleKind::temporal ? lg.temporal.sample(0) : lg.spatial.sample(0);
    const PredictionMatrix m =
        to_prediction_matrix({data, static_cast<std::size_t>(span_size)}, k, kind);
    for (int e = 0; e < k; ++e) {
      double col = 0.0;
      for (int p = 0; p < k; ++p) {
        REQUIRE(m.at(p, e) >= 0.f);
        col += m.at(p, e);
      }
      REQUIRE(col == Catch::Approx(1.0).margin(1e-5));
    }
  }
}

TEST_CASE("loss analytics") {
  SECTION("uniform predictions give ln k") {
    for (int k : {4, 7, 9}) {
      std::vector<float> logits(static_cast<std::size_t>(k) * k, 0.f);
      const double loss = puzzle_loss(logits, identity(k));
      REQUIRE(std::abs(loss - std::log(k)) < 1e-6);
    }
  }
  SECTION("saturated one-hot-correct predictions give ~zero loss") {
    for (int k : {4, 7, 9}) {
      Rng rng(static_cast<std::uint64_t>(k));
      const Permutation labels = sample_uniform(k, rng);
      std::vector<float> logits(static_cast<std::size_t>(k) * k, 0.f);
      for (int e = 0; e < k; ++e)
        logits[static_cast<std::size_t>(e) * k + labels[e]] = 30.f;
      REQUIRE(puzzle_loss(logits, labels) <= 1e-6);
    }
  }
  SECTION("gradient matches central differences on a 3-element toy") {
    Rng rng(7);
    const Permutation labels{std::vector<int>{2, 0, 1}};
    std::vector<float> logits(9);
    for (float& v : logits) v = static_cast<float>(uniform_real(rng, -1.0, 1.0));

    std::vector<float> grad(9, 0.f);
    puzzle_loss_grad(logits, labels, grad, 1.0);

    double num_sq = 0.0, diff_sq = 0.0;
    for (std::size_t i = 0; i < 9; ++i) {
      const float keep = logits[i];
      const float hp = keep + 1e-3f, hm = keep - 1e-3f;
      logits[i] = hp;
      const double lp = puzzle_loss(logits, labels);
      logits[i] = hm;
      const double lm = puzzle_loss(logits, labels);
      logits[i] = keep;
      const double numeric = (lp - lm) / (static_cast<double>(hp) - hm);
      num_sq += numeric * numeric;
      diff_sq += (numeric - grad[i]) * (numeric - grad[i]);
    }
    REQUIRE(std::sqrt(diff_sq) / std::sqrt(num_sq) < 1e-4);
  }
  SECTION("loss is non-negative") {
    Rng rng(8);
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<float> logits(16);
      for (float& v : logits) v = static_cast<float>(uniform_real(rng, -3.0, 3.0));
      REQUIRE(puzzle_loss(logits, sample_uniform(4, rng)) >= 0.0);
    }
  }
}

TEST_CASE("heads only learn from their own puzzle type") {
  const SolverConfig cfg = tiny_config();
  JigsawSolver net(cfg);
  net.init(5);
  Rng rng(6);
  Tensor x(3, 3, 7, 33, 33);
  for (float& v : x.v) v = static_cast<float>(uniform_real01(rng));
  const HeadLogits& lg = net.forward(x, true, rng);

  // All three samples are spatial: temporal-head logits get zero gradient.
  Tensor dlt(3, 49), dls(3, 81);
  for (int b = 0; b < 3; ++b)
    puzzle_loss_grad({lg.spatial.sample(b), 81}, sample_uniform(9, rng),
                     {dls.sample(b), 81}, 1.0 / 3);
  for (nn::ParamRef p : net.params()) std::fill(p.g->begin(), p.g->end(), 0.f);
  net.backward(dlt, dls);

  for (nn::ParamRef p : net.params()) {
    const bool temporal_head = p.name.rfind("head_t", 0) == 0;
    double norm = 0.0;
    for (float g : *p.g) norm += std::abs(g);
    if (temporal_head) {
      REQUIRE(norm == 0.0);
    }
  }
  // The shared backbone does receive gradient.
  double conv_norm = 0.0;
  for (nn::ParamRef p : net.params())
    if (p.name.rfind("conv", 0) == 0)
      for (float g : *p.g) conv_norm += std::abs(g);
  REQUIRE(conv_norm > 0.0);
}

TEST_CASE("checkpoint round trip preserves behaviour") {
  namespace fs = std::filesystem;
  const SolverConfig cfg = tiny_config();
  JigsawSolver net(cfg);
  net.init(42);
  const fs::path path = fs::temp_directory_path() / "stj_ckpt_test.stj";
  save_checkpoint(path, net, {cfg, 42, 3});

  auto [loaded, meta] = load_checkpoint(path);
  REQUIRE(meta.seed == 42);
  REQUIRE(meta.epoch == 3);
  REQUIRE(meta.config.l == cfg.l);
  REQUIRE(meta.config.widths == cfg.widths);

  Rng rng(1);
  Tensor x(1, 3, 7, 33, 33);
  for (float& v : x.v) v = static_cast<float>(uniform_real01(rng));
  Rng ra(0), rb(0);
  const HeadLogits& a = net.forward(x, false, ra);
  const Tensor at = a.temporal, as = a.spatial;
  const HeadLogits& b = loaded.forward(x, false, rb);
  REQUIRE(at.v == b.temporal.v);
  REQUIRE(as.v == b.spatial.v);
}

TEST_CASE("input assembly replicates grayscale to three channels") {
  const SolverConfig cfg = tiny_config(3, 3, 33);
  ObjectCube cube = sweep_cube(3, 33, 0, 4, 2);
  const Tensor x = assemble_cubes({&cube}, cfg);
  REQUIRE(x.d == std::array<int, 5>{1, 3, 3, 33, 33});
  const std::size_t plane = static_cast<std::size_t>(3) * 33 * 33;
  for (std::size_t i = 0; i < plane; ++i) {
    REQUIRE(x.v[i] == x.v[plane + i]);
    REQUIRE(x.v[i] == x.v[2 * plane + i]);
  }
}

TEST_CASE("train_solver") {
  SECTION("empty dataset is a configuration error") {
    const SolverConfig cfg = tiny_config();
    JigsawSolver net(cfg);
    net.init(1);
    CubeStore empty(cfg.l, cfg.patch, 1);
    TrainConfig tc;
    REQUIRE_THROWS_AS(train_solver(net, empty, tc, [](auto&&...) {}), ConfigError);
  }
  SECTION("two-epoch smoke run decreases the loss") {
    const SolverConfig cfg = tiny_config();
    JigsawSolver net(cfg);
    net.init(7);
    const CubeStore store = sweep_store(48, cfg.l, cfg.patch);
    TrainConfig tc;
    tc.epochs = 2;
    tc.batch_size = 16;
    tc.adam.lr = 1e-3;
    tc.seed = 3;
    const TrainResult res = train_solver(net, store, tc, [](auto&&...) {});
    REQUIRE(res.curve.size() == 2);
    REQUIRE(res.curve[1].loss_total < res.curve[0].loss_total);
  }
  SECTION("seed-fixed runs reproduce identical loss curves") {
    const SolverConfig cfg = tiny_config();
    const CubeStore store = sweep_store(32, cfg.l, cfg.patch);
    TrainConfig tc;
    tc.epochs = 2;
    tc.batch_size = 16;
    tc.seed = 11;

    auto run = [&]() {
      JigsawSolver net(cfg);
      net.init(tc.seed);
      return train_solver(net, store, tc, [](auto&&...) {});
    };
    const TrainResult a = run(), b = run();
    REQUIRE(a.curve.size() == b.curve.size());
    for (std::size_t i = 0; i < a.curve.size(); ++i) {
      REQUIRE(a.curve[i].loss_total == b.curve[i].loss_total);
      REQUIRE(a.curve[i].acc_t == b.curve[i].acc_t);
      REQUIRE(a.curve[i].acc_s == b.curve[i].acc_s);
    }
  }
  SECTION("batch composition honors r within 0.02") {
    const SolverConfig cfg = tiny_config(5, 3, 21);
    JigsawSolver net(cfg);
    net.init(9);
    CubeStore store(5, 21, 1);
    const int vid = store.register_video({"v0", 10, 21, 21});
    for (int i = 0; i < 200; ++i) store.add(sweep_cube(5, 21, i % 6, i % 12, 2), vid);
    TrainConfig tc;
    tc.epochs = 12;
    tc.batch_size = 64;
    tc.adam.lr = 1e-3;
    const TrainResult res = train_solver(net, store, tc, [](auto&&...) {});
    const long long branch_draws =
        res.stats.spatial + res.stats.temporal + res.stats.static_dropped;
    const double frac = static_cast<double>(res.stats.spatial) / branch_draws;
    REQUIRE(frac > 0.48);
    REQUIRE(frac < 0.52);
  }
}

TEST_CASE("score_cubes produces per-video regularities in [0,1]") {
  const SolverConfig cfg = tiny_config();
  JigsawSolver net(cfg);
  net.init(13);
  const CubeStore store = sweep_store(9, cfg.l, cfg.patch);
  auto by_video = score_cubes(net, store, 4);
  REQUIRE(by_video.count("v0") == 1);
  REQUIRE(by_video["v0"].size() == 9);
  for (const ObjectScore& s : by_video["v0"]) {
    REQUIRE(s.r_s >= 0.0);
    REQUIRE(s.r_s <= 1.0);
    REQUIRE(s.r_t >= 0.0);
    REQUIRE(s.r_t <= 1.0);
  }
}
