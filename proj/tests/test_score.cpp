#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "stjigsaw/rng.hpp"
#include "stjigsaw/score.hpp"

using namespace stj;

namespace {

PredictionMatrix diag_matrix(const std::vector<float>& diag) {
  PredictionMatrix m;
  m.k = static_cast<int>(diag.size());
  m.kind = PuzzleKind::temporal;
  m.probs.assign(static_cast<std::size_t>(m.k) * m.k, 0.f);
  for (int i = 0; i < m.k; ++i) {
    for (int p = 0; p < m.k; ++p)
      m.probs[static_cast<std::size_t>(p) * m.k + i] =
          p == i ? diag[static_cast<std::size_t>(i)]
                 : (1.f - diag[static_cast<std::size_t>(i)]) / (m.k - 1);
  }
  return m;
}

// Brute-force clipped-window 3D mean for the filter oracle.
std::vector<double> mean_filter_oracle(const std::vector<double>& v, int nt, int nh, int nw,
                                       int kt, int kh, int kw) {
  std::vector<double> out(v.size());
  auto at = [&](int t, int y, int x) {
    return v[(static_cast<std::size_t>(t) * nh + y) * nw + x];
  };
  for (int t = 0; t < nt; ++t)
    for (int y = 0; y < nh; ++y)
      for (int x = 0; x < nw; ++x) {
        double sum = 0.0;
        int count = 0;
        for (int dt = -kt / 2; dt <= kt / 2; ++dt)
          for (int dy = -kh / 2; dy <= kh / 2; ++dy)
            for (int dx = -kw / 2; dx <= kw / 2; ++dx) {
              const int tt = t + dt, yy = y + dy, xx = x + dx;
              if (tt < 0 || tt >= nt || yy < 0 || yy >= nh || xx < 0 || xx >= nw) continue;
              sum += at(tt, yy, xx);
              ++count;
            }
        out[(static_cast<std::size_t>(t) * nh + y) * nw + x] = sum / count;
      }
  return out;
}

}  // namespace

TEST_CASE("object_regularity is the minimum diagonal entry") {
  REQUIRE(object_regularity(diag_matrix({0.9f, 0.8f, 0.95f})) == Catch::Approx(0.8));
  REQUIRE(object_regularity(diag_matrix({0.999f, 0.999f, 0.999f})) == Catch::Approx(0.999));
  REQUIRE_THROWS_AS(object_regularity(PredictionMatrix{}), std::invalid_argument);
}

TEST_CASE("frame_regularity") {
  ScoreMapConfig cfg;
  cfg.downsample = 1;

  SECTION("no objects anywhere scores 1.0") {
    cfg.kernel_t = cfg.kernel_h = cfg.kernel_w = 1;
    auto [rs, rt] = frame_regularity({}, 5, 8, 8, cfg);
    for (double v : rs) REQUIRE(v == Catch::Approx(1.0));
    for (double v : rt) REQUIRE(v == Catch::Approx(1.0));
  }
  SECTION("identity kernel keeps the object frame only") {
    cfg.kernel_t = cfg.kernel_h = cfg.kernel_w = 1;
    ObjectScore o;
    o.frame = 2;
    o.box[0] = 1;
    o.box[1] = 1;
    o.box[2] = 4;
    o.box[3] = 4;
    o.r_s = 0.2;
    o.r_t = 0.6;
    auto [rs, rt] = frame_regularity({o}, 5, 8, 8, cfg);
    for (int t = 0; t < 5; ++t) {
      REQUIRE(rs[t] == Catch::Approx(t == 2 ? 0.2 : 1.0));
      REQUIRE(rt[t] == Catch::Approx(t == 2 ? 0.6 : 1.0));
    }
  }
  SECTION("a (3,7,7) kernel spreads a zero box into adjacent frames") {
    cfg.kernel_t = 3;
    cfg.kernel_h = 7;
    cfg.kernel_w = 7;
    ObjectScore o;
    o.frame = 2;
    o.box[0] = 2;
    o.box[1] = 2;
    o.box[2] = 6;
    o.box[3] = 6;
    o.r_s = 0.0;
    o.r_t = 0.0;
    auto [rs, rt] = frame_regularity({o}, 5, 8, 8, cfg);
    REQUIRE(rs[2] < 1.0);
    REQUIRE(rs[1] < 1.0);  // temporal extent 3 reaches the neighbors
    REQUIRE(rs[3] < 1.0);
    REQUIRE(rs[0] == Catch::Approx(1.0));
    REQUIRE(rs[4] == Catch::Approx(1.0));
    REQUIRE(rt[1] < 1.0);
  }
  SECTION("a second all-regular object never changes the frame score") {
    cfg.kernel_t = cfg.kernel_h = cfg.kernel_w = 1;
    ObjectScore low;
    low.frame = 1;
    low.box[0] = 0;
    low.box[1] = 0;
    low.box[2] = 3;
    low.box[3] = 3;
    low.r_s = low.r_t = 0.4;
    ObjectScore ones = low;
    ones.box[0] = 4;
    ones.box[2] = 7;
    ones.r_s = ones.r_t = 1.0;
    auto [a_s, a_t] = frame_regularity({low}, 3, 8, 8, cfg);
    auto [b_s, b_t] = frame_regularity({low, ones}, 3, 8, 8, cfg);
    REQUIRE(a_s == b_s);
    REQUIRE(a_t == b_t);
  }
}

TEST_CASE("3D mean filter equals the brute-force oracle") {
  Rng rng(31);
  for (int trial = 0; trial < 10; ++trial) {
    const int nt = 4 + static_cast<int>(uniform_index(rng, 4));
    const int nh = 5 + static_cast<int>(uniform_index(rng, 6));
    const int nw = 5 + static_cast<int>(uniform_index(rng, 6));
    std::vector<double> v(static_cast<std::size_t>(nt) * nh * nw);
    for (double& x : v) x = uniform_real01(rng);

    std::vector<double> filtered = v;
    detail::box_mean_axis(filtered, nt, nh, nw, 0, 3);
    detail::box_mean_axis(filtered, nt, nh, nw, 1, 5);
    detail::box_mean_axis(filtered, nt, nh, nw, 2, 5);
    const std::vector<double> oracle = mean_filter_oracle(v, nt, nh, nw, 3, 5, 5);
    for (std::size_t i = 0; i < v.size(); ++i)
      REQUIRE(filtered[i] == Catch::Approx(oracle[i]).margin(1e-12));
  }
}

TEST_CASE("normalize_per_video") {
  SECTION("affine map to [0,1]") {
    const std::vector<double> out = normalize_per_video({0.2, 0.5, 0.8});
    REQUIRE(out[0] == Catch::Approx(0.0));
    REQUIRE(out[1] == Catch::Approx(0.5));
    REQUIRE(out[2] == Catch::Approx(1.0));
  }
  SECTION("constant input maps to zeros") {
    for (double v : normalize_per_video({0.7, 0.7, 0.7})) REQUIRE(v == 0.0);
  }
  SECTION("non-constant input always spans 0..1") {
    Rng rng(8);
    for (int trial = 0; trial < 50; ++trial) {
      std::vector<double> v(20);
      for (double& x : v) x = uniform_real(rng, -5.0, 5.0);
      v[3] = -6.0;  // guarantee a range
      const auto out = normalize_per_video(v);
      REQUIRE(*std::min_element(out.begin(), out.end()) == Catch::Approx(0.0));
      REQUIRE(*std::max_element(out.begin(), out.end()) == Catch::Approx(1.0));
    }
  }
  SECTION("empty input rejected") {
    REQUIRE_THROWS_AS(normalize_per_video({}), std::invalid_argument);
  }
}

TEST_CASE("fuse_and_smooth") {
  const std::vector<double> rs{0.0, 0.5, 1.0, 0.5, 0.0};
  const std::vector<double> rt{1.0, 1.0, 0.0, 1.0, 1.0};

  SECTION("w=1 is the smoothed spatial track") {
    REQUIRE(fuse_and_smooth(rs, rt, 1.0, 0.0) == rs);
  }
  SECTION("w=0 is the smoothed temporal track") {
    REQUIRE(fuse_and_smooth(rs, rt, 0.0, 0.0) == rt);
  }
  SECTION("sigma=0 performs no smoothing") {
    const auto out = fuse_and_smooth(rs, rt, 0.5, 0.0);
    for (std::size_t i = 0; i < rs.size(); ++i)
      REQUIRE(out[i] == Catch::Approx(0.5 * rs[i] + 0.5 * rt[i]));
  }
  SECTION("kernel sums to one; constant input is a fixed point") {
    const auto k = gaussian_kernel(3.0);
    REQUIRE(k.size() == 25);  // truncated at 4 sigma
    double sum = 0.0;
    for (double w : k) sum += w;
    REQUIRE(sum == Catch::Approx(1.0));
    const std::vector<double> c(40, 0.37);
    const auto out = gaussian_smooth(c, 3.0);
    for (double v : out) REQUIRE(v == Catch::Approx(0.37));
  }
  SECTION("length mismatch rejected") {
    REQUIRE_THROWS_AS(fuse_and_smooth(rs, {0.1}, 0.5, 1.0), std::invalid_argument);
  }
  SECTION("w outside [0,1] rejected") {
    REQUIRE_THROWS_AS(fuse_and_smooth(rs, rt, 1.5, 1.0), std::invalid_argument);
  }
}

TEST_CASE("build_timeline is deterministic and inverts regularity") {
  ObjectScore o;
  o.frame = 3;
  o.box[0] = 4;
  o.box[1] = 4;
  o.box[2] = 12;
  o.box[3] = 12;
  o.r_s = 0.1;
  o.r_t = 0.3;
  ScoreMapConfig cfg;
  cfg.kernel_t = 3;
  cfg.kernel_h = 5;
  cfg.kernel_w = 5;
  cfg.downsample = 2;
  const ScoreTimeline a = build_timeline("v", {o}, 8, 16, 16, cfg, 0.5, 1.0);
  const ScoreTimeline b = build_timeline("v", {o}, 8, 16, 16, cfg, 0.5, 1.0);
  REQUIRE(a.anomaly == b.anomaly);
  for (std::size_t i = 0; i < a.anomaly.size(); ++i)
    REQUIRE(a.anomaly[i] == Catch::Approx(1.0 - a.fused[i]));
  // The object frame is the most anomalous one.
  std::size_t best = 0;
  for (std::size_t i = 0; i < a.anomaly.size(); ++i)
    if (a.anomaly[i] > a.anomaly[best]) best = i;
  REQUIRE(best == 3);
}
