#pragma once

#include <array>
#include <cstddef>
#include <vector>

namespace stj::nn {

/// Dense float tensor, row-major, up to 5 axes (B, C, T, H, W). 2-D feature
/// maps use T = 1; flat activations use (B, F, 1, 1, 1).
struct Tensor {
  std::array<int, 5> d{0, 0, 1, 1, 1};
  std::vector<float> v;

  Tensor() = default;
  Tensor(int b, int c, int t = 1, int h = 1, int w = 1) { resize(b, c, t, h, w); }

  void resize(int b, int c, int t = 1, int h = 1, int w = 1) {
    d = {b, c, t, h, w};
    v.assign(numel(), 0.f);
  }
  std::size_t numel() const {
    return static_cast<std::size_t>(d[0]) * d[1] * d[2] * d[3] * d[4];
  }
  std::size_t sample_size() const { return numel() / static_cast<std::size_t>(d[0]); }

  float* sample(int b) { return v.data() + sample_size() * static_cast<std::size_t>(b); }
  const float* sample(int b) const {
    return v.data() + sample_size() * static_cast<std::size_t>(b);
  }

  void zero() { std::fill(v.begin(), v.end(), 0.f); }
};

}  // namespace stj::nn
