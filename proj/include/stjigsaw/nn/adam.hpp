#pragma once

#include <cmath>
#include <vector>

#include "stjigsaw/nn/layers.hpp"

namespace stj::nn {

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adam over a fixed parameter list. State is kept in parameter order.
class Adam {
 public:
  Adam(std::vector<ParamRef> params, AdamConfig cfg)
      : params_(std::move(params)), cfg_(cfg) {
    for (const ParamRef& p : params_) {
      m_.emplace_back(p.w->size(), 0.f);
      v_.emplace_back(p.w->size(), 0.f);
    }
  }

  void zero_grad() {
    for (ParamRef& p : params_) std::fill(p.g->begin(), p.g->end(), 0.f);
  }

  void step() {
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, t_);
    const double bc2 = 1.0 - std::pow(cfg_.beta2, t_);
    for (std::size_t pi = 0; pi < params_.size(); ++pi) {
      std::vector<float>& w = *params_[pi].w;
      const std::vector<float>& g = *params_[pi].g;
      std::vector<float>& m = m_[pi];
      std::vector<float>& v = v_[pi];
      for (std::size_t i = 0; i < w.size(); ++i) {
        const double gi = g[i];
        m[i] = static_cast<float>(cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * gi);
        v[i] = static_cast<float>(cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * gi * gi);
        const double mhat = m[i] / bc1;
        const double vhat = v[i] / bc2;
        w[i] -= static_cast<float>(cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps));
      }
    }
  }

 private:
  std::vector<ParamRef> params_;
  AdamConfig cfg_;
  std::vector<std::vector<float>> m_, v_;
  long t_ = 0;
};

}  // namespace stj::nn
