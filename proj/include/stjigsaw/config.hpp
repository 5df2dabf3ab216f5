#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "stjigsaw/common.hpp"
#include "stjigsaw/net.hpp"
#include "stjigsaw/pipeline.hpp"
#include "stjigsaw/synth.hpp"
#include "stjigsaw/train.hpp"

namespace stj {

struct ConfigKey {
  const char* key;
  const char* def;
  const char* doc;
};

/// Every run-config key with its default. Defaults follow the reference
/// training recipe where it pins a value; the rest are implementation
/// choices (see docs/configuration.md).
inline const std::vector<ConfigKey>& config_registry() {
  static const std::vector<ConfigKey> keys = {
      {"synth.seed", "7", "master seed of the synthetic dataset"},
      {"synth.train_videos", "20", "number of training videos"},
      {"synth.test_videos", "8", "number of test videos"},
      {"synth.frames", "300", "frames per video"},
      {"synth.height", "240", "frame height in pixels"},
      {"synth.width", "320", "frame width in pixels"},
      {"synth.sprites", "2", "normal sprites per video"},
      {"synth.speed_min", "1.0", "slowest normal speed, px/frame"},
      {"synth.speed_max", "2.0", "fastest normal speed, px/frame"},
      {"synth.anomaly_types", "speed,reverse,jitter,shape",
       "anomaly types cycled across test videos"},
      {"synth.anomaly_start", "120", "first anomalous frame in test videos"},
      {"synth.anomaly_len", "80", "anomalous frames per test video"},
      {"synth.sprite_min", "24", "smallest sprite side, px"},
      {"synth.sprite_max", "34", "largest sprite side, px"},
      {"extract.l", "7", "frames per object cube (odd)"},
      {"extract.threshold", "0.5", "detection confidence threshold"},
      {"extract.stride", "1", "keep detections on every stride-th frame"},
      {"extract.patch", "64", "cube patch size after rescaling"},
      {"puzzle.n", "3", "spatial jigsaw grid side"},
      {"puzzle.r", "0.5", "probability of the spatial branch"},
      {"puzzle.zeta", "1e-4", "probability of an identity spatial puzzle"},
      {"puzzle.static_eps", "0.005", "static-cube threshold (mean abs frame diff)"},
      {"net.widths", "32,32,64,64,64,64", "3D conv widths of the backbone"},
      {"net.width_2d", "64", "width of the 2D conv block"},
      {"net.hidden", "512", "hidden width of each head"},
      {"net.dropout", "0.3", "channel dropout rate in the 2D block"},
      {"net.input_size", "0", "network input resolution; 0 = derived from n"},
      {"train.epochs", "100", "training epochs"},
      {"train.batch", "192", "mini-batch size (cubes)"},
      {"train.lr", "1e-4", "Adam learning rate"},
      {"train.beta1", "0.9", "Adam beta1"},
      {"train.beta2", "0.999", "Adam beta2"},
      {"train.seed", "1", "training seed (init, shuffling, dropout)"},
      {"score.w", "0.5", "spatial weight in score fusion"},
      {"score.sigma", "3.0", "temporal Gaussian sigma, frames"},
      {"score.filter_t", "7", "3D mean filter extent over time"},
      {"score.filter_h", "15", "3D mean filter extent over height"},
      {"score.filter_w", "15", "3D mean filter extent over width"},
      {"score.downsample", "4", "spatial downsampling of score maps"},
      {"score.batch", "64", "inference batch size"},
      {"workers", "0", "worker threads; 0 = all hardware threads"},
  };
  return keys;
}

/// Flat key-value run configuration with dotted namespaces. Unknown keys
/// are rejected (strict mode) so config files and manifests stay honest.
class Config {
 public:
  Config() {
    for (const ConfigKey& k : config_registry()) values_[k.key] = k.def;
  }

  void set(const std::string& key, const std::string& value) {
    auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("unknown config key: " + key);
    it->second = value;
  }

  /// Loads `key = value` lines; '#' starts a comment line, blanks ignored.
  void load_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw MissingArtifact("config file not found: " + path.string());
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      const std::string t = trim(line);
      if (t.empty() || t[0] == '#') continue;
      const auto eq = t.find('=');
      if (eq == std::string::npos)
        throw ConfigError(path.filename().string() + ":" + std::to_string(line_no) +
                          ": expected key = value");
      set(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
    }
  }

  /// Applies a `key=value` override (command line).
  void set_override(const std::string& kv) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("override must be key=value: " + kv);
    set(trim(kv.substr(0, eq)), trim(kv.substr(eq + 1)));
  }

  const std::string& str(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("unknown config key: " + key);
    return it->second;
  }

  long long integer(const std::string& key) const {
    try {
      std::size_t pos = 0;
      const long long v = std::stoll(str(key), &pos);
      if (pos != str(key).size()) throw std::invalid_argument("");
      return v;
    } catch (const std::exception&) {
      throw ConfigError("config key " + key + " must be an integer, got '" + str(key) + "'");
    }
  }

  double real(const std::string& key) const {
    try {
      std::size_t pos = 0;
      const double v = std::stod(str(key), &pos);
      if (pos != str(key).size()) throw std::invalid_argument("");
      return v;
    } catch (const std::exception&) {
      throw ConfigError("config key " + key + " must be a number, got '" + str(key) + "'");
    }
  }

  std::vector<std::string> list(const std::string& key) const {
    std::vector<std::string> out;
    std::stringstream ss(str(key));
    std::string item;
    while (std::getline(ss, item, ',')) {
      const std::string t = trim(item);
      if (!t.empty()) out.push_back(t);
    }
    return out;
  }

  std::vector<int> int_list(const std::string& key) const {
    std::vector<int> out;
    for (const std::string& s : list(key)) {
      try {
        out.push_back(std::stoi(s));
      } catch (const std::exception&) {
        throw ConfigError("config key " + key + " must be a list of integers");
      }
    }
    return out;
  }

  nlohmann::json snapshot() const {
    nlohmann::json j;
    for (const auto& [k, v] : values_) j[k] = v;
    return j;
  }

 private:
  static std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
  }

  std::map<std::string, std::string> values_;
};

// ---- typed views ------------------------------------------------------------

inline SynthSpec to_synth_spec(const Config& c) {
  SynthSpec s;
  s.seed = static_cast<std::uint64_t>(c.integer("synth.seed"));
  s.train_videos = static_cast<int>(c.integer("synth.train_videos"));
  s.test_videos = static_cast<int>(c.integer("synth.test_videos"));
  s.frames = static_cast<int>(c.integer("synth.frames"));
  s.height = static_cast<int>(c.integer("synth.height"));
  s.width = static_cast<int>(c.integer("synth.width"));
  s.sprites = static_cast<int>(c.integer("synth.sprites"));
  s.speed_min = c.real("synth.speed_min");
  s.speed_max = c.real("synth.speed_max");
  s.anomaly_types = c.list("synth.anomaly_types");
  s.anomaly_start = static_cast<int>(c.integer("synth.anomaly_start"));
  s.anomaly_len = static_cast<int>(c.integer("synth.anomaly_len"));
  s.sprite_min = static_cast<int>(c.integer("synth.sprite_min"));
  s.sprite_max = static_cast<int>(c.integer("synth.sprite_max"));
  return s;
}

inline ExtractConfig to_extract_config(const Config& c) {
  ExtractConfig e;
  e.l = static_cast<int>(c.integer("extract.l"));
  e.threshold = c.real("extract.threshold");
  e.stride = static_cast<int>(c.integer("extract.stride"));
  e.patch = static_cast<int>(c.integer("extract.patch"));
  if (e.l < 1 || e.l % 2 == 0) throw ConfigError("extract.l must be odd and positive");
  return e;
}

inline SolverConfig to_solver_config(const Config& c) {
  SolverConfig s;
  s.l = static_cast<int>(c.integer("extract.l"));
  s.n = static_cast<int>(c.integer("puzzle.n"));
  s.patch = static_cast<int>(c.integer("extract.patch"));
  s.input_size = static_cast<int>(c.integer("net.input_size"));
  const std::vector<int> widths = c.int_list("net.widths");
  if (widths.size() != 6) throw ConfigError("net.widths must list 6 values");
  for (std::size_t i = 0; i < 6; ++i) s.widths[i] = widths[i];
  s.width_2d = static_cast<int>(c.integer("net.width_2d"));
  s.hidden = static_cast<int>(c.integer("net.hidden"));
  s.dropout = static_cast<float>(c.real("net.dropout"));
  return s;
}

inline TrainConfig to_train_config(const Config& c) {
  TrainConfig t;
  t.epochs = static_cast<int>(c.integer("train.epochs"));
  t.batch_size = static_cast<int>(c.integer("train.batch"));
  t.adam.lr = c.real("train.lr");
  t.adam.beta1 = c.real("train.beta1");
  t.adam.beta2 = c.real("train.beta2");
  t.seed = static_cast<std::uint64_t>(c.integer("train.seed"));
  t.r = c.real("puzzle.r");
  t.zeta = c.real("puzzle.zeta");
  t.static_eps = c.real("puzzle.static_eps");
  if (!(0.0 <= t.zeta && t.zeta <= t.r && t.r <= 1.0))
    throw ConfigError("need 0 <= puzzle.zeta <= puzzle.r <= 1");
  return t;
}

inline ScoreConfig to_score_config(const Config& c) {
  ScoreConfig s;
  s.w = c.real("score.w");
  s.sigma = c.real("score.sigma");
  s.map.kernel_t = static_cast<int>(c.integer("score.filter_t"));
  s.map.kernel_h = static_cast<int>(c.integer("score.filter_h"));
  s.map.kernel_w = static_cast<int>(c.integer("score.filter_w"));
  s.map.downsample = static_cast<int>(c.integer("score.downsample"));
  s.batch = static_cast<int>(c.integer("score.batch"));
  if (s.w < 0.0 || s.w > 1.0) throw ConfigError("score.w must be in [0,1]");
  return s;
}

}  // namespace stj
