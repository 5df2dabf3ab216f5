// stj — train and run the decoupled spatio-temporal jigsaw solver for
// video anomaly detection.
//
// Pipeline: synth -> extract -> train -> score -> eval. Every command
// writes a manifest.json beside its outputs. Exit codes: 0 success,
// 2 configuration error, 3 missing artifact, 4 undefined metric.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "stjigsaw/config.hpp"
#include "stjigsaw/manifest.hpp"
#include "stjigsaw/net.hpp"
#include "stjigsaw/pipeline.hpp"
#include "stjigsaw/synth.hpp"
#include "stjigsaw/train.hpp"
#include "stjigsaw/version.hpp"

namespace fs = std::filesystem;

namespace {

struct Timer {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
};

stj::Config load_config(const std::string& path, const std::vector<std::string>& overrides) {
  stj::Config cfg;
  if (!path.empty()) cfg.load_file(path);
  for (const std::string& kv : overrides) cfg.set_override(kv);
  stj::nn::worker_threads() = static_cast<int>(cfg.integer("workers"));
  return cfg;
}

void require_exists(const std::string& path, const char* what) {
  if (!fs::exists(path))
    throw stj::MissingArtifact(std::string(what) + " not found: " + path);
}

int run_synth(const stj::Config& cfg, const std::string& out) {
  Timer timer;
  const stj::SynthSpec spec = stj::to_synth_spec(cfg);
  const stj::SynthResult res = stj::generate(spec, out);
  stj::write_manifest(out, "synth", cfg.snapshot(), timer.seconds(),
                      {{"train_videos", res.train.size()}, {"test_videos", res.test.size()}});
  std::cout << "wrote " << res.train.size() << " train + " << res.test.size()
            << " test videos to " << out << "\n";
  return 0;
}

int run_extract(const stj::Config& cfg, const std::string& data, const std::string& out) {
  Timer timer;
  require_exists(data, "dataset directory");
  fs::create_directories(out);
  const stj::ExtractConfig ec = stj::to_extract_config(cfg);
  stj::CubeStore store = stj::extract_dataset(data, ec);
  store.save(fs::path(out) / "cubes.stj");
  stj::write_manifest(out, "extract", cfg.snapshot(), timer.seconds(),
                      {{"cubes", store.size()}, {"videos", store.videos().size()}});
  std::cout << "extracted " << store.size() << " cubes from " << store.videos().size()
            << " videos\n";
  return 0;
}

int run_train(const stj::Config& cfg, const std::string& cubes, const std::string& out) {
  Timer timer;
  require_exists(cubes, "cube store");
  fs::create_directories(out);
  const stj::CubeStore store = stj::CubeStore::load(cubes);
  const stj::SolverConfig sc = stj::to_solver_config(cfg);
  const stj::TrainConfig tc = stj::to_train_config(cfg);

  stj::JigsawSolver net(sc);
  net.init(tc.seed);
  const fs::path ckpt = fs::path(out) / "checkpoint.stj";
  stj::TrainResult result = stj::train_solver(
      net, store, tc, [&](const stj::EpochMetrics& m, stj::JigsawSolver& n) {
        std::printf("epoch %3d  loss %.4f (t %.4f, s %.4f)  acc_t %.3f  acc_s %.3f\n",
                    m.epoch, m.loss_total, m.loss_t, m.loss_s, m.acc_t, m.acc_s);
        std::fflush(stdout);
        stj::save_checkpoint(ckpt, n, {sc, tc.seed, m.epoch});
      });
  stj::write_metrics_csv(fs::path(out) / "metrics.csv", result.curve);
  stj::write_manifest(out, "train", cfg.snapshot(), timer.seconds(),
                      {{"cubes", store.size()},
                       {"spatial_puzzles", result.stats.spatial},
                       {"temporal_puzzles", result.stats.temporal},
                       {"static_dropped", result.stats.static_dropped}});
  std::cout << "checkpoint written to " << ckpt.string() << "\n";
  return 0;
}

int run_score(const stj::Config& cfg, const std::string& checkpoint, const std::string& cubes,
              const std::string& out) {
  Timer timer;
  require_exists(checkpoint, "checkpoint");
  require_exists(cubes, "cube store");
  fs::create_directories(out);
  auto [net, meta] = stj::load_checkpoint(checkpoint);
  const stj::CubeStore store = stj::CubeStore::load(cubes);
  if (store.l() != meta.config.l)
    throw stj::ConfigError("cube store l does not match checkpoint");
  const stj::ScoreConfig scfg = stj::to_score_config(cfg);
  const std::vector<stj::ScoreTimeline> timelines = stj::score_dataset(net, store, scfg);
  for (const stj::ScoreTimeline& tl : timelines)
    stj::write_timeline_csv(fs::path(out) / (tl.video_id + ".csv"), tl);
  stj::write_manifest(out, "score", cfg.snapshot(), timer.seconds(),
                      {{"videos", timelines.size()}, {"checkpoint_epoch", meta.epoch}});
  std::cout << "scored " << timelines.size() << " videos\n";
  return 0;
}

int run_eval(const std::string& scores, const std::string& gt, const std::string& videos_arg,
             const std::string& out) {
  Timer timer;
  require_exists(scores, "scores directory");
  std::vector<stj::ScoreTimeline> timelines;
  for (const auto& e : fs::directory_iterator(scores))
    if (e.is_regular_file() && e.path().extension() == ".csv")
      timelines.push_back(stj::read_timeline_csv(e.path()));
  std::sort(timelines.begin(), timelines.end(),
            [](const auto& a, const auto& b) { return a.video_id < b.video_id; });
  if (timelines.empty()) throw stj::MissingArtifact("no score CSVs in " + scores);

  std::vector<std::string> keep;
  if (!videos_arg.empty()) {
    std::stringstream ss(videos_arg);
    std::string item;
    while (std::getline(ss, item, ',')) keep.push_back(item);
  }

  const auto gt_map = stj::read_ground_truth(gt);
  const std::vector<stj::VideoScores> vs = stj::pair_scores_with_gt(timelines, gt_map, keep);
  const stj::EvalReport report = stj::evaluate(vs);
  for (const std::string& v : report.skipped)
    std::cerr << "warning: skipping " << v << " in macro average (single-class labels)\n";

  std::printf("micro-AUROC %.4f\n", report.micro);
  std::printf("macro-AUROC %.4f\n", report.macro);
  if (!out.empty()) {
    fs::create_directories(out);
    std::ofstream rf(fs::path(out) / "report.json");
    rf << stj::report_to_json(report).dump(2) << '\n';
    stj::write_manifest(out, "eval", nlohmann::json::object(), timer.seconds(),
                        {{"scores", scores}, {"gt", gt}});
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"decoupled spatio-temporal jigsaw puzzles for video anomaly detection"};
  app.set_version_flag("--version", stj::kVersion);
  app.require_subcommand(1);

  std::string config_path, overrides_help = "override a config key (key=value)";
  std::vector<std::string> overrides;
  std::string data, out, cubes, checkpoint, scores, gt, videos;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "config file (key = value lines)");
    cmd->add_option("--set", overrides, overrides_help);
  };

  CLI::App* synth = app.add_subcommand("synth", "generate the synthetic dataset");
  add_common(synth);
  synth->add_option("--out", out, "output dataset directory")->required();

  CLI::App* extract = app.add_subcommand("extract", "build object cubes from a dataset");
  add_common(extract);
  extract->add_option("--data", data, "dataset split directory (frames/ + detections.jsonl)")
      ->required();
  extract->add_option("--out", out, "output directory for cubes.stj")->required();

  CLI::App* train = app.add_subcommand("train", "train the jigsaw solver");
  add_common(train);
  train->add_option("--cubes", cubes, "training cube store")->required();
  train->add_option("--out", out, "run directory (checkpoint, metrics)")->required();

  CLI::App* score = app.add_subcommand("score", "score test cubes with a checkpoint");
  add_common(score);
  score->add_option("--checkpoint", checkpoint, "trained checkpoint")->required();
  score->add_option("--cubes", cubes, "test cube store")->required();
  score->add_option("--out", out, "output directory for per-video score CSVs")->required();

  CLI::App* eval = app.add_subcommand("eval", "frame-level AUROC against ground truth");
  eval->add_option("--scores", scores, "directory of per-video score CSVs")->required();
  eval->add_option("--gt", gt, "ground-truth directory or JSON manifest")->required();
  eval->add_option("--videos", videos, "comma-separated subset of video ids");
  eval->add_option("--out", out, "directory for report.json");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (synth->parsed()) return run_synth(load_config(config_path, overrides), out);
    if (extract->parsed()) return run_extract(load_config(config_path, overrides), data, out);
    if (train->parsed()) return run_train(load_config(config_path, overrides), cubes, out);
    if (score->parsed())
      return run_score(load_config(config_path, overrides), checkpoint, cubes, out);
    if (eval->parsed()) return run_eval(scores, gt, videos, out);
  } catch (const stj::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const stj::MissingArtifact& e) {
    std::cerr << "missing artifact: " << e.what() << "\n";
    return 3;
  } catch (const stj::MetricUndefined& e) {
    std::cerr << "metric undefined: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
