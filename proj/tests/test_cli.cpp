#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

namespace fs = std::filesystem;

namespace {

const std::string kCli = STJ_CLI_PATH;

struct RunResult {
  int exit_code = -1;
  std::string output;
};

RunResult run(const std::string& args) {
  const std::string cmd = kCli + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  RunResult r;
  char buf[512];
  while (fgets(buf, sizeof(buf), pipe)) r.output += buf;
  const int status = pclose(pipe);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

fs::path fresh_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

TEST_CASE("cli reports exit codes per failure class") {
  SECTION("unknown config key -> 2") {
    const RunResult r = run("synth --set no.such.key=1 --out /tmp/stj_cli_none");
    REQUIRE(r.exit_code == 2);
    REQUIRE(r.output.find("unknown config key") != std::string::npos);
  }
  SECTION("missing upstream artifact -> 3") {
    const fs::path out = fresh_dir("stj_cli_missing");
    const RunResult r = run("train --cubes /nonexistent/cubes.stj --out " + out.string());
    REQUIRE(r.exit_code == 3);
  }
  SECTION("single-class ground truth -> 4") {
    const fs::path dir = fresh_dir("stj_cli_metric");
    fs::create_directories(dir / "scores");
    fs::create_directories(dir / "gt");
    {
      std::ofstream s(dir / "scores" / "v.csv");
      s << "frame_index,r_s,r_t,r,anomaly_score\n0,1,1,1,0\n1,1,1,1,0\n";
      std::ofstream g(dir / "gt" / "v.txt");
      g << "0\n0\n";
    }
    const RunResult r = run("eval --scores " + (dir / "scores").string() + " --gt " +
                            (dir / "gt").string());
    REQUIRE(r.exit_code == 4);
  }
}

TEST_CASE("eval on oracle scores prints a perfect micro AUROC") {
  const fs::path dir = fresh_dir("stj_cli_oracle");
  fs::create_directories(dir / "scores");
  fs::create_directories(dir / "gt");
  // Anomaly score 1 exactly on ground-truth frames.
  std::ofstream s(dir / "scores" / "v.csv");
  s << "frame_index,r_s,r_t,r,anomaly_score\n";
  std::ofstream g(dir / "gt" / "v.txt");
  for (int t = 0; t < 10; ++t) {
    const int label = (t >= 4 && t < 7) ? 1 : 0;
    s << t << ",0,0,0," << label << "\n";
    g << label << "\n";
  }
  s.close();
  g.close();

  const RunResult r =
      run("eval --scores " + (dir / "scores").string() + " --gt " + (dir / "gt").string() +
          " --out " + (dir / "report").string());
  INFO(r.output);
  REQUIRE(r.exit_code == 0);
  REQUIRE(r.output.find("micro-AUROC 1.0000") != std::string::npos);
  REQUIRE(fs::exists(dir / "report" / "report.json"));
  REQUIRE(fs::exists(dir / "report" / "manifest.json"));
}

TEST_CASE("full pipeline smoke run on a tiny fixture") {
  const fs::path dir = fresh_dir("stj_cli_e2e");
  const std::string tiny =
      " --set synth.train_videos=2 --set synth.test_videos=2"
      " --set synth.frames=40 --set synth.height=96 --set synth.width=128"
      " --set synth.sprites=1 --set synth.anomaly_start=12 --set synth.anomaly_len=16"
      " --set synth.anomaly_types=reverse,shape --set synth.sprite_min=16"
      " --set synth.sprite_max=20 --set extract.l=5"
      " --set net.widths=2,2,4,4,4,4 --set net.width_2d=4 --set net.hidden=16"
      " --set train.epochs=2 --set train.batch=32 --set score.filter_h=7"
      " --set score.filter_w=7 --set score.filter_t=3";

  const fs::path data = dir / "data";
  REQUIRE(run("synth" + tiny + " --out " + data.string()).exit_code == 0);
  REQUIRE(fs::exists(data / "dataset.json"));
  REQUIRE(fs::exists(data / "manifest.json"));

  REQUIRE(run("extract" + tiny + " --data " + (data / "train").string() + " --out " +
              (dir / "train_cubes").string())
              .exit_code == 0);
  REQUIRE(run("extract" + tiny + " --data " + (data / "test").string() + " --out " +
              (dir / "test_cubes").string())
              .exit_code == 0);
  REQUIRE(fs::exists(dir / "train_cubes" / "cubes.stj"));
  REQUIRE(fs::exists(dir / "train_cubes" / "manifest.json"));

  REQUIRE(run("train" + tiny + " --cubes " + (dir / "train_cubes" / "cubes.stj").string() +
              " --out " + (dir / "run").string())
              .exit_code == 0);
  REQUIRE(fs::exists(dir / "run" / "checkpoint.stj"));
  REQUIRE(fs::exists(dir / "run" / "metrics.csv"));

  const std::string score_cmd = "score" + tiny + " --checkpoint " +
                                (dir / "run" / "checkpoint.stj").string() + " --cubes " +
                                (dir / "test_cubes" / "cubes.stj").string();
  REQUIRE(run(score_cmd + " --out " + (dir / "scores").string()).exit_code == 0);

  const RunResult ev =
      run("eval --scores " + (dir / "scores").string() + " --gt " +
          (data / "test" / "gt").string() + " --out " + (dir / "report").string());
  INFO(ev.output);
  REQUIRE(ev.exit_code == 0);
  REQUIRE(ev.output.find("micro-AUROC") != std::string::npos);
  REQUIRE(fs::exists(dir / "report" / "report.json"));

  SECTION("rescoring with the same checkpoint is byte-identical") {
    REQUIRE(run(score_cmd + " --out " + (dir / "scores2").string()).exit_code == 0);
    for (const auto& e : fs::directory_iterator(dir / "scores")) {
      if (e.path().extension() != ".csv") continue;
      const fs::path other = dir / "scores2" / e.path().filename();
      REQUIRE(fs::exists(other));
      REQUIRE(slurp(e.path()) == slurp(other));
    }
  }
}
