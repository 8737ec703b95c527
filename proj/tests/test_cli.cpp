#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "commands.hpp"
#include <fmt/format.h>

#include "glstm/checkpoint.hpp"
#include "glstm/config.hpp"
#include "glstm/image.hpp"
#include "glstm/errors.hpp"
#include "glstm/io.hpp"
#include "glstm/model.hpp"
#include "glstm/schedule.hpp"
#include "glstm/superpixel.hpp"
#include "support.hpp"

using namespace glstm;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = 0;
  std::string out;
  std::string err;
};

Run glstm_cmd(std::vector<std::string> args) {
  std::ostringstream out, err;
  Run r;
  r.code = cli::run(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> v;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) v.push_back(l);
  return v;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> v;
  std::istringstream in(line);
  for (std::string f; std::getline(in, f, ',');) v.push_back(f);
  return v;
}

/// Value column of the metrics.csv row `name,key,value`.
double metric(const std::string& csv, const std::string& name, const std::string& key) {
  for (const auto& l : lines(csv)) {
    const auto f = split_csv(l);
    if (f.size() == 3 && f[0] == name && f[1] == key) return std::stod(f[2]);
  }
  FAIL("missing metric row " << name << "," << key);
  return 0.0;
}

fs::path tiny_config(const fs::path& dir, const std::string& extra = "") {
  const fs::path p = dir / "tiny.cfg";
  std::ofstream(p) << "image_width = 32\nimage_height = 32\ntrain_samples = 4\ntest_samples = 2\n"
                      "epochs_a = 1\nepochs_b = 1\nsuperpixels = 20\ndim = 4\nbatch = 2\n"
                   << extra;
  return p;
}

fs::path sample_image(const fs::path& dir, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const fs::path p = dir / "in.ppm";
  write_pnm(p, testing::blocky_image(rng, 48, 40));
  return p;
}

}  // namespace

TEST_CASE("usage errors exit with 2 and help exits with 0") {
  CHECK(glstm_cmd({}).code == cli::kExitUsage);
  CHECK(glstm_cmd({"frobnicate"}).code == cli::kExitUsage);
  CHECK(glstm_cmd({"--help"}).code == cli::kExitOk);
  CHECK(glstm_cmd({"train", "--help"}).code == cli::kExitOk);
  CHECK(glstm_cmd({"superpixels", "--k", "10"}).code == cli::kExitUsage);

  const fs::path dir = testing::temp_dir("cli_usage");
  const Run r = glstm_cmd({"superpixels", "--image", (dir / "missing.ppm").string(), "--out", dir.string()});
  CHECK(r.code == cli::kExitUsage);
  CHECK_FALSE(r.err.empty());

  std::ofstream(dir / "garbage.ppm") << "P9 not an image";
  CHECK(glstm_cmd({"superpixels", "--image", (dir / "garbage.ppm").string(), "--out", dir.string()}).code ==
        cli::kExitUsage);
}

TEST_CASE("superpixels writes its outputs and reruns are byte identical") {
  const fs::path dir = testing::temp_dir("cli_superpixels");
  const fs::path uniform = dir / "uniform.ppm";
  write_pnm(uniform, Image::filled(32, 32, 3, 0.4));

  Run r = glstm_cmd({"superpixels", "--image", uniform.string(), "--k", "16", "--out", (dir / "u16").string()});
  REQUIRE(r.code == cli::kExitOk);
  CHECK(r.out.find("regions: 16\n") != std::string::npos);
  r = glstm_cmd({"superpixels", "--image", uniform.string(), "--k", "1", "--out", (dir / "u1").string()});
  REQUIRE(r.code == cli::kExitOk);
  CHECK(r.out.find("regions: 1\n") != std::string::npos);
  CHECK(read_superpixel_map(dir / "u1" / "superpixels.spmap").region_count() == 1);

  const fs::path img = sample_image(dir, 3);
  for (const char* run : {"a", "b"}) {
    REQUIRE(glstm_cmd({"superpixels", "--image", img.string(), "--k", "40", "--out", (dir / run).string()}).code ==
            cli::kExitOk);
  }
  for (const char* f : {"superpixels.spmap", "overlay.ppm", "graph.edges", "graph.ckpt"}) {
    CAPTURE(f);
    REQUIRE(fs::exists(dir / "a" / f));
    CHECK(slurp(dir / "a" / f) == slurp(dir / "b" / f));
  }
  const SuperpixelMap sp = read_superpixel_map(dir / "a" / "superpixels.spmap");
  CHECK(sp.width == 48);
  CHECK(sp.height == 40);

  const auto manifest = nlohmann::json::parse(slurp(dir / "a" / "manifest.json"));
  CHECK(manifest["command"] == "superpixels");
  CHECK(manifest["args"]["k"] == 40);
  CHECK(manifest["outputs"].size() == 4);
  CHECK(manifest.contains("timings"));
  CHECK(manifest.contains("git_describe"));
}

TEST_CASE("train on a tiny config is reproducible") {
  const fs::path dir = testing::temp_dir("cli_train");
  const fs::path cfg = tiny_config(dir);
  const fs::path data = dir / "data";
  for (const char* run : {"a", "b"}) {
    const Run r = glstm_cmd(
        {"train", "--config", cfg.string(), "--out", (dir / run).string(), "--data", data.string()});
    REQUIRE_MESSAGE(r.code == cli::kExitOk, r.err);
    CHECK(r.out.find("epoch   1 stage A") != std::string::npos);
    CHECK(r.out.find("epoch   2 stage B") != std::string::npos);
  }
  for (const char* f : {"stage_a.ckpt", "checkpoint.ckpt", "history.csv", "config.txt", "metrics.csv",
                        "metrics.txt", "manifest.json"}) {
    CAPTURE(f);
    CHECK(fs::exists(dir / "a" / f));
  }
  for (const char* f : {"stage_a.ckpt", "checkpoint.ckpt", "history.csv", "metrics.csv"}) {
    CAPTURE(f);
    CHECK(slurp(dir / "a" / f) == slurp(dir / "b" / f));
  }
  CHECK(lines(slurp(dir / "a" / "history.csv")).size() == 3);

  const RunConfig saved = load_config(dir / "a" / "config.txt");
  CHECK(saved.parser.dim == 4);
  CHECK(saved.train_samples == 4);

  const auto manifest = nlohmann::json::parse(slurp(dir / "a" / "manifest.json"));
  CHECK(manifest["command"] == "train");
  CHECK(manifest["seeds"] == nlohmann::json::array({1}));
  CHECK(manifest["config"].get<std::string>() == slurp(dir / "a" / "config.txt"));

  SUBCASE("--seed overrides the config seed") {
    const Run r = glstm_cmd({"train", "--config", cfg.string(), "--seed", "7", "--out", (dir / "s7").string(),
                             "--data", data.string()});
    REQUIRE(r.code == cli::kExitOk);
    CHECK(load_config(dir / "s7" / "config.txt").seed == 7);
    CHECK(fs::exists(data / "seed-7" / "toy.txt"));
  }
}

TEST_CASE("default schedule trains for at least 60 epochs") {
  const RunConfig cfg;
  CHECK(cfg.sgd.epochs_a + cfg.sgd.epochs_b >= 60);
  CHECK(cfg.train_samples == 200);
  CHECK(cfg.test_samples == 50);
  CHECK(cfg.parser.layers == 2);
  CHECK(cfg.parser.labels == 7);
}

TEST_CASE("config errors exit with 2 and name the keys") {
  const fs::path dir = testing::temp_dir("cli_config_error");
  const fs::path cfg = tiny_config(dir, "learning_speed = 3\ncolour = red\n");
  Run r = glstm_cmd({"train", "--config", cfg.string(), "--out", (dir / "out").string()});
  CHECK(r.code == cli::kExitUsage);
  CHECK(r.err.find("learning_speed") != std::string::npos);
  CHECK(r.err.find("colour") != std::string::npos);

  r = glstm_cmd({"train", "--set", "dim=0", "--out", (dir / "out").string()});
  CHECK(r.code == cli::kExitUsage);
  CHECK(r.err.find("dim") != std::string::npos);

  r = glstm_cmd({"train", "--set", "dimension", "--out", (dir / "out").string()});
  CHECK(r.code == cli::kExitUsage);
}

TEST_CASE("eval reproduces training metrics and respects the superpixel oracle") {
  const fs::path dir = testing::temp_dir("cli_eval");
  const fs::path cfg = tiny_config(dir);
  const fs::path data = dir / "data";
  REQUIRE(glstm_cmd({"train", "--config", cfg.string(), "--out", (dir / "run").string(), "--data", data.string()})
              .code == cli::kExitOk);
  const Run r = glstm_cmd({"eval", "--checkpoint", (dir / "run" / "checkpoint.ckpt").string(), "--data",
                           (data / "seed-1" / "test").string(), "--out", (dir / "eval").string()});
  REQUIRE_MESSAGE(r.code == cli::kExitOk, r.err);
  const std::string trained = slurp(dir / "run" / "metrics.csv");
  const std::string evaluated = slurp(dir / "eval" / "metrics.csv");
  CHECK(evaluated.rfind(trained, 0) == 0);
  CHECK(metric(evaluated, "accuracy", "all") <= metric(evaluated, "oracle_accuracy", "all") + 1e-12);
  CHECK(fs::exists(dir / "eval" / "predictions" / "0000_pred.pgm"));
  CHECK(fs::exists(dir / "eval" / "predictions" / "0001_logits.ckpt"));
  CHECK(r.out.find("superpixel oracle") != std::string::npos);

  SUBCASE("missing checkpoint") {
    const Run bad = glstm_cmd({"eval", "--checkpoint", (dir / "nope.ckpt").string(), "--data",
                               (data / "seed-1" / "test").string(), "--out", (dir / "eval2").string()});
    CHECK(bad.code == cli::kExitUsage);
  }
}

TEST_CASE("zero learning rates leave the evaluation at the initial parameters") {
  const fs::path dir = testing::temp_dir("cli_lr0");
  const fs::path cfg = tiny_config(dir, "lr_new = 0\nlr_pretrained = 0\n");
  const fs::path data = dir / "data";
  REQUIRE(glstm_cmd({"train", "--config", cfg.string(), "--out", (dir / "run").string(), "--data", data.string()})
              .code == cli::kExitOk);

  const RunConfig rc = load_config(dir / "run" / "config.txt");
  save_params(dir / "init.ckpt", make_parser_params(rc.parser, rc.seed));
  CHECK(slurp(dir / "init.ckpt") == slurp(dir / "run" / "checkpoint.ckpt"));

  const std::string test_dir = (data / "seed-1" / "test").string();
  const std::string config_txt = (dir / "run" / "config.txt").string();
  REQUIRE(glstm_cmd({"eval", "--checkpoint", (dir / "run" / "checkpoint.ckpt").string(), "--data", test_dir,
                     "--out", (dir / "e1").string()})
              .code == cli::kExitOk);
  REQUIRE(glstm_cmd({"eval", "--checkpoint", (dir / "init.ckpt").string(), "--config", config_txt, "--data",
                     test_dir, "--out", (dir / "e2").string()})
              .code == cli::kExitOk);
  CHECK(slurp(dir / "e1" / "metrics.csv") == slurp(dir / "e2" / "metrics.csv"));
}

TEST_CASE("ablate runs each grid with shared seeds") {
  const fs::path dir = testing::temp_dir("cli_ablate");
  const fs::path cfg = tiny_config(dir);
  const fs::path data = dir / "data";

  SUBCASE("forget pair shares stage A") {
    const Run r = glstm_cmd({"ablate", "--which", "forget", "--config", cfg.string(), "--out",
                             (dir / "forget").string(), "--data", data.string()});
    REQUIRE_MESSAGE(r.code == cli::kExitOk, r.err);
    const auto rows = lines(slurp(dir / "forget" / "ablate_forget.csv"));
    REQUIRE(rows.size() == 3);
    const auto a = split_csv(rows[1]);
    const auto b = split_csv(rows[2]);
    CHECK(a[0] == "adaptive");
    CHECK(b[0] == "identical");
    CHECK(a[6] == b[6]);
    CHECK(fs::exists(dir / "forget" / "ablate_forget.svg"));
    CHECK(slurp(dir / "forget" / "ablate_forget.txt").find("(reference)") != std::string::npos);
  }
  SUBCASE("scheduler grid with two seeds") {
    const Run r = glstm_cmd({"ablate", "--which", "scheduler", "--config", cfg.string(), "--seeds", "1,2",
                             "--out", (dir / "sched").string(), "--data", data.string()});
    REQUIRE_MESSAGE(r.code == cli::kExitOk, r.err);
    const auto rows = lines(slurp(dir / "sched" / "ablate_scheduler.csv"));
    REQUIRE(rows.size() == 11);
    std::map<std::string, int> per_variant;
    for (std::size_t i = 1; i < rows.size(); ++i) {
      const auto f = split_csv(rows[i]);
      REQUIRE(f.size() == 10);
      ++per_variant[f[0]];
      CHECK(f[8] == "yes");
    }
    CHECK(per_variant.size() == 5);
    for (const auto& [label, n] : per_variant) CHECK(n == 2);
    const auto manifest = nlohmann::json::parse(slurp(dir / "sched" / "manifest.json"));
    CHECK(manifest["seeds"] == nlohmann::json::array({1, 2}));
  }
  SUBCASE("bad arguments") {
    CHECK(glstm_cmd({"ablate", "--which", "dropout", "--out", (dir / "x").string()}).code == cli::kExitUsage);
    CHECK(glstm_cmd({"ablate", "--which", "forget", "--seeds", "1,x", "--out", (dir / "x").string()}).code ==
          cli::kExitUsage);
  }
}

TEST_CASE("ablation grids") {
  CHECK(cli::ablation_grid("scheduler").size() == 5);
  CHECK(cli::ablation_grid("forget").size() == 2);
  CHECK(cli::ablation_grid("residual").size() == 2);
  const auto k = cli::ablation_grid("superpixels");
  REQUIRE(k.size() == 6);
  CHECK(k.front().settings.front().second == "50");
  CHECK(k.back().settings.front().second == "300");
  for (const char* which : {"scheduler", "forget", "residual", "superpixels"}) {
    int refs = 0;
    for (const auto& v : cli::ablation_grid(which)) refs += v.reference ? 1 : 0;
    CHECK(refs == 1);
  }
  CHECK_THROWS_AS(cli::ablation_grid("layers"), ArgumentError);
}

TEST_CASE("gradcheck command") {
  Run r = glstm_cmd({"gradcheck", "--d", "4", "--nodes", "6"});
  CHECK(r.code == cli::kExitOk);
  CHECK(r.out.find("PASS") != std::string::npos);

  r = glstm_cmd({"gradcheck", "--d", "4", "--nodes", "6", "--inject-fault"});
  CHECK(r.code == cli::kExitCheckFailed);
  CHECK(r.out.find("FAIL: worst parameter layer1.Wu") != std::string::npos);

  CHECK(glstm_cmd({"gradcheck", "--d", "3", "--nodes", "1"}).code == cli::kExitOk);
  CHECK(glstm_cmd({"gradcheck", "--d", "3", "--nodes", "5", "--forget", "identical"}).code == cli::kExitOk);
  CHECK(glstm_cmd({"gradcheck", "--d", "17"}).code == cli::kExitUsage);
  CHECK(glstm_cmd({"gradcheck", "--forget", "sometimes"}).code == cli::kExitUsage);

  const fs::path dir = testing::temp_dir("cli_gradcheck");
  REQUIRE(glstm_cmd({"gradcheck", "--d", "2", "--nodes", "4", "--out", dir.string()}).code == cli::kExitOk);
  const auto manifest = nlohmann::json::parse(slurp(dir / "manifest.json"));
  CHECK(manifest["args"]["d"] == 2);
}

TEST_CASE("inspect dumps the graph and the schedule") {
  const fs::path dir = testing::temp_dir("cli_inspect");
  const fs::path img = sample_image(dir, 5);

  Run r = glstm_cmd({"inspect", "--image", img.string(), "--k", "30", "--out", (dir / "plain").string()});
  REQUIRE_MESSAGE(r.code == cli::kExitOk, r.err);
  CHECK(r.out.find("degree histogram:") != std::string::npos);
  const auto degree_rows = lines(slurp(dir / "plain" / "degrees.csv"));
  CHECK(degree_rows.front() == "node,degree,x,y");
  CHECK_FALSE(fs::exists(dir / "plain" / "schedule.txt"));

  const fs::path cfg = tiny_config(dir);
  REQUIRE(glstm_cmd({"train", "--config", cfg.string(), "--out", (dir / "run").string()}).code == cli::kExitOk);
  r = glstm_cmd({"inspect", "--image", img.string(), "--k", "30", "--checkpoint",
                 (dir / "run" / "checkpoint.ckpt").string(), "--out", (dir / "full").string()});
  REQUIRE_MESSAGE(r.code == cli::kExitOk, r.err);
  CHECK(r.out.find("schedule: cds starting at node") != std::string::npos);
  const std::vector<std::size_t> order = parse_schedule_text(slurp(dir / "full" / "schedule.txt"));
  CHECK(is_permutation_of(order, degree_rows.size() - 1));
  CHECK(fs::exists(dir / "full" / "prediction.pgm"));
  CHECK(fs::exists(dir / "full" / "confidences.ckpt"));

  SUBCASE("a supplied superpixel map is used as is") {
    REQUIRE(glstm_cmd({"superpixels", "--image", img.string(), "--k", "12", "--out", (dir / "sp").string()}).code ==
            cli::kExitOk);
    const std::size_t regions = read_superpixel_map(dir / "sp" / "superpixels.spmap").region_count();
    r = glstm_cmd({"inspect", "--image", img.string(), "--spmap", (dir / "sp" / "superpixels.spmap").string(),
                   "--out", (dir / "given").string()});
    REQUIRE(r.code == cli::kExitOk);
    CHECK(r.out.find(fmt::format("regions: {}\n", regions)) != std::string::npos);

    const fs::path small = dir / "small.ppm";
    write_pnm(small, Image::filled(8, 8, 3, 0.1));
    CHECK(glstm_cmd({"inspect", "--image", small.string(), "--spmap", (dir / "sp" / "superpixels.spmap").string(),
                     "--out", (dir / "bad").string()})
              .code == cli::kExitUsage);
  }
}
