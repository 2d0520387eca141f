#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "wdose/cli.hpp"
#include "wdose/evaluation.hpp"
#include "wdose/json_util.hpp"

using namespace wdose;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path tmp(const std::string& name) {
  const fs::path p = fs::path(WDOSE_TEST_TMP) / "cli" / name;
  fs::remove_all(p);
  fs::create_directories(p.parent_path());
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::size_t line_count(const fs::path& p) {
  const auto s = slurp(p);
  return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
}

// A 40-patient cohort shared by the tests below.
const fs::path& shared_cohort() {
  static const fs::path path = [] {
    const auto p = tmp("shared") / "cohort.jsonl";
    REQUIRE(cli({"generate", "--n", "40", "--seed", "11", "--out", p.string()}).code == 0);
    return p;
  }();
  return path;
}

}  // namespace

TEST_CASE("usage errors exit with 2") {
  CHECK(cli({}).code == kExitUsage);
  CHECK(cli({"bogus"}).code == kExitUsage);
  CHECK(cli({"generate", "--out", "x"}).code == kExitUsage);
  CHECK(cli({"generate", "--n", "0", "--out", (tmp("n0") / "c.jsonl").string()}).code ==
        kExitUsage);
  CHECK(cli({"train", "--epochs", "abc", "--out", "x"}).code == kExitUsage);
  CHECK(cli({"--help"}).code == kExitOk);
  CHECK(cli({"train", "--help"}).code == kExitOk);
}

TEST_CASE("generate is reproducible and round-trips") {
  const auto a = tmp("gen_a") / "c.jsonl";
  const auto b = tmp("gen_b") / "c.jsonl";
  REQUIRE(cli({"generate", "--n", "10000", "--seed", "3", "--out", a.string()}).code == 0);
  REQUIRE(cli({"generate", "--n", "10000", "--seed", "3", "--out", b.string()}).code == 0);
  CHECK(slurp(a) == slurp(b));
  CHECK(line_count(a) == 10000);

  const auto cohort = load_cohort(a.string());
  const TransitChainModel model;
  const CohortSampler sampler({}, model);
  CHECK(cohort == sampler.generate_cohort(10000, 3));

  const auto meta = json_util::load_file(a.string() + ".meta.json");
  CHECK(meta["patients"] == 10000);
  CHECK(meta["seed"] == 3);
  CHECK(meta["config_hash"].is_string());
}

TEST_CASE("bad configuration files exit with 3") {
  const auto dir = tmp("badcfg");
  fs::create_directories(dir);
  {
    std::ofstream(dir / "broken.json") << "{ not json";
    std::ofstream(dir / "unknown.json") << R"({"learning_rat": 0.1})";
    std::ofstream(dir / "invalid.json") << R"({"gamma": 2.0})";
  }
  for (const char* f : {"broken.json", "unknown.json", "invalid.json"}) {
    CAPTURE(f);
    const auto r = cli({"train", "--config", (dir / f).string(), "--out",
                        (dir / "run").string()});
    CHECK(r.code == kExitConfig);
    CHECK_FALSE(r.err.empty());
  }
  CHECK(cli({"train", "--config", (dir / "missing.json").string(), "--out",
             (dir / "run").string()})
            .code == kExitConfig);
  CHECK(cli({"generate", "--n", "5", "--cohort-config", (dir / "broken.json").string(),
             "--out", (dir / "c.jsonl").string()})
            .code == kExitConfig);
}

TEST_CASE("train writes one checkpoint per epoch and a consistent selection") {
  const auto dir = tmp("train");
  const auto cfg = dir.string() + ".json";
  std::ofstream(cfg) << R"({"hidden": [16, 8], "cohort_per_epoch": 8, "validation_size": 120})";
  const auto r = cli({"train", "--config", cfg, "--epochs", "2", "--seed", "5", "--h", "2",
                      "--d1max", "5", "--out", dir.string()});
  REQUIRE(r.code == 0);
  CHECK(fs::exists(dir / "checkpoints" / "epoch_001.json"));
  CHECK(fs::exists(dir / "checkpoints" / "epoch_002.json"));
  CHECK_FALSE(fs::exists(dir / "checkpoints" / "epoch_003.json"));
  CHECK(line_count(dir / "training_log.csv") == 3);

  const auto config = json_util::load_file((dir / "config.json").string());
  CHECK(config["train"]["env"]["history_length"] == 2);
  CHECK(config["train"]["env"]["first_dose_cap"] == 5.0);
  CHECK(config["train"]["seed"] == 5);
  CHECK(config["train"]["hidden"] == nlohmann::json::array({16, 8}));

  const auto sel = json_util::load_file((dir / "selection.json").string());
  const auto best = load_checkpoint((dir / "best_checkpoint.json").string());
  CHECK(sel["best_epoch"] == best.epoch);
  CHECK(best.history_length == 2);
  CHECK(best.config_hash == config["config_hash"]);
  double top = -1e9;
  int top_epoch = 0;
  for (const auto& e : sel["epochs"]) {
    if (e["min_class_score"].get<double>() > top) {
      top = e["min_class_score"].get<double>();
      top_epoch = e["epoch"].get<int>();
    }
  }
  CHECK(top_epoch == best.epoch);

  const auto again = tmp("train_again");
  REQUIRE(cli({"train", "--config", cfg, "--epochs", "2", "--seed", "5", "--h", "2",
               "--d1max", "5", "--workers", "3", "--out", again.string()})
              .code == 0);
  CHECK(slurp(dir / "best_checkpoint.json") == slurp(again / "best_checkpoint.json"));
  CHECK(slurp(dir / "training_log.csv") == slurp(again / "training_log.csv"));

  // The checkpoint can be evaluated directly.
  const auto ev = tmp("train_eval");
  CHECK(cli({"evaluate", "--policy", (dir / "best_checkpoint.json").string(), "--cohort",
             shared_cohort().string(), "--out", ev.string()})
            .code == 0);
  CHECK(line_count(ev / "report.csv") == 41);
}

TEST_CASE("evaluate baselines") {
  for (const auto& name : {"AAA", "CAA", "PGAA", "PGPGA", "PGPGI"}) {
    CAPTURE(name);
    const auto dir = tmp(std::string("eval_") + name);
    REQUIRE(cli({"evaluate", "--policy", name, "--cohort", shared_cohort().string(),
                 "--out", dir.string()})
                .code == 0);
    CHECK(line_count(dir / "report.csv") == 41);
    CHECK(line_count(dir / "trajectories.jsonl") == 40);
    CHECK(line_count(dir / "summary.csv") == 5);
    const auto report = load_evaluation_report((dir / "report.json").string());
    CHECK(report.policy == name);
    CHECK(report.patients.size() == 40);
  }
  const auto unknown = cli({"evaluate", "--policy", "XYZ", "--cohort",
                            shared_cohort().string(), "--out", tmp("eval_xyz").string()});
  CHECK(unknown.code == kExitUsage);
  CHECK(unknown.err.find("PGPGI") != std::string::npos);
  CHECK(cli({"evaluate", "--policy", "AAA", "--cohort", "/nonexistent.jsonl", "--out",
             tmp("eval_missing").string()})
            .code == kExitConfig);

  const auto a = tmp("eval_w1");
  const auto b = tmp("eval_w4");
  REQUIRE(cli({"evaluate", "--policy", "PGPGI", "--cohort", shared_cohort().string(),
               "--out", a.string()})
              .code == 0);
  REQUIRE(cli({"evaluate", "--policy", "PGPGI", "--cohort", shared_cohort().string(),
               "--workers", "4", "--out", b.string()})
              .code == 0);
  for (const char* f : {"report.csv", "report.json", "summary.csv", "trajectories.jsonl"}) {
    CHECK(slurp(a / f) == slurp(b / f));
  }
}

TEST_CASE("compare and plot-data") {
  const auto aaa = tmp("cmp_aaa");
  const auto pg = tmp("cmp_pg");
  REQUIRE(cli({"evaluate", "--policy", "AAA", "--cohort", shared_cohort().string(),
               "--out", aaa.string()})
              .code == 0);
  REQUIRE(cli({"evaluate", "--policy", "PGPGA", "--cohort", shared_cohort().string(),
               "--out", pg.string()})
              .code == 0);
  const auto aaa_json = (aaa / "report.json").string();
  const auto pg_json = (pg / "report.json").string();

  const auto self = tmp("cmp_self");
  REQUIRE(cli({"compare", aaa_json, aaa_json, "--model", "AAA", "--out", self.string()})
              .code == 0);
  std::istringstream deltas(slurp(self / "deltas.csv"));
  std::string line;
  std::getline(deltas, line);
  int rows = 0;
  while (std::getline(deltas, line)) {
    ++rows;
    CHECK(line.substr(line.rfind(',') + 1) == "0.000000");
  }
  CHECK(rows == 40);

  const auto both = tmp("cmp_both");
  REQUIRE(cli({"compare", pg_json, aaa_json, "--model", "PGPGA", "--out", both.string()})
              .code == 0);
  const auto comparison = slurp(both / "comparison.csv");
  for (const char* label : {"normal", "sensitive", "highly_sensitive", "all"}) {
    CHECK(comparison.find(label) != std::string::npos);
  }
  CHECK(fs::exists(both / "interpolation.csv"));
  CHECK(json_util::load_file((both / "comparison.json").string()).contains("model"));

  // A report over a different cohort cannot be compared.
  const auto other_cohort = tmp("cmp_other") / "c.jsonl";
  REQUIRE(cli({"generate", "--n", "40", "--seed", "12", "--out", other_cohort.string()})
              .code == 0);
  const auto other = tmp("cmp_other_eval");
  REQUIRE(cli({"evaluate", "--policy", "AAA", "--cohort", other_cohort.string(), "--out",
               other.string()})
              .code == 0);
  CHECK(cli({"compare", pg_json, (other / "report.json").string(), "--out",
             tmp("cmp_bad").string()})
            .code == kExitDataMismatch);
  const auto shorter = tmp("cmp_short") / "c.jsonl";
  REQUIRE(cli({"generate", "--n", "30", "--seed", "11", "--out", shorter.string()}).code == 0);
  const auto short_eval = tmp("cmp_short_eval");
  REQUIRE(cli({"evaluate", "--policy", "AAA", "--cohort", shorter.string(), "--out",
               short_eval.string()})
              .code == 0);
  CHECK(cli({"compare", pg_json, (short_eval / "report.json").string(), "--out",
             tmp("cmp_bad2").string()})
            .code == kExitDataMismatch);
  CHECK(cli({"compare", aaa_json, "--out", tmp("cmp_one").string()}).code == kExitUsage);

  const auto plots = tmp("plots");
  REQUIRE(cli({"plot-data", pg_json, aaa_json, "--model", "PGPGA", "--out", plots.string()})
              .code == 0);
  for (const char* f : {"daily.csv", "boxplot.csv", "distortion.csv", "delta_histogram.csv"}) {
    CHECK(fs::exists(plots / f));
  }
}
