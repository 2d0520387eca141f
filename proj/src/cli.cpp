#include "wdose/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "wdose/errors.hpp"
#include "wdose/evaluation.hpp"
#include "wdose/json_util.hpp"
#include "wdose/protocols.hpp"

namespace fs = std::filesystem;

namespace wdose {
namespace {

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path.string() + "'");
  return out;
}

void make_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create '" + dir.string() + "': " + ec.message());
}

void write_json(const fs::path& path, const nlohmann::json& j) {
  auto out = open_out(path);
  out << j.dump(2) << '\n';
}

PkpdConfig pkpd_from(const std::string& path) {
  return path.empty() ? PkpdConfig{} : load_pkpd_config(path);
}

CohortDistribution distribution_from(const std::string& path) {
  return path.empty() ? CohortDistribution{} : load_cohort_distribution(path);
}

struct Common {
  std::uint64_t seed = 1;
  std::string config;
  std::string model_config;
  std::string cohort_config;
  std::string out;
  int workers = 1;
};

// --- generate -------------------------------------------------------------

struct GenerateArgs : Common {
  int n = 0;
};

int cmd_generate(const GenerateArgs& a, std::ostream& log) {
  if (a.n < 1) throw DomainError("--n must be >= 1");
  const PkpdConfig pkpd = pkpd_from(a.model_config);
  const CohortDistribution dist = distribution_from(a.cohort_config);
  TransitChainModel model(pkpd);
  CohortSampler sampler(dist, model);
  const auto cohort = sampler.generate_cohort(a.n, a.seed);

  const fs::path out(a.out);
  if (out.has_parent_path()) make_dir(out.parent_path());
  save_cohort(out.string(), cohort);
  const nlohmann::json meta = {{"pkpd", pkpd}, {"cohort_distribution", dist}};
  write_json(out.string() + ".meta.json",
             {{"format", "wdose-cohort-meta"},
              {"patients", a.n},
              {"seed", a.seed},
              {"config_hash", json_util::hash_hex(meta)},
              {"config", meta}});
  log << "wrote " << a.n << " patients to " << out.string() << '\n';
  return kExitOk;
}

// --- train ----------------------------------------------------------------

struct TrainArgs : Common {
  std::string preset = "base";
  std::optional<int> epochs;
  std::optional<int> cohort_size;
  std::optional<int> validation_size;
  std::optional<int> h;
  std::optional<double> d1max;
  bool no_genotype = false;
  bool seed_given = false;
};

TrainConfig effective_train_config(const TrainArgs& a) {
  TrainConfig c = preset_config(a.preset);
  if (!a.config.empty()) {
    // The file overrides the preset field by field.
    nlohmann::json base = c;
    base.merge_patch(json_util::load_file(a.config));
    c = base.get<TrainConfig>();
  }
  if (a.epochs) c.epochs = *a.epochs;
  if (a.cohort_size) c.cohort_per_epoch = *a.cohort_size;
  if (a.validation_size) c.validation_size = *a.validation_size;
  if (a.h) c.env.history_length = *a.h;
  if (a.d1max) c.env.first_dose_cap = *a.d1max;
  if (a.no_genotype) c.genotype_blind = true;
  if (a.seed_given) c.seed = a.seed;
  c.validate();
  return c;
}

int cmd_train(const TrainArgs& a, std::ostream& log) {
  const TrainConfig cfg = effective_train_config(a);
  const PkpdConfig pkpd = pkpd_from(a.model_config);
  const CohortDistribution dist = distribution_from(a.cohort_config);
  TransitChainModel model(pkpd);
  CohortSampler sampler(dist, model);

  const fs::path out(a.out);
  make_dir(out / "checkpoints");
  const std::string hash = json_util::hash_hex(nlohmann::json(cfg));
  write_json(out / "config.json",
             {{"format", "wdose-train-config"},
              {"config_hash", hash},
              {"seed", cfg.seed},
              {"preset", a.preset},
              {"train", cfg},
              {"pkpd", pkpd},
              {"cohort_distribution", dist}});

  TrainHooks hooks;
  hooks.on_epoch = [&](const Checkpoint& c, const EpochLog& e) {
    char name[64];
    std::snprintf(name, sizeof name, "epoch_%03d.json", c.epoch);
    save_checkpoint((out / "checkpoints" / name).string(), c);
    char line[256];
    std::snprintf(line, sizeof line,
                  "epoch %d  eps %.3f  loss %.5f  PTTR %.3f  min class score %.3f\n",
                  e.epoch, e.epsilon, e.train_loss, e.overall_pttr,
                  e.min_class_score);
    log << line << std::flush;
  };
  const TrainResult result = train(cfg, model, sampler, a.workers, hooks);

  {
    auto f = open_out(out / "training_log.csv");
    write_training_log(f, result.log);
  }
  const Checkpoint& best = result.checkpoints[result.best];
  save_checkpoint((out / "best_checkpoint.json").string(), best);
  nlohmann::json epochs = nlohmann::json::array();
  for (const auto& c : result.checkpoints) {
    epochs.push_back({{"epoch", c.epoch},
                      {"class_scores", c.class_scores},
                      {"min_class_score", c.min_class_score}});
  }
  write_json(out / "selection.json",
             {{"format", "wdose-selection"},
              {"config_hash", hash},
              {"seed", cfg.seed},
              {"rule", "argmax over epochs of min over classes of (mean - sd) PTTR"},
              {"best_epoch", best.epoch},
              {"epochs", std::move(epochs)}});
  log << "selected epoch " << best.epoch << " (min class score "
      << best.min_class_score << ")\n";
  return kExitOk;
}

// --- evaluate -------------------------------------------------------------

struct EvaluateArgs : Common {
  std::string policy;
  std::string cohort;
  bool no_genotype = false;
};

int cmd_evaluate(const EvaluateArgs& a, std::ostream& log) {
  const auto cohort = load_cohort(a.cohort);
  if (cohort.empty()) throw ConfigError("cohort '" + a.cohort + "' is empty");
  const PkpdConfig pkpd = pkpd_from(a.model_config);
  TransitChainModel model(pkpd);

  std::vector<Trajectory> trajectories;
  std::string policy_name;
  std::string hash;
  std::uint64_t seed = a.seed;
  int horizon = 90;

  if (is_composite_name(a.policy)) {
    EnvConfig env;
    if (!a.config.empty()) env = json_util::load_file(a.config).get<EnvConfig>();
    ProtocolLibrary lib;
    lib.genotype_blind = a.no_genotype;
    const auto composite = named_composite(a.policy, env.horizon);
    trajectories = run_baseline_cohort(composite, cohort, model, lib, env, a.workers);
    policy_name = a.policy;
    horizon = env.horizon;
    hash = json_util::hash_hex({{"composite", composite},
                                {"env", env},
                                {"aurora", lib.aurora},
                                {"iwpc_pharmacogenetic", lib.iwpc_pharmacogenetic},
                                {"iwpc_clinical", lib.iwpc_clinical},
                                {"lenzini", lib.lenzini},
                                {"genotype_blind", lib.genotype_blind},
                                {"pkpd", pkpd}});
  } else if (fs::is_regular_file(a.policy)) {
    const Checkpoint ckpt = load_checkpoint(a.policy);
    const GreedyPolicy policy(ckpt);
    policy_name = "dqn";
    trajectories = run_greedy_cohort(policy, cohort, model, a.workers, policy_name);
    horizon = ckpt.env.horizon;
    hash = ckpt.config_hash;
    seed = ckpt.seed;
  } else {
    std::string valid;
    for (const auto& n : composite_names()) valid += " " + n;
    throw DomainError("unknown policy '" + a.policy +
                      "': expected a checkpoint file or one of" + valid);
  }

  const auto report =
      make_evaluation_report(policy_name, hash, seed, cohort, trajectories, horizon);
  const fs::path out(a.out);
  make_dir(out);
  {
    auto f = open_out(out / "trajectories.jsonl");
    for (const auto& t : trajectories) f << nlohmann::json(t).dump() << '\n';
  }
  {
    auto f = open_out(out / "report.csv");
    write_report_csv(f, report);
  }
  {
    auto f = open_out(out / "summary.csv");
    write_summary_csv(f, {report});
  }
  write_json(out / "report.json", report);
  const auto rows = cohort_summary(report.patients);
  log << policy_name << ": " << cohort.size() << " patients, mean PTTR "
      << rows.back().pttr_daily.mean << '\n';
  return kExitOk;
}

// --- compare / plot-data --------------------------------------------------

struct CompareArgs : Common {
  std::vector<std::string> reports;
  std::string model;
};

std::vector<EvaluationReport> load_reports(const std::vector<std::string>& paths) {
  std::vector<EvaluationReport> out;
  for (const auto& p : paths) out.push_back(load_evaluation_report(p));
  return out;
}

std::size_t model_index(const std::vector<EvaluationReport>& reports,
                        const std::string& model) {
  if (model.empty()) return default_model_index(reports);
  for (std::size_t i = 0; i < reports.size(); ++i) {
    if (reports[i].policy == model) return i;
  }
  throw DomainError("no report has policy '" + model + "'");
}

int cmd_compare(const CompareArgs& a, std::ostream& log) {
  if (a.reports.size() < 2) throw DomainError("compare needs at least two reports");
  const auto reports = load_reports(a.reports);
  const auto c = compare_reports(reports, model_index(reports, a.model));
  const fs::path out(a.out);
  make_dir(out);
  {
    auto f = open_out(out / "comparison.csv");
    write_comparison_csv(f, c);
  }
  {
    auto f = open_out(out / "deltas.csv");
    write_deltas_csv(f, c);
  }
  {
    auto f = open_out(out / "interpolation.csv");
    write_interpolation_csv(f, c);
  }
  write_json(out / "comparison.json", comparison_json(c, reports));
  log << "compared " << reports.size() << " reports; model '"
      << c.policies[c.model] << "'\n";
  return kExitOk;
}

int cmd_plot_data(const CompareArgs& a, std::ostream& log) {
  if (a.reports.empty()) throw DomainError("plot-data needs at least one report");
  const auto reports = load_reports(a.reports);
  for (const auto& r : reports) {
    if (r.horizon != reports.front().horizon) {
      throw DataMismatchError("reports use different horizons");
    }
  }
  const fs::path out(a.out);
  make_dir(out);
  {
    auto f = open_out(out / "daily.csv");
    write_daily_csv(f, reports);
  }
  {
    auto f = open_out(out / "boxplot.csv");
    write_boxplot_csv(f, reports);
  }
  {
    auto f = open_out(out / "distortion.csv");
    write_distortion_csv(f, reports);
  }
  if (reports.size() >= 2) {
    const auto c = compare_reports(reports, model_index(reports, a.model));
    auto f = open_out(out / "delta_histogram.csv");
    write_delta_histogram_csv(f, c);
  }
  log << "wrote plot data for " << reports.size() << " reports to "
      << out.string() << '\n';
  return kExitOk;
}

void add_common(CLI::App* app, Common& c, bool seed, bool config) {
  if (seed) app->add_option("--seed", c.seed, "Master seed");
  if (config) app->add_option("--config", c.config, "JSON configuration file");
  app->add_option("--out", c.out, "Output file or directory")->required();
}

}  // namespace

const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names = {"base", "h2", "h3", "noPG",
                                                 "d1max5"};
  return names;
}

TrainConfig preset_config(const std::string& name) {
  TrainConfig c;
  c.optimizer = "adam";
  if (name == "base") return c;
  if (name == "h2") {
    c.env.history_length = 2;
  } else if (name == "h3") {
    c.env.history_length = 3;
  } else if (name == "noPG") {
    c.genotype_blind = true;
  } else if (name == "d1max5") {
    c.env.first_dose_cap = 5.0;
  } else {
    throw DomainError("unknown preset '" + name +
                      "' (base, h2, h3, noPG, d1max5)");
  }
  return c;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err) {
  CLI::App app{"Warfarin dosing simulator: cohorts, protocols and a DQN agent",
               "wdose"};
  app.require_subcommand(1);

  GenerateArgs gen;
  auto* g = app.add_subcommand("generate", "Generate a virtual patient cohort");
  g->add_option("--n", gen.n, "Number of patients")->required();
  add_common(g, gen, true, false);
  g->add_option("--model-config", gen.model_config, "PK/PD model JSON");
  g->add_option("--cohort-config", gen.cohort_config, "Cohort distribution JSON");

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "Train the DQN dosing agent");
  // --h is the history length here, so help is --help only.
  t->set_help_flag("--help", "Print this help message and exit");
  add_common(t, tr, false, true);
  t->add_option("--seed", tr.seed, "Master seed");
  t->add_option("--preset", tr.preset, "base, h2, h3, noPG or d1max5");
  t->add_option("--epochs", tr.epochs, "Training epochs");
  t->add_option("--cohort-size", tr.cohort_size, "Patients per epoch");
  t->add_option("--validation-size", tr.validation_size, "Validation patients");
  t->add_option("--h", tr.h, "History length");
  t->add_option("--d1max", tr.d1max, "First-decision dose cap (mg/day)");
  t->add_flag("--no-genotype", tr.no_genotype, "Hide genotypes from the agent");
  t->add_option("--workers", tr.workers, "Validation rollout threads");
  t->add_option("--model-config", tr.model_config, "PK/PD model JSON");
  t->add_option("--cohort-config", tr.cohort_config, "Cohort distribution JSON");

  EvaluateArgs ev;
  auto* e = app.add_subcommand("evaluate", "Roll out a policy on a cohort");
  e->add_option("--policy", ev.policy, "Checkpoint file or baseline name")
      ->required();
  e->add_option("--cohort", ev.cohort, "Cohort JSONL file")->required();
  add_common(e, ev, true, true);
  e->add_flag("--no-genotype", ev.no_genotype, "Genotype-blind baselines");
  e->add_option("--workers", ev.workers, "Rollout threads");
  e->add_option("--model-config", ev.model_config, "PK/PD model JSON");

  CompareArgs cmp;
  auto* c = app.add_subcommand("compare", "Compare evaluation reports");
  c->add_option("reports", cmp.reports, "report.json files")->required();
  c->add_option("--model", cmp.model, "Policy name of the model report");
  add_common(c, cmp, false, false);

  CompareArgs plot;
  auto* p = app.add_subcommand("plot-data", "Emit plot-ready CSV tables");
  p->add_option("reports", plot.reports, "report.json files")->required();
  p->add_option("--model", plot.model, "Policy name of the model report");
  add_common(p, plot, false, false);

  std::vector<std::string> argv_store = {"wdose"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& s : argv_store) argv.push_back(s.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& ex) {
    const int code = app.exit(ex, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }
  tr.seed_given = t->count("--seed") > 0;

  try {
    if (*g) return cmd_generate(gen, out);
    if (*t) return cmd_train(tr, out);
    if (*e) return cmd_evaluate(ev, out);
    if (*c) return cmd_compare(cmp, out);
    if (*p) return cmd_plot_data(plot, out);
  } catch (const DataMismatchError& ex) {
    err << "error: " << ex.what() << '\n';
    return kExitDataMismatch;
  } catch (const ConfigError& ex) {
    err << "error: " << ex.what() << '\n';
    return kExitConfig;
  } catch (const DomainError& ex) {
    err << "error: " << ex.what() << '\n';
    return kExitUsage;
  } catch (const nlohmann::json::exception& ex) {
    err << "error: malformed JSON: " << ex.what() << '\n';
    return kExitConfig;
  }
  return kExitUsage;
}

}  // namespace wdose
