#include "wdose/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>

#include "wdose/errors.hpp"
#include "wdose/json_util.hpp"
#include "wdose/parallel.hpp"

namespace wdose {
namespace {

constexpr std::array<std::string_view, 4> kClassLabels = {
    "normal", "sensitive", "highly_sensitive", "all"};

bool in_class(const PatientReport& r, std::size_t c) {
  return c == 3 || r.sensitivity == kAllSensitivities[c];
}

void write_stat(std::ostream& out, const Stat& s) {
  out << ',' << csv_number(s.mean) << ',' << csv_number(s.sd);
}

void write_box(std::ostream& out, const std::vector<double>& v) {
  for (double q : {0.0, 0.25, 0.5, 0.75, 1.0}) {
    out << ',' << csv_number(v.empty() ? std::nan("") : quantile(v, q));
  }
  out << '\n';
}

}  // namespace

std::string csv_number(double v) {
  if (!std::isfinite(v)) return "";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  // Avoid "-0.000000" so that equal values print identically.
  if (std::string(buf) == "-0.000000") return "0.000000";
  return buf;
}

std::string csv_number(const std::optional<double>& v) {
  return v ? csv_number(*v) : std::string();
}

std::vector<Trajectory> run_baseline_cohort(
    const CompositeProtocol& composite,
    const std::vector<PatientProfile>& cohort, const DoseResponseModel& model,
    const ProtocolLibrary& library, const EnvConfig& env, int workers) {
  composite.validate(env.horizon);
  std::vector<Trajectory> out(cohort.size());
  parallel_for(cohort.size(), workers, [&](std::size_t i) {
    out[i] = compose_and_run(composite, cohort[i], model, library, env);
  });
  return out;
}

std::vector<PatientReport> build_reports(
    const std::vector<Trajectory>& trajectories,
    const std::vector<PatientProfile>& cohort, int horizon,
    TherapeuticRange range) {
  if (trajectories.size() != cohort.size()) {
    throw DataMismatchError("trajectory count does not match the cohort");
  }
  std::vector<PatientReport> out;
  out.reserve(cohort.size());
  for (std::size_t i = 0; i < cohort.size(); ++i) {
    if (trajectories[i].patient_id != cohort[i].id) {
      throw DataMismatchError("trajectory " + std::to_string(i) +
                              " belongs to a different patient");
    }
    out.push_back(make_patient_report(
        trajectories[i], classify_sensitivity(cohort[i].covariates), horizon,
        range));
  }
  return out;
}

std::string cohort_hash(const std::vector<PatientProfile>& cohort) {
  std::ostringstream os;
  write_cohort(os, cohort);
  return json_util::hash_hex(nlohmann::json(os.str()));
}

EvaluationReport make_evaluation_report(
    std::string policy, std::string config_hash, std::uint64_t seed,
    const std::vector<PatientProfile>& cohort,
    const std::vector<Trajectory>& trajectories, int horizon) {
  EvaluationReport r;
  r.policy = std::move(policy);
  r.config_hash = std::move(config_hash);
  r.seed = seed;
  r.cohort_hash = cohort_hash(cohort);
  r.horizon = horizon;
  r.patients = build_reports(trajectories, cohort, horizon);
  for (auto& p : r.patients) p.policy = r.policy;
  std::vector<Sensitivity> classes;
  for (const auto& p : r.patients) classes.push_back(p.sensitivity);
  for (std::size_t c = 0; c < 4; ++c) {
    r.daily[c] = daily_aggregate(
        trajectories, classes,
        c < 3 ? std::optional<Sensitivity>(kAllSensitivities[c]) : std::nullopt);
  }
  return r;
}

void to_json(nlohmann::json& j, const EvaluationReport& r) {
  nlohmann::json daily = nlohmann::json::object();
  for (std::size_t c = 0; c < 4; ++c) daily[std::string(kClassLabels[c])] = r.daily[c];
  j = nlohmann::json{{"format", "wdose-report"},
                     {"version", 1},
                     {"policy", r.policy},
                     {"config_hash", r.config_hash},
                     {"seed", r.seed},
                     {"cohort_hash", r.cohort_hash},
                     {"horizon", r.horizon},
                     {"summary", cohort_summary(r.patients)},
                     {"patients", r.patients},
                     {"daily", std::move(daily)}};
}

void from_json(const nlohmann::json& j, EvaluationReport& r) {
  using json_util::read_required;
  if (read_required<std::string>(j, "format") != "wdose-report") {
    throw ConfigError("not an evaluation report");
  }
  r.policy = read_required<std::string>(j, "policy");
  r.config_hash = read_required<std::string>(j, "config_hash");
  r.seed = read_required<std::uint64_t>(j, "seed");
  r.cohort_hash = read_required<std::string>(j, "cohort_hash");
  r.horizon = read_required<int>(j, "horizon");
  r.patients = read_required<std::vector<PatientReport>>(j, "patients");
  const auto& daily = j.at("daily");
  for (std::size_t c = 0; c < 4; ++c) {
    r.daily[c] = daily.at(std::string(kClassLabels[c])).get<DailyAggregate>();
  }
}

EvaluationReport load_evaluation_report(const std::string& path) {
  try {
    return json_util::load_file(path).get<EvaluationReport>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("'" + path + "': " + e.what());
  }
}

void write_report_csv(std::ostream& out, const EvaluationReport& r) {
  out << "patient_id,policy,sensitivity,pttr_daily,pttr_interpolated,"
         "first_therapeutic_day,dose_pre,dose_post,dose_total,decision_count\n";
  for (const auto& p : r.patients) {
    out << p.patient_id << ',' << p.policy << ',' << to_string(p.sensitivity)
        << ',' << csv_number(p.pttr_daily) << ','
        << csv_number(p.pttr_interpolated) << ',';
    if (p.first_therapeutic_day) out << *p.first_therapeutic_day;
    out << ',' << csv_number(p.dose_pre) << ',' << csv_number(p.dose_post)
        << ',' << csv_number(p.dose_total) << ',' << p.decision_count << '\n';
  }
}

void write_summary_csv(std::ostream& out,
                       const std::vector<EvaluationReport>& reports) {
  out << "policy,class,patients,pttr_mean,pttr_sd,pttr_interpolated_mean,"
         "pttr_interpolated_sd,first_day_mean,first_day_sd,never_in_range,"
         "dose_pre_mean,dose_pre_sd,dose_post_mean,dose_post_sd,"
         "dose_total_mean,dose_total_sd,decisions_mean\n";
  for (const auto& r : reports) {
    for (const auto& row : cohort_summary(r.patients)) {
      out << r.policy << ',' << row.label << ',' << row.patients;
      write_stat(out, row.pttr_daily);
      write_stat(out, row.pttr_interpolated);
      write_stat(out, row.first_therapeutic_day);
      out << ',' << row.never_in_range;
      write_stat(out, row.dose_pre);
      write_stat(out, row.dose_post);
      write_stat(out, row.dose_total);
      out << ',' << csv_number(row.decision_count.mean) << '\n';
    }
  }
}

std::size_t default_model_index(const std::vector<EvaluationReport>& reports) {
  for (std::size_t i = 0; i < reports.size(); ++i) {
    if (!is_composite_name(reports[i].policy)) return i;
  }
  return 0;
}

Comparison compare_reports(const std::vector<EvaluationReport>& reports,
                           std::size_t model_index) {
  if (reports.size() < 2) {
    throw DomainError("compare needs at least two reports");
  }
  if (model_index >= reports.size()) throw DomainError("model index out of range");
  const auto& m = reports[model_index];
  for (const auto& r : reports) {
    if (r.horizon != m.horizon) {
      throw DataMismatchError("reports use different horizons (" +
                              std::to_string(m.horizon) + " vs " +
                              std::to_string(r.horizon) + ")");
    }
    if (r.patients.size() != m.patients.size()) {
      throw DataMismatchError("reports cover different numbers of patients");
    }
    if (r.cohort_hash != m.cohort_hash) {
      throw DataMismatchError("'" + m.policy + "' and '" + r.policy +
                              "' were evaluated on different cohorts");
    }
    for (std::size_t i = 0; i < r.patients.size(); ++i) {
      if (r.patients[i].patient_id != m.patients[i].patient_id) {
        throw DataMismatchError(
            "patient ids do not align between '" + m.policy + "' and '" +
            r.policy + "' at row " + std::to_string(i));
      }
    }
  }

  Comparison c;
  c.model = model_index;
  for (const auto& r : reports) {
    c.policies.push_back(r.policy);
    c.summaries.push_back(cohort_summary(r.patients));
    std::vector<double> d;
    for (const auto& p : r.patients) d.push_back(p.pttr_interpolated - p.pttr_daily);
    c.interpolation_delta.push_back(std::move(d));
  }
  std::vector<std::vector<PatientReport>> baselines;
  std::vector<std::size_t> baseline_index;
  for (std::size_t k = 0; k < reports.size(); ++k) {
    if (k == model_index) continue;
    baselines.push_back(reports[k].patients);
    baseline_index.push_back(k);
  }
  c.delta = pttr_delta_vs_best(m.patients, baselines);
  for (std::size_t i = 0; i < m.patients.size(); ++i) {
    c.patient_ids.push_back(m.patients[i].patient_id);
    c.classes.push_back(m.patients[i].sensitivity);
    c.model_pttr.push_back(m.patients[i].pttr_daily);
    std::size_t best = 0;
    for (std::size_t b = 1; b < baselines.size(); ++b) {
      if (baselines[b][i].pttr_daily > baselines[best][i].pttr_daily) best = b;
    }
    c.best_baseline_pttr.push_back(baselines[best][i].pttr_daily);
    c.best_baseline.push_back(reports[baseline_index[best]].policy);
  }
  return c;
}

void write_comparison_csv(std::ostream& out, const Comparison& c) {
  out << "policy,role,class,patients,pttr_mean,pttr_sd,pttr_interpolated_mean,"
         "pttr_interpolated_sd,first_day_mean,never_in_range,dose_pre_mean,"
         "dose_post_mean,dose_total_mean,dose_total_sd\n";
  for (std::size_t k = 0; k < c.policies.size(); ++k) {
    for (const auto& row : c.summaries[k]) {
      out << c.policies[k] << ',' << (k == c.model ? "model" : "baseline")
          << ',' << row.label << ',' << row.patients << ','
          << csv_number(row.pttr_daily.mean) << ','
          << csv_number(row.pttr_daily.sd) << ','
          << csv_number(row.pttr_interpolated.mean) << ','
          << csv_number(row.pttr_interpolated.sd) << ','
          << csv_number(row.first_therapeutic_day.mean) << ','
          << row.never_in_range << ',' << csv_number(row.dose_pre.mean) << ','
          << csv_number(row.dose_post.mean) << ','
          << csv_number(row.dose_total.mean) << ','
          << csv_number(row.dose_total.sd) << '\n';
    }
  }
}

void write_deltas_csv(std::ostream& out, const Comparison& c) {
  out << "patient_id,sensitivity,model_pttr,best_baseline,best_baseline_pttr,"
         "delta\n";
  for (std::size_t i = 0; i < c.patient_ids.size(); ++i) {
    out << c.patient_ids[i] << ',' << to_string(c.classes[i]) << ','
        << csv_number(c.model_pttr[i]) << ',' << c.best_baseline[i] << ','
        << csv_number(c.best_baseline_pttr[i]) << ',' << csv_number(c.delta[i])
        << '\n';
  }
}

void write_interpolation_csv(std::ostream& out, const Comparison& c) {
  out << "policy,class,patients,mean_delta,q25_delta,median_delta,q75_delta,"
         "median_abs_delta\n";
  for (std::size_t k = 0; k < c.policies.size(); ++k) {
    for (std::size_t cls = 0; cls < 4; ++cls) {
      std::vector<double> d, a;
      for (std::size_t i = 0; i < c.classes.size(); ++i) {
        if (cls < 3 && c.classes[i] != kAllSensitivities[cls]) continue;
        d.push_back(c.interpolation_delta[k][i]);
        a.push_back(std::abs(c.interpolation_delta[k][i]));
      }
      out << c.policies[k] << ',' << kClassLabels[cls] << ',' << d.size() << ','
          << csv_number(summarize(d).mean) << ',' << csv_number(quantile(d, 0.25))
          << ',' << csv_number(quantile(d, 0.5)) << ','
          << csv_number(quantile(d, 0.75)) << ',' << csv_number(quantile(a, 0.5))
          << '\n';
    }
  }
}

nlohmann::json comparison_json(const Comparison& c,
                               const std::vector<EvaluationReport>& reports) {
  nlohmann::json policies = nlohmann::json::array();
  for (std::size_t k = 0; k < c.policies.size(); ++k) {
    std::vector<double> a;
    for (double d : c.interpolation_delta[k]) a.push_back(std::abs(d));
    policies.push_back(
        {{"policy", c.policies[k]},
         {"role", k == c.model ? "model" : "baseline"},
         {"config_hash", reports[k].config_hash},
         {"seed", reports[k].seed},
         {"summary", c.summaries[k]},
         {"interpolation_delta_median", quantile(c.interpolation_delta[k], 0.5)},
         {"interpolation_abs_delta_median", quantile(a, 0.5)}});
  }
  std::vector<double> per_class_delta[4];
  for (std::size_t i = 0; i < c.delta.size(); ++i) {
    per_class_delta[static_cast<std::size_t>(c.classes[i])].push_back(c.delta[i]);
    per_class_delta[3].push_back(c.delta[i]);
  }
  nlohmann::json deltas = nlohmann::json::array();
  for (std::size_t cls = 0; cls < 4; ++cls) {
    const auto& v = per_class_delta[cls];
    const auto wins = std::count_if(v.begin(), v.end(), [](double d) { return d > 0.0; });
    deltas.push_back({{"class", kClassLabels[cls]},
                      {"patients", v.size()},
                      {"delta", summarize(v)},
                      {"model_beats_all_baselines", wins}});
  }
  return {{"format", "wdose-comparison"},
          {"version", 1},
          {"model", c.policies[c.model]},
          {"cohort_hash", reports[c.model].cohort_hash},
          {"policies", std::move(policies)},
          {"delta_vs_best_baseline", std::move(deltas)}};
}

void write_daily_csv(std::ostream& out,
                     const std::vector<EvaluationReport>& reports) {
  out << "policy,class,day,inr_mean,inr_sd,dose_mean\n";
  for (const auto& r : reports) {
    for (std::size_t c = 0; c < 4; ++c) {
      const auto& a = r.daily[c];
      for (std::size_t d = 0; d < a.mean.size(); ++d) {
        out << r.policy << ',' << kClassLabels[c] << ',' << d + 1 << ','
            << csv_number(a.mean[d]) << ',' << csv_number(a.sd[d]) << ','
            << (d < a.dose_mean.size() ? csv_number(a.dose_mean[d]) : "") << '\n';
      }
    }
  }
}

void write_boxplot_csv(std::ostream& out,
                       const std::vector<EvaluationReport>& reports) {
  out << "policy,class,metric,min,q25,median,q75,max\n";
  for (const auto& r : reports) {
    for (std::size_t c = 0; c < 4; ++c) {
      std::vector<double> daily, interp;
      for (const auto& p : r.patients) {
        if (!in_class(p, c)) continue;
        daily.push_back(p.pttr_daily);
        interp.push_back(p.pttr_interpolated);
      }
      out << r.policy << ',' << kClassLabels[c] << ",pttr_daily";
      write_box(out, daily);
      out << r.policy << ',' << kClassLabels[c] << ",pttr_interpolated";
      write_box(out, interp);
    }
  }
}

void write_distortion_csv(std::ostream& out,
                          const std::vector<EvaluationReport>& reports) {
  out << "policy,class,min,q25,median,q75,max\n";
  for (const auto& r : reports) {
    for (std::size_t c = 0; c < 4; ++c) {
      std::vector<double> d;
      for (const auto& p : r.patients) {
        if (in_class(p, c)) d.push_back(p.pttr_interpolated - p.pttr_daily);
      }
      out << r.policy << ',' << kClassLabels[c];
      write_box(out, d);
    }
  }
}

void write_delta_histogram_csv(std::ostream& out, const Comparison& c,
                               double bin_width) {
  if (!(bin_width > 0.0)) throw DomainError("bin width must be > 0");
  const int bins = static_cast<int>(std::ceil(2.0 / bin_width - 1e-9));
  std::vector<int> counts(static_cast<std::size_t>(bins), 0);
  for (double d : c.delta) {
    int b = static_cast<int>(std::floor((d + 1.0) / bin_width + 1e-9));
    b = std::clamp(b, 0, bins - 1);
    ++counts[static_cast<std::size_t>(b)];
  }
  out << "bin_lo,bin_hi,count\n";
  for (int b = 0; b < bins; ++b) {
    out << csv_number(-1.0 + b * bin_width) << ','
        << csv_number(std::min(1.0, -1.0 + (b + 1) * bin_width)) << ','
        << counts[static_cast<std::size_t>(b)] << '\n';
  }
}

}  // namespace wdose
