#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "wdose/cohort.hpp"
#include "wdose/environment.hpp"
#include "wdose/metrics.hpp"
#include "wdose/protocols.hpp"

namespace wdose {

std::vector<Trajectory> run_baseline_cohort(
    const CompositeProtocol& composite,
    const std::vector<PatientProfile>& cohort, const DoseResponseModel& model,
    const ProtocolLibrary& library, const EnvConfig& env, int workers);

std::vector<PatientReport> build_reports(
    const std::vector<Trajectory>& trajectories,
    const std::vector<PatientProfile>& cohort, int horizon,
    TherapeuticRange range = {});

// Everything later commands need from one evaluation run.
struct EvaluationReport {
  std::string policy;
  std::string config_hash;  // of the policy's configuration
  std::uint64_t seed = 0;
  std::string cohort_hash;  // of the cohort's canonical JSON lines
  int horizon = 90;
  std::vector<PatientReport> patients;
  // Per-day aggregates: normal, sensitive, highly_sensitive, all.
  std::array<DailyAggregate, 4> daily;
};

EvaluationReport make_evaluation_report(
    std::string policy, std::string config_hash, std::uint64_t seed,
    const std::vector<PatientProfile>& cohort,
    const std::vector<Trajectory>& trajectories, int horizon);

std::string cohort_hash(const std::vector<PatientProfile>& cohort);

void to_json(nlohmann::json& j, const EvaluationReport& r);
void from_json(const nlohmann::json& j, EvaluationReport& r);
EvaluationReport load_evaluation_report(const std::string& path);

// Per-patient rows.
void write_report_csv(std::ostream& out, const EvaluationReport& r);
// Per-class summary rows, one block per report.
void write_summary_csv(std::ostream& out,
                       const std::vector<EvaluationReport>& reports);

struct Comparison {
  std::size_t model = 0;  // index of the model report
  std::vector<std::string> policies;
  std::vector<std::vector<ClassSummary>> summaries;  // per report
  // Per patient, model minus best baseline.
  std::vector<int> patient_ids;
  std::vector<Sensitivity> classes;
  std::vector<double> model_pttr;
  std::vector<double> best_baseline_pttr;
  std::vector<std::string> best_baseline;
  std::vector<double> delta;
  // Per report: interpolated - daily PTTR for every patient.
  std::vector<std::vector<double>> interpolation_delta;
};

// Aligns reports by patient id; throws DataMismatchError when they cover
// different cohorts or horizons.
Comparison compare_reports(const std::vector<EvaluationReport>& reports,
                           std::size_t model_index);

// Index of the first report that is not a named baseline, else 0.
std::size_t default_model_index(const std::vector<EvaluationReport>& reports);

void write_comparison_csv(std::ostream& out, const Comparison& c);
void write_deltas_csv(std::ostream& out, const Comparison& c);
void write_interpolation_csv(std::ostream& out, const Comparison& c);
nlohmann::json comparison_json(const Comparison& c,
                               const std::vector<EvaluationReport>& reports);

// Plot data: per-day class means and SDs, PTTR box statistics,
// interpolation-distortion box statistics, and a delta histogram.
void write_daily_csv(std::ostream& out,
                     const std::vector<EvaluationReport>& reports);
void write_boxplot_csv(std::ostream& out,
                       const std::vector<EvaluationReport>& reports);
void write_distortion_csv(std::ostream& out,
                          const std::vector<EvaluationReport>& reports);
void write_delta_histogram_csv(std::ostream& out, const Comparison& c,
                               double bin_width = 0.05);

// Fixed-format number for CSV output; empty for missing values.
std::string csv_number(double v);
std::string csv_number(const std::optional<double>& v);

}  // namespace wdose
