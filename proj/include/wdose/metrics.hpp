#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "wdose/cohort.hpp"
#include "wdose/environment.hpp"

namespace wdose {

struct TherapeuticRange {
  double lo = 2.0;
  double hi = 3.0;
  bool contains(double inr) const { return inr >= lo && inr <= hi; }
};

// Fraction of days whose latent INR is in range.
double pttr_daily(std::span<const double> latent_inrs,
                  TherapeuticRange range = {});

// Rosendaal linear interpolation between measurements, with exact crossing
// points; the last measurement is held constant out to `horizon`. Covered time
// runs from the first measurement day to max(horizon, last day).
double pttr_rosendaal(std::span<const Measurement> measurements, int horizon,
                      TherapeuticRange range = {});

// 1-based day of the first in-range latent INR.
std::optional<int> first_therapeutic_day(std::span<const double> latent_inrs,
                                         TherapeuticRange range = {});

struct DoseSummary {
  std::optional<double> pre;   // days before the first therapeutic day
  std::optional<double> post;  // that day and after
  double total = 0.0;
  int decision_count = 0;
};

DoseSummary dose_summaries(const Trajectory& trajectory,
                           TherapeuticRange range = {});

struct PatientReport {
  int patient_id = 0;
  std::string policy;
  Sensitivity sensitivity = Sensitivity::kNormal;
  double pttr_daily = 0.0;
  double pttr_interpolated = 0.0;
  std::optional<int> first_therapeutic_day;
  std::optional<double> dose_pre;
  std::optional<double> dose_post;
  double dose_total = 0.0;
  int decision_count = 0;

  bool operator==(const PatientReport&) const = default;
};

PatientReport make_patient_report(const Trajectory& trajectory,
                                  Sensitivity sensitivity, int horizon,
                                  TherapeuticRange range = {});

// Population statistics (divide by N). Empty input gives n = 0 and NaNs.
struct Stat {
  int n = 0;
  double mean = 0.0;
  double sd = 0.0;
  double min = 0.0;
  double max = 0.0;
};
Stat summarize(std::span<const double> values);

// Linear-interpolated quantile (type 7) of unsorted values.
double quantile(std::vector<double> values, double q);

struct ClassSummary {
  std::string label;  // normal, sensitive, highly_sensitive, all
  int patients = 0;
  Stat pttr_daily;
  Stat pttr_interpolated;
  Stat first_therapeutic_day;
  int never_in_range = 0;
  Stat dose_pre;
  Stat dose_post;
  Stat dose_total;
  Stat decision_count;
};

// Rows for each sensitivity class followed by "all".
std::vector<ClassSummary> cohort_summary(std::span<const PatientReport> reports);

// Mean - SD of daily PTTR per class; throws ConfigError if a class is absent.
std::array<double, 3> class_scores(std::span<const PatientReport> reports);

// Per patient: model PTTR minus the best baseline PTTR for that patient.
// Reports are aligned by patient id; a mismatch throws DataMismatchError.
std::vector<double> pttr_delta_vs_best(
    std::span<const PatientReport> model,
    const std::vector<std::vector<PatientReport>>& baselines);

// Per-day latent INR mean and SD for one sensitivity class (or all).
struct DailyAggregate {
  std::vector<double> mean;
  std::vector<double> sd;
  std::vector<double> dose_mean;
  int patients = 0;
};
DailyAggregate daily_aggregate(std::span<const Trajectory> trajectories,
                               std::span<const Sensitivity> classes,
                               std::optional<Sensitivity> only);

void to_json(nlohmann::json& j, const Stat& s);
void to_json(nlohmann::json& j, const ClassSummary& s);
void to_json(nlohmann::json& j, const PatientReport& r);
void from_json(const nlohmann::json& j, PatientReport& r);
void to_json(nlohmann::json& j, const DailyAggregate& a);
void from_json(const nlohmann::json& j, DailyAggregate& a);

}  // namespace wdose
