#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "wdose/cohort.hpp"
#include "wdose/pkpd.hpp"
#include "wdose/random.hpp"

namespace wdose {

struct HistoryRecord {
  double inr = 0.0;
  double dose = 0.0;
  double duration = 1.0;
  bool operator==(const HistoryRecord&) const = default;
};

// The observable MDP state (current INR, padded history, patient covariates).
// It carries no latent quantity, so any policy that only sees a DosingState
// cannot reach daily INRs or hidden PK/PD parameters.
struct DosingState {
  double current_inr = 0.0;
  std::vector<HistoryRecord> history;  // oldest first, exactly h entries
  ObservableCovariates patient;
  int decision_index = 1;  // n, 1-based
  int day = 1;             // t, 1-based
};

struct EnvConfig {
  int horizon = 90;
  int history_length = 1;
  double first_dose_cap = 15.0;  // D^1_max
  double dose_cap = 15.0;        // cap for every later decision
  double dose_step = 0.5;
  double reward_scale = 4.0;
  double target_midpoint = 2.5;
  double range_lo = 2.0;
  double range_hi = 3.0;

  void validate() const;
  bool operator==(const EnvConfig&) const = default;
};

void to_json(nlohmann::json& j, const EnvConfig& c);
void from_json(const nlohmann::json& j, EnvConfig& c);

// Number of grid doses (0, step, ..., cap) allowed at a decision.
int allowed_action_count(const EnvConfig& cfg, int decision_index);
inline int action_space_size(const EnvConfig& cfg) {
  return allowed_action_count(cfg, 2);
}
double dose_for_action(const EnvConfig& cfg, int action);

// Durations (2, 3, 7, 7, ...) with the last one truncated to end on day T.
std::vector<int> build_schedule(int horizon);
std::vector<int> schedule_decision_days(const std::vector<int>& durations);

// -c * sum_t (midpoint - inr_t)^2.
double reward(std::span<const double> daily_inrs, double scale = 4.0,
              double midpoint = 2.5);

struct ExogenousInfo {
  std::vector<double> daily_latent_inrs;
  double measured_terminal_inr = 0.0;
};

struct DecisionRecord {
  int day = 1;
  double dose = 0.0;  // prescribed daily dose
  int duration = 1;
  double measured_inr = 0.0;  // INR observed at this decision point
  double reward = 0.0;
  bool operator==(const DecisionRecord&) const = default;
};

struct Measurement {
  int day = 1;
  double inr = 0.0;
  bool operator==(const Measurement&) const = default;
};

// One simulated episode; the substrate for every metric.
//
// Day convention: latent_inrs[d-1] is the INR on the morning of day d, i.e.
// after the doses of days 1..d-1, so day 1 is the pre-treatment baseline. A
// decision on day t with duration tau prescribes the doses of days
// t..t+tau-1, and its outcome is the INR of day t+tau, which is also the
// next decision day. Doses are taken on days 1..T-1.
struct Trajectory {
  int patient_id = 0;
  std::string policy;
  std::vector<double> latent_inrs;  // days 1..T
  std::vector<double> daily_doses;  // days 1..T-1
  std::vector<DecisionRecord> decisions;
  // Every INR measurement taken, including one on day T when a test falls
  // exactly at the end of the horizon.
  std::vector<Measurement> measurements;

  bool operator==(const Trajectory&) const = default;
};

void to_json(nlohmann::json& j, const Trajectory& t);
void from_json(const nlohmann::json& j, Trajectory& t);

// Day-by-day simulation of a single patient: latent PK/PD state plus the
// patient's own measurement-noise stream.
class PatientSimulator {
 public:
  PatientSimulator(const DoseResponseModel& model, const PatientProfile& patient);
  PatientSimulator(const DoseResponseModel& model, const PatientProfile& patient,
                   Rng measurement_rng);

  // Latent INR on day `day()`; the baseline before any dose.
  double latent_inr() const { return latent_; }
  int day() const { return state_.day; }
  // Measures the most recent latent INR.
  double measure();
  // Takes `dose` mg on the next day and returns that day's latent INR.
  double advance(double dose);

 private:
  const DoseResponseModel* model_;
  PkpdParameters params_;
  PkpdState state_;
  Rng rng_;
  double latent_;
};

struct StepOutcome {
  DosingState state;
  double reward = 0.0;
  ExogenousInfo exo;
  bool done = false;
};

// The dosing MDP on the fixed measurement schedule.
class DosingEnvironment {
 public:
  DosingEnvironment(const DoseResponseModel& model, EnvConfig config);

  DosingState reset(const PatientProfile& patient);
  DosingState reset(const PatientProfile& patient, Rng measurement_rng);
  // `dose` must be on the dose grid and within this decision's cap.
  StepOutcome step(double dose);

  const EnvConfig& config() const { return config_; }
  const std::vector<int>& schedule() const { return schedule_; }
  const DosingState& state() const { return state_; }
  bool done() const { return done_; }
  const Trajectory& trajectory() const { return trajectory_; }

 private:
  const DoseResponseModel* model_;
  EnvConfig config_;
  std::vector<int> schedule_;
  std::optional<PatientSimulator> sim_;
  DosingState state_;
  Trajectory trajectory_;
  bool done_ = true;
};

}  // namespace wdose
