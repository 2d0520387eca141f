#include "wdose/environment.hpp"

#include <cmath>

#include "wdose/errors.hpp"
#include "wdose/json_util.hpp"

namespace wdose {

void EnvConfig::validate() const {
  if (horizon < 6) throw ConfigError("horizon T must be >= 6");
  if (history_length < 1) throw ConfigError("history length h must be >= 1");
  if (!(dose_step > 0.0)) throw ConfigError("dose_step must be > 0");
  const auto on_grid = [&](double v) {
    const double k = v / dose_step;
    return v >= 0.0 && std::abs(k - std::round(k)) < 1e-9;
  };
  if (!on_grid(dose_cap) || !on_grid(first_dose_cap)) {
    throw ConfigError("dose caps must be multiples of dose_step");
  }
  if (first_dose_cap > dose_cap) {
    throw ConfigError("first-decision cap cannot exceed the general cap");
  }
  if (!(reward_scale > 0.0)) throw ConfigError("reward_scale must be > 0");
  if (!(range_lo < range_hi)) throw ConfigError("therapeutic range is empty");
}

void to_json(nlohmann::json& j, const EnvConfig& c) {
  j = nlohmann::json{{"horizon", c.horizon},
                     {"history_length", c.history_length},
                     {"first_dose_cap", c.first_dose_cap},
                     {"dose_cap", c.dose_cap},
                     {"dose_step", c.dose_step},
                     {"reward_scale", c.reward_scale},
                     {"target_midpoint", c.target_midpoint},
                     {"range_lo", c.range_lo},
                     {"range_hi", c.range_hi}};
}

void from_json(const nlohmann::json& j, EnvConfig& c) {
  using json_util::read_optional;
  json_util::check_keys(j, "environment config",
                        {"horizon", "history_length", "first_dose_cap",
                         "dose_cap", "dose_step", "reward_scale",
                         "target_midpoint", "range_lo", "range_hi"});
  read_optional(j, "horizon", c.horizon);
  read_optional(j, "history_length", c.history_length);
  read_optional(j, "first_dose_cap", c.first_dose_cap);
  read_optional(j, "dose_cap", c.dose_cap);
  read_optional(j, "dose_step", c.dose_step);
  read_optional(j, "reward_scale", c.reward_scale);
  read_optional(j, "target_midpoint", c.target_midpoint);
  read_optional(j, "range_lo", c.range_lo);
  read_optional(j, "range_hi", c.range_hi);
  c.validate();
}

int allowed_action_count(const EnvConfig& cfg, int decision_index) {
  const double cap = decision_index == 1 ? cfg.first_dose_cap : cfg.dose_cap;
  return static_cast<int>(std::lround(cap / cfg.dose_step)) + 1;
}

double dose_for_action(const EnvConfig& cfg, int action) {
  return cfg.dose_step * action;
}

std::vector<int> build_schedule(int horizon) {
  if (horizon < 6) {
    throw ConfigError("schedule needs a horizon of at least 6 days");
  }
  std::vector<int> durations;
  int day = 1;
  int n = 0;
  while (day < horizon) {
    const int nominal = n == 0 ? 2 : (n == 1 ? 3 : 7);
    const int tau = std::min(nominal, horizon - day);
    durations.push_back(tau);
    day += tau;
    ++n;
  }
  return durations;
}

std::vector<int> schedule_decision_days(const std::vector<int>& durations) {
  std::vector<int> days;
  days.reserve(durations.size());
  int day = 1;
  for (int tau : durations) {
    days.push_back(day);
    day += tau;
  }
  return days;
}

double reward(std::span<const double> daily_inrs, double scale,
              double midpoint) {
  if (daily_inrs.empty()) throw DomainError("reward of an empty INR list");
  double sum = 0.0;
  for (double inr : daily_inrs) {
    const double d = midpoint - inr;
    sum += d * d;
  }
  // + 0.0 turns a perfect -0.0 into 0.0.
  return -scale * sum + 0.0;
}

void to_json(nlohmann::json& j, const Trajectory& t) {
  nlohmann::json decisions = nlohmann::json::array();
  for (const auto& d : t.decisions) {
    decisions.push_back({{"day", d.day},
                         {"dose", d.dose},
                         {"duration", d.duration},
                         {"measured_inr", d.measured_inr},
                         {"reward", d.reward}});
  }
  nlohmann::json measurements = nlohmann::json::array();
  for (const auto& m : t.measurements) {
    measurements.push_back({{"day", m.day}, {"inr", m.inr}});
  }
  j = nlohmann::json{{"patient_id", t.patient_id},
                     {"policy", t.policy},
                     {"latent_inrs", t.latent_inrs},
                     {"daily_doses", t.daily_doses},
                     {"decisions", std::move(decisions)},
                     {"measurements", std::move(measurements)}};
}

void from_json(const nlohmann::json& j, Trajectory& t) {
  using json_util::read_required;
  t.patient_id = read_required<int>(j, "patient_id");
  t.policy = read_required<std::string>(j, "policy");
  t.latent_inrs = read_required<std::vector<double>>(j, "latent_inrs");
  t.daily_doses = read_required<std::vector<double>>(j, "daily_doses");
  t.decisions.clear();
  for (const auto& d : j.at("decisions")) {
    t.decisions.push_back({read_required<int>(d, "day"),
                           read_required<double>(d, "dose"),
                           read_required<int>(d, "duration"),
                           read_required<double>(d, "measured_inr"),
                           read_required<double>(d, "reward")});
  }
  t.measurements.clear();
  for (const auto& m : j.at("measurements")) {
    t.measurements.push_back(
        {read_required<int>(m, "day"), read_required<double>(m, "inr")});
  }
}

PatientSimulator::PatientSimulator(const DoseResponseModel& model,
                                   const PatientProfile& patient)
    : PatientSimulator(model, patient,
                       make_stream(patient.seed, 0, StreamTag::kMeasurement)) {}

PatientSimulator::PatientSimulator(const DoseResponseModel& model,
                                   const PatientProfile& patient,
                                   Rng measurement_rng)
    : model_(&model),
      params_(patient.latent),
      state_(model.initial_state()),
      rng_(std::move(measurement_rng)),
      latent_(patient.latent.baseline_inr) {
  params_.validate();
  state_.day = 1;
}

double PatientSimulator::measure() {
  return model_->observe_inr(latent_, params_, rng_);
}

double PatientSimulator::advance(double dose) {
  auto [next, inr] = model_->step_day(state_, params_, dose);
  state_ = std::move(next);
  latent_ = inr;
  return inr;
}

DosingEnvironment::DosingEnvironment(const DoseResponseModel& model,
                                     EnvConfig config)
    : model_(&model), config_(config) {
  config_.validate();
  schedule_ = build_schedule(config_.horizon);
}

DosingState DosingEnvironment::reset(const PatientProfile& patient) {
  return reset(patient, make_stream(patient.seed, 0, StreamTag::kMeasurement));
}

DosingState DosingEnvironment::reset(const PatientProfile& patient,
                                     Rng measurement_rng) {
  sim_.emplace(*model_, patient, std::move(measurement_rng));
  state_ = DosingState{};
  state_.current_inr = sim_->measure();
  state_.history.assign(static_cast<std::size_t>(config_.history_length),
                        HistoryRecord{0.0, 0.0, 1.0});
  state_.patient = patient.covariates;
  state_.decision_index = 1;
  state_.day = 1;

  trajectory_ = Trajectory{};
  trajectory_.patient_id = patient.id;
  trajectory_.latent_inrs.reserve(static_cast<std::size_t>(config_.horizon));
  trajectory_.latent_inrs.push_back(sim_->latent_inr());
  trajectory_.measurements.push_back({1, state_.current_inr});
  done_ = false;
  return state_;
}

StepOutcome DosingEnvironment::step(double dose) {
  if (done_ || !sim_) throw DomainError("step() on a finished episode");
  const int n = state_.decision_index;
  const double cap = n == 1 ? config_.first_dose_cap : config_.dose_cap;
  const double k = dose / config_.dose_step;
  if (!(dose >= 0.0) || std::abs(k - std::round(k)) > 1e-9) {
    throw DomainError("dose " + std::to_string(dose) + " is not on the grid");
  }
  if (dose > cap + 1e-9) {
    throw DomainError("dose " + std::to_string(dose) + " exceeds the cap of " +
                      std::to_string(cap) + " mg for decision " +
                      std::to_string(n));
  }

  const int tau = schedule_[static_cast<std::size_t>(n - 1)];
  StepOutcome out;
  out.exo.daily_latent_inrs.reserve(static_cast<std::size_t>(tau));
  for (int i = 0; i < tau; ++i) {
    trajectory_.daily_doses.push_back(dose);
    const double inr = sim_->advance(dose);
    out.exo.daily_latent_inrs.push_back(inr);
    trajectory_.latent_inrs.push_back(inr);
  }
  out.exo.measured_terminal_inr = sim_->measure();
  out.reward = reward(out.exo.daily_latent_inrs, config_.reward_scale,
                      config_.target_midpoint);

  trajectory_.decisions.push_back(
      {state_.day, dose, tau, state_.current_inr, out.reward});
  trajectory_.measurements.push_back({sim_->day(), out.exo.measured_terminal_inr});

  DosingState next = state_;
  next.history.erase(next.history.begin());
  next.history.push_back(
      {state_.current_inr, dose, static_cast<double>(tau)});
  next.current_inr = out.exo.measured_terminal_inr;
  next.decision_index = n + 1;
  next.day = state_.day + tau;
  state_ = next;

  done_ = static_cast<std::size_t>(n) == schedule_.size();
  out.state = state_;
  out.done = done_;
  return out;
}

}  // namespace wdose
