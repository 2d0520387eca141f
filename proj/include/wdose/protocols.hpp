#pragma once

#include <array>
#include <initializer_list>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"
#include "wdose/cohort.hpp"
#include "wdose/environment.hpp"
#include "wdose/pkpd.hpp"

namespace wdose {

// ---------------------------------------------------------------------------
// Actions shared by the baseline protocols.

struct OneOffAdjustment {
  int day_offset = 0;  // 0 = the decision day
  double delta = 0.0;  // mg added to (or, if negative, removed from) that day
  bool skip = false;   // omit that day's dose entirely
  bool operator==(const OneOffAdjustment&) const = default;
};

// Baselines prescribe real-valued doses; nothing is snapped to the grid.
struct ProtocolAction {
  double daily_dose = 0.0;
  int next_test_in = 1;
  std::vector<OneOffAdjustment> one_off;
  bool operator==(const ProtocolAction&) const = default;
};

// Dose actually taken `offset` days after the decision.
double dose_on_day(const ProtocolAction& action, int offset);

// ---------------------------------------------------------------------------
// Intermountain (IHC chronic anticoagulation clinic) adjustment table.

enum class IntermountainZone {
  kActionPointLow,   // <= 1.59
  kRedLow,           // 1.60 - 1.79
  kYellowLow,        // 1.80 - 1.99
  kGreen,            // 2.00 - 3.00
  kYellowHigh,       // 3.01 - 3.39
  kRedHigh,          // 3.40 - 4.99
  kActionPointHigh,  // >= 5.00
};
std::string_view to_string(IntermountainZone z);

// INRs are rounded to two decimals before binning; printed bounds are
// inclusive.
IntermountainZone intermountain_zone(double inr);

struct ZoneMemory {
  int consecutive_yellow_low = 0;
  int consecutive_yellow_high = 0;
  bool post_action_high_pending = false;
  bool operator==(const ZoneMemory&) const = default;
};

std::pair<ProtocolAction, ZoneMemory> intermountain_adjust(
    double inr, double weekly_dose, const ZoneMemory& memory);

// ---------------------------------------------------------------------------
// Aurora standard-dose protocol.

enum class AuroraPhase { kInitial, kAdjust, kMaintain };

struct AuroraBin {
  double max_inr;        // inclusive upper bound after two-decimal rounding
  double change;         // fractional dose change, e.g. +0.10
  int retest_days;       // 0: use the phase's in-range interval
  bool operator==(const AuroraBin&) const = default;
};

struct AuroraConfig {
  double initial_dose = 10.0;
  double elderly_initial_dose = 5.0;
  double elderly_age = 70.0;
  std::vector<AuroraBin> bins = {
      {1.79, 0.15, 7},
      {1.99, 0.10, 7},
      {3.00, 0.0, 0},
      {1e300, -0.10, 7},
  };
  int adjust_in_range_retest = 7;
  int maintain_in_range_retest = 28;

  void validate() const;
  bool operator==(const AuroraConfig&) const = default;
};

void to_json(nlohmann::json& j, const AuroraConfig& c);
void from_json(const nlohmann::json& j, AuroraConfig& c);

// Observable information handed to a baseline at a decision point.
struct ProtocolContext {
  int day = 1;
  double measured_inr = 1.0;
  double current_daily_dose = 0.0;  // last prescribed daily dose
  std::span<const double> doses_taken;  // days 1..day-1
  const ObservableCovariates* patient = nullptr;
  int phase_first_day = 1;
  int phase_last_day = 1;
};

ProtocolAction aurora_policy(const ProtocolContext& ctx, AuroraPhase phase,
                             const AuroraConfig& config);

// ---------------------------------------------------------------------------
// Regression-based dose formulas.

struct CoefficientTable {
  std::string name;
  std::string version;
  std::string provenance;
  std::map<std::string, double, std::less<>> terms;

  // Throws ConfigError naming the missing term.
  double at(std::string_view term) const;
  void require(std::initializer_list<std::string_view> names) const;
  bool operator==(const CoefficientTable&) const = default;
};

void to_json(nlohmann::json& j, const CoefficientTable& t);
void from_json(const nlohmann::json& j, CoefficientTable& t);
CoefficientTable load_coefficients(const std::string& path);

// Shipped coefficient tables (mirrored in data/).
CoefficientTable default_iwpc_pharmacogenetic();
CoefficientTable default_iwpc_clinical();
CoefficientTable default_lenzini();

// (linear predictor)^2 / 7 mg/day. With genotype_blind the "unknown genotype"
// indicators replace the genotype terms.
double iwpc_dose(const ObservableCovariates& patient, bool pharmacogenetic,
                 const CoefficientTable& coefficients,
                 bool genotype_blind = false);

// exp(linear predictor) / 7 mg/day; recent_doses holds the daily doses taken
// 2, 3 and 4 days before the decision, in that order.
double lenzini_adjust(double inr, const ObservableCovariates& patient,
                      std::span<const double> recent_doses,
                      const CoefficientTable& coefficients,
                      double target_inr = 2.5);

// Mosteller body-surface area in m^2.
double body_surface_area(int weight_lb, int height_in);

// ---------------------------------------------------------------------------
// Phase composites.

enum class ProtocolKind {
  kAurora,
  kIwpcClinical,
  kIwpcPharmacogenetic,
  kModifiedIwpcPharmacogenetic,
  kLenzini,
  kIntermountain,
};
std::string_view to_string(ProtocolKind k);
ProtocolKind parse_protocol_kind(std::string_view s);

struct PhaseSpec {
  ProtocolKind protocol = ProtocolKind::kAurora;
  int first_day = 1;
  int last_day = 1;
  bool operator==(const PhaseSpec&) const = default;
};
void to_json(nlohmann::json& j, const PhaseSpec& p);

struct CompositeProtocol {
  std::string name;
  PhaseSpec initial;
  PhaseSpec adjustment;
  PhaseSpec maintenance;

  // Phases must partition [1, horizon]; throws ConfigError otherwise.
  void validate(int horizon) const;
  bool operator==(const CompositeProtocol&) const = default;
};

void to_json(nlohmann::json& j, const CompositeProtocol& c);
void from_json(const nlohmann::json& j, CompositeProtocol& c);

const std::vector<std::string>& composite_names();
bool is_composite_name(std::string_view name);
// One of AAA, CAA, PGAA, PGPGA, PGPGI; maintenance runs to `horizon`.
CompositeProtocol named_composite(std::string_view name, int horizon = 90);

struct ProtocolLibrary {
  AuroraConfig aurora;
  CoefficientTable iwpc_pharmacogenetic = default_iwpc_pharmacogenetic();
  CoefficientTable iwpc_clinical = default_iwpc_clinical();
  CoefficientTable lenzini = default_lenzini();
  double target_inr = 2.5;
  bool genotype_blind = false;
};

// Runs one patient through a composite. Each decision is delegated to the
// phase that owns the current day; the protocol's own retest interval sets
// the next decision day.
Trajectory compose_and_run(const CompositeProtocol& composite,
                           const PatientProfile& patient,
                           const DoseResponseModel& model,
                           const ProtocolLibrary& library,
                           const EnvConfig& env);

}  // namespace wdose
