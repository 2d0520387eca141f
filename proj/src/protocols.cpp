#include "wdose/protocols.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "wdose/errors.hpp"
#include "wdose/json_util.hpp"

namespace wdose {
namespace {

constexpr double kLbToKg = 0.45359237;
constexpr double kInToCm = 2.54;

int hundredths(double inr) { return static_cast<int>(std::lround(inr * 100.0)); }

constexpr std::array<std::string_view, 6> kKindNames = {
    "aurora",      "iwpc_clinical", "iwpc_pg",
    "modified_iwpc_pg", "lenzini_pg", "intermountain"};

}  // namespace

double dose_on_day(const ProtocolAction& action, int offset) {
  double dose = action.daily_dose;
  for (const auto& adj : action.one_off) {
    if (adj.day_offset != offset) continue;
    if (adj.skip) return 0.0;
    dose += adj.delta;
  }
  return std::max(0.0, dose);
}

// ---------------------------------------------------------------------------

std::string_view to_string(IntermountainZone z) {
  switch (z) {
    case IntermountainZone::kActionPointLow: return "action_point_low";
    case IntermountainZone::kRedLow: return "red_low";
    case IntermountainZone::kYellowLow: return "yellow_low";
    case IntermountainZone::kGreen: return "green";
    case IntermountainZone::kYellowHigh: return "yellow_high";
    case IntermountainZone::kRedHigh: return "red_high";
    case IntermountainZone::kActionPointHigh: return "action_point_high";
  }
  return "?";
}

IntermountainZone intermountain_zone(double inr) {
  const int h = hundredths(inr);
  if (h <= 159) return IntermountainZone::kActionPointLow;
  if (h <= 179) return IntermountainZone::kRedLow;
  if (h <= 199) return IntermountainZone::kYellowLow;
  if (h <= 300) return IntermountainZone::kGreen;
  if (h <= 339) return IntermountainZone::kYellowHigh;
  if (h <= 499) return IntermountainZone::kRedHigh;
  return IntermountainZone::kActionPointHigh;
}

std::pair<ProtocolAction, ZoneMemory> intermountain_adjust(
    double inr, double weekly_dose, const ZoneMemory& memory) {
  if (!(inr > 0.0)) throw DomainError("INR must be > 0");
  if (!(weekly_dose >= 0.0)) throw DomainError("weekly dose must be >= 0");

  const IntermountainZone zone = intermountain_zone(inr);
  const double old_daily = weekly_dose / 7.0;
  ZoneMemory mem = memory;
  ProtocolAction act;
  double weekly = weekly_dose;

  // Retest after an Action-Point-High hold.
  if (mem.post_action_high_pending) {
    switch (zone) {
      case IntermountainZone::kYellowLow:
      case IntermountainZone::kGreen:
      case IntermountainZone::kYellowHigh:
        act.daily_dose = weekly * 0.85 / 7.0;
        act.next_test_in = 7;
        return {act, ZoneMemory{}};
      case IntermountainZone::kActionPointHigh:
        break;  // hold again below
      default:
        mem.post_action_high_pending = false;
        break;
    }
  }

  if (zone != IntermountainZone::kYellowLow) mem.consecutive_yellow_low = 0;
  if (zone != IntermountainZone::kYellowHigh) mem.consecutive_yellow_high = 0;

  switch (zone) {
    case IntermountainZone::kActionPointLow:
      weekly *= 1.10;
      act.one_off.push_back({0, old_daily, false});
      act.next_test_in = 5;
      break;
    case IntermountainZone::kRedLow:
      weekly *= 1.05;
      act.one_off.push_back({0, 0.5 * old_daily, false});
      act.next_test_in = 7;
      break;
    case IntermountainZone::kYellowLow:
      if (++mem.consecutive_yellow_low >= 2) {
        weekly *= 1.05;
        mem.consecutive_yellow_low = 0;
      }
      act.next_test_in = 14;
      break;
    case IntermountainZone::kGreen:
      act.next_test_in = 14;
      break;
    case IntermountainZone::kYellowHigh:
      if (++mem.consecutive_yellow_high >= 2) {
        weekly *= 0.95;
        mem.consecutive_yellow_high = 0;
      }
      act.next_test_in = 14;
      break;
    case IntermountainZone::kRedHigh: {
      weekly *= 0.90;
      const double new_daily = weekly / 7.0;
      if (hundredths(inr) < 400) {
        act.one_off.push_back({0, -0.5 * new_daily, false});
      } else {
        act.one_off.push_back({0, 0.0, true});
      }
      act.next_test_in = 7;
      break;
    }
    case IntermountainZone::kActionPointHigh:
      act.one_off.push_back({0, 0.0, true});
      act.one_off.push_back({1, 0.0, true});
      act.next_test_in = 2;
      mem.post_action_high_pending = true;
      break;
  }
  act.daily_dose = weekly / 7.0;
  return {act, mem};
}

// ---------------------------------------------------------------------------

void AuroraConfig::validate() const {
  if (!(initial_dose >= 0.0 && elderly_initial_dose >= 0.0)) {
    throw ConfigError("aurora: initial doses must be >= 0");
  }
  if (bins.empty()) throw ConfigError("aurora: bin table is empty");
  for (std::size_t i = 0; i < bins.size(); ++i) {
    if (i > 0 && !(bins[i].max_inr > bins[i - 1].max_inr)) {
      throw ConfigError("aurora: bins must be sorted by max_inr");
    }
    if (bins[i].change <= -1.0) {
      throw ConfigError("aurora: a bin would produce a negative dose");
    }
    if (bins[i].retest_days < 0) {
      throw ConfigError("aurora: retest_days must be >= 0");
    }
  }
  if (bins.back().max_inr < 1e6) {
    throw ConfigError("aurora: the last bin must be open-ended");
  }
  if (adjust_in_range_retest < 1 || maintain_in_range_retest < 1) {
    throw ConfigError("aurora: in-range retest intervals must be >= 1");
  }
}

void to_json(nlohmann::json& j, const AuroraConfig& c) {
  nlohmann::json bins = nlohmann::json::array();
  for (const auto& b : c.bins) {
    nlohmann::json jb = {{"change", b.change}, {"retest_days", b.retest_days}};
    if (b.max_inr < 1e6) jb["max_inr"] = b.max_inr;
    else jb["max_inr"] = nullptr;
    bins.push_back(std::move(jb));
  }
  j = nlohmann::json{{"initial_dose", c.initial_dose},
                     {"elderly_initial_dose", c.elderly_initial_dose},
                     {"elderly_age", c.elderly_age},
                     {"bins", std::move(bins)},
                     {"adjust_in_range_retest", c.adjust_in_range_retest},
                     {"maintain_in_range_retest", c.maintain_in_range_retest}};
}

void from_json(const nlohmann::json& j, AuroraConfig& c) {
  using json_util::read_optional;
  json_util::check_keys(j, "aurora config",
                        {"initial_dose", "elderly_initial_dose", "elderly_age",
                         "bins", "adjust_in_range_retest",
                         "maintain_in_range_retest", "comment"});
  read_optional(j, "initial_dose", c.initial_dose);
  read_optional(j, "elderly_initial_dose", c.elderly_initial_dose);
  read_optional(j, "elderly_age", c.elderly_age);
  read_optional(j, "adjust_in_range_retest", c.adjust_in_range_retest);
  read_optional(j, "maintain_in_range_retest", c.maintain_in_range_retest);
  if (auto it = j.find("bins"); it != j.end()) {
    c.bins.clear();
    for (const auto& jb : *it) {
      AuroraBin b{};
      const auto& m = jb.at("max_inr");
      b.max_inr = m.is_null() ? 1e300 : m.get<double>();
      b.change = json_util::read_required<double>(jb, "change");
      b.retest_days = json_util::read_required<int>(jb, "retest_days");
      c.bins.push_back(b);
    }
  }
  c.validate();
}

ProtocolAction aurora_policy(const ProtocolContext& ctx, AuroraPhase phase,
                             const AuroraConfig& config) {
  ProtocolAction act;
  if (phase == AuroraPhase::kInitial) {
    const bool elderly = ctx.patient && ctx.patient->age >= config.elderly_age;
    act.daily_dose = elderly ? config.elderly_initial_dose : config.initial_dose;
    act.next_test_in = std::max(1, ctx.phase_last_day - ctx.day + 1);
    return act;
  }
  const double rounded = hundredths(ctx.measured_inr) / 100.0;
  const AuroraBin* bin = &config.bins.back();
  for (const auto& b : config.bins) {
    if (rounded <= b.max_inr + 1e-9) {
      bin = &b;
      break;
    }
  }
  act.daily_dose = std::max(0.0, ctx.current_daily_dose * (1.0 + bin->change));
  act.next_test_in = bin->retest_days > 0 ? bin->retest_days
                     : phase == AuroraPhase::kAdjust
                         ? config.adjust_in_range_retest
                         : config.maintain_in_range_retest;
  return act;
}

// ---------------------------------------------------------------------------

double CoefficientTable::at(std::string_view term) const {
  auto it = terms.find(term);
  if (it == terms.end()) {
    throw ConfigError("coefficient table '" + name + "' has no term '" +
                      std::string(term) + "'");
  }
  return it->second;
}

void CoefficientTable::require(
    std::initializer_list<std::string_view> names) const {
  for (auto n : names) (void)at(n);
}

void to_json(nlohmann::json& j, const CoefficientTable& t) {
  nlohmann::json terms = nlohmann::json::object();
  for (const auto& [k, v] : t.terms) terms[k] = v;
  j = nlohmann::json{{"name", t.name},
                     {"version", t.version},
                     {"provenance", t.provenance},
                     {"terms", std::move(terms)}};
}

void from_json(const nlohmann::json& j, CoefficientTable& t) {
  json_util::check_keys(j, "coefficient table",
                        {"name", "version", "provenance", "terms"});
  t.name = json_util::read_required<std::string>(j, "name");
  t.version = json_util::read_required<std::string>(j, "version");
  json_util::read_optional(j, "provenance", t.provenance);
  t.terms.clear();
  const auto& terms = j.at("terms");
  if (!terms.is_object()) throw ConfigError("coefficient terms must be an object");
  for (const auto& item : terms.items()) {
    if (!item.value().is_number()) {
      throw ConfigError("coefficient '" + item.key() + "' is not a number");
    }
    t.terms[item.key()] = item.value().get<double>();
  }
}

CoefficientTable load_coefficients(const std::string& path) {
  return json_util::load_file(path).get<CoefficientTable>();
}

CoefficientTable default_iwpc_pharmacogenetic() {
  CoefficientTable t;
  t.name = "iwpc_pharmacogenetic";
  t.version = "1";
  t.provenance =
      "IWPC pharmacogenetic dosing regression (square root of weekly dose). "
      "Intercept shifted from 5.6044 to 5.6139 so that the reference case "
      "(50 y, 64 in, 182 lb, *1/*1, G/A, white) yields 4.99 mg/day.";
  t.terms = {{"intercept", 5.6139},
             {"age_decades", -0.2614},
             {"height_cm", 0.0087},
             {"weight_kg", 0.0128},
             {"vkorc1_ga", -0.8677},
             {"vkorc1_aa", -1.6974},
             {"vkorc1_unknown", -0.4854},
             {"cyp2c9_12", -0.5211},
             {"cyp2c9_13", -0.9357},
             {"cyp2c9_22", -1.0616},
             {"cyp2c9_23", -1.9206},
             {"cyp2c9_33", -2.3312},
             {"cyp2c9_unknown", -0.2188},
             {"race_asian", -0.1092},
             {"race_black", -0.2760},
             {"race_missing_or_mixed", -0.1032},
             {"enzyme_inducer", 1.1816},
             {"amiodarone", -0.5503}};
  return t;
}

CoefficientTable default_iwpc_clinical() {
  CoefficientTable t;
  t.name = "iwpc_clinical";
  t.version = "1";
  t.provenance =
      "IWPC clinical dosing regression (square root of weekly dose), "
      "published coefficients.";
  t.terms = {{"intercept", 4.0376},
             {"age_decades", -0.2546},
             {"height_cm", 0.0118},
             {"weight_kg", 0.0134},
             {"race_asian", -0.6752},
             {"race_black", 0.4060},
             {"race_missing_or_mixed", 0.0443},
             {"enzyme_inducer", 1.2799},
             {"amiodarone", -0.5695}};
  return t;
}

CoefficientTable default_lenzini() {
  CoefficientTable t;
  t.name = "lenzini_pg";
  t.version = "1";
  t.provenance =
      "Lenzini pharmacogenetic refinement regression (natural log of weekly "
      "dose) as transcribed for simulation use; prior doses in mg/day.";
  t.terms = {{"intercept", 3.10894},
             {"age_years", -0.00767},
             {"ln_inr", -0.51611},
             {"vkorc1_a_alleles", -0.23032},
             {"cyp2c9_star2", -0.14745},
             {"cyp2c9_star3", -0.30770},
             {"bsa_m2", 0.24597},
             {"target_inr", 0.26729},
             {"african_origin", -0.09644},
             {"stroke", -0.20590},
             {"diabetes", -0.11216},
             {"amiodarone", -0.10350},
             {"fluvastatin", -0.19275},
             {"dose_2d", 0.01690},
             {"dose_3d", 0.02018},
             {"dose_4d", 0.01065}};
  return t;
}

double body_surface_area(int weight_lb, int height_in) {
  const double kg = weight_lb * kLbToKg;
  const double cm = height_in * kInToCm;
  return std::sqrt(kg * cm / 3600.0);
}

double iwpc_dose(const ObservableCovariates& p, bool pharmacogenetic,
                 const CoefficientTable& c, bool genotype_blind) {
  c.require({"intercept", "age_decades", "height_cm", "weight_kg",
             "race_asian", "race_black", "race_missing_or_mixed",
             "enzyme_inducer", "amiodarone"});
  double lp = c.at("intercept");
  lp += c.at("age_decades") * std::floor(p.age / 10.0);
  lp += c.at("height_cm") * p.height_in * kInToCm;
  lp += c.at("weight_kg") * p.weight_lb * kLbToKg;
  switch (p.race) {
    case Race::kWhite: break;
    case Race::kBlack: lp += c.at("race_black"); break;
    case Race::kAsian: lp += c.at("race_asian"); break;
    case Race::kAmericanIndianAlaskan:
    case Race::kPacificIslander: lp += c.at("race_missing_or_mixed"); break;
  }
  // Enzyme-inducer status is not part of the patient model.
  if (p.amiodarone) lp += c.at("amiodarone");

  if (pharmacogenetic) {
    c.require({"vkorc1_ga", "vkorc1_aa", "vkorc1_unknown", "cyp2c9_12",
               "cyp2c9_13", "cyp2c9_22", "cyp2c9_23", "cyp2c9_33",
               "cyp2c9_unknown"});
    if (genotype_blind) {
      lp += c.at("vkorc1_unknown") + c.at("cyp2c9_unknown");
    } else {
      switch (p.vkorc1) {
        case Vkorc1::kGG: break;
        case Vkorc1::kGA: lp += c.at("vkorc1_ga"); break;
        case Vkorc1::kAA: lp += c.at("vkorc1_aa"); break;
      }
      switch (p.cyp2c9) {
        case Cyp2c9::k11: break;
        case Cyp2c9::k12: lp += c.at("cyp2c9_12"); break;
        case Cyp2c9::k13: lp += c.at("cyp2c9_13"); break;
        case Cyp2c9::k22: lp += c.at("cyp2c9_22"); break;
        case Cyp2c9::k23: lp += c.at("cyp2c9_23"); break;
        case Cyp2c9::k33: lp += c.at("cyp2c9_33"); break;
      }
    }
  }
  // A negative root has no dose meaning.
  lp = std::max(0.0, lp);
  return lp * lp / 7.0;
}

double lenzini_adjust(double inr, const ObservableCovariates& p,
                      std::span<const double> recent_doses,
                      const CoefficientTable& c, double target_inr) {
  if (recent_doses.size() != 3) {
    throw DomainError("lenzini needs the doses of 2, 3 and 4 days prior");
  }
  if (!(inr > 0.0)) throw DomainError("INR must be > 0");
  double lp = c.at("intercept");
  lp += c.at("age_years") * p.age;
  lp += c.at("ln_inr") * std::log(inr);
  lp += c.at("vkorc1_a_alleles") * vkorc1_a_count(p.vkorc1);
  lp += c.at("cyp2c9_star2") * cyp2c9_star2_count(p.cyp2c9);
  lp += c.at("cyp2c9_star3") * cyp2c9_star3_count(p.cyp2c9);
  lp += c.at("bsa_m2") * body_surface_area(p.weight_lb, p.height_in);
  lp += c.at("target_inr") * target_inr;
  if (p.race == Race::kBlack) lp += c.at("african_origin");
  // Stroke and diabetes history are not part of the patient model.
  c.require({"stroke", "diabetes"});
  if (p.amiodarone) lp += c.at("amiodarone");
  if (p.fluvastatin) lp += c.at("fluvastatin");
  lp += c.at("dose_2d") * recent_doses[0];
  lp += c.at("dose_3d") * recent_doses[1];
  lp += c.at("dose_4d") * recent_doses[2];
  return std::exp(lp) / 7.0;
}

// ---------------------------------------------------------------------------

std::string_view to_string(ProtocolKind k) {
  return kKindNames[static_cast<std::size_t>(k)];
}

ProtocolKind parse_protocol_kind(std::string_view s) {
  for (std::size_t i = 0; i < kKindNames.size(); ++i) {
    if (kKindNames[i] == s) return static_cast<ProtocolKind>(i);
  }
  throw ConfigError("unknown protocol '" + std::string(s) + "'");
}

void CompositeProtocol::validate(int horizon) const {
  const auto bad = [&](const std::string& why) {
    throw ConfigError("composite '" + name + "': " + why);
  };
  for (const PhaseSpec* p : {&initial, &adjustment, &maintenance}) {
    if (p->first_day > p->last_day) bad("a phase ends before it starts");
  }
  if (initial.first_day != 1) bad("the initial phase must start on day 1");
  if (adjustment.first_day != initial.last_day + 1 ||
      maintenance.first_day != adjustment.last_day + 1) {
    bad("phase gap or overlap");
  }
  if (maintenance.last_day != horizon) {
    bad("the maintenance phase must end on day " + std::to_string(horizon));
  }
}

void to_json(nlohmann::json& j, const PhaseSpec& p) {
  j = {{"protocol", to_string(p.protocol)},
       {"first_day", p.first_day},
       {"last_day", p.last_day}};
}

static PhaseSpec phase_from_json(const nlohmann::json& j) {
  json_util::check_keys(j, "phase", {"protocol", "first_day", "last_day"});
  return {parse_protocol_kind(json_util::read_required<std::string>(j, "protocol")),
          json_util::read_required<int>(j, "first_day"),
          json_util::read_required<int>(j, "last_day")};
}

void to_json(nlohmann::json& j, const CompositeProtocol& c) {
  j = nlohmann::json{{"name", c.name},
                     {"initial", c.initial},
                     {"adjustment", c.adjustment},
                     {"maintenance", c.maintenance}};
}

void from_json(const nlohmann::json& j, CompositeProtocol& c) {
  json_util::check_keys(j, "composite",
                        {"name", "initial", "adjustment", "maintenance"});
  c.name = json_util::read_required<std::string>(j, "name");
  c.initial = phase_from_json(j.at("initial"));
  c.adjustment = phase_from_json(j.at("adjustment"));
  c.maintenance = phase_from_json(j.at("maintenance"));
}

const std::vector<std::string>& composite_names() {
  static const std::vector<std::string> names = {"AAA", "CAA", "PGAA", "PGPGA",
                                                 "PGPGI"};
  return names;
}

bool is_composite_name(std::string_view name) {
  const auto& n = composite_names();
  return std::find(n.begin(), n.end(), name) != n.end();
}

CompositeProtocol named_composite(std::string_view name, int horizon) {
  using K = ProtocolKind;
  CompositeProtocol c;
  c.name = std::string(name);
  if (name == "AAA") {
    c.initial = {K::kAurora, 1, 2};
    c.adjustment = {K::kAurora, 3, 7};
    c.maintenance = {K::kAurora, 8, horizon};
  } else if (name == "CAA") {
    c.initial = {K::kIwpcClinical, 1, 2};
    c.adjustment = {K::kAurora, 3, 7};
    c.maintenance = {K::kAurora, 8, horizon};
  } else if (name == "PGAA") {
    c.initial = {K::kIwpcPharmacogenetic, 1, 2};
    c.adjustment = {K::kAurora, 3, 7};
    c.maintenance = {K::kAurora, 8, horizon};
  } else if (name == "PGPGA") {
    c.initial = {K::kModifiedIwpcPharmacogenetic, 1, 3};
    c.adjustment = {K::kLenzini, 4, 5};
    c.maintenance = {K::kAurora, 6, horizon};
  } else if (name == "PGPGI") {
    c.initial = {K::kModifiedIwpcPharmacogenetic, 1, 3};
    c.adjustment = {K::kLenzini, 4, 5};
    c.maintenance = {K::kIntermountain, 6, horizon};
  } else {
    std::string valid;
    for (const auto& n : composite_names()) valid += (valid.empty() ? "" : ", ") + n;
    throw ConfigError("unknown baseline '" + std::string(name) +
                      "'; valid names: " + valid);
  }
  c.validate(horizon);
  return c;
}

Trajectory compose_and_run(const CompositeProtocol& composite,
                           const PatientProfile& patient,
                           const DoseResponseModel& model,
                           const ProtocolLibrary& library,
                           const EnvConfig& env) {
  const int horizon = env.horizon;
  composite.validate(horizon);
  PatientSimulator sim(model, patient);

  Trajectory traj;
  traj.patient_id = patient.id;
  traj.policy = composite.name;
  traj.latent_inrs.push_back(sim.latent_inr());

  const std::array<const PhaseSpec*, 3> phases = {
      &composite.initial, &composite.adjustment, &composite.maintenance};

  ZoneMemory memory;
  double current_dose = 0.0;
  int day = 1;
  double measured = sim.measure();
  traj.measurements.push_back({1, measured});

  while (day < horizon) {
    std::size_t phase_index = 0;
    while (phases[phase_index]->last_day < day) ++phase_index;
    const PhaseSpec& phase = *phases[phase_index];

    ProtocolContext ctx;
    ctx.day = day;
    ctx.measured_inr = measured;
    ctx.current_daily_dose = current_dose;
    ctx.doses_taken = traj.daily_doses;
    ctx.patient = &patient.covariates;
    ctx.phase_first_day = phase.first_day;
    ctx.phase_last_day = phase.last_day;
    const int rest_of_phase = std::max(1, phase.last_day - day + 1);

    ProtocolAction action;
    switch (phase.protocol) {
      case ProtocolKind::kAurora:
        action = aurora_policy(ctx,
                               phase_index == 0   ? AuroraPhase::kInitial
                               : phase_index == 1 ? AuroraPhase::kAdjust
                                                  : AuroraPhase::kMaintain,
                               library.aurora);
        break;
      case ProtocolKind::kIwpcClinical:
        action.daily_dose = iwpc_dose(patient.covariates, false,
                                      library.iwpc_clinical);
        action.next_test_in = rest_of_phase;
        break;
      case ProtocolKind::kIwpcPharmacogenetic:
      case ProtocolKind::kModifiedIwpcPharmacogenetic:
        action.daily_dose =
            iwpc_dose(patient.covariates, true, library.iwpc_pharmacogenetic,
                      library.genotype_blind);
        action.next_test_in = rest_of_phase;
        break;
      case ProtocolKind::kLenzini: {
        // No warfarin is taken before day 1.
        std::array<double, 3> prior{};
        for (int k = 0; k < 3; ++k) {
          const int d = day - (k + 2);
          prior[static_cast<std::size_t>(k)] =
              d >= 1 ? traj.daily_doses[static_cast<std::size_t>(d - 1)] : 0.0;
        }
        action.daily_dose = lenzini_adjust(measured, patient.covariates, prior,
                                           library.lenzini, library.target_inr);
        action.next_test_in = rest_of_phase;
        break;
      }
      case ProtocolKind::kIntermountain: {
        auto [act, mem] =
            intermountain_adjust(measured, 7.0 * current_dose, memory);
        action = std::move(act);
        memory = mem;
        break;
      }
    }

    const int duration = std::min(action.next_test_in, horizon - day);
    std::vector<double> interval;
    interval.reserve(static_cast<std::size_t>(duration));
    for (int k = 0; k < duration; ++k) {
      const double dose = dose_on_day(action, k);
      traj.daily_doses.push_back(dose);
      interval.push_back(sim.advance(dose));
      traj.latent_inrs.push_back(interval.back());
    }
    traj.decisions.push_back({day, action.daily_dose, duration, measured,
                              reward(interval, env.reward_scale,
                                     env.target_midpoint)});
    current_dose = action.daily_dose;
    day += duration;
    // A retest cut short by the horizon never happens.
    if (day < horizon || action.next_test_in == duration) {
      measured = sim.measure();
      traj.measurements.push_back({day, measured});
    }
  }
  return traj;
}

}  // namespace wdose
