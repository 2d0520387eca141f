#include "wdose/pkpd.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "wdose/errors.hpp"
#include "wdose/json_util.hpp"

namespace wdose {
namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw DomainError(what);
}

void require_config(bool ok, const std::string& what) {
  if (!ok) throw ConfigError("pkpd config: " + what);
}

bool positive_finite(double x) { return std::isfinite(x) && x > 0.0; }

}  // namespace

void PkpdParameters::validate() const {
  require(positive_finite(elimination_rate), "elimination_rate must be > 0");
  require(positive_finite(effect_delay), "effect_delay must be > 0");
  require(positive_finite(ec50), "ec50 must be > 0");
  require(positive_finite(emax), "emax must be > 0");
  require(positive_finite(hill_coefficient), "hill_coefficient must be > 0");
  require(std::isfinite(baseline_inr) && baseline_inr >= 0.8 &&
              baseline_inr <= 1.5,
          "baseline_inr must lie in [0.8, 1.5]");
  require(std::isfinite(residual_sd) && residual_sd >= 0.0,
          "residual_sd must be >= 0");
  require(positive_finite(bsv_elimination) && positive_finite(bsv_ec50) &&
              positive_finite(bsv_emax),
          "bsv multipliers must be > 0");
}

void to_json(nlohmann::json& j, const PkpdParameters& p) {
  j = nlohmann::json{{"elimination_rate", p.elimination_rate},
                     {"effect_delay", p.effect_delay},
                     {"ec50", p.ec50},
                     {"emax", p.emax},
                     {"hill_coefficient", p.hill_coefficient},
                     {"baseline_inr", p.baseline_inr},
                     {"residual_sd", p.residual_sd},
                     {"bsv_multipliers",
                      {{"elimination_rate", p.bsv_elimination},
                       {"ec50", p.bsv_ec50},
                       {"emax", p.bsv_emax}}}};
}

void from_json(const nlohmann::json& j, PkpdParameters& p) {
  using json_util::read_required;
  p.elimination_rate = read_required<double>(j, "elimination_rate");
  p.effect_delay = read_required<double>(j, "effect_delay");
  p.ec50 = read_required<double>(j, "ec50");
  p.emax = read_required<double>(j, "emax");
  p.hill_coefficient = read_required<double>(j, "hill_coefficient");
  p.baseline_inr = read_required<double>(j, "baseline_inr");
  p.residual_sd = read_required<double>(j, "residual_sd");
  if (auto it = j.find("bsv_multipliers"); it != j.end()) {
    p.bsv_elimination = read_required<double>(*it, "elimination_rate");
    p.bsv_ec50 = read_required<double>(*it, "ec50");
    p.bsv_emax = read_required<double>(*it, "emax");
  }
}

void PkpdConfig::validate() const {
  require_config(reference_age >= 18.0 && reference_age <= 100.0,
                 "reference_age outside [18, 100]");
  require_config(positive_finite(reference_elimination_rate),
                 "reference_elimination_rate must be > 0");
  require_config(std::isfinite(age_slope), "age_slope must be finite");
  require_config(positive_finite(age_factor_min) &&
                     age_factor_max >= age_factor_min,
                 "age factor clamp must satisfy 0 < min <= max");
  for (double m : allele_clearance) {
    require_config(positive_finite(m), "allele_clearance must be > 0");
  }
  for (double m : vkorc1_ec50) {
    require_config(positive_finite(m), "vkorc1_ec50 must be > 0");
  }
  require_config(positive_finite(reference_ec50), "reference_ec50 must be > 0");
  require_config(positive_finite(emax), "emax must be > 0");
  require_config(positive_finite(hill_coefficient),
                 "hill_coefficient must be > 0");
  require_config(positive_finite(effect_delay), "effect_delay must be > 0");
  require_config(transit_stages >= 1, "transit_stages must be >= 1");
  require_config(baseline_inr >= 0.8 && baseline_inr <= 1.5,
                 "baseline_inr outside [0.8, 1.5]");
  require_config(residual_sd >= 0.0, "residual_sd must be >= 0");
  require_config(inr_floor > 0.0, "inr_floor must be > 0");
  require_config(bsv_elimination_sd >= 0.0 && bsv_ec50_sd >= 0.0 &&
                     bsv_emax_sd >= 0.0,
                 "bsv SDs must be >= 0");
}

void to_json(nlohmann::json& j, const PkpdConfig& c) {
  j = nlohmann::json{
      {"reference_age", c.reference_age},
      {"reference_elimination_rate", c.reference_elimination_rate},
      {"age_slope", c.age_slope},
      {"age_factor_min", c.age_factor_min},
      {"age_factor_max", c.age_factor_max},
      {"allele_clearance",
       {{"*1", c.allele_clearance[0]},
        {"*2", c.allele_clearance[1]},
        {"*3", c.allele_clearance[2]}}},
      {"vkorc1_ec50",
       {{"G/G", c.vkorc1_ec50[0]},
        {"G/A", c.vkorc1_ec50[1]},
        {"A/A", c.vkorc1_ec50[2]}}},
      {"reference_ec50", c.reference_ec50},
      {"emax", c.emax},
      {"hill_coefficient", c.hill_coefficient},
      {"effect_delay", c.effect_delay},
      {"transit_stages", c.transit_stages},
      {"baseline_inr", c.baseline_inr},
      {"residual_sd", c.residual_sd},
      {"inr_floor", c.inr_floor},
      {"bsv_log_sd",
       {{"elimination_rate", c.bsv_elimination_sd},
        {"ec50", c.bsv_ec50_sd},
        {"emax", c.bsv_emax_sd}}}};
}

void from_json(const nlohmann::json& j, PkpdConfig& c) {
  using json_util::read_optional;
  json_util::check_keys(
      j, "pkpd config",
      {"reference_age", "reference_elimination_rate", "age_slope",
       "age_factor_min", "age_factor_max", "allele_clearance", "vkorc1_ec50",
       "reference_ec50", "emax", "hill_coefficient", "effect_delay",
       "transit_stages", "baseline_inr", "residual_sd", "inr_floor",
       "bsv_log_sd", "comment"});
  read_optional(j, "reference_age", c.reference_age);
  read_optional(j, "reference_elimination_rate", c.reference_elimination_rate);
  read_optional(j, "age_slope", c.age_slope);
  read_optional(j, "age_factor_min", c.age_factor_min);
  read_optional(j, "age_factor_max", c.age_factor_max);
  if (auto it = j.find("allele_clearance"); it != j.end()) {
    json_util::check_keys(*it, "allele_clearance", {"*1", "*2", "*3"});
    read_optional(*it, "*1", c.allele_clearance[0]);
    read_optional(*it, "*2", c.allele_clearance[1]);
    read_optional(*it, "*3", c.allele_clearance[2]);
  }
  if (auto it = j.find("vkorc1_ec50"); it != j.end()) {
    json_util::check_keys(*it, "vkorc1_ec50", {"G/G", "G/A", "A/A"});
    read_optional(*it, "G/G", c.vkorc1_ec50[0]);
    read_optional(*it, "G/A", c.vkorc1_ec50[1]);
    read_optional(*it, "A/A", c.vkorc1_ec50[2]);
  }
  read_optional(j, "reference_ec50", c.reference_ec50);
  read_optional(j, "emax", c.emax);
  read_optional(j, "hill_coefficient", c.hill_coefficient);
  read_optional(j, "effect_delay", c.effect_delay);
  read_optional(j, "transit_stages", c.transit_stages);
  read_optional(j, "baseline_inr", c.baseline_inr);
  read_optional(j, "residual_sd", c.residual_sd);
  read_optional(j, "inr_floor", c.inr_floor);
  if (auto it = j.find("bsv_log_sd"); it != j.end()) {
    json_util::check_keys(*it, "bsv_log_sd",
                          {"elimination_rate", "ec50", "emax"});
    read_optional(*it, "elimination_rate", c.bsv_elimination_sd);
    read_optional(*it, "ec50", c.bsv_ec50_sd);
    read_optional(*it, "emax", c.bsv_emax_sd);
  }
  c.validate();
}

PkpdConfig load_pkpd_config(const std::string& path) {
  return json_util::load_file(path).get<PkpdConfig>();
}

TransitChainModel::TransitChainModel(PkpdConfig config)
    : config_(std::move(config)) {
  config_.validate();
}

double TransitChainModel::clearance_multiplier(Cyp2c9 cyp) const {
  const auto a = cyp2c9_alleles(cyp);
  return 0.5 * (config_.allele_clearance[a.first - 1] +
                config_.allele_clearance[a.second - 1]);
}

double TransitChainModel::ec50_multiplier(Vkorc1 vkorc1) const {
  return config_.vkorc1_ec50[index_of(vkorc1)];
}

double TransitChainModel::age_factor(double age) const {
  const double f = 1.0 - config_.age_slope * (age - config_.reference_age);
  return std::clamp(f, config_.age_factor_min, config_.age_factor_max);
}

PkpdParameters TransitChainModel::derive_population_params(
    double age, Cyp2c9 cyp, Vkorc1 vkorc1) const {
  if (!(age >= 18.0 && age <= 100.0)) {
    throw DomainError("age must lie in [18, 100], got " + std::to_string(age));
  }
  PkpdParameters p;
  p.elimination_rate = config_.reference_elimination_rate *
                       clearance_multiplier(cyp) * age_factor(age);
  p.effect_delay = config_.effect_delay;
  p.ec50 = config_.reference_ec50 * ec50_multiplier(vkorc1);
  p.emax = config_.emax;
  p.hill_coefficient = config_.hill_coefficient;
  p.baseline_inr = config_.baseline_inr;
  p.residual_sd = config_.residual_sd;
  return p;
}

PkpdParameters TransitChainModel::sample_individual_params(
    const PkpdParameters& pop, Rng& rng) const {
  PkpdParameters p = pop;
  // Fixed draw order: elimination, ec50, emax.
  p.bsv_elimination = std::exp(config_.bsv_elimination_sd * standard_normal(rng));
  p.bsv_ec50 = std::exp(config_.bsv_ec50_sd * standard_normal(rng));
  p.bsv_emax = std::exp(config_.bsv_emax_sd * standard_normal(rng));
  p.elimination_rate *= p.bsv_elimination;
  p.ec50 *= p.bsv_ec50;
  p.emax *= p.bsv_emax;
  return p;
}

PkpdState TransitChainModel::initial_state() const {
  PkpdState s;
  s.transit_levels.assign(static_cast<std::size_t>(config_.transit_stages), 0.0);
  return s;
}

std::pair<PkpdState, double> TransitChainModel::step_day(
    const PkpdState& state, const PkpdParameters& params, double dose) const {
  if (!(dose >= 0.0) || !std::isfinite(dose)) {
    throw DomainError("dose must be a finite value >= 0");
  }
  PkpdState next = state;
  next.drug_amount = state.drug_amount * std::exp(-params.elimination_rate) + dose;

  const double c = next.drug_amount;
  double effect = 0.0;
  if (c > 0.0) {
    const double ch = std::pow(c, params.hill_coefficient);
    effect = ch / (std::pow(params.ec50, params.hill_coefficient) + ch);
  }

  // Each stage relaxes towards its upstream value over one day.
  const double stages = static_cast<double>(next.transit_levels.size());
  const double frac = 1.0 - std::exp(-stages / params.effect_delay);
  double upstream = effect;
  for (double& level : next.transit_levels) {
    level += frac * (upstream - level);
    upstream = level;
  }
  next.day = state.day + 1;

  const double terminal = next.transit_levels.empty() ? effect : upstream;
  return {next, params.baseline_inr + params.emax * terminal};
}

double TransitChainModel::observe_inr(double latent_inr,
                                      const PkpdParameters& params,
                                      Rng& rng) const {
  if (!(latent_inr > 0.0)) throw DomainError("latent INR must be > 0");
  // The draw is consumed even when residual_sd is 0 so that stream positions
  // do not depend on the noise setting.
  const double eps = params.residual_sd * standard_normal(rng);
  return std::max(config_.inr_floor, latent_inr * std::exp(eps));
}

}  // namespace wdose
