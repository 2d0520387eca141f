#pragma once

#include <array>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "wdose/genotype.hpp"
#include "wdose/random.hpp"

namespace wdose {

// Individual (or population-typical) parameters of the dose-response model.
// These are latent: nothing in here may reach a dosing policy.
struct PkpdParameters {
  double elimination_rate = 0.0;  // 1/day
  double effect_delay = 0.0;      // mean transit time of the effect chain, days
  double ec50 = 0.0;              // mg-equivalent amount
  double emax = 0.0;              // INR span above baseline
  double hill_coefficient = 1.0;
  double baseline_inr = 1.0;
  double residual_sd = 0.0;       // log-scale SD of measurement error
  // Between-subject lognormal multipliers that produced this parameter set;
  // all 1 for population-typical values.
  double bsv_elimination = 1.0;
  double bsv_ec50 = 1.0;
  double bsv_emax = 1.0;

  // Throws DomainError if any invariant is violated.
  void validate() const;
  bool operator==(const PkpdParameters&) const = default;
};

void to_json(nlohmann::json& j, const PkpdParameters& p);
void from_json(const nlohmann::json& j, PkpdParameters& p);

struct PkpdState {
  double drug_amount = 0.0;
  std::vector<double> transit_levels;
  int day = 0;

  bool operator==(const PkpdState&) const = default;
};

// Configuration of the transit-chain model. Defaults are embedded here; the
// JSON file under data/ mirrors them.
struct PkpdConfig {
  double reference_age = 67.0;
  double reference_elimination_rate = 0.35;  // *1/*1 at the reference age
  double age_slope = 0.005;                  // fractional clearance change/yr
  double age_factor_min = 0.5;
  double age_factor_max = 1.2;
  // Clearance multiplier per CYP2C9 allele (*1, *2, *3); a genotype takes the
  // mean of its two alleles.
  std::array<double, 3> allele_clearance = {1.0, 0.6, 0.1};
  // EC50 multiplier per VKORC1 genotype (G/G, G/A, A/A).
  std::array<double, 3> vkorc1_ec50 = {1.0, 0.7, 0.45};
  double reference_ec50 = 75.0;
  double emax = 7.0;
  double hill_coefficient = 1.0;
  double effect_delay = 2.0;
  int transit_stages = 3;
  double baseline_inr = 1.0;
  double residual_sd = 0.05;
  double inr_floor = 0.5;
  // Log-scale SDs of the between-subject multipliers.
  double bsv_elimination_sd = 0.3;
  double bsv_ec50_sd = 0.3;
  double bsv_emax_sd = 0.3;

  void validate() const;
  bool operator==(const PkpdConfig&) const = default;
};

void to_json(nlohmann::json& j, const PkpdConfig& c);
void from_json(const nlohmann::json& j, PkpdConfig& c);

// Dose -> daily INR. Implementations must be immutable after construction so
// a single instance can serve many concurrent patient simulations.
class DoseResponseModel {
 public:
  virtual ~DoseResponseModel() = default;

  virtual PkpdParameters derive_population_params(double age, Cyp2c9 cyp,
                                                  Vkorc1 vkorc1) const = 0;
  virtual PkpdParameters sample_individual_params(const PkpdParameters& pop,
                                                  Rng& rng) const = 0;
  virtual PkpdState initial_state() const = 0;
  // Advances one day with `dose` mg taken that day; returns the new state and
  // the day's latent INR.
  virtual std::pair<PkpdState, double> step_day(const PkpdState& state,
                                                const PkpdParameters& params,
                                                double dose) const = 0;
  virtual double observe_inr(double latent_inr, const PkpdParameters& params,
                             Rng& rng) const = 0;
};

// One-compartment daily-superposition PK feeding an inhibitory Hill effect
// through a chain of first-order transit compartments.
class TransitChainModel final : public DoseResponseModel {
 public:
  explicit TransitChainModel(PkpdConfig config = {});

  const PkpdConfig& config() const { return config_; }

  // Clearance multiplier of a genotype relative to *1/*1.
  double clearance_multiplier(Cyp2c9 cyp) const;
  double ec50_multiplier(Vkorc1 vkorc1) const;
  double age_factor(double age) const;

  PkpdParameters derive_population_params(double age, Cyp2c9 cyp,
                                          Vkorc1 vkorc1) const override;
  PkpdParameters sample_individual_params(const PkpdParameters& pop,
                                          Rng& rng) const override;
  PkpdState initial_state() const override;
  std::pair<PkpdState, double> step_day(const PkpdState& state,
                                        const PkpdParameters& params,
                                        double dose) const override;
  double observe_inr(double latent_inr, const PkpdParameters& params,
                     Rng& rng) const override;

 private:
  PkpdConfig config_;
};

PkpdConfig load_pkpd_config(const std::string& path);

}  // namespace wdose
