#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "wdose/genotype.hpp"
#include "wdose/pkpd.hpp"
#include "wdose/random.hpp"

namespace wdose {

enum class Sex : std::uint8_t { kFemale, kMale };
enum class Race : std::uint8_t {
  kWhite,
  kBlack,
  kAsian,
  kAmericanIndianAlaskan,
  kPacificIslander
};

std::string_view to_string(Sex s);
std::string_view to_string(Race r);
Sex parse_sex(std::string_view s);
Race parse_race(std::string_view s);

// Everything a dosing policy is allowed to know about a patient.
struct ObservableCovariates {
  double age = 67.0;  // years
  Cyp2c9 cyp2c9 = Cyp2c9::k11;
  Vkorc1 vkorc1 = Vkorc1::kGG;
  int weight_lb = 180;
  int height_in = 67;
  Sex sex = Sex::kFemale;
  Race race = Race::kWhite;
  bool tobacco = false;
  bool amiodarone = false;
  bool fluvastatin = false;

  bool operator==(const ObservableCovariates&) const = default;
};

struct PatientProfile {
  int id = 0;
  std::uint64_t seed = 0;
  ObservableCovariates covariates;
  PkpdParameters latent;  // hidden individual dose-response parameters

  void validate() const;
  bool operator==(const PatientProfile&) const = default;
};

// Cohort files keep the hidden parameters under a "latent" key.
void to_json(nlohmann::json& j, const PatientProfile& p);
void from_json(const nlohmann::json& j, PatientProfile& p);
void to_json(nlohmann::json& j, const ObservableCovariates& c);
void from_json(const nlohmann::json& j, ObservableCovariates& c);

enum class Sensitivity : std::uint8_t { kNormal, kSensitive, kHighlySensitive };
inline constexpr std::array<Sensitivity, 3> kAllSensitivities = {
    Sensitivity::kNormal, Sensitivity::kSensitive,
    Sensitivity::kHighlySensitive};
std::string_view to_string(Sensitivity s);
Sensitivity classify_sensitivity(Cyp2c9 cyp, Vkorc1 vkorc1);
inline Sensitivity classify_sensitivity(const ObservableCovariates& c) {
  return classify_sensitivity(c.cyp2c9, c.vkorc1);
}

// A normal truncated to [lo, hi] whose underlying location/scale are chosen so
// the *truncated* distribution has the requested mean and SD.
class TruncatedNormal {
 public:
  TruncatedNormal(double target_mean, double target_sd, double lo, double hi);

  double sample(Rng& rng) const;
  double location() const { return mu_; }
  double scale() const { return sigma_; }
  double lo() const { return lo_; }
  double hi() const { return hi_; }

  // Mean and SD of N(mu, sigma) truncated to [lo, hi].
  static std::pair<double, double> truncated_moments(double mu, double sigma,
                                                     double lo, double hi);

 private:
  double mu_;
  double sigma_;
  double lo_;
  double hi_;
};

struct MomentSpec {
  double mean = 0.0;
  double sd = 1.0;
  double lo = 0.0;
  double hi = 1.0;
  bool operator==(const MomentSpec&) const = default;
};

void to_json(nlohmann::json& j, const MomentSpec& m);
void from_json(const nlohmann::json& j, MomentSpec& m);

// Population distribution of virtual patients; every categorical must sum
// to 1 within 1e-9.
struct CohortDistribution {
  MomentSpec age{67.3, 14.43, 18.0, 100.0};
  MomentSpec weight_lb{199.24, 54.71, 70.0, 500.0};
  MomentSpec height_in{66.78, 4.31, 45.0, 85.0};
  std::array<double, 6> cyp2c9 = {0.6739, 0.1486, 0.0925,
                                  0.0651, 0.0197, 0.0002};
  std::array<double, 3> vkorc1 = {0.3837, 0.4418, 0.1745};
  std::array<double, 2> sex = {0.5314, 0.4686};
  std::array<double, 5> race = {0.951799, 0.0425, 0.0039, 0.0018, 0.000001};
  double tobacco = 0.0966;
  double amiodarone = 0.1154;
  double fluvastatin = 0.0003;

  void validate() const;
  bool operator==(const CohortDistribution&) const = default;
};

void to_json(nlohmann::json& j, const CohortDistribution& d);
void from_json(const nlohmann::json& j, CohortDistribution& d);
CohortDistribution load_cohort_distribution(const std::string& path);

class CohortSampler {
 public:
  CohortSampler(CohortDistribution dist, const DoseResponseModel& model);

  PatientProfile sample_patient(Rng& rng, int id = 0,
                                std::uint64_t seed = 0) const;
  // Patient i is drawn from a stream derived only from (master_seed, i).
  PatientProfile patient_at(std::uint64_t master_seed, int index) const;
  std::vector<PatientProfile> generate_cohort(int n,
                                              std::uint64_t master_seed) const;

  const CohortDistribution& distribution() const { return dist_; }

 private:
  CohortDistribution dist_;
  const DoseResponseModel* model_;
  TruncatedNormal age_;
  TruncatedNormal weight_;
  TruncatedNormal height_;
};

// JSON-lines cohort files.
void write_cohort(std::ostream& out, const std::vector<PatientProfile>& cohort);
std::vector<PatientProfile> read_cohort(std::istream& in);
void save_cohort(const std::string& path,
                 const std::vector<PatientProfile>& cohort);
std::vector<PatientProfile> load_cohort(const std::string& path);

}  // namespace wdose
