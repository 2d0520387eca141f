#include "wdose/cohort.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <numbers>
#include <ostream>

#include "wdose/errors.hpp"
#include "wdose/json_util.hpp"

namespace wdose {
namespace {

constexpr std::array<std::string_view, 2> kSexNames = {"female", "male"};
constexpr std::array<std::string_view, 5> kRaceNames = {
    "white", "black", "asian", "american-indian/alaskan", "pacific-islander"};
constexpr std::array<std::string_view, 3> kSensitivityNames = {
    "normal", "sensitive", "highly_sensitive"};

// Rows: VKORC1 G/G, G/A, A/A. Columns: CYP2C9 *1/*1 .. *3/*3.
constexpr Sensitivity N = Sensitivity::kNormal;
constexpr Sensitivity S = Sensitivity::kSensitive;
constexpr Sensitivity H = Sensitivity::kHighlySensitive;
constexpr std::array<std::array<Sensitivity, 6>, 3> kSensitivityGrid = {{
    {N, N, S, S, S, H},
    {N, S, S, S, H, H},
    {S, S, H, H, H, H},
}};

double normal_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}
double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

template <std::size_t N>
std::size_t sample_categorical(const std::array<double, N>& p, Rng& rng) {
  const double u = uniform01(rng);
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < N; ++i) {
    acc += p[i];
    if (u < acc) return i;
  }
  return N - 1;
}

bool bernoulli(double p, Rng& rng) { return uniform01(rng) < p; }

template <std::size_t N>
void check_categorical(const std::array<double, N>& p, const char* name) {
  double sum = 0.0;
  for (double x : p) {
    if (!(x >= 0.0 && x <= 1.0)) {
      throw ConfigError(std::string("cohort distribution: ") + name +
                        " has a probability outside [0, 1]");
    }
    sum += x;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw ConfigError(std::string("cohort distribution: ") + name +
                      " probabilities sum to " + std::to_string(sum));
  }
}

void check_moments(const MomentSpec& m, const char* name) {
  if (!(m.lo < m.hi && m.sd > 0.0 && m.mean > m.lo && m.mean < m.hi)) {
    throw ConfigError(std::string("cohort distribution: invalid ") + name +
                      " moments/range");
  }
}

template <std::size_t N>
nlohmann::json named_probs(const std::array<double, N>& p,
                           const std::array<std::string_view, N>& names) {
  nlohmann::json j = nlohmann::json::object();
  for (std::size_t i = 0; i < N; ++i) j[std::string(names[i])] = p[i];
  return j;
}

template <std::size_t N>
void read_named_probs(const nlohmann::json& j, std::array<double, N>& p,
                      const std::array<std::string_view, N>& names,
                      const char* what) {
  if (!j.is_object() || j.size() != N) {
    throw ConfigError(std::string("cohort distribution: ") + what +
                      " must list exactly " + std::to_string(N) + " entries");
  }
  for (std::size_t i = 0; i < N; ++i) {
    p[i] = json_util::read_required<double>(j, std::string(names[i]).c_str());
  }
}

std::array<std::string_view, 6> cyp_names() {
  std::array<std::string_view, 6> n;
  for (auto g : kAllCyp2c9) n[index_of(g)] = to_string(g);
  return n;
}
std::array<std::string_view, 3> vkorc_names() {
  std::array<std::string_view, 3> n;
  for (auto g : kAllVkorc1) n[index_of(g)] = to_string(g);
  return n;
}

}  // namespace

void to_json(nlohmann::json& j, const MomentSpec& m) {
  j = {{"mean", m.mean}, {"sd", m.sd}, {"min", m.lo}, {"max", m.hi}};
}
void from_json(const nlohmann::json& j, MomentSpec& m) {
  json_util::check_keys(j, "moment spec", {"mean", "sd", "min", "max"});
  m.mean = json_util::read_required<double>(j, "mean");
  m.sd = json_util::read_required<double>(j, "sd");
  m.lo = json_util::read_required<double>(j, "min");
  m.hi = json_util::read_required<double>(j, "max");
}


std::string_view to_string(Sex s) { return kSexNames[static_cast<int>(s)]; }
std::string_view to_string(Race r) { return kRaceNames[static_cast<int>(r)]; }
std::string_view to_string(Sensitivity s) {
  return kSensitivityNames[static_cast<int>(s)];
}

Sex parse_sex(std::string_view s) {
  for (std::size_t i = 0; i < kSexNames.size(); ++i) {
    if (kSexNames[i] == s) return static_cast<Sex>(i);
  }
  throw ConfigError("unknown gender '" + std::string(s) + "'");
}

Race parse_race(std::string_view s) {
  for (std::size_t i = 0; i < kRaceNames.size(); ++i) {
    if (kRaceNames[i] == s) return static_cast<Race>(i);
  }
  throw ConfigError("unknown race '" + std::string(s) + "'");
}

Sensitivity classify_sensitivity(Cyp2c9 cyp, Vkorc1 vkorc1) {
  return kSensitivityGrid[index_of(vkorc1)][index_of(cyp)];
}

void PatientProfile::validate() const {
  const auto& c = covariates;
  if (!(c.age >= 18.0 && c.age <= 100.0)) {
    throw DomainError("patient age outside [18, 100]");
  }
  if (c.weight_lb < 70 || c.weight_lb > 500) {
    throw DomainError("patient weight outside [70, 500] lb");
  }
  if (c.height_in < 45 || c.height_in > 85) {
    throw DomainError("patient height outside [45, 85] in");
  }
  latent.validate();
}

void to_json(nlohmann::json& j, const ObservableCovariates& c) {
  j = nlohmann::json{{"age", c.age},
                     {"cyp2c9", to_string(c.cyp2c9)},
                     {"vkorc1", to_string(c.vkorc1)},
                     {"weight_lb", c.weight_lb},
                     {"height_in", c.height_in},
                     {"gender", to_string(c.sex)},
                     {"race", to_string(c.race)},
                     {"tobacco", c.tobacco},
                     {"amiodarone", c.amiodarone},
                     {"fluvastatin", c.fluvastatin}};
}

void from_json(const nlohmann::json& j, ObservableCovariates& c) {
  using json_util::read_required;
  c.age = read_required<double>(j, "age");
  c.cyp2c9 = parse_cyp2c9(read_required<std::string>(j, "cyp2c9"));
  c.vkorc1 = parse_vkorc1(read_required<std::string>(j, "vkorc1"));
  c.weight_lb = read_required<int>(j, "weight_lb");
  c.height_in = read_required<int>(j, "height_in");
  c.sex = parse_sex(read_required<std::string>(j, "gender"));
  c.race = parse_race(read_required<std::string>(j, "race"));
  c.tobacco = read_required<bool>(j, "tobacco");
  c.amiodarone = read_required<bool>(j, "amiodarone");
  c.fluvastatin = read_required<bool>(j, "fluvastatin");
}

void to_json(nlohmann::json& j, const PatientProfile& p) {
  j = nlohmann::json{{"id", p.id}, {"seed", p.seed}};
  j.update(nlohmann::json(p.covariates));
  j["latent"] = p.latent;
}

void from_json(const nlohmann::json& j, PatientProfile& p) {
  p.id = json_util::read_required<int>(j, "id");
  p.seed = json_util::read_required<std::uint64_t>(j, "seed");
  p.covariates = j.get<ObservableCovariates>();
  p.latent = json_util::read_required<PkpdParameters>(j, "latent");
  p.validate();
}

TruncatedNormal::TruncatedNormal(double target_mean, double target_sd,
                                 double lo, double hi)
    : mu_(target_mean), sigma_(target_sd), lo_(lo), hi_(hi) {
  if (!(lo < hi && target_sd > 0.0 && target_mean > lo && target_mean < hi)) {
    throw ConfigError("truncated normal: invalid moments or bounds");
  }
  // Fixed-point moment matching; converges quickly for mild truncation.
  for (int it = 0; it < 500; ++it) {
    const auto [m, s] = truncated_moments(mu_, sigma_, lo_, hi_);
    const double dm = target_mean - m;
    const double ratio = target_sd / s;
    mu_ += dm;
    sigma_ *= ratio;
    if (std::abs(dm) < 1e-12 && std::abs(ratio - 1.0) < 1e-12) break;
  }
  const auto [m, s] = truncated_moments(mu_, sigma_, lo_, hi_);
  if (!(std::abs(m - target_mean) < 1e-6 && std::abs(s - target_sd) < 1e-6)) {
    throw ConfigError(
        "truncated normal: requested moments are not attainable on the range");
  }
}

std::pair<double, double> TruncatedNormal::truncated_moments(double mu,
                                                             double sigma,
                                                             double lo,
                                                             double hi) {
  const double a = (lo - mu) / sigma;
  const double b = (hi - mu) / sigma;
  const double z = normal_cdf(b) - normal_cdf(a);
  const double pa = normal_pdf(a);
  const double pb = normal_pdf(b);
  const double shift = (pa - pb) / z;
  const double mean = mu + sigma * shift;
  const double var =
      sigma * sigma * (1.0 + (a * pa - b * pb) / z - shift * shift);
  return {mean, std::sqrt(var)};
}

double TruncatedNormal::sample(Rng& rng) const {
  for (int attempt = 0; attempt < 100000; ++attempt) {
    const double x = mu_ + sigma_ * standard_normal(rng);
    if (x >= lo_ && x <= hi_) return x;
  }
  throw ConfigError("truncated normal: rejection sampler did not terminate");
}

void CohortDistribution::validate() const {
  check_moments(age, "age");
  check_moments(weight_lb, "weight");
  check_moments(height_in, "height");
  check_categorical(cyp2c9, "cyp2c9");
  check_categorical(vkorc1, "vkorc1");
  check_categorical(sex, "gender");
  check_categorical(race, "race");
  for (double p : {tobacco, amiodarone, fluvastatin}) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw ConfigError("cohort distribution: binary prevalence outside [0, 1]");
    }
  }
}

void to_json(nlohmann::json& j, const CohortDistribution& d) {
  j = nlohmann::json{
      {"age", d.age},
      {"weight_lb", d.weight_lb},
      {"height_in", d.height_in},
      {"cyp2c9", named_probs(d.cyp2c9, cyp_names())},
      {"vkorc1", named_probs(d.vkorc1, vkorc_names())},
      {"gender", named_probs(d.sex, kSexNames)},
      {"race", named_probs(d.race, kRaceNames)},
      {"tobacco", d.tobacco},
      {"amiodarone", d.amiodarone},
      {"fluvastatin", d.fluvastatin}};
}

void from_json(const nlohmann::json& j, CohortDistribution& d) {
  json_util::check_keys(j, "cohort distribution",
                        {"age", "weight_lb", "height_in", "cyp2c9", "vkorc1",
                         "gender", "race", "tobacco", "amiodarone",
                         "fluvastatin", "comment"});
  try {
    d.age = json_util::read_required<MomentSpec>(j, "age");
    d.weight_lb = json_util::read_required<MomentSpec>(j, "weight_lb");
    d.height_in = json_util::read_required<MomentSpec>(j, "height_in");
    read_named_probs(j.at("cyp2c9"), d.cyp2c9, cyp_names(), "cyp2c9");
    read_named_probs(j.at("vkorc1"), d.vkorc1, vkorc_names(), "vkorc1");
    read_named_probs(j.at("gender"), d.sex, kSexNames, "gender");
    read_named_probs(j.at("race"), d.race, kRaceNames, "race");
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("cohort distribution: ") + e.what());
  }
  d.tobacco = json_util::read_required<double>(j, "tobacco");
  d.amiodarone = json_util::read_required<double>(j, "amiodarone");
  d.fluvastatin = json_util::read_required<double>(j, "fluvastatin");
  d.validate();
}

CohortDistribution load_cohort_distribution(const std::string& path) {
  return json_util::load_file(path).get<CohortDistribution>();
}

CohortSampler::CohortSampler(CohortDistribution dist,
                             const DoseResponseModel& model)
    : dist_((dist.validate(), std::move(dist))),
      model_(&model),
      age_(dist_.age.mean, dist_.age.sd, dist_.age.lo, dist_.age.hi),
      weight_(dist_.weight_lb.mean, dist_.weight_lb.sd, dist_.weight_lb.lo,
              dist_.weight_lb.hi),
      height_(dist_.height_in.mean, dist_.height_in.sd, dist_.height_in.lo,
              dist_.height_in.hi) {}

PatientProfile CohortSampler::sample_patient(Rng& rng, int id,
                                             std::uint64_t seed) const {
  PatientProfile p;
  p.id = id;
  p.seed = seed;
  auto& c = p.covariates;
  // Draw order is part of the reproducibility contract.
  c.age = age_.sample(rng);
  c.cyp2c9 = static_cast<Cyp2c9>(sample_categorical(dist_.cyp2c9, rng));
  c.vkorc1 = static_cast<Vkorc1>(sample_categorical(dist_.vkorc1, rng));
  c.weight_lb = static_cast<int>(std::lround(weight_.sample(rng)));
  c.height_in = static_cast<int>(std::lround(height_.sample(rng)));
  c.sex = static_cast<Sex>(sample_categorical(dist_.sex, rng));
  c.race = static_cast<Race>(sample_categorical(dist_.race, rng));
  c.tobacco = bernoulli(dist_.tobacco, rng);
  c.amiodarone = bernoulli(dist_.amiodarone, rng);
  c.fluvastatin = bernoulli(dist_.fluvastatin, rng);
  const PkpdParameters pop =
      model_->derive_population_params(c.age, c.cyp2c9, c.vkorc1);
  p.latent = model_->sample_individual_params(pop, rng);
  return p;
}

PatientProfile CohortSampler::patient_at(std::uint64_t master_seed,
                                         int index) const {
  const std::uint64_t seed =
      derive_seed(master_seed, static_cast<std::uint64_t>(index),
                  StreamTag::kPatient);
  Rng rng(seed);
  return sample_patient(rng, index, seed);
}

std::vector<PatientProfile> CohortSampler::generate_cohort(
    int n, std::uint64_t master_seed) const {
  if (n < 1) throw DomainError("cohort size must be >= 1");
  std::vector<PatientProfile> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) out.push_back(patient_at(master_seed, i));
  return out;
}

void write_cohort(std::ostream& out,
                  const std::vector<PatientProfile>& cohort) {
  for (const auto& p : cohort) out << nlohmann::json(p).dump() << '\n';
}

std::vector<PatientProfile> read_cohort(std::istream& in) {
  std::vector<PatientProfile> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      out.push_back(nlohmann::json::parse(line).get<PatientProfile>());
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("cohort line " + std::to_string(lineno) + ": " +
                        e.what());
    } catch (const DomainError& e) {
      throw ConfigError("cohort line " + std::to_string(lineno) + ": " +
                        e.what());
    }
  }
  return out;
}

void save_cohort(const std::string& path,
                 const std::vector<PatientProfile>& cohort) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  write_cohort(out, cohort);
  if (!out) throw ConfigError("error while writing '" + path + "'");
}

std::vector<PatientProfile> load_cohort(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  return read_cohort(in);
}

}  // namespace wdose
