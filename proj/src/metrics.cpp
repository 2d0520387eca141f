#include "wdose/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "wdose/errors.hpp"
#include "wdose/json_util.hpp"

namespace wdose {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Length of s in [0, 1] where v0 + s (v1 - v0) lies inside the range.
double in_range_fraction(double v0, double v1, TherapeuticRange r) {
  if (v0 == v1) return r.contains(v0) ? 1.0 : 0.0;
  double a = (r.lo - v0) / (v1 - v0);
  double b = (r.hi - v0) / (v1 - v0);
  if (a > b) std::swap(a, b);
  a = std::max(a, 0.0);
  b = std::min(b, 1.0);
  return b > a ? b - a : 0.0;
}

nlohmann::json optional_json(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

}  // namespace

double pttr_daily(std::span<const double> latent_inrs, TherapeuticRange range) {
  if (latent_inrs.empty()) throw DomainError("pttr of an empty trajectory");
  const auto in = std::count_if(latent_inrs.begin(), latent_inrs.end(),
                                [&](double v) { return range.contains(v); });
  return static_cast<double>(in) / static_cast<double>(latent_inrs.size());
}

double pttr_rosendaal(std::span<const Measurement> m, int horizon,
                      TherapeuticRange range) {
  if (m.size() < 2) throw DomainError("Rosendaal needs at least 2 measurements");
  for (std::size_t i = 1; i < m.size(); ++i) {
    if (m[i].day <= m[i - 1].day) {
      throw DomainError("measurement days must be strictly increasing");
    }
  }
  double in_range = 0.0;
  for (std::size_t i = 1; i < m.size(); ++i) {
    const double span = m[i].day - m[i - 1].day;
    in_range += span * in_range_fraction(m[i - 1].inr, m[i].inr, range);
  }
  const int end = std::max(horizon, m.back().day);
  if (range.contains(m.back().inr)) in_range += end - m.back().day;
  return in_range / static_cast<double>(end - m.front().day);
}

std::optional<int> first_therapeutic_day(std::span<const double> latent_inrs,
                                         TherapeuticRange range) {
  for (std::size_t i = 0; i < latent_inrs.size(); ++i) {
    if (range.contains(latent_inrs[i])) return static_cast<int>(i) + 1;
  }
  return std::nullopt;
}

DoseSummary dose_summaries(const Trajectory& t, TherapeuticRange range) {
  DoseSummary s;
  s.decision_count = static_cast<int>(t.decisions.size());
  const auto& d = t.daily_doses;
  if (d.empty()) return s;
  double total = 0.0;
  for (double x : d) total += x;
  s.total = total / static_cast<double>(d.size());

  const auto first = first_therapeutic_day(t.latent_inrs, range);
  // Doses of days 1..f-1 are "pre", days f..T-1 are "post".
  const std::size_t split =
      first ? std::min<std::size_t>(static_cast<std::size_t>(*first - 1), d.size())
            : d.size();
  const auto mean_of = [&](std::size_t a, std::size_t b) -> std::optional<double> {
    if (a >= b) return std::nullopt;
    double sum = 0.0;
    for (std::size_t i = a; i < b; ++i) sum += d[i];
    return sum / static_cast<double>(b - a);
  };
  s.pre = mean_of(0, split);
  s.post = mean_of(split, d.size());
  return s;
}

PatientReport make_patient_report(const Trajectory& t, Sensitivity sensitivity,
                                  int horizon, TherapeuticRange range) {
  PatientReport r;
  r.patient_id = t.patient_id;
  r.policy = t.policy;
  r.sensitivity = sensitivity;
  r.pttr_daily = pttr_daily(t.latent_inrs, range);
  r.pttr_interpolated = pttr_rosendaal(t.measurements, horizon, range);
  r.first_therapeutic_day = first_therapeutic_day(t.latent_inrs, range);
  const DoseSummary ds = dose_summaries(t, range);
  r.dose_pre = ds.pre;
  r.dose_post = ds.post;
  r.dose_total = ds.total;
  r.decision_count = ds.decision_count;
  return r;
}

Stat summarize(std::span<const double> v) {
  Stat s;
  s.n = static_cast<int>(v.size());
  if (v.empty()) {
    s.mean = s.sd = s.min = s.max = kNaN;
    return s;
  }
  double sum = 0.0;
  for (double x : v) sum += x;
  s.mean = sum / s.n;
  double ss = 0.0;
  for (double x : v) ss += (x - s.mean) * (x - s.mean);
  s.sd = std::sqrt(ss / s.n);
  s.min = *std::min_element(v.begin(), v.end());
  s.max = *std::max_element(v.begin(), v.end());
  // Rounding can push a constant column's mean a hair outside [min, max].
  s.mean = std::clamp(s.mean, s.min, s.max);
  return s;
}

double quantile(std::vector<double> v, double q) {
  if (v.empty()) return kNaN;
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

std::vector<ClassSummary> cohort_summary(std::span<const PatientReport> reports) {
  std::vector<ClassSummary> rows;
  for (int c = 0; c <= 3; ++c) {
    ClassSummary row;
    row.label = c < 3 ? std::string(to_string(kAllSensitivities[static_cast<std::size_t>(c)]))
                      : "all";
    std::vector<double> daily, interp, first, pre, post, total, decisions;
    for (const auto& r : reports) {
      if (c < 3 && r.sensitivity != kAllSensitivities[static_cast<std::size_t>(c)]) continue;
      ++row.patients;
      daily.push_back(r.pttr_daily);
      interp.push_back(r.pttr_interpolated);
      if (r.first_therapeutic_day) first.push_back(*r.first_therapeutic_day);
      else ++row.never_in_range;
      if (r.dose_pre) pre.push_back(*r.dose_pre);
      if (r.dose_post) post.push_back(*r.dose_post);
      total.push_back(r.dose_total);
      decisions.push_back(r.decision_count);
    }
    row.pttr_daily = summarize(daily);
    row.pttr_interpolated = summarize(interp);
    row.first_therapeutic_day = summarize(first);
    row.dose_pre = summarize(pre);
    row.dose_post = summarize(post);
    row.dose_total = summarize(total);
    row.decision_count = summarize(decisions);
    rows.push_back(std::move(row));
  }
  return rows;
}

std::array<double, 3> class_scores(std::span<const PatientReport> reports) {
  std::array<double, 3> scores{};
  const auto rows = cohort_summary(reports);
  for (std::size_t c = 0; c < 3; ++c) {
    if (rows[c].patients == 0) {
      throw ConfigError("validation cohort has no '" + rows[c].label +
                        "' patients");
    }
    scores[c] = rows[c].pttr_daily.mean - rows[c].pttr_daily.sd;
  }
  return scores;
}

std::vector<double> pttr_delta_vs_best(
    std::span<const PatientReport> model,
    const std::vector<std::vector<PatientReport>>& baselines) {
  if (baselines.empty()) throw DomainError("no baselines to compare against");
  for (const auto& b : baselines) {
    if (b.size() != model.size()) {
      throw DataMismatchError("reports cover different numbers of patients (" +
                              std::to_string(model.size()) + " vs " +
                              std::to_string(b.size()) + ")");
    }
  }
  std::vector<double> out;
  out.reserve(model.size());
  for (std::size_t i = 0; i < model.size(); ++i) {
    double best = -1.0;
    for (const auto& b : baselines) {
      if (b[i].patient_id != model[i].patient_id) {
        throw DataMismatchError("patient id mismatch at row " +
                                std::to_string(i) + ": " +
                                std::to_string(model[i].patient_id) + " vs " +
                                std::to_string(b[i].patient_id));
      }
      best = std::max(best, b[i].pttr_daily);
    }
    out.push_back(model[i].pttr_daily - best);
  }
  return out;
}

DailyAggregate daily_aggregate(std::span<const Trajectory> trajectories,
                               std::span<const Sensitivity> classes,
                               std::optional<Sensitivity> only) {
  if (classes.size() != trajectories.size()) {
    throw DomainError("one sensitivity class per trajectory is required");
  }
  DailyAggregate a;
  std::vector<double> sum, sumsq, dose;
  for (std::size_t i = 0; i < trajectories.size(); ++i) {
    if (only && classes[i] != *only) continue;
    const auto& t = trajectories[i];
    if (sum.empty()) {
      sum.assign(t.latent_inrs.size(), 0.0);
      sumsq.assign(t.latent_inrs.size(), 0.0);
      dose.assign(t.daily_doses.size(), 0.0);
    }
    if (t.latent_inrs.size() != sum.size() || t.daily_doses.size() != dose.size()) {
      throw DataMismatchError("trajectories have different horizons");
    }
    for (std::size_t d = 0; d < sum.size(); ++d) {
      sum[d] += t.latent_inrs[d];
      sumsq[d] += t.latent_inrs[d] * t.latent_inrs[d];
    }
    for (std::size_t d = 0; d < dose.size(); ++d) dose[d] += t.daily_doses[d];
    ++a.patients;
  }
  if (a.patients == 0) return a;
  const double n = a.patients;
  for (std::size_t d = 0; d < sum.size(); ++d) {
    const double m = sum[d] / n;
    a.mean.push_back(m);
    a.sd.push_back(std::sqrt(std::max(0.0, sumsq[d] / n - m * m)));
  }
  for (double x : dose) a.dose_mean.push_back(x / n);
  return a;
}

void to_json(nlohmann::json& j, const Stat& s) {
  const auto num = [](double v) {
    return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
  };
  j = {{"n", s.n}, {"mean", num(s.mean)}, {"sd", num(s.sd)},
       {"min", num(s.min)}, {"max", num(s.max)}};
}

void to_json(nlohmann::json& j, const ClassSummary& s) {
  j = {{"class", s.label},
       {"patients", s.patients},
       {"pttr_daily", s.pttr_daily},
       {"pttr_interpolated", s.pttr_interpolated},
       {"first_therapeutic_day", s.first_therapeutic_day},
       {"never_in_range", s.never_in_range},
       {"dose_pre", s.dose_pre},
       {"dose_post", s.dose_post},
       {"dose_total", s.dose_total},
       {"decision_count", s.decision_count}};
}

void to_json(nlohmann::json& j, const PatientReport& r) {
  j = {{"patient_id", r.patient_id},
       {"policy", r.policy},
       {"sensitivity", to_string(r.sensitivity)},
       {"pttr_daily", r.pttr_daily},
       {"pttr_interpolated", r.pttr_interpolated},
       {"first_therapeutic_day",
        r.first_therapeutic_day ? nlohmann::json(*r.first_therapeutic_day)
                                : nlohmann::json(nullptr)},
       {"dose_pre", optional_json(r.dose_pre)},
       {"dose_post", optional_json(r.dose_post)},
       {"dose_total", r.dose_total},
       {"decision_count", r.decision_count}};
}

void from_json(const nlohmann::json& j, PatientReport& r) {
  using json_util::read_required;
  r.patient_id = read_required<int>(j, "patient_id");
  r.policy = read_required<std::string>(j, "policy");
  const auto label = read_required<std::string>(j, "sensitivity");
  bool found = false;
  for (auto s : kAllSensitivities) {
    if (to_string(s) == label) {
      r.sensitivity = s;
      found = true;
    }
  }
  if (!found) throw ConfigError("unknown sensitivity class '" + label + "'");
  r.pttr_daily = read_required<double>(j, "pttr_daily");
  r.pttr_interpolated = read_required<double>(j, "pttr_interpolated");
  const auto opt = [&](const char* key) -> std::optional<double> {
    const auto& v = j.at(key);
    if (v.is_null()) return std::nullopt;
    return v.get<double>();
  };
  const auto f = opt("first_therapeutic_day");
  r.first_therapeutic_day =
      f ? std::optional<int>(static_cast<int>(*f)) : std::nullopt;
  r.dose_pre = opt("dose_pre");
  r.dose_post = opt("dose_post");
  r.dose_total = read_required<double>(j, "dose_total");
  r.decision_count = read_required<int>(j, "decision_count");
}

void to_json(nlohmann::json& j, const DailyAggregate& a) {
  j = {{"patients", a.patients},
       {"inr_mean", a.mean},
       {"inr_sd", a.sd},
       {"dose_mean", a.dose_mean}};
}

void from_json(const nlohmann::json& j, DailyAggregate& a) {
  using json_util::read_required;
  a.patients = read_required<int>(j, "patients");
  a.mean = read_required<std::vector<double>>(j, "inr_mean");
  a.sd = read_required<std::vector<double>>(j, "inr_sd");
  a.dose_mean = read_required<std::vector<double>>(j, "dose_mean");
}

}  // namespace wdose
