#include <cmath>

#include "doctest.h"
#include "wdose/errors.hpp"
#include "wdose/pkpd.hpp"

using namespace wdose;

namespace {

PkpdParameters noiseless(const TransitChainModel& m, double age, Cyp2c9 c,
                         Vkorc1 v) {
  PkpdParameters p = m.derive_population_params(age, c, v);
  p.residual_sd = 0.0;
  return p;
}

std::vector<double> run_constant(const TransitChainModel& m,
                                 const PkpdParameters& p, double dose,
                                 int days) {
  PkpdState s = m.initial_state();
  std::vector<double> out;
  for (int d = 0; d < days; ++d) {
    auto [next, inr] = m.step_day(s, p, dose);
    s = next;
    out.push_back(inr);
  }
  return out;
}

}  // namespace

TEST_CASE("genotype multipliers") {
  TransitChainModel m;
  CHECK(m.clearance_multiplier(Cyp2c9::k11) == 1.0);
  CHECK(m.ec50_multiplier(Vkorc1::kGG) == 1.0);
  CHECK(m.clearance_multiplier(Cyp2c9::k33) == doctest::Approx(0.1));
  CHECK(m.clearance_multiplier(Cyp2c9::k12) == doctest::Approx(0.8));
  CHECK(m.clearance_multiplier(Cyp2c9::k23) == doctest::Approx(0.35));
  CHECK(m.ec50_multiplier(Vkorc1::kAA) == doctest::Approx(0.45));

  const auto ref = m.derive_population_params(67, Cyp2c9::k11, Vkorc1::kGG);
  const auto slow = m.derive_population_params(67, Cyp2c9::k33, Vkorc1::kGG);
  CHECK(slow.elimination_rate / ref.elimination_rate == doctest::Approx(0.1));
}

TEST_CASE("clearance falls with age and is clamped") {
  TransitChainModel m;
  CHECK(m.age_factor(67) == 1.0);
  CHECK(m.age_factor(77) == doctest::Approx(0.95));
  CHECK(m.age_factor(37) == doctest::Approx(1.0 + 0.005 * 30));
  CHECK(m.age_factor(18) == 1.2);
  PkpdConfig c;
  c.age_slope = 0.05;
  TransitChainModel steep(c);
  CHECK(steep.age_factor(100) == 0.5);
  CHECK(steep.age_factor(18) == 1.2);
  CHECK_THROWS_AS(m.derive_population_params(17.9, Cyp2c9::k11, Vkorc1::kGG),
                  DomainError);
  CHECK_THROWS_AS(m.derive_population_params(100.1, Cyp2c9::k11, Vkorc1::kGG),
                  DomainError);
}

TEST_CASE("between-subject variability") {
  SUBCASE("zero log-SDs leave parameters unchanged") {
    PkpdConfig c;
    c.bsv_elimination_sd = c.bsv_ec50_sd = c.bsv_emax_sd = 0.0;
    TransitChainModel m(c);
    const auto pop = m.derive_population_params(60, Cyp2c9::k12, Vkorc1::kGA);
    Rng rng(3);
    CHECK(m.sample_individual_params(pop, rng) == pop);
  }
  SUBCASE("fresh streams give identical draws") {
    TransitChainModel m;
    const auto pop = m.derive_population_params(60, Cyp2c9::k12, Vkorc1::kGA);
    Rng a(11), b(11);
    CHECK(m.sample_individual_params(pop, a) == m.sample_individual_params(pop, b));
  }
  SUBCASE("log elimination rate has the configured spread") {
    TransitChainModel m;
    const auto pop = m.derive_population_params(67, Cyp2c9::k11, Vkorc1::kGG);
    Rng rng(5);
    double s = 0.0, ss = 0.0;
    const int n = 10000;
    for (int i = 0; i < n; ++i) {
      const double l = std::log(m.sample_individual_params(pop, rng).elimination_rate);
      s += l;
      ss += l * l;
    }
    const double mean = s / n;
    CHECK(std::abs(std::sqrt(ss / n - mean * mean) - 0.3) < 0.02);
  }
}

TEST_CASE("no drug keeps INR at baseline") {
  TransitChainModel m;
  const auto p = noiseless(m, 50, Cyp2c9::k13, Vkorc1::kAA);
  for (double inr : run_constant(m, p, 0.0, 60)) CHECK(inr == p.baseline_inr);
}

TEST_CASE("drug amount approaches the geometric steady state") {
  TransitChainModel m;
  for (auto cyp : kAllCyp2c9) {
    const auto p = noiseless(m, 67, cyp, Vkorc1::kGG);
    const int days = static_cast<int>(std::ceil(10.0 / p.elimination_rate));
    PkpdState s = m.initial_state();
    for (int d = 0; d < days; ++d) s = m.step_day(s, p, 5.0).first;
    const double ss = 5.0 / (1.0 - std::exp(-p.elimination_rate));
    CHECK(std::abs(s.drug_amount - ss) / ss < 0.01);
  }
}

TEST_CASE("constant dosing raises INR monotonically to a plateau") {
  TransitChainModel m;
  const auto p = noiseless(m, 67, Cyp2c9::k11, Vkorc1::kGA);
  const auto inr = run_constant(m, p, 6.0, 400);
  const double plateau = inr.back();
  for (std::size_t d = 1; d < inr.size(); ++d) {
    if (std::abs(inr[d - 1] - plateau) / plateau < 0.01) break;
    CHECK(inr[d] >= inr[d - 1]);
  }
}

TEST_CASE("six milligrams a day puts a typical patient near the range midpoint") {
  TransitChainModel m;
  const auto p = noiseless(m, 67, Cyp2c9::k11, Vkorc1::kGG);
  CHECK(run_constant(m, p, 6.0, 200).back() == doctest::Approx(2.5).epsilon(0.02));
}

TEST_CASE("a higher constant dose never gives a lower INR") {
  TransitChainModel m;
  const auto p = noiseless(m, 45, Cyp2c9::k12, Vkorc1::kGA);
  for (double lo = 0.0; lo < 15.0; lo += 1.5) {
    const auto a = run_constant(m, p, lo, 90);
    const auto b = run_constant(m, p, lo + 0.5, 90);
    for (std::size_t d = 0; d < a.size(); ++d) CHECK(b[d] >= a[d]);
  }
}

TEST_CASE("sensitivity classes order steady-state INR") {
  TransitChainModel m;
  const auto ss = [&](Cyp2c9 c, Vkorc1 v) {
    return run_constant(m, noiseless(m, 67, c, v), 4.0, 400).back();
  };
  const double normal = ss(Cyp2c9::k11, Vkorc1::kGG);
  const double sensitive = ss(Cyp2c9::k11, Vkorc1::kAA);
  const double highly = ss(Cyp2c9::k33, Vkorc1::kAA);
  CHECK(highly >= sensitive);
  CHECK(sensitive >= normal);
}

TEST_CASE("step_day rejects invalid doses") {
  TransitChainModel m;
  const auto p = noiseless(m, 67, Cyp2c9::k11, Vkorc1::kGG);
  CHECK_THROWS_AS(m.step_day(m.initial_state(), p, -0.5), DomainError);
  CHECK_THROWS_AS(m.step_day(m.initial_state(), p, std::nan("")), DomainError);
}

TEST_CASE("identical inputs give bit-identical trajectories") {
  TransitChainModel m;
  auto p = m.derive_population_params(71, Cyp2c9::k22, Vkorc1::kGA);
  Rng a(77), b(77);
  p = m.sample_individual_params(p, a);
  auto q = m.derive_population_params(71, Cyp2c9::k22, Vkorc1::kGA);
  q = m.sample_individual_params(q, b);
  REQUIRE(p == q);
  PkpdState s1 = m.initial_state(), s2 = m.initial_state();
  for (int d = 0; d < 90; ++d) {
    const double dose = (d % 7) * 1.5;
    auto r1 = m.step_day(s1, p, dose);
    auto r2 = m.step_day(s2, q, dose);
    CHECK(r1.second == r2.second);
    CHECK(m.observe_inr(r1.second, p, a) == m.observe_inr(r2.second, q, b));
    s1 = r1.first;
    s2 = r2.first;
  }
}

TEST_CASE("measurement noise") {
  TransitChainModel m;
  auto p = noiseless(m, 67, Cyp2c9::k11, Vkorc1::kGG);
  Rng rng(1);
  CHECK(m.observe_inr(2.3, p, rng) == 2.3);
  CHECK(m.observe_inr(0.2, p, rng) == 0.5);

  p.residual_sd = 0.05;
  double sum = 0.0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) sum += m.observe_inr(2.5, p, rng);
  CHECK(std::abs(sum / n - 2.5 * std::exp(0.05 * 0.05 / 2)) < 0.01);

  p.residual_sd = 2.0;
  for (int i = 0; i < 2000; ++i) CHECK(m.observe_inr(0.6, p, rng) >= 0.5);
}

TEST_CASE("parameter validation") {
  TransitChainModel m;
  auto p = m.derive_population_params(67, Cyp2c9::k11, Vkorc1::kGG);
  CHECK_NOTHROW(p.validate());
  auto bad = p;
  bad.baseline_inr = 1.6;
  CHECK_THROWS_AS(bad.validate(), DomainError);
  bad = p;
  bad.emax = 0.0;
  CHECK_THROWS_AS(bad.validate(), DomainError);
}

TEST_CASE("model config round-trips through JSON and rejects unknown keys") {
  PkpdConfig c;
  c.emax = 6.5;
  c.allele_clearance = {1.0, 0.5, 0.2};
  const nlohmann::json j = c;
  CHECK(j.get<PkpdConfig>() == c);
  auto typo = j;
  typo["emaxx"] = 1.0;
  CHECK_THROWS_AS(typo.get<PkpdConfig>(), ConfigError);
  auto negative = j;
  negative["reference_ec50"] = -1.0;
  CHECK_THROWS_AS(negative.get<PkpdConfig>(), ConfigError);
}
