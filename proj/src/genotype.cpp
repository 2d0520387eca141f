#include "wdose/genotype.hpp"

#include <string>

#include "wdose/errors.hpp"

namespace wdose {
namespace {

constexpr std::array<std::string_view, 6> kCypNames = {
    "*1/*1", "*1/*2", "*1/*3", "*2/*2", "*2/*3", "*3/*3"};
constexpr std::array<std::string_view, 3> kVkorcNames = {"G/G", "G/A", "A/A"};
constexpr std::array<AllelePair, 6> kCypAlleles = {
    AllelePair{1, 1}, AllelePair{1, 2}, AllelePair{1, 3},
    AllelePair{2, 2}, AllelePair{2, 3}, AllelePair{3, 3}};

}  // namespace

std::string_view to_string(Cyp2c9 g) { return kCypNames[index_of(g)]; }
std::string_view to_string(Vkorc1 g) { return kVkorcNames[index_of(g)]; }

Cyp2c9 parse_cyp2c9(std::string_view s) {
  for (std::size_t i = 0; i < kCypNames.size(); ++i) {
    if (kCypNames[i] == s) return static_cast<Cyp2c9>(i);
  }
  throw ConfigError("unknown CYP2C9 genotype '" + std::string(s) + "'");
}

Vkorc1 parse_vkorc1(std::string_view s) {
  for (std::size_t i = 0; i < kVkorcNames.size(); ++i) {
    if (kVkorcNames[i] == s) return static_cast<Vkorc1>(i);
  }
  // A/G is the same genotype written the other way round.
  if (s == "A/G") return Vkorc1::kGA;
  throw ConfigError("unknown VKORC1 genotype '" + std::string(s) + "'");
}

AllelePair cyp2c9_alleles(Cyp2c9 g) { return kCypAlleles[index_of(g)]; }

int cyp2c9_star2_count(Cyp2c9 g) {
  const auto a = cyp2c9_alleles(g);
  return (a.first == 2) + (a.second == 2);
}

int cyp2c9_star3_count(Cyp2c9 g) {
  const auto a = cyp2c9_alleles(g);
  return (a.first == 3) + (a.second == 3);
}

int vkorc1_a_count(Vkorc1 g) { return static_cast<int>(index_of(g)); }

}  // namespace wdose
