#pragma once

#include <array>
#include <cstdint>
#include <string_view>

namespace wdose {

enum class Cyp2c9 : std::uint8_t { k11, k12, k13, k22, k23, k33 };
enum class Vkorc1 : std::uint8_t { kGG, kGA, kAA };

inline constexpr std::array<Cyp2c9, 6> kAllCyp2c9 = {
    Cyp2c9::k11, Cyp2c9::k12, Cyp2c9::k13,
    Cyp2c9::k22, Cyp2c9::k23, Cyp2c9::k33};
inline constexpr std::array<Vkorc1, 3> kAllVkorc1 = {
    Vkorc1::kGG, Vkorc1::kGA, Vkorc1::kAA};

std::string_view to_string(Cyp2c9 g);
std::string_view to_string(Vkorc1 g);
// Accepts the printed form ("*1/*3", "G/A"); throws ConfigError otherwise.
Cyp2c9 parse_cyp2c9(std::string_view s);
Vkorc1 parse_vkorc1(std::string_view s);

// Allele counts: CYP2C9 alleles are (*1|*2|*3) pairs.
struct AllelePair {
  int first;   // 1, 2 or 3
  int second;  // 1, 2 or 3
};
AllelePair cyp2c9_alleles(Cyp2c9 g);
int cyp2c9_star2_count(Cyp2c9 g);
int cyp2c9_star3_count(Cyp2c9 g);
int vkorc1_a_count(Vkorc1 g);

constexpr std::size_t index_of(Cyp2c9 g) { return static_cast<std::size_t>(g); }
constexpr std::size_t index_of(Vkorc1 g) { return static_cast<std::size_t>(g); }

}  // namespace wdose
