#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "wdose/dqn.hpp"

namespace wdose {

// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitConfig = 3;
inline constexpr int kExitDataMismatch = 4;

// Scenario presets: base, h2, h3, noPG, d1max5.
const std::vector<std::string>& preset_names();
TrainConfig preset_config(const std::string& name);

// Runs one `wdose` command line; `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err);

}  // namespace wdose
