#pragma once

#include <optional>
#include <ostream>
#include <string>

#include "ddft/config.hpp"

namespace ddft {

/// Command-line overrides applied on top of the config file.
struct CliOverrides {
    std::string out_dir;                 // --out
    std::optional<std::uint64_t> seed;   // --seed
};

/// Exit codes: 0 success, 1 config error, 2 numerical failure.
int cmd_evolve(const std::string& config_path, const CliOverrides& ov = {});
int cmd_equilibrium(const std::string& config_path, const CliOverrides& ov = {});
int cmd_particles(const std::string& config_path, const CliOverrides& ov = {},
                  const std::string& compare_path = "", bool compare_requested = false);
int cmd_validate(bool list_only, bool inject_fault, std::ostream& os);

}  // namespace ddft
