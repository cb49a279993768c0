#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "adnoise/config.hpp"

namespace adnoise {

inline constexpr std::uint64_t kDefaultSeed = 20240531;

struct CommandOptions {
  std::filesystem::path out_dir;
  std::uint64_t seed = kDefaultSeed;
  int threads = 1;
  std::optional<int> top_k;
  /// Named fault for negative controls; only "rate_matrix" is defined.
  std::string fault_inject;
};

/// Exit codes: 0 success, 1 validation failure, 2 physics or solver error,
/// 3 capacity or configuration error.
int cmd_levels(const RunConfig& cfg, const CommandOptions& opts, std::ostream& log);
int cmd_spectrum(const RunConfig& cfg, const CommandOptions& opts, std::ostream& log);
int cmd_pink(const RunConfig& cfg, const CommandOptions& opts, std::ostream& log);
int cmd_validate(const RunConfig& cfg, const CommandOptions& opts, std::ostream& log);
int cmd_sweep(const RunConfig& cfg, const CommandOptions& opts, std::ostream& log);

/// Parse arguments, dispatch, and translate exceptions into exit codes.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace adnoise
