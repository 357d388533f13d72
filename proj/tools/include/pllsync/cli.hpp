#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "pllsync/scenarios.hpp"

namespace pllsync::cli {

/// Global options shared by every subcommand.
struct GlobalOptions {
  std::filesystem::path out_dir = ".";
  std::uint64_t seed = 0;
  std::optional<double> dt;     // overrides the config's integrator dt
  std::optional<double> t_end;  // overrides the config's horizon
  unsigned jobs = 0;            // 0 = hardware concurrency
};

/// Exit codes: 0 success, 2 config error, 3 numerical divergence,
/// 4 infeasible analysis, 1 anything else.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitDiverged = 3;
inline constexpr int kExitInfeasible = 4;

int cmd_simulate(const std::filesystem::path& config_file,
                 const GlobalOptions& opts);
int cmd_portrait(const std::filesystem::path& config_file,
                 const GlobalOptions& opts);
int cmd_roa(const std::filesystem::path& config_file,
            const GlobalOptions& opts);
int cmd_bound(const std::filesystem::path& config_file,
              const GlobalOptions& opts);
int cmd_scenario(const std::string& name_or_config, const GlobalOptions& opts);
int cmd_validate_config(const std::filesystem::path& config_file);

/// Full argv-style entry point (without the program name). Returns the
/// process exit code; never throws.
int run(const std::vector<std::string>& args);

/// Writes `t,delta,omega_hat,u_hat,y_tilde,energy` rows with 17 significant
/// digits. The energy column is the family-matched storage.
void write_trajectory_csv(const std::filesystem::path& file,
                          const dynamics::Trajectory& traj);

}  // namespace pllsync::cli
