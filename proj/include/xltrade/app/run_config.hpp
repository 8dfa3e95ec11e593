#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>

#include "xltrade/env/trading_env.hpp"
#include "xltrade/market/manifest.hpp"
#include "xltrade/policy/policy.hpp"
#include "xltrade/ppo/trainer.hpp"

namespace xltrade::app {

/// Bad flags or configuration values (exit code 2).
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 2,
  kExitData = 3,
  kExitNumeric = 4,
  kExitCheckpoint = 5,
};

/// Split edges set explicitly by a config file or flag; they win over the manifest.
struct SplitOverrides {
  std::optional<market::Date> train_start, train_end, test_start, test_end;
};

struct RunConfig {
  std::filesystem::path manifest;
  std::filesystem::path out = "runs/default";
  market::SplitDates splits;  // resolved: manifest dates with overrides applied
  SplitOverrides split_overrides;
  policy::ModelKind model = policy::ModelKind::kXlstm;
  std::size_t window = 30;
  std::uint64_t seed = 0;
  xlstm::BlockStackConfig stack;
  env::EnvConfig env;
  std::optional<double> turbulence_threshold;  // computed from the training split when unset
  ppo::TrainConfig train;
  bool zero_init = false;

  void validate() const;
  /// Every field, defaults included.
  std::string to_json() const;
  /// Overlays the keys present in `json` onto this config.
  void merge_json(const std::string& json);

  env::EnvConfig env_config(double threshold) const;
  policy::PolicyConfig policy_config(std::size_t n_tickers) const;
};

RunConfig load_run_config(const std::filesystem::path& path);

/// Loads the manifest and resolves config.splits from its dates plus the overrides.
market::Manifest resolve_manifest(RunConfig& config);

}  // namespace xltrade::app
