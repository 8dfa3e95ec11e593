#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "xltrade/app/run_config.hpp"
#include "xltrade/market/synthetic.hpp"
#include "xltrade/metrics/metrics.hpp"

namespace xltrade::app {

/// Resolves the manifest splits into `config` and builds both splits.
market::Dataset load_dataset(RunConfig& config);

double resolved_threshold(const RunConfig& config, const market::Dataset& data);

struct TrainOutcome {
  policy::PolicyConfig policy_config;
  policy::PolicyParams params;
  std::vector<ppo::UpdateStats> history;
};

/// Trains on the training split; each update's JSON line goes to `log` when given.
TrainOutcome run_training(const RunConfig& config, const market::Dataset& data, std::ostream* log);

struct BacktestOutcome {
  metrics::PerformanceReport report;
  metrics::EquityCurve curve;
};

/// Deterministic (mean-action) episode over the test split.
BacktestOutcome run_backtest(const RunConfig& config, const market::Dataset& data,
                             const policy::PolicyConfig& policy_config, const policy::PolicyParams& params,
                             const std::filesystem::path& trace_csv = {});

/// Builds zero parameters for `config` and fills them from a checkpoint.
/// Throws CheckpointError when names or shapes differ.
policy::PolicyParams load_policy(const policy::PolicyConfig& policy_config, const std::filesystem::path& path);

// Each command writes into config.out: config.json plus its own artifacts.
void cmd_train(RunConfig config, std::ostream& out);
void cmd_backtest(RunConfig config, const std::filesystem::path& checkpoint, std::ostream& out);

struct CompareRow {
  policy::ModelKind model;
  std::size_t window;
  std::size_t batch_size;
  metrics::PerformanceReport report;
};

/// Throws UsageError unless both configs use the same data, splits and seed.
void check_comparable(const RunConfig& a, const RunConfig& b);

/// Trains and backtests lstm and xlstm for every window; writes compare.json and compare.tsv.
std::vector<CompareRow> cmd_compare(RunConfig base, const std::vector<std::size_t>& windows, bool paper_batch_sizes,
                                    std::ostream& out);

std::string compare_tsv(const std::vector<CompareRow>& rows);

std::filesystem::path cmd_synth(const std::filesystem::path& dir, const market::SyntheticConfig& config,
                                const market::SplitDates& splits, std::ostream& out);

/// Full command-line entry point; returns the process exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace xltrade::app
