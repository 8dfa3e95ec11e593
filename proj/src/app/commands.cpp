#include "xltrade/app/commands.hpp"

#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <ostream>

#include "xltrade/numerics/checkpoint.hpp"
#include "xltrade/numerics/errors.hpp"
#include "xltrade/numerics/random.hpp"

namespace xltrade::app {

namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

void prepare_out_dir(const RunConfig& config) {
  std::filesystem::create_directories(config.out);
  write_text(config.out / "config.json", config.to_json() + "\n");
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace

market::Dataset load_dataset(RunConfig& config) {
  const auto manifest = resolve_manifest(config);
  return market::build_dataset(market::align(market::load_bars(manifest)), config.splits,
                               config.turbulence_threshold);
}

double resolved_threshold(const RunConfig& config, const market::Dataset& data) {
  return config.turbulence_threshold.value_or(data.train.turbulence.threshold);
}

TrainOutcome run_training(const RunConfig& config, const market::Dataset& data, std::ostream* log) {
  TrainOutcome outcome{config.policy_config(data.train.panel.n_tickers()), {}, {}};
  auto rng = numerics::make_rng(config.seed, 0);
  const auto initial = config.zero_init ? policy::PolicyParams::zeros(outcome.policy_config)
                                        : policy::PolicyParams::init(outcome.policy_config, rng);
  env::TradingEnv env(config.env_config(resolved_threshold(config, data)),
                      std::make_shared<market::MarketSplit>(data.train));
  ppo::TrainConfig tc = config.train;
  tc.seed = config.seed;
  if (tc.dump_path.empty()) tc.dump_path = config.out / "nan_dump.json";
  auto result = ppo::train(tc, env, outcome.policy_config, initial, [&](const ppo::UpdateStats& s) {
    if (log) *log << s.to_json_line() << '\n' << std::flush;
  });
  outcome.params = std::move(result.params);
  outcome.history = std::move(result.history);
  return outcome;
}

BacktestOutcome run_backtest(const RunConfig& config, const market::Dataset& data,
                             const policy::PolicyConfig& policy_config, const policy::PolicyParams& params,
                             const std::filesystem::path& trace_csv) {
  env::TradingEnv env(config.env_config(resolved_threshold(config, data)),
                      std::make_shared<market::MarketSplit>(data.test));
  auto obs = env.reset();
  auto state = policy::RecurrentPolicyState::zeros(policy_config, 1);
  while (!env.done()) {
    auto sample = policy::act(policy_config, params, state, obs, nullptr, true);
    auto step = env.step(sample.action);
    obs = std::move(step.obs);
    state = std::move(sample.state);
  }
  BacktestOutcome outcome;
  std::int64_t n_trades = 0;
  for (const auto& row : env.trace()) {
    outcome.curve.dates.push_back(row.date.to_string());
    outcome.curve.values.push_back(row.total_value);
    for (auto q : row.trades) n_trades += q != 0 ? 1 : 0;
  }
  outcome.report = metrics::evaluate(outcome.curve, n_trades);
  if (!trace_csv.empty()) env.write_trace_csv(trace_csv);
  return outcome;
}

policy::PolicyParams load_policy(const policy::PolicyConfig& policy_config, const std::filesystem::path& path) {
  auto params = policy::PolicyParams::zeros(policy_config);
  auto named = params.named(policy_config);
  numerics::assign_parameters(named, numerics::load_checkpoint(path));
  return params;
}

void cmd_train(RunConfig config, std::ostream& out) {
  config.validate();
  const auto data = load_dataset(config);
  prepare_out_dir(config);
  std::ofstream log(config.out / "train_log.jsonl", std::ios::binary | std::ios::trunc);
  const auto outcome = run_training(config, data, &log);
  numerics::save_checkpoint(config.out / "checkpoint.bin", outcome.params.named(outcome.policy_config));
  out << "trained " << policy::to_string(config.model) << " window " << config.window << " for "
      << (outcome.history.empty() ? 0 : outcome.history.back().timesteps) << " timesteps over "
      << outcome.history.size() << " updates; wrote " << (config.out / "checkpoint.bin").string() << '\n';
}

void cmd_backtest(RunConfig config, const std::filesystem::path& checkpoint, std::ostream& out) {
  config.validate();
  const auto data = load_dataset(config);
  const auto policy_config = config.policy_config(data.test.panel.n_tickers());
  const auto params = load_policy(policy_config, checkpoint.empty() ? config.out / "checkpoint.bin" : checkpoint);
  prepare_out_dir(config);
  const auto outcome = run_backtest(config, data, policy_config, params, config.out / "trace.csv");
  write_text(config.out / "report.json", outcome.report.to_json() + "\n");
  metrics::write_equity_csv(config.out / "equity.csv", outcome.curve);
  out << outcome.report.to_json() << '\n';
}

void check_comparable(const RunConfig& a, const RunConfig& b) {
  if (a.manifest != b.manifest) throw UsageError("compared runs use different datasets");
  if (!(a.splits == b.splits)) throw UsageError("compared runs use different data splits");
  if (a.seed != b.seed) throw UsageError("compared runs use different seeds");
}

std::vector<CompareRow> cmd_compare(RunConfig base, const std::vector<std::size_t>& windows, bool paper_batch_sizes,
                                    std::ostream& out) {
  if (windows.empty()) throw UsageError("compare needs at least one window");
  for (auto w : windows) {
    if (w < 1) throw UsageError("window must be at least 1");
  }
  base.validate();
  const auto data = load_dataset(base);
  std::filesystem::create_directories(base.out);
  write_text(base.out / "config.json", base.to_json() + "\n");

  std::vector<CompareRow> rows;
  for (auto model : {policy::ModelKind::kLstm, policy::ModelKind::kXlstm}) {
    for (auto window : windows) {
      RunConfig run = base;
      run.model = model;
      run.window = window;
      if (paper_batch_sizes) run.train.batch_size = model == policy::ModelKind::kXlstm ? 32 : 64;
      run.out = base.out / (policy::to_string(model) + "_w" + std::to_string(window));
      check_comparable(base, run);
      run.validate();
      prepare_out_dir(run);
      std::ofstream log(run.out / "train_log.jsonl", std::ios::binary | std::ios::trunc);
      const auto trained = run_training(run, data, &log);
      numerics::save_checkpoint(run.out / "checkpoint.bin", trained.params.named(trained.policy_config));
      const auto bt = run_backtest(run, data, trained.policy_config, trained.params, run.out / "trace.csv");
      write_text(run.out / "report.json", bt.report.to_json() + "\n");
      metrics::write_equity_csv(run.out / "equity.csv", bt.curve);
      rows.push_back({model, window, run.train.batch_size, bt.report});
      out << policy::to_string(model) << " window " << window << ": cr " << fixed(bt.report.cr, 2) << '\n';
    }
  }

  nlohmann::ordered_json j;
  j["manifest"] = base.manifest.generic_string();
  j["splits"] = nlohmann::ordered_json::parse(base.to_json())["splits"];
  j["seeds"] = {base.seed};
  j["rows"] = nlohmann::ordered_json::array();
  for (const auto& r : rows) {
    j["rows"].push_back({{"model", policy::to_string(r.model)},
                         {"window", r.window},
                         {"batch_size", r.batch_size},
                         {"report", nlohmann::ordered_json::parse(r.report.to_json())}});
  }
  write_text(base.out / "compare.json", j.dump(2) + "\n");
  const auto tsv = compare_tsv(rows);
  write_text(base.out / "compare.tsv", tsv);
  out << tsv;
  return rows;
}

std::string compare_tsv(const std::vector<CompareRow>& rows) {
  std::string s = "Model\tTime Window Size\tBatch Size\tCR\tMER\tMPB\tAPPT\tSR\n";
  for (const auto& r : rows) {
    s += policy::to_string(r.model) + '\t' + std::to_string(r.window) + '\t' + std::to_string(r.batch_size) + '\t' +
         fixed(r.report.cr, 2) + '\t' + fixed(r.report.mer, 2) + '\t' + fixed(r.report.mpb, 2) + '\t' +
         (r.report.appt ? fixed(*r.report.appt, 2) : "n/a") + '\t' +
         (r.report.sharpe ? fixed(*r.report.sharpe, 3) : "n/a") + '\n';
  }
  return s;
}

std::filesystem::path cmd_synth(const std::filesystem::path& dir, const market::SyntheticConfig& config,
                                const market::SplitDates& splits, std::ostream& out) {
  const auto path = market::write_synthetic(dir, config, splits);
  out << "wrote " << config.symbols.size() << " synthetic tickers and " << path.string() << '\n';
  return path;
}

}  // namespace xltrade::app
