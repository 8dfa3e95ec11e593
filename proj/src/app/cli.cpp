#include <CLI11.hpp>
#include <ostream>

#include "xltrade/app/commands.hpp"
#include "xltrade/numerics/checkpoint.hpp"
#include "xltrade/numerics/errors.hpp"

namespace xltrade::app {

namespace {

market::Date parse_date_flag(const std::string& text, const char* flag) {
  try {
    return market::Date::parse(text);
  } catch (const std::invalid_argument& e) {
    throw UsageError(std::string(flag) + ": " + e.what());
  }
}

/// Flags shared by train, backtest and compare. Values are applied only when given.
struct RunFlags {
  std::string config, manifest, out, model, init;
  std::string train_start, train_end, test_start, test_end;
  std::size_t window = 0, batch_size = 0, timesteps = 0, embedding_dim = 0, epochs = 0, horizon = 0, heads = 0;
  std::uint64_t seed = 0;
  double gae_lambda = 0, learning_rate = 0, threshold = 0;
  bool trade_through = false;
  std::vector<CLI::Option*> opts;
  CLI::Option *o_window, *o_batch, *o_seed, *o_timesteps, *o_embedding, *o_epochs, *o_horizon, *o_heads, *o_lambda,
      *o_lr, *o_threshold, *o_trade_through;

  void attach(CLI::App* sub) {
    sub->add_option("--config", config, "JSON run config; flags override it");
    sub->add_option("--manifest", manifest, "Dataset manifest (JSON)");
    sub->add_option("--out", out, "Output directory");
    sub->add_option("--model", model, "Policy core")->check(CLI::IsMember({"xlstm", "lstm"}));
    sub->add_option("--init", init, "Initial parameters for training")->check(CLI::IsMember({"random", "zeros"}));
    sub->add_option("--train-start", train_start, "First training day (YYYY-MM-DD)");
    sub->add_option("--train-end", train_end, "Last training day");
    sub->add_option("--test-start", test_start, "First test day");
    sub->add_option("--test-end", test_end, "Last test day");
    o_window = sub->add_option("--window", window, "Observation window in days")->check(CLI::PositiveNumber);
    o_batch = sub->add_option("--batch-size", batch_size, "Timesteps per minibatch")->check(CLI::PositiveNumber);
    o_seed = sub->add_option("--seed", seed, "Random seed");
    o_timesteps = sub->add_option("--timesteps", timesteps, "Total training timesteps");
    o_embedding = sub->add_option("--embedding-dim", embedding_dim, "Recurrent width")->check(CLI::PositiveNumber);
    o_epochs = sub->add_option("--epochs", epochs, "Epochs per update")->check(CLI::PositiveNumber);
    o_horizon = sub->add_option("--horizon", horizon, "Steps per update (0 = one episode)");
    o_heads = sub->add_option("--heads", heads, "Heads per xLSTM cell")->check(CLI::PositiveNumber);
    o_lambda = sub->add_option("--gae-lambda", gae_lambda, "GAE lambda (0 = one-step advantage)");
    o_lr = sub->add_option("--learning-rate", learning_rate, "Adam step size");
    o_threshold = sub->add_option("--turbulence-threshold", threshold, "Fixed turbulence threshold");
    o_trade_through = sub->add_flag("--trade-through-turbulence", trade_through,
                                    "Execute trades on turbulent days (the penalty still applies)");
  }

  RunConfig resolve() const {
    RunConfig c = config.empty() ? RunConfig{} : load_run_config(config);
    if (!manifest.empty()) c.manifest = manifest;
    if (!out.empty()) c.out = out;
    if (!model.empty()) c.model = policy::model_kind_from_string(model);
    if (!init.empty()) c.zero_init = init == "zeros";
    if (!train_start.empty()) c.split_overrides.train_start = parse_date_flag(train_start, "--train-start");
    if (!train_end.empty()) c.split_overrides.train_end = parse_date_flag(train_end, "--train-end");
    if (!test_start.empty()) c.split_overrides.test_start = parse_date_flag(test_start, "--test-start");
    if (!test_end.empty()) c.split_overrides.test_end = parse_date_flag(test_end, "--test-end");
    if (o_window->count()) c.window = window;
    if (o_batch->count()) c.train.batch_size = batch_size;
    if (o_seed->count()) c.seed = seed;
    if (o_timesteps->count()) c.train.total_timesteps = timesteps;
    if (o_embedding->count()) c.stack.embedding_dim = embedding_dim;
    if (o_epochs->count()) c.train.epochs = epochs;
    if (o_horizon->count()) c.train.horizon = horizon;
    if (o_heads->count()) c.stack.n_heads = heads;
    if (o_lambda->count()) c.train.gae_lambda = gae_lambda;
    if (o_lr->count()) c.train.learning_rate = learning_rate;
    if (o_threshold->count()) c.turbulence_threshold = threshold;
    if (o_trade_through->count()) c.env.block_turbulent_trades = false;
    return c;
  }
};

struct SynthFlags {
  std::string out, preset = "market", start, end;
  std::string train_start, train_end, test_start, test_end;
  std::uint64_t seed = 0;
  std::size_t tickers = 0;
  double drift = 0, trend_drift = 0, trend_start = 0, volatility = 0, shock = 0;
  CLI::Option *o_tickers, *o_drift, *o_trend_drift, *o_trend_start, *o_vol, *o_shock;

  void attach(CLI::App* sub) {
    sub->add_option("--out", out, "Directory for the CSVs and manifest.json")->required();
    sub->add_option("--preset", preset, "Market shape")->check(CLI::IsMember({"market", "trend", "constant"}));
    sub->add_option("--seed", seed, "Random seed");
    sub->add_option("--start", start, "First calendar day");
    sub->add_option("--end", end, "Last calendar day");
    sub->add_option("--train-start", train_start, "Manifest training start");
    sub->add_option("--train-end", train_end, "Manifest training end");
    sub->add_option("--test-start", test_start, "Manifest test start");
    sub->add_option("--test-end", test_end, "Manifest test end");
    o_tickers = sub->add_option("--tickers", tickers, "Number of tickers")->check(CLI::PositiveNumber);
    o_drift = sub->add_option("--drift", drift, "Daily log drift before the trend segment");
    o_trend_drift = sub->add_option("--trend-drift", trend_drift, "Daily log drift in the trend segment");
    o_trend_start = sub->add_option("--trend-start", trend_start, "Trend start as a fraction of the span")
                        ->check(CLI::Range(0.0, 1.0));
    o_vol = sub->add_option("--volatility", volatility, "Daily log-return volatility")->check(CLI::NonNegativeNumber);
    o_shock = sub->add_option("--shock-prob", shock, "Daily probability of a market-wide jump")
                  ->check(CLI::Range(0.0, 1.0));
  }

  std::pair<market::SyntheticConfig, market::SplitDates> resolve() const {
    market::SyntheticConfig c;
    if (preset == "market") {
      c.symbols = {"AAA", "BBB", "CCC", "DDD", "EEE"};
      c.base_drift = c.trend_drift = 0.0003;
      c.volatility = 0.015;
      c.shock_probability = 0.01;
    } else if (preset == "trend") {
      c.symbols = {"SYN"};
      c.trend_drift = 0.002;
      c.trend_start = 0.3;
      c.volatility = 0.01;
      c.shock_probability = 0.005;
    } else {
      c.symbols = {"SYN"};
      c.constant = true;
    }
    if (o_tickers->count()) {
      c.symbols.clear();
      for (std::size_t i = 0; i < tickers; ++i) c.symbols.push_back("S" + std::to_string(i));
    }
    if (!start.empty()) c.start = parse_date_flag(start, "--start");
    if (!end.empty()) c.end = parse_date_flag(end, "--end");
    if (o_drift->count()) c.base_drift = drift;
    if (o_trend_drift->count()) c.trend_drift = trend_drift;
    if (o_trend_start->count()) c.trend_start = trend_start;
    if (o_vol->count()) c.volatility = volatility;
    if (o_shock->count()) c.shock_probability = shock;
    c.seed = seed;
    if (!(c.start <= c.end)) throw UsageError("--start is after --end");

    market::SplitDates s;
    if (!train_start.empty()) s.train_start = parse_date_flag(train_start, "--train-start");
    if (!train_end.empty()) s.train_end = parse_date_flag(train_end, "--train-end");
    if (!test_start.empty()) s.test_start = parse_date_flag(test_start, "--test-start");
    if (!test_end.empty()) s.test_end = parse_date_flag(test_end, "--test-end");
    try {
      s.validate();
    } catch (const ContractError& e) {
      throw UsageError(e.what());
    }
    return {c, s};
  }
};

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Recurrent PPO stock trading with xLSTM or LSTM actor-critic policies."};
  app.name("xltrade");
  app.require_subcommand(1);

  SynthFlags synth;
  auto* synth_cmd = app.add_subcommand("synth", "Write a seeded synthetic market in the Yahoo CSV format");
  synth.attach(synth_cmd);

  RunFlags train, backtest, compare;
  auto* train_cmd = app.add_subcommand("train", "Train a policy; writes checkpoint, log and config echo");
  train.attach(train_cmd);

  auto* backtest_cmd = app.add_subcommand("backtest", "Run a checkpoint over the test split");
  backtest.attach(backtest_cmd);
  std::string checkpoint;
  backtest_cmd->add_option("--checkpoint", checkpoint, "Checkpoint file (default: <out>/checkpoint.bin)");

  auto* compare_cmd = app.add_subcommand(
      "compare", "Train and backtest both models per window (batch 32 for xlstm, 64 for lstm unless --batch-size)");
  compare.attach(compare_cmd);
  bool paper_presets = false;
  std::vector<std::size_t> windows;
  compare_cmd->add_flag("--paper-presets", paper_presets,
                        "Windows 30, 15 and 5");
  compare_cmd->add_option("--windows", windows, "Windows to compare")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (synth_cmd->parsed()) {
      const auto [config, splits] = synth.resolve();
      cmd_synth(synth.out, config, splits, out);
    } else if (train_cmd->parsed()) {
      cmd_train(train.resolve(), out);
    } else if (backtest_cmd->parsed()) {
      cmd_backtest(backtest.resolve(), checkpoint, out);
    } else if (compare_cmd->parsed()) {
      RunConfig base = compare.resolve();
      std::vector<std::size_t> ws = windows;
      const bool batch_given = compare.o_batch->count() > 0;
      if (paper_presets) {
        if (ws.empty()) ws = {30, 15, 5};
      } else if (ws.empty()) {
        ws = {base.window};
      }
      cmd_compare(base, ws, !batch_given, out);
    }
    return kExitOk;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\nRun with --help for usage.\n";
    return kExitUsage;
  } catch (const ContractError& e) {
    err << "error: " << e.what() << "\nRun with --help for usage.\n";
    return kExitUsage;
  } catch (const market::ParseError& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const market::DataError& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const ppo::NumericAbort& e) {
    err << "numeric failure: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const NonFiniteError& e) {
    err << "numeric failure: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const numerics::CheckpointError& e) {
    err << "checkpoint mismatch: " << e.what() << '\n';
    return kExitCheckpoint;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace xltrade::app
