// Runs every acceptance criterion and prints one PASS/FAIL line for each.
// Exit status is nonzero when any criterion fails.

#include <CLI11.hpp>
#include <algorithm>
#include <chrono>
#include <cstring>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <json.hpp>
#include <random>
#include <set>
#include <sstream>

#include "../support/metric_oracles.hpp"
#include "../support/naive_cells.hpp"
#include "../support/random_params.hpp"
#include "xltrade/app/commands.hpp"
#include "xltrade/numerics/gradient_check.hpp"
#include "xltrade/ppo/advantage.hpp"

using namespace xltrade;
namespace fs = std::filesystem;
using numerics::Tensor;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

Tensor row(const std::vector<double>& v) { return Tensor({1, v.size()}, v); }

// ---------------------------------------------------------------------------

Outcome gradient_fidelity() {
  std::mt19937_64 rng(2024);
  const auto inputs = testing::random_sequence(5, 3, rng);
  const auto weights = testing::random_sequence(5, 4, rng);
  auto rollout_loss = [&](auto step, auto state) {
    Tensor loss = Tensor::scalar(0.0);
    for (std::size_t t = 0; t < inputs.size(); ++t) {
      auto out = step(state, row(inputs[t]));
      loss = numerics::add(loss, numerics::sum(numerics::mul(out.hidden, row(weights[t]))));
      state = out.state;
    }
    return loss;
  };
  auto nrng = numerics::make_rng(5, 0);
  double worst = 0;
  std::string detail;
  auto record = [&](const char* name, double err) {
    worst = std::max(worst, err);
    detail += std::string(detail.empty() ? "" : ", ") + name + " " + fmt("%.2e", err);
  };
  {
    auto p = xlstm::SLstmParams::init(4, 3, 2, nrng);
    numerics::ParameterList list;
    p.collect("s", list);
    auto params = testing::tensors_of(list);
    record("sLSTM", numerics::gradient_check(
                        [&] {
                          return rollout_loss([&](const auto& s, const Tensor& x) { return xlstm::slstm_step(p, s, x); },
                                              xlstm::SLstmState::zeros(1, 4));
                        },
                        params, 1e-5));
  }
  {
    auto p = xlstm::MLstmParams::init(4, 3, 2, nrng);
    numerics::ParameterList list;
    p.collect("m", list);
    auto params = testing::tensors_of(list);
    record("mLSTM", numerics::gradient_check(
                        [&] {
                          return rollout_loss([&](const auto& s, const Tensor& x) { return xlstm::mlstm_step(p, s, x); },
                                              xlstm::MLstmState::zeros(1, 4, 2));
                        },
                        params, 1e-5));
  }
  {
    auto p = xlstm::LstmParams::init(4, 3, nrng);
    numerics::ParameterList list;
    p.collect("l", list);
    auto params = testing::tensors_of(list);
    record("LSTM", numerics::gradient_check(
                       [&] {
                         return rollout_loss([&](const auto& s, const Tensor& x) { return xlstm::lstm_step(p, s, x); },
                                             xlstm::LstmState::zeros(1, 4));
                       },
                       params, 1e-5));
  }
  for (auto kind : {policy::ModelKind::kXlstm, policy::ModelKind::kLstm}) {
    policy::PolicyConfig config;
    config.obs_dim = 6;
    config.n_actions = 2;
    config.kind = kind;
    config.stack.embedding_dim = 8;
    config.stack.n_heads = 2;
    auto params = policy::PolicyParams::init(config, nrng);
    const auto obs = testing::random_sequence(5, config.obs_dim, rng);
    const auto actions = testing::random_sequence(5, config.n_actions, rng);
    numerics::ParameterList actor;
    params.actor.collect("actor", config.kind, actor);
    actor.push_back({"log_std", params.log_std});
    auto tensors = testing::tensors_of(actor);
    const double err = numerics::gradient_check(
        [&] {
          auto e = policy::evaluate_sequence(config, params, policy::RecurrentPolicyState::zeros(config, 1), obs,
                                             actions);
          return numerics::sum(e.log_probs);
        },
        tensors, 1e-5);
    record(kind == policy::ModelKind::kXlstm ? "xLSTM actor" : "LSTM actor", err);
  }
  return {worst < 1e-4, "max relative error " + fmt("%.2e", worst) + " (" + detail + ")"};
}

// Largest |W x + R h + b| over a gate row for |x|, |h| <= 1.
double gate_bound(const Tensor& w, const Tensor& r, const Tensor& b) {
  double worst = 0;
  for (std::size_t i = 0; i < w.dim(0); ++i) {
    double s = std::abs(b[i]);
    for (std::size_t c = 0; c < w.dim(1); ++c) s += std::abs(w[i * w.dim(1) + c]);
    if (r.defined())
      for (std::size_t c = 0; c < r.dim(1); ++c) s += std::abs(r[i * r.dim(1) + c]);
    worst = std::max(worst, s);
  }
  return worst;
}

Outcome stabilizer_equivalence() {
  std::mt19937_64 rng(77);
  auto nrng = numerics::make_rng(77, 0);
  std::uniform_real_distribution<double> fill(0.5, 1.0);
  double worst_s = 0, worst_m = 0, widest = 0;
  for (int draw = 0; draw < 100; ++draw) {
    const std::size_t heads = draw % 2 ? 2 : 1;
    auto sl = xlstm::SLstmParams::init(4, 3, heads, nrng);
    auto ml = xlstm::MLstmParams::init(4, 3, heads, nrng);
    numerics::ParameterList sp, mp;
    sl.collect("s", sp);
    ml.collect("m", mp);
    testing::randomize_parameters(sp, rng, 1.0);
    testing::randomize_parameters(mp, rng, 1.0);
    // Restore the block-diagonal recurrence for multi-head draws.
    for (auto* g : {&sl.candidate, &sl.input_gate, &sl.forget_gate, &sl.output_gate}) {
      if (!sl.recurrent_mask.defined()) break;
      auto w = g->recurrent_weight.mutable_values();
      for (std::size_t i = 0; i < w.size(); ++i) w[i] *= sl.recurrent_mask[i];
    }
    double sb = 0, mb = 0;
    for (auto* g : {&sl.candidate, &sl.input_gate, &sl.forget_gate, &sl.output_gate})
      sb = std::max(sb, gate_bound(g->input_weight, g->recurrent_weight, g->bias));
    for (auto* g : {&ml.input_gate, &ml.forget_gate, &ml.output_gate})
      mb = std::max(mb, gate_bound(g->weight, Tensor(), g->bias));
    // Scale so every gate preactivation lies in [-2, 2] for inputs in [-1, 1].
    testing::scale_parameters(sp, 2.0 * fill(rng) / sb);
    testing::scale_parameters(mp, 2.0 * fill(rng) / mb);
    for (auto* g : {&sl.candidate, &sl.input_gate, &sl.forget_gate, &sl.output_gate})
      widest = std::max(widest, gate_bound(g->input_weight, g->recurrent_weight, g->bias));
    for (auto* g : {&ml.input_gate, &ml.forget_gate, &ml.output_gate})
      widest = std::max(widest, gate_bound(g->weight, Tensor(), g->bias));

    testing::NaiveSLstm naive_s(4);
    testing::NaiveMLstm naive_m(4, heads);
    auto s_state = xlstm::SLstmState::zeros(1, 4);
    auto m_state = xlstm::MLstmState::zeros(1, 4, heads);
    for (const auto& x : testing::random_sequence(20, 3, rng)) {
      auto s_out = xlstm::slstm_step(sl, s_state, row(x));
      auto m_out = xlstm::mlstm_step(ml, m_state, row(x));
      const auto s_ref = naive_s.step(sl, x);
      const auto m_ref = naive_m.step(ml, x);
      for (std::size_t k = 0; k < 4; ++k) {
        worst_s = std::max(worst_s, std::abs(s_out.hidden[k] - s_ref[k]));
        worst_m = std::max(worst_m, std::abs(m_out.hidden[k] - m_ref[k]));
      }
      s_state = s_out.state;
      m_state = m_out.state;
    }
  }

  // Preactivations of +-50: the naive recurrence overflows, the stabilized one must not.
  bool stable_finite = true, naive_overflow_s = false, naive_overflow_m = false;
  for (double sign : {1.0, -1.0}) {
    auto sl = xlstm::SLstmParams::zeros(2, 1);
    for (double& b : sl.forget_gate.bias.mutable_values()) b = 50.0;
    for (double& b : sl.input_gate.bias.mutable_values()) b = 50.0 * sign;
    for (double& b : sl.candidate.bias.mutable_values()) b = 0.3;
    auto ml = xlstm::MLstmParams::zeros(2, 1, 1);
    for (double& b : ml.forget_gate.bias.mutable_values()) b = 50.0;
    for (double& b : ml.input_gate.bias.mutable_values()) b = 50.0 * sign;
    for (double& w : ml.query.weight.mutable_values()) w = 1.0;
    for (double& w : ml.key.weight.mutable_values()) w = 1.0;
    for (double& w : ml.value.weight.mutable_values()) w = 0.5;
    testing::NaiveSLstm ns(2);
    testing::NaiveMLstm nm(2, 1);
    auto ss = xlstm::SLstmState::zeros(1, 2);
    auto ms = xlstm::MLstmState::zeros(1, 2, 1);
    for (int t = 0; t < 20; ++t) {
      auto so = xlstm::slstm_step(sl, ss, row({1.0}));
      auto mo = xlstm::mlstm_step(ml, ms, row({1.0}));
      for (double v : so.hidden.values()) stable_finite = stable_finite && std::isfinite(v);
      for (double v : mo.hidden.values()) stable_finite = stable_finite && std::isfinite(v);
      const auto rs = ns.step(sl, {1.0});
      const auto rm = nm.step(ml, {1.0});
      naive_overflow_s = naive_overflow_s || !std::isfinite(rs[0]);
      naive_overflow_m = naive_overflow_m || !std::isfinite(rm[0]);
      ss = so.state;
      ms = mo.state;
    }
  }
  const bool pass = worst_s <= 1e-8 && worst_m <= 1e-8 && widest <= 2.0 && stable_finite && naive_overflow_s &&
                    naive_overflow_m;
  return {pass, "max |diff| sLSTM " + fmt("%.1e", worst_s) + ", mLSTM " + fmt("%.1e", worst_m) +
                    " over 100 draws (preactivation bound " + fmt("%.3f", widest) + "); at +-50 stabilized " +
                    (stable_finite ? "finite" : "NON-FINITE") + ", naive " +
                    (naive_overflow_s && naive_overflow_m ? "overflows" : "stays finite")};
}

market::SplitDates splits(const char* train_end, const char* test_start, const char* test_end) {
  market::SplitDates s;
  s.train_end = market::Date::parse(train_end);
  s.test_start = market::Date::parse(test_start);
  s.test_end = market::Date::parse(test_end);
  return s;
}

struct RandomRun {
  std::size_t steps = 0, turbulent = 0, violations = 0, penalty_violations = 0;
  double worst_identity = 0;
};

RandomRun random_actions(std::size_t total_steps) {
  market::SyntheticConfig sc;
  sc.symbols = {"AAA", "BBB", "CCC", "DDD", "EEE"};
  sc.end = market::Date::parse("2014-12-31");
  sc.volatility = 0.02;
  sc.trend_drift = 0.0005;
  sc.shock_probability = 0.02;
  sc.seed = 41;
  const auto ds =
      market::build_dataset(market::align(market::generate_synthetic(sc)), splits("2013-12-31", "2014-01-01", "2014-12-31"));
  env::EnvConfig config;
  config.window = 10;
  config.turbulence_threshold = ds.train.turbulence.threshold;
  env::TradingEnv env(config, std::make_shared<market::MarketSplit>(ds.train));
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  RandomRun r;
  env.reset();
  while (r.steps < total_steps) {
    std::vector<double> action(5);
    for (double& a : action) a = unit(rng);
    const auto out = env.step(action);
    ++r.steps;
    const auto& s = env.state();
    bool ok = s.balance >= 0;
    for (auto q : s.shares) ok = ok && q >= 0;
    const double identity = env::total_value(s, ds.train.panel.prices(s.day));
    const double rel = std::abs(out.info.total_value - identity) / std::abs(identity);
    r.worst_identity = std::max(r.worst_identity, rel);
    if (!ok || !(rel <= 1e-6)) ++r.violations;
    if (out.info.turbulent) {
      ++r.turbulent;
      if (out.reward != -1.0 || !out.info.trades.empty()) ++r.penalty_violations;
    }
    if (out.done) env.reset();
  }
  return r;
}

Outcome accounting_soundness() {
  const auto r = random_actions(10'000);
  return {r.violations == 0, std::to_string(r.steps) + " random steps, " + std::to_string(r.violations) +
                                 " violations, worst identity error " + fmt("%.1e", r.worst_identity)};
}

Outcome penalty_exactness() {
  const auto r = random_actions(10'000);
  std::mt19937_64 rng(8);
  std::normal_distribution<double> normal;
  std::size_t mismatches = 0, checked = 0;
  for (int draw = 0; draw < 100; ++draw) {
    std::vector<double> rewards(50), values(50);
    for (auto& v : rewards) v = normal(rng);
    for (auto& v : values) v = normal(rng);
    const double boot = normal(rng), gamma = 0.99;
    const auto adv =
        ppo::compute_advantages(rewards, values, std::vector<std::uint8_t>(50, 0), boot, gamma, 0.0).advantages;
    for (std::size_t t = 0; t < 50; ++t) {
      const double next = t + 1 < 50 ? values[t + 1] : boot;
      const double expected = rewards[t] + gamma * next - values[t];
      mismatches += std::memcmp(&adv[t], &expected, sizeof(double)) != 0;
      ++checked;
    }
  }
  return {r.turbulent > 0 && r.penalty_violations == 0 && mismatches == 0,
          std::to_string(r.turbulent) + " turbulent steps, " + std::to_string(r.penalty_violations) +
              " without exact -1 and empty trades; " + std::to_string(checked - mismatches) + "/" +
              std::to_string(checked) + " one-step advantages bitwise equal"};
}

Outcome metric_oracles() {
  std::mt19937_64 rng(1234);
  std::size_t mpb_mismatch = 0, mer_below = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto curve = testing::random_curve(rng);
    if (metrics::max_pullback(curve) != testing::brute_force_pullback(curve)) ++mpb_mismatch;
    if (!(metrics::max_earning_rate(curve) >= metrics::cumulative_return(curve))) ++mer_below;
  }
  const double cr = metrics::cumulative_return(std::vector<double>{1'000'000, 1'531'100});
  const bool pass = mpb_mismatch == 0 && mer_below == 0 && std::abs(cr - 53.11) <= 1e-9;
  return {pass, std::to_string(1000 - mpb_mismatch) + "/1000 MPB exact, " + std::to_string(1000 - mer_below) +
                    "/1000 MER >= CR, CR(1,000,000 -> 1,531,100) = " + fmt("%.12f", cr)};
}

// Learning sanity sizing; see the README for the rationale.
struct LearningSetup {
  std::size_t timesteps = 60'000;
  std::size_t embedding = 16;
  std::size_t epochs = 4;
  std::size_t seeds = 5;
};

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

Outcome learning_sanity(const fs::path& work, const LearningSetup& setup) {
  market::SyntheticConfig sc;
  sc.symbols = {"SYN"};
  sc.start = market::Date::parse("2009-01-01");
  sc.end = market::Date::parse("2014-12-31");
  sc.trend_drift = 0.002;
  sc.trend_start = 0.3;
  sc.volatility = 0.01;
  sc.shock_probability = 0.005;
  sc.seed = 2;
  std::ostringstream sink;
  const auto manifest =
      app::cmd_synth(work / "trend_market", sc, splits("2013-12-31", "2014-01-01", "2014-12-31"), sink);

  app::RunConfig base;
  base.manifest = manifest;
  base.window = 5;
  base.stack.embedding_dim = setup.embedding;
  base.train.total_timesteps = setup.timesteps;
  base.train.epochs = setup.epochs;
  const auto data = app::load_dataset(base);

  std::vector<double> trained, random, zero;
  std::string per_seed;
  for (std::uint64_t seed = 0; seed < setup.seeds; ++seed) {
    app::RunConfig run = base;
    run.seed = seed;
    run.out = work / ("learning_seed" + std::to_string(seed));
    fs::create_directories(run.out);
    const auto outcome = app::run_training(run, data, nullptr);
    trained.push_back(app::run_backtest(run, data, outcome.policy_config, outcome.params).report.cr);
    const auto zeros = policy::PolicyParams::zeros(outcome.policy_config);
    zero.push_back(app::run_backtest(run, data, outcome.policy_config, zeros).report.cr);

    env::TradingEnv env(run.env_config(app::resolved_threshold(run, data)),
                        std::make_shared<market::MarketSplit>(data.test));
    env.reset();
    std::mt19937_64 rng(1000 + seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    double final_value = env.config().initial_balance;
    while (!env.done()) final_value = env.step(std::vector<double>{unit(rng)}).info.total_value;
    random.push_back(100.0 * (final_value - env.config().initial_balance) / env.config().initial_balance);
    per_seed += (per_seed.empty() ? "" : " ") + fmt("%.2f", trained.back());
  }
  const double mt = median(trained), mr = median(random), mz = median(zero);
  return {mt > mz && mt > mr, "median test CR trained " + fmt("%.2f", mt) + " vs zero-action " + fmt("%.2f", mz) +
                                  " and uniform-random " + fmt("%.2f", mr) + " (per seed: " + per_seed + "; " +
                                  std::to_string(setup.timesteps) + " timesteps each)"};
}

int run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "xltrade");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = app::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  if (code != 0) std::cerr << err.str();
  return code;
}

Outcome comparison_harness(const fs::path& work, const fs::path& bundled) {
  const auto out = work / "compare";
  fs::remove_all(out);
  const int code = run_cli({"compare", "--paper-presets", "--manifest", bundled.string(), "--out", out.string(),
                            "--embedding-dim", "8", "--timesteps", "256", "--horizon", "256", "--epochs", "1"});
  if (code != 0) return {false, "compare exited with code " + std::to_string(code)};
  const auto j = nlohmann::json::parse(slurp(out / "compare.json"));
  std::set<std::pair<std::string, int>> seen;
  bool batches_ok = true, keys_ok = true;
  for (const auto& r : j["rows"]) {
    seen.insert({r["model"].get<std::string>(), r["window"].get<int>()});
    batches_ok = batches_ok && r["batch_size"] == (r["model"] == "xlstm" ? 32 : 64);
    keys_ok = keys_ok && r["report"].size() == 6;
  }
  bool all = j["rows"].size() == 6;
  for (int w : {30, 15, 5}) all = all && seen.count({"xlstm", w}) && seen.count({"lstm", w});
  const auto tsv = slurp(out / "compare.tsv");
  const bool table = tsv.rfind("Model\tTime Window Size\tBatch Size\tCR\tMER\tMPB\tAPPT\tSR\n", 0) == 0 &&
                     std::count(tsv.begin(), tsv.end(), '\n') == 7;
  return {all && batches_ok && keys_ok && table,
          std::to_string(j["rows"].size()) + " rows covering " + std::to_string(seen.size()) +
              " model x window cells; comparison columns " + (table ? "present" : "MISSING")};
}

Outcome determinism(const fs::path& work, const fs::path& bundled) {
  std::vector<std::string> logs, reports, curves;
  for (const char* name : {"det_a", "det_b"}) {
    const auto out = (work / name).string();
    fs::remove_all(out);
    const std::vector<std::string> common{"--manifest", bundled.string(), "--out",      out,   "--window", "5",
                                          "--embedding-dim", "8",         "--timesteps", "600", "--horizon", "200",
                                          "--epochs",        "2",         "--seed",      "13"};
    auto train = common, backtest = common;
    train.insert(train.begin(), "train");
    backtest.insert(backtest.begin(), "backtest");
    if (run_cli(train) != 0 || run_cli(backtest) != 0) return {false, "a run failed"};
    logs.push_back(slurp(fs::path(out) / "train_log.jsonl"));
    reports.push_back(slurp(fs::path(out) / "report.json"));
    curves.push_back(slurp(fs::path(out) / "equity.csv"));
  }
  const bool pass = !logs[0].empty() && logs[0] == logs[1] && reports[0] == reports[1] && curves[0] == curves[1];
  return {pass, std::string("training logs ") + (logs[0] == logs[1] ? "identical" : "DIFFER") + " (" +
                    std::to_string(logs[0].size()) + " bytes), backtest reports " +
                    (reports[0] == reports[1] ? "identical" : "DIFFER")};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App cli{"Acceptance criteria"};
  std::string work_dir = (fs::temp_directory_path() / "xltrade_acceptance").string();
  std::string bundled = XLTRADE_BUNDLED_MANIFEST;
  std::vector<int> only;
  LearningSetup learning;
  cli.add_option("--work-dir", work_dir, "Scratch directory");
  cli.add_option("--manifest", bundled, "Bundled synthetic manifest");
  cli.add_option("--only", only, "Run only these criteria");
  cli.add_option("--learning-timesteps", learning.timesteps, "Timesteps per seed for criterion 6");
  cli.add_option("--learning-embedding", learning.embedding, "Recurrent width for criterion 6");
  cli.add_option("--learning-epochs", learning.epochs, "Epochs per update for criterion 6");
  CLI11_PARSE(cli, argc, argv);
  const fs::path work(work_dir);
  fs::create_directories(work);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"gradient fidelity", gradient_fidelity},
      {"stabilizer equivalence", stabilizer_equivalence},
      {"accounting soundness", accounting_soundness},
      {"reward/penalty exactness", penalty_exactness},
      {"metric oracles", metric_oracles},
      {"learning sanity", [&] { return learning_sanity(work, learning); }},
      {"comparison harness", [&] { return comparison_harness(work, bundled); }},
      {"determinism", [&] { return determinism(work, bundled); }},
  };
  const std::vector<double> budgets{60, 0, 0, 0, 0, 1800, 0, 0};  // seconds; 0 = no limit

  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i + 1);
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (budgets[i] > 0 && secs > budgets[i]) {
      o.pass = false;
      o.detail += "; over the " + fmt("%.0f", budgets[i]) + " s budget";
    }
    failed += o.pass ? 0 : 1;
    std::printf("[%s] %d %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", id, criteria[i].first.c_str(),
                o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
