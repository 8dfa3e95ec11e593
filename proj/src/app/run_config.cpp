#include "xltrade/app/run_config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "xltrade/market/observation.hpp"
#include "xltrade/numerics/errors.hpp"

namespace xltrade::app {

using nlohmann::ordered_json;

void RunConfig::validate() const {
  if (window < 1) throw UsageError("window must be at least 1");
  if (manifest.empty()) throw UsageError("a dataset manifest is required");
  try {
    splits.validate();
    stack.validate();
    env_config(0.0).validate();
    ppo::TrainConfig t = train;
    t.validate();
  } catch (const ContractError& e) {
    throw UsageError(e.what());
  } catch (const DimensionError& e) {
    throw UsageError(e.what());
  }
  if (turbulence_threshold && std::isnan(*turbulence_threshold)) throw UsageError("turbulence threshold is NaN");
}

std::string RunConfig::to_json() const {
  ordered_json j;
  j["manifest"] = manifest.generic_string();
  j["out"] = out.generic_string();
  j["model"] = policy::to_string(model);
  j["window"] = window;
  j["seed"] = seed;
  j["init"] = zero_init ? "zeros" : "random";
  j["splits"] = {{"train_start", splits.train_start.to_string()},
                 {"train_end", splits.train_end.to_string()},
                 {"test_start", splits.test_start.to_string()},
                 {"test_end", splits.test_end.to_string()}};
  ordered_json layers = ordered_json::array();
  for (auto k : stack.layers) layers.push_back(xlstm::to_string(k));
  j["policy"] = {{"embedding_dim", stack.embedding_dim},
                 {"n_heads", stack.n_heads},
                 {"layers", layers},
                 {"mlp_expansion", stack.mlp_expansion},
                 {"layernorm_eps", stack.layernorm_eps}};
  j["env"] = {{"initial_balance", env.initial_balance},
              {"h_max", env.h_max},
              {"cost_rate", env.cost_rate},
              {"reward_scale", env.reward_scale},
              {"penalty_value", env.penalty_value},
              {"trade_through_turbulence", !env.block_turbulent_trades},
              {"turbulence_threshold",
               turbulence_threshold ? ordered_json(*turbulence_threshold) : ordered_json(nullptr)}};
  j["train"] = {{"gamma", train.gamma},
                {"gae_lambda", train.gae_lambda},
                {"clip_range", train.clip_range},
                {"learning_rate", train.learning_rate},
                {"batch_size", train.batch_size},
                {"seq_len", train.seq_len ? train.seq_len : window},
                {"epochs", train.epochs},
                {"value_coef", train.value_coef},
                {"entropy_coef", train.entropy_coef},
                {"max_grad_norm", train.max_grad_norm},
                {"total_timesteps", train.total_timesteps},
                {"horizon", train.horizon},
                {"normalize_advantages", train.normalize_advantages}};
  return j.dump(2);
}

void RunConfig::merge_json(const std::string& text) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const ordered_json::exception& e) {
    throw UsageError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw UsageError("config must be a JSON object");
  static const std::vector<std::string> known{"manifest", "out", "model", "window", "seed", "init",
                                              "splits", "policy", "env", "train"};
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::find(known.begin(), known.end(), it.key()) == known.end()) {
      throw UsageError("unknown config key '" + it.key() + "'");
    }
  }
  try {
    auto get = [](const ordered_json& obj, const char* key, auto& field) {
      if (obj.contains(key)) field = obj.at(key).get<std::decay_t<decltype(field)>>();
    };
    if (j.contains("manifest")) manifest = j["manifest"].get<std::string>();
    if (j.contains("out")) out = j["out"].get<std::string>();
    if (j.contains("model")) model = policy::model_kind_from_string(j["model"].get<std::string>());
    get(j, "window", window);
    get(j, "seed", seed);
    if (j.contains("init")) {
      const auto init = j["init"].get<std::string>();
      if (init != "zeros" && init != "random") throw UsageError("init must be 'zeros' or 'random'");
      zero_init = init == "zeros";
    }
    if (j.contains("splits")) {
      const auto& s = j["splits"];
      auto date = [&](const char* key, std::optional<market::Date>& field) {
        if (s.contains(key)) field = market::Date::parse(s.at(key).get<std::string>());
      };
      date("train_start", split_overrides.train_start);
      date("train_end", split_overrides.train_end);
      date("test_start", split_overrides.test_start);
      date("test_end", split_overrides.test_end);
    }
    if (j.contains("policy")) {
      const auto& p = j["policy"];
      get(p, "embedding_dim", stack.embedding_dim);
      get(p, "n_heads", stack.n_heads);
      get(p, "mlp_expansion", stack.mlp_expansion);
      get(p, "layernorm_eps", stack.layernorm_eps);
      if (p.contains("layers")) {
        stack.layers.clear();
        for (const auto& l : p["layers"]) stack.layers.push_back(xlstm::cell_kind_from_string(l.get<std::string>()));
      }
    }
    if (j.contains("env")) {
      const auto& e = j["env"];
      get(e, "initial_balance", env.initial_balance);
      get(e, "h_max", env.h_max);
      get(e, "cost_rate", env.cost_rate);
      get(e, "reward_scale", env.reward_scale);
      get(e, "penalty_value", env.penalty_value);
      if (e.contains("trade_through_turbulence")) {
        env.block_turbulent_trades = !e["trade_through_turbulence"].get<bool>();
      }
      if (e.contains("turbulence_threshold")) {
        if (e["turbulence_threshold"].is_null()) {
          turbulence_threshold.reset();
        } else {
          turbulence_threshold = e["turbulence_threshold"].get<double>();
        }
      }
    }
    if (j.contains("train")) {
      const auto& t = j["train"];
      get(t, "gamma", train.gamma);
      get(t, "gae_lambda", train.gae_lambda);
      get(t, "clip_range", train.clip_range);
      get(t, "learning_rate", train.learning_rate);
      get(t, "batch_size", train.batch_size);
      get(t, "seq_len", train.seq_len);
      get(t, "epochs", train.epochs);
      get(t, "value_coef", train.value_coef);
      get(t, "entropy_coef", train.entropy_coef);
      get(t, "max_grad_norm", train.max_grad_norm);
      get(t, "total_timesteps", train.total_timesteps);
      get(t, "horizon", train.horizon);
      get(t, "normalize_advantages", train.normalize_advantages);
    }
  } catch (const ordered_json::exception& e) {
    throw UsageError(std::string("bad config value: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw UsageError(std::string("bad config value: ") + e.what());
  } catch (const ContractError& e) {
    throw UsageError(std::string("bad config value: ") + e.what());
  }
}

env::EnvConfig RunConfig::env_config(double threshold) const {
  env::EnvConfig c = env;
  c.window = window;
  c.turbulence_threshold = threshold;
  return c;
}

policy::PolicyConfig RunConfig::policy_config(std::size_t n_tickers) const {
  policy::PolicyConfig c;
  c.obs_dim = market::observation_size(window, n_tickers);
  c.n_actions = n_tickers;
  c.kind = model;
  c.stack = stack;
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  RunConfig config;
  config.merge_json(buf.str());
  if (!config.manifest.empty() && config.manifest.is_relative()) {
    config.manifest = path.parent_path() / config.manifest;
  }
  return config;
}

market::Manifest resolve_manifest(RunConfig& config) {
  auto m = market::load_manifest(config.manifest);
  const auto& o = config.split_overrides;
  m.splits.train_start = o.train_start.value_or(m.splits.train_start);
  m.splits.train_end = o.train_end.value_or(m.splits.train_end);
  m.splits.test_start = o.test_start.value_or(m.splits.test_start);
  m.splits.test_end = o.test_end.value_or(m.splits.test_end);
  try {
    m.splits.validate();
  } catch (const ContractError& e) {
    throw UsageError(e.what());
  }
  config.splits = m.splits;
  return m;
}

}  // namespace xltrade::app
