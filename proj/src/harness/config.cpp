#include "vprop/harness/config.hpp"

#include <openssl/sha.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

#include "vprop/envs/random_mdp.hpp"
#include "vprop/errors.hpp"

namespace vprop {

using nlohmann::json;

double ExperimentConfig::resolved_connectivity() const {
  if (connectivity_ratio) return *connectivity_ratio;
  return std::min(1.0, 4.0 / n_agents);
}

namespace {

const char* env_name(EnvKind e) {
  switch (e) {
    case EnvKind::random_mdp: return "random_mdp";
    case EnvKind::navigation: return "navigation";
    case EnvKind::testbed: return "testbed";
  }
  return "?";
}

template <class T>
T get_as(const std::string& key, const json& v) {
  try {
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw ConfigError(key, "expected a boolean");
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) throw ConfigError(key, "expected an integer");
      if constexpr (std::is_unsigned_v<T>) {
        if (v.is_number_integer() && !v.is_number_unsigned() && v.get<long long>() < 0)
          throw ConfigError(key, "expected a non-negative integer");
      }
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) throw ConfigError(key, "expected a number");
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw ConfigError(key, "expected a string");
    }
    return v.get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(key, e.what());
  }
}

std::vector<int> get_widths(const std::string& key, const json& v) {
  if (!v.is_array()) throw ConfigError(key, "expected an array of layer widths");
  std::vector<int> out;
  for (const auto& x : v) {
    if (!x.is_number_integer() || x.get<long long>() <= 0) throw ConfigError(key, "layer widths must be positive integers");
    out.push_back(x.get<int>());
  }
  return out;
}

struct Field {
  const char* key;
  const char* description;
  std::function<json(const ExperimentConfig&)> get;
  std::function<void(ExperimentConfig&, const json&)> set;
};

#define NUM_FIELD(KEY, DESC, MEMBER, TYPE)                                          \
  Field {                                                                           \
    KEY, DESC, [](const ExperimentConfig& c) { return json(c.MEMBER); },            \
        [](ExperimentConfig& c, const json& v) { c.MEMBER = get_as<TYPE>(KEY, v); } \
  }

const std::vector<Field>& fields() {
  static const std::vector<Field> f = {
      {"preset", "name of the preset the config was resolved from", [](const ExperimentConfig& c) { return json(c.preset); },
       [](ExperimentConfig& c, const json& v) { c.preset = get_as<std::string>("preset", v); }},
      {"env", "random_mdp | navigation | testbed", [](const ExperimentConfig& c) { return json(env_name(c.env)); },
       [](ExperimentConfig& c, const json& v) {
         auto s = get_as<std::string>("env", v);
         if (s == "random_mdp") c.env = EnvKind::random_mdp;
         else if (s == "navigation") c.env = EnvKind::navigation;
         else if (s == "testbed") c.env = EnvKind::testbed;
         else throw ConfigError("env", "unknown environment '" + s + "'");
       }},
      {"method", "value_propagation | centralized | no_comm | independent_q",
       [](const ExperimentConfig& c) { return json(to_string(c.method)); },
       [](ExperimentConfig& c, const json& v) {
         try {
           c.method = parse_method(get_as<std::string>("method", v));
         } catch (const std::invalid_argument& e) {
           throw ConfigError("method", e.what());
         }
       }},
      NUM_FIELD("gamma", "discount factor, (0, 1)", train.gamma, double),
      NUM_FIELD("lambda", "entropy weight, >= 0", train.lambda, double),
      NUM_FIELD("eta", "dual weight, [0, 1]", train.eta, double),
      NUM_FIELD("k", "rollout length of the multi-step residual, >= 1", train.k, int),
      NUM_FIELD("iterations", "outer iterations (one episode each)", train.iterations, int),
      NUM_FIELD("dual_steps", "dual rounds per outer iteration", train.dual_steps, int),
      NUM_FIELD("batch_size", "minibatch size", train.batch_size, int),
      NUM_FIELD("theory_batch", "use ceil(sqrt(iterations)) as the minibatch size", train.theory_batch, bool),
      NUM_FIELD("alpha_v", "value step size", train.alpha_v, double),
      NUM_FIELD("alpha_pi", "policy step size", train.alpha_pi, double),
      NUM_FIELD("alpha_rho", "dual step size", train.alpha_rho, double),
      {"variant", "proxpda | accel", [](const ExperimentConfig& c) { return json(to_string(c.train.variant)); },
       [](ExperimentConfig& c, const json& v) {
         try {
           c.train.variant = parse_variant(get_as<std::string>("variant", v));
         } catch (const std::invalid_argument& e) {
           throw ConfigError("variant", e.what());
         }
       }},
      NUM_FIELD("seed", "master seed of the training run", train.seed, std::uint64_t),
      NUM_FIELD("eval_every", "iterations between log rows", train.eval_every, int),
      NUM_FIELD("eval_episodes", "Monte-Carlo episodes per evaluation (non-tabular envs)", train.eval_episodes, int),
      NUM_FIELD("probe_state_count", "probe states for value disagreement", train.probe_state_count, int),
      NUM_FIELD("replay_capacity", "replay buffer capacity in windows", train.replay_capacity, int),
      NUM_FIELD("adam_beta1", "first-moment decay", train.adam_beta1, double),
      NUM_FIELD("adam_beta2", "second-moment decay", train.adam_beta2, double),
      NUM_FIELD("adam_eps", "adaptive denominator stabilizer", train.adam_eps, double),
      {"v_hidden", "hidden widths of the value net", [](const ExperimentConfig& c) { return json(c.train.v_hidden); },
       [](ExperimentConfig& c, const json& v) { c.train.v_hidden = get_widths("v_hidden", v); }},
      {"pi_hidden", "hidden widths of the policy net", [](const ExperimentConfig& c) { return json(c.train.pi_hidden); },
       [](ExperimentConfig& c, const json& v) { c.train.pi_hidden = get_widths("pi_hidden", v); }},
      {"rho_hidden", "hidden widths of the dual net", [](const ExperimentConfig& c) { return json(c.train.rho_hidden); },
       [](ExperimentConfig& c, const json& v) { c.train.rho_hidden = get_widths("rho_hidden", v); }},
      NUM_FIELD("n_agents", "number of agents", n_agents, int),
      NUM_FIELD("n_states", "random MDP state count", n_states, int),
      NUM_FIELD("actions_per_agent", "random MDP actions per agent", actions_per_agent, int),
      NUM_FIELD("episode_len", "random MDP episode length", episode_len, int),
      NUM_FIELD("env_seed", "seed of the environment instance", env_seed, std::uint64_t),
      NUM_FIELD("nav_region", "side of the navigation square", nav.region, double),
      NUM_FIELD("nav_step_size", "move length per step", nav.step_size, double),
      NUM_FIELD("nav_move_prob", "probability of moving as intended", nav.move_prob, double),
      NUM_FIELD("nav_reach_radius", "landmark reach distance", nav.reach_radius, double),
      NUM_FIELD("nav_reach_reward", "reward on first reach", nav.reach_reward, double),
      NUM_FIELD("nav_collision_radius", "collision distance", nav.collision_radius, double),
      NUM_FIELD("nav_collision_penalty", "reward per colliding pair member", nav.collision_penalty, double),
      NUM_FIELD("max_steps", "navigation episode cap", nav.max_steps, int),
      {"observation", "full | partial (actor inputs)",
       [](const ExperimentConfig& c) { return json(c.observation == ObservationMode::full ? "full" : "partial"); },
       [](ExperimentConfig& c, const json& v) {
         auto s = get_as<std::string>("observation", v);
         if (s == "full") c.observation = ObservationMode::full;
         else if (s == "partial") c.observation = ObservationMode::partial;
         else throw ConfigError("observation", "expected full or partial");
       }},
      {"graph", "random | complete | ring | path", [](const ExperimentConfig& c) { return json(c.graph); },
       [](ExperimentConfig& c, const json& v) { c.graph = get_as<std::string>("graph", v); }},
      {"connectivity_ratio", "per-pair edge probability; null means 4 / n_agents",
       [](const ExperimentConfig& c) { return c.connectivity_ratio ? json(*c.connectivity_ratio) : json(nullptr); },
       [](ExperimentConfig& c, const json& v) {
         if (v.is_null()) c.connectivity_ratio.reset();
         else c.connectivity_ratio = get_as<double>("connectivity_ratio", v);
       }},
      NUM_FIELD("graph_seed", "seed of the random graph", graph_seed, std::uint64_t),
      NUM_FIELD("testbed_dim", "least-squares testbed dimension", testbed_dim, int),
  };
  return f;
}

#undef NUM_FIELD

void require(bool ok, const char* key, const std::string& msg) {
  if (!ok) throw ConfigError(key, msg);
}

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%g", x);
  return buf;
}

}  // namespace

void validate_config(const ExperimentConfig& c) {
  const TrainConfig& t = c.train;
  require(t.gamma > 0.0 && t.gamma < 1.0, "gamma", "must lie in (0, 1), got " + fmt(t.gamma));
  require(t.lambda >= 0.0, "lambda", "must be >= 0, got " + fmt(t.lambda));
  require(t.eta >= 0.0 && t.eta <= 1.0, "eta", "must lie in [0, 1], got " + fmt(t.eta));
  require(t.k >= 1, "k", "must be >= 1");
  require(t.iterations >= 1, "iterations", "must be >= 1");
  require(t.dual_steps >= 0, "dual_steps", "must be >= 0");
  require(t.batch_size >= 1, "batch_size", "must be >= 1");
  require(t.alpha_v > 0.0, "alpha_v", "must be > 0");
  require(t.alpha_pi > 0.0, "alpha_pi", "must be > 0");
  require(t.alpha_rho > 0.0, "alpha_rho", "must be > 0");
  require(t.eval_every >= 1, "eval_every", "must be >= 1");
  require(t.eval_episodes >= 1, "eval_episodes", "must be >= 1");
  require(t.probe_state_count >= 1, "probe_state_count", "must be >= 1");
  require(t.replay_capacity >= 1, "replay_capacity", "must be >= 1");
  require(t.adam_beta1 >= 0.0 && t.adam_beta1 < 1.0, "adam_beta1", "must lie in [0, 1)");
  require(t.adam_beta2 >= 0.0 && t.adam_beta2 < 1.0, "adam_beta2", "must lie in [0, 1)");
  require(t.adam_eps > 0.0, "adam_eps", "must be > 0");
  require(c.n_agents >= 1, "n_agents", "must be >= 1");
  require(c.n_states >= 2, "n_states", "must be >= 2");
  require(c.actions_per_agent >= 2, "actions_per_agent", "must be >= 2");
  require(c.episode_len >= 1, "episode_len", "must be >= 1");
  require(c.nav.region > 0.0, "nav_region", "must be > 0");
  require(c.nav.step_size > 0.0, "nav_step_size", "must be > 0");
  require(c.nav.move_prob >= 0.0 && c.nav.move_prob <= 1.0, "nav_move_prob", "must lie in [0, 1]");
  require(c.nav.reach_radius > 0.0, "nav_reach_radius", "must be > 0");
  require(c.nav.collision_radius >= 0.0, "nav_collision_radius", "must be >= 0");
  require(c.nav.max_steps >= 1, "max_steps", "must be >= 1");
  require(c.graph == "random" || c.graph == "complete" || c.graph == "ring" || c.graph == "path", "graph",
          "expected random, complete, ring or path");
  if (c.connectivity_ratio)
    require(*c.connectivity_ratio > 0.0 && *c.connectivity_ratio <= 1.0, "connectivity_ratio", "must lie in (0, 1]");
  require(c.testbed_dim >= 1, "testbed_dim", "must be >= 1");
  if (c.env == EnvKind::testbed) require(c.n_agents >= 2, "n_agents", "testbed needs at least 2 agents");
}

std::vector<std::string> preset_names() {
  return {"random-mdp-ablation", "coop-nav", "coop-nav-small", "coop-nav-16", "optim-testbed"};
}

ExperimentConfig preset_config(const std::string& name) {
  ExperimentConfig c;  // defaults are the random-MDP ablation settings
  c.preset = name;
  c.train.iterations = 20000;
  c.train.eval_every = 500;
  if (name == "random-mdp-ablation") return c;
  if (name == "coop-nav" || name == "coop-nav-small" || name == "coop-nav-16") {
    c.env = EnvKind::navigation;
    c.train.gamma = 0.95;
    c.train.lambda = 0.01;
    c.train.k = 4;
    c.train.v_hidden = {40, 40};
    c.train.rho_hidden = {40, 40};
    c.train.pi_hidden = {32};
    c.train.iterations = 2000;
    c.train.eval_every = 50;
    c.n_agents = name == "coop-nav-small" ? 4 : name == "coop-nav-16" ? 16 : 8;
    c.nav.max_steps = name == "coop-nav-small" ? 200 : 500;
    return c;
  }
  if (name == "optim-testbed") {
    c.env = EnvKind::testbed;
    c.n_agents = 5;
    c.graph = "ring";
    c.testbed_dim = 4;
    c.train.iterations = 2000;
    c.train.eval_every = 1;
    return c;
  }
  throw ConfigError("preset", "unknown preset '" + name + "'");
}

ExperimentConfig resolve_config(const json& j) {
  if (!j.is_object()) throw ConfigError("", "configuration must be a JSON object");
  ExperimentConfig c = j.contains("preset") ? preset_config(get_as<std::string>("preset", j.at("preset")))
                                            : ExperimentConfig{};
  for (const auto& [key, value] : j.items()) {
    if (key == "format_version") continue;
    auto it = std::find_if(fields().begin(), fields().end(), [&](const Field& f) { return key == f.key; });
    if (it == fields().end()) throw ConfigError(key, "unknown configuration key");
    if (key == "preset") continue;
    it->set(c, value);
  }
  c.nav.n_agents = c.n_agents;
  validate_config(c);
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot open configuration file '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("", "malformed JSON in '" + path + "': " + e.what());
  }
  if (j.is_object() && j.contains("config") && j.contains("config_hash")) return resolve_config(j.at("config"));
  return resolve_config(j);
}

json config_to_json(const ExperimentConfig& cfg) {
  json j = json::object();
  j["format_version"] = 1;
  for (const auto& f : fields()) j[f.key] = f.get(cfg);
  return j;
}

std::string config_hash(const ExperimentConfig& cfg) {
  const std::string body = config_to_json(cfg).dump();
  std::string blob = "blob " + std::to_string(body.size());
  blob.push_back('\0');
  blob += body;
  unsigned char digest[SHA_DIGEST_LENGTH];
  SHA1(reinterpret_cast<const unsigned char*>(blob.data()), blob.size(), digest);
  std::string hex;
  char buf[3];
  for (unsigned char b : digest) {
    std::snprintf(buf, sizeof buf, "%02x", b);
    hex += buf;
  }
  return hex;
}

json config_schema() {
  json j;
  j["format_version"] = 1;
  const ExperimentConfig defaults;
  json keys = json::object();
  for (const auto& f : fields()) keys[f.key] = {{"default", f.get(defaults)}, {"description", f.description}};
  j["keys"] = keys;
  j["presets"] = json::object();
  for (const auto& name : preset_names()) j["presets"][name] = config_to_json(preset_config(name));
  return j;
}

CommGraph make_comm_graph(const ExperimentConfig& cfg) {
  const int n = cfg.n_agents;
  if (n < 2) return make_graph_unchecked(std::max(n, 1), {});
  if (cfg.graph == "complete") return complete_graph(n);
  if (cfg.graph == "ring") return ring_graph(n);
  if (cfg.graph == "path") return path_graph(n);
  return random_graph(n, cfg.resolved_connectivity(), cfg.graph_seed);
}

std::unique_ptr<MultiAgentEnv> make_env(const ExperimentConfig& cfg, const CommGraph& graph) {
  switch (cfg.env) {
    case EnvKind::random_mdp:
      return std::make_unique<RandomMdpEnv>(
          random_mdp_new(cfg.env_seed, cfg.n_states, cfg.n_agents, cfg.actions_per_agent), cfg.episode_len);
    case EnvKind::navigation: {
      NavConfig nav = cfg.nav;
      nav.n_agents = cfg.n_agents;
      return std::make_unique<NavigationEnv>(nav, graph, cfg.observation, cfg.env_seed);
    }
    case EnvKind::testbed:
      break;
  }
  throw ConfigError("env", "the testbed is not a multi-agent environment");
}

}  // namespace vprop
