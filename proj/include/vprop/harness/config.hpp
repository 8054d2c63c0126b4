#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "vprop/agents/trainer.hpp"
#include "vprop/comm_graph.hpp"
#include "vprop/envs/env.hpp"
#include "vprop/envs/navigation.hpp"

namespace vprop {

enum class EnvKind { random_mdp, navigation, testbed };

/// Fully resolved experiment description. Serialized as a flat JSON object;
/// see config_schema() for every key and its default.
struct ExperimentConfig {
  std::string preset;
  EnvKind env = EnvKind::random_mdp;
  Method method = Method::value_propagation;
  TrainConfig train;

  int n_agents = 10;
  int n_states = 32;
  int actions_per_agent = 2;
  int episode_len = 20;
  std::uint64_t env_seed = 0;

  NavConfig nav;
  ObservationMode observation = ObservationMode::full;

  std::string graph = "random";  // random | complete | ring | path
  std::optional<double> connectivity_ratio;  // unset: 4 / n_agents (capped at 1)
  std::uint64_t graph_seed = 0;

  int testbed_dim = 4;

  double resolved_connectivity() const;
};

std::vector<std::string> preset_names();
ExperimentConfig preset_config(const std::string& name);

/// Applies a flat JSON object of overrides. A "preset" key selects the base;
/// unknown keys and invalid values raise ConfigError naming the key.
ExperimentConfig resolve_config(const nlohmann::json& j);

/// Reads a config file or a run manifest (its "config" member is used).
ExperimentConfig load_config(const std::string& path);

nlohmann::json config_to_json(const ExperimentConfig& cfg);

/// Git-style blob hash (SHA-1 over "blob <len>\0" + canonical JSON).
std::string config_hash(const ExperimentConfig& cfg);

/// Every key with its default value and a short description.
nlohmann::json config_schema();

void validate_config(const ExperimentConfig& cfg);

std::unique_ptr<MultiAgentEnv> make_env(const ExperimentConfig& cfg, const CommGraph& graph);
CommGraph make_comm_graph(const ExperimentConfig& cfg);

}  // namespace vprop
