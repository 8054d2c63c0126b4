#pragma once

#include <memory>
#include <string>
#include <vector>

#include "vprop/consistency.hpp"
#include "vprop/envs/env.hpp"

namespace vprop {

/// Per-agent action probabilities at a raw state. Agents sample
/// independently, so the joint policy is the product of these rows.
class JointPolicy {
 public:
  virtual ~JointPolicy() = default;
  virtual Eigen::VectorXd probs(const MultiAgentEnv& env, const RawState& s, int agent) const = 0;
};

/// Softmax policy nets fed with each agent's actor observation.
class SoftmaxPolicies : public JointPolicy {
 public:
  explicit SoftmaxPolicies(std::vector<const ParamVector*> pis) : pis_(std::move(pis)) {}
  Eigen::VectorXd probs(const MultiAgentEnv& env, const RawState& s, int agent) const override;

 private:
  std::vector<const ParamVector*> pis_;
};

struct Trajectory {
  std::vector<RawState> states;  // length T + 1
  std::vector<std::vector<int>> actions;
  std::vector<std::vector<double>> rewards;
  bool terminated = false;

  int length() const { return static_cast<int>(actions.size()); }
};

/// Rolls out one episode, each agent sampling from its own row of `policy`.
Trajectory collect_episode(MultiAgentEnv& env, const JointPolicy& policy, Rng& rng);

/// A window into a stored trajectory.
struct SegmentRef {
  std::shared_ptr<const Trajectory> traj;
  int start = 0;
  int length = 0;
};

/// Overlapping stride-1 windows of up to k steps; windows near the end of the
/// episode are shortened and bootstrap from the final state.
std::vector<SegmentRef> episode_windows(const std::shared_ptr<const Trajectory>& traj, int k);

Segment materialize(const SegmentRef& ref, const MultiAgentEnv& env);

class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  void add(SegmentRef ref);
  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  const SegmentRef& at(std::size_t i) const { return items_.at(i); }

  /// Uniform with replacement; returns buffer indices.
  std::vector<std::size_t> sample_indices(std::size_t m, Rng& rng) const;

 private:
  std::size_t capacity_;
  std::size_t next_ = 0;
  std::vector<SegmentRef> items_;
};

/// One JSON object per step: state, actions, rewards, done.
std::string trajectory_to_jsonl(const Trajectory& traj);

}  // namespace vprop
