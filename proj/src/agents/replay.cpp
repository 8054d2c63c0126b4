#include "vprop/agents/replay.hpp"

#include <algorithm>
#include <stdexcept>

#include <json.hpp>

namespace vprop {

Eigen::VectorXd SoftmaxPolicies::probs(const MultiAgentEnv& env, const RawState& s, int agent) const {
  return forward(*pis_.at(agent), env.actor_features(s, agent));
}

Trajectory collect_episode(MultiAgentEnv& env, const JointPolicy& policy, Rng& rng) {
  Trajectory tr;
  tr.states.push_back(env.reset(rng));
  const int n = env.n_agents();
  for (int t = 0; t < env.horizon(); ++t) {
    std::vector<int> joint(n);
    for (int i = 0; i < n; ++i) joint[i] = sample_index(policy.probs(env, tr.states.back(), i), rng);
    StepResult r = env.step(joint, rng);
    tr.actions.push_back(std::move(joint));
    tr.rewards.push_back(std::move(r.rewards));
    tr.states.push_back(std::move(r.next));
    if (r.done) {
      tr.terminated = true;
      break;
    }
  }
  return tr;
}

std::vector<SegmentRef> episode_windows(const std::shared_ptr<const Trajectory>& traj, int k) {
  if (k < 1) throw std::invalid_argument("rollout length must be >= 1");
  std::vector<SegmentRef> out;
  const int T = traj->length();
  for (int s = 0; s < T; ++s) out.push_back(SegmentRef{traj, s, std::min(k, T - s)});
  return out;
}

Segment materialize(const SegmentRef& ref, const MultiAgentEnv& env) {
  const Trajectory& tr = *ref.traj;
  if (ref.length < 1 || ref.start < 0 || ref.start + ref.length > tr.length())
    throw std::invalid_argument("segment window outside its trajectory");
  const int n = env.n_agents();
  Segment seg;
  for (int t = 0; t <= ref.length; ++t) seg.critic.push_back(env.critic_features(tr.states[ref.start + t]));
  for (int t = 0; t < ref.length; ++t) {
    const RawState& s = tr.states[ref.start + t];
    std::vector<Eigen::VectorXd> obs;
    obs.reserve(n);
    for (int i = 0; i < n; ++i) obs.push_back(env.actor_features(s, i));
    seg.actor.push_back(std::move(obs));
    seg.actions.push_back(tr.actions[ref.start + t]);
    seg.rewards.push_back(tr.rewards[ref.start + t]);
  }
  return seg;
}

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw std::invalid_argument("replay capacity must be positive");
}

void ReplayBuffer::add(SegmentRef ref) {
  if (items_.size() < capacity_) {
    items_.push_back(std::move(ref));
  } else {
    items_[next_] = std::move(ref);
  }
  next_ = (next_ + 1) % capacity_;
}

std::vector<std::size_t> ReplayBuffer::sample_indices(std::size_t m, Rng& rng) const {
  if (items_.empty()) throw std::invalid_argument("cannot sample from an empty replay buffer");
  std::vector<std::size_t> idx(m);
  for (auto& i : idx) i = rng.index(items_.size());
  return idx;
}

std::string trajectory_to_jsonl(const Trajectory& traj) {
  std::string out;
  for (int t = 0; t < traj.length(); ++t) {
    nlohmann::json j;
    j["t"] = t;
    j["state"] = traj.states[t];
    j["actions"] = traj.actions[t];
    j["rewards"] = traj.rewards[t];
    j["done"] = traj.terminated && t + 1 == traj.length();
    out += j.dump();
    out += '\n';
  }
  return out;
}

}  // namespace vprop
