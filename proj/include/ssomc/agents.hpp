#pragma once

#include <cstdint>
#include <deque>
#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "ssomc/neural.hpp"
#include "ssomc/rng.hpp"

namespace ssomc {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Net = DenseNet<double>;

enum class AgentKind { Baseline, A2C, PPO, SAC };

AgentKind parse_agent_kind(std::string_view text);
std::string_view to_string(AgentKind kind);

struct AgentConfig {
  double gamma = 0.9;
  double actor_lr = 1e-3;
  double critic_lr = 1e-4;
  int update_period = 5;  ///< epochs between network updates
  double sigma = 0.05;    ///< exploration noise and policy standard deviation
  int window = 5;         ///< L_w
  int hidden = 200;
  double clip_norm = 1.0;
  double entropy_coef = 0.01;  ///< A2C
  double ppo_clip = 0.2;
  double ppo_value_coef = 0.5;     ///< p1
  double ppo_entropy_coef = 0.01;  ///< p2
  int ppo_epochs = 4;
  double sac_alpha = 0.05;
  double sac_tau = 0.005;
  int batch_size = 64;
  int buffer_capacity = 10000;
};

// --- small math helpers -------------------------------------------------------

Vec softmax(const Vec& logits);
/// Entropy of softmax(logits) and its gradient w.r.t. the logits.
double softmax_entropy(const Vec& logits);
Vec softmax_entropy_gradient(const Vec& logits);
/// Diagonal Gaussian with a shared standard deviation (floored at 1e-6).
double gaussian_log_density(const Vec& action, const Vec& mean, double sigma);
/// (x - mean) / (std + 1e-8) with the population standard deviation.
std::vector<double> standardize_returns(const std::vector<double>& values);
/// R_i = r_i + gamma * R_{i+1}, seeded with `bootstrap` after the last step.
std::vector<double> discounted_returns(const std::vector<double>& rewards, double bootstrap, double gamma);

// --- state --------------------------------------------------------------------

/// Normalized measures of one completed epoch.
struct ScoreSnapshot {
  Vec pi1, pi2, s1;
};

/// Window x 3 x n tensor flattened row-major, newest epoch last, older slots zero.
Vec encode_state(const std::deque<ScoreSnapshot>& history, int window, int n);

struct Transition {
  Vec state;
  Vec action;  ///< noisy pre-softmax action
  double log_prob = 0.0;  ///< under the policy that produced it
  double reward = 0.0;
  Vec next_state;
  bool terminal = false;
};

class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity = 10000) : capacity_(capacity) {}
  void push(Transition t);
  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  const Transition& operator[](std::size_t i) const { return items_[i]; }
  std::vector<std::size_t> sample(std::size_t count, Rng& rng) const;

 private:
  std::size_t capacity_;
  std::deque<Transition> items_;
};

// --- agents -------------------------------------------------------------------

class Agent {
 public:
  Agent(AgentKind kind, int heuristics, const AgentConfig& config, std::uint64_t seed);
  virtual ~Agent() = default;

  AgentKind kind() const { return kind_; }
  int heuristics() const { return n_; }
  int state_size() const { return config_.window * 3 * n_; }
  const AgentConfig& config() const { return config_; }
  int updates() const { return updates_; }
  const ReplayBuffer& buffer() const { return buffer_; }

  /// Stores the transition that ends at `state`, updates every
  /// `update_period` transitions and returns the next score vector S2.
  Vec epoch_step(const Vec& state, double reward);
  /// Closes the episode with a terminal transition and a final update.
  void finish(const Vec& state, double reward);

  /// softmax(mean + N(0, sigma)); remembers the action for the next transition.
  Vec act(const Vec& state);
  virtual Vec policy_mean(const Vec& state) = 0;

  virtual void save(const std::filesystem::path& path) const = 0;
  virtual void load(const std::filesystem::path& path) = 0;

 protected:
  /// Returns false when the update was skipped.
  virtual bool learn(const std::vector<Transition>& rollout, bool terminal) = 0;

  AgentKind kind_;
  int n_;
  AgentConfig config_;
  Rng rng_;
  ReplayBuffer buffer_;
  std::vector<Transition> rollout_;
  bool has_last_ = false;
  Vec last_state_, last_action_;
  double last_log_prob_ = 0.0;
  int updates_ = 0;
};

/// Inputs of one actor-critic update with the bootstrapped targets frozen.
struct RolloutBatch {
  Mat states;   ///< state x k
  Mat actions;  ///< n x k
  Vec returns;
  Vec advantages;
  Vec old_log_probs;
};

/// Shared trunk (tanh) feeding an actor head and a critic head.
class ActorCritic : public Agent {
 public:
  ActorCritic(AgentKind kind, int heuristics, const AgentConfig& config, std::uint64_t seed);

  Vec policy_mean(const Vec& state) override;
  double value(const Vec& state);

  /// Standardized rewards, n-step returns bootstrapped with V(s_last) unless
  /// terminal, advantages R - V under the current parameters.
  RolloutBatch prepare(const std::vector<Transition>& rollout, bool terminal);

  /// Loss of the variant and its gradient over [trunk, actor, critic].
  double loss(const RolloutBatch& batch, Vec* gradient);
  double a2c_loss(const RolloutBatch& batch, Vec* gradient);
  double ppo_loss(const RolloutBatch& batch, Vec* gradient);

  Vec parameters() const;
  void set_parameters(const Vec& flat);

  Net& trunk() { return trunk_; }
  Net& actor() { return actor_; }
  Net& critic() { return critic_; }

  void save(const std::filesystem::path& path) const override;
  void load(const std::filesystem::path& path) override;

 protected:
  bool learn(const std::vector<Transition>& rollout, bool terminal) override;

 private:
  template <typename PolicyTerm>
  double combined_loss(const RolloutBatch& batch, Vec* gradient, double value_coef, double entropy_coef,
                       PolicyTerm&& policy_term);
  void step(const Vec& gradient);

  Net trunk_, actor_, critic_;
  Adamax<double> actor_opt_, critic_opt_;
};

struct SacBatch {
  Mat states, actions, next_states;
  Vec rewards;  ///< standardized within the batch
  Vec not_done;
  Mat noise;  ///< standard normal draws for the reparameterized action
};

class SoftActorCritic : public Agent {
 public:
  SoftActorCritic(int heuristics, const AgentConfig& config, std::uint64_t seed);

  Vec policy_mean(const Vec& state) override;

  SacBatch sample_batch();
  double value_loss(const SacBatch& batch, Vec* gradient);
  double q_loss(const SacBatch& batch, Vec* gradient);
  double policy_loss(const SacBatch& batch, Vec* gradient);
  void update_target();

  Net& policy() { return policy_; }
  Net& q() { return q_; }
  Net& v() { return v_; }
  Net& v_target() { return v_target_; }

  void save(const std::filesystem::path& path) const override;
  void load(const std::filesystem::path& path) override;

 protected:
  bool learn(const std::vector<Transition>& rollout, bool terminal) override;

 private:
  Net policy_, q_, v_, v_target_;
  Adamax<double> policy_opt_, q_opt_, v_opt_;
};

/// Null for AgentKind::Baseline.
std::unique_ptr<Agent> make_agent(AgentKind kind, int heuristics, const AgentConfig& config, std::uint64_t seed);

}  // namespace ssomc
