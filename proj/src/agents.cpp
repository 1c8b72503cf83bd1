#include "ssomc/agents.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "ssomc/model.hpp"

namespace ssomc {

AgentKind parse_agent_kind(std::string_view text) {
  if (text == "baseline") return AgentKind::Baseline;
  if (text == "a2c") return AgentKind::A2C;
  if (text == "ppo") return AgentKind::PPO;
  if (text == "sac") return AgentKind::SAC;
  throw InvalidConfig("unknown variant '" + std::string(text) + "' (expected baseline, a2c, ppo or sac)");
}

std::string_view to_string(AgentKind kind) {
  switch (kind) {
    case AgentKind::Baseline:
      return "baseline";
    case AgentKind::A2C:
      return "a2c";
    case AgentKind::PPO:
      return "ppo";
    case AgentKind::SAC:
      return "sac";
  }
  return "unknown";
}

Vec softmax(const Vec& logits) {
  const double top = logits.maxCoeff();
  Vec e = (logits.array() - top).exp().matrix();
  return e / e.sum();
}

double softmax_entropy(const Vec& logits) {
  const Vec p = softmax(logits);
  double h = 0.0;
  for (Eigen::Index j = 0; j < p.size(); ++j) {
    if (p[j] > 0.0) h -= p[j] * std::log(p[j]);
  }
  return h;
}

Vec softmax_entropy_gradient(const Vec& logits) {
  const Vec p = softmax(logits);
  const double h = softmax_entropy(logits);
  Vec g(p.size());
  for (Eigen::Index j = 0; j < p.size(); ++j) g[j] = p[j] > 0.0 ? -p[j] * (std::log(p[j]) + h) : 0.0;
  return g;
}

double gaussian_log_density(const Vec& action, const Vec& mean, double sigma) {
  const double s = std::max(sigma, 1e-6);
  const double z = (action - mean).squaredNorm() / (s * s);
  return -0.5 * z - static_cast<double>(action.size()) * (std::log(s) + 0.5 * std::log(2.0 * std::numbers::pi));
}

std::vector<double> standardize_returns(const std::vector<double>& values) {
  if (values.empty()) return {};
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / static_cast<double>(values.size()));
  std::vector<double> out;
  out.reserve(values.size());
  for (double v : values) out.push_back((v - mean) / (sd + 1e-8));
  return out;
}

std::vector<double> discounted_returns(const std::vector<double>& rewards, double bootstrap, double gamma) {
  std::vector<double> out(rewards.size());
  double r = bootstrap;
  for (std::size_t i = rewards.size(); i-- > 0;) {
    r = rewards[i] + gamma * r;
    out[i] = r;
  }
  return out;
}

Vec encode_state(const std::deque<ScoreSnapshot>& history, int window, int n) {
  Vec out = Vec::Zero(static_cast<Eigen::Index>(window) * 3 * n);
  const int have = std::min<int>(window, static_cast<int>(history.size()));
  for (int k = 0; k < have; ++k) {
    const auto& snap = history[history.size() - have + k];
    const int slot = window - have + k;
    const Eigen::Index base = static_cast<Eigen::Index>(slot) * 3 * n;
    out.segment(base, n) = snap.pi1;
    out.segment(base + n, n) = snap.pi2;
    out.segment(base + 2 * n, n) = snap.s1;
  }
  return out;
}

void ReplayBuffer::push(Transition t) {
  if (capacity_ == 0) return;
  if (items_.size() == capacity_) items_.pop_front();
  items_.push_back(std::move(t));
}

std::vector<std::size_t> ReplayBuffer::sample(std::size_t count, Rng& rng) const {
  std::vector<std::size_t> idx(count);
  for (auto& i : idx) i = static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(items_.size()) - 1));
  return idx;
}

// --- Agent ---------------------------------------------------------------------

Agent::Agent(AgentKind kind, int heuristics, const AgentConfig& config, std::uint64_t seed)
    : kind_(kind),
      n_(heuristics),
      config_(config),
      rng_(make_stream(seed, "agent")),
      buffer_(static_cast<std::size_t>(std::max(config.buffer_capacity, 0))) {
  if (heuristics < 1) throw InvalidConfig("agent needs at least one heuristic");
  if (config.gamma < 0.0 || config.gamma > 1.0) throw InvalidConfig("gamma must lie in [0, 1]");
  if (config.sigma < 0.0) throw InvalidConfig("sigma must be non-negative");
  if (config.window < 1 || config.update_period < 1 || config.hidden < 1) {
    throw InvalidConfig("window, update period and hidden size must be positive");
  }
}

Vec Agent::act(const Vec& state) {
  const Vec mean = policy_mean(state);
  Vec action = mean;
  if (config_.sigma > 0.0) {
    for (Eigen::Index j = 0; j < action.size(); ++j) action[j] += normal(rng_, 0.0, config_.sigma);
  }
  last_state_ = state;
  last_action_ = action;
  last_log_prob_ = gaussian_log_density(action, mean, config_.sigma);
  has_last_ = true;
  return softmax(action);
}

Vec Agent::epoch_step(const Vec& state, double reward) {
  if (has_last_) {
    Transition tr{last_state_, last_action_, last_log_prob_, reward, state, false};
    buffer_.push(tr);
    rollout_.push_back(std::move(tr));
    if (static_cast<int>(rollout_.size()) >= config_.update_period) {
      if (learn(rollout_, false)) ++updates_;
      rollout_.clear();
    }
  }
  return act(state);
}

void Agent::finish(const Vec& state, double reward) {
  if (!has_last_) return;
  Transition tr{last_state_, last_action_, last_log_prob_, reward, state, true};
  buffer_.push(tr);
  rollout_.push_back(std::move(tr));
  if (learn(rollout_, true)) ++updates_;
  rollout_.clear();
  has_last_ = false;
}

// --- actor-critic (A2C, PPO) -----------------------------------------------------

ActorCritic::ActorCritic(AgentKind kind, int heuristics, const AgentConfig& config, std::uint64_t seed)
    : Agent(kind, heuristics, config, seed),
      trunk_({state_size(), config.hidden}, OutputActivation::Tanh),
      actor_({config.hidden, config.hidden, heuristics}),
      critic_({config.hidden, config.hidden, 1}),
      actor_opt_(config.actor_lr),
      critic_opt_(config.critic_lr) {
  Rng init = make_stream(seed, "agent-init");
  trunk_.initialize(init);
  actor_.initialize(init);
  critic_.initialize(init);
}

Vec ActorCritic::policy_mean(const Vec& state) {
  const Mat x = state;
  return actor_.predict(trunk_.predict(x)).col(0);
}

double ActorCritic::value(const Vec& state) {
  const Mat x = state;
  return critic_.predict(trunk_.predict(x))(0, 0);
}

RolloutBatch ActorCritic::prepare(const std::vector<Transition>& rollout, bool terminal) {
  RolloutBatch b;
  const auto k = static_cast<Eigen::Index>(rollout.size());
  b.states.resize(state_size(), k);
  b.actions.resize(n_, k);
  b.old_log_probs.resize(k);
  std::vector<double> rewards;
  for (Eigen::Index i = 0; i < k; ++i) {
    b.states.col(i) = rollout[i].state;
    b.actions.col(i) = rollout[i].action;
    b.old_log_probs[i] = rollout[i].log_prob;
    rewards.push_back(rollout[i].reward);
  }
  const double bootstrap = terminal || k == 0 ? 0.0 : value(rollout.back().next_state);
  const auto returns = discounted_returns(standardize_returns(rewards), bootstrap, config_.gamma);
  b.returns = Eigen::Map<const Vec>(returns.data(), k);
  const Mat v = critic_.predict(trunk_.predict(b.states));
  b.advantages = b.returns - v.row(0).transpose();
  return b;
}

template <typename PolicyTerm>
double ActorCritic::combined_loss(const RolloutBatch& batch, Vec* gradient, double value_coef, double entropy_coef,
                                  PolicyTerm&& policy_term) {
  const Eigen::Index k = batch.states.cols();
  const Mat h = trunk_.forward(batch.states);
  const Mat mu = actor_.forward(h);
  const Mat v = critic_.forward(h);
  Mat dmu(n_, k);
  Mat dv(1, k);
  double total = 0.0;
  for (Eigen::Index i = 0; i < k; ++i) {
    const Vec m = mu.col(i);
    Vec dterm = Vec::Zero(n_);
    const double term = policy_term(i, m, dterm);
    const double diff = v(0, i) - batch.returns[i];
    total += term - entropy_coef * softmax_entropy(m) + value_coef * diff * diff;
    dmu.col(i) = (dterm - entropy_coef * softmax_entropy_gradient(m)) / static_cast<double>(k);
    dv(0, i) = value_coef * 2.0 * diff / static_cast<double>(k);
  }
  if (gradient != nullptr) {
    auto ga = actor_.zero_gradients();
    auto gc = critic_.zero_gradients();
    auto gt = trunk_.zero_gradients();
    const Mat dh = actor_.backward(dmu, ga) + critic_.backward(dv, gc);
    trunk_.backward(dh, gt);
    const Vec ft = Net::flatten(gt), fa = Net::flatten(ga), fc = Net::flatten(gc);
    gradient->resize(ft.size() + fa.size() + fc.size());
    *gradient << ft, fa, fc;
  }
  return total / static_cast<double>(k);
}

double ActorCritic::a2c_loss(const RolloutBatch& batch, Vec* gradient) {
  const double inv_var = 1.0 / std::pow(std::max(config_.sigma, 1e-6), 2);
  return combined_loss(batch, gradient, 1.0, config_.entropy_coef, [&](Eigen::Index i, const Vec& m, Vec& d) {
    const Vec a = batch.actions.col(i);
    const double adv = batch.advantages[i];
    d = -adv * (a - m) * inv_var;
    return -gaussian_log_density(a, m, config_.sigma) * adv;
  });
}

double ActorCritic::ppo_loss(const RolloutBatch& batch, Vec* gradient) {
  const double inv_var = 1.0 / std::pow(std::max(config_.sigma, 1e-6), 2);
  const double eps = config_.ppo_clip;
  return combined_loss(batch, gradient, config_.ppo_value_coef, config_.ppo_entropy_coef,
                       [&](Eigen::Index i, const Vec& m, Vec& d) {
                         const Vec a = batch.actions.col(i);
                         const double adv = batch.advantages[i];
                         const double ratio = std::exp(gaussian_log_density(a, m, config_.sigma) - batch.old_log_probs[i]);
                         const double unclipped = ratio * adv;
                         const double clipped = std::clamp(ratio, 1.0 - eps, 1.0 + eps) * adv;
                         if (unclipped <= clipped) {
                           d = -adv * ratio * (a - m) * inv_var;
                           return -unclipped;
                         }
                         d.setZero();
                         return -clipped;
                       });
}

double ActorCritic::loss(const RolloutBatch& batch, Vec* gradient) {
  return kind_ == AgentKind::PPO ? ppo_loss(batch, gradient) : a2c_loss(batch, gradient);
}

Vec ActorCritic::parameters() const {
  const Vec ft = trunk_.flatten(), fa = actor_.flatten(), fc = critic_.flatten();
  Vec out(ft.size() + fa.size() + fc.size());
  out << ft, fa, fc;
  return out;
}

void ActorCritic::set_parameters(const Vec& flat) {
  const auto nt = static_cast<Eigen::Index>(trunk_.parameter_count());
  const auto na = static_cast<Eigen::Index>(actor_.parameter_count());
  const auto nc = static_cast<Eigen::Index>(critic_.parameter_count());
  if (flat.size() != nt + na + nc) throw std::invalid_argument("parameter count mismatch");
  trunk_.unflatten(flat.segment(0, nt));
  actor_.unflatten(flat.segment(nt, na));
  critic_.unflatten(flat.segment(nt + na, nc));
}

void ActorCritic::step(const Vec& gradient) {
  Vec g = gradient;
  clip_grad_norm<double>({&g}, config_.clip_norm);
  const auto nt = static_cast<Eigen::Index>(trunk_.parameter_count());
  const auto na = static_cast<Eigen::Index>(actor_.parameter_count());
  const auto nc = static_cast<Eigen::Index>(critic_.parameter_count());
  Vec p = parameters();
  Vec head = p.head(nt + na);
  actor_opt_.step(head, g.head(nt + na));
  Vec tail = p.tail(nc);
  critic_opt_.step(tail, g.tail(nc));
  p << head, tail;
  set_parameters(p);
}

bool ActorCritic::learn(const std::vector<Transition>& rollout, bool terminal) {
  if (rollout.empty()) return false;
  const RolloutBatch batch = prepare(rollout, terminal);
  const int passes = kind_ == AgentKind::PPO ? config_.ppo_epochs : 1;
  for (int e = 0; e < passes; ++e) {
    Vec g;
    loss(batch, &g);
    step(g);
  }
  return true;
}

void ActorCritic::save(const std::filesystem::path& path) const {
  save_checkpoint(path, {{"trunk", &trunk_}, {"actor", &actor_}, {"critic", &critic_}});
}

void ActorCritic::load(const std::filesystem::path& path) {
  load_checkpoint(path, {{"trunk", &trunk_}, {"actor", &actor_}, {"critic", &critic_}});
}

// --- soft actor-critic -------------------------------------------------------------

SoftActorCritic::SoftActorCritic(int heuristics, const AgentConfig& config, std::uint64_t seed)
    : Agent(AgentKind::SAC, heuristics, config, seed),
      policy_({state_size(), config.hidden, config.hidden, heuristics}),
      q_({state_size() + heuristics, config.hidden, config.hidden, 1}),
      v_({state_size(), config.hidden, config.hidden, 1}),
      policy_opt_(config.actor_lr),
      q_opt_(config.critic_lr),
      v_opt_(config.critic_lr) {
  Rng init = make_stream(seed, "agent-init");
  policy_.initialize(init);
  q_.initialize(init);
  v_.initialize(init);
  v_target_ = v_;
}

Vec SoftActorCritic::policy_mean(const Vec& state) {
  const Mat x = state;
  return policy_.predict(x).col(0);
}

SacBatch SoftActorCritic::sample_batch() {
  SacBatch b;
  const auto k = static_cast<Eigen::Index>(config_.batch_size);
  const auto idx = buffer_.sample(static_cast<std::size_t>(k), rng_);
  b.states.resize(state_size(), k);
  b.next_states.resize(state_size(), k);
  b.actions.resize(n_, k);
  b.not_done.resize(k);
  std::vector<double> rewards;
  for (Eigen::Index i = 0; i < k; ++i) {
    const auto& t = buffer_[idx[i]];
    b.states.col(i) = t.state;
    b.next_states.col(i) = t.next_state;
    b.actions.col(i) = t.action;
    b.not_done[i] = t.terminal ? 0.0 : 1.0;
    rewards.push_back(t.reward);
  }
  const auto std_rewards = standardize_returns(rewards);
  b.rewards = Eigen::Map<const Vec>(std_rewards.data(), k);
  b.noise.resize(n_, k);
  for (Eigen::Index i = 0; i < k; ++i) {
    for (int j = 0; j < n_; ++j) b.noise(j, i) = normal(rng_, 0.0, 1.0);
  }
  return b;
}

double SoftActorCritic::value_loss(const SacBatch& batch, Vec* gradient) {
  const Eigen::Index k = batch.states.cols();
  const Mat mu = policy_.predict(batch.states);
  const Mat a = mu + config_.sigma * batch.noise;
  Mat sa(state_size() + n_, k);
  sa << batch.states, a;
  const Mat qv = q_.predict(sa);
  const Mat v = v_.forward(batch.states);
  Mat dv(1, k);
  double total = 0.0;
  for (Eigen::Index i = 0; i < k; ++i) {
    const double target =
        qv(0, i) - config_.sac_alpha * gaussian_log_density(a.col(i), mu.col(i), config_.sigma);
    const double diff = v(0, i) - target;
    total += 0.5 * diff * diff;
    dv(0, i) = diff / static_cast<double>(k);
  }
  if (gradient != nullptr) {
    auto g = v_.zero_gradients();
    v_.backward(dv, g);
    *gradient = Net::flatten(g);
  }
  return total / static_cast<double>(k);
}

double SoftActorCritic::q_loss(const SacBatch& batch, Vec* gradient) {
  const Eigen::Index k = batch.states.cols();
  const Mat vt = v_target_.predict(batch.next_states);
  Mat sa(state_size() + n_, k);
  sa << batch.states, batch.actions;
  const Mat qv = q_.forward(sa);
  Mat dq(1, k);
  double total = 0.0;
  for (Eigen::Index i = 0; i < k; ++i) {
    const double target = batch.rewards[i] + config_.gamma * batch.not_done[i] * vt(0, i);
    const double diff = qv(0, i) - target;
    total += 0.5 * diff * diff;
    dq(0, i) = diff / static_cast<double>(k);
  }
  if (gradient != nullptr) {
    auto g = q_.zero_gradients();
    q_.backward(dq, g);
    *gradient = Net::flatten(g);
  }
  return total / static_cast<double>(k);
}

double SoftActorCritic::policy_loss(const SacBatch& batch, Vec* gradient) {
  const Eigen::Index k = batch.states.cols();
  const Mat mu = policy_.forward(batch.states);
  const Mat a = mu + config_.sigma * batch.noise;
  Mat sa(state_size() + n_, k);
  sa << batch.states, a;
  const Mat qv = q_.forward(sa);
  double total = 0.0;
  for (Eigen::Index i = 0; i < k; ++i) {
    total += config_.sac_alpha * gaussian_log_density(a.col(i), mu.col(i), config_.sigma) - qv(0, i);
  }
  if (gradient != nullptr) {
    auto scratch = q_.zero_gradients();
    const Mat up = Mat::Constant(1, k, -1.0 / static_cast<double>(k));
    const Mat dsa = q_.backward(up, scratch);
    auto g = policy_.zero_gradients();
    policy_.backward(dsa.bottomRows(n_), g);
    *gradient = Net::flatten(g);
  }
  return total / static_cast<double>(k);
}

void SoftActorCritic::update_target() {
  const double tau = config_.sac_tau;
  v_target_.unflatten(tau * v_.flatten() + (1.0 - tau) * v_target_.flatten());
}

bool SoftActorCritic::learn(const std::vector<Transition>&, bool) {
  if (buffer_.size() < static_cast<std::size_t>(config_.batch_size) || config_.batch_size < 1) return false;
  const SacBatch batch = sample_batch();
  Vec gv, gq, gp;
  value_loss(batch, &gv);
  q_loss(batch, &gq);
  policy_loss(batch, &gp);
  auto apply = [&](Net& net, Adamax<double>& opt, Vec& g) {
    clip_grad_norm<double>({&g}, config_.clip_norm);
    Vec p = net.flatten();
    opt.step(p, g);
    net.unflatten(p);
  };
  apply(v_, v_opt_, gv);
  apply(q_, q_opt_, gq);
  apply(policy_, policy_opt_, gp);
  update_target();
  return true;
}

void SoftActorCritic::save(const std::filesystem::path& path) const {
  save_checkpoint(path, {{"policy", &policy_}, {"q", &q_}, {"v", &v_}, {"v_target", &v_target_}});
}

void SoftActorCritic::load(const std::filesystem::path& path) {
  load_checkpoint(path, {{"policy", &policy_}, {"q", &q_}, {"v", &v_}, {"v_target", &v_target_}});
}

std::unique_ptr<Agent> make_agent(AgentKind kind, int heuristics, const AgentConfig& config, std::uint64_t seed) {
  switch (kind) {
    case AgentKind::Baseline:
      return nullptr;
    case AgentKind::A2C:
    case AgentKind::PPO:
      return std::make_unique<ActorCritic>(kind, heuristics, config, seed);
    case AgentKind::SAC:
      return std::make_unique<SoftActorCritic>(heuristics, config, seed);
  }
  return nullptr;
}

}  // namespace ssomc
