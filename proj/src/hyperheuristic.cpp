#include "ssomc/hyperheuristic.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include <json.hpp>

namespace ssomc {

void SearchConfig::validate() const {
  if (epoch_length < 1) throw InvalidConfig("epoch length must be at least 1");
  if (alpha < 0.0 || alpha > 1.0) throw InvalidConfig("alpha must lie in [0, 1]");
  if (lambda_rl < 0.0 || lambda_rl > 1.0) throw InvalidConfig("lambda_rl must lie in [0, 1]");
  if (tabu_min < 0 || tabu_min > tabu_max) throw InvalidConfig("tabu bounds must satisfy 0 <= min <= max");
  if (cooling_factor <= 0.0 || cooling_factor > 1.0) throw InvalidConfig("cooling factor must lie in (0, 1]");
  if (cooling_interval < 1) throw InvalidConfig("cooling interval must be at least 1");
  if (initial_temperature < 0.0) throw InvalidConfig("initial temperature must be non-negative");
  if (max_iterations <= 0 && time_limit <= 0.0) {
    throw InvalidConfig("stopping criterion unreachable: set max_iterations or time_limit");
  }
}

Scoreboard::Scoreboard(int heuristics)
    : n(heuristics),
      pi1(heuristics, 0.0),
      pi2(heuristics, 0.0),
      s1(heuristics, heuristics > 0 ? 1.0 / heuristics : 0.0),
      s2(heuristics, 0.0),
      sf(s1),
      uses(heuristics, 0),
      tabu(heuristics, 0) {}

bool Scoreboard::all_tabu() const {
  return std::all_of(tabu.begin(), tabu.end(), [](int t) { return t > 0; });
}

int select_heuristic(const Scoreboard& board, Rng& rng) {
  const bool everyone = board.all_tabu();
  auto open = [&](int h) { return everyone || board.tabu[h] == 0; };
  double total = 0.0;
  for (int h = 0; h < board.n; ++h) {
    if (open(h)) total += board.sf[h];
  }
  if (total > 0.0) {
    const double u = uniform01(rng) * total;
    double cum = 0.0;
    int last = -1;
    for (int h = 0; h < board.n; ++h) {
      if (!open(h) || board.sf[h] <= 0.0) continue;
      cum += board.sf[h];
      last = h;
      if (u < cum) return h;
    }
    return last;
  }
  std::vector<int> candidates;
  for (int h = 0; h < board.n; ++h) {
    if (open(h)) candidates.push_back(h);
  }
  return candidates[uniform_int(rng, 0, static_cast<int>(candidates.size()) - 1)];
}

void update_measures(Scoreboard& board, int h, double delta_f, double seconds) {
  const double t = std::max(seconds, kMinHeuristicSeconds);
  ++board.uses[h];
  if (delta_f > 0.0) {
    board.pi1[h] += delta_f / t;
  } else if (delta_f < 0.0) {
    board.pi2[h] += 1.0 / (std::abs(delta_f) * t);
  }
}

bool sa_accept(double delta_f, double temperature, Rng& rng) {
  if (delta_f > 0.0) return true;
  return std::exp(delta_f / temperature) > uniform01(rng);
}

void apply_tabu(Scoreboard& board, int h, Rng& rng, int tabu_min, int tabu_max) {
  board.tabu[h] = uniform_int(rng, tabu_min, tabu_max);
  if (board.all_tabu()) std::fill(board.tabu.begin(), board.tabu.end(), 0);
}

void tick_tabu(Scoreboard& board) {
  for (int& t : board.tabu) {
    if (t > 0) --t;
  }
}

double adaptive_score(double sf, double pi1, double pi2, int uses, double alpha, double beta) {
  if (uses == 0) return sf;
  return (1.0 - alpha) * sf + alpha * (beta * pi1 + (1.0 - beta) * pi2) / uses;
}

void normalize(std::vector<double>& values) {
  double total = 0.0;
  for (double v : values) total += v;
  if (total <= 0.0 || !std::isfinite(total)) {
    if (!std::isfinite(total)) std::fill(values.begin(), values.end(), 0.0);
    return;
  }
  for (double& v : values) v /= total;
}

namespace {

Vec to_vec(const std::vector<double>& v) { return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size())); }

}  // namespace

EpochRecord epoch_update(Scoreboard& board, const SearchConfig& config, bool new_best, Agent* agent, double reward,
                         std::deque<ScoreSnapshot>& history) {
  board.beta_tenths = new_best ? 10 : std::max(board.beta_tenths - 1, 0);
  normalize(board.pi1);
  normalize(board.pi2);
  normalize(board.s1);
  for (int h = 0; h < board.n; ++h) {
    board.s1[h] = adaptive_score(board.sf[h], board.pi1[h], board.pi2[h], board.uses[h], config.alpha, board.beta());
  }
  normalize(board.s1);

  history.push_back({to_vec(board.pi1), to_vec(board.pi2), to_vec(board.s1)});
  const std::size_t keep = agent != nullptr ? static_cast<std::size_t>(agent->config().window) : 1;
  while (history.size() > keep) history.pop_front();

  if (agent != nullptr) {
    const Vec s2 = agent->epoch_step(encode_state(history, agent->config().window, board.n), reward);
    for (int h = 0; h < board.n; ++h) {
      board.s2[h] = s2[h];
      board.sf[h] = (1.0 - config.lambda_rl) * board.s1[h] + config.lambda_rl * board.s2[h];
    }
  } else {
    board.sf = board.s1;
  }
  normalize(board.sf);

  EpochRecord rec;
  rec.beta = board.beta();
  rec.new_best = new_best;
  rec.reward = reward;
  rec.pi1 = board.pi1;
  rec.pi2 = board.pi2;
  rec.s1 = board.s1;
  rec.s2 = board.s2;
  rec.sf = board.sf;

  std::fill(board.pi1.begin(), board.pi1.end(), 0.0);
  std::fill(board.pi2.begin(), board.pi2.end(), 0.0);
  std::fill(board.uses.begin(), board.uses.end(), 0);
  std::fill(board.tabu.begin(), board.tabu.end(), 0);
  return rec;
}

namespace {

std::string fmt(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace

void SearchTrace::write_csv(std::ostream& out, long stride) const {
  out << "iter,heuristic,delta_f,time_s,accepted,current_f,best_f,temp\n";
  stride = std::max(stride, 1L);
  for (std::size_t k = 0; k < iterations.size(); ++k) {
    const auto& r = iterations[k];
    if (r.iter % stride != 0 && k + 1 != iterations.size()) continue;
    out << r.iter << ',' << r.heuristic << ',' << fmt(r.delta_f) << ',' << fmt(r.time_s) << ',' << (r.accepted ? 1 : 0)
        << ',' << fmt(r.current_f) << ',' << fmt(r.best_f) << ',' << fmt(r.temp) << '\n';
  }
}

void SearchTrace::write_epochs(std::ostream& out) const {
  for (const auto& e : epochs) {
    nlohmann::json j = {{"iter", e.iteration}, {"epoch", e.epoch}, {"beta", e.beta}, {"new_best", e.new_best},
                        {"reward", e.reward}, {"pi1", e.pi1},     {"pi2", e.pi2},   {"s1", e.s1},
                        {"s2", e.s2},         {"sf", e.sf}};
    out << j.dump() << '\n';
  }
}

SearchResult run_search(const MiningComplexInstance& instance, const Solution& initial, HeuristicSet& heuristics,
                        const SearchConfig& config, Agent* agent, std::uint64_t seed) {
  config.validate();
  const int n = heuristics.size();
  if (n == 0) throw InvalidConfig("heuristic registry is empty");
  if (agent != nullptr && agent->heuristics() != n) throw InvalidConfig("agent size does not match the registry");

  Rng select_rng = make_stream(seed, "selection");
  Rng accept_rng = make_stream(seed, "acceptance");
  Rng tabu_rng = make_stream(seed, "tabu");
  const auto wall_start = std::chrono::steady_clock::now();

  SearchResult result;
  Solution current = initial;
  IncrementalEvaluator ev(instance, current);
  double f = ev.value();
  result.initial_f = f;
  result.best = current;
  result.best_f = f;
  double clock = 0.0;
  long iter = 0;

  auto stop = [&] {
    return (config.max_iterations > 0 && iter >= config.max_iterations) ||
           (config.time_limit > 0.0 && clock >= config.time_limit) || (config.target && result.best_f >= *config.target);
  };
  auto perturb = [&](int h) {
    PerturbationOutcome out;
    const auto t0 = std::chrono::steady_clock::now();
    out.footprint = heuristics.apply(h, current);
    out.delta_f = ev.update(current, out.footprint);
    if (config.wall_clock) {
      const std::chrono::duration<double> d = std::chrono::steady_clock::now() - t0;
      out.seconds = std::max(d.count(), kMinHeuristicSeconds);
    } else {
      out.seconds = kMinHeuristicSeconds *
                    (1.0 + static_cast<double>(out.footprint.size()) + 0.1 * static_cast<double>(ev.last_work()));
    }
    clock += out.seconds;
    return out;
  };
  auto record = [&](int h, const PerturbationOutcome& o, bool accepted, double temp) {
    result.trace.iterations.push_back({iter, h, o.delta_f, o.seconds, accepted, f, result.best_f, temp});
    result.trace.elapsed.push_back(clock);
  };

  // Stage 1: every heuristic once, always accepted.
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), select_rng);
  std::vector<double> deteriorations;
  for (int h : order) {
    if (stop()) break;
    const auto o = perturb(h);
    ev.commit();
    f = ev.value();
    if (o.delta_f < 0.0) deteriorations.push_back(-o.delta_f);
    if (f > result.best_f) {
      result.best_f = f;
      result.best = current;
    }
    record(h, o, true, 0.0);
    ++iter;
  }

  double temp = config.initial_temperature;
  if (temp <= 0.0) {
    if (!deteriorations.empty()) {
      std::sort(deteriorations.begin(), deteriorations.end());
      const std::size_t m = deteriorations.size();
      const double median =
          m % 2 == 1 ? deteriorations[m / 2] : 0.5 * (deteriorations[m / 2 - 1] + deteriorations[m / 2]);
      temp = median / std::log(2.0);
    }
    if (!(temp > 0.0)) temp = 1e-4 * std::max(1.0, std::abs(f));
  }
  result.temperature0 = temp;

  // Stage 2.
  Scoreboard board(n);
  std::deque<ScoreSnapshot> history;
  bool new_best = false;
  double reward = 0.0;
  long stage2 = 0;
  int epoch = 0;
  while (!stop()) {
    const int h = select_heuristic(board, select_rng);
    tick_tabu(board);
    const auto o = perturb(h);
    update_measures(board, h, o.delta_f, o.seconds);
    const double candidate = ev.value();
    if (candidate > result.best_f) {
      result.best_f = candidate;
      result.best = current;
      new_best = true;
    }
    if (o.delta_f <= 0.0) apply_tabu(board, h, tabu_rng, config.tabu_min, config.tabu_max);
    const bool accepted = sa_accept(o.delta_f, temp, accept_rng);
    if (accepted) {
      ev.commit();
      f = ev.value();
      reward += o.delta_f;
    } else {
      undo(o.footprint, current);
      ev.revert();
    }
    record(h, o, accepted, temp);
    ++iter;
    ++stage2;
    if (stage2 % config.cooling_interval == 0) {
      temp = std::max(temp * config.cooling_factor, std::numeric_limits<double>::min());
    }
    if (stage2 % config.epoch_length == 0) {
      auto rec = epoch_update(board, config, new_best, agent, reward, history);
      rec.iteration = iter;
      rec.epoch = ++epoch;
      result.trace.epochs.push_back(std::move(rec));
      new_best = false;
      reward = 0.0;
    }
  }
  if (agent != nullptr) agent->finish(encode_state(history, agent->config().window, n), reward);

  result.iterations = iter;
  result.seconds = clock;
  const std::chrono::duration<double> wall = std::chrono::steady_clock::now() - wall_start;
  result.wall_seconds = wall.count();
  return result;
}

}  // namespace ssomc
