#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <ostream>
#include <vector>

#include "ssomc/agents.hpp"
#include "ssomc/evaluator.hpp"
#include "ssomc/heuristics.hpp"
#include "ssomc/model.hpp"
#include "ssomc/rng.hpp"

namespace ssomc {

struct SearchConfig {
  int epoch_length = 100;  ///< zeta
  double alpha = 0.3;
  double beta0 = 0.5;
  int tabu_min = 5;
  int tabu_max = 20;
  double lambda_rl = 0.5;
  long max_iterations = 0;  ///< 0 = no bound; counts stage-1 applications
  double time_limit = 0.0;  ///< seconds on the search clock, 0 = no bound
  std::optional<double> target;
  double initial_temperature = 0.0;  ///< 0 = calibrate from stage 1
  double cooling_factor = 0.95;
  int cooling_interval = 500;
  bool wall_clock = false;  ///< time heuristics with the wall clock instead of the work model

  void validate() const;
};

/// Per-heuristic selection state.
struct Scoreboard {
  int n = 0;
  std::vector<double> pi1, pi2, s1, s2, sf;
  std::vector<int> uses;
  std::vector<int> tabu;
  int beta_tenths = 5;

  explicit Scoreboard(int heuristics = 0);
  double beta() const { return beta_tenths / 10.0; }
  bool all_tabu() const;
};

inline constexpr double kMinHeuristicSeconds = 1e-6;

/// Probability proportional to SF over non-tabu heuristics; uniform over
/// them when that mass is zero.
int select_heuristic(const Scoreboard& board, Rng& rng);

/// Improvement rate (delta_f / T) or damage rate (1 / (|delta_f| T)); counts the use.
void update_measures(Scoreboard& board, int h, double delta_f, double seconds);

bool sa_accept(double delta_f, double temperature, Rng& rng);

/// Makes h tabu for a uniform number of selections in [tabu_min, tabu_max],
/// emptying the list when every heuristic is tabu.
void apply_tabu(Scoreboard& board, int h, Rng& rng, int tabu_min, int tabu_max);
void tick_tabu(Scoreboard& board);

/// (1 - alpha) sf + alpha (beta pi1 + (1 - beta) pi2) / uses, or sf when unused.
double adaptive_score(double sf, double pi1, double pi2, int uses, double alpha, double beta);

/// Divides by the sum; a zero-sum vector stays zero.
void normalize(std::vector<double>& values);

struct EpochRecord {
  long iteration = 0;
  int epoch = 0;
  double beta = 0.0;
  bool new_best = false;
  double reward = 0.0;
  std::vector<double> pi1, pi2, s1, s2, sf;
};

/// End-of-epoch update: beta rule, normalization, adaptive scores, agent
/// action, SF = (1 - lambda) S1 + lambda S2, counter reset, tabu revocation. Appends the normalized measures
/// to `history` and returns the record.
EpochRecord epoch_update(Scoreboard& board, const SearchConfig& config, bool new_best, Agent* agent, double reward,
                         std::deque<ScoreSnapshot>& history);

struct IterationRecord {
  long iter = 0;
  int heuristic = 0;
  double delta_f = 0.0;
  double time_s = 0.0;
  bool accepted = false;
  double current_f = 0.0;
  double best_f = 0.0;
  double temp = 0.0;
};

struct SearchTrace {
  std::vector<IterationRecord> iterations;
  std::vector<EpochRecord> epochs;
  std::vector<double> elapsed;  ///< search-clock seconds after each iteration

  void write_csv(std::ostream& out, long stride = 1) const;
  void write_epochs(std::ostream& out) const;
};

struct PerturbationOutcome {
  Footprint footprint;
  double delta_f = 0.0;
  double seconds = 0.0;
};

struct SearchResult {
  Solution best;
  double best_f = 0.0;
  double initial_f = 0.0;
  double temperature0 = 0.0;
  long iterations = 0;
  double seconds = 0.0;       ///< search clock
  double wall_seconds = 0.0;
  SearchTrace trace;
};

/// Two-stage simulated-annealing hyper-heuristic. With `agent` null (or
/// lambda_rl = 0) selection uses the adaptive score alone.
SearchResult run_search(const MiningComplexInstance& instance, const Solution& initial, HeuristicSet& heuristics,
                        const SearchConfig& config, Agent* agent, std::uint64_t seed);

}  // namespace ssomc
