#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "ssomc/model.hpp"

namespace ssomc {

// --- perturbation footprints -------------------------------------------------

struct BlockMove {
  int block = 0;
  Period from = kNotMined;
  Period to = kNotMined;
};

struct DestinationMove {
  int group = 0;
  int period = 0;
  int from = 0;
  int to = 0;
};

struct StreamMove {
  int arc = 0;
  int period = 0;
  int scenario = 0;
  double from = 0.0;
  double to = 0.0;
};

/// Every decision variable a perturbation touched, with old and new values.
struct Footprint {
  std::vector<BlockMove> blocks;
  std::vector<DestinationMove> destinations;
  std::vector<StreamMove> streams;

  bool empty() const { return blocks.empty() && destinations.empty() && streams.empty(); }
  std::size_t size() const { return blocks.size() + destinations.size() + streams.size(); }
};

/// Writes the new values of a footprint into `solution`.
void apply(const Footprint& footprint, Solution& solution);
/// Restores the old values, latest change first.
void undo(const Footprint& footprint, Solution& solution);

// --- attribute state ---------------------------------------------------------

/// Propagated quantities of one scenario, each indexed (attribute, location, period).
struct AttributeState {
  int primary = 0, hereditary = 0, locations = 0, periods = 0;
  std::vector<double> v_p;      ///< (p, i, t)
  std::vector<double> v_h;      ///< (h, i, t)
  std::vector<double> recovery;  ///< (p, i, t)
  std::vector<double> d_plus;   ///< (h, i, t)
  std::vector<double> d_minus;  ///< (h, i, t)

  std::size_t pit(int p, int i, int t) const { return (static_cast<std::size_t>(p) * locations + i) * periods + t; }
  std::size_t hit(int h, int i, int t) const { return (static_cast<std::size_t>(h) * locations + i) * periods + t; }
};

struct EvaluationReport {
  double objective = 0.0;
  double revenue = 0.0;  ///< mean over scenarios of discounted revenue
  double penalty = 0.0;  ///< mean over scenarios of discounted deviation penalties
  std::vector<double> scenario_objective;
  std::vector<double> scenario_revenue;
  std::vector<double> scenario_penalty;
  std::vector<AttributeState> states;  ///< per scenario, filled on request
};

/// Forward pass of scenario `s`: period by period, each location receives the
/// retained stockpile quantity and the arc flows of the previous period plus the
/// group material mined in the current one. Deviations are left at zero.
AttributeState propagate_flows(const MiningComplexInstance& instance, const Solution& solution, int s);

/// d+ = max(0, v_h - U), d- = max(0, L - v_h).
void compute_deviations(AttributeState& state, const MiningComplexInstance& instance);

/// Expected discounted value minus expected deviation penalties.
/// Throws InfeasibleSolution when check_feasibility reports a violation.
EvaluationReport objective(const MiningComplexInstance& instance, const Solution& solution, bool keep_states = false);

/// Objective change of `solution` relative to the state before `footprint`
/// was applied to it.
double objective_delta(const MiningComplexInstance& instance, const Solution& solution, const Footprint& footprint);

/// Caches group aggregates and per-scenario propagation so a footprint only
/// re-propagates the affected scenarios from the earliest touched period. The
/// cached objective is bit-identical to a from-scratch evaluation.
class IncrementalEvaluator {
 public:
  IncrementalEvaluator(const MiningComplexInstance& instance, const Solution& solution);

  double value() const { return objective_; }
  /// Objective split by scenario, without attribute states.
  EvaluationReport report() const;

  /// `solution` already holds the new values. Returns the objective change.
  /// A pending update that was neither committed nor reverted is committed.
  double update(const Solution& solution, const Footprint& footprint);
  void revert();
  void commit();

  /// Location-period cells re-propagated by the last update.
  std::size_t last_work() const { return last_work_; }

  /// Group aggregate of attribute p mined in period t, scenario s.
  double group_quantity(int g, int t, int s, int p) const { return q_[q_index(g, t, s, p)]; }

 private:
  std::size_t q_index(int g, int t, int s, int p) const {
    return ((static_cast<std::size_t>(g) * periods_ + t) * scenarios_ + s) * primary_ + p;
  }
  std::size_t v_index(int s, int t, int i, int p) const {
    return ((static_cast<std::size_t>(s) * periods_ + t) * locations_ + i) * primary_ + p;
  }
  void add_block(int b, Period t, double sign);
  void propagate(const Solution& solution, int s, int t0);
  double aggregate() const;

  const MiningComplexInstance* inst_;
  int periods_, scenarios_, primary_, hereditary_, locations_;
  std::vector<double> q_;
  std::vector<double> v_;
  std::vector<double> rev_;  ///< (s, t)
  std::vector<double> pen_;  ///< (s, t)
  double objective_ = 0.0;

  struct Journal {
    bool active = false;
    double objective = 0.0;
    std::vector<std::pair<std::size_t, double>> q_cells;
    std::vector<int> scenarios;
    std::vector<double> v, rev, pen;
  } journal_;
  std::size_t last_work_ = 0;
};

}  // namespace ssomc
