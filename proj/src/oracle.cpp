#include "ssomc/oracle.hpp"

#include <cmath>
#include <functional>
#include <limits>

#include "ssomc/evaluator.hpp"
#include "ssomc/heuristics.hpp"

namespace ssomc {

OracleResult enumerate_optimum(const MiningComplexInstance& inst, const Solution& streams_from, std::uint64_t limit) {
  if (!perturbable_arcs(inst).empty()) throw InvalidConfig("oracle needs forced stream proportions");
  const int T = inst.periods;
  const int B = inst.block_count();
  const int G = inst.group_count();

  double z_count = 1.0;
  for (int g = 0; g < G; ++g) z_count *= std::pow(static_cast<double>(inst.groups[g].destinations.size()), T);
  const double x_bound = std::pow(static_cast<double>(T + 1), B);
  if (x_bound * z_count > static_cast<double>(limit)) {
    throw InvalidConfig("instance too large for exhaustive enumeration");
  }

  Solution sol = streams_from;
  sol.extraction.assign(B, kNotMined);
  sol.destination.assign(static_cast<std::size_t>(G) * T, 0);
  for (int g = 0; g < G; ++g) {
    for (int t = 0; t < T; ++t) sol.dest(g, t) = inst.groups[g].destinations.front();
  }

  OracleResult result;
  result.best_objective = -std::numeric_limits<double>::infinity();

  auto evaluate_policies = [&] {
    ++result.schedules;
    std::vector<std::size_t> digit(static_cast<std::size_t>(G) * T, 0);
    while (true) {
      for (int g = 0; g < G; ++g) {
        for (int t = 0; t < T; ++t) sol.dest(g, t) = inst.groups[g].destinations[digit[static_cast<std::size_t>(g) * T + t]];
      }
      const double f = IncrementalEvaluator(inst, sol).value();
      ++result.evaluations;
      if (f > result.best_objective) {
        result.best_objective = f;
        result.best = sol;
      }
      std::size_t k = 0;
      for (; k < digit.size(); ++k) {
        const auto g = k / T;
        if (++digit[k] < inst.groups[g].destinations.size()) break;
        digit[k] = 0;
      }
      if (k == digit.size()) break;
    }
  };

  // Blocks in topological order; a block may only take periods no earlier
  // than its latest predecessor, and stays unmined if any predecessor is.
  const auto& order = inst.topological_order;
  std::function<void(std::size_t)> recurse = [&](std::size_t pos) {
    if (pos == order.size()) {
      evaluate_policies();
      return;
    }
    const int b = order[pos];
    int earliest = 0;
    bool blocked = false;
    for (int u : inst.blocks[b].predecessors) {
      if (sol.extraction[u] == kNotMined) {
        blocked = true;
      } else {
        earliest = std::max(earliest, sol.extraction[u]);
      }
    }
    sol.extraction[b] = kNotMined;
    recurse(pos + 1);
    if (blocked) return;
    for (int t = earliest; t < T; ++t) {
      sol.extraction[b] = t;
      recurse(pos + 1);
    }
    sol.extraction[b] = kNotMined;
  };
  recurse(0);
  return result;
}

}  // namespace ssomc
