#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "ssomc/model.hpp"

namespace fixtures {

using namespace ssomc;

/// Locations with empty economics; callers fill the cells they need and
/// call finalize().
inline MiningComplexInstance blank(int periods, int scenarios, std::vector<std::string> primary,
                                   std::vector<std::string> hereditary, const std::vector<LocationKind>& kinds) {
  MiningComplexInstance inst;
  inst.periods = periods;
  inst.scenario_count = scenarios;
  inst.primary_names = std::move(primary);
  inst.hereditary_names = std::move(hereditary);
  const int P = inst.primary_count();
  const int H = inst.hereditary_count();
  for (std::size_t i = 0; i < kinds.size(); ++i) {
    LocationNode node;
    node.id = static_cast<int>(i);
    node.name = std::string(to_string(kinds[i])) + std::to_string(i);
    node.kind = kinds[i];
    node.recovery = Eigen::VectorXd::Ones(P);
    node.transfer = Eigen::MatrixXd::Zero(H, P);
    node.retained = Eigen::MatrixXd::Zero(H, P);
    inst.locations.push_back(node);
  }
  const std::size_t hn = static_cast<std::size_t>(H) * kinds.size();
  inst.upper.assign(hn * periods, kUnbounded);
  inst.lower.assign(hn * periods, 0.0);
  inst.surplus_cost.assign(hn, 0.0);
  inst.shortage_cost.assign(hn, 0.0);
  inst.price.assign(hn, 0.0);
  inst.surplus_risk_rate.assign(hn, 0.0);
  inst.shortage_risk_rate.assign(hn, 0.0);
  int mines = 0;
  for (auto k : kinds) mines += k == LocationKind::Mine;
  inst.mining_capacity.assign(static_cast<std::size_t>(mines) * periods, kUnbounded);
  return inst;
}

inline void add_block(MiningComplexInstance& inst, int mine, std::array<int, 3> pos, double tonnage,
                      std::vector<int> preds = {}) {
  Block b;
  b.id = inst.block_count();
  b.mine = mine;
  b.position = pos;
  b.tonnage = tonnage;
  b.predecessors = std::move(preds);
  inst.blocks.push_back(b);
}

/// One block of 1 t holding 1 t of metal, mined at cost 10 and sold at 100
/// per tonne of metal, cash-flow discount 10%.
inline MiningComplexInstance one_block() {
  auto inst = blank(1, 1, {"tonnage", "metal"}, {"tonnes", "metal"}, {LocationKind::Mine, LocationKind::Processor});
  add_block(inst, 0, {0, 0, 0}, 1.0);
  inst.scenarios = {2, 1, 1, {1.0, 1.0}};
  inst.groups = {{0, 0, {1}, 1.0}};
  inst.membership = {0};
  inst.locations[0].transfer(0, 0) = 1.0;
  inst.locations[1].transfer(1, 1) = 1.0;
  inst.price[inst.hi(0, 0)] = -10.0;
  inst.price[inst.hi(1, 1)] = 100.0;
  inst.cash_flow_rate = 0.1;
  inst.finalize();
  return inst;
}

inline Solution empty_plan(const MiningComplexInstance& inst) {
  Solution sol;
  sol.periods = inst.periods;
  sol.scenarios = inst.scenario_count;
  sol.extraction.assign(inst.block_count(), kNotMined);
  sol.destination.assign(static_cast<std::size_t>(inst.group_count()) * inst.periods, 0);
  for (int g = 0; g < inst.group_count(); ++g) {
    for (int t = 0; t < inst.periods; ++t) sol.dest(g, t) = inst.groups[g].destinations.front();
  }
  sol.streams.assign(inst.arcs.size() * inst.periods * inst.scenario_count, 0.0);
  return sol;
}

/// Tiny oracle instance: 2x2x2 pit, one processor and waste, no stockpile.
inline GeneratorConfig tiny_config() {
  GeneratorConfig c;
  c.mines = {MineConfig{2, 2, 2, 0.0}};
  c.processors = 1;
  c.stockpiles = 0;
  c.scenarios = 2;
  c.periods = 2;
  c.groups_per_mine = 2;
  return c;
}

/// Mid-size instance with every structure the heuristics act on.
inline GeneratorConfig mid_config(int nx = 8, int ny = 8, int nz = 4, int periods = 4, int scenarios = 4) {
  GeneratorConfig c;
  c.mines = {MineConfig{nx, ny, nz, 0.0}, MineConfig{4, 4, 3, 0.0}};
  c.processors = 2;
  c.stockpiles = 1;
  c.scenarios = scenarios;
  c.periods = periods;
  c.groups_per_mine = 4;
  return c;
}

/// Block-by-block evaluation written straight from the model definition,
/// without group aggregates or incremental state.
inline double reference_objective(const MiningComplexInstance& inst, const Solution& sol) {
  const int N = inst.location_count(), P = inst.primary_count(), H = inst.hereditary_count();
  const int T = inst.periods, S = inst.scenario_count;
  double total = 0.0;
  for (int s = 0; s < S; ++s) {
    std::vector<double> prev(static_cast<std::size_t>(N) * P, 0.0), cur(prev.size());
    double scen = 0.0;
    for (int t = 0; t < T; ++t) {
      std::fill(cur.begin(), cur.end(), 0.0);
      if (t > 0) {
        for (int i = 0; i < N; ++i) {
          if (inst.locations[i].kind != LocationKind::Stockpile) continue;
          double out = 0.0;
          for (int a : inst.locations[i].outgoing) out += sol.y(a, t - 1, s);
          for (int p = 0; p < P; ++p) cur[i * P + p] += prev[i * P + p] * (1.0 - out);
        }
        for (std::size_t a = 0; a < inst.arcs.size(); ++a) {
          const auto [from, to] = inst.arcs[a];
          for (int p = 0; p < P; ++p) {
            cur[to * P + p] += inst.locations[from].recovery[p] * prev[from * P + p] * sol.y(static_cast<int>(a), t - 1, s);
          }
        }
      }
      for (int b = 0; b < inst.block_count(); ++b) {
        if (sol.extraction[b] != t) continue;
        const int j = sol.dest(inst.group_of(b, s), t);
        const int m = inst.blocks[b].mine;
        for (int p = 0; p < P; ++p) {
          cur[j * P + p] += inst.scenarios(p, b, s);
          cur[m * P + p] += inst.scenarios(p, b, s);
        }
      }
      for (int i = 0; i < N; ++i) {
        const auto& node = inst.locations[i];
        double keep = 0.0;
        if (node.kind == LocationKind::Stockpile) {
          keep = 1.0;
          for (int a : node.outgoing) keep -= sol.y(a, t, s);
        }
        for (int h = 0; h < H; ++h) {
          double vh = 0.0;
          for (int p = 0; p < P; ++p) vh += (node.transfer(h, p) + node.retained(h, p) * keep) * cur[i * P + p];
          const std::size_t hi = inst.hi(h, i);
          const std::size_t k = inst.hit(h, i, t);
          const double dplus = std::max(0.0, vh - inst.upper[k]);
          const double dminus = std::max(0.0, inst.lower[k] - vh);
          scen += inst.price[hi] * vh / std::pow(1.0 + inst.cash_flow_rate, t + 1);
          scen -= inst.surplus_cost[hi] * dplus / std::pow(1.0 + inst.surplus_risk_rate[hi], t + 1);
          scen -= inst.shortage_cost[hi] * dminus / std::pow(1.0 + inst.shortage_risk_rate[hi], t + 1);
        }
      }
      std::swap(prev, cur);
    }
    total += scen;
  }
  return total / S;
}

inline double rel_diff(double a, double b) { return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)}); }

}  // namespace fixtures
