#include <algorithm>
#include <cmath>
#include <string>

#include "ssomc/model.hpp"

namespace ssomc {

namespace {

void check_shape(const MiningComplexInstance& inst, const Solution& sol) {
  const int T = inst.periods;
  if (sol.periods != T || sol.scenarios != inst.scenario_count) {
    throw MalformedSolution("solution horizon or scenario count does not match the instance");
  }
  if (sol.extraction.size() != static_cast<std::size_t>(inst.block_count())) {
    throw MalformedSolution("extraction vector has " + std::to_string(sol.extraction.size()) + " entries, expected " +
                            std::to_string(inst.block_count()));
  }
  if (sol.destination.size() != static_cast<std::size_t>(inst.group_count()) * T) {
    throw MalformedSolution("destination policy does not cover every (group, period)");
  }
  if (sol.streams.size() != inst.arcs.size() * T * inst.scenario_count) {
    throw MalformedSolution("stream proportions do not cover every (arc, period, scenario)");
  }
  for (int b = 0; b < inst.block_count(); ++b) {
    const Period t = sol.extraction[b];
    if (t != kNotMined && (t < 0 || t >= T)) {
      throw MalformedSolution("block " + std::to_string(b) + " has period " + std::to_string(t) + " outside the horizon");
    }
  }
  for (int d : sol.destination) {
    if (d < 0 || d >= inst.location_count()) throw MalformedSolution("destination " + std::to_string(d) + " out of range");
  }
}

}  // namespace

ViolationReport check_feasibility(const MiningComplexInstance& inst, const Solution& sol) {
  check_shape(inst, sol);
  ViolationReport report;
  const int T = inst.periods;
  const int S = inst.scenario_count;

  for (int b = 0; b < inst.block_count(); ++b) {
    const Period t = sol.extraction[b];
    if (t == kNotMined) continue;
    for (int u : inst.blocks[b].predecessors) {
      const Period tu = sol.extraction[u];
      if (tu == kNotMined || tu > t) {
        report.violations.push_back({ViolationKind::Precedence, {b, u},
                                     "block " + std::to_string(b) + " mined in period " + std::to_string(t) +
                                         " before predecessor " + std::to_string(u)});
      }
    }
  }

  for (int g = 0; g < inst.group_count(); ++g) {
    const auto& allowed = inst.groups[g].destinations;
    for (int t = 0; t < T; ++t) {
      const int d = sol.dest(g, t);
      if (std::find(allowed.begin(), allowed.end(), d) == allowed.end()) {
        report.violations.push_back({ViolationKind::Destination, {g, t},
                                     "group " + std::to_string(g) + " sent to disallowed location " + std::to_string(d)});
      }
    }
  }

  for (int a = 0; a < static_cast<int>(inst.arcs.size()); ++a) {
    for (int t = 0; t < T; ++t) {
      for (int s = 0; s < S; ++s) {
        const double y = sol.y(a, t, s);
        if (!(y >= 0.0 && y <= 1.0)) {
          report.violations.push_back(
              {ViolationKind::StreamDomain, {a, t, s}, "proportion " + std::to_string(y) + " outside [0, 1]"});
        }
      }
    }
  }

  for (const auto& node : inst.locations) {
    if (node.outgoing.empty()) continue;
    const bool stockpile = node.kind == LocationKind::Stockpile;
    for (int t = 0; t < T; ++t) {
      for (int s = 0; s < S; ++s) {
        double sum = 0.0;
        for (int a : node.outgoing) sum += sol.y(a, t, s);
        const bool ok = stockpile ? sum <= 1.0 + kSimplexTolerance : std::abs(sum - 1.0) <= kSimplexTolerance;
        if (!ok) {
          report.violations.push_back({ViolationKind::StreamSimplex, {node.id, t, s},
                                       node.name + " forwards " + std::to_string(sum) + " of its material"});
        }
      }
    }
  }
  return report;
}

}  // namespace ssomc
