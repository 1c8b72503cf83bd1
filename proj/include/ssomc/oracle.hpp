#pragma once

#include <cstdint>

#include "ssomc/model.hpp"

namespace ssomc {

struct OracleResult {
  double best_objective = 0.0;
  Solution best;
  std::uint64_t schedules = 0;    ///< precedence-feasible extraction vectors
  std::uint64_t evaluations = 0;  ///< (x, z) pairs evaluated
};

/// Exhaustive search over every precedence-feasible extraction schedule and
/// every destination policy. Stream proportions must be forced (no arc the
/// stream heuristics could change); they are taken from `streams_from`.
/// Throws InvalidConfig when the enumeration would exceed `limit` pairs.
OracleResult enumerate_optimum(const MiningComplexInstance& instance, const Solution& streams_from,
                               std::uint64_t limit = 50'000'000);

}  // namespace ssomc
