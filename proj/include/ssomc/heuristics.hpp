#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "ssomc/evaluator.hpp"
#include "ssomc/model.hpp"
#include "ssomc/rng.hpp"

namespace ssomc {

enum class HeuristicFamily { ExtractionSequence, ClusterDestination, DestinationPolicy, ProcessingStream };

std::string_view to_string(HeuristicFamily family);

/// Period moves. NOT-MINED behaves like period T, so advancing an unmined
/// block starts it in the last period and delaying from T-1 drops it.
enum class ShiftMode { Advance1, Delay1, Random, ToggleNotMined, Jump2 };
/// Blocks moved together with the sampled one: its same-period successors
/// (cone) or its same-period predecessors (inverted cone).
enum class RepairShape { Cone, InvertedCone };
enum class BlockPick { Random, DeviationBiased };
enum class GroupPick { Uniform, GradeBiased, PeriodBiased };

struct HeuristicDescriptor {
  int id = 0;
  HeuristicFamily family = HeuristicFamily::ExtractionSequence;
  std::string name;
  // extraction-sequence
  ShiftMode shift = ShiftMode::Advance1;
  RepairShape shape = RepairShape::Cone;
  BlockPick pick = BlockPick::Random;
  // cluster-destination
  GroupPick group_pick = GroupPick::Uniform;
  int batch = 1;
  // destination-policy
  int threshold_shift = 1;
  int processor_slot = 0;
  // processing-stream
  double sigma = 0.1;
  bool all_scenarios = false;
};

struct RegistryConfig {
  int size = 0;  ///< 0 = every heuristic the instance supports (38 when all families are present)
  bool extraction = true;
  bool cluster_destination = true;
  bool destination_policy = true;
  bool processing_stream = true;
};

/// Dense, stable list of heuristics. When `size` differs from the natural
/// count the families are interleaved round-robin and cycled.
std::vector<HeuristicDescriptor> build_registry(const MiningComplexInstance& instance, const RegistryConfig& config,
                                                std::vector<std::string>* warnings = nullptr);

inline constexpr int kMaxPickRetries = 32;

/// Each perturbation edits `solution` in place and returns what it changed;
/// an empty footprint is a null outcome. Feasible inputs stay feasible.
Footprint perturb_extraction(const MiningComplexInstance& instance, Solution& solution, Rng& rng,
                             const HeuristicDescriptor& params);
Footprint perturb_cluster_destination(const MiningComplexInstance& instance, Solution& solution, Rng& rng,
                                      const HeuristicDescriptor& params);
Footprint perturb_destination_policy(const MiningComplexInstance& instance, Solution& solution, Rng& rng,
                                     const HeuristicDescriptor& params);
Footprint perturb_processing_stream(const MiningComplexInstance& instance, Solution& solution, Rng& rng,
                                    const HeuristicDescriptor& params);
Footprint perturb(const MiningComplexInstance& instance, Solution& solution, Rng& rng,
                  const HeuristicDescriptor& params);

/// Unclamped proposal of the stream perturbation.
double stream_proposal(Rng& rng, double current, double sigma);

/// Arcs whose proportion the stream family may change.
std::vector<int> perturbable_arcs(const MiningComplexInstance& instance);

/// Moves blocks so every predecessor of `b` is mined no later and every
/// successor no earlier than `b`, recording each change.
void repair_precedence(const MiningComplexInstance& instance, Solution& solution, const std::vector<int>& moved,
                       Footprint& footprint);

/// Leading groups of a mine (ascending grade) routed to `waste` in period t.
int cutoff_threshold(const MiningComplexInstance& instance, const Solution& solution, int mine_index, int t,
                     int waste);

/// Registry plus one RNG stream per heuristic.
class HeuristicSet {
 public:
  HeuristicSet(const MiningComplexInstance& instance, std::vector<HeuristicDescriptor> registry, std::uint64_t seed);

  int size() const { return static_cast<int>(registry_.size()); }
  const HeuristicDescriptor& descriptor(int id) const { return registry_[id]; }
  const std::vector<HeuristicDescriptor>& registry() const { return registry_; }

  Footprint apply(int id, Solution& solution);

 private:
  const MiningComplexInstance* inst_;
  std::vector<HeuristicDescriptor> registry_;
  std::vector<Rng> streams_;
};

}  // namespace ssomc
