#include "ssomc/heuristics.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

namespace ssomc {

std::string_view to_string(HeuristicFamily family) {
  switch (family) {
    case HeuristicFamily::ExtractionSequence:
      return "extraction-sequence";
    case HeuristicFamily::ClusterDestination:
      return "cluster-destination";
    case HeuristicFamily::DestinationPolicy:
      return "destination-policy";
    case HeuristicFamily::ProcessingStream:
      return "processing-stream";
  }
  return "unknown";
}

namespace {

constexpr const char* kShiftNames[] = {"advance1", "delay1", "random", "toggle", "jump2"};
constexpr const char* kGroupPickNames[] = {"uniform", "grade", "period"};

int encoded(const Solution& sol, int b) {
  return sol.extraction[b] == kNotMined ? sol.periods : sol.extraction[b];
}

Period decoded(int e, int T) { return e >= T ? kNotMined : e; }

/// Sets block b to encoded period e and records the change.
void move_block(Solution& sol, int b, int e, Footprint& fp) {
  const Period to = decoded(e, sol.periods);
  if (sol.extraction[b] == to) return;
  fp.blocks.push_back({b, sol.extraction[b], to});
  sol.extraction[b] = to;
}

/// Merges repeated moves of the same block and drops no-ops.
void compact(Footprint& fp) {
  std::unordered_map<int, std::size_t> slot;
  std::vector<BlockMove> merged;
  for (const auto& m : fp.blocks) {
    auto [it, inserted] = slot.try_emplace(m.block, merged.size());
    if (inserted) {
      merged.push_back(m);
    } else {
      merged[it->second].to = m.to;
    }
  }
  merged.erase(std::remove_if(merged.begin(), merged.end(), [](const BlockMove& m) { return m.from == m.to; }),
               merged.end());
  fp.blocks = std::move(merged);
}

bool new_period(ShiftMode mode, int e, int T, Rng& rng, int& out) {
  switch (mode) {
    case ShiftMode::Advance1:
      if (e == 0) return false;
      out = e - 1;
      return true;
    case ShiftMode::Delay1:
      if (e == T) return false;
      out = e + 1;
      return true;
    case ShiftMode::Random: {
      int r = uniform_int(rng, 0, T - 1);
      if (r >= e) ++r;
      out = r;
      return true;
    }
    case ShiftMode::ToggleNotMined:
      out = e < T ? T : uniform_int(rng, 0, T - 1);
      return true;
    case ShiftMode::Jump2: {
      const int dir = uniform_int(rng, 0, 1) == 0 ? -1 : 1;
      for (int d : {dir, -dir}) {
        const int n = e + 2 * d;
        if (n >= 0 && n <= T) {
          out = n;
          return true;
        }
      }
      return false;
    }
  }
  return false;
}

int pick_block(const MiningComplexInstance& inst, const Solution& sol, Rng& rng, BlockPick pick) {
  const int B = inst.block_count();
  if (pick == BlockPick::Random || inst.mines.empty()) return uniform_int(rng, 0, B - 1);
  const int T = inst.periods;
  std::vector<double> load(inst.mines.size() * T, 0.0);
  for (int b = 0; b < B; ++b) {
    if (sol.extraction[b] == kNotMined) continue;
    load[static_cast<std::size_t>(inst.mine_index(inst.blocks[b].mine)) * T + sol.extraction[b]] +=
        inst.blocks[b].tonnage;
  }
  std::size_t worst = 0;
  double worst_gap = -1.0;
  for (std::size_t k = 0; k < load.size(); ++k) {
    const double gap = std::abs(load[k] - inst.mining_capacity[k]);
    if (gap > worst_gap) {
      worst_gap = gap;
      worst = k;
    }
  }
  const auto m = worst / T;
  const int t = static_cast<int>(worst % T);
  const bool over = load[worst] > inst.mining_capacity[worst];
  const auto& members = inst.mine_blocks[m];
  for (int attempt = 0; attempt < kMaxPickRetries; ++attempt) {
    const int b = members[uniform_int(rng, 0, static_cast<int>(members.size()) - 1)];
    const int e = encoded(sol, b);
    if (over ? e == t : e > t) return b;
  }
  return uniform_int(rng, 0, B - 1);
}

std::vector<int> eligible_groups(const MiningComplexInstance& inst) {
  std::vector<int> out;
  for (const auto& g : inst.groups) {
    if (g.destinations.size() >= 2) out.push_back(g.id);
  }
  return out;
}

int first_of_kind(const MiningComplexInstance& inst, LocationKind kind) {
  for (const auto& n : inst.locations) {
    if (n.kind == kind) return n.id;
  }
  return -1;
}

bool allows(const Group& g, int j) {
  return std::find(g.destinations.begin(), g.destinations.end(), j) != g.destinations.end();
}

}  // namespace

void repair_precedence(const MiningComplexInstance& inst, Solution& sol, const std::vector<int>& moved,
                       Footprint& fp) {
  std::vector<int> work(moved.begin(), moved.end());
  while (!work.empty()) {
    const int b = work.back();
    work.pop_back();
    const int e = encoded(sol, b);
    for (int u : inst.blocks[b].predecessors) {
      if (encoded(sol, u) > e) {
        move_block(sol, u, e, fp);
        work.push_back(u);
      }
    }
    for (int w : inst.successors[b]) {
      if (encoded(sol, w) < e) {
        move_block(sol, w, e, fp);
        work.push_back(w);
      }
    }
  }
}

Footprint perturb_extraction(const MiningComplexInstance& inst, Solution& sol, Rng& rng,
                             const HeuristicDescriptor& params) {
  Footprint fp;
  const int T = inst.periods;
  int b = -1, e_old = 0, e_new = 0;
  for (int attempt = 0; attempt < kMaxPickRetries; ++attempt) {
    const int candidate = pick_block(inst, sol, rng, params.pick);
    const int e = encoded(sol, candidate);
    int n = 0;
    if (new_period(params.shift, e, T, rng, n) && n != e) {
      b = candidate;
      e_old = e;
      e_new = n;
      break;
    }
  }
  if (b < 0) return fp;

  std::vector<int> moved{b};
  const auto& partners = params.shape == RepairShape::Cone ? inst.successors[b] : inst.blocks[b].predecessors;
  for (int x : partners) {
    if (encoded(sol, x) == e_old) moved.push_back(x);
  }
  for (int x : moved) move_block(sol, x, e_new, fp);
  repair_precedence(inst, sol, moved, fp);
  compact(fp);
  return fp;
}

Footprint perturb_cluster_destination(const MiningComplexInstance& inst, Solution& sol, Rng& rng,
                                      const HeuristicDescriptor& params) {
  Footprint fp;
  const auto eligible = eligible_groups(inst);
  if (eligible.empty()) return fp;
  const int T = inst.periods;
  std::vector<double> grade_w, period_w;
  if (params.group_pick == GroupPick::GradeBiased) {
    double total = 0.0;
    for (int g : eligible) {
      grade_w.push_back(std::max(0.0, inst.groups[g].mean_grade));
      total += grade_w.back();
    }
    if (total <= 0.0) grade_w.clear();
  }
  if (params.group_pick == GroupPick::PeriodBiased) {
    for (int t = 0; t < T; ++t) period_w.push_back(1.0 / (t + 1));
  }
  for (int k = 0; k < params.batch; ++k) {
    int g = 0;
    if (!grade_w.empty()) {
      g = eligible[std::discrete_distribution<int>(grade_w.begin(), grade_w.end())(rng)];
    } else {
      g = eligible[uniform_int(rng, 0, static_cast<int>(eligible.size()) - 1)];
    }
    const int t = period_w.empty() ? uniform_int(rng, 0, T - 1)
                                   : std::discrete_distribution<int>(period_w.begin(), period_w.end())(rng);
    const auto& dests = inst.groups[g].destinations;
    const int current = sol.dest(g, t);
    std::vector<int> others;
    for (int j : dests) {
      if (j != current) others.push_back(j);
    }
    const int to = others[uniform_int(rng, 0, static_cast<int>(others.size()) - 1)];
    fp.destinations.push_back({g, t, current, to});
    sol.dest(g, t) = to;
  }
  return fp;
}

int cutoff_threshold(const MiningComplexInstance& inst, const Solution& sol, int m, int t, int waste) {
  int tau = 0;
  for (int g : inst.mine_groups[m]) {
    if (sol.dest(g, t) != waste) break;
    ++tau;
  }
  return tau;
}

Footprint perturb_destination_policy(const MiningComplexInstance& inst, Solution& sol, Rng& rng,
                                     const HeuristicDescriptor& params) {
  Footprint fp;
  const int waste = first_of_kind(inst, LocationKind::WasteDump);
  const auto processors = locations_of_kind(inst, LocationKind::Processor);
  if (waste < 0 || processors.empty()) return fp;
  std::vector<int> mines;
  for (std::size_t m = 0; m < inst.mine_groups.size(); ++m) {
    if (!inst.mine_groups[m].empty()) mines.push_back(static_cast<int>(m));
  }
  if (mines.empty()) return fp;

  const int m = mines[uniform_int(rng, 0, static_cast<int>(mines.size()) - 1)];
  const int t = uniform_int(rng, 0, inst.periods - 1);
  const auto& ranked = inst.mine_groups[m];
  const int tau = cutoff_threshold(inst, sol, m, t, waste) + params.threshold_shift;
  if (tau < 0 || tau > static_cast<int>(ranked.size())) return fp;
  const int target = processors[std::min<std::size_t>(params.processor_slot, processors.size() - 1)];
  for (int r = 0; r < static_cast<int>(ranked.size()); ++r) {
    const int g = ranked[r];
    const int want = r < tau ? waste : target;
    if (sol.dest(g, t) == want || !allows(inst.groups[g], want)) continue;
    fp.destinations.push_back({g, t, sol.dest(g, t), want});
    sol.dest(g, t) = want;
  }
  return fp;
}

double stream_proposal(Rng& rng, double current, double sigma) { return normal(rng, current, sigma); }

std::vector<int> perturbable_arcs(const MiningComplexInstance& inst) {
  std::vector<int> out;
  for (const auto& node : inst.locations) {
    const bool eligible = node.kind == LocationKind::Stockpile ? !node.outgoing.empty() : node.outgoing.size() >= 2;
    if (eligible) out.insert(out.end(), node.outgoing.begin(), node.outgoing.end());
  }
  std::sort(out.begin(), out.end());
  return out;
}

Footprint perturb_processing_stream(const MiningComplexInstance& inst, Solution& sol, Rng& rng,
                                    const HeuristicDescriptor& params) {
  Footprint fp;
  const auto arcs = perturbable_arcs(inst);
  if (arcs.empty()) return fp;
  const int a = arcs[uniform_int(rng, 0, static_cast<int>(arcs.size()) - 1)];
  const auto& node = inst.locations[inst.arcs[a].from];
  const bool stockpile = node.kind == LocationKind::Stockpile;
  const int t = uniform_int(rng, 0, inst.periods - 1);
  const int s_lo = params.all_scenarios ? 0 : uniform_int(rng, 0, inst.scenario_count - 1);
  const int s_hi = params.all_scenarios ? inst.scenario_count - 1 : s_lo;

  auto set = [&](int arc, int s, double value) {
    const double old = sol.y(arc, t, s);
    if (old == value) return;
    fp.streams.push_back({arc, t, s, old, value});
    sol.y(arc, t, s) = value;
  };
  for (int s = s_lo; s <= s_hi; ++s) {
    const double y = std::clamp(stream_proposal(rng, sol.y(a, t, s), params.sigma), 0.0, 1.0);
    double others = 0.0;
    int sibling_count = 0;
    for (int o : node.outgoing) {
      if (o == a) continue;
      others += sol.y(o, t, s);
      ++sibling_count;
    }
    set(a, s, y);
    if (sibling_count == 0) continue;
    if (stockpile && y + others <= 1.0) continue;
    const double room = 1.0 - y;
    for (int o : node.outgoing) {
      if (o == a) continue;
      const double v = others > 0.0 ? sol.y(o, t, s) * (room / others) : room / sibling_count;
      set(o, s, v);
    }
  }
  return fp;
}

Footprint perturb(const MiningComplexInstance& inst, Solution& sol, Rng& rng, const HeuristicDescriptor& params) {
  switch (params.family) {
    case HeuristicFamily::ExtractionSequence:
      return perturb_extraction(inst, sol, rng, params);
    case HeuristicFamily::ClusterDestination:
      return perturb_cluster_destination(inst, sol, rng, params);
    case HeuristicFamily::DestinationPolicy:
      return perturb_destination_policy(inst, sol, rng, params);
    case HeuristicFamily::ProcessingStream:
      return perturb_processing_stream(inst, sol, rng, params);
  }
  return {};
}

std::vector<HeuristicDescriptor> build_registry(const MiningComplexInstance& inst, const RegistryConfig& config,
                                                std::vector<std::string>* warnings) {
  if (config.size < 0) throw InvalidConfig("registry size must be non-negative");
  std::vector<std::vector<HeuristicDescriptor>> families;

  if (config.extraction && inst.block_count() > 0) {
    std::vector<HeuristicDescriptor> list;
    for (int mode = 0; mode < 5; ++mode) {
      for (auto shape : {RepairShape::Cone, RepairShape::InvertedCone}) {
        for (auto pick : {BlockPick::Random, BlockPick::DeviationBiased}) {
          HeuristicDescriptor d;
          d.family = HeuristicFamily::ExtractionSequence;
          d.shift = static_cast<ShiftMode>(mode);
          d.shape = shape;
          d.pick = pick;
          d.name = std::string("extraction/") + kShiftNames[mode] + (shape == RepairShape::Cone ? "/cone" : "/inverted") +
                   (pick == BlockPick::Random ? "/random" : "/deviation");
          list.push_back(std::move(d));
        }
      }
    }
    families.push_back(std::move(list));
  }
  if (config.cluster_destination && !eligible_groups(inst).empty()) {
    std::vector<HeuristicDescriptor> list;
    for (int pick = 0; pick < 3; ++pick) {
      for (int batch : {1, 5}) {
        HeuristicDescriptor d;
        d.family = HeuristicFamily::ClusterDestination;
        d.group_pick = static_cast<GroupPick>(pick);
        d.batch = batch;
        d.name = std::string("cluster/") + kGroupPickNames[pick] + (batch == 1 ? "/single" : "/batch5");
        list.push_back(std::move(d));
      }
    }
    families.push_back(std::move(list));
  }
  if (config.destination_policy && inst.group_count() > 0 && first_of_kind(inst, LocationKind::WasteDump) >= 0 &&
      first_of_kind(inst, LocationKind::Processor) >= 0) {
    std::vector<HeuristicDescriptor> list;
    for (int shift : {-1, 1}) {
      for (int slot = 0; slot < 3; ++slot) {
        HeuristicDescriptor d;
        d.family = HeuristicFamily::DestinationPolicy;
        d.threshold_shift = shift;
        d.processor_slot = slot;
        d.name = std::string("cutoff/") + (shift < 0 ? "down" : "up") + "/processor" + std::to_string(slot);
        list.push_back(std::move(d));
      }
    }
    families.push_back(std::move(list));
  }
  if (config.processing_stream && !perturbable_arcs(inst).empty()) {
    std::vector<HeuristicDescriptor> list;
    for (double sigma : {0.05, 0.1, 0.2}) {
      for (bool all : {false, true}) {
        HeuristicDescriptor d;
        d.family = HeuristicFamily::ProcessingStream;
        d.sigma = sigma;
        d.all_scenarios = all;
        d.name = "stream/sigma" + std::to_string(sigma).substr(0, 4) + (all ? "/all" : "/single");
        list.push_back(std::move(d));
      }
    }
    families.push_back(std::move(list));
  }

  if (warnings != nullptr && families.size() < 2) {
    warnings->push_back("instance supports only " + std::to_string(families.size()) + " heuristic families");
  }
  std::vector<HeuristicDescriptor> out;
  std::size_t natural = 0;
  for (const auto& f : families) natural += f.size();
  if (config.size == 0 || static_cast<std::size_t>(config.size) == natural) {
    for (auto& f : families) out.insert(out.end(), f.begin(), f.end());
  } else if (natural > 0) {
    std::size_t longest = 0;
    for (const auto& f : families) longest = std::max(longest, f.size());
    const auto n = static_cast<std::size_t>(config.size);
    for (std::size_t k = 0; out.size() < n; ++k) {
      for (const auto& f : families) {
        if (out.size() < n && k % longest < f.size()) out.push_back(f[k % longest]);
      }
    }
  }
  for (std::size_t i = 0; i < out.size(); ++i) out[i].id = static_cast<int>(i);
  return out;
}

HeuristicSet::HeuristicSet(const MiningComplexInstance& instance, std::vector<HeuristicDescriptor> registry,
                           std::uint64_t seed)
    : inst_(&instance), registry_(std::move(registry)) {
  for (std::size_t i = 0; i < registry_.size(); ++i) streams_.push_back(make_stream(seed, "heuristic", i));
}

Footprint HeuristicSet::apply(int id, Solution& solution) { return perturb(*inst_, solution, streams_[id], registry_[id]); }

}  // namespace ssomc
