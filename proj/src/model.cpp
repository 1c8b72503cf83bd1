#include "ssomc/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <deque>
#include <numeric>
#include <string>

#include "ssomc/kmeans.hpp"
#include "ssomc/rng.hpp"

namespace ssomc {

std::string_view to_string(LocationKind kind) {
  switch (kind) {
    case LocationKind::Mine:
      return "mine";
    case LocationKind::Stockpile:
      return "stockpile";
    case LocationKind::Processor:
      return "processor";
    case LocationKind::WasteDump:
      return "waste";
  }
  return "unknown";
}

LocationKind parse_location_kind(std::string_view text) {
  if (text == "mine") return LocationKind::Mine;
  if (text == "stockpile") return LocationKind::Stockpile;
  if (text == "processor") return LocationKind::Processor;
  if (text == "waste" || text == "waste-dump") return LocationKind::WasteDump;
  throw InvalidConfig("unknown location kind '" + std::string(text) + "'");
}

int MiningComplexInstance::mine_index(int location_id) const {
  const auto it = std::find(mines.begin(), mines.end(), location_id);
  if (it == mines.end()) throw StructuralError("location " + std::to_string(location_id) + " is not a mine");
  return static_cast<int>(it - mines.begin());
}

namespace {

void require(bool condition, const std::string& message) {
  if (!condition) throw InvalidConfig(message);
}

// Kahn's algorithm; returns an empty vector on a cycle.
std::vector<int> topological_sort(int n, const std::vector<std::vector<int>>& edges_out,
                                  std::vector<int> indegree) {
  std::deque<int> ready;
  for (int v = 0; v < n; ++v) {
    if (indegree[v] == 0) ready.push_back(v);
  }
  std::vector<int> order;
  order.reserve(n);
  while (!ready.empty()) {
    const int v = ready.front();
    ready.pop_front();
    order.push_back(v);
    for (int w : edges_out[v]) {
      if (--indegree[w] == 0) ready.push_back(w);
    }
  }
  if (static_cast<int>(order.size()) != n) order.clear();
  return order;
}

}  // namespace

void MiningComplexInstance::finalize() {
  require(periods > 0, "horizon must have at least one period");
  require(scenario_count > 0, "at least one scenario is required");
  require(!blocks.empty(), "instance has zero blocks");
  const int P = primary_count();
  const int H = hereditary_count();
  const int N = location_count();
  const int B = block_count();
  require(P > 0, "at least one primary attribute is required");
  require(scenarios.attribute_count == P && scenarios.block_count == B && scenarios.count == scenario_count &&
              scenarios.values.size() == static_cast<std::size_t>(P) * B * scenario_count,
          "scenario attribute array has the wrong shape");

  mines.clear();
  for (int i = 0; i < N; ++i) {
    auto& node = locations[i];
    require(node.id == i, "location ids must be dense and ordered");
    require(node.recovery.size() == P, "location " + node.name + ": recovery needs one entry per primary attribute");
    require(node.transfer.rows() == H && node.transfer.cols() == P,
            "location " + node.name + ": transfer table must be hereditary x primary");
    require(node.retained.rows() == H && node.retained.cols() == P,
            "location " + node.name + ": retained table must be hereditary x primary");
    for (int p = 0; p < P; ++p) {
      require(node.recovery[p] >= 0.0 && node.recovery[p] <= 1.0, "recoveries must lie in [0, 1]");
      if (node.kind == LocationKind::Stockpile) require(node.recovery[p] == 1.0, "stockpile recoveries are 1");
    }
    node.outgoing.clear();
    node.incoming.clear();
    if (node.kind == LocationKind::Mine) mines.push_back(i);
  }

  std::vector<std::vector<int>> node_out(N);
  std::vector<int> node_in(N, 0);
  for (int a = 0; a < static_cast<int>(arcs.size()); ++a) {
    const auto& arc = arcs[a];
    require(arc.from >= 0 && arc.from < N && arc.to >= 0 && arc.to < N, "arc endpoint out of range");
    require(locations[arc.from].kind != LocationKind::Mine && locations[arc.to].kind != LocationKind::Mine,
            "mines connect to destinations through groups, not arcs");
    require(arc.from != arc.to, "self-loop arc");
    locations[arc.from].outgoing.push_back(a);
    locations[arc.to].incoming.push_back(a);
    node_out[arc.from].push_back(arc.to);
    ++node_in[arc.to];
  }
  if (topological_sort(N, node_out, node_in).empty()) throw StructuralError("location graph has a cycle");

  successors.assign(B, {});
  std::vector<int> indegree(B, 0);
  for (int b = 0; b < B; ++b) {
    const auto& block = blocks[b];
    require(block.id == b, "block ids must be dense and ordered");
    require(block.tonnage > 0.0, "block tonnage must be positive");
    require(block.mine >= 0 && block.mine < N && locations[block.mine].kind == LocationKind::Mine,
            "block " + std::to_string(b) + " references a non-mine location");
    for (int u : block.predecessors) {
      require(u >= 0 && u < B && u != b, "block " + std::to_string(b) + " has an invalid predecessor");
      require(blocks[u].position[2] <= block.position[2],
              "predecessor of block " + std::to_string(b) + " lies below it");
      successors[u].push_back(b);
      ++indegree[b];
    }
  }
  topological_order = topological_sort(B, successors, indegree);
  if (topological_order.empty()) throw StructuralError("precedence relation has a cycle");

  mine_blocks.assign(mines.size(), {});
  for (int b = 0; b < B; ++b) mine_blocks[mine_index(blocks[b].mine)].push_back(b);

  const int G = group_count();
  mine_groups.assign(mines.size(), {});
  for (int g = 0; g < G; ++g) {
    const auto& group = groups[g];
    require(group.id == g, "group ids must be dense and ordered");
    require(!group.destinations.empty(), "group " + std::to_string(g) + " has no destination");
    for (int j : group.destinations) {
      require(j >= 0 && j < N && locations[j].kind != LocationKind::Mine,
              "group " + std::to_string(g) + " routes to an invalid destination");
    }
    mine_groups[mine_index(group.mine)].push_back(g);
  }
  for (auto& list : mine_groups) {
    std::stable_sort(list.begin(), list.end(),
                     [&](int a, int b) { return groups[a].mean_grade < groups[b].mean_grade; });
  }
  if (G == 0) {
    require(membership.empty(), "membership given without groups");
  } else {
    require(membership.size() == static_cast<std::size_t>(B) * scenario_count, "membership must cover every block and scenario");
    for (int b = 0; b < B; ++b) {
      for (int s = 0; s < scenario_count; ++s) {
        const int g = group_of(b, s);
        require(g >= 0 && g < G && groups[g].mine == blocks[b].mine,
                "block " + std::to_string(b) + " belongs to a group of another mine");
      }
    }
  }

  const std::size_t hn = static_cast<std::size_t>(H) * N;
  require(upper.size() == hn * periods && lower.size() == hn * periods, "bounds must cover every (h, i, t)");
  require(surplus_cost.size() == hn && shortage_cost.size() == hn && price.size() == hn,
          "prices and penalties must cover every (h, i)");
  require(surplus_risk_rate.size() == hn && shortage_risk_rate.size() == hn, "risk discounts must cover every (h, i)");
  require(mining_capacity.size() == mines.size() * periods, "mining capacity must cover every (mine, t)");

  discounted_price.assign(hn * periods, 0.0);
  discounted_surplus.assign(hn * periods, 0.0);
  discounted_shortage.assign(hn * periods, 0.0);
  for (int h = 0; h < H; ++h) {
    for (int i = 0; i < N; ++i) {
      for (int t = 0; t < periods; ++t) {
        const double exponent = t + 1;
        discounted_price[hit(h, i, t)] = price[hi(h, i)] / std::pow(1.0 + cash_flow_rate, exponent);
        discounted_surplus[hit(h, i, t)] = surplus_cost[hi(h, i)] / std::pow(1.0 + surplus_risk_rate[hi(h, i)], exponent);
        discounted_shortage[hit(h, i, t)] =
            shortage_cost[hi(h, i)] / std::pow(1.0 + shortage_risk_rate[hi(h, i)], exponent);
      }
    }
  }
}

bool bit_identical(const Solution& a, const Solution& b) {
  auto same = [](const auto& x, const auto& y) {
    return x.size() == y.size() && (x.empty() || std::memcmp(x.data(), y.data(), x.size() * sizeof(x[0])) == 0);
  };
  return a.periods == b.periods && a.scenarios == b.scenarios && same(a.extraction, b.extraction) &&
         same(a.destination, b.destination) && same(a.streams, b.streams);
}

std::vector<int> locations_of_kind(const MiningComplexInstance& instance, LocationKind kind) {
  std::vector<int> out;
  for (const auto& node : instance.locations) {
    if (node.kind == kind) out.push_back(node.id);
  }
  return out;
}

Clustering cluster_blocks(const MiningComplexInstance& instance, int k, int max_iter, std::uint64_t seed) {
  if (k < 1) throw InvalidConfig("cluster count must be at least 1");
  const int S = instance.scenario_count;
  const int P = instance.primary_count();
  const int dims = P > 1 ? P - 1 : 1;

  std::vector<int> destinations;
  for (const auto& node : instance.locations) {
    if (node.kind != LocationKind::Mine) destinations.push_back(node.id);
  }

  Clustering out;
  out.membership.assign(static_cast<std::size_t>(instance.block_count()) * S, -1);
  for (std::size_t m = 0; m < instance.mines.size(); ++m) {
    const auto& members = instance.mine_blocks[m];
    PointMatrix<double> points(dims, static_cast<Eigen::Index>(members.size()) * S);
    for (std::size_t idx = 0; idx < members.size(); ++idx) {
      const int b = members[idx];
      for (int s = 0; s < S; ++s) {
        const auto col = static_cast<Eigen::Index>(idx * S + s);
        if (P == 1) {
          points(0, col) = instance.scenarios(0, b, s);
        } else {
          for (int p = 1; p < P; ++p) points(p - 1, col) = instance.scenarios(p, b, s) / instance.scenarios(0, b, s);
        }
      }
    }
    const auto result = lloyd_kmeans<double>(points, k, max_iter, mix64(seed + m));
    if (result.dropped_clusters > 0) {
      out.warnings.push_back("mine " + std::to_string(instance.mines[m]) + ": " +
                             std::to_string(result.dropped_clusters) +
                             " empty clusters dropped, group count reduced");
    }
    const auto kept = static_cast<int>(result.centroids.cols());
    std::vector<int> order(kept);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      for (Eigen::Index r = 0; r < result.centroids.rows(); ++r) {
        if (result.centroids(r, a) != result.centroids(r, b)) return result.centroids(r, a) < result.centroids(r, b);
      }
      return false;
    });
    std::vector<int> label_to_group(kept);
    const int base = static_cast<int>(out.groups.size());
    for (int rank = 0; rank < kept; ++rank) {
      Group group;
      group.id = base + rank;
      group.mine = instance.mines[m];
      group.destinations = destinations;
      group.mean_grade = result.centroids(0, order[rank]);
      out.groups.push_back(std::move(group));
      label_to_group[order[rank]] = base + rank;
    }
    for (std::size_t idx = 0; idx < members.size(); ++idx) {
      for (int s = 0; s < S; ++s) {
        out.membership[static_cast<std::size_t>(members[idx]) * S + s] = label_to_group[result.assignment[idx * S + s]];
      }
    }
  }
  return out;
}

void assign_groups(MiningComplexInstance& instance, Clustering clustering) {
  instance.groups = std::move(clustering.groups);
  instance.membership = std::move(clustering.membership);
  instance.finalize();
}

Solution build_initial_solution(const MiningComplexInstance& instance, std::uint64_t seed) {
  const int T = instance.periods;
  const int S = instance.scenario_count;
  Rng rng = make_stream(seed, "initial-solution");

  Solution sol;
  sol.periods = T;
  sol.scenarios = S;
  sol.extraction.assign(instance.block_count(), kNotMined);
  std::vector<double> load(instance.mines.size() * T, 0.0);
  for (int b : instance.topological_order) {
    const auto& block = instance.blocks[b];
    int earliest = 0;
    bool blocked = false;
    for (int u : block.predecessors) {
      if (sol.extraction[u] == kNotMined) {
        blocked = true;
        break;
      }
      earliest = std::max(earliest, sol.extraction[u]);
    }
    if (blocked) continue;
    const int m = instance.mine_index(block.mine);
    const int start = uniform_int(rng, earliest, T - 1);
    for (int step = 0; step < T - earliest; ++step) {
      const int t = earliest + (start - earliest + step) % (T - earliest);
      const std::size_t cell = static_cast<std::size_t>(m) * T + t;
      if (load[cell] + block.tonnage <= instance.mining_capacity[cell]) {
        load[cell] += block.tonnage;
        sol.extraction[b] = t;
        break;
      }
    }
  }

  sol.destination.resize(static_cast<std::size_t>(instance.group_count()) * T);
  for (int g = 0; g < instance.group_count(); ++g) {
    const auto& dests = instance.groups[g].destinations;
    for (int t = 0; t < T; ++t) sol.dest(g, t) = dests[uniform_int(rng, 0, static_cast<int>(dests.size()) - 1)];
  }

  sol.streams.assign(instance.arcs.size() * T * S, 0.0);
  for (const auto& node : instance.locations) {
    if (node.outgoing.empty()) continue;
    const double total = node.kind == LocationKind::Stockpile ? 0.5 : 1.0;
    const double share = total / static_cast<double>(node.outgoing.size());
    for (int a : node.outgoing) {
      for (int t = 0; t < T; ++t) {
        for (int s = 0; s < S; ++s) sol.y(a, t, s) = share;
      }
    }
  }
  return sol;
}

}  // namespace ssomc
