#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "ssomc/model.hpp"
#include "ssomc/rng.hpp"

namespace ssomc {

double base_grade(const ElementConfig& element, const MineConfig& mine, int i, int j, int k) {
  double shape = 1.0;
  for (const auto& w : element.waves) {
    const double arg = 2.0 * std::numbers::pi *
                           (w.fx * i / mine.nx + w.fy * j / mine.ny + w.fz * k / mine.nz) +
                       w.phase;
    shape += w.amplitude * std::sin(arg);
  }
  return std::max(0.0, element.mean_grade * shape);
}

double quantize(double value) {
  return std::ldexp(std::nearbyint(std::ldexp(value, 20)), -20);
}

namespace {

enum RateSlot { kCashFlow = 0, kMineSurplus, kProcessorShortage, kProcessorSurplus, kOther, kStockpile };

void validate(const GeneratorConfig& config) {
  if (config.mines.empty()) throw InvalidConfig("instance has zero blocks: no mines configured");
  for (const auto& m : config.mines) {
    if (m.nx <= 0 || m.ny <= 0 || m.nz <= 0) throw InvalidConfig("instance has zero blocks: empty mine grid");
  }
  if (config.periods <= 0) throw InvalidConfig("horizon T must be positive");
  if (config.scenarios <= 0) throw InvalidConfig("scenario count must be positive");
  if (config.elements.empty()) throw InvalidConfig("at least one element is required");
  if (config.processors < 1) throw InvalidConfig("at least one processor is required");
  if (config.stockpiles < 0) throw InvalidConfig("stockpile count must be non-negative");
  if (config.block_tonnage <= 0.0) throw InvalidConfig("block tonnage must be positive");
  if (config.groups_per_mine < 1) throw InvalidConfig("groups per mine must be at least 1");
  if (config.capacity_fraction <= 0.0) throw InvalidConfig("capacity fraction must be positive");
}

}  // namespace

MiningComplexInstance generate_synthetic_instance(const GeneratorConfig& config, std::uint64_t seed) {
  validate(config);
  const int T = config.periods;
  const int S = config.scenarios;
  const int E = static_cast<int>(config.elements.size());
  const int P = 1 + E;
  const int H = 1 + E;
  const int M = static_cast<int>(config.mines.size());

  MiningComplexInstance inst;
  inst.periods = T;
  inst.scenario_count = S;
  inst.primary_names.push_back("tonnage");
  inst.hereditary_names.push_back("tonnes");
  for (const auto& e : config.elements) {
    inst.primary_names.push_back(e.name);
    inst.hereditary_names.push_back(e.name + "_recovered");
  }

  auto add_node = [&](std::string name, LocationKind kind) {
    LocationNode node;
    node.id = static_cast<int>(inst.locations.size());
    node.name = std::move(name);
    node.kind = kind;
    node.recovery = Eigen::VectorXd::Ones(P);
    node.transfer = Eigen::MatrixXd::Zero(H, P);
    node.retained = Eigen::MatrixXd::Zero(H, P);
    inst.locations.push_back(std::move(node));
    return inst.locations.back().id;
  };
  std::vector<int> processors, stockpiles;
  for (int m = 0; m < M; ++m) add_node("mine" + std::to_string(m), LocationKind::Mine);
  for (int q = 0; q < config.processors; ++q) processors.push_back(add_node("processor" + std::to_string(q), LocationKind::Processor));
  for (int q = 0; q < config.stockpiles; ++q) stockpiles.push_back(add_node("stockpile" + std::to_string(q), LocationKind::Stockpile));
  const int waste = add_node("waste", LocationKind::WasteDump);
  for (int sp : stockpiles) {
    for (int pr : processors) inst.arcs.push_back({sp, pr});
  }

  // Blocks: per mine, bench k outermost (k = 0 at surface), then j, then i.
  std::vector<double> mine_tonnage(M, 0.0);
  for (int m = 0; m < M; ++m) {
    const auto& mc = config.mines[m];
    const int base = static_cast<int>(inst.blocks.size());
    auto local = [&](int i, int j, int k) { return base + (k * mc.ny + j) * mc.nx + i; };
    for (int k = 0; k < mc.nz; ++k) {
      for (int j = 0; j < mc.ny; ++j) {
        for (int i = 0; i < mc.nx; ++i) {
          Block b;
          b.id = local(i, j, k);
          b.mine = m;
          b.position = {i, j, k};
          b.tonnage = quantize(config.block_tonnage);
          if (k > 0) {
            for (int dj = -1; dj <= 1; ++dj) {
              for (int di = -1; di <= 1; ++di) {
                const int pi = i + di, pj = j + dj;
                if (pi >= 0 && pi < mc.nx && pj >= 0 && pj < mc.ny) b.predecessors.push_back(local(pi, pj, k - 1));
              }
            }
          }
          mine_tonnage[m] += b.tonnage;
          inst.blocks.push_back(std::move(b));
        }
      }
    }
  }
  const int B = static_cast<int>(inst.blocks.size());

  inst.scenarios.attribute_count = P;
  inst.scenarios.block_count = B;
  inst.scenarios.count = S;
  inst.scenarios.values.assign(static_cast<std::size_t>(P) * B * S, 0.0);
  for (int b = 0; b < B; ++b) {
    for (int s = 0; s < S; ++s) inst.scenarios(0, b, s) = inst.blocks[b].tonnage;
  }
  for (int e = 0; e < E; ++e) {
    const auto& el = config.elements[e];
    Rng rng = make_stream(seed, "grades", e);
    for (int b = 0; b < B; ++b) {
      const auto& blk = inst.blocks[b];
      const auto& mc = config.mines[blk.mine];
      const double g0 = base_grade(el, mc, blk.position[0], blk.position[1], blk.position[2]);
      for (int s = 0; s < S; ++s) {
        const double grade = std::max(0.0, g0 + normal(rng, 0.0, el.noise_sd));
        inst.scenarios(1 + e, b, s) = quantize(grade * blk.tonnage);
      }
    }
  }

  // Economics.
  const int N = static_cast<int>(inst.locations.size());
  const std::size_t hn = static_cast<std::size_t>(H) * N;
  inst.upper.assign(hn * T, kUnbounded);
  inst.lower.assign(hn * T, 0.0);
  inst.surplus_cost.assign(hn, 0.0);
  inst.shortage_cost.assign(hn, 0.0);
  inst.price.assign(hn, 0.0);
  inst.surplus_risk_rate.assign(hn, config.discount_rates[kOther]);
  inst.shortage_risk_rate.assign(hn, config.discount_rates[kOther]);
  inst.discount_rates = config.discount_rates;
  inst.cash_flow_rate = config.discount_rates[kCashFlow];

  double total_capacity = 0.0;
  inst.mining_capacity.assign(static_cast<std::size_t>(M) * T, 0.0);
  for (int m = 0; m < M; ++m) {
    double cap = config.mines[m].mining_capacity;
    if (cap <= 0.0) cap = config.capacity_fraction * mine_tonnage[m] / T;
    total_capacity += cap;
    for (int t = 0; t < T; ++t) inst.mining_capacity[static_cast<std::size_t>(m) * T + t] = cap;
  }
  const double proc_upper =
      config.processing_upper > 0.0 ? config.processing_upper : 0.6 * total_capacity / config.processors;
  const double proc_lower = config.processing_lower > 0.0 ? config.processing_lower : 0.5 * proc_upper;
  const double sp_cap = config.stockpile_capacity > 0.0 ? config.stockpile_capacity : 0.25 * total_capacity;

  auto set_bounds = [&](int h, int i, double lo, double up) {
    for (int t = 0; t < T; ++t) {
      inst.lower[inst.hit(h, i, t)] = lo;
      inst.upper[inst.hit(h, i, t)] = up;
    }
  };
  for (int m = 0; m < M; ++m) {
    auto& node = inst.locations[m];
    node.transfer(0, 0) = 1.0;
    inst.price[inst.hi(0, m)] = -config.mining_cost;
    inst.surplus_cost[inst.hi(0, m)] = config.mining_surplus_cost;
    inst.surplus_risk_rate[inst.hi(0, m)] = config.discount_rates[kMineSurplus];
    set_bounds(0, m, 0.0, inst.mining_capacity[static_cast<std::size_t>(m) * T]);
  }
  for (int pr : processors) {
    auto& node = inst.locations[pr];
    node.transfer(0, 0) = 1.0;
    inst.price[inst.hi(0, pr)] = -config.processing_cost;
    inst.surplus_cost[inst.hi(0, pr)] = config.processing_surplus_cost;
    inst.shortage_cost[inst.hi(0, pr)] = config.processing_shortage_cost;
    inst.surplus_risk_rate[inst.hi(0, pr)] = config.discount_rates[kProcessorSurplus];
    inst.shortage_risk_rate[inst.hi(0, pr)] = config.discount_rates[kProcessorShortage];
    set_bounds(0, pr, proc_lower, proc_upper);
    for (int e = 0; e < E; ++e) {
      node.recovery[1 + e] = config.elements[e].recovery;
      node.transfer(1 + e, 1 + e) = config.elements[e].recovery;
      inst.price[inst.hi(1 + e, pr)] = config.elements[e].price;
    }
  }
  for (int sp : stockpiles) {
    auto& node = inst.locations[sp];
    node.retained(0, 0) = 1.0;
    inst.surplus_cost[inst.hi(0, sp)] = config.stockpile_surplus_cost;
    for (int h = 0; h < H; ++h) {
      inst.surplus_risk_rate[inst.hi(h, sp)] = config.discount_rates[kStockpile];
      inst.shortage_risk_rate[inst.hi(h, sp)] = config.discount_rates[kStockpile];
    }
    set_bounds(0, sp, 0.0, sp_cap);
  }
  inst.locations[waste].transfer(0, 0) = 1.0;

  inst.finalize();
  assign_groups(inst, cluster_blocks(inst, config.groups_per_mine, config.kmeans_max_iter, mix64(seed ^ 0x6b6d65616e73ULL)));
  return inst;
}

}  // namespace ssomc
