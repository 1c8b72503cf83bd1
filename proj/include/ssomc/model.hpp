#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace ssomc {

using Period = int;
inline constexpr Period kNotMined = -1;
inline constexpr double kUnbounded = std::numeric_limits<double>::infinity();

class InvalidConfig : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class MalformedSolution : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InfeasibleSolution : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class StructuralError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class LocationKind { Mine, Stockpile, Processor, WasteDump };

std::string_view to_string(LocationKind kind);
LocationKind parse_location_kind(std::string_view text);

struct Block {
  int id = 0;
  int mine = 0;  ///< location id of the owning mine
  std::array<int, 3> position{};  ///< (i, j, k); k = 0 is the surface bench
  double tonnage = 0.0;
  std::vector<int> predecessors;
};

/// Simulated primary attributes, row-major over (attribute, block, scenario).
struct ScenarioSet {
  int attribute_count = 0;
  int block_count = 0;
  int count = 0;
  std::vector<double> values;

  double operator()(int p, int b, int s) const {
    return values[(static_cast<std::size_t>(p) * block_count + b) * count + s];
  }
  double& operator()(int p, int b, int s) {
    return values[(static_cast<std::size_t>(p) * block_count + b) * count + s];
  }
};

struct Arc {
  int from = 0;
  int to = 0;
};

struct LocationNode {
  int id = 0;
  std::string name;
  LocationKind kind = LocationKind::Processor;
  std::vector<int> outgoing;  ///< arc indices leaving this node
  std::vector<int> incoming;  ///< arc indices entering this node
  Eigen::VectorXd recovery;   ///< per primary attribute, applied when forwarding
  /// Linear hereditary transfer functions, hereditary x primary. `transfer`
  /// applies to the quantity present in the period, `retained` to the quantity
  /// a stockpile keeps at the end of the period.
  Eigen::MatrixXd transfer;
  Eigen::MatrixXd retained;

  bool terminal() const { return outgoing.empty(); }
};

struct Group {
  int id = 0;
  int mine = 0;
  std::vector<int> destinations;
  double mean_grade = 0.0;  ///< centroid grade of the first metal, used for ranking
};

/// Everything needed to evaluate a plan. Economic tables are dense over
/// (hereditary h, location i) or (h, i, period t), row-major.
struct MiningComplexInstance {
  int periods = 0;
  int scenario_count = 0;
  std::vector<std::string> primary_names;
  std::vector<std::string> hereditary_names;

  std::vector<Block> blocks;
  ScenarioSet scenarios;
  std::vector<LocationNode> locations;
  std::vector<Arc> arcs;
  std::vector<Group> groups;
  std::vector<int> membership;  ///< (block, scenario) -> group id

  std::vector<double> upper;          ///< (h, i, t), kUnbounded when absent
  std::vector<double> lower;          ///< (h, i, t)
  std::vector<double> surplus_cost;   ///< (h, i) base penalty c+
  std::vector<double> shortage_cost;  ///< (h, i) base penalty c-
  std::vector<double> price;          ///< (h, i) base unit price (negative for costs)
  double cash_flow_rate = 0.0;
  std::vector<double> surplus_risk_rate;   ///< (h, i) geological risk discount for c+
  std::vector<double> shortage_risk_rate;  ///< (h, i) geological risk discount for c-
  std::array<double, 6> discount_rates{};  ///< d1..d6 as configured
  std::vector<double> mining_capacity;     ///< (mine index, t) tonnes

  // Derived by finalize().
  std::vector<int> mines;                    ///< location ids of mine nodes
  std::vector<std::vector<int>> successors;  ///< per block
  std::vector<int> topological_order;        ///< blocks, predecessors first
  std::vector<std::vector<int>> mine_blocks;  ///< per mine index
  std::vector<std::vector<int>> mine_groups;  ///< per mine index, ascending mean grade
  std::vector<double> discounted_price;     ///< (h, i, t)
  std::vector<double> discounted_surplus;   ///< (h, i, t)
  std::vector<double> discounted_shortage;  ///< (h, i, t)

  int block_count() const { return static_cast<int>(blocks.size()); }
  int primary_count() const { return static_cast<int>(primary_names.size()); }
  int hereditary_count() const { return static_cast<int>(hereditary_names.size()); }
  int location_count() const { return static_cast<int>(locations.size()); }
  int group_count() const { return static_cast<int>(groups.size()); }

  std::size_t hi(int h, int i) const { return static_cast<std::size_t>(h) * locations.size() + i; }
  std::size_t hit(int h, int i, int t) const { return hi(h, i) * periods + t; }

  int group_of(int b, int s) const { return membership[static_cast<std::size_t>(b) * scenario_count + s]; }
  int mine_index(int location_id) const;

  /// Recomputes derived tables and validates every structural invariant.
  /// Throws InvalidConfig or StructuralError.
  void finalize();
};

/// Scenario-independent first-stage decisions plus the scenario-dependent
/// stream proportions.
struct Solution {
  int periods = 0;
  int scenarios = 0;
  std::vector<Period> extraction;  ///< per block; kNotMined or 0..T-1
  std::vector<int> destination;    ///< (group, t) -> location id
  std::vector<double> streams;     ///< (arc, t, s) proportions

  int& dest(int g, int t) { return destination[static_cast<std::size_t>(g) * periods + t]; }
  int dest(int g, int t) const { return destination[static_cast<std::size_t>(g) * periods + t]; }
  double& y(int a, int t, int s) { return streams[(static_cast<std::size_t>(a) * periods + t) * scenarios + s]; }
  double y(int a, int t, int s) const {
    return streams[(static_cast<std::size_t>(a) * periods + t) * scenarios + s];
  }

  bool operator==(const Solution&) const = default;
};

/// True when every byte of the decision vectors matches.
bool bit_identical(const Solution& a, const Solution& b);

// --- synthetic instances -----------------------------------------------------

struct GradeWave {
  double amplitude = 0.0;  ///< relative to the element mean grade
  double fx = 0.0, fy = 0.0, fz = 0.0;  ///< cycles across the grid
  double phase = 0.0;
};

struct ElementConfig {
  std::string name = "metal";
  double mean_grade = 0.006;
  double noise_sd = 0.0015;
  double price = 5000.0;   ///< per tonne of recovered metal
  double recovery = 0.9;
  std::vector<GradeWave> waves{{0.5, 1.0, 0.5, 0.5, 0.3}, {0.3, 0.5, 1.0, 1.0, 1.1}};
};

struct MineConfig {
  int nx = 10, ny = 10, nz = 5;
  double mining_capacity = 0.0;  ///< tonnes per period; 0 = derived from horizon
};

struct GeneratorConfig {
  std::vector<MineConfig> mines{MineConfig{}};
  std::vector<ElementConfig> elements{ElementConfig{}};
  int processors = 1;
  int stockpiles = 1;
  int scenarios = 10;
  int periods = 5;
  double block_tonnage = 10800.0;
  double mining_cost = 2.0;       ///< per tonne mined
  double processing_cost = 15.0;  ///< per tonne processed
  double processing_lower = 0.0;  ///< tonnes per period per processor; 0 = derived
  double processing_upper = 0.0;  ///< tonnes per period per processor; 0 = derived
  double stockpile_capacity = 0.0;  ///< tonnes; 0 = derived
  double processing_shortage_cost = 8.0;
  double processing_surplus_cost = 5.0;
  double mining_surplus_cost = 1.0;
  double stockpile_surplus_cost = 10.0;
  std::array<double, 6> discount_rates{0.1, 0.1, 0.1, 0.1, 0.1, 0.0};
  int groups_per_mine = 8;
  int kmeans_max_iter = 100;
  double capacity_fraction = 0.7;  ///< share of mine tonnage the horizon can extract
};

/// Deterministic base grade of element `e` at a grid position.
double base_grade(const ElementConfig& element, const MineConfig& mine, int i, int j, int k);

/// Snaps a value onto the 2^-20 grid, so sums of attribute values are exact.
double quantize(double value);

MiningComplexInstance generate_synthetic_instance(const GeneratorConfig& config, std::uint64_t seed);

// --- clustering --------------------------------------------------------------

struct Clustering {
  std::vector<Group> groups;
  std::vector<int> membership;  ///< (block, scenario) -> group id
  std::vector<std::string> warnings;
};

/// k-means on per-(block, scenario) grade vectors, independently per mine.
/// Groups are numbered mine by mine in ascending mean grade and may route to
/// every non-mine location.
Clustering cluster_blocks(const MiningComplexInstance& instance, int k, int max_iter, std::uint64_t seed);

/// Installs a clustering into the instance and re-finalizes it.
void assign_groups(MiningComplexInstance& instance, Clustering clustering);

// --- solutions ---------------------------------------------------------------

Solution build_initial_solution(const MiningComplexInstance& instance, std::uint64_t seed);

enum class ViolationKind { Precedence, Destination, StreamDomain, StreamSimplex };

struct Violation {
  ViolationKind kind;
  std::vector<int> indices;
  std::string message;
};

struct ViolationReport {
  std::vector<Violation> violations;
  bool empty() const { return violations.empty(); }
  std::size_t size() const { return violations.size(); }
};

inline constexpr double kSimplexTolerance = 1e-9;

/// Lists every violated scenario-independent constraint and every stream rule
/// broken in any scenario. Throws MalformedSolution for shape or index errors.
ViolationReport check_feasibility(const MiningComplexInstance& instance, const Solution& solution);

/// Empty unless a destination location has the matching kind.
std::vector<int> locations_of_kind(const MiningComplexInstance& instance, LocationKind kind);

}  // namespace ssomc
