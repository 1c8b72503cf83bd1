#include "ssomc/instance_io.hpp"

#include <cmath>
#include <fstream>

namespace ssomc {

using nlohmann::json;

namespace {

json bounded_array(const std::vector<double>& values) {
  json out = json::array();
  for (double v : values) {
    if (std::isinf(v)) {
      out.push_back(nullptr);
    } else {
      out.push_back(v);
    }
  }
  return out;
}

std::vector<double> read_bounded(const json& arr) {
  std::vector<double> out;
  out.reserve(arr.size());
  for (const auto& v : arr) out.push_back(v.is_null() ? kUnbounded : v.get<double>());
  return out;
}

json matrix_rows(const Eigen::MatrixXd& m) {
  json out = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    out.push_back(std::move(row));
  }
  return out;
}

Eigen::MatrixXd read_matrix(const json& rows, int r, int c) {
  if (static_cast<int>(rows.size()) != r) throw InvalidConfig("transfer table has the wrong row count");
  Eigen::MatrixXd m(r, c);
  for (int i = 0; i < r; ++i) {
    if (static_cast<int>(rows[i].size()) != c) throw InvalidConfig("transfer table has the wrong column count");
    for (int j = 0; j < c; ++j) m(i, j) = rows[i][j].get<double>();
  }
  return m;
}

}  // namespace

json instance_to_json(const MiningComplexInstance& inst) {
  json doc;
  doc["meta"] = {{"format", "ssomc-instance"},
                 {"version", 1},
                 {"periods", inst.periods},
                 {"scenarios", inst.scenario_count},
                 {"primary", inst.primary_names},
                 {"hereditary", inst.hereditary_names}};

  json blocks = json::array();
  for (const auto& b : inst.blocks) {
    blocks.push_back({{"id", b.id},
                      {"mine", b.mine},
                      {"position", b.position},
                      {"tonnage", b.tonnage},
                      {"predecessors", b.predecessors}});
  }
  doc["blocks"] = std::move(blocks);
  doc["scenarios"] = inst.scenarios.values;

  json locations = json::array();
  for (const auto& n : inst.locations) {
    locations.push_back({{"id", n.id},
                         {"name", n.name},
                         {"kind", std::string(to_string(n.kind))},
                         {"recovery", std::vector<double>(n.recovery.data(), n.recovery.data() + n.recovery.size())},
                         {"transfer", matrix_rows(n.transfer)},
                         {"retained", matrix_rows(n.retained)}});
  }
  doc["locations"] = std::move(locations);

  json arcs = json::array();
  for (const auto& a : inst.arcs) arcs.push_back({a.from, a.to});
  doc["arcs"] = std::move(arcs);

  json groups = json::array();
  for (const auto& g : inst.groups) {
    groups.push_back(
        {{"id", g.id}, {"mine", g.mine}, {"destinations", g.destinations}, {"mean_grade", g.mean_grade}});
  }
  doc["groups"] = {{"list", std::move(groups)}, {"membership", inst.membership}};

  doc["bounds"] = {{"upper", bounded_array(inst.upper)},
                   {"lower", bounded_array(inst.lower)},
                   {"mining_capacity", bounded_array(inst.mining_capacity)}};
  doc["penalties"] = {{"surplus", inst.surplus_cost},
                      {"shortage", inst.shortage_cost},
                      {"surplus_risk_rate", inst.surplus_risk_rate},
                      {"shortage_risk_rate", inst.shortage_risk_rate}};
  doc["prices"] = inst.price;
  doc["discounts"] = {{"rates", inst.discount_rates}, {"cash_flow", inst.cash_flow_rate}};
  return doc;
}

MiningComplexInstance instance_from_json(const json& doc) {
  try {
    MiningComplexInstance inst;
    const auto& meta = doc.at("meta");
    inst.periods = meta.at("periods").get<int>();
    inst.scenario_count = meta.at("scenarios").get<int>();
    inst.primary_names = meta.at("primary").get<std::vector<std::string>>();
    inst.hereditary_names = meta.at("hereditary").get<std::vector<std::string>>();
    const int P = inst.primary_count();
    const int H = inst.hereditary_count();

    for (const auto& jb : doc.at("blocks")) {
      Block b;
      b.id = jb.at("id").get<int>();
      b.mine = jb.at("mine").get<int>();
      b.position = jb.at("position").get<std::array<int, 3>>();
      b.tonnage = jb.at("tonnage").get<double>();
      b.predecessors = jb.at("predecessors").get<std::vector<int>>();
      inst.blocks.push_back(std::move(b));
    }
    inst.scenarios.attribute_count = P;
    inst.scenarios.block_count = inst.block_count();
    inst.scenarios.count = inst.scenario_count;
    inst.scenarios.values = doc.at("scenarios").get<std::vector<double>>();

    for (const auto& jl : doc.at("locations")) {
      LocationNode n;
      n.id = jl.at("id").get<int>();
      n.name = jl.at("name").get<std::string>();
      n.kind = parse_location_kind(jl.at("kind").get<std::string>());
      const auto rec = jl.at("recovery").get<std::vector<double>>();
      n.recovery = Eigen::Map<const Eigen::VectorXd>(rec.data(), static_cast<Eigen::Index>(rec.size()));
      n.transfer = read_matrix(jl.at("transfer"), H, P);
      n.retained = read_matrix(jl.at("retained"), H, P);
      inst.locations.push_back(std::move(n));
    }
    for (const auto& ja : doc.at("arcs")) inst.arcs.push_back({ja.at(0).get<int>(), ja.at(1).get<int>()});

    const auto& jg = doc.at("groups");
    for (const auto& g : jg.at("list")) {
      Group group;
      group.id = g.at("id").get<int>();
      group.mine = g.at("mine").get<int>();
      group.destinations = g.at("destinations").get<std::vector<int>>();
      group.mean_grade = g.at("mean_grade").get<double>();
      inst.groups.push_back(std::move(group));
    }
    inst.membership = jg.at("membership").get<std::vector<int>>();

    const auto& bounds = doc.at("bounds");
    inst.upper = read_bounded(bounds.at("upper"));
    inst.lower = read_bounded(bounds.at("lower"));
    inst.mining_capacity = read_bounded(bounds.at("mining_capacity"));
    const auto& pen = doc.at("penalties");
    inst.surplus_cost = pen.at("surplus").get<std::vector<double>>();
    inst.shortage_cost = pen.at("shortage").get<std::vector<double>>();
    inst.surplus_risk_rate = pen.at("surplus_risk_rate").get<std::vector<double>>();
    inst.shortage_risk_rate = pen.at("shortage_risk_rate").get<std::vector<double>>();
    inst.price = doc.at("prices").get<std::vector<double>>();
    const auto& disc = doc.at("discounts");
    inst.discount_rates = disc.at("rates").get<std::array<double, 6>>();
    inst.cash_flow_rate = disc.at("cash_flow").get<double>();

    inst.finalize();
    return inst;
  } catch (const json::exception& e) {
    throw InvalidConfig(std::string("malformed instance file: ") + e.what());
  }
}

void save_instance(const MiningComplexInstance& instance, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << instance_to_json(instance).dump() << '\n';
}

MiningComplexInstance load_instance(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidConfig("cannot read instance file " + path.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw InvalidConfig(std::string("malformed instance file: ") + e.what());
  }
  return instance_from_json(doc);
}

json solution_to_json(const Solution& sol) {
  return {{"periods", sol.periods},
          {"scenarios", sol.scenarios},
          {"extraction", sol.extraction},
          {"destination", sol.destination},
          {"streams", sol.streams}};
}

Solution solution_from_json(const json& doc) {
  Solution sol;
  sol.periods = doc.at("periods").get<int>();
  sol.scenarios = doc.at("scenarios").get<int>();
  sol.extraction = doc.at("extraction").get<std::vector<int>>();
  sol.destination = doc.at("destination").get<std::vector<int>>();
  sol.streams = doc.at("streams").get<std::vector<double>>();
  return sol;
}

}  // namespace ssomc
