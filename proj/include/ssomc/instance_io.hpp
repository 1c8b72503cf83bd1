#pragma once

#include <filesystem>

#include <json.hpp>

#include "ssomc/model.hpp"

namespace ssomc {

/// Instance file layout (all flat arrays row-major):
///   meta       periods, scenarios, primary/hereditary attribute names
///   blocks     [{id, mine, position:[i,j,k], tonnage, predecessors}]
///   scenarios  beta over (p, b, s)
///   locations  [{id, name, kind, recovery[p], transfer[h][p], retained[h][p]}]
///   arcs       [[from, to]]
///   groups     {list:[{id, mine, destinations, mean_grade}], membership (b, s)}
///   bounds     {upper (h, i, t), lower (h, i, t), mining_capacity (mine, t)}; null = unbounded
///   penalties  {surplus (h, i), shortage (h, i), surplus_risk_rate, shortage_risk_rate}
///   prices     (h, i)
///   discounts  {rates:[d1..d6], cash_flow}
nlohmann::json instance_to_json(const MiningComplexInstance& instance);
MiningComplexInstance instance_from_json(const nlohmann::json& doc);

void save_instance(const MiningComplexInstance& instance, const std::filesystem::path& path);
MiningComplexInstance load_instance(const std::filesystem::path& path);

nlohmann::json solution_to_json(const Solution& solution);
Solution solution_from_json(const nlohmann::json& doc);

}  // namespace ssomc
