#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ssomc/agents.hpp"
#include "ssomc/heuristics.hpp"
#include "ssomc/hyperheuristic.hpp"
#include "ssomc/model.hpp"

namespace ssomc {

struct InstanceSource {
  std::optional<GeneratorConfig> generate;
  std::filesystem::path path;
  std::uint64_t seed = 1;
};

struct ExperimentConfig {
  InstanceSource instance;
  std::vector<std::string> variants{"baseline"};
  std::vector<std::uint64_t> seeds{1};
  SearchConfig search;
  AgentConfig agent;
  RegistryConfig registry;
  std::optional<double> reference;  ///< pinned Z*; best of runs otherwise
  std::filesystem::path reference_file;
  std::vector<double> gaps{0.01, 0.02};
  std::filesystem::path output{"results"};
  long trace_stride = 10;
  int workers = 1;

  void validate() const;
};

GeneratorConfig generator_config_from_json(const nlohmann::json& doc);
nlohmann::json generator_config_to_json(const GeneratorConfig& config);
ExperimentConfig experiment_config_from_json(const nlohmann::json& doc);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

MiningComplexInstance materialize_instance(const InstanceSource& source);

/// Best-so-far objective each time it improves.
struct BestPoint {
  long iter = 0;
  double seconds = 0.0;
  double best_f = 0.0;

  bool operator==(const BestPoint&) const = default;
};

struct RunSummary {
  std::string variant;
  std::uint64_t seed = 0;
  double initial_f = 0.0;
  double best_f = 0.0;
  long iterations = 0;
  double seconds = 0.0;  ///< search clock
  std::vector<BestPoint> timeline;
  std::string trace_path;

  bool operator==(const RunSummary&) const = default;
};

nlohmann::json summary_to_json(const RunSummary& summary);
RunSummary summary_from_json(const nlohmann::json& doc);

struct GapHit {
  std::optional<long> iterations;  ///< empty = never reached
  std::optional<double> seconds;
};

/// First point where (Z* - best)/|Z*| <= gap.
GapHit time_to_gap(const RunSummary& summary, double z_star, double gap);

std::filesystem::path cell_directory(const ExperimentConfig& config, const std::string& variant, std::uint64_t seed);

/// Runs one (variant, seed) cell and writes its trace, epoch log and summary.
RunSummary run_cell(const ExperimentConfig& config, const MiningComplexInstance& instance, const std::string& variant,
                    std::uint64_t seed);

/// Every cell of the matrix; cells whose summary is already on disk are
/// loaded instead of rerun.
std::vector<RunSummary> run_experiment(const ExperimentConfig& config, std::ostream* log = nullptr);

/// Summaries already on disk for the configured matrix.
std::vector<RunSummary> load_summaries(const ExperimentConfig& config);

/// Linear interpolation between order statistics.
double quantile(std::vector<double> values, double q);

struct Distribution {
  int count = 0;
  int censored = 0;
  double mean = 0.0;
  double sd = 0.0;  ///< sample standard deviation
  double p10 = 0.0, p50 = 0.0, p90 = 0.0;
};

Distribution describe(const std::vector<double>& values, int censored = 0);

struct GapReport {
  double gap = 0.0;
  Distribution iterations;
  Distribution seconds;
  std::optional<double> iteration_reduction;  ///< (baseline P50 - P50) / baseline P50
  std::optional<double> time_reduction;
};

struct VariantReport {
  std::string variant;
  Distribution final_gap;
  std::vector<GapReport> gaps;
};

struct ExperimentReport {
  double z_star = 0.0;
  std::vector<VariantReport> variants;

  nlohmann::json to_json() const;
  const VariantReport* find(const std::string& variant) const;
};

double reference_objective(const ExperimentConfig& config, const std::vector<RunSummary>& summaries);

/// Unreached gaps are censored at the run's stopping bound.
ExperimentReport summarize(const std::vector<RunSummary>& summaries, double z_star,
                           const std::vector<double>& gaps = {0.01, 0.02});

/// One CSV per variant, `plot_<variant>.csv`, with columns iter,p10,p50,p90
/// of the best-f gap sampled every `stride` iterations. Returns the paths.
std::vector<std::filesystem::path> emit_plot_data(const std::vector<RunSummary>& summaries, double z_star,
                                                  const std::filesystem::path& directory, long stride = 10);

}  // namespace ssomc
