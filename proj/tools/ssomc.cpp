#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "ssomc/harness.hpp"
#include "ssomc/instance_io.hpp"
#include "ssomc/oracle.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ssomc::InvalidConfig("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ssomc::InvalidConfig(path.string() + ": " + e.what());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::string out;
};

ssomc::ExperimentConfig experiment(const Options& o) {
  auto cfg = ssomc::load_experiment_config(o.config);
  if (o.seed) cfg.seeds = {*o.seed};
  if (o.workers) cfg.workers = *o.workers;
  if (!o.out.empty()) cfg.output = o.out;
  cfg.validate();
  return cfg;
}

/// A generator block, an experiment config, or a bare instance file.
ssomc::MiningComplexInstance instance_from(const Options& o) {
  const json doc = read_json(o.config);
  if (doc.contains("blocks")) {
    try {
      return ssomc::instance_from_json(doc);
    } catch (const json::exception& e) {
      throw ssomc::InvalidConfig(e.what());
    }
  }
  ssomc::InstanceSource source;
  if (doc.contains("instance")) {
    source = ssomc::experiment_config_from_json(doc).instance;
  } else {
    try {
      source.generate = ssomc::generator_config_from_json(doc);
    } catch (const json::exception& e) {
      throw ssomc::InvalidConfig(e.what());
    }
  }
  if (o.seed) source.seed = *o.seed;
  return ssomc::materialize_instance(source);
}

int cmd_generate(const Options& o) {
  const auto inst = instance_from(o);
  const fs::path out = o.out.empty() ? fs::path("instance.json") : fs::path(o.out);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  ssomc::save_instance(inst, out);
  std::cout << "wrote " << out.string() << ": " << inst.block_count() << " blocks, " << inst.periods << " periods, "
            << inst.scenario_count << " scenarios, " << inst.group_count() << " groups\n";
  return 0;
}

int cmd_run(const Options& o) {
  const auto cfg = experiment(o);
  const auto summaries = ssomc::run_experiment(cfg, &std::cout);
  std::cout << summaries.size() << " runs in " << cfg.output.string() << "\n";
  return 0;
}

int cmd_report(const Options& o) {
  const auto cfg = experiment(o);
  const auto summaries = ssomc::load_summaries(cfg);
  if (summaries.empty()) throw ssomc::InvalidConfig("no run summaries under " + cfg.output.string());
  const double z = ssomc::reference_objective(cfg, summaries);
  const auto report = ssomc::summarize(summaries, z, cfg.gaps);
  write_text(cfg.output / "report.json", report.to_json().dump(2) + "\n");
  ssomc::emit_plot_data(summaries, z, cfg.output, cfg.trace_stride);

  std::cout << "Z* = " << std::setprecision(10) << z << "\n";
  std::printf("%-10s %6s %5s %12s %12s %12s %12s %10s\n", "variant", "gap", "cens", "mean", "p10", "p50", "p90",
              "reduction");
  for (const auto& v : report.variants) {
    for (const auto& g : v.gaps) {
      const auto& d = g.iterations;
      std::printf("%-10s %5.1f%% %5d %12.1f %12.1f %12.1f %12.1f", v.variant.c_str(), 100.0 * g.gap, d.censored,
                  d.mean, d.p10, d.p50, d.p90);
      if (g.iteration_reduction) {
        std::printf(" %9.1f%%\n", 100.0 * *g.iteration_reduction);
      } else {
        std::printf(" %10s\n", "-");
      }
    }
  }
  return 0;
}

int cmd_oracle(const Options& o) {
  const auto inst = instance_from(o);
  const auto streams = ssomc::build_initial_solution(inst, o.seed.value_or(1));
  const auto r = ssomc::enumerate_optimum(inst, streams);
  const json doc = {{"best_objective", r.best_objective},
                    {"schedules", r.schedules},
                    {"evaluations", r.evaluations},
                    {"solution", ssomc::solution_to_json(r.best)}};
  if (!o.out.empty()) write_text(o.out, doc.dump(2) + "\n");
  std::cout << std::setprecision(17) << "optimum " << r.best_objective << " over " << r.evaluations
            << " (x, z) pairs, " << r.schedules << " schedules\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stochastic mining complex optimizer"};
  app.require_subcommand(1);
  Options opts;
  auto add_common = [&](CLI::App* sub, bool config_required) {
    auto* c = sub->add_option("--config", opts.config, "JSON config path")->check(CLI::ExistingFile);
    if (config_required) c->required();
    sub->add_option("--seed", opts.seed, "seed override");
    sub->add_option("--workers", opts.workers, "concurrent cells")->check(CLI::PositiveNumber);
    sub->add_option("--out", opts.out, "output path");
  };
  auto* gen = app.add_subcommand("generate", "synthesize an instance");
  auto* run = app.add_subcommand("run", "run an experiment matrix");
  auto* rep = app.add_subcommand("report", "summaries and plot data");
  auto* orc = app.add_subcommand("oracle", "enumerate a tiny instance exhaustively");
  for (auto* s : {gen, run, rep, orc}) add_common(s, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (gen->parsed()) return cmd_generate(opts);
    if (run->parsed()) return cmd_run(opts);
    if (rep->parsed()) return cmd_report(opts);
    return cmd_oracle(opts);
  } catch (const ssomc::InvalidConfig& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const ssomc::StructuralError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
