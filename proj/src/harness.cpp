#include "ssomc/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "ssomc/instance_io.hpp"

namespace ssomc {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

template <class T>
void read(const json& doc, const char* key, T& field) {
  if (doc.contains(key) && !doc.at(key).is_null()) field = doc.at(key).get<T>();
}

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidConfig("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw InvalidConfig(path.string() + ": " + e.what());
  }
}

void write_atomically(const fs::path& path, const std::string& text) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << text;
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

SearchConfig search_config_from_json(const json& doc) {
  SearchConfig c;
  read(doc, "epoch_length", c.epoch_length);
  read(doc, "alpha", c.alpha);
  read(doc, "beta0", c.beta0);
  read(doc, "tabu_min", c.tabu_min);
  read(doc, "tabu_max", c.tabu_max);
  read(doc, "lambda_rl", c.lambda_rl);
  read(doc, "max_iterations", c.max_iterations);
  read(doc, "time_limit", c.time_limit);
  if (doc.contains("target") && !doc.at("target").is_null()) c.target = doc.at("target").get<double>();
  read(doc, "initial_temperature", c.initial_temperature);
  read(doc, "cooling_factor", c.cooling_factor);
  read(doc, "cooling_interval", c.cooling_interval);
  read(doc, "wall_clock", c.wall_clock);
  return c;
}

AgentConfig agent_config_from_json(const json& doc) {
  AgentConfig c;
  read(doc, "gamma", c.gamma);
  read(doc, "actor_lr", c.actor_lr);
  read(doc, "critic_lr", c.critic_lr);
  read(doc, "update_period", c.update_period);
  read(doc, "sigma", c.sigma);
  read(doc, "window", c.window);
  read(doc, "hidden", c.hidden);
  read(doc, "clip_norm", c.clip_norm);
  read(doc, "entropy_coef", c.entropy_coef);
  read(doc, "ppo_clip", c.ppo_clip);
  read(doc, "ppo_value_coef", c.ppo_value_coef);
  read(doc, "ppo_entropy_coef", c.ppo_entropy_coef);
  read(doc, "ppo_epochs", c.ppo_epochs);
  read(doc, "sac_alpha", c.sac_alpha);
  read(doc, "sac_tau", c.sac_tau);
  read(doc, "batch_size", c.batch_size);
  read(doc, "buffer_capacity", c.buffer_capacity);
  return c;
}

RegistryConfig registry_config_from_json(const json& doc) {
  RegistryConfig c;
  read(doc, "size", c.size);
  read(doc, "extraction", c.extraction);
  read(doc, "cluster_destination", c.cluster_destination);
  read(doc, "destination_policy", c.destination_policy);
  read(doc, "processing_stream", c.processing_stream);
  return c;
}

std::vector<BestPoint> best_timeline(const SearchResult& result) {
  std::vector<BestPoint> timeline;
  const auto& rows = result.trace.iterations;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (timeline.empty() || rows[k].best_f > timeline.back().best_f) {
      timeline.push_back({rows[k].iter, result.trace.elapsed[k], rows[k].best_f});
    }
  }
  return timeline;
}

double gap_of(double z_star, double f) { return (z_star - f) / std::abs(z_star); }

}  // namespace

void ExperimentConfig::validate() const {
  if (variants.empty()) throw InvalidConfig("experiment needs at least one variant");
  if (seeds.empty()) throw InvalidConfig("experiment needs at least one seed");
  for (const auto& v : variants) parse_agent_kind(v);
  if (std::set<std::string>(variants.begin(), variants.end()).size() != variants.size()) {
    throw InvalidConfig("duplicate variant");
  }
  if (!instance.generate && instance.path.empty()) throw InvalidConfig("instance needs a generate block or a path");
  if (trace_stride < 1) throw InvalidConfig("trace_stride must be at least 1");
  if (workers < 1) throw InvalidConfig("workers must be at least 1");
  for (double g : gaps) {
    if (!(g >= 0.0)) throw InvalidConfig("gap thresholds must be non-negative");
  }
  search.validate();
}

GeneratorConfig generator_config_from_json(const json& doc) {
  GeneratorConfig c;
  if (doc.contains("mines")) {
    c.mines.clear();
    for (const auto& m : doc.at("mines")) {
      MineConfig mc;
      read(m, "nx", mc.nx);
      read(m, "ny", mc.ny);
      read(m, "nz", mc.nz);
      read(m, "mining_capacity", mc.mining_capacity);
      c.mines.push_back(mc);
    }
  }
  if (doc.contains("elements")) {
    c.elements.clear();
    for (const auto& e : doc.at("elements")) {
      ElementConfig ec;
      read(e, "name", ec.name);
      read(e, "mean_grade", ec.mean_grade);
      read(e, "noise_sd", ec.noise_sd);
      read(e, "price", ec.price);
      read(e, "recovery", ec.recovery);
      if (e.contains("waves")) {
        ec.waves.clear();
        for (const auto& w : e.at("waves")) {
          GradeWave gw;
          read(w, "amplitude", gw.amplitude);
          read(w, "fx", gw.fx);
          read(w, "fy", gw.fy);
          read(w, "fz", gw.fz);
          read(w, "phase", gw.phase);
          ec.waves.push_back(gw);
        }
      }
      c.elements.push_back(ec);
    }
  }
  read(doc, "processors", c.processors);
  read(doc, "stockpiles", c.stockpiles);
  read(doc, "scenarios", c.scenarios);
  read(doc, "periods", c.periods);
  read(doc, "block_tonnage", c.block_tonnage);
  read(doc, "mining_cost", c.mining_cost);
  read(doc, "processing_cost", c.processing_cost);
  read(doc, "processing_lower", c.processing_lower);
  read(doc, "processing_upper", c.processing_upper);
  read(doc, "stockpile_capacity", c.stockpile_capacity);
  read(doc, "processing_shortage_cost", c.processing_shortage_cost);
  read(doc, "processing_surplus_cost", c.processing_surplus_cost);
  read(doc, "mining_surplus_cost", c.mining_surplus_cost);
  read(doc, "stockpile_surplus_cost", c.stockpile_surplus_cost);
  read(doc, "discount_rates", c.discount_rates);
  read(doc, "groups_per_mine", c.groups_per_mine);
  read(doc, "kmeans_max_iter", c.kmeans_max_iter);
  read(doc, "capacity_fraction", c.capacity_fraction);
  return c;
}

json generator_config_to_json(const GeneratorConfig& c) {
  json mines = json::array();
  for (const auto& m : c.mines) {
    mines.push_back({{"nx", m.nx}, {"ny", m.ny}, {"nz", m.nz}, {"mining_capacity", m.mining_capacity}});
  }
  json elements = json::array();
  for (const auto& e : c.elements) {
    json waves = json::array();
    for (const auto& w : e.waves) {
      waves.push_back({{"amplitude", w.amplitude}, {"fx", w.fx}, {"fy", w.fy}, {"fz", w.fz}, {"phase", w.phase}});
    }
    elements.push_back({{"name", e.name},
                        {"mean_grade", e.mean_grade},
                        {"noise_sd", e.noise_sd},
                        {"price", e.price},
                        {"recovery", e.recovery},
                        {"waves", waves}});
  }
  return {{"mines", mines},
          {"elements", elements},
          {"processors", c.processors},
          {"stockpiles", c.stockpiles},
          {"scenarios", c.scenarios},
          {"periods", c.periods},
          {"block_tonnage", c.block_tonnage},
          {"mining_cost", c.mining_cost},
          {"processing_cost", c.processing_cost},
          {"processing_lower", c.processing_lower},
          {"processing_upper", c.processing_upper},
          {"stockpile_capacity", c.stockpile_capacity},
          {"processing_shortage_cost", c.processing_shortage_cost},
          {"processing_surplus_cost", c.processing_surplus_cost},
          {"mining_surplus_cost", c.mining_surplus_cost},
          {"stockpile_surplus_cost", c.stockpile_surplus_cost},
          {"discount_rates", c.discount_rates},
          {"groups_per_mine", c.groups_per_mine},
          {"kmeans_max_iter", c.kmeans_max_iter},
          {"capacity_fraction", c.capacity_fraction}};
}

ExperimentConfig experiment_config_from_json(const json& doc) {
  ExperimentConfig c;
  try {
    if (!doc.is_object()) throw InvalidConfig("experiment config must be a JSON object");
    if (doc.contains("instance")) {
      const auto& inst = doc.at("instance");
      if (inst.contains("generate")) c.instance.generate = generator_config_from_json(inst.at("generate"));
      if (inst.contains("path")) c.instance.path = inst.at("path").get<std::string>();
      read(inst, "seed", c.instance.seed);
    }
    read(doc, "variants", c.variants);
    read(doc, "seeds", c.seeds);
    if (doc.contains("search")) c.search = search_config_from_json(doc.at("search"));
    if (doc.contains("agent")) c.agent = agent_config_from_json(doc.at("agent"));
    if (doc.contains("registry")) c.registry = registry_config_from_json(doc.at("registry"));
    if (doc.contains("reference") && !doc.at("reference").is_null()) {
      const auto& ref = doc.at("reference");
      if (ref.is_number()) {
        c.reference = ref.get<double>();
      } else {
        if (ref.contains("value")) c.reference = ref.at("value").get<double>();
        if (ref.contains("file")) c.reference_file = ref.at("file").get<std::string>();
      }
    }
    read(doc, "gaps", c.gaps);
    if (doc.contains("output")) c.output = doc.at("output").get<std::string>();
    read(doc, "trace_stride", c.trace_stride);
    read(doc, "workers", c.workers);
  } catch (const json::exception& e) {
    throw InvalidConfig(std::string("experiment config: ") + e.what());
  }
  c.validate();
  return c;
}

ExperimentConfig load_experiment_config(const fs::path& path) {
  return experiment_config_from_json(read_json_file(path));
}

MiningComplexInstance materialize_instance(const InstanceSource& source) {
  if (source.generate) return generate_synthetic_instance(*source.generate, source.seed);
  return load_instance(source.path);
}

json summary_to_json(const RunSummary& s) {
  json timeline = json::array();
  for (const auto& p : s.timeline) timeline.push_back({p.iter, p.seconds, p.best_f});
  return {{"variant", s.variant},     {"seed", s.seed},
          {"initial_f", s.initial_f}, {"best_f", s.best_f},
          {"iterations", s.iterations}, {"seconds", s.seconds},
          {"trace", s.trace_path},    {"timeline", timeline}};
}

RunSummary summary_from_json(const json& doc) {
  RunSummary s;
  try {
    s.variant = doc.at("variant").get<std::string>();
    s.seed = doc.at("seed").get<std::uint64_t>();
    s.initial_f = doc.at("initial_f").get<double>();
    s.best_f = doc.at("best_f").get<double>();
    s.iterations = doc.at("iterations").get<long>();
    s.seconds = doc.at("seconds").get<double>();
    s.trace_path = doc.at("trace").get<std::string>();
    for (const auto& p : doc.at("timeline")) {
      s.timeline.push_back({p.at(0).get<long>(), p.at(1).get<double>(), p.at(2).get<double>()});
    }
  } catch (const json::exception& e) {
    throw InvalidConfig(std::string("run summary: ") + e.what());
  }
  return s;
}

GapHit time_to_gap(const RunSummary& summary, double z_star, double gap) {
  for (const auto& p : summary.timeline) {
    if (gap_of(z_star, p.best_f) <= gap) return {p.iter, p.seconds};
  }
  return {};
}

fs::path cell_directory(const ExperimentConfig& config, const std::string& variant, std::uint64_t seed) {
  return config.output / variant / ("seed-" + std::to_string(seed));
}

RunSummary run_cell(const ExperimentConfig& config, const MiningComplexInstance& instance, const std::string& variant,
                    std::uint64_t seed) {
  const AgentKind kind = parse_agent_kind(variant);
  const Solution initial = build_initial_solution(instance, seed);
  HeuristicSet heuristics(instance, build_registry(instance, config.registry), seed);
  auto agent = make_agent(kind, heuristics.size(), config.agent, seed);
  const SearchResult result = run_search(instance, initial, heuristics, config.search, agent.get(), seed);

  const fs::path dir = cell_directory(config, variant, seed);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create " + dir.string() + ": " + ec.message());

  RunSummary s;
  s.variant = variant;
  s.seed = seed;
  s.initial_f = result.initial_f;
  s.best_f = result.best_f;
  s.iterations = result.iterations;
  s.seconds = result.seconds;
  s.timeline = best_timeline(result);
  s.trace_path = (dir / "trace.csv").string();

  std::ostringstream trace, epochs;
  result.trace.write_csv(trace, config.trace_stride);
  result.trace.write_epochs(epochs);
  write_atomically(dir / "trace.csv", trace.str());
  write_atomically(dir / "epochs.jsonl", epochs.str());
  write_atomically(dir / "best.json", solution_to_json(result.best).dump());
  write_atomically(dir / "summary.json", summary_to_json(s).dump(2) + "\n");
  return s;
}

std::vector<RunSummary> run_experiment(const ExperimentConfig& config, std::ostream* log) {
  config.validate();
  struct Cell {
    std::string variant;
    std::uint64_t seed;
  };
  std::vector<Cell> cells;
  for (const auto& v : config.variants) {
    for (auto s : config.seeds) cells.push_back({v, s});
  }
  std::vector<std::optional<RunSummary>> done(cells.size());
  std::vector<std::size_t> pending;
  for (std::size_t k = 0; k < cells.size(); ++k) {
    const fs::path file = cell_directory(config, cells[k].variant, cells[k].seed) / "summary.json";
    if (fs::exists(file)) {
      done[k] = summary_from_json(read_json_file(file));
    } else {
      pending.push_back(k);
    }
  }
  std::error_code ec;
  fs::create_directories(config.output, ec);
  if (ec || !fs::is_directory(config.output)) throw std::runtime_error("cannot write to " + config.output.string());

  MiningComplexInstance instance;
  if (!pending.empty()) instance = materialize_instance(config.instance);
  std::atomic<std::size_t> next{0};
  std::mutex mutex;
  std::exception_ptr failure;
  auto worker = [&] {
    while (true) {
      const std::size_t i = next++;
      if (i >= pending.size()) return;
      const Cell& cell = cells[pending[i]];
      try {
        RunSummary s = run_cell(config, instance, cell.variant, cell.seed);
        std::lock_guard lock(mutex);
        if (log) {
          *log << cell.variant << " seed " << cell.seed << ": best " << s.best_f << " after " << s.iterations
               << " iterations\n";
        }
        done[pending[i]] = std::move(s);
      } catch (...) {
        std::lock_guard lock(mutex);
        if (!failure) failure = std::current_exception();
        next = pending.size();
      }
    }
  };
  const int threads = std::min<int>(config.workers, static_cast<int>(pending.size()));
  std::vector<std::thread> pool;
  for (int k = 1; k < threads; ++k) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);

  std::vector<RunSummary> out;
  for (auto& d : done) out.push_back(std::move(*d));
  return out;
}

std::vector<RunSummary> load_summaries(const ExperimentConfig& config) {
  std::vector<RunSummary> out;
  for (const auto& v : config.variants) {
    for (auto s : config.seeds) {
      const fs::path file = cell_directory(config, v, s) / "summary.json";
      if (fs::exists(file)) out.push_back(summary_from_json(read_json_file(file)));
    }
  }
  return out;
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

Distribution describe(const std::vector<double>& values, int censored) {
  Distribution d;
  d.count = static_cast<int>(values.size());
  d.censored = censored;
  if (values.empty()) return d;
  double sum = 0.0;
  for (double v : values) sum += v;
  d.mean = sum / d.count;
  double ss = 0.0;
  for (double v : values) ss += (v - d.mean) * (v - d.mean);
  d.sd = d.count > 1 ? std::sqrt(ss / (d.count - 1)) : 0.0;
  d.p10 = quantile(values, 0.1);
  d.p50 = quantile(values, 0.5);
  d.p90 = quantile(values, 0.9);
  return d;
}

double reference_objective(const ExperimentConfig& config, const std::vector<RunSummary>& summaries) {
  if (config.reference) return *config.reference;
  if (!config.reference_file.empty()) {
    const json doc = read_json_file(config.reference_file);
    try {
      if (doc.is_number()) return doc.get<double>();
      if (doc.contains("z_star")) return doc.at("z_star").get<double>();
      return doc.at("best_objective").get<double>();
    } catch (const json::exception& e) {
      throw InvalidConfig(config.reference_file.string() + ": " + e.what());
    }
  }
  if (summaries.empty()) throw InvalidConfig("no runs to derive the reference objective from");
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& s : summaries) best = std::max(best, s.best_f);
  return best;
}

ExperimentReport summarize(const std::vector<RunSummary>& summaries, double z_star, const std::vector<double>& gaps) {
  if (!(z_star > 0.0)) throw InvalidConfig("reference objective must be positive");
  std::vector<std::string> order;
  std::map<std::string, std::vector<const RunSummary*>> by_variant;
  for (const auto& s : summaries) {
    if (!by_variant.count(s.variant)) order.push_back(s.variant);
    by_variant[s.variant].push_back(&s);
  }

  ExperimentReport report;
  report.z_star = z_star;
  for (const auto& name : order) {
    VariantReport vr;
    vr.variant = name;
    std::vector<double> final_gaps;
    for (const auto* s : by_variant[name]) final_gaps.push_back(gap_of(z_star, s->best_f));
    vr.final_gap = describe(final_gaps);
    for (double g : gaps) {
      std::vector<double> iters, secs;
      int censored = 0;
      for (const auto* s : by_variant[name]) {
        const GapHit hit = time_to_gap(*s, z_star, g);
        if (hit.iterations) {
          iters.push_back(static_cast<double>(*hit.iterations));
          secs.push_back(*hit.seconds);
        } else {
          ++censored;
          iters.push_back(static_cast<double>(s->iterations));
          secs.push_back(s->seconds);
        }
      }
      vr.gaps.push_back({g, describe(iters, censored), describe(secs, censored), {}, {}});
    }
    report.variants.push_back(std::move(vr));
  }

  if (const VariantReport* base = report.find("baseline")) {
    for (auto& vr : report.variants) {
      if (vr.variant == "baseline") continue;
      for (std::size_t k = 0; k < vr.gaps.size(); ++k) {
        const double bi = base->gaps[k].iterations.p50;
        const double bt = base->gaps[k].seconds.p50;
        if (bi > 0.0) vr.gaps[k].iteration_reduction = (bi - vr.gaps[k].iterations.p50) / bi;
        if (bt > 0.0) vr.gaps[k].time_reduction = (bt - vr.gaps[k].seconds.p50) / bt;
      }
    }
  }
  return report;
}

const VariantReport* ExperimentReport::find(const std::string& variant) const {
  for (const auto& v : variants) {
    if (v.variant == variant) return &v;
  }
  return nullptr;
}

json ExperimentReport::to_json() const {
  auto dist = [](const Distribution& d) {
    return json{{"count", d.count}, {"censored", d.censored}, {"mean", d.mean}, {"sd", d.sd},
                {"p10", d.p10},     {"p50", d.p50},           {"p90", d.p90}};
  };
  json out = {{"z_star", z_star}, {"variants", json::array()}};
  for (const auto& v : variants) {
    json gaps = json::array();
    for (const auto& g : v.gaps) {
      json row = {{"gap", g.gap}, {"iterations", dist(g.iterations)}, {"seconds", dist(g.seconds)}};
      if (g.iteration_reduction) row["iteration_reduction"] = *g.iteration_reduction;
      if (g.time_reduction) row["time_reduction"] = *g.time_reduction;
      gaps.push_back(row);
    }
    out["variants"].push_back({{"variant", v.variant}, {"final_gap", dist(v.final_gap)}, {"gaps", gaps}});
  }
  return out;
}

std::vector<fs::path> emit_plot_data(const std::vector<RunSummary>& summaries, double z_star, const fs::path& directory,
                                     long stride) {
  stride = std::max(stride, 1L);
  std::vector<std::string> order;
  std::map<std::string, std::vector<const RunSummary*>> by_variant;
  for (const auto& s : summaries) {
    if (!by_variant.count(s.variant)) order.push_back(s.variant);
    by_variant[s.variant].push_back(&s);
  }
  fs::create_directories(directory);
  std::vector<fs::path> written;
  for (const auto& name : order) {
    const auto& runs = by_variant[name];
    long horizon = 0;
    for (const auto* s : runs) horizon = std::max(horizon, s->iterations);
    std::ostringstream out;
    out << "iter,p10,p50,p90\n";
    std::vector<std::size_t> cursor(runs.size(), 0);
    for (long it = 0; it < horizon; it += stride) {
      std::vector<double> gaps;
      for (std::size_t r = 0; r < runs.size(); ++r) {
        const auto& tl = runs[r]->timeline;
        if (tl.empty() || tl.front().iter > it) continue;
        while (cursor[r] + 1 < tl.size() && tl[cursor[r] + 1].iter <= it) ++cursor[r];
        gaps.push_back(gap_of(z_star, tl[cursor[r]].best_f));
      }
      if (gaps.empty()) continue;
      out << it << ',' << json(quantile(gaps, 0.1)).dump() << ',' << json(quantile(gaps, 0.5)).dump() << ','
          << json(quantile(gaps, 0.9)).dump() << '\n';
    }
    const fs::path file = directory / ("plot_" + name + ".csv");
    write_atomically(file, out.str());
    written.push_back(file);
  }
  return written;
}

}  // namespace ssomc
