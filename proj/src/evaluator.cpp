#include "ssomc/evaluator.hpp"

#include <algorithm>
#include <string>

namespace ssomc {

void apply(const Footprint& fp, Solution& sol) {
  for (const auto& m : fp.blocks) sol.extraction[m.block] = m.to;
  for (const auto& m : fp.destinations) sol.dest(m.group, m.period) = m.to;
  for (const auto& m : fp.streams) sol.y(m.arc, m.period, m.scenario) = m.to;
}

void undo(const Footprint& fp, Solution& sol) {
  for (auto it = fp.streams.rbegin(); it != fp.streams.rend(); ++it) sol.y(it->arc, it->period, it->scenario) = it->from;
  for (auto it = fp.destinations.rbegin(); it != fp.destinations.rend(); ++it) sol.dest(it->group, it->period) = it->from;
  for (auto it = fp.blocks.rbegin(); it != fp.blocks.rend(); ++it) sol.extraction[it->block] = it->from;
}

namespace {

/// One period of one scenario. `prev` holds v_p of period t-1 as (i, p) or is
/// null at t = 0; `cur` receives v_p of period t. Optionally records the full
/// attribute state.
template <typename GroupQuantity>
void step_period(const MiningComplexInstance& inst, const Solution& sol, int s, int t, const double* prev,
                 GroupQuantity&& q, double* cur, double& rev, double& pen, AttributeState* out) {
  const int N = inst.location_count();
  const int P = inst.primary_count();
  const int H = inst.hereditary_count();
  std::fill(cur, cur + static_cast<std::size_t>(N) * P, 0.0);

  if (prev != nullptr) {
    for (int i = 0; i < N; ++i) {
      const auto& node = inst.locations[i];
      if (node.kind == LocationKind::Mine) continue;
      double* vi = cur + static_cast<std::size_t>(i) * P;
      if (node.kind == LocationKind::Stockpile) {
        double sent = 0.0;
        for (int a : node.outgoing) sent += sol.y(a, t - 1, s);
        const double keep = 1.0 - sent;
        for (int p = 0; p < P; ++p) vi[p] += prev[static_cast<std::size_t>(i) * P + p] * keep;
      }
      for (int a : node.incoming) {
        const int from = inst.arcs[a].from;
        const double y = sol.y(a, t - 1, s);
        const auto& rec = inst.locations[from].recovery;
        for (int p = 0; p < P; ++p) vi[p] += rec[p] * prev[static_cast<std::size_t>(from) * P + p] * y;
      }
    }
  }
  for (int g = 0; g < inst.group_count(); ++g) {
    double* vj = cur + static_cast<std::size_t>(sol.dest(g, t)) * P;
    double* vm = cur + static_cast<std::size_t>(inst.groups[g].mine) * P;
    for (int p = 0; p < P; ++p) {
      const double qp = q(g, p);
      vj[p] += qp;
      vm[p] += qp;
    }
  }

  double r = 0.0, c = 0.0;
  for (int i = 0; i < N; ++i) {
    const auto& node = inst.locations[i];
    const double* vi = cur + static_cast<std::size_t>(i) * P;
    double keep = 0.0;
    if (node.kind == LocationKind::Stockpile) {
      double sent = 0.0;
      for (int a : node.outgoing) sent += sol.y(a, t, s);
      keep = 1.0 - sent;
    }
    for (int h = 0; h < H; ++h) {
      double vh = 0.0;
      for (int p = 0; p < P; ++p) vh += node.transfer(h, p) * vi[p];
      if (keep != 0.0) {
        for (int p = 0; p < P; ++p) vh += node.retained(h, p) * (vi[p] * keep);
      }
      const std::size_t k = inst.hit(h, i, t);
      const double dp = std::max(0.0, vh - inst.upper[k]);
      const double dm = std::max(0.0, inst.lower[k] - vh);
      r += inst.discounted_price[k] * vh;
      c += inst.discounted_surplus[k] * dp + inst.discounted_shortage[k] * dm;
      if (out != nullptr) {
        out->v_h[out->hit(h, i, t)] = vh;
      }
    }
    if (out != nullptr) {
      for (int p = 0; p < P; ++p) {
        out->v_p[out->pit(p, i, t)] = vi[p];
        out->recovery[out->pit(p, i, t)] = node.recovery[p];
      }
    }
  }
  rev = r;
  pen = c;
}

void check_or_throw(const MiningComplexInstance& inst, const Solution& sol) {
  const auto report = check_feasibility(inst, sol);
  if (!report.empty()) {
    throw InfeasibleSolution("solution violates " + std::to_string(report.size()) +
                             " constraints; first: " + report.violations.front().message);
  }
}

}  // namespace

AttributeState propagate_flows(const MiningComplexInstance& inst, const Solution& sol, int s) {
  if (s < 0 || s >= inst.scenario_count) throw MalformedSolution("scenario index out of range");
  const int N = inst.location_count();
  const int P = inst.primary_count();
  const int H = inst.hereditary_count();
  const int T = inst.periods;
  const int G = inst.group_count();

  std::vector<double> q(static_cast<std::size_t>(G) * T * P, 0.0);
  for (int b = 0; b < inst.block_count(); ++b) {
    const Period t = sol.extraction[b];
    if (t == kNotMined) continue;
    const int g = inst.group_of(b, s);
    for (int p = 0; p < P; ++p) q[(static_cast<std::size_t>(g) * T + t) * P + p] += inst.scenarios(p, b, s);
  }

  AttributeState st;
  st.primary = P;
  st.hereditary = H;
  st.locations = N;
  st.periods = T;
  st.v_p.assign(static_cast<std::size_t>(P) * N * T, 0.0);
  st.recovery.assign(st.v_p.size(), 0.0);
  st.v_h.assign(static_cast<std::size_t>(H) * N * T, 0.0);
  st.d_plus.assign(st.v_h.size(), 0.0);
  st.d_minus.assign(st.v_h.size(), 0.0);

  std::vector<double> prev(static_cast<std::size_t>(N) * P), cur(prev.size());
  for (int t = 0; t < T; ++t) {
    double rev = 0.0, pen = 0.0;
    auto qt = [&](int g, int p) { return q[(static_cast<std::size_t>(g) * T + t) * P + p]; };
    step_period(inst, sol, s, t, t == 0 ? nullptr : prev.data(), qt, cur.data(), rev, pen, &st);
    std::swap(prev, cur);
  }
  return st;
}

void compute_deviations(AttributeState& st, const MiningComplexInstance& inst) {
  for (int h = 0; h < st.hereditary; ++h) {
    for (int i = 0; i < st.locations; ++i) {
      for (int t = 0; t < st.periods; ++t) {
        const double vh = st.v_h[st.hit(h, i, t)];
        const std::size_t k = inst.hit(h, i, t);
        st.d_plus[st.hit(h, i, t)] = std::max(0.0, vh - inst.upper[k]);
        st.d_minus[st.hit(h, i, t)] = std::max(0.0, inst.lower[k] - vh);
      }
    }
  }
}

EvaluationReport objective(const MiningComplexInstance& inst, const Solution& sol, bool keep_states) {
  IncrementalEvaluator ev(inst, sol);
  EvaluationReport report = ev.report();
  if (keep_states) {
    for (int s = 0; s < inst.scenario_count; ++s) {
      report.states.push_back(propagate_flows(inst, sol, s));
      compute_deviations(report.states.back(), inst);
    }
  }
  return report;
}

double objective_delta(const MiningComplexInstance& inst, const Solution& sol, const Footprint& fp) {
  if (fp.empty()) return 0.0;
  Solution old = sol;
  undo(fp, old);
  IncrementalEvaluator ev(inst, old);
  return ev.update(sol, fp);
}

IncrementalEvaluator::IncrementalEvaluator(const MiningComplexInstance& inst, const Solution& sol)
    : inst_(&inst),
      periods_(inst.periods),
      scenarios_(inst.scenario_count),
      primary_(inst.primary_count()),
      hereditary_(inst.hereditary_count()),
      locations_(inst.location_count()) {
  check_or_throw(inst, sol);
  q_.assign(static_cast<std::size_t>(inst.group_count()) * periods_ * scenarios_ * primary_, 0.0);
  for (int b = 0; b < inst.block_count(); ++b) {
    if (sol.extraction[b] != kNotMined) add_block(b, sol.extraction[b], 1.0);
  }
  v_.assign(static_cast<std::size_t>(scenarios_) * periods_ * locations_ * primary_, 0.0);
  rev_.assign(static_cast<std::size_t>(scenarios_) * periods_, 0.0);
  pen_.assign(rev_.size(), 0.0);
  for (int s = 0; s < scenarios_; ++s) propagate(sol, s, 0);
  objective_ = aggregate();
}

void IncrementalEvaluator::add_block(int b, Period t, double sign) {
  for (int s = 0; s < scenarios_; ++s) {
    const int g = inst_->group_of(b, s);
    for (int p = 0; p < primary_; ++p) {
      const std::size_t k = q_index(g, t, s, p);
      if (journal_.active) journal_.q_cells.emplace_back(k, q_[k]);
      q_[k] += sign * inst_->scenarios(p, b, s);
    }
  }
}

void IncrementalEvaluator::propagate(const Solution& sol, int s, int t0) {
  for (int t = t0; t < periods_; ++t) {
    const double* prev = t == 0 ? nullptr : v_.data() + v_index(s, t - 1, 0, 0);
    auto qt = [&](int g, int p) { return q_[q_index(g, t, s, p)]; };
    const std::size_t st = static_cast<std::size_t>(s) * periods_ + t;
    step_period(*inst_, sol, s, t, prev, qt, v_.data() + v_index(s, t, 0, 0), rev_[st], pen_[st], nullptr);
  }
}

EvaluationReport IncrementalEvaluator::report() const {
  EvaluationReport r;
  r.scenario_objective.resize(scenarios_);
  r.scenario_revenue.resize(scenarios_);
  r.scenario_penalty.resize(scenarios_);
  double total = 0.0, total_rev = 0.0, total_pen = 0.0;
  for (int s = 0; s < scenarios_; ++s) {
    double rs = 0.0, ps = 0.0;
    for (int t = 0; t < periods_; ++t) {
      rs += rev_[static_cast<std::size_t>(s) * periods_ + t];
      ps += pen_[static_cast<std::size_t>(s) * periods_ + t];
    }
    r.scenario_revenue[s] = rs;
    r.scenario_penalty[s] = ps;
    r.scenario_objective[s] = rs - ps;
    total += rs - ps;
    total_rev += rs;
    total_pen += ps;
  }
  r.objective = total / scenarios_;
  r.revenue = total_rev / scenarios_;
  r.penalty = total_pen / scenarios_;
  return r;
}

double IncrementalEvaluator::aggregate() const {
  double total = 0.0;
  for (int s = 0; s < scenarios_; ++s) {
    double rs = 0.0, ps = 0.0;
    for (int t = 0; t < periods_; ++t) {
      rs += rev_[static_cast<std::size_t>(s) * periods_ + t];
      ps += pen_[static_cast<std::size_t>(s) * periods_ + t];
    }
    total += rs - ps;
  }
  return total / scenarios_;
}

double IncrementalEvaluator::update(const Solution& sol, const Footprint& fp) {
  commit();
  last_work_ = 0;
  if (fp.empty()) return 0.0;
  journal_.active = true;
  journal_.objective = objective_;

  int t_all = periods_;
  for (const auto& m : fp.blocks) {
    if (m.from == m.to) continue;
    if (m.from != kNotMined) {
      add_block(m.block, m.from, -1.0);
      t_all = std::min(t_all, m.from);
    }
    if (m.to != kNotMined) {
      add_block(m.block, m.to, 1.0);
      t_all = std::min(t_all, m.to);
    }
  }
  for (const auto& m : fp.destinations) {
    if (m.from != m.to) t_all = std::min(t_all, m.period);
  }
  std::vector<int> t0(scenarios_, t_all);
  for (const auto& m : fp.streams) {
    if (m.from != m.to) t0[m.scenario] = std::min(t0[m.scenario], m.period);
  }

  journal_.scenarios.clear();
  journal_.v.clear();
  journal_.rev.clear();
  journal_.pen.clear();
  for (int s = 0; s < scenarios_; ++s) {
    if (t0[s] >= periods_) continue;
    journal_.scenarios.push_back(s);
    journal_.scenarios.push_back(t0[s]);
    journal_.v.insert(journal_.v.end(), v_.begin() + v_index(s, t0[s], 0, 0), v_.begin() + v_index(s + 1, 0, 0, 0));
    const auto b = static_cast<std::ptrdiff_t>(s) * periods_;
    journal_.rev.insert(journal_.rev.end(), rev_.begin() + b + t0[s], rev_.begin() + b + periods_);
    journal_.pen.insert(journal_.pen.end(), pen_.begin() + b + t0[s], pen_.begin() + b + periods_);
    propagate(sol, s, t0[s]);
    last_work_ += static_cast<std::size_t>(periods_ - t0[s]) * locations_;
  }
  objective_ = aggregate();
  return objective_ - journal_.objective;
}

void IncrementalEvaluator::revert() {
  if (!journal_.active) return;
  for (auto it = journal_.q_cells.rbegin(); it != journal_.q_cells.rend(); ++it) q_[it->first] = it->second;
  std::size_t vo = 0, ro = 0;
  for (std::size_t k = 0; k < journal_.scenarios.size(); k += 2) {
    const int s = journal_.scenarios[k];
    const int t0 = journal_.scenarios[k + 1];
    const std::size_t vn = v_index(s + 1, 0, 0, 0) - v_index(s, t0, 0, 0);
    std::copy_n(journal_.v.begin() + vo, vn, v_.begin() + v_index(s, t0, 0, 0));
    vo += vn;
    const std::size_t rn = periods_ - t0;
    const std::size_t b = static_cast<std::size_t>(s) * periods_ + t0;
    std::copy_n(journal_.rev.begin() + ro, rn, rev_.begin() + b);
    std::copy_n(journal_.pen.begin() + ro, rn, pen_.begin() + b);
    ro += rn;
  }
  objective_ = journal_.objective;
  journal_.active = false;
  journal_.q_cells.clear();
}

void IncrementalEvaluator::commit() {
  journal_.active = false;
  journal_.q_cells.clear();
}

}  // namespace ssomc
