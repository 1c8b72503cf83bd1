#include <doctest.h>

#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <sstream>

#include "fixtures.hpp"
#include "ssomc/hyperheuristic.hpp"

using namespace ssomc;

namespace {

double chi_square_p(const std::vector<int>& counts, const std::vector<double>& probs, int draws) {
  double stat = 0.0;
  int dof = -1;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (probs[i] <= 0.0) continue;
    const double expected = probs[i] * draws;
    stat += (counts[i] - expected) * (counts[i] - expected) / expected;
    ++dof;
  }
  if (dof < 1) return 1.0;
  return boost::math::cdf(boost::math::complement(boost::math::chi_squared(dof), stat));
}

SearchConfig quick(long iterations) {
  SearchConfig c;
  c.max_iterations = iterations;
  return c;
}

}  // namespace

TEST_SUITE("selection") {
  TEST_CASE("lone open heuristic is always chosen") {
    Scoreboard b(3);
    b.tabu = {4, 0, 2};
    Rng rng = make_stream(1, "t");
    for (int k = 0; k < 1000; ++k) CHECK(select_heuristic(b, rng) == 1);
  }

  TEST_CASE("equal scores split evenly") {
    Scoreboard b(2);
    b.sf = {2.0, 2.0};
    Rng rng = make_stream(2, "t");
    std::vector<int> counts(2, 0);
    const int draws = 100000;
    for (int k = 0; k < draws; ++k) ++counts[select_heuristic(b, rng)];
    CHECK(std::abs(counts[0] / double(draws) - 0.5) <= 0.005);
    CHECK(chi_square_p(counts, {0.5, 0.5}, draws) > 0.001);
  }

  TEST_CASE("tabu heuristics are never drawn") {
    Scoreboard b(2);
    b.sf = {1.0, 3.0};
    b.tabu = {0, 5};
    Rng rng = make_stream(3, "t");
    for (int k = 0; k < 1000; ++k) CHECK(select_heuristic(b, rng) == 0);
  }

  TEST_CASE("zero mass falls back to uniform over open heuristics") {
    Scoreboard b(4);
    b.sf = {0.0, 0.0, 0.0, 0.0};
    b.tabu = {0, 3, 0, 0};
    Rng rng = make_stream(4, "t");
    std::vector<int> counts(4, 0);
    const int draws = 30000;
    for (int k = 0; k < draws; ++k) ++counts[select_heuristic(b, rng)];
    CHECK(counts[1] == 0);
    CHECK(chi_square_p(counts, {1.0 / 3, 0.0, 1.0 / 3, 1.0 / 3}, draws) > 0.001);
  }

  TEST_CASE("frequencies follow normalized scores under tabu masks") {
    Rng gen = make_stream(5, "boards");
    for (int trial = 0; trial < 5; ++trial) {
      Scoreboard b(8);
      for (int h = 0; h < 8; ++h) {
        b.sf[h] = uniform01(gen);
        b.tabu[h] = uniform01(gen) < 0.3 ? 3 : 0;
      }
      b.tabu[trial] = 0;
      std::vector<double> probs(8, 0.0);
      double total = 0.0;
      for (int h = 0; h < 8; ++h) total += b.tabu[h] == 0 ? b.sf[h] : 0.0;
      for (int h = 0; h < 8; ++h) probs[h] = b.tabu[h] == 0 ? b.sf[h] / total : 0.0;
      Rng rng = make_stream(trial, "draws");
      std::vector<int> counts(8, 0);
      const int draws = 100000;
      for (int k = 0; k < draws; ++k) ++counts[select_heuristic(b, rng)];
      for (int h = 0; h < 8; ++h) {
        if (b.tabu[h] > 0) CHECK(counts[h] == 0);
      }
      CHECK(chi_square_p(counts, probs, draws) > 0.001);
    }
  }
}

TEST_SUITE("measures") {
  TEST_CASE("improvement and damage rates") {
    Scoreboard b(1);
    update_measures(b, 0, 10.0, 2.0);
    CHECK(b.pi1[0] == 5.0);
    update_measures(b, 0, -4.0, 0.5);
    CHECK(b.pi2[0] == 0.5);
    update_measures(b, 0, 0.0, 1.0);
    CHECK(b.pi1[0] == 5.0);
    CHECK(b.pi2[0] == 0.5);
    CHECK(b.uses[0] == 3);
  }

  TEST_CASE("time is floored") {
    Scoreboard b(1);
    update_measures(b, 0, 1.0, 0.0);
    CHECK(b.pi1[0] == 1.0 / kMinHeuristicSeconds);
  }

  TEST_CASE("adaptive score identities") {
    CHECK(adaptive_score(0.25, 9.0, 4.0, 0, 0.3, 0.5) == 0.25);
    CHECK(adaptive_score(0.7, 6.0, 123.0, 2, 1.0, 1.0) == 3.0);
    CHECK(adaptive_score(0.5, 2.0, 4.0, 1, 0.5, 0.0) == 0.5 * 0.5 + 0.5 * 4.0);
  }

  TEST_CASE("zero vectors stay zero under normalization") {
    std::vector<double> z{0.0, 0.0};
    normalize(z);
    CHECK(z == std::vector<double>{0.0, 0.0});
    std::vector<double> v{1.0, 3.0};
    normalize(v);
    CHECK(v == std::vector<double>{0.25, 0.75});
  }
}

TEST_SUITE("acceptance rule") {
  TEST_CASE("improvements are always accepted") {
    Rng rng = make_stream(1, "t");
    for (int k = 0; k < 100; ++k) CHECK(sa_accept(5.0, 1e-9, rng));
  }

  TEST_CASE("deterioration of one temperature is accepted with probability 1/e") {
    Rng rng = make_stream(2, "t");
    int hits = 0;
    const int n = 100000;
    for (int k = 0; k < n; ++k) hits += sa_accept(-3.0, 3.0, rng);
    CHECK(std::abs(hits / double(n) - std::exp(-1.0)) <= 0.01);
  }

  TEST_CASE("cold limit rejects deteriorations") {
    Rng rng = make_stream(3, "t");
    int hits = 0;
    for (int k = 0; k < 10000; ++k) hits += sa_accept(-1.0, 1e-6, rng);
    CHECK(hits == 0);
  }
}

TEST_SUITE("tabu") {
  TEST_CASE("fixed duration excludes exactly that many selections") {
    Scoreboard b(3);
    Rng rng = make_stream(1, "t");
    Rng sel = make_stream(2, "t");
    apply_tabu(b, 0, rng, 3, 3);
    for (int k = 0; k < 3; ++k) {
      CHECK(b.tabu[0] > 0);
      CHECK(select_heuristic(b, sel) != 0);
      tick_tabu(b);
    }
    CHECK(b.tabu[0] == 0);
  }

  TEST_CASE("list empties when everything is tabu") {
    Scoreboard b(2);
    Rng rng = make_stream(1, "t");
    apply_tabu(b, 0, rng, 5, 5);
    CHECK(b.tabu[0] == 5);
    apply_tabu(b, 1, rng, 5, 5);
    CHECK(b.tabu == std::vector<int>{0, 0});
  }
}

TEST_SUITE("epochs") {
  TEST_CASE("beta moves on the tenth lattice") {
    Scoreboard b(2);
    SearchConfig c = quick(10);
    std::deque<ScoreSnapshot> hist;
    CHECK(b.beta() == 0.5);
    epoch_update(b, c, false, nullptr, 0.0, hist);
    CHECK(b.beta_tenths == 4);
    epoch_update(b, c, true, nullptr, 0.0, hist);
    CHECK(b.beta_tenths == 10);
    for (int k = 0; k < 15; ++k) epoch_update(b, c, false, nullptr, 0.0, hist);
    CHECK(b.beta_tenths == 0);
  }

  TEST_CASE("unused heuristics keep their final score") {
    Scoreboard b(3);
    b.sf = {0.2, 0.3, 0.5};
    b.uses = {0, 2, 0};
    b.pi1 = {0.0, 4.0, 0.0};
    SearchConfig c = quick(10);
    c.alpha = 0.5;
    std::deque<ScoreSnapshot> hist;
    const auto rec = epoch_update(b, c, true, nullptr, 0.0, hist);
    // beta = 1: S1(1) = 0.5*0.3 + 0.5*1/2 before the final normalization.
    const double raw[] = {0.2, 0.5 * 0.3 + 0.5 * 0.5, 0.5};
    const double total = raw[0] + raw[1] + raw[2];
    for (int h = 0; h < 3; ++h) CHECK(rec.s1[h] == doctest::Approx(raw[h] / total).epsilon(1e-15));
    for (int h = 0; h < 3; ++h) CHECK(b.sf[h] == doctest::Approx(rec.s1[h]).epsilon(1e-15));
    CHECK(b.pi1 == std::vector<double>{0, 0, 0});
    CHECK(b.uses == std::vector<int>{0, 0, 0});
  }

  TEST_CASE("agent output is ignored when its weight is zero") {
    AgentConfig ac;
    ac.hidden = 8;
    auto agent = make_agent(AgentKind::A2C, 3, ac, 1);
    Scoreboard with(3), without(3);
    with.uses = without.uses = {1, 2, 0};
    with.pi1 = without.pi1 = {1.0, 0.0, 0.0};
    with.pi2 = without.pi2 = {0.0, 3.0, 0.0};
    SearchConfig c = quick(10);
    c.lambda_rl = 0.0;
    std::deque<ScoreSnapshot> h1, h2;
    epoch_update(with, c, false, agent.get(), 1.0, h1);
    epoch_update(without, c, false, nullptr, 1.0, h2);
    CHECK(with.sf == without.sf);
    for (int h = 0; h < 3; ++h) CHECK(with.sf[h] == doctest::Approx(with.s1[h]).epsilon(1e-15));
  }
}

TEST_SUITE("search") {
  TEST_CASE("unbounded search is a configuration error") {
    SearchConfig c;
    CHECK_THROWS_AS(c.validate(), InvalidConfig);
  }

  TEST_CASE("runs are reproducible and monotone") {
    const auto inst = generate_synthetic_instance(fixtures::mid_config(), 7);
    const auto init = build_initial_solution(inst, 7);
    auto run = [&](Agent* agent, double lambda) {
      HeuristicSet hs(inst, build_registry(inst, {}), 7);
      auto c = quick(3000);
      c.lambda_rl = lambda;
      return run_search(inst, init, hs, c, agent, 7);
    };
    const auto a = run(nullptr, 0.5);
    const auto b = run(nullptr, 0.5);
    REQUIRE(a.trace.iterations.size() == b.trace.iterations.size());
    std::ostringstream ca, cb;
    a.trace.write_csv(ca);
    b.trace.write_csv(cb);
    CHECK(ca.str() == cb.str());
    CHECK(bit_identical(a.best, b.best));
    for (std::size_t k = 1; k < a.trace.iterations.size(); ++k) {
      CHECK(a.trace.iterations[k].best_f >= a.trace.iterations[k - 1].best_f);
    }
    CHECK(objective(inst, a.best).objective == a.best_f);

    AgentConfig ac;
    ac.hidden = 16;
    auto agent = make_agent(AgentKind::PPO, 38, ac, 7);
    const auto c = run(agent.get(), 0.0);
    std::ostringstream cc;
    c.trace.write_csv(cc);
    const auto d = run(nullptr, 0.0);
    std::ostringstream cd;
    d.trace.write_csv(cd);
    CHECK(cc.str() == cd.str());
  }

  TEST_CASE("epoch invariants over a long run") {
    const auto inst = generate_synthetic_instance(fixtures::mid_config(), 8);
    HeuristicSet hs(inst, build_registry(inst, {}), 8);
    const auto r = run_search(inst, build_initial_solution(inst, 8), hs, quick(10000), nullptr, 8);
    CHECK(r.trace.epochs.size() == static_cast<std::size_t>((10000 - 38) / 100));
    for (const auto& e : r.trace.epochs) {
      double sum = 0.0;
      for (double v : e.sf) {
        CHECK(v >= 0.0);
        sum += v;
      }
      CHECK(std::abs(sum - 1.0) <= 1e-12);
      const double tenths = e.beta * 10.0;
      CHECK(std::abs(tenths - std::round(tenths)) <= 1e-12);
      CHECK(e.beta >= 0.0);
      CHECK(e.beta <= 1.0);
    }
  }

  TEST_CASE("trace csv header") {
    SearchTrace t;
    std::ostringstream out;
    t.write_csv(out);
    CHECK(out.str() == "iter,heuristic,delta_f,time_s,accepted,current_f,best_f,temp\n");
  }
}
