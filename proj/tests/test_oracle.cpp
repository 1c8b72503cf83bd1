#include <doctest.h>

#include "fixtures.hpp"
#include "ssomc/evaluator.hpp"
#include "ssomc/heuristics.hpp"
#include "ssomc/hyperheuristic.hpp"
#include "ssomc/oracle.hpp"

using namespace ssomc;
using fixtures::rel_diff;

TEST_SUITE("oracle") {
  TEST_CASE("single block") {
    auto inst = fixtures::one_block();
    const auto r = enumerate_optimum(inst, fixtures::empty_plan(inst));
    CHECK(rel_diff(r.best_objective, 90.0 / 1.1) <= 1e-12);
    CHECK(r.best.extraction[0] == 0);
    CHECK(r.schedules == 2);

    inst.price[inst.hi(1, 1)] = 5.0;
    inst.finalize();
    const auto loss = enumerate_optimum(inst, fixtures::empty_plan(inst));
    CHECK(loss.best_objective == 0.0);
    CHECK(loss.best.extraction[0] == kNotMined);
  }

  TEST_CASE("precedence limits the schedules") {
    auto inst = fixtures::blank(2, 1, {"tonnage"}, {"tonnes"}, {LocationKind::Mine, LocationKind::Processor});
    fixtures::add_block(inst, 0, {0, 0, 0}, 1.0);
    fixtures::add_block(inst, 0, {0, 0, 1}, 1.0, {0});
    inst.scenarios = {1, 2, 1, {1.0, 1.0}};
    inst.groups = {{0, 0, {1}, 0.0}};
    inst.membership = {0, 0};
    inst.locations[1].transfer(0, 0) = 1.0;
    inst.price[inst.hi(0, 1)] = 1.0;
    inst.finalize();
    const auto r = enumerate_optimum(inst, fixtures::empty_plan(inst));
    // (x0, x1) in {(-,-), (0,-), (1,-), (0,0), (0,1), (1,1)}
    CHECK(r.schedules == 6);
    CHECK(rel_diff(r.best_objective, 2.0) <= 1e-12);
  }

  TEST_CASE("no sampled solution beats the optimum") {
    const auto inst = generate_synthetic_instance(fixtures::tiny_config(), 3);
    const auto start = build_initial_solution(inst, 3);
    const auto r = enumerate_optimum(inst, start);
    CHECK(check_feasibility(inst, r.best).empty());
    CHECK(rel_diff(objective(inst, r.best).objective, r.best_objective) <= 1e-12);
    HeuristicSet hs(inst, build_registry(inst, {}), 3);
    auto sol = start;
    Rng rng = make_stream(3, "test-pick");
    for (int k = 0; k < 3000; ++k) {
      hs.apply(uniform_int(rng, 0, hs.size() - 1), sol);
      CHECK(objective(inst, sol).objective <= r.best_objective + 1e-9 * std::max(1.0, std::abs(r.best_objective)));
    }
  }

  TEST_CASE("oversized enumerations are refused") {
    const auto inst = generate_synthetic_instance(fixtures::mid_config(), 1);
    CHECK_THROWS_AS(enumerate_optimum(inst, build_initial_solution(inst, 1), 1000), InvalidConfig);
  }

  TEST_CASE("search reaches the optimum on a tiny instance") {
    const auto inst = generate_synthetic_instance(fixtures::tiny_config(), 4);
    const auto start = build_initial_solution(inst, 4);
    const double opt = enumerate_optimum(inst, start).best_objective;
    HeuristicSet hs(inst, build_registry(inst, {}), 4);
    SearchConfig cfg;
    cfg.max_iterations = 5000;
    const auto res = run_search(inst, start, hs, cfg, nullptr, 4);
    CHECK(res.best_f >= opt - 1e-3 * std::abs(opt));
    CHECK(res.best_f <= opt + 1e-9 * std::max(1.0, std::abs(opt)));
  }
}
