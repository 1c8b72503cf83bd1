#include <doctest.h>

#include <set>

#include "fixtures.hpp"
#include "ssomc/heuristics.hpp"

using namespace ssomc;

namespace {

/// Vertical column of three blocks, surface first.
MiningComplexInstance column(int periods) {
  auto inst = fixtures::blank(periods, 1, {"tonnage"}, {"tonnes"}, {LocationKind::Mine, LocationKind::WasteDump});
  fixtures::add_block(inst, 0, {0, 0, 0}, 1.0);
  fixtures::add_block(inst, 0, {0, 0, 1}, 1.0, {0});
  fixtures::add_block(inst, 0, {0, 0, 2}, 1.0, {1});
  inst.scenarios = {1, 3, 1, {1.0, 1.0, 1.0}};
  inst.groups = {{0, 0, {1}, 0.0}};
  inst.membership = {0, 0, 0};
  inst.finalize();
  return inst;
}

HeuristicDescriptor extraction(ShiftMode mode, RepairShape shape = RepairShape::Cone) {
  HeuristicDescriptor d;
  d.family = HeuristicFamily::ExtractionSequence;
  d.shift = mode;
  d.shape = shape;
  return d;
}

/// Two groups (low, high) of one mine routing to processor 1 or waste 2.
MiningComplexInstance two_groups(std::vector<int> low_dest, std::vector<int> high_dest) {
  auto inst = fixtures::blank(2, 1, {"tonnage"}, {"tonnes"},
                              {LocationKind::Mine, LocationKind::Processor, LocationKind::WasteDump});
  fixtures::add_block(inst, 0, {0, 0, 0}, 1.0);
  fixtures::add_block(inst, 0, {1, 0, 0}, 1.0);
  inst.scenarios = {1, 2, 1, {1.0, 1.0}};
  inst.groups = {{0, 0, low_dest, 0.1}, {1, 0, high_dest, 0.9}};
  inst.membership = {0, 1};
  inst.finalize();
  return inst;
}

}  // namespace

TEST_SUITE("extraction") {
  TEST_CASE("isolated block moves alone") {
    auto inst = fixtures::blank(3, 1, {"tonnage"}, {"tonnes"}, {LocationKind::Mine, LocationKind::WasteDump});
    fixtures::add_block(inst, 0, {0, 0, 0}, 1.0);
    inst.scenarios = {1, 1, 1, {1.0}};
    inst.groups = {{0, 0, {1}, 0.0}};
    inst.membership = {0};
    inst.finalize();
    auto sol = fixtures::empty_plan(inst);
    sol.extraction[0] = 1;
    Rng rng = make_stream(1, "t");
    const auto fp = perturb_extraction(inst, sol, rng, extraction(ShiftMode::Advance1));
    REQUIRE(fp.blocks.size() == 1);
    CHECK(fp.blocks[0].block == 0);
    CHECK(sol.extraction[0] == 0);
    CHECK(fp.destinations.empty());
    CHECK(check_feasibility(inst, sol).empty());
  }

  TEST_CASE("advancing the bottom of a column drags the blocks above") {
    const auto inst = column(3);
    auto sol = fixtures::empty_plan(inst);
    sol.extraction = {2, 2, 2};
    sol.extraction[2] = 0;
    Footprint fp;
    repair_precedence(inst, sol, {2}, fp);

    // Closest feasible schedule with the bottom block fixed at period 0.
    int best_cost = 1 << 30;
    std::vector<int> best;
    for (int a = -1; a < 3; ++a) {
      for (int b = -1; b < 3; ++b) {
        const std::vector<int> x{a, b, 0};
        auto trial = sol;
        trial.extraction = x;
        if (!check_feasibility(inst, trial).empty()) continue;
        const int cost = std::abs((a < 0 ? 3 : a) - 2) + std::abs((b < 0 ? 3 : b) - 2);
        if (cost < best_cost) best_cost = cost, best = x;
      }
    }
    CHECK(sol.extraction == best);
    CHECK(sol.extraction[0] <= 0);
    CHECK(sol.extraction[1] <= 0);
    CHECK(fp.blocks.size() == 2);
  }

  TEST_CASE("nothing to delay when the only block is unmined") {
    auto inst = fixtures::one_block();
    auto sol = fixtures::empty_plan(inst);
    Rng rng = make_stream(2, "t");
    const auto fp = perturb_extraction(inst, sol, rng, extraction(ShiftMode::Delay1));
    CHECK(fp.empty());
    CHECK(sol.extraction[0] == kNotMined);
  }

  TEST_CASE("cone and inverted cone move same-period partners") {
    const auto inst = column(4);
    Rng rng = make_stream(3, "t");
    for (int k = 0; k < 50; ++k) {
      auto sol = fixtures::empty_plan(inst);
      sol.extraction = {1, 1, 1};
      auto fp = perturb_extraction(inst, sol, rng, extraction(ShiftMode::Random, RepairShape::Cone));
      CHECK(check_feasibility(inst, sol).empty());
      sol.extraction = {1, 1, 1};
      fp = perturb_extraction(inst, sol, rng, extraction(ShiftMode::Random, RepairShape::InvertedCone));
      CHECK(check_feasibility(inst, sol).empty());
    }
  }
}

TEST_SUITE("destinations") {
  TEST_CASE("single-destination groups give a null outcome") {
    auto inst = two_groups({1}, {1});
    auto sol = fixtures::empty_plan(inst);
    Rng rng = make_stream(1, "t");
    HeuristicDescriptor d;
    d.family = HeuristicFamily::ClusterDestination;
    CHECK(perturb_cluster_destination(inst, sol, rng, d).empty());
  }

  TEST_CASE("two destinations flip to the other one, one entry at a time") {
    auto inst = two_groups({1, 2}, {1});
    auto sol = fixtures::empty_plan(inst);
    Rng rng = make_stream(1, "t");
    HeuristicDescriptor d;
    d.family = HeuristicFamily::ClusterDestination;
    for (int k = 0; k < 20; ++k) {
      const auto before = sol.destination;
      const auto fp = perturb_cluster_destination(inst, sol, rng, d);
      REQUIRE(fp.destinations.size() == 1);
      int diffs = 0;
      for (std::size_t i = 0; i < before.size(); ++i) diffs += before[i] != sol.destination[i];
      CHECK(diffs == 1);
      CHECK(fp.destinations[0].group == 0);
      CHECK(fp.destinations[0].to == (fp.destinations[0].from == 1 ? 2 : 1));
    }
  }

  TEST_CASE("cut-off threshold clamps at zero") {
    auto inst = two_groups({1, 2}, {1, 2});
    auto sol = fixtures::empty_plan(inst);  // everything to the processor: threshold 0
    Rng rng = make_stream(1, "t");
    HeuristicDescriptor d;
    d.family = HeuristicFamily::DestinationPolicy;
    d.threshold_shift = -1;
    CHECK(perturb_destination_policy(inst, sol, rng, d).empty());
  }

  TEST_CASE("raising the threshold sends the low group to waste") {
    auto inst = two_groups({1, 2}, {1, 2});
    auto sol = fixtures::empty_plan(inst);
    Rng rng = make_stream(1, "t");
    HeuristicDescriptor d;
    d.family = HeuristicFamily::DestinationPolicy;
    d.threshold_shift = 1;
    const auto fp = perturb_destination_policy(inst, sol, rng, d);
    REQUIRE(fp.destinations.size() == 1);
    const int t = fp.destinations[0].period;
    CHECK(sol.dest(0, t) == 2);
    CHECK(sol.dest(1, t) == 1);
    CHECK(cutoff_threshold(inst, sol, 0, t, 2) == 1);
    CHECK(check_feasibility(inst, sol).empty());
  }
}

TEST_SUITE("streams") {
  TEST_CASE("single outgoing arcs disable the family") {
    auto cfg = fixtures::tiny_config();
    const auto inst = generate_synthetic_instance(cfg, 1);
    CHECK(perturbable_arcs(inst).empty());
    for (const auto& d : build_registry(inst, {})) CHECK(d.family != HeuristicFamily::ProcessingStream);
  }

  TEST_CASE("large draws clamp and zero the sibling") {
    auto inst = fixtures::blank(1, 1, {"tonnage"}, {"tonnes"},
                                {LocationKind::Mine, LocationKind::Processor, LocationKind::Processor,
                                 LocationKind::Processor});
    fixtures::add_block(inst, 0, {0, 0, 0}, 1.0);
    inst.scenarios = {1, 1, 1, {1.0}};
    inst.groups = {{0, 0, {1}, 0.0}};
    inst.membership = {0};
    inst.arcs = {{1, 2}, {1, 3}};
    inst.finalize();
    HeuristicDescriptor d;
    d.family = HeuristicFamily::ProcessingStream;
    d.sigma = 1000.0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      auto sol = fixtures::empty_plan(inst);
      sol.streams = {0.5, 0.5};
      Rng rng = make_stream(seed, "t");
      perturb_processing_stream(inst, sol, rng, d);
      CHECK(sol.streams[0] + sol.streams[1] == 1.0);
      CHECK((sol.streams[0] == 0.0 || sol.streams[0] == 1.0));
    }
  }

  TEST_CASE("proposal is centred on the current value") {
    Rng rng = make_stream(5, "t");
    double sum = 0.0;
    const int n = 100000;
    for (int k = 0; k < n; ++k) sum += stream_proposal(rng, 0.5, 0.1);
    CHECK(std::abs(sum / n - 0.5) <= 0.002);
  }

  TEST_CASE("stockpile rows stay within the simplex") {
    const auto inst = generate_synthetic_instance(fixtures::mid_config(4, 4, 2, 3, 3), 2);
    auto sol = build_initial_solution(inst, 2);
    Rng rng = make_stream(5, "t");
    HeuristicDescriptor d;
    d.family = HeuristicFamily::ProcessingStream;
    d.sigma = 0.3;
    for (int k = 0; k < 2000; ++k) {
      d.all_scenarios = k % 2 == 0;
      perturb_processing_stream(inst, sol, rng, d);
      REQUIRE(check_feasibility(inst, sol).empty());
    }
  }
}

TEST_SUITE("registry") {
  TEST_CASE("all four families give 38 heuristics with dense ids") {
    const auto inst = generate_synthetic_instance(fixtures::mid_config(), 1);
    const auto reg = build_registry(inst, {});
    CHECK(reg.size() == 38);
    std::set<std::string> names;
    for (std::size_t i = 0; i < reg.size(); ++i) {
      CHECK(reg[i].id == static_cast<int>(i));
      names.insert(reg[i].name);
    }
    CHECK(names.size() == 38);
  }

  TEST_CASE("custom size is interleaved and dense") {
    const auto inst = generate_synthetic_instance(fixtures::mid_config(), 1);
    RegistryConfig cfg;
    cfg.size = 50;
    const auto reg = build_registry(inst, cfg);
    CHECK(reg.size() == 50);
    std::set<HeuristicFamily> first4;
    for (int i = 0; i < 4; ++i) first4.insert(reg[i].family);
    CHECK(first4.size() == 4);
    for (std::size_t i = 0; i < reg.size(); ++i) CHECK(reg[i].id == static_cast<int>(i));
  }

  TEST_CASE("single family warns") {
    const auto inst = generate_synthetic_instance(fixtures::tiny_config(), 1);
    RegistryConfig cfg;
    cfg.cluster_destination = false;
    cfg.destination_policy = false;
    std::vector<std::string> warnings;
    const auto reg = build_registry(inst, cfg, &warnings);
    CHECK(reg.size() == 20);
    CHECK(warnings.size() == 1);
  }
}

TEST_SUITE("perturbation properties") {
  TEST_CASE("feasible, undoable, and fully described by the footprint") {
    const auto inst = generate_synthetic_instance(fixtures::mid_config(), 12);
    HeuristicSet hs(inst, build_registry(inst, {}), 12);
    auto sol = build_initial_solution(inst, 12);
    Rng rng = make_stream(12, "test-pick");
    for (int k = 0; k < 5000; ++k) {
      const Solution before = sol;
      const auto fp = hs.apply(uniform_int(rng, 0, hs.size() - 1), sol);
      REQUIRE(check_feasibility(inst, sol).empty());

      std::set<int> blocks;
      for (const auto& m : fp.blocks) blocks.insert(m.block);
      for (int b = 0; b < inst.block_count(); ++b) {
        if (before.extraction[b] != sol.extraction[b]) CHECK(blocks.count(b) == 1);
      }
      std::set<std::pair<int, int>> dests;
      for (const auto& m : fp.destinations) dests.insert({m.group, m.period});
      for (int g = 0; g < inst.group_count(); ++g) {
        for (int t = 0; t < inst.periods; ++t) {
          if (before.dest(g, t) != sol.dest(g, t)) CHECK(dests.count({g, t}) == 1);
        }
      }
      std::size_t stream_changes = 0;
      for (std::size_t i = 0; i < sol.streams.size(); ++i) stream_changes += before.streams[i] != sol.streams[i];
      CHECK(stream_changes <= fp.streams.size());

      if (k % 2 == 0) {
        Solution restored = sol;
        undo(fp, restored);
        CHECK(bit_identical(restored, before));
      }
    }
  }
}
