#include <cmath>

#include "doctest.h"
#include "hcng/error.hpp"
#include "hcng/oracle.hpp"

using namespace hcng;

namespace {

Scenario tiny() { return load_scenario(std::string(HCNG_DATA_DIR) + "/tiny4x3.json"); }
Scenario ieee33() { return load_scenario(std::string(HCNG_DATA_DIR) + "/ieee33_belgian20.json"); }

}  // namespace

TEST_CASE("split scan finds the even split") {
  const OracleReport r = transfer_split_check(7.0, 3.0);
  CHECK(r.oracle_value == doctest::Approx(5.0));
  CHECK(r.tested_value == 7.0);
  CHECK(r.abs_gap == doctest::Approx(2.0));
  CHECK(r.rel_gap == doctest::Approx(0.2));
  CHECK_FALSE(r.passed);
  CHECK(r.enumeration_size == 1001);
  CHECK(transfer_split_check(5.02, 4.98).passed);

  const OracleReport none = transfer_split_check(0.0, 0.0);
  CHECK(none.passed);
  BargainOutcome o;
  CHECK(transfer_split_check(o).passed);
}

TEST_CASE("report gaps follow the values") {
  const OracleReport r = compare_values("x", 200.0, 201.0, 1e-2, 4);
  CHECK(r.abs_gap == doctest::Approx(1.0));
  CHECK(r.rel_gap == doctest::Approx(0.005));
  CHECK(r.passed);
  CHECK_FALSE(compare_values("x", 200.0, 201.0, 1e-3, 4).passed);
}

TEST_CASE("vertex enumeration") {
  const Scenario s = tiny();
  const FirstStage y = deterministic_first_stage(s);
  const Realization f = Realization::forecast(s);

  SUBCASE("a box without uncertainty has one vertex: the forecast") {
    const EnumeratedWorstCase e = enumerate_worst_case(s, y, uncertainty_box(s, UncertaintyCase::Case1));
    CHECK(e.vertices == 1);
    CHECK(e.u == f);
    CHECK(e.value == doctest::Approx(solve_sp1(s, y, f).value).epsilon(1e-12));
  }
  SUBCASE("one uncertain pair takes the larger of two solves") {
    UncertaintyBox box{f, f};
    int bus = 0;
    while (f.load_kw[bus][0] <= 0.0) ++bus;
    box.upper.load_kw[bus][0] *= 1.1;
    const EnumeratedWorstCase e = enumerate_worst_case(s, y, box);
    CHECK(e.vertices == 2);
    const double lo = solve_sp1(s, y, box.lower).value;
    const double hi = solve_sp1(s, y, box.upper).value;
    CHECK(e.value == doctest::Approx(std::max(lo, hi)).epsilon(1e-12));
  }
  SUBCASE("worst case search matches enumeration") {
    const UncertaintyBox box = uncertainty_box(s, UncertaintyCase::Case4);
    const WorstCase w = solve_sp_bcd(s, y, box);
    const OracleReport r = certify_worst_case(s, y, box, w);
    CHECK(r.enumeration_size == 256);
    CHECK(r.passed);
    CHECK(r.rel_gap <= 1e-6);
    // Deterministic regardless of thread scheduling.
    const EnumeratedWorstCase a = enumerate_worst_case(s, y, box);
    const EnumeratedWorstCase b = enumerate_worst_case(s, y, box);
    CHECK(a.u == b.u);
    CHECK(a.value == b.value);
  }
  SUBCASE("too many pairs is refused") {
    const Scenario big = ieee33();
    const UncertaintyBox box = uncertainty_box(big, UncertaintyCase::Case4);
    REQUIRE(box.pairs().size() > max_enumerated_pairs);
    FirstStage none;
    CHECK_THROWS_AS(enumerate_worst_case(big, none, box), DomainError);
  }
}

TEST_CASE("trade lattice") {
  const Scenario s = tiny();
  const Disagreement d = solve_independent(s);

  SUBCASE("zero trade reproduces the disagreement costs") {
    CHECK(std::abs(evaluate_trade(s, d, TradeDecision::zero(s))) < 1e-6);
  }
  SUBCASE("refusals") {
    CHECK_THROWS_AS(grid_search_q1(ieee33()), DomainError);
    CHECK_THROWS_AS(grid_search_q1(with_variant(s, ModelVariant::BatteryOnly)), DomainError);
    GridOptions one;
    one.points = 1;
    CHECK_THROWS_AS(grid_search_q1(s, one), DomainError);
  }
  SUBCASE("halving the step never loses the coarse best") {
    GridOptions coarse;
    coarse.points = 6;
    const GridResult a = grid_search_q1(s, coarse);
    const GridResult b = grid_search_q1(s);
    CHECK(b.best_benefit >= a.best_benefit);
    CHECK(a.best_benefit > 0.0);
    CHECK(b.lattice_size == 214358881);  // 11^8
    CHECK_FALSE(b.exhaustive);
  }
  SUBCASE("small lattices are enumerated") {
    GridOptions two;
    two.points = 2;
    const GridResult g = grid_search_q1(s, two);
    CHECK(g.exhaustive);
    CHECK(g.evaluations == 256);
  }
  SUBCASE("quantity stage beats the lattice at its own blend") {
    const QuantityResult q = agree_quantities(s);
    GridOptions at;
    at.blend = q.blend;
    const GridResult g = grid_search_q1(s, at);
    const double benefit = evaluate_trade(s, d, q.trade, &q.blend);
    CHECK(grid_report(g, benefit).passed);
  }
}
