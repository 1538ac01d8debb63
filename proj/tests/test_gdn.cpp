#include <cmath>
#include <numeric>

#include "doctest.h"
#include "hcng/error.hpp"
#include "hcng/gdn.hpp"

using namespace hcng;

namespace {

Scenario tiny() { return load_scenario(std::string(HCNG_DATA_DIR) + "/tiny4x3.json"); }

double total_load(const Scenario& s, int t) {
  double v = 0.0;
  for (const auto& n : s.gas.nodes) v += n.load[t];
  return v;
}

}  // namespace

TEST_CASE("cost stack arithmetic") {
  Scenario s = tiny();
  s.variant = ModelVariant::BatteryOnly;
  s.market.gas_price = {0.3, 0.3};
  s.market.dt_hours = 1.0;
  GdnSchedule sch;
  sch.hgn = {100.0, 100.0};
  GdnCostBreakdown c = gdn_cost(s, sch, TradeDecision{});
  CHECK(c.hgn == doctest::Approx(60.0));
  CHECK(c.total == doctest::Approx(60.0));
  CHECK(c.ht == 0.0);
}

TEST_CASE("no trade: purchase covers the load") {
  Scenario s = tiny();
  GdnResult r = solve_gdn(s, TradeDecision::zero(s));
  const double dt = s.market.dt_hours;
  double expected = 0.0;
  for (int t = 0; t < s.periods(); ++t) {
    CHECK(r.schedule.hgn[t] == doctest::Approx(total_load(s, t)).epsilon(1e-7));
    expected += s.market.gas_price[t] * total_load(s, t) * dt;
  }
  // 20 $/m3 * 300 m3 over a 3650-day life, one day scheduled.
  const double tank = 20.0 * 300.0 / 3650.0;
  CHECK(r.cost.ht == doctest::Approx(tank).epsilon(1e-12));
  CHECK(r.cost.total == doctest::Approx(expected + tank).epsilon(1e-7));
  CHECK(r.blend_iterations == 1);
  CHECK(r.objective - r.cost.penalty == doctest::Approx(r.cost.total).epsilon(1e-6));
}

TEST_CASE("empty network activity") {
  Scenario s = tiny();
  for (auto& n : s.gas.nodes) n.load.assign(s.periods(), 0.0);
  GdnResult r = solve_gdn(s, TradeDecision::zero(s));
  for (const auto& f : r.schedule.flow)
    for (double v : f) CHECK(std::abs(v) < 1e-5);
  CHECK(r.cost.total == doctest::Approx(gdn_tank_cost(s)).epsilon(1e-6));
}

TEST_CASE("electrolyzer hydrogen volume") {
  Scenario s = tiny();
  TradeDecision d = TradeDecision::zero(s);
  d.p2g_kw[0][1] = 100.0;
  const double dt = s.market.dt_hours;

  s.units.mj_per_kwh = 1.0;  // energy and volume in the same unit system
  GdnResult r = solve_gdn(s, d);
  CHECK(r.schedule.et_hydrogen[0][1] * dt == doctest::Approx(100.0 * 0.7 * dt / 12.7));

  s.units.mj_per_kwh = 3.6;
  r = solve_gdn(s, d);
  CHECK(r.schedule.et_hydrogen[0][1] * dt == doctest::Approx(100.0 * 0.7 * dt * 3.6 / 12.7));
  // Whatever goes to the pipes or the tank, the produced hydrogen is conserved.
  double produced = 0.0, injected = 0.0;
  for (int t = 0; t < s.periods(); ++t) {
    produced += r.schedule.et_hydrogen[0][t] * dt;
    injected += r.schedule.total_h2_injection()[t] * dt;
  }
  CHECK(injected == doctest::Approx(produced).epsilon(1e-6));
}

TEST_CASE("schedule invariants under hydrogen injection") {
  Scenario s = tiny();
  TradeDecision d = TradeDecision::zero(s);
  d.p2g_kw[0] = {350.0, 400.0, 0.0, 100.0};
  d.g2p_m3h[0] = {0.0, 10.0, 40.0, 20.0};
  GdnResult r = solve_gdn(s, d);
  const auto& sch = r.schedule;
  CHECK(gdn_balance_residual(s, sch) <= 1e-6);
  BlendState actual = BlendState::from_volumes(sch.total_h2_injection(), sch.hgn, s.blend);
  for (int t = 0; t < s.periods(); ++t) {
    CHECK(actual.omega[t] <= s.blend.omega_max + 1e-9);
    CHECK(std::abs(actual.omega[t] - sch.blend.omega[t]) <= 1e-4);
    for (std::size_t n = 0; n < s.gas.nodes.size(); ++n) {
      CHECK(sch.pressure[n][t] >= s.gas.nodes[n].p_min - 1e-6);
      CHECK(sch.pressure[n][t] <= s.gas.nodes[n].p_max + 1e-6);
    }
    CHECK(sch.ht_level[0][t] >= -1e-6);
    CHECK(sch.ht_level[0][t] <= 300.0 + 1e-6);
  }
  CHECK(r.blend_iterations > 1);
  CHECK(weymouth_tightness(s, sch) <= 1e-4);
  CHECK(r.objective - r.cost.penalty == doctest::Approx(r.cost.total).epsilon(1e-6));
}

TEST_CASE("pressure penalty tightens the Weymouth relaxation") {
  Scenario s = tiny();
  TradeDecision d = TradeDecision::zero(s);
  GdnOptions off;
  off.penalty_weight = 0.0;
  const double loose = weymouth_tightness(s, solve_gdn(s, d, off).schedule);
  const double tight = weymouth_tightness(s, solve_gdn(s, d).schedule);
  CHECK(tight <= 1e-4);
  CHECK(tight <= loose + 1e-12);
}

TEST_CASE("zero-flow pipe with equal pressures is exact") {
  Scenario s = tiny();
  GdnSchedule sch;
  sch.hgn = Series(4, 0.0);
  sch.flow.assign(2, Series(4, 0.0));
  sch.pressure.assign(3, Series(4, 60.0));
  CHECK(weymouth_tightness(s, sch) == doctest::Approx(0.0));
}

TEST_CASE("raising gas prices never lowers the purchase cost") {
  Scenario s = tiny();
  TradeDecision d = TradeDecision::zero(s);
  d.p2g_kw[0] = {200.0, 200.0, 0.0, 0.0};
  const double base = solve_gdn(s, d).cost.hgn;
  for (double& p : s.market.gas_price) p *= 1.25;
  CHECK(solve_gdn(s, d).cost.hgn >= base - 1e-9);
}

TEST_CASE("infeasible schedule names the binding family") {
  Scenario s = tiny();
  s.gas.nodes[2].p_min = 49.9;  // G2 cannot sit this close to the source pressure
  s.gas.nodes[0].p_max = 50.0;
  try {
    solve_gdn(s, TradeDecision::zero(s));
    FAIL("expected infeasibility");
  } catch (const SolverError& e) {
    CHECK(std::string(e.what()).find("pressure") != std::string::npos);
  }
}
