#include <cmath>

#include "doctest.h"
#include "hcng/adn.hpp"
#include "hcng/error.hpp"

using namespace hcng;

namespace {

Scenario tiny() { return load_scenario(std::string(HCNG_DATA_DIR) + "/tiny4x3.json"); }
Scenario feeder() { return load_scenario(std::string(HCNG_DATA_DIR) + "/ieee33_belgian20.json"); }

BlendState methane(const Scenario& s) { return BlendState::pure_methane(s.periods(), s.blend); }

// Backward/forward DistFlow sweep on the tiny feeder (E0-E1, E1-E2, E1-E3)
// with all load at E2 and the root held at v0.  Returns the root injection.
double sweep_root_injection(const Scenario& s, double p2, double q2, double v0) {
  const double base = s.power.base_kva;
  const auto& br = s.power.branches;  // L01, L12, L13
  double v1 = v0 * v0, i12 = 0.0, i01 = 0.0, p01 = 0.0;
  for (int it = 0; it < 200; ++it) {
    const double P12 = p2 / base + br[1].r * i12, Q12 = q2 / base + br[1].x * i12;
    const double P01 = P12 + br[0].r * i01, Q01 = Q12 + br[0].x * i01;
    const double u0 = v0 * v0;
    i01 = (P01 * P01 + Q01 * Q01) / u0;
    v1 = u0 - 2.0 * (br[0].r * P01 + br[0].x * Q01) + (br[0].r * br[0].r + br[0].x * br[0].x) * i01;
    i12 = (P12 * P12 + Q12 * Q12) / v1;
    p01 = P01;
  }
  return p01 * base;
}

}  // namespace

TEST_CASE("cycle life") {
  CHECK(battery_cycle_life(1e-12, 20000, 4000, -5, -1) == doctest::Approx(24000.0));
  const double n = battery_cycle_life(0.8, 20000, 4000, -5, -1);
  CHECK(n == doctest::Approx(20000 * std::exp(-4.0) + 4000 * std::exp(-0.8)).epsilon(1e-14));
  CHECK(n == doctest::Approx(2163.9).epsilon(2e-4));
  CHECK(battery_cycle_life(0.5, 20000, 4000, -5, -1) > battery_cycle_life(0.9, 20000, 4000, -5, -1));
  CHECK_THROWS_AS(battery_cycle_life(0.0, 20000, 4000, -5, -1), DomainError);
}

TEST_CASE("fuel cell conversion units") {
  Scenario s = tiny();
  FuelCell f;
  f.efficiency = 0.55;
  s.units.mj_per_kwh = 1.0;
  CHECK(sofc_power_kw(f, 10.0, 34.38, s) == doctest::Approx(189.09));
  s.units.mj_per_kwh = 3.6;
  CHECK(sofc_power_kw(f, 10.0, 34.38, s) == doctest::Approx(189.09 / 3.6));
}

TEST_CASE("battery wear cost arithmetic") {
  Scenario s = tiny();
  Battery& b = s.devices.batteries[0];
  b.capacity_kwh = 200.0;
  b.capacity_cost = 100.0;
  b.rated_kw = 100.0;
  b.power_cost = 100.0;  // alpha E + beta P = 30000
  s.market.dt_hours = 1.0;
  AdnSchedule a;
  a.grid_buy = a.grid_export = Series(4, 0.0);
  a.bat_discharge = {{50.0, 0.0, 0.0, 0.0}};
  a.bat_charge = {{0.0, 0.0, 0.0, 0.0}};
  const double n = battery_cycle_life(0.8, 20000, 4000, -5, -1);
  AdnCostBreakdown c = adn_cost(s, a, TradeDecision{});
  CHECK(c.li == doctest::Approx(30000.0 * 50.0 / (n * 200.0 * 0.8)).epsilon(1e-12));
  CHECK(c.li == doctest::Approx(4.333).epsilon(1e-3));

  a.bat_discharge = {{0.0, 0.0, 0.0, 0.0}};
  CHECK(adn_cost(s, a, TradeDecision{}).li == 0.0);
}

TEST_CASE("idle network costs nothing") {
  Scenario s = tiny();
  for (auto& b : s.power.buses) {
    b.p_load.assign(4, 0.0);
    b.q_load.assign(4, 0.0);
  }
  for (auto& d : s.devices.ders) d.p_forecast.assign(4, 0.0);
  AdnResult r = solve_adn(s, TradeDecision::zero(s), methane(s));
  CHECK(std::abs(r.cost.total) < 1e-6);
  for (double v : r.schedule.grid_buy) CHECK(std::abs(v) < 1e-5);
}

TEST_CASE("no trade, no battery, no DER: the grid covers load and losses") {
  Scenario s = tiny();
  for (auto& d : s.devices.ders) d.p_forecast.assign(4, 0.0);
  AdnOptions opts;
  opts.with_batteries = false;
  AdnResult r = solve_adn(s, TradeDecision::zero(s), methane(s), opts);
  const auto& e2 = s.power.buses[2];
  double expected = 0.0;
  for (int t = 0; t < 4; ++t) {
    // Losses make the root voltage worth raising to its cap.
    const double oracle = sweep_root_injection(s, e2.p_load[t], e2.q_load[t], 1.05);
    CHECK(r.schedule.grid_net()[t] == doctest::Approx(oracle).epsilon(1e-6));
    CHECK(r.schedule.grid_net()[t] > e2.p_load[t]);
    expected += s.market.electricity_price[t] * oracle * s.market.dt_hours;
  }
  CHECK(r.cost.total == doctest::Approx(expected).epsilon(1e-6));
  CHECK(r.cost.total == doctest::Approx(r.cost.tg));
}

TEST_CASE("schedule invariants and relaxation exactness") {
  for (const Scenario& s : {tiny(), feeder()}) {
    AdnResult r = solve_adn(s, TradeDecision::zero(s), methane(s));
    const auto& a = r.schedule;
    CHECK(branchflow_tightness(s, a) <= 1e-4);
    CHECK(r.objective - r.cost.penalty == doctest::Approx(r.cost.total).epsilon(1e-6));
    CHECK(simultaneous_battery_use(s, a) == 0);
    for (std::size_t j = 0; j < s.power.buses.size(); ++j)
      for (int t = 0; t < s.periods(); ++t) {
        CHECK(a.voltage_sq[j][t] >= std::pow(s.power.buses[j].v_min, 2) - 1e-7);
        CHECK(a.voltage_sq[j][t] <= std::pow(s.power.buses[j].v_max, 2) + 1e-7);
      }
    for (std::size_t k = 0; k < s.devices.batteries.size(); ++k) {
      const auto& b = s.devices.batteries[k];
      for (int t = 0; t < s.periods(); ++t) {
        CHECK(a.bat_discharge[k][t] >= -1e-7);
        CHECK(a.bat_charge[k][t] <= 1e-7);
        CHECK(std::abs(a.bat_discharge[k][t] + a.bat_charge[k][t]) <= b.rated_kw + 1e-6);
        CHECK(a.bat_energy[k][t] >= b.soc_min * b.capacity_kwh - 1e-6);
        CHECK(a.bat_energy[k][t] <= b.soc_max * b.capacity_kwh + 1e-6);
      }
      const double e0 = b.initial_soc * b.capacity_kwh;
      CHECK(a.bat_energy[k].back() == doctest::Approx(e0).epsilon(1e-6));
    }
  }
}

TEST_CASE("extra load never lowers the ADN cost") {
  Scenario s = tiny();
  const double base = solve_adn(s, TradeDecision::zero(s), methane(s)).cost.total;
  s.power.buses[2].p_load[3] += 40.0;
  CHECK(solve_adn(s, TradeDecision::zero(s), methane(s)).cost.total >= base - 1e-9);
}

TEST_CASE("trade payments enter the cost stack") {
  Scenario s = tiny();
  TradeDecision d = TradeDecision::zero(s);
  d.p2g_kw[0] = {100.0, 200.0, 0.0, 0.0};
  d.g2p_m3h[0] = {0.0, 0.0, 30.0, 20.0};
  d.p2g_price = {0.04, 0.04, 0.04, 0.04};
  d.g2p_price = {0.3, 0.3, 0.3, 0.3};
  AdnResult r = solve_adn(s, d, methane(s));
  const double dt = s.market.dt_hours;
  CHECK(r.cost.p2g == doctest::Approx(0.04 * 300.0 * dt));
  CHECK(r.cost.g2p == doctest::Approx(0.3 * 50.0 * dt));
  CHECK(r.cost.total == doctest::Approx(r.cost.g2p + r.cost.tg + r.cost.hess - r.cost.p2g));
  CHECK(r.schedule.sofc_power[0][2] == doctest::Approx(30.0 * 39.8 * 0.6 / 3.6).epsilon(1e-7));
}

TEST_CASE("voltage infeasibility is named") {
  Scenario s = tiny();
  s.power.buses[2].v_min = 1.049;
  for (auto& d : s.devices.ders) d.p_forecast.assign(4, 0.0);
  for (double& p : s.power.buses[2].p_load) p *= 4.0;
  try {
    solve_adn(s, TradeDecision::zero(s), methane(s));
    FAIL("expected infeasibility");
  } catch (const SolverError& e) {
    CHECK(std::string(e.what()).find("voltage") != std::string::npos);
  }
}

TEST_CASE("second-stage build needs a battery baseline") {
  Scenario s = tiny();
  Realization u = Realization::forecast(s);
  AdnOptions opts;
  opts.realization = &u;
  conic::Program p;
  CHECK_THROWS_AS(add_adn(p, s, methane(s), opts), std::invalid_argument);
}
