#include <cmath>
#include <random>

#include "doctest.h"
#include "hcng/error.hpp"
#include "hcng/netmodel.hpp"

using namespace hcng;

namespace {

std::string data(const std::string& name) { return std::string(HCNG_DATA_DIR) + "/" + name; }

}  // namespace

TEST_CASE("hydrogen fraction") {
  CHECK(hydrogen_fraction(0, 100) == 0.0);
  CHECK(hydrogen_fraction(100, 0) == 1.0);
  CHECK(hydrogen_fraction(25, 75) == doctest::Approx(0.25).epsilon(1e-15));
  CHECK_THROWS_AS(hydrogen_fraction(0, 0), DomainError);
  CHECK_THROWS_AS(hydrogen_fraction(-1, 5), DomainError);
}

TEST_CASE("mixture heat value") {
  CHECK(hhv_mix(0.0, 12.7, 39.8) == 39.8);
  CHECK(hhv_mix(1.0, 12.7, 39.8) == 12.7);
  // 0.2 * 12.7 + 0.8 * 39.8
  CHECK(hhv_mix(0.2, 12.7, 39.8) == doctest::Approx(34.38).epsilon(1e-12));
  CHECK_THROWS_AS(hhv_mix(1.2, 12.7, 39.8), DomainError);
  CHECK_THROWS_AS(hhv_mix(-0.1, 12.7, 39.8), DomainError);
}

TEST_CASE("equivalent gas load") {
  CHECK(equivalent_gas_load(100.0, 39.8, 39.8) == doctest::Approx(100.0));
  CHECK(equivalent_gas_load(100.0, 34.38, 39.8) == doctest::Approx(3980.0 / 34.38).epsilon(1e-12));
  CHECK(equivalent_gas_load(100.0, 34.38, 39.8) == doctest::Approx(115.76).epsilon(1e-4));
  CHECK_THROWS_AS(equivalent_gas_load(100.0, 0.0, 39.8), DomainError);
}

TEST_CASE("blend arithmetic properties") {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 500; ++k) {
    const double total = 1.0 + 1000.0 * u(rng);
    const double a1 = total * u(rng), a2 = total * u(rng);
    const double lo = std::min(a1, a2), hi = std::max(a1, a2);
    const double h_lo = hhv_mix(hydrogen_fraction(lo, total - lo), 12.7, 39.8);
    const double h_hi = hhv_mix(hydrogen_fraction(hi, total - hi), 12.7, 39.8);
    CHECK(h_hi <= h_lo + 1e-12);

    const double load = 1.0 + 500.0 * u(rng);
    const double mix = hhv_mix(0.3 * u(rng), 12.7, 39.8);
    const double g = equivalent_gas_load(load, mix, 39.8);
    CHECK(std::abs(g * mix - load * 39.8) <= 1e-9 * load * 39.8);
  }
}

TEST_CASE("blend state from volumes") {
  BlendConstants c;
  BlendState b = BlendState::from_volumes({0.0, 20.0}, {100.0, 80.0}, c);
  CHECK(b.omega[0] == 0.0);
  CHECK(b.omega[1] == doctest::Approx(0.2));
  CHECK(b.hhv_mix[1] == doctest::Approx(34.38));
  CHECK(b.max_change(BlendState::pure_methane(2, c)) == doctest::Approx(0.2));
}

TEST_CASE("bundled small scenario") {
  Scenario s = load_scenario(data("tiny4x3.json"));
  CHECK(s.power.buses.size() == 4);
  CHECK(s.gas.nodes.size() == 3);
  CHECK(s.devices.electrolyzers.size() == 1);
  CHECK(s.devices.fuel_cells.size() == 1);
  CHECK(s.devices.batteries.size() == 1);
  CHECK(s.periods() == 4);
  CHECK(s.gas.source == "G0");
  CHECK(s.market.export_price == Series(4, 0.0));
  CHECK(s.power.buses[0].p_load == Series(4, 0.0));
}

TEST_CASE("bundled feeder scenario") {
  Scenario s = load_scenario(data("ieee33_belgian20.json"));
  CHECK(s.power.buses.size() == 33);
  CHECK(s.gas.nodes.size() == 20);
  std::vector<std::string> der_buses, bat_buses, et_buses;
  for (const auto& d : s.devices.ders) der_buses.push_back(d.bus);
  for (const auto& b : s.devices.batteries) bat_buses.push_back(b.bus);
  for (const auto& e : s.devices.electrolyzers) et_buses.push_back(e.bus);
  CHECK(der_buses == std::vector<std::string>{"E17", "E21", "E24", "E32"});
  CHECK(bat_buses == std::vector<std::string>{"E17", "E32"});
  CHECK(et_buses == std::vector<std::string>{"E17", "E24"});
  REQUIRE(s.devices.fuel_cells.size() == 2);
  CHECK(s.devices.fuel_cells[0].bus == "E6");
  CHECK(s.devices.fuel_cells[0].gas_node == "G8");
  CHECK(s.devices.fuel_cells[1].bus == "E12");
  CHECK(s.devices.fuel_cells[1].gas_node == "G4");
  REQUIRE(s.devices.tanks.size() == 1);
  CHECK(s.devices.tanks[0].gas_node == "G0");
  CHECK(s.periods() == 24);
}

TEST_CASE("scenario round trip") {
  for (const char* name : {"tiny4x3.json", "ieee33_belgian20.json"}) {
    Scenario a = load_scenario(data(name));
    Scenario b = parse_scenario(serialize_scenario(a));
    CHECK(a == b);
    CHECK(scenario_hash(a) == scenario_hash(b));
  }
}

TEST_CASE("validation names the offending field") {
  Scenario s = load_scenario(data("tiny4x3.json"));
  s.gas.nodes[1].p_min = 80.0;  // above p_max
  try {
    validate(s);
    FAIL("expected a validation error");
  } catch (const ValidationError& e) {
    REQUIRE(e.problems().size() == 1);
    CHECK(e.problems()[0].find("G1") != std::string::npos);
    CHECK(e.problems()[0].find("pressure") != std::string::npos);
  }
}

TEST_CASE("validation catches structural problems") {
  Scenario base = load_scenario(data("tiny4x3.json"));

  Scenario s = base;
  s.gas.pipes.push_back({"P02", "G0", "G2", 10.0});  // closes a loop
  CHECK_THROWS_AS(validate(s), ValidationError);

  s = base;
  s.devices.fuel_cells[0].gas_node = "G9";
  CHECK_THROWS_AS(validate(s), ValidationError);

  s = base;
  s.market.gas_price.push_back(0.3);
  CHECK_THROWS_AS(validate(s), ValidationError);

  s = base;
  s.devices.batteries[0].soc_min = 0.95;
  CHECK_THROWS_AS(validate(s), ValidationError);

  s = base;
  s.uncertainty.der_radius = -0.1;
  CHECK_THROWS_AS(validate(s), ValidationError);

  s = base;
  s.algo.rho[2] = 0.0;
  CHECK_THROWS_AS(validate(s), ValidationError);

  s = base;
  s.devices.electrolyzers[0].efficiency = 1.5;
  CHECK_THROWS_AS(validate(s), ValidationError);
}

TEST_CASE("malformed input is a parse error") {
  CHECK_THROWS_AS(parse_scenario("{ not json"), ParseError);
  CHECK_THROWS_AS(parse_scenario(R"({"schema_version": 1})"), ParseError);
  CHECK_THROWS_AS(load_scenario(data("does_not_exist.json")), ParseError);
}

TEST_CASE("battery-only variant drops conversion devices") {
  Scenario s = load_scenario(data("tiny4x3.json"));
  Scenario m3 = with_variant(s, ModelVariant::BatteryOnly);
  CHECK(m3.devices.electrolyzers.empty());
  CHECK(m3.devices.fuel_cells.empty());
  CHECK(m3.devices.tanks.empty());
  CHECK(m3.devices.batteries.size() == 1);
  CHECK(parse_variant("model2") == ModelVariant::SelfConversion);
  CHECK_THROWS_AS(parse_variant("model7"), ValidationError);
}
