#pragma once

// Domain types shared by every model: the two networks, the device fleet,
// market series, HCNG blend arithmetic and the Scenario aggregate.
// Everything here is plain data; instances are treated as immutable once a
// Scenario has been validated.

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace hcng {

using Series = std::vector<double>;

inline constexpr int kSchemaVersion = 1;

struct GasNode {
  std::string id;
  double p_min = 0.0;  // bar
  double p_max = 0.0;  // bar
  Series load;         // methane demand rate per period, m3/h
  bool operator==(const GasNode&) const = default;
};

struct GasPipe {
  std::string id;
  std::string from;  // upstream end (towards the source)
  std::string to;
  double weymouth = 0.0;  // m3/(h*bar)
  bool operator==(const GasPipe&) const = default;
};

struct GasNetwork {
  std::string source;  // HGN connection
  std::vector<GasNode> nodes;
  std::vector<GasPipe> pipes;
  int node_index(const std::string& id) const;  // -1 when absent
  bool operator==(const GasNetwork&) const = default;
};

struct Bus {
  std::string id;
  double v_min = 0.95;  // p.u.
  double v_max = 1.05;
  Series p_load;  // kW
  Series q_load;  // kvar
  bool operator==(const Bus&) const = default;
};

struct Branch {
  std::string id;
  std::string from;  // parent side
  std::string to;
  double r = 0.0;  // p.u.
  double x = 0.0;
  bool operator==(const Branch&) const = default;
};

struct PowerNetwork {
  std::string root;  // transmission-grid interface
  double base_kva = 1000.0;
  std::vector<Bus> buses;
  std::vector<Branch> branches;
  int bus_index(const std::string& id) const;
  bool operator==(const PowerNetwork&) const = default;
};

// Electrolytic tank (P2G).  Hydrogen leaves at gas_node.
struct Electrolyzer {
  std::string id;
  std::string bus;
  std::string gas_node;
  double rated_kw = 0.0;
  double efficiency = 0.0;
  double capital_cost = 0.0;  // $ per unit, spread over lifetime_h at rated load
  double lifetime_h = 0.0;
  bool operator==(const Electrolyzer&) const = default;
};

// Solid oxide fuel cell (G2P), fed from gas_node.
struct FuelCell {
  std::string id;
  std::string bus;
  std::string gas_node;
  double rated_kw = 0.0;
  double efficiency = 0.0;
  double capital_cost = 0.0;
  double lifetime_h = 0.0;
  bool operator==(const FuelCell&) const = default;
};

struct HydrogenTank {
  std::string id;
  std::string gas_node;
  double capacity_m3 = 0.0;
  double capacity_cost = 0.0;  // $/m3
  double lifetime_days = 0.0;
  bool operator==(const HydrogenTank&) const = default;
};

struct Battery {
  std::string id;
  std::string bus;
  double rated_kw = 0.0;
  double capacity_kwh = 0.0;
  double capacity_cost = 0.0;  // alpha, $/kWh
  double power_cost = 0.0;     // beta, $/kW
  double soc_min = 0.1;
  double soc_max = 0.9;
  double initial_soc = 0.5;
  double a1 = 20000.0, a2 = 4000.0, b1 = -5.0, b2 = -1.0;
  double dod = 0.8;
  bool operator==(const Battery&) const = default;
};

struct Der {
  std::string id;
  std::string bus;
  Series p_forecast;   // kW
  Series q_injection;  // kvar, fixed
  bool operator==(const Der&) const = default;
};

struct DeviceFleet {
  std::vector<Electrolyzer> electrolyzers;
  std::vector<FuelCell> fuel_cells;
  std::vector<HydrogenTank> tanks;
  std::vector<Battery> batteries;
  std::vector<Der> ders;
  bool operator==(const DeviceFleet&) const = default;
};

struct MarketData {
  Series gas_price;          // $/m3
  Series electricity_price;  // $/kWh
  Series export_price;       // $/kWh received for reverse flow at the root
  double dt_hours = 1.0;
  int periods() const { return static_cast<int>(gas_price.size()); }
  bool operator==(const MarketData&) const = default;
};

struct BlendConstants {
  double hhv_ch4 = 39.8;  // MJ/m3
  double hhv_h2 = 12.7;
  double omega_max = 0.2;
  bool operator==(const BlendConstants&) const = default;
};

// Per-period gas composition.  omega is system-wide (all injected H2 over
// all injected gas).
struct BlendState {
  Series omega;
  Series hhv_mix;
  Series h2_volume;
  Series ch4_volume;

  static BlendState pure_methane(int periods, const BlendConstants& c);
  static BlendState pure_hydrogen(int periods, const BlendConstants& c);
  static BlendState from_omega(const Series& omega, const BlendConstants& c);
  // Recomputes omega from injected volumes.
  static BlendState from_volumes(const Series& h2, const Series& ch4, const BlendConstants& c);
  double max_change(const BlendState& other) const;
};

struct Units {
  double mj_per_kwh = 3.6;
  bool operator==(const Units&) const = default;
};

enum class BoxOrientation { Symmetric, AsymmetricUp };

struct Uncertainty {
  double load_radius = 0.05;
  double der_radius = 0.15;
  BoxOrientation orientation = BoxOrientation::Symmetric;
  bool operator==(const Uncertainty&) const = default;
};

struct AlgorithmParams {
  std::array<double, 4> rho{1.0, 1.0, 1.0, 1.0};  // multiples of the auto-scaled penalties
  double admm_tol = 1e-3;
  int admm_max_iter = 500;
  std::optional<double> pressure_penalty;  // $/bar; default derived from gas prices
  double loss_penalty = 0.01;              // fraction of mean electricity price per kWh of loss
  double blend_tol = 1e-4;
  int blend_max_iter = 20;
  double ccg_gap_tol = 1e-3;
  int ccg_max_iter = 15;
  int bcd_max_iter = 50;
  double solver_tol = 1e-8;
  double price_cap_factor = 10.0;
  double log_margin = 1e-6;  // relative to the disagreement cost
  bool operator==(const AlgorithmParams&) const = default;
};

enum class ModelVariant { Cooperative, SelfConversion, BatteryOnly };

const char* to_string(ModelVariant v);
ModelVariant parse_variant(const std::string& s);

struct Scenario {
  int schema_version = kSchemaVersion;
  std::string name;
  GasNetwork gas;
  PowerNetwork power;
  DeviceFleet devices;
  MarketData market;
  BlendConstants blend;
  Units units;
  Uncertainty uncertainty;
  AlgorithmParams algo;
  ModelVariant variant = ModelVariant::Cooperative;

  int periods() const { return market.periods(); }
  double pressure_penalty() const;
  bool operator==(const Scenario&) const = default;
};

// HCNG blend arithmetic.
double hydrogen_fraction(double h2_volume, double ch4_volume);
double hhv_mix(double omega, double hhv_h2, double hhv_ch4);
double equivalent_gas_load(double load, double hhv_mix, double hhv_ch4);

// Scenario ingestion.  Throws ParseError or ValidationError.
Scenario load_scenario(const std::string& path);
Scenario parse_scenario(const std::string& json_text);
std::string serialize_scenario(const Scenario& s);
void validate(const Scenario& s);
std::string scenario_hash(const Scenario& s);

// Scenario under one of the comparison configurations: model 2 hands the
// electrolyzers, tanks and fuel cells to the ADN, model 3 removes them.
Scenario with_variant(const Scenario& s, ModelVariant v);

}  // namespace hcng
