#pragma once

// Active distribution network scheduling: branch-flow SOCP on a radial
// feeder, grid purchase at the root, DER curtailment, lithium-ion batteries
// with depth-of-discharge-dependent wear and fuel-cell conversion.
// Powers in kW, energies in kWh; the cone and voltage rows are in per unit.

#include <optional>
#include <vector>

#include "hcng/conic.hpp"
#include "hcng/netmodel.hpp"
#include "hcng/trade.hpp"

namespace hcng {

// One instance of the uncertain quantities.
struct Realization {
  std::vector<Series> load_kw;  // [bus][t]
  std::vector<Series> der_kw;   // [der][t] available output

  static Realization forecast(const Scenario& s);
  bool operator==(const Realization&) const = default;
};

struct AdnSchedule {
  Series grid_buy;                   // kW drawn from the transmission grid
  Series grid_export;                // kW pushed back
  Series grid_q;                     // kvar at the root
  std::vector<Series> branch_p;      // [branch][t], kW along from -> to
  std::vector<Series> branch_q;      // [branch][t], kvar
  std::vector<Series> current_sq;    // [branch][t], p.u.
  std::vector<Series> voltage_sq;    // [bus][t], p.u.
  std::vector<Series> der;           // [der][t], kW dispatched
  std::vector<Series> bat_discharge; // [battery][t], kW >= 0
  std::vector<Series> bat_charge;    // [battery][t], kW <= 0
  std::vector<Series> bat_energy;    // [battery][t], kWh at the end of period t
  std::vector<Series> bat_adjust;    // [battery][t], kW recourse vs baseline (robust stage)
  std::vector<Series> sofc_power;    // [fuel cell][t], kW
  std::vector<Series> sofc_gas;      // [fuel cell][t], m3/h of fuel
  std::vector<Series> et_power;      // [electrolyzer][t], kW
  Series h2_level;                   // pooled hydrogen store, m3 (self-conversion only)
  double penalty = 0.0;              // loss penalty (and slack) value
  double slack_kwh = 0.0;            // shed plus spilled energy, slack-enabled builds only

  Series grid_net() const;
  std::vector<Series> battery_net() const;
};

struct AdnCostBreakdown {
  double total = 0.0;  // g2p + tg + hess - p2g
  double tg = 0.0;     // grid purchase net of export revenue
  double li = 0.0;
  double sofc = 0.0;
  double h2_loop = 0.0;  // electrolyzer and tank costs when the ADN owns them
  double hess = 0.0;     // li + sofc + h2_loop
  double g2p = 0.0;      // paid to the GDN for fuel-cell gas
  double p2g = 0.0;      // received from the GDN for electrolyzer electricity
  double penalty = 0.0;
};

struct AdnModel {
  int periods = 0;
  double dt = 1.0;
  std::vector<int> grid_buy, grid_export, grid_q;
  std::vector<std::vector<int>> branch_p, branch_q, current_sq, voltage_sq;
  std::vector<std::vector<int>> der, bat_discharge, bat_charge, bat_energy, bat_adjust;
  std::vector<std::vector<int>> sofc_power, sofc_gas, et_power;
  std::vector<int> h2_level;
  std::vector<std::vector<conic::RowRef>> balance_p;  // [bus][t], rhs = active load
  std::vector<std::vector<conic::RowRef>> der_avail;  // [der][t], rhs = available output
  std::vector<std::vector<conic::RowRef>> bat_baseline;  // [battery][t] when a baseline is set
  std::vector<int> shed;    // balance slack variables (shed and spill), when enabled
  conic::LinExpr own_cost;  // C^TG + C^HESS
  conic::LinExpr penalty;   // losses, plus balance slack when enabled
  conic::LinExpr slack_cost;
};

struct AdnOptions {
  const Realization* realization = nullptr;             // loads and DER availability
  const std::vector<Series>* baseline_battery = nullptr;  // first-stage net battery power
  std::optional<double> loss_penalty;                     // $/kWh of losses
  std::optional<double> shed_penalty;                     // $/kWh; adds shed/spill slack to every bus
  bool with_batteries = true;
};

double battery_cycle_life(double dod, double a1, double a2, double b1, double b2);
// Wear cost per kWh of throughput (discharge plus charge magnitude).
double battery_wear_cost(const Battery& b);
double sofc_power_kw(const FuelCell& f, double gas_m3h, double hhv, const Scenario& s);
double default_loss_penalty(const Scenario& s);

AdnModel add_adn(conic::Program& program, const Scenario& s, const BlendState& blend,
                 const AdnOptions& opts = {});
AdnSchedule extract_adn(const AdnModel& m, const Scenario& s, const conic::Solution& sol);

struct AdnProblem {
  conic::Program program;
  AdnModel model;
};

// Standalone ADN program; trade semantics as for the GDN builder.
AdnProblem build_adn_problem(const Scenario& s, const TradeDecision* trade, const BlendState& blend,
                             const AdnOptions& opts = {});

// Max over branches and periods of (I + U - ||(2P, 2Q, I - U)||) / (I + U).
double branchflow_tightness(const Scenario& s, const AdnSchedule& schedule);

AdnCostBreakdown adn_cost(const Scenario& s, const AdnSchedule& schedule, const TradeDecision& trade);

// Number of battery-periods with both charge and discharge above 1e-6 of rating.
int simultaneous_battery_use(const Scenario& s, const AdnSchedule& schedule);

struct AdnResult {
  AdnSchedule schedule;
  AdnCostBreakdown cost;
  double objective = 0.0;
  conic::Solution solution;
};

// Throws SolverError naming the binding family (voltage, balance, device bound).
AdnResult solve_adn(const Scenario& s, const TradeDecision& trade, const BlendState& blend,
                    const AdnOptions& opts = {});

}  // namespace hcng
