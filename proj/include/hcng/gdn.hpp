#pragma once

// Gas distribution network scheduling: HGN purchase, radial Weymouth flow
// (second-order-cone relaxation), electrolyzer hydrogen production, tank
// storage, HCNG blending and fuel-cell supply.  Gas quantities are hourly
// rates (m3/h); a period's volume is rate * dt.

#include <optional>
#include <vector>

#include "hcng/conic.hpp"
#include "hcng/netmodel.hpp"
#include "hcng/trade.hpp"

namespace hcng {

struct GdnSchedule {
  Series hgn;                              // m3/h bought from the high-pressure grid
  std::vector<Series> flow;                // [pipe][t], m3/h, from -> to
  std::vector<Series> pressure;            // [node][t], bar
  std::vector<Series> et_power;            // [electrolyzer][t], kW
  std::vector<Series> et_hydrogen;         // [electrolyzer][t], m3/h produced
  std::vector<Series> h2_injection;        // [node][t], m3/h into the pipes
  std::vector<Series> ht_flow;             // [tank][t], m3/h into storage (negative = release)
  std::vector<Series> ht_level;            // [tank][t], m3 at the end of period t
  std::vector<Series> g2p;                 // [fuel cell][t], m3/h
  BlendState blend;                        // blend the schedule was solved under
  double penalty = 0.0;                    // pressure-drop penalty value

  Series total_h2_injection() const;
};

struct GdnCostBreakdown {
  double total = 0.0;  // hgn + p2g + et + ht - g2p
  double hgn = 0.0;
  double p2g = 0.0;    // paid to the ADN for electrolyzer electricity
  double et = 0.0;
  double ht = 0.0;
  double g2p = 0.0;    // received from the ADN for fuel-cell gas
  double penalty = 0.0;
};

// Handles to the GDN part of a (possibly larger) program.
struct GdnModel {
  int periods = 0;
  double dt = 1.0;
  bool conversion = false;  // electrolyzers, tanks and fuel cells belong to the GDN
  std::vector<int> hgn;
  std::vector<std::vector<int>> flow, pressure, et_power, ht_flow, ht_level, g2p;
  std::vector<std::vector<int>> h2_injection;    // [node][t]; -1 where no hydrogen enters
  std::vector<std::vector<conic::RowRef>> balance;  // [node][t]
  std::vector<conic::RowRef> blend_cap;          // [t]
  conic::LinExpr own_cost;                       // C^HGN + C^ET + C^HT
  conic::LinExpr penalty;
  double ht_cost = 0.0;
};

struct GdnOptions {
  std::optional<double> penalty_weight;  // $/bar; scenario value when unset
};

// True when the scenario's variant gives the conversion devices to the GDN.
bool gdn_owns_conversion(const Scenario& s);

double gdn_tank_cost(const Scenario& s);
double electrolyzer_hydrogen_rate(const Electrolyzer& e, double power_kw, const Scenario& s);

GdnModel add_gdn(conic::Program& program, const Scenario& s, const BlendState& blend,
                 const GdnOptions& opts = {});
GdnSchedule extract_gdn(const GdnModel& m, const Scenario& s, const conic::Solution& sol,
                        const BlendState& blend);

struct GdnProblem {
  conic::Program program;
  GdnModel model;
};

// Standalone GDN program.  With trade given, the conversion quantities are
// fixed to it and its prices (if any) enter the objective as payments.
// Without trade, the quantities are free and unpriced.
GdnProblem build_gdn_problem(const Scenario& s, const TradeDecision* trade, const BlendState& blend,
                             const GdnOptions& opts = {});

// Max over pipes and periods of (c w_m - ||(G, c w_n)||) / (c w_m).
double weymouth_tightness(const Scenario& s, const GdnSchedule& schedule);

GdnCostBreakdown gdn_cost(const Scenario& s, const GdnSchedule& schedule, const TradeDecision& trade);

// Largest nodal balance residual relative to the node's throughput.
double gdn_balance_residual(const Scenario& s, const GdnSchedule& schedule);

struct GdnResult {
  GdnSchedule schedule;
  GdnCostBreakdown cost;
  double objective = 0.0;  // solver objective, penalty included
  int blend_iterations = 0;
};

// One solve with the blend held fixed.
GdnResult solve_gdn_at(const Scenario& s, const TradeDecision& trade, const BlendState& blend,
                       const GdnOptions& opts = {});

// Solves the GDN with trade quantities fixed, iterating the blend to a fixed
// point.  Throws SolverError (naming the binding constraint family) or
// ConvergenceError.
GdnResult solve_gdn(const Scenario& s, const TradeDecision& trade, const GdnOptions& opts = {});

}  // namespace hcng
