#pragma once

// Two-stage robust bargaining against load and DER forecast errors.  The
// first stage fixes the trade and the battery plan; after the loads and DER
// output are revealed the ADN re-dispatches, adjusting the batteries around
// the plan.  Solved by column-and-constraint generation: a master problem
// over the first stage with one recourse copy per stored realization, and a
// worst-case subproblem solved by alternating the recourse LP and a vertex
// ascent on the uncertainty box.

#include <optional>
#include <string>
#include <vector>

#include "hcng/adn.hpp"
#include "hcng/bargain.hpp"
#include "hcng/gdn.hpp"
#include "hcng/netmodel.hpp"
#include "hcng/trade.hpp"

namespace hcng {

enum class UncertaintyCase { Case1 = 1, Case2, Case3, Case4 };  // none, load, DER, both

const char* to_string(UncertaintyCase c);
UncertaintyCase parse_case(const std::string& text);  // "case1".."case4"

// Per-element bounds on the realization.
struct UncertaintyBox {
  Realization lower;
  Realization upper;

  // Uncertain (element, period) pairs: those with lower < upper.
  struct Pair {
    bool load;   // true: bus load, false: DER output
    int index;   // bus or DER index
    int period;
  };
  std::vector<Pair> pairs() const;
  bool contains(const Realization& u, double tol = 1e-9) const;
  bool is_vertex(const Realization& u, double tol = 1e-9) const;
  // Vertex from one bit per pair (bit set = upper bound).
  Realization vertex(const std::vector<bool>& upper_bits) const;
};

UncertaintyBox uncertainty_box(const Scenario& s, UncertaintyCase c);

// First-stage decision.
struct FirstStage {
  TradeDecision trade;                  // quantities
  std::vector<Series> battery_plan;     // [battery][t], net kW (discharge positive)
  BlendState blend;
  GdnSchedule gdn;
  double gdn_cost = 0.0;       // C^G without payments
  double gdn_objective = 0.0;  // C^G plus the pressure penalty
};

struct RecourseOptions {
  bool battery_recourse = true;  // false: batteries follow the plan exactly
};

// ADN recourse under one realization.  value is the ADN objective (own cost
// plus penalties); when the realization cannot be served the solve falls
// back to shedding/spilling at a high price and infeasible is set.
struct Recourse {
  AdnSchedule schedule;
  AdnCostBreakdown cost;  // own cost, no payments
  double value = 0.0;
  std::vector<Series> adjustment;  // [battery][t], kW relative to the plan
  bool infeasible = false;
  conic::Solution solution;
};

double shed_penalty(const Scenario& s);

Recourse solve_sp1(const Scenario& s, const FirstStage& y, const Realization& u,
                   const RecourseOptions& opts = {});

struct VertexStep {
  Realization u;
  double value = 0.0;  // recourse value at the input realization with x fixed
};

// Best box vertex for the recourse cost linearized at u with the battery
// adjustment held fixed.  Gradients are the duals of the balance and DER
// availability rows; ties go to the lower bound.
VertexStep solve_sp2(const Scenario& s, const FirstStage& y, const Realization& u,
                     const std::vector<Series>& adjustment, const UncertaintyBox& box,
                     const RecourseOptions& opts = {});

struct WorstCase {
  Realization u;
  Recourse recourse;
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> values;  // SP1 value at each visited realization
};

WorstCase solve_sp_bcd(const Scenario& s, const FirstStage& y, const UncertaintyBox& box,
                       const RecourseOptions& opts = {});

struct Cut {
  Realization u;
  std::vector<Series> adjustment;
  bool infeasible = false;
};

struct MasterResult {
  FirstStage y;
  double lower_bound = 0.0;
  double adn_forecast_value = 0.0;
  std::vector<double> copy_values;  // ADN value of each cut copy
};

// Master problem under a fixed blend.  With no cuts it is the deterministic
// joint schedule.
MasterResult solve_mp(const Scenario& s, const std::vector<Cut>& cuts, const BlendState& blend,
                      const RecourseOptions& opts = {});

struct CcgIteration {
  int blend_round = 1;
  int iteration = 0;  // within the blend round
  double lower_bound = 0.0;
  double upper_bound = 0.0;       // this iteration's first stage at its worst case
  double best_upper_bound = 0.0;  // running minimum
  double gap = 0.0;
  int cut = -1;                   // index of the cut added (into RobustSolution::cuts)
  int bcd_iterations = 0;
  bool bcd_converged = false;
};

struct RobustSolution {
  UncertaintyCase uncertainty = UncertaintyCase::Case4;
  FirstStage y;
  WorstCase worst;
  std::vector<Cut> cuts;
  std::vector<CcgIteration> trace;  // all blend rounds; bounds restart each round
  int blend_rounds = 0;
  bool converged = false;

  double lower_bound() const { return trace.empty() ? 0.0 : trace.back().lower_bound; }
  double upper_bound() const { return trace.empty() ? 0.0 : trace.back().best_upper_bound; }
};

RobustSolution ccg(const Scenario& s, UncertaintyCase c, const RecourseOptions& opts = {});

// Joint cost of a first stage under one realization (GDN objective plus the
// ADN recourse value).
double evaluate_first_stage(const Scenario& s, const FirstStage& y, const Realization& u,
                            const RecourseOptions& opts = {});

// First stage of the deterministic bargain (forecast only).
FirstStage deterministic_first_stage(const Scenario& s);

// Prices for a robust first stage: the price stage run against the
// worst-case disagreement point (ADN with no trade at its own worst case).
struct RobustSettlement {
  double c0_adn = 0.0;  // worst-case ADN cost without trade
  double c0_gdn = 0.0;
  double adn_cost = 0.0;  // worst-case ADN cost under the priced trade
  double gdn_cost = 0.0;
  bool bargained = false;
  TradeDecision trade;
  AdmmTrace q2;

  double adn_surplus() const { return c0_adn - adn_cost; }
  double gdn_surplus() const { return c0_gdn - gdn_cost; }
};
RobustSettlement settle_robust(const Scenario& s, const RobustSolution& r);

}  // namespace hcng
