#pragma once

// Nash bargaining between the gas and power operators.  Stage one agrees on
// the traded quantities by maximizing the joint benefit; stage two fixes the
// quantities and sets per-period prices maximizing the log Nash product.
// Both stages run as two-agent consensus ADMM where each operator only ever
// sees the coupled trade values and the multipliers.

#include <string>
#include <vector>

#include "hcng/adn.hpp"
#include "hcng/gdn.hpp"
#include "hcng/netmodel.hpp"
#include "hcng/trade.hpp"

namespace hcng {

struct Disagreement {
  double adn_cost = 0.0;  // C0^E
  double gdn_cost = 0.0;  // C0^G
  AdnResult adn;
  GdnResult gdn;
};

// Both operators scheduled with every trade fixed at zero.
Disagreement solve_independent(const Scenario& s);

// One exchanged message per iteration: each operator's local copy of the
// coupled variables, the multiplier on the ADN copy (the GDN copy carries
// its negative) and the residuals.
struct AdmmIteration {
  int iteration = 0;
  std::vector<double> adn;
  std::vector<double> gdn;
  std::vector<double> multiplier;
  double primal_residual = 0.0;  // max |adn - gdn| / scale
  double dual_residual = 0.0;    // max |z - z_prev| / scale
};

struct AdmmTrace {
  std::string stage;                   // "q1" or "q2"
  std::vector<std::string> variables;  // coupled variable ids
  std::vector<AdmmIteration> iterations;
  bool converged = false;
};

// Carried between calls so that the blend loop can warm-start.
struct AdmmState {
  std::vector<double> consensus;
  std::vector<double> multiplier;
  std::vector<double> rho;  // per coupled variable
  int total_iterations = 0;
};

// Coupled variables of the quantity stage: electrolyzer draws then fuel-cell
// gas, each period-major within its device.
std::vector<std::string> trade_variable_ids(const Scenario& s);
std::vector<double> trade_scales(const Scenario& s);
std::vector<double> flatten_quantities(const TradeDecision& d);
TradeDecision unflatten_quantities(const Scenario& s, const std::vector<double>& x);

struct QuantityResult {
  TradeDecision trade;      // quantities only
  double adn_own = 0.0;     // ADN cost with the quantities fixed, no payments
  double gdn_own = 0.0;     // GDN cost likewise
  BlendState blend;
  int blend_rounds = 0;
  AdmmTrace trace;          // empty for the centralized solve
  bool converged = true;

  double joint_cost() const { return adn_own + gdn_own; }
};

// Both operators in one program with the trade links tied together; the
// objective is the joint cost including both penalty terms.
struct JointProblem {
  conic::Program program;
  GdnModel gdn;
  AdnModel adn;
};
void couple_trade(conic::Program& program, const GdnModel& gdn, const AdnModel& adn);
JointProblem build_joint_problem(const Scenario& s, const BlendState& blend);

// Quantity stage under a fixed blend.
QuantityResult solve_q1_admm(const Scenario& s, const BlendState& blend, AdmmState& state);
// The same stage as one joint program (used as the reference solution).
QuantityResult solve_q1_centralized(const Scenario& s, const BlendState& blend);

enum class QuantityMethod { Admm, Centralized };

// Quantity stage with the blend iterated to a fixed point around it.  The
// returned own costs come from standalone re-solves with the trade fixed.
QuantityResult agree_quantities(const Scenario& s, QuantityMethod method = QuantityMethod::Admm);

enum class PriceMethod { Admm, TransferBisection };

struct PriceResult {
  Series p2g_price;
  Series g2p_price;
  AdmmTrace trace;
  bool converged = true;
  PriceMethod method = PriceMethod::Admm;
};

// Net payment from the GDN to the ADN at the given prices.
double net_transfer(const TradeDecision& quantities, const Series& p2g_price, const Series& g2p_price,
                    double dt);

// Price stage.  adn_gain and gdn_gain are the surpluses before any payment
// (C0 - own cost); their sum must exceed the log margin.
// G2P prices in traded periods are capped at the ADN's break-even against
// the grid price.
PriceResult solve_q2_admm(const Scenario& s, const TradeDecision& quantities, const BlendState& blend,
                          double adn_gain, double gdn_gain);
PriceResult solve_q2_bisection(const Scenario& s, const TradeDecision& quantities,
                               const BlendState& blend, double adn_gain, double gdn_gain);

struct BargainOutcome {
  double c0_adn = 0.0;
  double c0_gdn = 0.0;
  double adn_cost = 0.0;
  double gdn_cost = 0.0;
  bool bargained = false;  // false: disagreement point kept
  TradeDecision trade;
  AdnResult adn;
  GdnResult gdn;
  BlendState blend;
  int blend_rounds = 0;
  AdmmTrace q1;
  AdmmTrace q2;
  bool converged = true;

  double adn_surplus() const { return c0_adn - adn_cost; }
  double gdn_surplus() const { return c0_gdn - gdn_cost; }
  double total_surplus() const { return adn_surplus() + gdn_surplus(); }
};

struct BargainOptions {
  QuantityMethod quantities = QuantityMethod::Admm;
  PriceMethod prices = PriceMethod::Admm;
};

// Full two-stage bargain.  Variants other than the cooperative one have
// nothing to trade and return the disagreement point.
BargainOutcome bargain(const Scenario& s, const BargainOptions& opts = {});

// Builds the outcome for given quantities: prices from the price stage and
// both operators re-solved under the priced trade.
BargainOutcome settle(const Scenario& s, const Disagreement& d, const QuantityResult& q,
                      PriceMethod method);

double nash_product(const BargainOutcome& o);

// Smallest surplus that still counts as a bargain: log_margin * (|C0^E| + |C0^G|).
double surplus_threshold(const Scenario& s, double c0_adn, double c0_gdn);

// Cost of one more kWh delivered through conversion: in the dearest period
// where a fuel cell has headroom, step_kwh of extra load is placed at its bus
// and the fuel cell is forced to cover it; the value is the change in own
// cost per kWh.  With no headroom anywhere the step is taken downwards
// (load and fuel-cell output both reduced) in the dearest running period.  The cooperative variant re-solves the joint program, the
// self-conversion variant the ADN alone.
struct MarginalCost {
  double value = 0.0;  // $/kWh
  int period = -1;
  double step_kwh = 1.0;
  bool backward = false;
};
MarginalCost conversion_marginal_cost(const Scenario& s, double step_kwh = 1.0);

}  // namespace hcng
