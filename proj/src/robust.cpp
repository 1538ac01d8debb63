#include "hcng/robust.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "hcng/error.hpp"

namespace hcng {

namespace {

using conic::LinExpr;
using conic::Program;

bool close(double a, double b, double tol) {
  return std::abs(a - b) <= tol * std::max(1.0, std::max(std::abs(a), std::abs(b)));
}

std::vector<Series> zeros_like(const Scenario& s) {
  return std::vector<Series>(s.devices.batteries.size(), Series(s.periods(), 0.0));
}

LinExpr battery_net(const AdnModel& m, std::size_t k, int t) {
  LinExpr e = LinExpr::var(m.bat_discharge[k][t]);
  e.add(m.bat_charge[k][t], 1.0);
  return e;
}

struct BuiltRecourse {
  AdnProblem prob;
  conic::Solution sol;
  bool infeasible = false;
};

// Recourse program at u; adjustments free, zero (no battery recourse) or
// fixed to a given profile.
BuiltRecourse recourse_program(const Scenario& s, const FirstStage& y, const Realization& u,
                               const RecourseOptions& opts, const std::vector<Series>* fixed_adjust) {
  auto build = [&](bool slack) {
    AdnOptions ao;
    ao.realization = &u;
    ao.baseline_battery = &y.battery_plan;
    if (slack) ao.shed_penalty = shed_penalty(s);
    AdnProblem p = build_adn_problem(s, &y.trade, y.blend, ao);
    for (std::size_t k = 0; k < p.model.bat_adjust.size(); ++k)
      for (int t = 0; t < p.model.periods; ++t) {
        if (fixed_adjust)
          p.program.fix(p.model.bat_adjust[k][t], fixed_adjust->at(k).at(t));
        else if (!opts.battery_recourse)
          p.program.fix(p.model.bat_adjust[k][t], 0.0);
      }
    return p;
  };
  BuiltRecourse r;
  r.prob = build(false);
  r.sol = conic::solve(r.prob.program, s.algo.solver_tol);
  if (r.sol.status == conic::Status::Infeasible) {
    r.infeasible = true;
    r.prob = build(true);
    r.sol = conic::solve(r.prob.program, s.algo.solver_tol);
  }
  if (!r.sol.optimal())
    throw SolverError(std::string("recourse solve failed: ") + conic::to_string(r.sol.status) + " " +
                      r.sol.diagnostics);
  return r;
}

FirstStage first_stage_from(const Scenario& s, const Program& p, const conic::Solution& sol,
                            const GdnModel& gdn, const AdnModel& forecast, const BlendState& blend) {
  FirstStage y;
  y.blend = blend;
  y.trade = TradeDecision::zero(s);
  if (s.variant == ModelVariant::Cooperative) {
    for (std::size_t k = 0; k < gdn.et_power.size(); ++k)
      for (int t = 0; t < gdn.periods; ++t)
        y.trade.p2g_kw[k][t] = std::max(0.0, sol.value(gdn.et_power[k][t]));
    for (std::size_t k = 0; k < gdn.g2p.size(); ++k)
      for (int t = 0; t < gdn.periods; ++t) y.trade.g2p_m3h[k][t] = std::max(0.0, sol.value(gdn.g2p[k][t]));
  }
  for (std::size_t k = 0; k < forecast.bat_discharge.size(); ++k) {
    Series plan;
    for (int t = 0; t < forecast.periods; ++t) plan.push_back(battery_net(forecast, k, t).evaluate(sol.x));
    y.battery_plan.push_back(plan);
  }
  y.gdn = extract_gdn(gdn, s, sol, blend);
  y.gdn_cost = gdn_cost(s, y.gdn, y.trade).total;
  y.gdn_objective = gdn.own_cost.evaluate(sol.x) + gdn.penalty.evaluate(sol.x);
  (void)p;
  return y;
}

bool same_realization(const Realization& a, const Realization& b) {
  return a.load_kw == b.load_kw && a.der_kw == b.der_kw;
}

}  // namespace

const char* to_string(UncertaintyCase c) {
  switch (c) {
    case UncertaintyCase::Case1: return "case1";
    case UncertaintyCase::Case2: return "case2";
    case UncertaintyCase::Case3: return "case3";
    case UncertaintyCase::Case4: return "case4";
  }
  return "?";
}

UncertaintyCase parse_case(const std::string& text) {
  if (text == "case1") return UncertaintyCase::Case1;
  if (text == "case2") return UncertaintyCase::Case2;
  if (text == "case3") return UncertaintyCase::Case3;
  if (text == "case4") return UncertaintyCase::Case4;
  throw ParseError("unknown uncertainty case '" + text + "' (expected case1..case4)");
}

std::vector<UncertaintyBox::Pair> UncertaintyBox::pairs() const {
  std::vector<Pair> out;
  for (std::size_t j = 0; j < lower.load_kw.size(); ++j)
    for (std::size_t t = 0; t < lower.load_kw[j].size(); ++t)
      if (lower.load_kw[j][t] < upper.load_kw[j][t])
        out.push_back({true, static_cast<int>(j), static_cast<int>(t)});
  for (std::size_t k = 0; k < lower.der_kw.size(); ++k)
    for (std::size_t t = 0; t < lower.der_kw[k].size(); ++t)
      if (lower.der_kw[k][t] < upper.der_kw[k][t])
        out.push_back({false, static_cast<int>(k), static_cast<int>(t)});
  return out;
}

bool UncertaintyBox::contains(const Realization& u, double tol) const {
  auto inside = [&](const std::vector<Series>& v, const std::vector<Series>& lo,
                    const std::vector<Series>& hi) {
    if (v.size() != lo.size()) return false;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (v[i].size() != lo[i].size()) return false;
      for (std::size_t t = 0; t < v[i].size(); ++t) {
        const double slack = tol * std::max(1.0, std::abs(hi[i][t]));
        if (v[i][t] < lo[i][t] - slack || v[i][t] > hi[i][t] + slack) return false;
      }
    }
    return true;
  };
  return inside(u.load_kw, lower.load_kw, upper.load_kw) && inside(u.der_kw, lower.der_kw, upper.der_kw);
}

bool UncertaintyBox::is_vertex(const Realization& u, double tol) const {
  if (!contains(u, tol)) return false;
  for (const Pair& p : pairs()) {
    const double v = p.load ? u.load_kw[p.index][p.period] : u.der_kw[p.index][p.period];
    const double lo = p.load ? lower.load_kw[p.index][p.period] : lower.der_kw[p.index][p.period];
    const double hi = p.load ? upper.load_kw[p.index][p.period] : upper.der_kw[p.index][p.period];
    if (!close(v, lo, tol) && !close(v, hi, tol)) return false;
  }
  return true;
}

Realization UncertaintyBox::vertex(const std::vector<bool>& upper_bits) const {
  const auto ps = pairs();
  if (upper_bits.size() != ps.size()) throw std::invalid_argument("one bit per uncertain pair expected");
  Realization u = lower;
  for (std::size_t i = 0; i < ps.size(); ++i) {
    if (!upper_bits[i]) continue;
    const Pair& p = ps[i];
    if (p.load)
      u.load_kw[p.index][p.period] = upper.load_kw[p.index][p.period];
    else
      u.der_kw[p.index][p.period] = upper.der_kw[p.index][p.period];
  }
  return u;
}

UncertaintyBox uncertainty_box(const Scenario& s, UncertaintyCase c) {
  const double load_r = (c == UncertaintyCase::Case2 || c == UncertaintyCase::Case4)
                            ? s.uncertainty.load_radius
                            : 0.0;
  const double der_r = (c == UncertaintyCase::Case3 || c == UncertaintyCase::Case4)
                           ? s.uncertainty.der_radius
                           : 0.0;
  const bool up_only = s.uncertainty.orientation == BoxOrientation::AsymmetricUp;
  UncertaintyBox box;
  box.lower = box.upper = Realization::forecast(s);
  auto widen = [&](std::vector<Series>& lo, std::vector<Series>& hi, double r) {
    for (std::size_t i = 0; i < lo.size(); ++i)
      for (std::size_t t = 0; t < lo[i].size(); ++t) {
        const double f = lo[i][t];
        hi[i][t] = f * (1.0 + r);
        lo[i][t] = up_only ? f : f * (1.0 - r);
      }
  };
  widen(box.lower.load_kw, box.upper.load_kw, load_r);
  widen(box.lower.der_kw, box.upper.der_kw, der_r);
  return box;
}

double shed_penalty(const Scenario& s) {
  const auto& mu = s.market.electricity_price;
  return 100.0 * std::max(1.0, *std::max_element(mu.begin(), mu.end()));
}

Recourse solve_sp1(const Scenario& s, const FirstStage& y, const Realization& u,
                   const RecourseOptions& opts) {
  BuiltRecourse b = recourse_program(s, y, u, opts, nullptr);
  Recourse r;
  r.schedule = extract_adn(b.prob.model, s, b.sol);
  r.cost = adn_cost(s, r.schedule, y.trade);
  r.value = b.sol.objective;
  r.adjustment = r.schedule.bat_adjust;
  r.infeasible = b.infeasible;
  r.solution = std::move(b.sol);
  return r;
}

VertexStep solve_sp2(const Scenario& s, const FirstStage& y, const Realization& u,
                     const std::vector<Series>& adjustment, const UncertaintyBox& box,
                     const RecourseOptions& opts) {
  const BuiltRecourse b = recourse_program(s, y, u, opts, &adjustment);
  const AdnModel& m = b.prob.model;
  VertexStep step;
  step.value = b.sol.objective;
  step.u = box.lower;
  for (const auto& p : box.pairs()) {
    const conic::RowRef row = p.load ? m.balance_p[p.index][p.period] : m.der_avail[p.index][p.period];
    const double g = b.sol.sensitivity(b.prob.program, row);
    if (g <= 1e-9) continue;
    if (p.load)
      step.u.load_kw[p.index][p.period] = box.upper.load_kw[p.index][p.period];
    else
      step.u.der_kw[p.index][p.period] = box.upper.der_kw[p.index][p.period];
  }
  return step;
}

WorstCase solve_sp_bcd(const Scenario& s, const FirstStage& y, const UncertaintyBox& box,
                       const RecourseOptions& opts) {
  WorstCase w;
  w.value = -std::numeric_limits<double>::infinity();
  Realization u = Realization::forecast(s);
  if (!box.contains(u)) u = box.lower;
  std::vector<Realization> visited;
  for (int it = 1; it <= s.algo.bcd_max_iter; ++it) {
    w.iterations = it;
    Recourse rec = solve_sp1(s, y, u, opts);
    w.values.push_back(rec.value);
    if (rec.value > w.value) {
      w.value = rec.value;
      w.u = u;
      w.recourse = rec;
    }
    visited.push_back(u);
    const VertexStep step = solve_sp2(s, y, u, rec.adjustment, box, opts);
    const bool repeat = std::any_of(visited.begin(), visited.end(),
                                    [&](const Realization& v) { return same_realization(v, step.u); });
    if (repeat) {
      w.converged = true;
      break;
    }
    u = step.u;
  }
  return w;
}

MasterResult solve_mp(const Scenario& s, const std::vector<Cut>& cuts, const BlendState& blend,
                      const RecourseOptions& opts) {
  Program p;
  const bool coupled = s.variant == ModelVariant::Cooperative;
  const GdnModel gdn = add_gdn(p, s, blend);
  const AdnModel fore = add_adn(p, s, blend);
  if (coupled) couple_trade(p, gdn, fore);
  const int eta = p.add_variable("worst ADN cost");
  p.add_cost(gdn.own_cost);
  p.add_cost(gdn.penalty);
  p.add_cost(eta, 1.0);
  auto bound_eta = [&](const AdnModel& m, const std::string& name) {
    LinExpr e = LinExpr::var(eta);
    e -= m.own_cost;
    e -= m.penalty;
    p.add_greater_equal(e, 0.0, name);
  };
  bound_eta(fore, "forecast copy");

  // Cut copies carry their own dispatch.  With a zero baseline the copy's
  // adjustment variable is its full battery output; tying that to the plan
  // removes the battery recourse.
  const std::vector<Series> zero = zeros_like(s);
  std::vector<AdnModel> copies;
  for (std::size_t r = 0; r < cuts.size(); ++r) {
    AdnOptions ao;
    ao.realization = &cuts[r].u;
    ao.baseline_battery = &zero;
    if (cuts[r].infeasible) ao.shed_penalty = shed_penalty(s);
    AdnModel m = add_adn(p, s, blend, ao);
    if (coupled) couple_trade(p, gdn, m);
    if (!opts.battery_recourse)
      for (std::size_t k = 0; k < m.bat_discharge.size(); ++k)
        for (int t = 0; t < m.periods; ++t)
          p.add_equality(battery_net(m, k, t) - battery_net(fore, k, t), 0.0, "battery follows plan");
    bound_eta(m, "cut " + std::to_string(r));
    copies.push_back(std::move(m));
  }

  conic::Solution sol = conic::solve(p, s.algo.solver_tol);
  if (!sol.optimal()) {
    std::string which = cuts.empty() ? "the forecast copy" : "cut " + std::to_string(cuts.size() - 1);
    throw SolverError("robust master problem failed (" + std::string(conic::to_string(sol.status)) +
                      "); newest block: " + which);
  }
  MasterResult mr;
  mr.y = first_stage_from(s, p, sol, gdn, fore, blend);
  mr.lower_bound = sol.objective;
  mr.adn_forecast_value = fore.own_cost.evaluate(sol.x) + fore.penalty.evaluate(sol.x);
  for (const auto& m : copies) mr.copy_values.push_back(m.own_cost.evaluate(sol.x) + m.penalty.evaluate(sol.x));
  return mr;
}

double evaluate_first_stage(const Scenario& s, const FirstStage& y, const Realization& u,
                            const RecourseOptions& opts) {
  return y.gdn_objective + solve_sp1(s, y, u, opts).value;
}

FirstStage deterministic_first_stage(const Scenario& s) {
  const BlendState blend = s.variant == ModelVariant::Cooperative
                               ? agree_quantities(s, QuantityMethod::Centralized).blend
                               : solve_gdn(s, TradeDecision::zero(s)).schedule.blend;
  return solve_mp(s, {}, blend).y;
}

RobustSolution ccg(const Scenario& s, UncertaintyCase c, const RecourseOptions& opts) {
  const UncertaintyBox box = uncertainty_box(s, c);
  RobustSolution out;
  out.uncertainty = c;
  BlendState blend = deterministic_first_stage(s).blend;

  for (int round = 1; round <= s.algo.blend_max_iter; ++round) {
    out.converged = false;
    double ub_best = std::numeric_limits<double>::infinity();
    for (int r = 1; r <= s.algo.ccg_max_iter; ++r) {
      const MasterResult mp = solve_mp(s, out.cuts, blend, opts);
      WorstCase wc = solve_sp_bcd(s, mp.y, box, opts);
      const double ub = mp.y.gdn_objective + wc.value;
      if (ub < ub_best) {
        ub_best = ub;
        out.y = mp.y;
        out.worst = wc;
      }
      CcgIteration ci;
      ci.blend_round = round;
      ci.iteration = r;
      ci.lower_bound = mp.lower_bound;
      ci.upper_bound = ub;
      ci.best_upper_bound = ub_best;
      ci.gap = (ub_best - mp.lower_bound) / std::max(std::abs(ub_best), 1e-12);
      ci.bcd_iterations = wc.iterations;
      ci.bcd_converged = wc.converged;
      const bool known = std::any_of(out.cuts.begin(), out.cuts.end(),
                                     [&](const Cut& k) { return same_realization(k.u, wc.u); });
      if (!known) {
        out.cuts.push_back({wc.u, wc.recourse.adjustment, wc.recourse.infeasible});
        ci.cut = static_cast<int>(out.cuts.size()) - 1;
      }
      out.trace.push_back(ci);
      if (ci.gap <= s.algo.ccg_gap_tol) {
        out.converged = true;
        break;
      }
      if (known) break;  // no new information: the bounds cannot move any more
    }
    const BlendState next =
        BlendState::from_volumes(out.y.gdn.total_h2_injection(), out.y.gdn.hgn, s.blend);
    out.blend_rounds = round;
    if (next.max_change(blend) <= s.algo.blend_tol) return out;
    blend = next;
  }
  throw ConvergenceError("blend fixed point around the robust schedule did not settle");
}

RobustSettlement settle_robust(const Scenario& s, const RobustSolution& r) {
  RobustSettlement st;
  const Disagreement d = solve_independent(s);
  st.c0_gdn = d.gdn_cost;

  // The ADN alone: no trade, battery plan from its own forecast schedule.
  FirstStage alone;
  alone.trade = TradeDecision::zero(s);
  alone.blend = BlendState::pure_methane(s.periods(), s.blend);
  alone.battery_plan = d.adn.schedule.battery_net();
  const WorstCase w0 = solve_sp_bcd(s, alone, uncertainty_box(s, r.uncertainty));
  st.c0_adn = w0.recourse.cost.total;

  const double adn_own = r.worst.recourse.cost.total;
  const double gdn_own = r.y.gdn_cost;
  const double adn_gain = st.c0_adn - adn_own;
  const double gdn_gain = st.c0_gdn - gdn_own;
  st.trade = TradeDecision::zero(s);
  if (s.variant != ModelVariant::Cooperative ||
      adn_gain + gdn_gain <= surplus_threshold(s, st.c0_adn, st.c0_gdn)) {
    st.adn_cost = st.c0_adn;
    st.gdn_cost = st.c0_gdn;
    return st;
  }
  PriceResult pr;
  try {
    pr = solve_q2_admm(s, r.y.trade, r.y.blend, adn_gain, gdn_gain);
  } catch (const DomainError&) {
    pr = solve_q2_bisection(s, r.y.trade, r.y.blend, adn_gain, gdn_gain);
  }
  st.bargained = true;
  st.trade = r.y.trade;
  st.trade.p2g_price = pr.p2g_price;
  st.trade.g2p_price = pr.g2p_price;
  const double transfer = net_transfer(st.trade, pr.p2g_price, pr.g2p_price, s.market.dt_hours);
  st.adn_cost = adn_own - transfer;
  st.gdn_cost = gdn_own + transfer;
  st.q2 = std::move(pr.trace);
  return st;
}

}  // namespace hcng
