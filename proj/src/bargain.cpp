#include "hcng/bargain.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <numeric>

#include "hcng/error.hpp"

namespace hcng {

namespace {

using conic::LinExpr;
using conic::Program;

double mean(const Series& v) {
  if (v.empty()) return 0.0;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

// Fuel-cell intake cap in m3/h at the given heating value.
double intake_cap(const Scenario& s, const FuelCell& f, double hhv) {
  return f.rated_kw / sofc_power_kw(f, 1.0, hhv, s);
}

std::vector<int> adn_coupled(const AdnModel& m) {
  std::vector<int> ids;
  for (const auto& v : m.et_power) ids.insert(ids.end(), v.begin(), v.end());
  for (const auto& v : m.sofc_gas) ids.insert(ids.end(), v.begin(), v.end());
  return ids;
}

std::vector<int> gdn_coupled(const GdnModel& m) {
  std::vector<int> ids;
  for (const auto& v : m.et_power) ids.insert(ids.end(), v.begin(), v.end());
  for (const auto& v : m.g2p) ids.insert(ids.end(), v.begin(), v.end());
  return ids;
}

// Adds lin'x + sum rho_i/2 (x_i - z_i)^2 up to a constant.
void add_proximal(Program& p, const std::vector<int>& ids, const std::vector<double>& lin,
                  const std::vector<double>& rho, const std::vector<double>& z) {
  for (std::size_t i = 0; i < ids.size(); ++i) {
    p.add_cost(ids[i], lin[i] - rho[i] * z[i]);
    p.add_quadratic_cost(ids[i], ids[i], 0.5 * rho[i]);
  }
}

std::vector<double> solve_local(Program& p, const std::vector<int>& ids, const Scenario& s,
                                const char* who) {
  conic::Solution sol = conic::solve(p, s.algo.solver_tol);
  if (!sol.optimal())
    throw SolverError(std::string(who) + " local ADMM solve failed: " + conic::to_string(sol.status) +
                      " " + sol.diagnostics);
  std::vector<double> x(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) x[i] = sol.value(ids[i]);
  return x;
}

TradeDecision clip_quantities(const Scenario& s, std::vector<double> x, const BlendState& blend) {
  const int T = s.periods();
  std::size_t i = 0;
  for (const auto& e : s.devices.electrolyzers)
    for (int t = 0; t < T; ++t, ++i) x[i] = std::clamp(x[i], 0.0, e.rated_kw);
  for (const auto& f : s.devices.fuel_cells)
    for (int t = 0; t < T; ++t, ++i) x[i] = std::clamp(x[i], 0.0, intake_cap(s, f, blend.hhv_mix[t]));
  return unflatten_quantities(s, x);
}

// Own costs (no payments) of both operators with the quantities fixed.
void evaluate_own(const Scenario& s, QuantityResult& q, const BlendState& blend) {
  q.adn_own = solve_adn(s, q.trade, blend).cost.total;
  q.gdn_own = solve_gdn_at(s, q.trade, blend).cost.total;
  q.blend = blend;
}

double max_scaled(const std::vector<double>& a, const std::vector<double>& b,
                  const std::vector<double>& scale) {
  double r = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) r = std::max(r, std::abs(a[i] - b[i]) / scale[i]);
  return r;
}

bool has_trade_links(const Scenario& s) {
  return s.variant == ModelVariant::Cooperative &&
         !(s.devices.electrolyzers.empty() && s.devices.fuel_cells.empty());
}

// Per-price reference values: grid electricity price for P2G, gas price for G2P.
struct PriceSpace {
  std::vector<double> ref, cap, grad, scale;  // grad = d(transfer)/d(price)
};

// G2P prices in a traded period stop at the ADN's break-even: gas bought
// for the fuel cells never costs more per kWh than the grid.
PriceSpace price_space(const Scenario& s, const TradeDecision& q, const BlendState& blend) {
  const int T = s.periods();
  const double dt = s.market.dt_hours;
  const double k = s.algo.price_cap_factor;
  PriceSpace ps;
  const double mu = mean(s.market.electricity_price), eps = mean(s.market.gas_price);
  for (int t = 0; t < T; ++t) {
    const double r = s.market.electricity_price[t];
    ps.ref.push_back(r);
    ps.cap.push_back(k * (r > 0 ? r : mu));
    ps.scale.push_back(mu);
    double v = 0.0;
    for (const auto& e : q.p2g_kw) v += e[t];
    ps.grad.push_back(v * dt);
  }
  for (int t = 0; t < T; ++t) {
    const double r = s.market.gas_price[t];
    ps.ref.push_back(r);
    double cap = k * (r > 0 ? r : eps);
    double v = 0.0;
    for (std::size_t j = 0; j < q.g2p_m3h.size(); ++j) {
      if (q.g2p_m3h[j][t] <= 0.0) continue;
      v += q.g2p_m3h[j][t];
      const FuelCell& f = s.devices.fuel_cells[j];
      const double kwh_per_m3 = sofc_power_kw(f, 1.0, blend.hhv_mix[t], s);
      const double unit = f.capital_cost / (f.rated_kw * f.lifetime_h);
      cap = std::min(cap, std::max(0.0, (s.market.electricity_price[t] - unit) * kwh_per_m3));
    }
    ps.cap.push_back(cap);
    ps.scale.push_back(eps);
    ps.grad.push_back(-v * dt);
  }
  return ps;
}

double transfer_at(const PriceSpace& ps, const std::vector<double>& price) {
  double v = 0.0;
  for (std::size_t i = 0; i < price.size(); ++i) v += ps.grad[i] * price[i];
  return v;
}

PriceResult split_prices(const Scenario& s, std::vector<double> price) {
  const int T = s.periods();
  PriceResult r;
  r.p2g_price.assign(price.begin(), price.begin() + T);
  r.g2p_price.assign(price.begin() + T, price.end());
  return r;
}

std::vector<std::string> price_variable_ids(const Scenario& s) {
  std::vector<std::string> ids;
  for (int t = 0; t < s.periods(); ++t) ids.push_back("p2g_price[" + std::to_string(t) + "]");
  for (int t = 0; t < s.periods(); ++t) ids.push_back("g2p_price[" + std::to_string(t) + "]");
  return ids;
}

BargainOutcome disagreement_outcome(const Disagreement& d, const Scenario& s) {
  BargainOutcome o;
  o.c0_adn = o.adn_cost = d.adn_cost;
  o.c0_gdn = o.gdn_cost = d.gdn_cost;
  o.trade = TradeDecision::zero(s);
  o.adn = d.adn;
  o.gdn = d.gdn;
  o.blend = d.gdn.schedule.blend;
  o.blend_rounds = d.gdn.blend_iterations;
  return o;
}

}  // namespace

Disagreement solve_independent(const Scenario& s) {
  const TradeDecision none = TradeDecision::zero(s);
  Disagreement d;
  d.gdn = solve_gdn(s, none);
  d.adn = solve_adn(s, none, BlendState::pure_methane(s.periods(), s.blend));
  d.adn_cost = d.adn.cost.total;
  d.gdn_cost = d.gdn.cost.total;
  return d;
}

std::vector<std::string> trade_variable_ids(const Scenario& s) {
  std::vector<std::string> ids;
  for (const auto& e : s.devices.electrolyzers)
    for (int t = 0; t < s.periods(); ++t) ids.push_back("p2g[" + e.id + "," + std::to_string(t) + "]");
  for (const auto& f : s.devices.fuel_cells)
    for (int t = 0; t < s.periods(); ++t) ids.push_back("g2p[" + f.id + "," + std::to_string(t) + "]");
  return ids;
}

std::vector<double> trade_scales(const Scenario& s) {
  std::vector<double> sc;
  for (const auto& e : s.devices.electrolyzers) sc.insert(sc.end(), s.periods(), e.rated_kw);
  for (const auto& f : s.devices.fuel_cells)
    sc.insert(sc.end(), s.periods(), intake_cap(s, f, s.blend.hhv_ch4));
  return sc;
}

std::vector<double> flatten_quantities(const TradeDecision& d) {
  std::vector<double> x;
  for (const auto& v : d.p2g_kw) x.insert(x.end(), v.begin(), v.end());
  for (const auto& v : d.g2p_m3h) x.insert(x.end(), v.begin(), v.end());
  return x;
}

TradeDecision unflatten_quantities(const Scenario& s, const std::vector<double>& x) {
  TradeDecision d = TradeDecision::zero(s);
  const int T = s.periods();
  std::size_t i = 0;
  for (auto& v : d.p2g_kw)
    for (int t = 0; t < T; ++t) v[t] = x.at(i++);
  for (auto& v : d.g2p_m3h)
    for (int t = 0; t < T; ++t) v[t] = x.at(i++);
  return d;
}

void couple_trade(Program& p, const GdnModel& gdn, const AdnModel& adn) {
  const auto g = gdn_coupled(gdn), a = adn_coupled(adn);
  if (g.size() != a.size()) throw std::invalid_argument("trade links differ between the two models");
  for (std::size_t i = 0; i < g.size(); ++i)
    p.add_equality(LinExpr::var(g[i]) - LinExpr::var(a[i]), 0.0, "trade link " + std::to_string(i));
}

JointProblem build_joint_problem(const Scenario& s, const BlendState& blend) {
  JointProblem jp;
  jp.gdn = add_gdn(jp.program, s, blend);
  jp.adn = add_adn(jp.program, s, blend);
  couple_trade(jp.program, jp.gdn, jp.adn);
  jp.program.add_cost(jp.gdn.own_cost);
  jp.program.add_cost(jp.gdn.penalty);
  jp.program.add_cost(jp.adn.own_cost);
  jp.program.add_cost(jp.adn.penalty);
  return jp;
}

QuantityResult solve_q1_centralized(const Scenario& s, const BlendState& blend) {
  JointProblem jp = build_joint_problem(s, blend);
  conic::Solution sol = conic::solve(jp.program, s.algo.solver_tol);
  if (!sol.optimal())
    throw SolverError(std::string("joint trade program failed: ") + conic::to_string(sol.status) +
                      " " + sol.diagnostics);
  std::vector<double> x;
  for (int v : gdn_coupled(jp.gdn)) x.push_back(sol.value(v));
  QuantityResult q;
  q.trade = clip_quantities(s, x, blend);
  evaluate_own(s, q, blend);
  return q;
}

QuantityResult solve_q1_admm(const Scenario& s, const BlendState& blend, AdmmState& st) {
  const auto scale = trade_scales(s);
  const std::size_t n = scale.size();
  if (st.consensus.size() != n) {
    st.consensus.assign(n, 0.0);
    st.multiplier.assign(n, 0.0);
    st.rho.clear();
    const double dt = s.market.dt_hours;
    const double per_kw = mean(s.market.electricity_price) * dt;
    const double per_m3 = mean(s.market.gas_price) * dt;
    std::size_t i = 0;
    for (std::size_t k = 0; k < s.devices.electrolyzers.size(); ++k)
      for (int t = 0; t < s.periods(); ++t, ++i) st.rho.push_back(s.algo.rho[0] * per_kw / scale[i]);
    for (std::size_t k = 0; k < s.devices.fuel_cells.size(); ++k)
      for (int t = 0; t < s.periods(); ++t, ++i) st.rho.push_back(s.algo.rho[1] * per_m3 / scale[i]);
  }

  QuantityResult q;
  q.trace.stage = "q1";
  q.trace.variables = trade_variable_ids(s);
  std::vector<double>& z = st.consensus;
  std::vector<double>& lam = st.multiplier;

  for (int it = 1; it <= s.algo.admm_max_iter; ++it) {
    std::vector<double> neg(n);
    for (std::size_t i = 0; i < n; ++i) neg[i] = -lam[i];
    // The two local solves only read the shared snapshot (z, lam).
    auto adn_job = std::async(std::launch::async, [&] {
      AdnProblem p = build_adn_problem(s, nullptr, blend);
      const auto ids = adn_coupled(p.model);
      add_proximal(p.program, ids, lam, st.rho, z);
      return solve_local(p.program, ids, s, "ADN");
    });
    GdnProblem gp = build_gdn_problem(s, nullptr, blend);
    const auto gids = gdn_coupled(gp.model);
    add_proximal(gp.program, gids, neg, st.rho, z);
    std::vector<double> xg = solve_local(gp.program, gids, s, "GDN");
    std::vector<double> xa = adn_job.get();

    const std::vector<double> z_prev = z;
    for (std::size_t i = 0; i < n; ++i) {
      z[i] = 0.5 * (xa[i] + xg[i]);
      lam[i] += st.rho[i] * (xa[i] - z[i]);
    }
    AdmmIteration rec;
    rec.iteration = ++st.total_iterations;
    rec.primal_residual = max_scaled(xa, xg, scale);
    rec.dual_residual = max_scaled(z, z_prev, scale);
    rec.adn = std::move(xa);
    rec.gdn = std::move(xg);
    rec.multiplier = lam;
    const bool done = rec.primal_residual <= s.algo.admm_tol && rec.dual_residual <= s.algo.admm_tol;
    q.trace.iterations.push_back(std::move(rec));
    if (done) {
      q.trace.converged = true;
      break;
    }
  }
  q.converged = q.trace.converged;
  q.trade = clip_quantities(s, z, blend);
  evaluate_own(s, q, blend);
  return q;
}

QuantityResult agree_quantities(const Scenario& s, QuantityMethod method) {
  BlendState blend = BlendState::pure_methane(s.periods(), s.blend);
  AdmmState st;
  AdmmTrace trace;
  bool converged = true;
  for (int r = 1; r <= s.algo.blend_max_iter; ++r) {
    QuantityResult q = method == QuantityMethod::Admm ? solve_q1_admm(s, blend, st)
                                                      : solve_q1_centralized(s, blend);
    if (method == QuantityMethod::Admm) {
      trace.stage = q.trace.stage;
      trace.variables = q.trace.variables;
      for (auto& it : q.trace.iterations) trace.iterations.push_back(std::move(it));
      converged = converged && q.converged;
    }
    const GdnResult g = solve_gdn_at(s, q.trade, blend);
    BlendState next = BlendState::from_volumes(g.schedule.total_h2_injection(), g.schedule.hgn, s.blend);
    if (next.max_change(blend) <= s.algo.blend_tol) {
      q.blend_rounds = r;
      trace.converged = converged;
      q.trace = std::move(trace);
      q.converged = converged;
      return q;
    }
    blend = next;
  }
  throw ConvergenceError("blend fixed point around the trade agreement did not settle within " +
                         std::to_string(s.algo.blend_max_iter) + " rounds");
}

double net_transfer(const TradeDecision& q, const Series& p2g_price, const Series& g2p_price, double dt) {
  double v = 0.0;
  for (const auto& e : q.p2g_kw)
    for (std::size_t t = 0; t < e.size(); ++t) v += p2g_price.at(t) * e[t] * dt;
  for (const auto& f : q.g2p_m3h)
    for (std::size_t t = 0; t < f.size(); ++t) v -= g2p_price.at(t) * f[t] * dt;
  return v;
}

PriceResult solve_q2_admm(const Scenario& s, const TradeDecision& quantities, const BlendState& blend,
                          double adn_gain, double gdn_gain) {
  const PriceSpace ps = price_space(s, quantities, blend);
  const std::size_t n = ps.ref.size();
  const double margin = s.algo.log_margin * std::max(std::abs(adn_gain) + std::abs(gdn_gain), 1.0);

  // Each side's best reachable gain must clear the margin or its local
  // problem has no interior.
  double t_lo = 0.0, t_hi = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    t_lo += std::min(0.0, ps.grad[i] * ps.cap[i]);
    t_hi += std::max(0.0, ps.grad[i] * ps.cap[i]);
  }
  if (adn_gain + t_hi <= margin || gdn_gain - t_lo <= margin)
    throw DomainError("price bounds leave no room for a positive surplus on both sides");

  std::vector<double> z(n), lam(n, 0.0), rho(n);
  for (std::size_t i = 0; i < n; ++i) {
    z[i] = std::clamp(ps.ref[i], 0.0, ps.cap[i]);
    rho[i] = s.algo.rho[i < n / 2 ? 2 : 3] / (ps.scale[i] * ps.scale[i]);
  }

  auto local = [&](double sign, double gain, const std::vector<double>& lin) {
    Program p;
    std::vector<int> ids;
    LinExpr g(gain);
    for (std::size_t i = 0; i < n; ++i) {
      ids.push_back(p.add_variable("price" + std::to_string(i), 0.0, ps.cap[i]));
      g.add(ids.back(), sign * ps.grad[i]);
    }
    p.add_greater_equal(g, margin, "surplus margin");
    p.add_log_term(-1.0, g, "log surplus");
    add_proximal(p, ids, lin, rho, z);
    return solve_local(p, ids, s, sign > 0 ? "ADN price" : "GDN price");
  };

  PriceResult out;
  out.trace.stage = "q2";
  out.trace.variables = price_variable_ids(s);
  for (int it = 1; it <= s.algo.admm_max_iter; ++it) {
    std::vector<double> neg(n);
    for (std::size_t i = 0; i < n; ++i) neg[i] = -lam[i];
    auto adn_job = std::async(std::launch::async, [&] { return local(1.0, adn_gain, lam); });
    std::vector<double> xg = local(-1.0, gdn_gain, neg);
    std::vector<double> xa = adn_job.get();

    const std::vector<double> z_prev = z;
    for (std::size_t i = 0; i < n; ++i) {
      z[i] = 0.5 * (xa[i] + xg[i]);
      lam[i] += rho[i] * (xa[i] - z[i]);
    }
    AdmmIteration rec;
    rec.iteration = it;
    rec.primal_residual = max_scaled(xa, xg, ps.scale);
    rec.dual_residual = max_scaled(z, z_prev, ps.scale);
    rec.adn = std::move(xa);
    rec.gdn = std::move(xg);
    rec.multiplier = lam;
    const bool done = rec.primal_residual <= s.algo.admm_tol && rec.dual_residual <= s.algo.admm_tol;
    out.trace.iterations.push_back(std::move(rec));
    if (done) {
      out.trace.converged = true;
      break;
    }
  }
  PriceResult r = split_prices(s, z);
  r.trace = std::move(out.trace);
  r.converged = r.trace.converged;
  r.method = PriceMethod::Admm;
  return r;
}

PriceResult solve_q2_bisection(const Scenario& s, const TradeDecision& quantities,
                               const BlendState& blend, double adn_gain, double gdn_gain) {
  const PriceSpace ps = price_space(s, quantities, blend);
  const std::size_t n = ps.ref.size();
  double lo = 0.0, hi = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    lo += std::min(0.0, ps.grad[i] * ps.cap[i]);
    hi += std::max(0.0, ps.grad[i] * ps.cap[i]);
  }
  // Surplus difference (adn - gdn) grows with the transfer.
  auto diff = [&](double t) { return (adn_gain + t) - (gdn_gain - t); };
  double target;
  if (diff(lo) >= 0.0) {
    target = lo;
  } else if (diff(hi) <= 0.0) {
    target = hi;
  } else {
    const double tol = 1e-12 * std::max(1.0, std::abs(adn_gain) + std::abs(gdn_gain));
    for (int k = 0; k < 200 && hi - lo > tol; ++k) {
      const double mid = 0.5 * (lo + hi);
      (diff(mid) < 0.0 ? lo : hi) = mid;
    }
    target = 0.5 * (lo + hi);
  }

  // Spread the required change over the traded periods in proportion to
  // their traded value, starting from the reference prices.
  std::vector<double> price(n);
  for (std::size_t i = 0; i < n; ++i) price[i] = std::clamp(ps.ref[i], 0.0, ps.cap[i]);
  for (int round = 0; round < 100; ++round) {
    const double gap = target - transfer_at(ps, price);
    if (std::abs(gap) <= 1e-10 * std::max(1.0, std::abs(target))) break;
    double norm = 0.0;
    std::vector<bool> free(n, false);
    for (std::size_t i = 0; i < n; ++i) {
      const double dir = gap * ps.grad[i];
      free[i] = ps.grad[i] != 0.0 && ((dir > 0 && price[i] < ps.cap[i]) || (dir < 0 && price[i] > 0.0));
      if (free[i]) norm += ps.grad[i] * ps.grad[i];
    }
    if (norm == 0.0) break;
    const double theta = gap / norm;
    for (std::size_t i = 0; i < n; ++i)
      if (free[i]) price[i] = std::clamp(price[i] + theta * ps.grad[i], 0.0, ps.cap[i]);
  }
  PriceResult r = split_prices(s, price);
  r.trace.stage = "q2";
  r.trace.variables = price_variable_ids(s);
  r.trace.converged = true;
  r.method = PriceMethod::TransferBisection;
  return r;
}

double surplus_threshold(const Scenario& s, double c0_adn, double c0_gdn) {
  return s.algo.log_margin * (std::abs(c0_adn) + std::abs(c0_gdn));
}

BargainOutcome settle(const Scenario& s, const Disagreement& d, const QuantityResult& q,
                      PriceMethod method) {
  const double adn_gain = d.adn_cost - q.adn_own;
  const double gdn_gain = d.gdn_cost - q.gdn_own;
  if (adn_gain + gdn_gain <= surplus_threshold(s, d.adn_cost, d.gdn_cost)) {
    BargainOutcome o = disagreement_outcome(d, s);
    o.q1 = q.trace;
    o.converged = q.converged;
    return o;
  }
  PriceResult pr;
  if (method == PriceMethod::Admm) {
    try {
      pr = solve_q2_admm(s, q.trade, q.blend, adn_gain, gdn_gain);
    } catch (const DomainError&) {
      pr = solve_q2_bisection(s, q.trade, q.blend, adn_gain, gdn_gain);
    }
  } else {
    pr = solve_q2_bisection(s, q.trade, q.blend, adn_gain, gdn_gain);
  }
  BargainOutcome o;
  o.bargained = true;
  o.c0_adn = d.adn_cost;
  o.c0_gdn = d.gdn_cost;
  o.trade = q.trade;
  o.trade.p2g_price = pr.p2g_price;
  o.trade.g2p_price = pr.g2p_price;
  o.adn = solve_adn(s, o.trade, q.blend);
  o.gdn = solve_gdn_at(s, o.trade, q.blend);
  o.gdn.blend_iterations = q.blend_rounds;
  o.adn_cost = o.adn.cost.total;
  o.gdn_cost = o.gdn.cost.total;
  o.blend = q.blend;
  o.blend_rounds = q.blend_rounds;
  o.q1 = q.trace;
  o.q2 = std::move(pr.trace);
  o.converged = q.converged && pr.converged;
  return o;
}

BargainOutcome bargain(const Scenario& s, const BargainOptions& opts) {
  const Disagreement d = solve_independent(s);
  if (!has_trade_links(s)) return disagreement_outcome(d, s);
  const QuantityResult q = agree_quantities(s, opts.quantities);
  return settle(s, d, q, opts.prices);
}

double nash_product(const BargainOutcome& o) {
  if (!o.bargained) return 0.0;
  return o.adn_surplus() * o.gdn_surplus();
}

MarginalCost conversion_marginal_cost(const Scenario& s, double step_kwh) {
  if (s.devices.fuel_cells.empty() || s.variant == ModelVariant::BatteryOnly)
    throw DomainError("no fuel cells to deliver converted energy");
  const int T = s.periods();
  const double dt = s.market.dt_hours;
  const bool joint = s.variant == ModelVariant::Cooperative;
  const BlendState blend = joint ? agree_quantities(s, QuantityMethod::Centralized).blend
                                 : BlendState::pure_methane(T, s.blend);

  struct Built {
    Program prog;
    std::vector<std::vector<int>> sofc;
    LinExpr cost;  // own costs, penalties left out
  };
  auto build = [&](const Scenario& sc) {
    Built b;
    if (joint) {
      JointProblem jp = build_joint_problem(sc, blend);
      b.prog = std::move(jp.program);
      b.sofc = jp.adn.sofc_power;
      b.cost = jp.gdn.own_cost + jp.adn.own_cost;
    } else {
      AdnProblem ap = build_adn_problem(sc, nullptr, blend);
      b.prog = std::move(ap.program);
      b.sofc = ap.model.sofc_power;
      b.cost = ap.model.own_cost;
    }
    return b;
  };

  Built base = build(s);
  const conic::Solution b0 = conic::solve(base.prog, s.algo.solver_tol);
  if (!b0.optimal()) throw SolverError("marginal-cost base solve failed");

  // Forward difference in the dearest period with headroom; where the fuel
  // cells run at rating all day, a backward difference instead.
  MarginalCost mc;
  mc.step_kwh = step_kwh;
  int unit = -1;
  double best_price = -1.0;
  for (int pass = 0; pass < 2 && unit < 0; ++pass) {
    mc.backward = pass == 1;
    for (int t = 0; t < T; ++t)
      for (std::size_t k = 0; k < base.sofc.size(); ++k) {
        const double out = b0.value(base.sofc[k][t]);
        const double room = mc.backward ? out : s.devices.fuel_cells[k].rated_kw - out;
        if (room * dt >= 2.0 * step_kwh && s.market.electricity_price[t] > best_price) {
          best_price = s.market.electricity_price[t];
          mc.period = t;
          unit = static_cast<int>(k);
        }
      }
  }
  if (unit < 0) throw DomainError("fuel cells have neither output nor headroom to perturb");

  // The step is a load change at the fuel cell's bus that the fuel cell
  // itself must follow, so the grid position stays where it was.
  const double dp = (mc.backward ? -step_kwh : step_kwh) / dt;
  Scenario moved = s;
  const FuelCell& f = s.devices.fuel_cells[unit];
  moved.power.buses[moved.power.bus_index(f.bus)].p_load[mc.period] += dp;
  Built up = build(moved);
  const LinExpr out = LinExpr::var(up.sofc[unit][mc.period]);
  const double target = b0.value(base.sofc[unit][mc.period]) + dp;
  if (mc.backward)
    up.prog.add_less_equal(out, target, "forced conversion");
  else
    up.prog.add_greater_equal(out, target, "forced conversion");
  const conic::Solution b1 = conic::solve(up.prog, s.algo.solver_tol);
  if (!b1.optimal()) throw SolverError("marginal-cost perturbed solve failed");
  mc.value = (up.cost.evaluate(b1.x) - base.cost.evaluate(b0.x)) / (dp * dt);
  return mc;
}

}  // namespace hcng
