#include "hcng/gdn.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

#include "hcng/error.hpp"

namespace hcng {

using conic::LinExpr;
using conic::Program;

namespace {

struct Relax {
  bool pressure = false;
  bool tank = false;
};

// For each pipe, whether flow runs from -> to (true) or against the listed
// orientation.  Radial network, single source: direction away from the source.
std::vector<bool> pipe_orientation(const Scenario& s) {
  const auto& g = s.gas;
  const int n = static_cast<int>(g.nodes.size());
  std::vector<int> depth(n, -1);
  std::vector<std::vector<int>> adj(n);
  for (const auto& p : g.pipes) {
    const int a = g.node_index(p.from), b = g.node_index(p.to);
    adj[a].push_back(b);
    adj[b].push_back(a);
  }
  std::queue<int> q;
  const int src = g.node_index(g.source);
  depth[src] = 0;
  q.push(src);
  while (!q.empty()) {
    const int u = q.front();
    q.pop();
    for (int v : adj[u])
      if (depth[v] < 0) {
        depth[v] = depth[u] + 1;
        q.push(v);
      }
  }
  std::vector<bool> forward;
  for (const auto& p : g.pipes) forward.push_back(depth[g.node_index(p.from)] < depth[g.node_index(p.to)]);
  return forward;
}

GdnModel add_gdn_impl(Program& prog, const Scenario& s, const BlendState& blend,
                      const GdnOptions& opts, Relax relax) {
  const auto& g = s.gas;
  const auto& dev = s.devices;
  const int T = s.periods();
  const double dt = s.market.dt_hours;
  const int N = static_cast<int>(g.nodes.size());
  const int src = g.node_index(g.source);
  const double tau = opts.penalty_weight.value_or(s.pressure_penalty());
  const auto forward = pipe_orientation(s);

  GdnModel m;
  m.periods = T;
  m.dt = dt;
  m.conversion = gdn_owns_conversion(s);

  for (int t = 0; t < T; ++t)
    m.hgn.push_back(prog.add_variable("hgn[" + std::to_string(t) + "]", 0.0));

  for (const auto& nd : g.nodes) {
    std::vector<int> v;
    const double lo = relax.pressure ? 0.0 : nd.p_min;
    const double hi = relax.pressure ? 1e4 : nd.p_max;
    for (int t = 0; t < T; ++t)
      v.push_back(prog.add_variable("w[" + nd.id + "," + std::to_string(t) + "]", lo, hi));
    m.pressure.push_back(v);
  }
  for (const auto& p : g.pipes) {
    std::vector<int> v;
    for (int t = 0; t < T; ++t)
      v.push_back(prog.add_variable("G[" + p.id + "," + std::to_string(t) + "]", 0.0));
    m.flow.push_back(v);
  }

  m.h2_injection.assign(N, std::vector<int>(T, -1));
  if (m.conversion) {
    for (const auto& e : dev.electrolyzers) {
      std::vector<int> v;
      for (int t = 0; t < T; ++t)
        v.push_back(prog.add_variable("Pet[" + e.id + "," + std::to_string(t) + "]", 0.0, e.rated_kw));
      m.et_power.push_back(v);
      const int n = g.node_index(e.gas_node);
      for (int t = 0; t < T; ++t)
        if (m.h2_injection[n][t] < 0)
          m.h2_injection[n][t] =
              prog.add_variable("H2[" + e.gas_node + "," + std::to_string(t) + "]", 0.0);
    }
    for (const auto& h : dev.tanks) {
      std::vector<int> f, l;
      const double cap = relax.tank ? 1e12 : h.capacity_m3;
      for (int t = 0; t < T; ++t) {
        f.push_back(prog.add_variable("Ght[" + h.id + "," + std::to_string(t) + "]"));
        l.push_back(prog.add_variable("S[" + h.id + "," + std::to_string(t) + "]", 0.0, cap));
      }
      m.ht_flow.push_back(f);
      m.ht_level.push_back(l);
      const int n = g.node_index(h.gas_node);
      for (int t = 0; t < T; ++t)
        if (m.h2_injection[n][t] < 0)
          m.h2_injection[n][t] =
              prog.add_variable("H2[" + h.gas_node + "," + std::to_string(t) + "]", 0.0);
    }
    for (const auto& f : dev.fuel_cells) {
      std::vector<int> v;
      for (int t = 0; t < T; ++t) {
        const double cap = f.rated_kw * s.units.mj_per_kwh / (blend.hhv_mix[t] * f.efficiency);
        v.push_back(prog.add_variable("Gg2p[" + f.id + "," + std::to_string(t) + "]", 0.0, cap));
      }
      m.g2p.push_back(v);
    }
  }

  // Nodal balance with energy-equivalent loads under the supplied blend.
  m.balance.assign(N, {});
  for (int n = 0; n < N; ++n) {
    for (int t = 0; t < T; ++t) {
      LinExpr e;
      for (std::size_t p = 0; p < g.pipes.size(); ++p) {
        const int from = g.node_index(g.pipes[p].from), to = g.node_index(g.pipes[p].to);
        const int down = forward[p] ? to : from;
        const int up = forward[p] ? from : to;
        if (down == n) e.add(m.flow[p][t], 1.0);
        if (up == n) e.add(m.flow[p][t], -1.0);
      }
      if (n == src) e.add(m.hgn[t], 1.0);
      if (m.h2_injection[n][t] >= 0) e.add(m.h2_injection[n][t], 1.0);
      for (std::size_t k = 0; k < m.g2p.size(); ++k)
        if (g.node_index(dev.fuel_cells[k].gas_node) == n) e.add(m.g2p[k][t], -1.0);
      const double load =
          equivalent_gas_load(g.nodes[n].load[t], blend.hhv_mix[t], s.blend.hhv_ch4);
      m.balance[n].push_back(prog.add_equality(
          e, load, "gas balance " + g.nodes[n].id + " t" + std::to_string(t)));
    }
  }

  if (m.conversion) {
    // Hydrogen split at each injection node: production = storage + injection.
    for (int n = 0; n < N; ++n) {
      if (m.h2_injection[n][0] < 0) continue;
      for (int t = 0; t < T; ++t) {
        LinExpr e;
        for (std::size_t k = 0; k < dev.electrolyzers.size(); ++k)
          if (g.node_index(dev.electrolyzers[k].gas_node) == n)
            e.add(m.et_power[k][t], electrolyzer_hydrogen_rate(dev.electrolyzers[k], 1.0, s));
        for (std::size_t k = 0; k < dev.tanks.size(); ++k)
          if (g.node_index(dev.tanks[k].gas_node) == n) e.add(m.ht_flow[k][t], -1.0);
        e.add(m.h2_injection[n][t], -1.0);
        prog.add_equality(e, 0.0, "hydrogen split " + g.nodes[n].id + " t" + std::to_string(t));
      }
    }
    for (std::size_t k = 0; k < dev.tanks.size(); ++k) {
      for (int t = 0; t < T; ++t) {
        const int prev = (t == 0) ? T - 1 : t - 1;  // cyclic storage
        LinExpr e = LinExpr::var(m.ht_level[k][t]);
        e.add(m.ht_level[k][prev], -1.0);
        e.add(m.ht_flow[k][t], -dt);
        prog.add_equality(e, 0.0, "tank " + dev.tanks[k].id + " t" + std::to_string(t));
      }
    }
    // Blend cap on system-wide injected volumes.
    const double w = s.blend.omega_max;
    for (int t = 0; t < T; ++t) {
      LinExpr e;
      for (int n = 0; n < N; ++n)
        if (m.h2_injection[n][t] >= 0) e.add(m.h2_injection[n][t], 1.0 - w);
      e.add(m.hgn[t], -w);
      m.blend_cap.push_back(prog.add_less_equal(e, 0.0, "blend cap t" + std::to_string(t)));
    }
  }

  // Weymouth relaxation ||(G, c w_down)|| <= c w_up and the pressure-drop penalty.
  for (std::size_t p = 0; p < g.pipes.size(); ++p) {
    const int from = g.node_index(g.pipes[p].from), to = g.node_index(g.pipes[p].to);
    const int up = forward[p] ? from : to;
    const int down = forward[p] ? to : from;
    const double c = g.pipes[p].weymouth;
    for (int t = 0; t < T; ++t) {
      prog.add_soc(LinExpr::var(m.pressure[up][t], c),
                   {LinExpr::var(m.flow[p][t]), LinExpr::var(m.pressure[down][t], c)},
                   "weymouth " + g.pipes[p].id + " t" + std::to_string(t));
      m.penalty.add(m.pressure[up][t], tau);
      m.penalty.add(m.pressure[down][t], -tau);
    }
  }

  for (int t = 0; t < T; ++t) m.own_cost.add(m.hgn[t], s.market.gas_price[t] * dt);
  for (std::size_t k = 0; k < m.et_power.size(); ++k) {
    const auto& e = dev.electrolyzers[k];
    const double unit = e.capital_cost / (e.rated_kw * e.lifetime_h);
    for (int t = 0; t < T; ++t) m.own_cost.add(m.et_power[k][t], unit * dt);
  }
  if (m.conversion) {
    m.ht_cost = gdn_tank_cost(s);
    m.own_cost.add_constant(m.ht_cost);
  }
  return m;
}

std::string diagnose_infeasibility(const Scenario& s, const TradeDecision* trade,
                                   const BlendState& blend, const GdnOptions& opts) {
  auto feasible = [&](Relax r) {
    Program prog;
    GdnModel m = add_gdn_impl(prog, s, blend, opts, r);
    if (trade) {
      for (std::size_t k = 0; k < m.et_power.size(); ++k)
        for (int t = 0; t < m.periods; ++t) prog.fix(m.et_power[k][t], trade->p2g_kw[k][t]);
      for (std::size_t k = 0; k < m.g2p.size(); ++k)
        for (int t = 0; t < m.periods; ++t) prog.fix(m.g2p[k][t], trade->g2p_m3h[k][t]);
    }
    return conic::solve(prog).optimal();
  };
  if (feasible({true, false})) return "pressure bounds";
  if (feasible({false, true})) return "tank capacity";
  return "nodal balance";
}

}  // namespace

Series GdnSchedule::total_h2_injection() const {
  Series out(hgn.size(), 0.0);
  for (const auto& node : h2_injection)
    for (std::size_t t = 0; t < node.size(); ++t) out[t] += node[t];
  return out;
}

bool gdn_owns_conversion(const Scenario& s) { return s.variant == ModelVariant::Cooperative; }

double gdn_tank_cost(const Scenario& s) {
  // Capacity cost is amortised per day of lifetime and charged pro rata for
  // the scheduled horizon.
  const double days = s.periods() * s.market.dt_hours / 24.0;
  double c = 0.0;
  for (const auto& h : s.devices.tanks) c += h.capacity_cost * h.capacity_m3 * days / h.lifetime_days;
  return c;
}

double electrolyzer_hydrogen_rate(const Electrolyzer& e, double power_kw, const Scenario& s) {
  return e.efficiency * power_kw * s.units.mj_per_kwh / s.blend.hhv_h2;
}

GdnModel add_gdn(Program& program, const Scenario& s, const BlendState& blend,
                 const GdnOptions& opts) {
  return add_gdn_impl(program, s, blend, opts, {});
}

GdnSchedule extract_gdn(const GdnModel& m, const Scenario& s, const conic::Solution& sol,
                        const BlendState& blend) {
  auto grab = [&](const std::vector<std::vector<int>>& idx) {
    std::vector<Series> out;
    for (const auto& row : idx) {
      Series v;
      for (int i : row) v.push_back(i >= 0 ? sol.value(i) : 0.0);
      out.push_back(v);
    }
    return out;
  };
  GdnSchedule sch;
  for (int i : m.hgn) sch.hgn.push_back(sol.value(i));
  sch.pressure = grab(m.pressure);
  sch.flow = grab(m.flow);
  const auto forward = pipe_orientation(s);
  for (std::size_t p = 0; p < forward.size(); ++p)
    if (!forward[p])
      for (double& v : sch.flow[p]) v = -v;
  sch.et_power = grab(m.et_power);
  for (std::size_t k = 0; k < sch.et_power.size(); ++k) {
    Series h;
    for (double p : sch.et_power[k])
      h.push_back(electrolyzer_hydrogen_rate(s.devices.electrolyzers[k], p, s));
    sch.et_hydrogen.push_back(h);
  }
  sch.h2_injection = grab(m.h2_injection);
  sch.ht_flow = grab(m.ht_flow);
  sch.ht_level = grab(m.ht_level);
  sch.g2p = grab(m.g2p);
  sch.blend = blend;
  sch.penalty = m.penalty.evaluate(sol.x);
  return sch;
}

GdnProblem build_gdn_problem(const Scenario& s, const TradeDecision* trade, const BlendState& blend,
                             const GdnOptions& opts) {
  GdnProblem out;
  Program& prog = out.program;
  GdnModel& m = out.model;
  m = add_gdn(prog, s, blend, opts);
  prog.add_cost(m.own_cost);
  prog.add_cost(m.penalty);
  if (trade) {
    for (std::size_t k = 0; k < m.et_power.size(); ++k)
      for (int t = 0; t < m.periods; ++t) {
        prog.fix(m.et_power[k][t], trade->p2g_kw.at(k).at(t));
        // Payments on fixed quantities are constants; kept out of the
        // objective so prices cannot move the solver within a degenerate face.
        if (trade->has_prices())
          prog.add_cost(LinExpr(trade->p2g_price[t] * m.dt * trade->p2g_kw[k][t]));
      }
    for (std::size_t k = 0; k < m.g2p.size(); ++k)
      for (int t = 0; t < m.periods; ++t) {
        // The intake cap depends on the blend, which is still moving inside
        // the fixed-point loop; the fuel cell's rating is enforced by the ADN.
        prog.fix(m.g2p[k][t], trade->g2p_m3h.at(k).at(t));
        if (trade->has_prices())
          prog.add_cost(LinExpr(-trade->g2p_price[t] * m.dt * trade->g2p_m3h[k][t]));
      }
  }
  return out;
}

double weymouth_tightness(const Scenario& s, const GdnSchedule& sch) {
  const auto& g = s.gas;
  const auto forward = pipe_orientation(s);
  double worst = 0.0;
  for (std::size_t p = 0; p < g.pipes.size(); ++p) {
    const int from = g.node_index(g.pipes[p].from), to = g.node_index(g.pipes[p].to);
    const int up = forward[p] ? from : to;
    const int down = forward[p] ? to : from;
    const double c = g.pipes[p].weymouth;
    for (std::size_t t = 0; t < sch.hgn.size(); ++t) {
      const double bound = c * sch.pressure[up][t];
      const double norm = std::hypot(sch.flow[p][t], c * sch.pressure[down][t]);
      worst = std::max(worst, (bound - norm) / bound);
    }
  }
  return worst;
}

GdnCostBreakdown gdn_cost(const Scenario& s, const GdnSchedule& sch, const TradeDecision& trade) {
  const double dt = s.market.dt_hours;
  GdnCostBreakdown c;
  for (std::size_t t = 0; t < sch.hgn.size(); ++t) c.hgn += s.market.gas_price[t] * sch.hgn[t] * dt;
  for (std::size_t k = 0; k < sch.et_power.size(); ++k) {
    const auto& e = s.devices.electrolyzers[k];
    const double unit = e.capital_cost / (e.rated_kw * e.lifetime_h);
    for (std::size_t t = 0; t < sch.et_power[k].size(); ++t) {
      c.et += unit * sch.et_power[k][t] * dt;
      if (trade.has_prices()) c.p2g += trade.p2g_price[t] * sch.et_power[k][t] * dt;
    }
  }
  if (gdn_owns_conversion(s)) c.ht = gdn_tank_cost(s);
  if (trade.has_prices())
    for (const auto& fc : sch.g2p)
      for (std::size_t t = 0; t < fc.size(); ++t) c.g2p += trade.g2p_price[t] * fc[t] * dt;
  c.penalty = sch.penalty;
  c.total = c.hgn + c.p2g + c.et + c.ht - c.g2p;
  return c;
}

double gdn_balance_residual(const Scenario& s, const GdnSchedule& sch) {
  const auto& g = s.gas;
  const int src = g.node_index(g.source);
  double worst = 0.0;
  for (std::size_t n = 0; n < g.nodes.size(); ++n) {
    for (std::size_t t = 0; t < sch.hgn.size(); ++t) {
      double in = 0.0, out = 0.0;
      for (std::size_t p = 0; p < g.pipes.size(); ++p) {
        // Flows are signed along the listed orientation.
        const double f = sch.flow[p][t];
        if (g.node_index(g.pipes[p].to) == static_cast<int>(n)) (f >= 0 ? in : out) += std::abs(f);
        if (g.node_index(g.pipes[p].from) == static_cast<int>(n)) (f >= 0 ? out : in) += std::abs(f);
      }
      if (static_cast<int>(n) == src) in += sch.hgn[t];
      in += sch.h2_injection[n][t];
      out += equivalent_gas_load(g.nodes[n].load[t], sch.blend.hhv_mix[t], s.blend.hhv_ch4);
      for (std::size_t k = 0; k < sch.g2p.size(); ++k)
        if (g.node_index(s.devices.fuel_cells[k].gas_node) == static_cast<int>(n))
          out += sch.g2p[k][t];
      worst = std::max(worst, std::abs(in - out) / std::max({in, out, 1.0}));
    }
  }
  return worst;
}

GdnResult solve_gdn_at(const Scenario& s, const TradeDecision& trade, const BlendState& blend,
                       const GdnOptions& opts) {
  GdnProblem prob = build_gdn_problem(s, &trade, blend, opts);
  conic::Solution sol = conic::solve(prob.program, s.algo.solver_tol);
  if (!sol.optimal()) {
    if (sol.status == conic::Status::Infeasible)
      throw SolverError("GDN schedule infeasible; binding family: " +
                        diagnose_infeasibility(s, &trade, blend, opts));
    throw SolverError(std::string("GDN solve failed: ") + conic::to_string(sol.status) + " " +
                      sol.diagnostics);
  }
  GdnResult r;
  r.schedule = extract_gdn(prob.model, s, sol, blend);
  r.cost = gdn_cost(s, r.schedule, trade);
  r.objective = sol.objective;
  r.blend_iterations = 1;
  return r;
}

GdnResult solve_gdn(const Scenario& s, const TradeDecision& trade, const GdnOptions& opts) {
  BlendState blend = BlendState::pure_methane(s.periods(), s.blend);
  for (int k = 1; k <= s.algo.blend_max_iter; ++k) {
    GdnResult r = solve_gdn_at(s, trade, blend, opts);
    BlendState next = BlendState::from_volumes(r.schedule.total_h2_injection(), r.schedule.hgn, s.blend);
    if (next.max_change(blend) <= s.algo.blend_tol) {
      r.blend_iterations = k;
      return r;
    }
    blend = next;
  }
  throw ConvergenceError("blend fixed point did not settle within " +
                         std::to_string(s.algo.blend_max_iter) + " iterations");
}

}  // namespace hcng
