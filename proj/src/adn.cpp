#include "hcng/adn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>

#include "hcng/error.hpp"
#include "hcng/gdn.hpp"

namespace hcng {

using conic::LinExpr;
using conic::Program;

namespace {

struct Relax {
  bool voltage = false;
  bool devices = false;
};

// Whether each branch's listed orientation points away from the root.
std::vector<bool> branch_orientation(const Scenario& s) {
  const auto& pn = s.power;
  const int n = static_cast<int>(pn.buses.size());
  std::vector<std::vector<int>> adj(n);
  for (const auto& b : pn.branches) {
    const int a = pn.bus_index(b.from), c = pn.bus_index(b.to);
    adj[a].push_back(c);
    adj[c].push_back(a);
  }
  std::vector<int> depth(n, -1);
  std::queue<int> q;
  depth[pn.bus_index(pn.root)] = 0;
  q.push(pn.bus_index(pn.root));
  while (!q.empty()) {
    const int u = q.front();
    q.pop();
    for (int v : adj[u])
      if (depth[v] < 0) {
        depth[v] = depth[u] + 1;
        q.push(v);
      }
  }
  std::vector<bool> fwd;
  for (const auto& b : pn.branches) fwd.push_back(depth[pn.bus_index(b.from)] < depth[pn.bus_index(b.to)]);
  return fwd;
}

bool has_conversion(const Scenario& s) { return s.variant != ModelVariant::BatteryOnly; }

double pooled_tank_capacity(const Scenario& s) {
  double v = 0.0;
  for (const auto& h : s.devices.tanks) v += h.capacity_m3;
  return v;
}

AdnModel add_adn_impl(Program& prog, const Scenario& s, const BlendState& blend,
                      const AdnOptions& opts, Relax relax) {
  const auto& pn = s.power;
  const auto& dev = s.devices;
  const int T = s.periods();
  const double dt = s.market.dt_hours;
  const double base = pn.base_kva;
  const int B = static_cast<int>(pn.buses.size());
  const int root = pn.bus_index(pn.root);
  const auto fwd = branch_orientation(s);
  const bool conversion = has_conversion(s);
  const bool self_conversion = s.variant == ModelVariant::SelfConversion;
  auto tag = [](const std::string& a, int t) { return "[" + a + "," + std::to_string(t) + "]"; };

  AdnModel m;
  m.periods = T;
  m.dt = dt;

  for (int t = 0; t < T; ++t) {
    m.grid_buy.push_back(prog.add_variable("Pbuy" + tag("root", t), 0.0));
    m.grid_export.push_back(prog.add_variable("Pexp" + tag("root", t), 0.0));
    m.grid_q.push_back(prog.add_variable("Qgrid" + tag("root", t)));
  }
  for (const auto& b : pn.buses) {
    std::vector<int> v;
    const double lo = relax.voltage ? 0.0 : b.v_min * b.v_min;
    const double hi = relax.voltage ? 4.0 : b.v_max * b.v_max;
    for (int t = 0; t < T; ++t) v.push_back(prog.add_variable("U" + tag(b.id, t), lo, hi));
    m.voltage_sq.push_back(v);
  }
  for (const auto& br : pn.branches) {
    std::vector<int> p, q, i;
    for (int t = 0; t < T; ++t) {
      p.push_back(prog.add_variable("P" + tag(br.id, t)));
      q.push_back(prog.add_variable("Q" + tag(br.id, t)));
      i.push_back(prog.add_variable("I" + tag(br.id, t), 0.0));
    }
    m.branch_p.push_back(p);
    m.branch_q.push_back(q);
    m.current_sq.push_back(i);
  }
  for (const auto& d : dev.ders) {
    std::vector<int> v;
    for (int t = 0; t < T; ++t) v.push_back(prog.add_variable("Pder" + tag(d.id, t), 0.0));
    m.der.push_back(v);
  }
  if (opts.with_batteries) {
    for (const auto& b : dev.batteries) {
      std::vector<int> dis, chg, en;
      const double rated = relax.devices ? 1e9 : b.rated_kw;
      const double elo = relax.devices ? -1e12 : b.soc_min * b.capacity_kwh;
      const double ehi = relax.devices ? 1e12 : b.soc_max * b.capacity_kwh;
      for (int t = 0; t < T; ++t) {
        dis.push_back(prog.add_variable("Pdis" + tag(b.id, t), 0.0, rated));
        chg.push_back(prog.add_variable("Pch" + tag(b.id, t), -rated, 0.0));
        en.push_back(prog.add_variable("E" + tag(b.id, t), elo, ehi));
      }
      m.bat_discharge.push_back(dis);
      m.bat_charge.push_back(chg);
      m.bat_energy.push_back(en);
    }
  }
  if (conversion) {
    for (const auto& f : dev.fuel_cells) {
      std::vector<int> pw, gs;
      const double rated = relax.devices ? 1e9 : f.rated_kw;
      for (int t = 0; t < T; ++t) {
        pw.push_back(prog.add_variable("Psofc" + tag(f.id, t), 0.0, rated));
        gs.push_back(prog.add_variable("Gsofc" + tag(f.id, t), 0.0));
      }
      m.sofc_power.push_back(pw);
      m.sofc_gas.push_back(gs);
    }
    for (const auto& e : dev.electrolyzers) {
      std::vector<int> v;
      const double rated = relax.devices ? 1e9 : e.rated_kw;
      for (int t = 0; t < T; ++t) v.push_back(prog.add_variable("Pet" + tag(e.id, t), 0.0, rated));
      m.et_power.push_back(v);
    }
  }

  // Active and reactive balances.
  m.balance_p.assign(B, {});
  for (int j = 0; j < B; ++j) {
    const auto& bus = pn.buses[j];
    for (int t = 0; t < T; ++t) {
      LinExpr p, q;
      for (std::size_t k = 0; k < pn.branches.size(); ++k) {
        const auto& br = pn.branches[k];
        const int a = pn.bus_index(br.from), c = pn.bus_index(br.to);
        const int parent = fwd[k] ? a : c;
        const int child = fwd[k] ? c : a;
        if (child == j) {
          p.add(m.branch_p[k][t], 1.0).add(m.current_sq[k][t], -br.r * base);
          q.add(m.branch_q[k][t], 1.0).add(m.current_sq[k][t], -br.x * base);
        }
        if (parent == j) {
          p.add(m.branch_p[k][t], -1.0);
          q.add(m.branch_q[k][t], -1.0);
        }
      }
      if (j == root) {
        p.add(m.grid_buy[t], 1.0).add(m.grid_export[t], -1.0);
        q.add(m.grid_q[t], 1.0);
      }
      double q_fixed = 0.0;
      for (std::size_t k = 0; k < dev.ders.size(); ++k)
        if (dev.ders[k].bus == bus.id) {
          p.add(m.der[k][t], 1.0);
          q_fixed += dev.ders[k].q_injection[t];
        }
      for (std::size_t k = 0; k < m.bat_discharge.size(); ++k)
        if (dev.batteries[k].bus == bus.id)
          p.add(m.bat_discharge[k][t], 1.0).add(m.bat_charge[k][t], 1.0);
      for (std::size_t k = 0; k < m.sofc_power.size(); ++k)
        if (dev.fuel_cells[k].bus == bus.id) p.add(m.sofc_power[k][t], 1.0);
      for (std::size_t k = 0; k < m.et_power.size(); ++k)
        if (dev.electrolyzers[k].bus == bus.id) p.add(m.et_power[k][t], -1.0);
      if (opts.shed_penalty) {
        const int shed = prog.add_variable("shed" + tag(bus.id, t), 0.0);
        const int spill = prog.add_variable("spill" + tag(bus.id, t), 0.0);
        p.add(shed, 1.0).add(spill, -1.0);
        m.shed.push_back(shed);
        m.shed.push_back(spill);
        m.slack_cost.add(shed, *opts.shed_penalty * dt).add(spill, *opts.shed_penalty * dt);
      }
      const double load = opts.realization ? opts.realization->load_kw.at(j).at(t) : bus.p_load[t];
      m.balance_p[j].push_back(
          prog.add_equality(p, load, "power balance " + bus.id + " t" + std::to_string(t)));
      prog.add_equality(q, bus.q_load[t] - q_fixed, "reactive balance " + bus.id + " t" + std::to_string(t));
    }
  }

  // Voltage drop and the relaxed branch-flow cone, per unit.
  for (std::size_t k = 0; k < pn.branches.size(); ++k) {
    const auto& br = pn.branches[k];
    const int a = pn.bus_index(br.from), c = pn.bus_index(br.to);
    const int parent = fwd[k] ? a : c;
    const int child = fwd[k] ? c : a;
    for (int t = 0; t < T; ++t) {
      LinExpr v = LinExpr::var(m.voltage_sq[child][t]);
      v.add(m.voltage_sq[parent][t], -1.0)
          .add(m.branch_p[k][t], 2.0 * br.r / base)
          .add(m.branch_q[k][t], 2.0 * br.x / base)
          .add(m.current_sq[k][t], -(br.r * br.r + br.x * br.x));
      prog.add_equality(v, 0.0, "voltage drop " + br.id + " t" + std::to_string(t));
      LinExpr bound = LinExpr::var(m.current_sq[k][t]);
      bound.add(m.voltage_sq[parent][t], 1.0);
      LinExpr diff = LinExpr::var(m.current_sq[k][t]);
      diff.add(m.voltage_sq[parent][t], -1.0);
      prog.add_soc(bound,
                   {LinExpr::var(m.branch_p[k][t], 2.0 / base),
                    LinExpr::var(m.branch_q[k][t], 2.0 / base), diff},
                   "branch flow " + br.id + " t" + std::to_string(t));
    }
  }

  // DER availability as explicit rows so their duals are available.
  for (std::size_t k = 0; k < dev.ders.size(); ++k) {
    std::vector<conic::RowRef> rows;
    for (int t = 0; t < T; ++t) {
      const double avail =
          opts.realization ? opts.realization->der_kw.at(k).at(t) : dev.ders[k].p_forecast[t];
      rows.push_back(prog.add_less_equal(LinExpr::var(m.der[k][t]), avail,
                                         "der availability " + dev.ders[k].id + " t" + std::to_string(t)));
    }
    m.der_avail.push_back(rows);
  }

  // Battery energy, cyclic around the initial state of charge.
  for (std::size_t k = 0; k < m.bat_discharge.size(); ++k) {
    const auto& b = dev.batteries[k];
    const double e0 = b.initial_soc * b.capacity_kwh;
    for (int t = 0; t < T; ++t) {
      LinExpr e = LinExpr::var(m.bat_energy[k][t]);
      e.add(m.bat_discharge[k][t], dt).add(m.bat_charge[k][t], dt);
      double rhs = 0.0;
      if (t == 0)
        rhs = e0;
      else
        e.add(m.bat_energy[k][t - 1], -1.0);
      prog.add_equality(e, rhs, "battery energy " + b.id + " t" + std::to_string(t));
    }
    prog.add_equality(LinExpr::var(m.bat_energy[k][T - 1]), e0, "battery cycle " + b.id);
    if (opts.baseline_battery) {
      std::vector<int> adj;
      std::vector<conic::RowRef> rows;
      for (int t = 0; t < T; ++t) {
        const int d = prog.add_variable("dPli" + tag(b.id, t));
        adj.push_back(d);
        LinExpr e = LinExpr::var(m.bat_discharge[k][t]);
        e.add(m.bat_charge[k][t], 1.0).add(d, -1.0);
        rows.push_back(prog.add_equality(e, opts.baseline_battery->at(k).at(t),
                                         "battery baseline " + b.id + " t" + std::to_string(t)));
      }
      m.bat_adjust.push_back(adj);
      m.bat_baseline.push_back(rows);
    }
  }

  // Fuel-cell conversion: electrical output from the gas (or hydrogen) intake.
  for (std::size_t k = 0; k < m.sofc_power.size(); ++k) {
    const auto& f = dev.fuel_cells[k];
    for (int t = 0; t < T; ++t) {
      const double hhv = self_conversion ? s.blend.hhv_h2 : blend.hhv_mix[t];
      LinExpr e = LinExpr::var(m.sofc_power[k][t]);
      e.add(m.sofc_gas[k][t], -sofc_power_kw(f, 1.0, hhv, s));
      prog.add_equality(e, 0.0, "sofc conversion " + f.id + " t" + std::to_string(t));
    }
  }

  // Self-owned hydrogen loop: electrolyzer output feeds a pooled store that
  // supplies the fuel cells.
  if (self_conversion && !(m.et_power.empty() && m.sofc_gas.empty())) {
    const double cap = pooled_tank_capacity(s);
    for (int t = 0; t < T; ++t)
      m.h2_level.push_back(prog.add_variable("H2store" + tag("adn", t), 0.0, relax.devices ? 1e12 : cap));
    for (int t = 0; t < T; ++t) {
      const int prev = (t == 0) ? T - 1 : t - 1;
      LinExpr e = LinExpr::var(m.h2_level[t]);
      e.add(m.h2_level[prev], -1.0);
      for (std::size_t k = 0; k < m.et_power.size(); ++k)
        e.add(m.et_power[k][t], -dt * electrolyzer_hydrogen_rate(dev.electrolyzers[k], 1.0, s));
      for (std::size_t k = 0; k < m.sofc_gas.size(); ++k) e.add(m.sofc_gas[k][t], dt);
      prog.add_equality(e, 0.0, "hydrogen store t" + std::to_string(t));
    }
  }

  // Costs.
  for (int t = 0; t < T; ++t) {
    m.own_cost.add(m.grid_buy[t], s.market.electricity_price[t] * dt);
    m.own_cost.add(m.grid_export[t], -s.market.export_price[t] * dt);
  }
  for (std::size_t k = 0; k < m.bat_discharge.size(); ++k) {
    const double w = battery_wear_cost(dev.batteries[k]);
    for (int t = 0; t < T; ++t) {
      m.own_cost.add(m.bat_discharge[k][t], w * dt);
      m.own_cost.add(m.bat_charge[k][t], -w * dt);
    }
  }
  for (std::size_t k = 0; k < m.sofc_power.size(); ++k) {
    const auto& f = dev.fuel_cells[k];
    const double unit = f.capital_cost / (f.rated_kw * f.lifetime_h);
    for (int t = 0; t < T; ++t) m.own_cost.add(m.sofc_power[k][t], unit * dt);
  }
  if (self_conversion) {
    for (std::size_t k = 0; k < m.et_power.size(); ++k) {
      const auto& e = dev.electrolyzers[k];
      const double unit = e.capital_cost / (e.rated_kw * e.lifetime_h);
      for (int t = 0; t < T; ++t) m.own_cost.add(m.et_power[k][t], unit * dt);
    }
    m.own_cost.add_constant(gdn_tank_cost(s));
  }

  const double lp = opts.loss_penalty.value_or(default_loss_penalty(s));
  for (std::size_t k = 0; k < pn.branches.size(); ++k)
    for (int t = 0; t < T; ++t) m.penalty.add(m.current_sq[k][t], lp * pn.branches[k].r * base * dt);
  m.penalty += m.slack_cost;
  return m;
}

std::string diagnose_infeasibility(const Scenario& s, const TradeDecision* trade,
                                   const BlendState& blend, const AdnOptions& opts) {
  auto feasible = [&](Relax r) {
    Program prog;
    AdnModel m = add_adn_impl(prog, s, blend, opts, r);
    if (trade) {
      for (std::size_t k = 0; k < m.et_power.size(); ++k)
        for (int t = 0; t < m.periods; ++t) prog.fix(m.et_power[k][t], trade->p2g_kw[k][t]);
      for (std::size_t k = 0; k < m.sofc_gas.size(); ++k)
        for (int t = 0; t < m.periods; ++t) prog.fix(m.sofc_gas[k][t], trade->g2p_m3h[k][t]);
    }
    return conic::solve(prog).optimal();
  };
  if (feasible({true, false})) return "voltage";
  if (feasible({false, true})) return "device bound";
  return "balance";
}

}  // namespace

Realization Realization::forecast(const Scenario& s) {
  Realization r;
  for (const auto& b : s.power.buses) r.load_kw.push_back(b.p_load);
  for (const auto& d : s.devices.ders) r.der_kw.push_back(d.p_forecast);
  return r;
}

Series AdnSchedule::grid_net() const {
  Series out(grid_buy.size());
  for (std::size_t t = 0; t < out.size(); ++t) out[t] = grid_buy[t] - grid_export[t];
  return out;
}

std::vector<Series> AdnSchedule::battery_net() const {
  std::vector<Series> out;
  for (std::size_t k = 0; k < bat_discharge.size(); ++k) {
    Series v(bat_discharge[k].size());
    for (std::size_t t = 0; t < v.size(); ++t) v[t] = bat_discharge[k][t] + bat_charge[k][t];
    out.push_back(v);
  }
  return out;
}

double battery_cycle_life(double dod, double a1, double a2, double b1, double b2) {
  if (!(dod > 0.0) || dod > 1.0) throw DomainError("battery_cycle_life: depth of discharge outside (0, 1]");
  const double n = a1 * std::exp(b1 * dod) + a2 * std::exp(b2 * dod);
  if (!(n > 0.0)) throw DomainError("battery_cycle_life: coefficients give a nonpositive cycle life");
  return n;
}

double battery_wear_cost(const Battery& b) {
  const double k = b.capacity_cost * b.capacity_kwh + b.power_cost * b.rated_kw;
  const double n = battery_cycle_life(b.dod, b.a1, b.a2, b.b1, b.b2);
  return k / (n * b.capacity_kwh * b.dod);
}

double sofc_power_kw(const FuelCell& f, double gas_m3h, double hhv, const Scenario& s) {
  return gas_m3h * hhv * f.efficiency / s.units.mj_per_kwh;
}

double default_loss_penalty(const Scenario& s) {
  const auto& p = s.market.electricity_price;
  const double mean = p.empty() ? 0.0 : std::accumulate(p.begin(), p.end(), 0.0) / p.size();
  return s.algo.loss_penalty * std::max(mean, 1e-6);
}

AdnModel add_adn(Program& program, const Scenario& s, const BlendState& blend, const AdnOptions& opts) {
  if (opts.realization && !opts.baseline_battery && opts.with_batteries && !s.devices.batteries.empty())
    throw std::invalid_argument("a realization-stage ADN build needs the first-stage battery baseline");
  return add_adn_impl(program, s, blend, opts, {});
}

AdnSchedule extract_adn(const AdnModel& m, const Scenario& s, const conic::Solution& sol) {
  auto grab = [&](const std::vector<std::vector<int>>& idx) {
    std::vector<Series> out;
    for (const auto& row : idx) {
      Series v;
      for (int i : row) v.push_back(sol.value(i));
      out.push_back(v);
    }
    return out;
  };
  auto grab1 = [&](const std::vector<int>& idx) {
    Series v;
    for (int i : idx) v.push_back(sol.value(i));
    return v;
  };
  AdnSchedule a;
  a.grid_buy = grab1(m.grid_buy);
  a.grid_export = grab1(m.grid_export);
  a.grid_q = grab1(m.grid_q);
  a.branch_p = grab(m.branch_p);
  a.branch_q = grab(m.branch_q);
  const auto fwd = branch_orientation(s);
  for (std::size_t k = 0; k < fwd.size(); ++k)
    if (!fwd[k]) {
      for (double& v : a.branch_p[k]) v = -v;
      for (double& v : a.branch_q[k]) v = -v;
    }
  a.current_sq = grab(m.current_sq);
  a.voltage_sq = grab(m.voltage_sq);
  a.der = grab(m.der);
  a.bat_discharge = grab(m.bat_discharge);
  a.bat_charge = grab(m.bat_charge);
  a.bat_energy = grab(m.bat_energy);
  a.bat_adjust = grab(m.bat_adjust);
  a.sofc_power = grab(m.sofc_power);
  a.sofc_gas = grab(m.sofc_gas);
  a.et_power = grab(m.et_power);
  a.h2_level = grab1(m.h2_level);
  a.penalty = m.penalty.evaluate(sol.x);
  for (int v : m.shed) a.slack_kwh += sol.value(v) * m.dt;
  return a;
}

AdnProblem build_adn_problem(const Scenario& s, const TradeDecision* trade, const BlendState& blend,
                             const AdnOptions& opts) {
  AdnProblem out;
  Program& prog = out.program;
  AdnModel& m = out.model;
  m = add_adn(prog, s, blend, opts);
  prog.add_cost(m.own_cost);
  prog.add_cost(m.penalty);
  if (trade && s.variant == ModelVariant::Cooperative) {
    for (std::size_t k = 0; k < m.et_power.size(); ++k)
      for (int t = 0; t < m.periods; ++t) {
        const double v = trade->p2g_kw.at(k).at(t);
        if (v > prog.upper(m.et_power[k][t]) + 1e-9)
          throw SolverError("electricity sale to " + s.devices.electrolyzers[k].id +
                            " exceeds its rating at period " + std::to_string(t));
        const double sold = std::min(v, prog.upper(m.et_power[k][t]));
        prog.fix(m.et_power[k][t], sold);
        // constant payment, see build_gdn_problem
        if (trade->has_prices()) prog.add_cost(LinExpr(-trade->p2g_price[t] * m.dt * sold));
      }
    for (std::size_t k = 0; k < m.sofc_gas.size(); ++k)
      for (int t = 0; t < m.periods; ++t) {
        prog.fix(m.sofc_gas[k][t], trade->g2p_m3h.at(k).at(t));
        if (trade->has_prices())
          prog.add_cost(LinExpr(trade->g2p_price[t] * m.dt * trade->g2p_m3h[k][t]));
      }
  }
  return out;
}

double branchflow_tightness(const Scenario& s, const AdnSchedule& a) {
  const auto& pn = s.power;
  const auto fwd = branch_orientation(s);
  const double base = pn.base_kva;
  double worst = 0.0;
  for (std::size_t k = 0; k < pn.branches.size(); ++k) {
    const auto& br = pn.branches[k];
    const int parent = pn.bus_index(fwd[k] ? br.from : br.to);
    for (std::size_t t = 0; t < a.grid_buy.size(); ++t) {
      const double i = a.current_sq[k][t], u = a.voltage_sq[parent][t];
      const double p = 2.0 * a.branch_p[k][t] / base, q = 2.0 * a.branch_q[k][t] / base;
      const double norm = std::sqrt(p * p + q * q + (i - u) * (i - u));
      worst = std::max(worst, (i + u - norm) / (i + u));
    }
  }
  return worst;
}

AdnCostBreakdown adn_cost(const Scenario& s, const AdnSchedule& a, const TradeDecision& trade) {
  const double dt = s.market.dt_hours;
  const auto& dev = s.devices;
  AdnCostBreakdown c;
  for (std::size_t t = 0; t < a.grid_buy.size(); ++t)
    c.tg += (s.market.electricity_price[t] * a.grid_buy[t] - s.market.export_price[t] * a.grid_export[t]) * dt;
  for (std::size_t k = 0; k < a.bat_discharge.size(); ++k) {
    const double w = battery_wear_cost(dev.batteries[k]);
    for (std::size_t t = 0; t < a.bat_discharge[k].size(); ++t)
      c.li += w * (a.bat_discharge[k][t] - a.bat_charge[k][t]) * dt;
  }
  for (std::size_t k = 0; k < a.sofc_power.size(); ++k) {
    const auto& f = dev.fuel_cells[k];
    const double unit = f.capital_cost / (f.rated_kw * f.lifetime_h);
    for (double p : a.sofc_power[k]) c.sofc += unit * p * dt;
  }
  if (s.variant == ModelVariant::SelfConversion) {
    for (std::size_t k = 0; k < a.et_power.size(); ++k) {
      const auto& e = dev.electrolyzers[k];
      const double unit = e.capital_cost / (e.rated_kw * e.lifetime_h);
      for (double p : a.et_power[k]) c.h2_loop += unit * p * dt;
    }
    c.h2_loop += gdn_tank_cost(s);
  }
  if (s.variant == ModelVariant::Cooperative && trade.has_prices()) {
    for (const auto& e : a.et_power)
      for (std::size_t t = 0; t < e.size(); ++t) c.p2g += trade.p2g_price[t] * e[t] * dt;
    for (const auto& g : a.sofc_gas)
      for (std::size_t t = 0; t < g.size(); ++t) c.g2p += trade.g2p_price[t] * g[t] * dt;
  }
  c.hess = c.li + c.sofc + c.h2_loop;
  c.penalty = a.penalty;
  c.total = c.g2p + c.tg + c.hess - c.p2g;
  return c;
}

int simultaneous_battery_use(const Scenario& s, const AdnSchedule& a) {
  int n = 0;
  for (std::size_t k = 0; k < a.bat_discharge.size(); ++k) {
    const double thr = 1e-6 * s.devices.batteries[k].rated_kw;
    for (std::size_t t = 0; t < a.bat_discharge[k].size(); ++t)
      if (a.bat_discharge[k][t] > thr && -a.bat_charge[k][t] > thr) ++n;
  }
  return n;
}

AdnResult solve_adn(const Scenario& s, const TradeDecision& trade, const BlendState& blend,
                    const AdnOptions& opts) {
  AdnProblem prob = build_adn_problem(s, &trade, blend, opts);
  conic::Solution sol = conic::solve(prob.program, s.algo.solver_tol);
  if (!sol.optimal()) {
    if (sol.status == conic::Status::Infeasible)
      throw SolverError("ADN schedule infeasible; binding family: " +
                        diagnose_infeasibility(s, &trade, blend, opts));
    throw SolverError(std::string("ADN solve failed: ") + conic::to_string(sol.status) + " " +
                      sol.diagnostics);
  }
  AdnResult r;
  r.schedule = extract_adn(prob.model, s, sol);
  r.cost = adn_cost(s, r.schedule, trade);
  r.objective = sol.objective;
  r.solution = std::move(sol);
  return r;
}

}  // namespace hcng
