// JSON scenario files (schema_version 1).  Layout is documented in
// docs/scenario_schema.md.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <queue>
#include <set>
#include <sstream>

#include "hcng/error.hpp"
#include "hcng/netmodel.hpp"
#include "json.hpp"

namespace hcng {

using nlohmann::json;

namespace {

// Reads key from obj, reporting the dotted path on failure.
template <typename T>
T req(const json& obj, const std::string& key, const std::string& path) {
  if (!obj.is_object() || !obj.contains(key))
    throw ParseError(path + "." + key + ": missing required field");
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ParseError(path + "." + key + ": " + e.what());
  }
}

template <typename T>
T opt(const json& obj, const std::string& key, const T& fallback, const std::string& path) {
  if (!obj.is_object() || !obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ParseError(path + "." + key + ": " + e.what());
  }
}

const json& child(const json& obj, const std::string& key, const std::string& path) {
  if (!obj.is_object() || !obj.contains(key))
    throw ParseError(path + "." + key + ": missing required field");
  return obj.at(key);
}

const json& list(const json& obj, const std::string& key, const std::string& path) {
  static const json empty = json::array();
  if (!obj.is_object() || !obj.contains(key)) return empty;
  const json& v = obj.at(key);
  if (!v.is_array()) throw ParseError(path + "." + key + ": expected an array");
  return v;
}

// A constant series may be written as a single number.
Series series(const json& obj, const std::string& key, int periods, const std::string& path,
              bool required = true) {
  if (!obj.is_object() || !obj.contains(key)) {
    if (required) throw ParseError(path + "." + key + ": missing required field");
    return Series(periods, 0.0);
  }
  const json& v = obj.at(key);
  if (v.is_number()) return Series(periods, v.get<double>());
  try {
    return v.get<Series>();
  } catch (const json::exception& e) {
    throw ParseError(path + "." + key + ": " + e.what());
  }
}

BoxOrientation parse_orientation(const std::string& s, const std::string& path) {
  if (s == "symmetric") return BoxOrientation::Symmetric;
  if (s == "asymmetric-up") return BoxOrientation::AsymmetricUp;
  throw ParseError(path + ": unknown orientation '" + s + "'");
}

const char* orientation_name(BoxOrientation o) {
  return o == BoxOrientation::Symmetric ? "symmetric" : "asymmetric-up";
}

Scenario from_json(const json& j) {
  Scenario s;
  const std::string root = "$";
  if (!j.is_object()) throw ParseError("$: scenario must be a JSON object");
  s.schema_version = req<int>(j, "schema_version", root);
  s.name = opt<std::string>(j, "name", "", root);
  s.variant = parse_variant(opt<std::string>(j, "variant", "model1", root));

  const json& hz = child(j, "horizon", root);
  const int T = req<int>(hz, "periods", "$.horizon");
  if (T < 1) throw ParseError("$.horizon.periods: must be at least 1");
  s.market.dt_hours = opt<double>(hz, "dt_hours", 1.0, "$.horizon");

  const json& units = opt<json>(j, "units", json::object(), root);
  s.units.mj_per_kwh = opt<double>(units, "mj_per_kwh", 3.6, "$.units");
  s.power.base_kva = opt<double>(units, "base_kva", 1000.0, "$.units");

  const json& mk = child(j, "market", root);
  s.market.gas_price = series(mk, "gas_price", T, "$.market");
  s.market.electricity_price = series(mk, "electricity_price", T, "$.market");
  s.market.export_price = series(mk, "export_price", T, "$.market", false);

  const json& bl = opt<json>(j, "blend", json::object(), root);
  s.blend.hhv_ch4 = opt<double>(bl, "hhv_ch4", 39.8, "$.blend");
  s.blend.hhv_h2 = opt<double>(bl, "hhv_h2", 12.7, "$.blend");
  s.blend.omega_max = opt<double>(bl, "omega_max", 0.2, "$.blend");

  const json& gn = child(j, "gas_network", root);
  s.gas.source = req<std::string>(gn, "source_node", "$.gas_network");
  const json& gnodes = list(gn, "nodes", "$.gas_network");
  for (std::size_t i = 0; i < gnodes.size(); ++i) {
    const std::string p = "$.gas_network.nodes[" + std::to_string(i) + "]";
    const json& n = gnodes[i];
    s.gas.nodes.push_back({req<std::string>(n, "id", p), req<double>(n, "p_min", p),
                           req<double>(n, "p_max", p), series(n, "load", T, p, false)});
  }
  const json& gpipes = list(gn, "pipes", "$.gas_network");
  for (std::size_t i = 0; i < gpipes.size(); ++i) {
    const std::string p = "$.gas_network.pipes[" + std::to_string(i) + "]";
    const json& e = gpipes[i];
    s.gas.pipes.push_back({req<std::string>(e, "id", p), req<std::string>(e, "from", p),
                           req<std::string>(e, "to", p), req<double>(e, "weymouth", p)});
  }

  const json& pn = child(j, "power_network", root);
  s.power.root = req<std::string>(pn, "root_bus", "$.power_network");
  const json& buses = list(pn, "buses", "$.power_network");
  for (std::size_t i = 0; i < buses.size(); ++i) {
    const std::string p = "$.power_network.buses[" + std::to_string(i) + "]";
    const json& b = buses[i];
    s.power.buses.push_back({req<std::string>(b, "id", p), opt<double>(b, "v_min", 0.95, p),
                             opt<double>(b, "v_max", 1.05, p), series(b, "p_load", T, p, false),
                             series(b, "q_load", T, p, false)});
  }
  const json& branches = list(pn, "branches", "$.power_network");
  for (std::size_t i = 0; i < branches.size(); ++i) {
    const std::string p = "$.power_network.branches[" + std::to_string(i) + "]";
    const json& b = branches[i];
    s.power.branches.push_back({req<std::string>(b, "id", p), req<std::string>(b, "from", p),
                                req<std::string>(b, "to", p), req<double>(b, "r", p),
                                req<double>(b, "x", p)});
  }

  const json& dv = opt<json>(j, "devices", json::object(), root);
  const json& ets = list(dv, "electrolyzers", "$.devices");
  for (std::size_t i = 0; i < ets.size(); ++i) {
    const std::string p = "$.devices.electrolyzers[" + std::to_string(i) + "]";
    const json& e = ets[i];
    s.devices.electrolyzers.push_back(
        {req<std::string>(e, "id", p), req<std::string>(e, "bus", p),
         req<std::string>(e, "gas_node", p), req<double>(e, "rated_kw", p),
         req<double>(e, "efficiency", p), req<double>(e, "capital_cost", p),
         req<double>(e, "lifetime_h", p)});
  }
  const json& fcs = list(dv, "fuel_cells", "$.devices");
  for (std::size_t i = 0; i < fcs.size(); ++i) {
    const std::string p = "$.devices.fuel_cells[" + std::to_string(i) + "]";
    const json& e = fcs[i];
    s.devices.fuel_cells.push_back(
        {req<std::string>(e, "id", p), req<std::string>(e, "bus", p),
         req<std::string>(e, "gas_node", p), req<double>(e, "rated_kw", p),
         req<double>(e, "efficiency", p), req<double>(e, "capital_cost", p),
         req<double>(e, "lifetime_h", p)});
  }
  const json& hts = list(dv, "hydrogen_tanks", "$.devices");
  for (std::size_t i = 0; i < hts.size(); ++i) {
    const std::string p = "$.devices.hydrogen_tanks[" + std::to_string(i) + "]";
    const json& e = hts[i];
    s.devices.tanks.push_back({req<std::string>(e, "id", p), req<std::string>(e, "gas_node", p),
                               req<double>(e, "capacity_m3", p), req<double>(e, "capacity_cost", p),
                               req<double>(e, "lifetime_days", p)});
  }
  const json& bats = list(dv, "batteries", "$.devices");
  for (std::size_t i = 0; i < bats.size(); ++i) {
    const std::string p = "$.devices.batteries[" + std::to_string(i) + "]";
    const json& e = bats[i];
    Battery b;
    b.id = req<std::string>(e, "id", p);
    b.bus = req<std::string>(e, "bus", p);
    b.rated_kw = req<double>(e, "rated_kw", p);
    b.capacity_kwh = req<double>(e, "capacity_kwh", p);
    b.capacity_cost = req<double>(e, "capacity_cost", p);
    b.power_cost = req<double>(e, "power_cost", p);
    b.soc_min = opt<double>(e, "soc_min", b.soc_min, p);
    b.soc_max = opt<double>(e, "soc_max", b.soc_max, p);
    b.initial_soc = opt<double>(e, "initial_soc", b.initial_soc, p);
    b.a1 = opt<double>(e, "a1", b.a1, p);
    b.a2 = opt<double>(e, "a2", b.a2, p);
    b.b1 = opt<double>(e, "b1", b.b1, p);
    b.b2 = opt<double>(e, "b2", b.b2, p);
    b.dod = opt<double>(e, "dod", b.dod, p);
    s.devices.batteries.push_back(b);
  }
  const json& ders = list(dv, "ders", "$.devices");
  for (std::size_t i = 0; i < ders.size(); ++i) {
    const std::string p = "$.devices.ders[" + std::to_string(i) + "]";
    const json& e = ders[i];
    s.devices.ders.push_back({req<std::string>(e, "id", p), req<std::string>(e, "bus", p),
                              series(e, "p_forecast", T, p), series(e, "q_injection", T, p, false)});
  }

  const json& un = opt<json>(j, "uncertainty", json::object(), root);
  s.uncertainty.load_radius = opt<double>(un, "load_radius", 0.05, "$.uncertainty");
  s.uncertainty.der_radius = opt<double>(un, "der_radius", 0.15, "$.uncertainty");
  s.uncertainty.orientation = parse_orientation(
      opt<std::string>(un, "orientation", "symmetric", "$.uncertainty"), "$.uncertainty.orientation");

  const json& al = opt<json>(j, "algorithm", json::object(), root);
  const std::string ap = "$.algorithm";
  AlgorithmParams& a = s.algo;
  a.rho = opt<std::array<double, 4>>(al, "rho", a.rho, ap);
  a.admm_tol = opt<double>(al, "admm_tol", a.admm_tol, ap);
  a.admm_max_iter = opt<int>(al, "admm_max_iter", a.admm_max_iter, ap);
  if (al.is_object() && al.contains("pressure_penalty") && !al.at("pressure_penalty").is_null())
    a.pressure_penalty = req<double>(al, "pressure_penalty", ap);
  a.loss_penalty = opt<double>(al, "loss_penalty", a.loss_penalty, ap);
  a.blend_tol = opt<double>(al, "blend_tol", a.blend_tol, ap);
  a.blend_max_iter = opt<int>(al, "blend_max_iter", a.blend_max_iter, ap);
  a.ccg_gap_tol = opt<double>(al, "ccg_gap_tol", a.ccg_gap_tol, ap);
  a.ccg_max_iter = opt<int>(al, "ccg_max_iter", a.ccg_max_iter, ap);
  a.bcd_max_iter = opt<int>(al, "bcd_max_iter", a.bcd_max_iter, ap);
  a.solver_tol = opt<double>(al, "solver_tol", a.solver_tol, ap);
  a.price_cap_factor = opt<double>(al, "price_cap_factor", a.price_cap_factor, ap);
  a.log_margin = opt<double>(al, "log_margin", a.log_margin, ap);
  return s;
}

json to_json(const Scenario& s) {
  json j;
  j["schema_version"] = s.schema_version;
  j["name"] = s.name;
  j["variant"] = to_string(s.variant);
  j["horizon"] = {{"periods", s.periods()}, {"dt_hours", s.market.dt_hours}};
  j["units"] = {{"mj_per_kwh", s.units.mj_per_kwh}, {"base_kva", s.power.base_kva}};
  j["market"] = {{"gas_price", s.market.gas_price},
                 {"electricity_price", s.market.electricity_price},
                 {"export_price", s.market.export_price}};
  j["blend"] = {{"hhv_ch4", s.blend.hhv_ch4},
                {"hhv_h2", s.blend.hhv_h2},
                {"omega_max", s.blend.omega_max}};

  json gnodes = json::array();
  for (const auto& n : s.gas.nodes)
    gnodes.push_back({{"id", n.id}, {"p_min", n.p_min}, {"p_max", n.p_max}, {"load", n.load}});
  json gpipes = json::array();
  for (const auto& p : s.gas.pipes)
    gpipes.push_back({{"id", p.id}, {"from", p.from}, {"to", p.to}, {"weymouth", p.weymouth}});
  j["gas_network"] = {{"source_node", s.gas.source}, {"nodes", gnodes}, {"pipes", gpipes}};

  json buses = json::array();
  for (const auto& b : s.power.buses)
    buses.push_back({{"id", b.id},
                     {"v_min", b.v_min},
                     {"v_max", b.v_max},
                     {"p_load", b.p_load},
                     {"q_load", b.q_load}});
  json branches = json::array();
  for (const auto& b : s.power.branches)
    branches.push_back(
        {{"id", b.id}, {"from", b.from}, {"to", b.to}, {"r", b.r}, {"x", b.x}});
  j["power_network"] = {{"root_bus", s.power.root}, {"buses", buses}, {"branches", branches}};

  json dv;
  dv["electrolyzers"] = json::array();
  for (const auto& e : s.devices.electrolyzers)
    dv["electrolyzers"].push_back({{"id", e.id},
                                   {"bus", e.bus},
                                   {"gas_node", e.gas_node},
                                   {"rated_kw", e.rated_kw},
                                   {"efficiency", e.efficiency},
                                   {"capital_cost", e.capital_cost},
                                   {"lifetime_h", e.lifetime_h}});
  dv["fuel_cells"] = json::array();
  for (const auto& e : s.devices.fuel_cells)
    dv["fuel_cells"].push_back({{"id", e.id},
                                {"bus", e.bus},
                                {"gas_node", e.gas_node},
                                {"rated_kw", e.rated_kw},
                                {"efficiency", e.efficiency},
                                {"capital_cost", e.capital_cost},
                                {"lifetime_h", e.lifetime_h}});
  dv["hydrogen_tanks"] = json::array();
  for (const auto& e : s.devices.tanks)
    dv["hydrogen_tanks"].push_back({{"id", e.id},
                                    {"gas_node", e.gas_node},
                                    {"capacity_m3", e.capacity_m3},
                                    {"capacity_cost", e.capacity_cost},
                                    {"lifetime_days", e.lifetime_days}});
  dv["batteries"] = json::array();
  for (const auto& b : s.devices.batteries)
    dv["batteries"].push_back({{"id", b.id},
                               {"bus", b.bus},
                               {"rated_kw", b.rated_kw},
                               {"capacity_kwh", b.capacity_kwh},
                               {"capacity_cost", b.capacity_cost},
                               {"power_cost", b.power_cost},
                               {"soc_min", b.soc_min},
                               {"soc_max", b.soc_max},
                               {"initial_soc", b.initial_soc},
                               {"a1", b.a1},
                               {"a2", b.a2},
                               {"b1", b.b1},
                               {"b2", b.b2},
                               {"dod", b.dod}});
  dv["ders"] = json::array();
  for (const auto& d : s.devices.ders)
    dv["ders"].push_back({{"id", d.id},
                          {"bus", d.bus},
                          {"p_forecast", d.p_forecast},
                          {"q_injection", d.q_injection}});
  j["devices"] = dv;

  j["uncertainty"] = {{"load_radius", s.uncertainty.load_radius},
                      {"der_radius", s.uncertainty.der_radius},
                      {"orientation", orientation_name(s.uncertainty.orientation)}};

  const AlgorithmParams& a = s.algo;
  json al = {{"rho", a.rho},
             {"admm_tol", a.admm_tol},
             {"admm_max_iter", a.admm_max_iter},
             {"loss_penalty", a.loss_penalty},
             {"blend_tol", a.blend_tol},
             {"blend_max_iter", a.blend_max_iter},
             {"ccg_gap_tol", a.ccg_gap_tol},
             {"ccg_max_iter", a.ccg_max_iter},
             {"bcd_max_iter", a.bcd_max_iter},
             {"solver_tol", a.solver_tol},
             {"price_cap_factor", a.price_cap_factor},
             {"log_margin", a.log_margin}};
  if (a.pressure_penalty) al["pressure_penalty"] = *a.pressure_penalty;
  j["algorithm"] = al;
  return j;
}

// Checks that edges form a spanning tree rooted at root.  Returns problems.
void check_tree(const std::vector<std::string>& ids,
                const std::vector<std::pair<std::string, std::string>>& edges,
                const std::string& root, const std::string& path,
                std::vector<std::string>& problems) {
  std::map<std::string, int> index;
  for (std::size_t i = 0; i < ids.size(); ++i) index[ids[i]] = static_cast<int>(i);
  if (!index.count(root)) {
    problems.push_back(path + ": root '" + root + "' is not a declared node");
    return;
  }
  if (edges.size() + 1 != ids.size())
    problems.push_back(path + ": " + std::to_string(edges.size()) + " edges for " +
                       std::to_string(ids.size()) + " nodes, a radial network needs n-1");
  std::vector<std::vector<int>> adj(ids.size());
  for (const auto& [a, b] : edges) {
    if (!index.count(a) || !index.count(b)) continue;  // reported separately
    adj[index[a]].push_back(index[b]);
    adj[index[b]].push_back(index[a]);
  }
  std::vector<bool> seen(ids.size(), false);
  std::queue<int> q;
  q.push(index[root]);
  seen[index[root]] = true;
  while (!q.empty()) {
    const int u = q.front();
    q.pop();
    for (int v : adj[u])
      if (!seen[v]) {
        seen[v] = true;
        q.push(v);
      }
  }
  for (std::size_t i = 0; i < ids.size(); ++i)
    if (!seen[i]) problems.push_back(path + ": node '" + ids[i] + "' is not connected to the root");
}

}  // namespace

void validate(const Scenario& s) {
  std::vector<std::string> bad;
  auto need = [&](bool ok, const std::string& msg) {
    if (!ok) bad.push_back(msg);
  };
  const int T = s.periods();
  auto check_series = [&](const Series& x, const std::string& path, bool nonneg) {
    if (static_cast<int>(x.size()) != T)
      bad.push_back(path + ": length " + std::to_string(x.size()) + ", horizon is " +
                    std::to_string(T));
    for (double v : x) {
      if (!std::isfinite(v) || (nonneg && v < 0.0)) {
        bad.push_back(path + (nonneg ? ": entries must be finite and nonnegative"
                                     : ": entries must be finite"));
        break;
      }
    }
  };

  need(s.schema_version == kSchemaVersion,
       "schema_version: expected " + std::to_string(kSchemaVersion) + ", found " +
           std::to_string(s.schema_version));
  need(T >= 1, "horizon.periods: must be at least 1");
  need(s.market.dt_hours > 0.0, "horizon.dt_hours: must be positive");
  check_series(s.market.gas_price, "market.gas_price", true);
  check_series(s.market.electricity_price, "market.electricity_price", true);
  check_series(s.market.export_price, "market.export_price", true);
  need(s.units.mj_per_kwh > 0.0, "units.mj_per_kwh: must be positive");
  need(s.power.base_kva > 0.0, "units.base_kva: must be positive");

  need(s.blend.hhv_h2 > 0.0 && s.blend.hhv_h2 < s.blend.hhv_ch4,
       "blend: require 0 < hhv_h2 < hhv_ch4");
  need(s.blend.omega_max >= 0.0 && s.blend.omega_max <= 1.0, "blend.omega_max: must lie in [0, 1]");

  // Gas network.
  std::set<std::string> gas_ids;
  std::vector<std::string> gas_order;
  for (const auto& n : s.gas.nodes) {
    const std::string p = "gas_network.nodes[" + n.id + "]";
    need(gas_ids.insert(n.id).second, p + ": duplicate node id");
    gas_order.push_back(n.id);
    need(n.p_min > 0.0 && n.p_min < n.p_max, p + ": pressure bounds must satisfy 0 < p_min < p_max");
    check_series(n.load, p + ".load", true);
  }
  std::vector<std::pair<std::string, std::string>> gas_edges;
  for (const auto& e : s.gas.pipes) {
    const std::string p = "gas_network.pipes[" + e.id + "]";
    need(gas_ids.count(e.from) > 0, p + ": unknown from-node '" + e.from + "'");
    need(gas_ids.count(e.to) > 0, p + ": unknown to-node '" + e.to + "'");
    need(e.weymouth > 0.0, p + ": weymouth constant must be positive");
    gas_edges.emplace_back(e.from, e.to);
  }
  if (!s.gas.nodes.empty()) check_tree(gas_order, gas_edges, s.gas.source, "gas_network", bad);
  else bad.push_back("gas_network.nodes: at least one node is required");

  // Power network.
  std::set<std::string> bus_ids;
  std::vector<std::string> bus_order;
  for (const auto& b : s.power.buses) {
    const std::string p = "power_network.buses[" + b.id + "]";
    need(bus_ids.insert(b.id).second, p + ": duplicate bus id");
    bus_order.push_back(b.id);
    need(b.v_min > 0.0 && b.v_min < b.v_max, p + ": voltage bounds must satisfy 0 < v_min < v_max");
    check_series(b.p_load, p + ".p_load", true);
    check_series(b.q_load, p + ".q_load", false);
  }
  std::vector<std::pair<std::string, std::string>> bus_edges;
  for (const auto& e : s.power.branches) {
    const std::string p = "power_network.branches[" + e.id + "]";
    need(bus_ids.count(e.from) > 0, p + ": unknown from-bus '" + e.from + "'");
    need(bus_ids.count(e.to) > 0, p + ": unknown to-bus '" + e.to + "'");
    need(e.r >= 0.0 && e.x >= 0.0 && e.r + e.x > 0.0, p + ": impedance must be nonnegative and nonzero");
    bus_edges.emplace_back(e.from, e.to);
  }
  if (!s.power.buses.empty()) check_tree(bus_order, bus_edges, s.power.root, "power_network", bad);
  else bad.push_back("power_network.buses: at least one bus is required");

  // Devices.
  auto on_bus = [&](const std::string& bus, const std::string& p) {
    need(bus_ids.count(bus) > 0, p + ": unknown bus '" + bus + "'");
  };
  auto on_node = [&](const std::string& node, const std::string& p) {
    need(gas_ids.count(node) > 0, p + ": unknown gas node '" + node + "'");
  };
  for (const auto& e : s.devices.electrolyzers) {
    const std::string p = "devices.electrolyzers[" + e.id + "]";
    on_bus(e.bus, p);
    on_node(e.gas_node, p);
    need(e.rated_kw > 0.0, p + ": rated_kw must be positive");
    need(e.efficiency > 0.0 && e.efficiency <= 1.0, p + ": efficiency must lie in (0, 1]");
    need(e.capital_cost >= 0.0, p + ": capital_cost must be nonnegative");
    need(e.lifetime_h > 0.0, p + ": lifetime_h must be positive");
  }
  for (const auto& e : s.devices.fuel_cells) {
    const std::string p = "devices.fuel_cells[" + e.id + "]";
    on_bus(e.bus, p);
    on_node(e.gas_node, p);
    need(e.rated_kw > 0.0, p + ": rated_kw must be positive");
    need(e.efficiency > 0.0 && e.efficiency <= 1.0, p + ": efficiency must lie in (0, 1]");
    need(e.capital_cost >= 0.0, p + ": capital_cost must be nonnegative");
    need(e.lifetime_h > 0.0, p + ": lifetime_h must be positive");
  }
  for (const auto& e : s.devices.tanks) {
    const std::string p = "devices.hydrogen_tanks[" + e.id + "]";
    on_node(e.gas_node, p);
    need(e.capacity_m3 > 0.0, p + ": capacity_m3 must be positive");
    need(e.capacity_cost >= 0.0, p + ": capacity_cost must be nonnegative");
    need(e.lifetime_days > 0.0, p + ": lifetime_days must be positive");
  }
  for (const auto& b : s.devices.batteries) {
    const std::string p = "devices.batteries[" + b.id + "]";
    on_bus(b.bus, p);
    need(b.rated_kw > 0.0, p + ": rated_kw must be positive");
    need(b.capacity_kwh > 0.0, p + ": capacity_kwh must be positive");
    need(b.capacity_cost >= 0.0 && b.power_cost >= 0.0, p + ": costs must be nonnegative");
    need(b.soc_min >= 0.0 && b.soc_min < b.soc_max && b.soc_max <= 1.0,
         p + ": require 0 <= soc_min < soc_max <= 1");
    need(b.initial_soc >= b.soc_min && b.initial_soc <= b.soc_max,
         p + ": initial_soc must lie within the state-of-charge bounds");
    need(b.dod > 0.0 && b.dod <= 1.0, p + ": dod must lie in (0, 1]");
    const double life = b.a1 * std::exp(b.b1 * b.dod) + b.a2 * std::exp(b.b2 * b.dod);
    need(std::isfinite(life) && life > 0.0, p + ": cycle life at the configured dod must be positive");
  }
  for (const auto& d : s.devices.ders) {
    const std::string p = "devices.ders[" + d.id + "]";
    on_bus(d.bus, p);
    check_series(d.p_forecast, p + ".p_forecast", true);
    check_series(d.q_injection, p + ".q_injection", false);
  }

  need(s.uncertainty.load_radius >= 0.0, "uncertainty.load_radius: must be nonnegative");
  need(s.uncertainty.der_radius >= 0.0, "uncertainty.der_radius: must be nonnegative");

  const AlgorithmParams& a = s.algo;
  for (int k = 0; k < 4; ++k)
    need(a.rho[k] > 0.0, "algorithm.rho[" + std::to_string(k) + "]: must be positive");
  need(a.admm_tol > 0.0, "algorithm.admm_tol: must be positive");
  need(a.admm_max_iter > 0, "algorithm.admm_max_iter: must be positive");
  need(!a.pressure_penalty || *a.pressure_penalty > 0.0, "algorithm.pressure_penalty: must be positive");
  need(a.loss_penalty > 0.0, "algorithm.loss_penalty: must be positive");
  need(a.blend_tol > 0.0, "algorithm.blend_tol: must be positive");
  need(a.blend_max_iter > 0, "algorithm.blend_max_iter: must be positive");
  need(a.ccg_gap_tol > 0.0, "algorithm.ccg_gap_tol: must be positive");
  need(a.ccg_max_iter > 0, "algorithm.ccg_max_iter: must be positive");
  need(a.bcd_max_iter > 0, "algorithm.bcd_max_iter: must be positive");
  need(a.solver_tol > 0.0, "algorithm.solver_tol: must be positive");
  need(a.price_cap_factor > 0.0, "algorithm.price_cap_factor: must be positive");
  need(a.log_margin > 0.0, "algorithm.log_margin: must be positive");

  if (!bad.empty()) throw ValidationError(std::move(bad));
}

Scenario parse_scenario(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("scenario is not valid JSON: ") + e.what());
  }
  Scenario s = from_json(j);
  validate(s);
  return s;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open scenario file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

std::string serialize_scenario(const Scenario& s) { return to_json(s).dump(2); }

std::string scenario_hash(const Scenario& s) {
  // FNV-1a over the compact canonical form (object keys are sorted).
  const std::string text = to_json(s).dump();
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char out[17];
  std::snprintf(out, sizeof out, "%016llx", static_cast<unsigned long long>(h));
  return out;
}

}  // namespace hcng
