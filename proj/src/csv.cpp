#include "hcng/csv.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "hcng/error.hpp"

namespace hcng {

namespace {

std::string quote(const std::string& cell) {
  if (cell.find_first_of(",\"\n") == std::string::npos) return cell;
  std::string q = "\"";
  for (char c : cell) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + '"';
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      cells.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  cells.push_back(cur);
  return cells;
}

std::string num(double v) { return format_number(v); }
std::string num(int v) { return std::to_string(v); }

// Emits one long-format block per [element][t] series.
template <class Ids>
void series_rows(CsvWriter& w, const std::string& quantity, const Ids& ids, const std::vector<Series>& data) {
  for (std::size_t e = 0; e < data.size(); ++e)
    for (std::size_t t = 0; t < data[e].size(); ++t) w.row({quantity, ids(e), num(static_cast<int>(t)), num(data[e][t])});
}

void series_rows(CsvWriter& w, const std::string& quantity, const std::string& element, const Series& data) {
  for (std::size_t t = 0; t < data.size(); ++t) w.row({quantity, element, num(static_cast<int>(t)), num(data[t])});
}

template <class T>
auto id_of(const std::vector<T>& v) {
  return [&v](std::size_t i) { return v[i].id; };
}

}  // namespace

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (v == 0.0) return "0";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

std::string csv_preamble(const std::string& scenario_hash) {
  return "# schema_version=" + std::to_string(kSchemaVersion) + " scenario_hash=" + scenario_hash;
}

CsvWriter::CsvWriter(const std::string& path, const std::string& scenario_hash,
                     const std::vector<std::string>& header)
    : path_(path), columns_(header.size()), out_(path, std::ios::binary) {
  if (!out_) throw ValidationError({"cannot write '" + path + "'"});
  out_ << csv_preamble(scenario_hash) << '\n';
  row(header);
}

void CsvWriter::row(const std::vector<std::string>& cells) {
  if (cells.size() != columns_)
    throw std::logic_error(path_ + ": row has " + std::to_string(cells.size()) + " cells, header " +
                           std::to_string(columns_));
  for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << quote(cells[i]);
  out_ << '\n';
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open '" + path + "'");
  CsvTable t;
  std::string line;
  if (!std::getline(in, line) || line.rfind("# schema_version=", 0) != 0)
    throw ParseError(path + ": missing schema preamble");
  std::istringstream pre(line.substr(2));
  std::string field;
  while (pre >> field) {
    const auto eq = field.find('=');
    if (eq == std::string::npos) continue;
    const std::string key = field.substr(0, eq);
    const std::string value = field.substr(eq + 1);
    if (key == "schema_version") t.schema_version = std::stoi(value);
    if (key == "scenario_hash") t.scenario_hash = value;
  }
  if (!std::getline(in, line)) throw ParseError(path + ": missing header row");
  t.header = split_line(line);
  while (std::getline(in, line))
    if (!line.empty()) t.rows.push_back(split_line(line));
  return t;
}

void write_gdn_schedule(const std::string& path, const Scenario& s, const GdnSchedule& g) {
  CsvWriter w(path, scenario_hash(s), {"quantity", "element", "period", "value"});
  series_rows(w, "hgn_m3h", s.gas.source, g.hgn);
  series_rows(w, "omega", "system", g.blend.omega);
  series_rows(w, "hhv_mix_mj_m3", "system", g.blend.hhv_mix);
  series_rows(w, "pressure_bar", id_of(s.gas.nodes), g.pressure);
  series_rows(w, "flow_m3h", id_of(s.gas.pipes), g.flow);
  series_rows(w, "et_power_kw", id_of(s.devices.electrolyzers), g.et_power);
  series_rows(w, "et_hydrogen_m3h", id_of(s.devices.electrolyzers), g.et_hydrogen);
  series_rows(w, "h2_injection_m3h", id_of(s.gas.nodes), g.h2_injection);
  series_rows(w, "ht_flow_m3h", id_of(s.devices.tanks), g.ht_flow);
  series_rows(w, "ht_level_m3", id_of(s.devices.tanks), g.ht_level);
  series_rows(w, "g2p_m3h", id_of(s.devices.fuel_cells), g.g2p);
}

void write_adn_schedule(const std::string& path, const Scenario& s, const AdnSchedule& a) {
  CsvWriter w(path, scenario_hash(s), {"quantity", "element", "period", "value"});
  series_rows(w, "grid_buy_kw", s.power.root, a.grid_buy);
  series_rows(w, "grid_export_kw", s.power.root, a.grid_export);
  series_rows(w, "grid_q_kvar", s.power.root, a.grid_q);
  series_rows(w, "branch_p_kw", id_of(s.power.branches), a.branch_p);
  series_rows(w, "branch_q_kvar", id_of(s.power.branches), a.branch_q);
  series_rows(w, "current_sq_pu", id_of(s.power.branches), a.current_sq);
  series_rows(w, "voltage_sq_pu", id_of(s.power.buses), a.voltage_sq);
  series_rows(w, "der_kw", id_of(s.devices.ders), a.der);
  series_rows(w, "battery_discharge_kw", id_of(s.devices.batteries), a.bat_discharge);
  series_rows(w, "battery_charge_kw", id_of(s.devices.batteries), a.bat_charge);
  series_rows(w, "battery_energy_kwh", id_of(s.devices.batteries), a.bat_energy);
  if (!a.bat_adjust.empty())
    series_rows(w, "battery_adjust_kw", id_of(s.devices.batteries), a.bat_adjust);
  series_rows(w, "sofc_power_kw", id_of(s.devices.fuel_cells), a.sofc_power);
  series_rows(w, "sofc_gas_m3h", id_of(s.devices.fuel_cells), a.sofc_gas);
  series_rows(w, "et_power_kw", id_of(s.devices.electrolyzers), a.et_power);
  if (!a.h2_level.empty()) series_rows(w, "h2_level_m3", "pool", a.h2_level);
}

void write_costs(const std::string& path, const Scenario& s, const AdnCostBreakdown& adn,
                 const GdnCostBreakdown& gdn) {
  CsvWriter w(path, scenario_hash(s), {"entity", "component", "value"});
  const std::vector<std::pair<const char*, double>> a{
      {"total", adn.total}, {"grid", adn.tg},       {"battery", adn.li},   {"fuel_cell", adn.sofc},
      {"h2_loop", adn.h2_loop}, {"storage", adn.hess}, {"g2p_paid", adn.g2p}, {"p2g_received", adn.p2g},
      {"loss_penalty", adn.penalty}};
  for (const auto& [k, v] : a) w.row({"adn", k, num(v)});
  const std::vector<std::pair<const char*, double>> g{
      {"total", gdn.total}, {"gas_purchase", gdn.hgn}, {"electrolyzer", gdn.et},    {"tank", gdn.ht},
      {"p2g_paid", gdn.p2g}, {"g2p_received", gdn.g2p}, {"pressure_penalty", gdn.penalty}};
  for (const auto& [k, v] : g) w.row({"gdn", k, num(v)});
}

void write_trades(const std::string& path, const Scenario& s, const TradeDecision& trade) {
  CsvWriter w(path, scenario_hash(s), {"link", "device", "period", "quantity", "unit", "price", "payment"});
  const double dt = s.market.dt_hours;
  auto price = [](const Series& p, std::size_t t) { return t < p.size() ? p[t] : 0.0; };
  for (std::size_t k = 0; k < trade.p2g_kw.size(); ++k)
    for (std::size_t t = 0; t < trade.p2g_kw[k].size(); ++t) {
      const double q = trade.p2g_kw[k][t], p = price(trade.p2g_price, t);
      w.row({"p2g", s.devices.electrolyzers[k].id, num(static_cast<int>(t)), num(q), "kW", num(p), num(q * p * dt)});
    }
  for (std::size_t k = 0; k < trade.g2p_m3h.size(); ++k)
    for (std::size_t t = 0; t < trade.g2p_m3h[k].size(); ++t) {
      const double q = trade.g2p_m3h[k][t], p = price(trade.g2p_price, t);
      w.row({"g2p", s.devices.fuel_cells[k].id, num(static_cast<int>(t)), num(q), "m3/h", num(p), num(q * p * dt)});
    }
}

void write_admm_trace(const std::string& path, const Scenario& s, const std::vector<const AdmmTrace*>& traces) {
  CsvWriter w(path, scenario_hash(s),
              {"stage", "iteration", "variable", "adn", "gdn", "multiplier", "primal_residual", "dual_residual"});
  for (const AdmmTrace* tr : traces) {
    if (!tr) continue;
    for (const auto& it : tr->iterations)
      for (std::size_t i = 0; i < tr->variables.size(); ++i)
        w.row({tr->stage, num(it.iteration), tr->variables[i], num(it.adn[i]), num(it.gdn[i]),
               num(it.multiplier[i]), num(it.primal_residual), num(it.dual_residual)});
  }
}

void write_ccg_trace(const std::string& path, const Scenario& s, const RobustSolution& r) {
  CsvWriter w(path, scenario_hash(s),
              {"blend_round", "iteration", "lower_bound", "upper_bound", "best_upper_bound", "gap", "cut",
               "bcd_iterations", "bcd_converged"});
  for (const auto& it : r.trace)
    w.row({num(it.blend_round), num(it.iteration), num(it.lower_bound), num(it.upper_bound),
           num(it.best_upper_bound), num(it.gap), num(it.cut), num(it.bcd_iterations),
           it.bcd_converged ? "1" : "0"});
}

void write_worst_cases(const std::string& path, const Scenario& s, const RobustSolution& r) {
  const UncertaintyBox box = uncertainty_box(s, r.uncertainty);
  CsvWriter w(path, scenario_hash(s), {"realization", "kind", "element", "period", "value", "bound"});
  auto emit = [&](const std::string& name, const Realization& u) {
    for (const auto& p : box.pairs()) {
      const double v = p.load ? u.load_kw[p.index][p.period] : u.der_kw[p.index][p.period];
      const double hi = p.load ? box.upper.load_kw[p.index][p.period] : box.upper.der_kw[p.index][p.period];
      const double lo = p.load ? box.lower.load_kw[p.index][p.period] : box.lower.der_kw[p.index][p.period];
      const std::string bound = v == hi ? "upper" : v == lo ? "lower" : "interior";
      const std::string id = p.load ? s.power.buses[p.index].id : s.devices.ders[p.index].id;
      w.row({name, p.load ? "load_kw" : "der_kw", id, num(p.period), num(v), bound});
    }
  };
  for (std::size_t c = 0; c < r.cuts.size(); ++c) emit("cut" + std::to_string(c), r.cuts[c].u);
  emit("worst", r.worst.u);
}

void write_recourse(const std::string& path, const Scenario& s, const RobustSolution& r) {
  CsvWriter w(path, scenario_hash(s), {"battery", "period", "plan_kw", "adjust_kw", "net_kw"});
  const auto net = r.worst.recourse.schedule.battery_net();
  for (std::size_t k = 0; k < r.y.battery_plan.size(); ++k)
    for (std::size_t t = 0; t < r.y.battery_plan[k].size(); ++t)
      w.row({s.devices.batteries[k].id, num(static_cast<int>(t)), num(r.y.battery_plan[k][t]),
             num(r.worst.recourse.adjustment[k][t]), num(net[k][t])});
}

void write_oracle_report(const std::string& path, const Scenario& s, const std::vector<OracleReport>& reports) {
  CsvWriter w(path, scenario_hash(s),
              {"check", "oracle_value", "tested_value", "abs_gap", "rel_gap", "tolerance", "passed",
               "enumeration_size", "note"});
  for (const auto& r : reports)
    w.row({r.check, num(r.oracle_value), num(r.tested_value), num(r.abs_gap), num(r.rel_gap), num(r.tolerance),
           r.passed ? "1" : "0", std::to_string(r.enumeration_size), r.note});
}

}  // namespace hcng
