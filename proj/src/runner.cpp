#include "hcng/runner.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

#include "hcng/bargain.hpp"
#include "hcng/csv.hpp"
#include "hcng/error.hpp"
#include "hcng/oracle.hpp"
#include "json.hpp"

namespace fs = std::filesystem;

namespace hcng {

namespace {

using Summary = std::vector<std::pair<std::string, std::string>>;

std::string num(double v) { return format_number(v); }
std::string flag(bool b) { return b ? "1" : "0"; }

class Artifacts {
 public:
  Artifacts(const RunConfig& c, const Scenario& s) : dir_(c.out_dir), s_(s) {}

  std::string path(const std::string& name) {
    const std::string p = (fs::path(dir_) / name).string();
    files_.push_back(p);
    return p;
  }
  void summary(const Summary& rows) {
    CsvWriter w(path("summary.csv"), scenario_hash(s_), {"metric", "value"});
    for (const auto& [k, v] : rows) w.row({k, v});
  }
  std::vector<std::string> files() const { return files_; }

 private:
  std::string dir_;
  const Scenario& s_;
  std::vector<std::string> files_;
};

void header_rows(Summary& out, const RunConfig& c, const Scenario& s) {
  out.push_back({"scenario", s.name});
  out.push_back({"mode", to_string(c.mode)});
  out.push_back({"variant", to_string(s.variant)});
  out.push_back({"seed", std::to_string(c.seed)});
}

void outcome_rows(Summary& out, double c0e, double c0g, double ce, double cg, bool bargained) {
  const double de = c0e - ce, dg = c0g - cg;
  out.push_back({"c0_adn", num(c0e)});
  out.push_back({"c0_gdn", num(c0g)});
  out.push_back({"adn_cost", num(ce)});
  out.push_back({"gdn_cost", num(cg)});
  out.push_back({"adn_surplus", num(de)});
  out.push_back({"gdn_surplus", num(dg)});
  out.push_back({"total_surplus", num(de + dg)});
  out.push_back({"nash_product", num(bargained ? de * dg : 0.0)});
  out.push_back({"bargained", flag(bargained)});
}

void marginal_rows(Summary& out, const Scenario& s) {
  if (s.variant == ModelVariant::BatteryOnly) return;
  const MarginalCost m = conversion_marginal_cost(s);
  out.push_back({"marginal_conversion_cost_per_kwh", num(m.value)});
  out.push_back({"marginal_cost_period", std::to_string(m.period)});
  out.push_back({"marginal_cost_step_kwh", num(m.step_kwh)});
  out.push_back({"marginal_cost_backward", flag(m.backward)});
}

int run_independent(const RunConfig& c, const Scenario& s, Artifacts& a) {
  const Disagreement d = solve_independent(s);
  Summary sum;
  header_rows(sum, c, s);
  outcome_rows(sum, d.adn_cost, d.gdn_cost, d.adn_cost, d.gdn_cost, false);
  sum.push_back({"converged", "1"});
  a.summary(sum);
  write_costs(a.path("costs.csv"), s, d.adn.cost, d.gdn.cost);
  write_gdn_schedule(a.path("gdn_schedule.csv"), s, d.gdn.schedule);
  write_adn_schedule(a.path("adn_schedule.csv"), s, d.adn.schedule);
  return kExitOk;
}

int run_cooperative(const RunConfig& c, const Scenario& s, Artifacts& a) {
  const BargainOutcome o = bargain(s);
  Summary sum;
  header_rows(sum, c, s);
  outcome_rows(sum, o.c0_adn, o.c0_gdn, o.adn_cost, o.gdn_cost, o.bargained);
  sum.push_back({"converged", flag(o.converged)});
  sum.push_back({"blend_rounds", std::to_string(o.blend_rounds)});
  sum.push_back({"quantity_iterations", std::to_string(o.q1.iterations.size())});
  sum.push_back({"price_iterations", std::to_string(o.q2.iterations.size())});
  marginal_rows(sum, s);
  a.summary(sum);
  write_costs(a.path("costs.csv"), s, o.adn.cost, o.gdn.cost);
  write_gdn_schedule(a.path("gdn_schedule.csv"), s, o.gdn.schedule);
  write_adn_schedule(a.path("adn_schedule.csv"), s, o.adn.schedule);
  write_trades(a.path("trades.csv"), s, o.trade);
  if (c.emit_trace) write_admm_trace(a.path("admm_trace.csv"), s, {&o.q1, &o.q2});
  return o.converged ? kExitOk : kExitNonConvergence;
}

int run_robust(const RunConfig& c, const Scenario& s, Artifacts& a) {
  const UncertaintyCase uc = c.uncertainty.value_or(UncertaintyCase::Case4);
  const RobustSolution r = ccg(s, uc);
  const RobustSettlement st = settle_robust(s, r);
  const FirstStage det = deterministic_first_stage(s);
  const Recourse det_rec = solve_sp1(s, det, r.worst.u);

  Summary sum;
  header_rows(sum, c, s);
  sum.push_back({"case", to_string(uc)});
  outcome_rows(sum, st.c0_adn, st.c0_gdn, st.adn_cost, st.gdn_cost, st.bargained);
  sum.push_back({"converged", flag(r.converged)});
  sum.push_back({"lower_bound", num(r.lower_bound())});
  sum.push_back({"upper_bound", num(r.upper_bound())});
  sum.push_back({"gap", num(r.trace.empty() ? 0.0 : r.trace.back().gap)});
  sum.push_back({"ccg_iterations", std::to_string(r.trace.empty() ? 0 : r.trace.back().iteration)});
  sum.push_back({"blend_rounds", std::to_string(r.blend_rounds)});
  sum.push_back({"cuts", std::to_string(r.cuts.size())});
  sum.push_back({"worst_case_adn_value", num(r.worst.value)});
  sum.push_back({"worst_case_bcd_iterations", std::to_string(r.worst.iterations)});
  sum.push_back({"worst_case_infeasible", flag(r.worst.recourse.infeasible)});
  sum.push_back({"adn_own_at_worst", num(r.worst.recourse.cost.total)});
  sum.push_back({"joint_at_worst", num(r.y.gdn_objective + r.worst.value)});
  sum.push_back({"deterministic_adn_own_at_worst", num(det_rec.cost.total)});
  sum.push_back({"deterministic_joint_at_worst", num(det.gdn_objective + det_rec.value)});
  a.summary(sum);

  write_costs(a.path("costs.csv"), s, adn_cost(s, r.worst.recourse.schedule, st.trade),
              gdn_cost(s, r.y.gdn, st.trade));
  write_gdn_schedule(a.path("gdn_schedule.csv"), s, r.y.gdn);
  write_adn_schedule(a.path("adn_schedule.csv"), s, r.worst.recourse.schedule);
  write_trades(a.path("trades.csv"), s, st.trade);
  write_ccg_trace(a.path("ccg_trace.csv"), s, r);
  write_worst_cases(a.path("worst_cases.csv"), s, r);
  write_recourse(a.path("recourse.csv"), s, r);
  if (c.emit_trace) write_admm_trace(a.path("admm_trace.csv"), s, {&st.q2});
  return r.converged ? kExitOk : kExitNonConvergence;
}

OracleReport refused(const std::string& check, const std::string& why) {
  OracleReport r;
  r.check = check;
  r.oracle_value = r.tested_value = r.abs_gap = r.rel_gap = std::numeric_limits<double>::quiet_NaN();
  r.note = "refused: " + why;
  return r;
}

int run_oracle_suite(const RunConfig& c, const Scenario& s, Artifacts& a) {
  std::vector<OracleReport> reports;
  const Disagreement d = solve_independent(s);
  const double c0 = d.adn_cost + d.gdn_cost;
  const QuantityResult admm = agree_quantities(s, QuantityMethod::Admm);
  const QuantityResult central = agree_quantities(s, QuantityMethod::Centralized);
  reports.push_back(compare_values("joint benefit: ADMM vs centralized", c0 - central.joint_cost(),
                                   c0 - admm.joint_cost(), 1e-3, 0));

  const std::string grid_check = "joint benefit vs trade lattice";
  try {
    reports.push_back(grid_report(grid_search_q1(s), evaluate_trade(s, d, admm.trade)));
  } catch (const DomainError& e) {
    reports.push_back(refused(grid_check, e.what()));
  }
  const std::string fixed_check = "joint benefit vs trade lattice at the agreed blend";
  try {
    GridOptions at;
    at.blend = admm.blend;
    OracleReport r = grid_report(grid_search_q1(s, at), evaluate_trade(s, d, admm.trade, &admm.blend));
    r.check = fixed_check;
    reports.push_back(r);
  } catch (const DomainError& e) {
    reports.push_back(refused(fixed_check, e.what()));
  }

  const BargainOutcome o = settle(s, d, admm, PriceMethod::Admm);
  reports.push_back(transfer_split_check(o));

  const UncertaintyCase uc = c.uncertainty.value_or(UncertaintyCase::Case4);
  const RobustSolution r = ccg(s, uc);
  try {
    reports.push_back(certify_worst_case(s, r.y, uncertainty_box(s, uc), r.worst));
  } catch (const DomainError& e) {
    reports.push_back(refused("worst case vs vertex enumeration", e.what()));
  }

  int passed = 0, failed = 0, skipped = 0;
  for (const auto& rep : reports) {
    if (rep.note.rfind("refused", 0) == 0)
      ++skipped;
    else if (rep.passed)
      ++passed;
    else
      ++failed;
  }
  Summary sum;
  header_rows(sum, c, s);
  sum.push_back({"case", to_string(uc)});
  sum.push_back({"checks", std::to_string(reports.size())});
  sum.push_back({"passed", std::to_string(passed)});
  sum.push_back({"failed", std::to_string(failed)});
  sum.push_back({"refused", std::to_string(skipped)});
  sum.push_back({"converged", flag(admm.converged && r.converged)});
  a.summary(sum);
  write_oracle_report(a.path("oracle_report.csv"), s, reports);
  return admm.converged && r.converged ? kExitOk : kExitNonConvergence;
}

std::string join(const std::vector<std::string>& v) {
  std::string out;
  for (const auto& p : v) out += (out.empty() ? "" : "; ") + p;
  return out;
}

}  // namespace

const char* to_string(RunMode m) {
  switch (m) {
    case RunMode::Independent: return "independent";
    case RunMode::Cooperative: return "cooperative";
    case RunMode::Robust: return "robust";
    case RunMode::OracleSuite: return "oracle-suite";
  }
  return "?";
}

RunMode parse_mode(const std::string& text) {
  if (text == "independent") return RunMode::Independent;
  if (text == "cooperative") return RunMode::Cooperative;
  if (text == "robust") return RunMode::Robust;
  if (text == "oracle-suite") return RunMode::OracleSuite;
  throw ValidationError({"unknown mode '" + text + "' (independent, cooperative, robust, oracle-suite)"});
}

std::string resolve_scenario_path(const std::string& name_or_path) {
  if (fs::exists(name_or_path)) return name_or_path;
  for (const std::string& cand : {std::string(HCNG_DATA_DIR) + "/" + name_or_path,
                                  std::string(HCNG_DATA_DIR) + "/" + name_or_path + ".json"})
    if (fs::exists(cand)) return cand;
  throw ValidationError({"scenario '" + name_or_path + "' not found (as a path or in " + HCNG_DATA_DIR + ")"});
}

Scenario apply_overrides(const Scenario& s, const std::vector<std::string>& overrides) {
  if (overrides.empty()) return s;
  nlohmann::json doc = nlohmann::json::parse(serialize_scenario(s));
  std::vector<std::string> problems;
  for (const std::string& item : overrides) {
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0) {
      problems.push_back("override '" + item + "' is not key=value");
      continue;
    }
    const std::string key = item.substr(0, eq);
    const std::string text = item.substr(eq + 1);
    nlohmann::json value = nlohmann::json::parse(text, nullptr, false);
    if (value.is_discarded()) value = text;

    nlohmann::json* node = &doc;
    std::stringstream parts(key);
    std::string part;
    std::vector<std::string> path;
    while (std::getline(parts, part, '.')) path.push_back(part);
    bool ok = true;
    for (std::size_t i = 0; i + 1 < path.size() && ok; ++i) {
      ok = node->is_object() && node->contains(path[i]);
      if (ok) node = &(*node)[path[i]];
    }
    // Optional settings may be absent from the serialized form; allow them
    // only where the parser knows them.
    const bool known_optional = key == "algorithm.pressure_penalty";
    if (!ok || !node->is_object() || (!node->contains(path.back()) && !known_optional)) {
      problems.push_back("override '" + key + "' does not name a scenario setting");
      continue;
    }
    (*node)[path.back()] = value;
  }
  if (!problems.empty()) throw ValidationError(problems);
  return parse_scenario(doc.dump());
}

void validate_config(const RunConfig& c) {
  std::vector<std::string> problems;
  if (c.scenario.empty()) problems.push_back("no scenario given");
  if (c.mode == RunMode::Robust && c.variant == ModelVariant::BatteryOnly)
    problems.push_back("robust mode needs model1 or model2");
  if (c.uncertainty && c.mode != RunMode::Robust && c.mode != RunMode::OracleSuite)
    problems.push_back("--case only applies to robust and oracle-suite runs");
  std::error_code ec;
  fs::create_directories(c.out_dir, ec);
  if (ec || !fs::is_directory(c.out_dir)) {
    problems.push_back("output directory '" + c.out_dir + "' cannot be created");
  } else {
    const fs::path probe = fs::path(c.out_dir) / ".write_probe";
    std::ofstream(probe.string()) << "";
    if (!fs::exists(probe)) problems.push_back("output directory '" + c.out_dir + "' is not writable");
    fs::remove(probe, ec);
  }
  if (!problems.empty()) throw ValidationError(problems);
}

RunResult run(const RunConfig& c) {
  RunResult res;
  try {
    validate_config(c);
    Scenario s = apply_overrides(load_scenario(resolve_scenario_path(c.scenario)), c.overrides);
    if (c.variant && *c.variant != s.variant) s = with_variant(s, *c.variant);
    if (c.mode == RunMode::Robust && s.variant == ModelVariant::BatteryOnly)
      throw ValidationError({"robust mode needs model1 or model2"});
    Artifacts a(c, s);
    switch (c.mode) {
      case RunMode::Independent: res.exit_code = run_independent(c, s, a); break;
      case RunMode::Cooperative: res.exit_code = run_cooperative(c, s, a); break;
      case RunMode::Robust: res.exit_code = run_robust(c, s, a); break;
      case RunMode::OracleSuite: res.exit_code = run_oracle_suite(c, s, a); break;
    }
    res.files = a.files();
    res.message = res.exit_code == kExitOk ? "ok" : "finished without converging";
  } catch (const ValidationError& e) {
    res.exit_code = kExitValidation;
    res.message = "invalid input: " + join(e.problems());
  } catch (const ParseError& e) {
    res.exit_code = kExitValidation;
    res.message = std::string("invalid input: ") + e.what();
  } catch (const DomainError& e) {
    res.exit_code = kExitValidation;
    res.message = std::string("invalid input: ") + e.what();
  } catch (const SolverError& e) {
    res.exit_code = kExitSolver;
    res.message = std::string("solver failure: ") + e.what();
  } catch (const ConvergenceError& e) {
    res.exit_code = kExitNonConvergence;
    res.message = std::string("no convergence: ") + e.what();
  }
  return res;
}

std::vector<std::string> compare_runs(const std::vector<std::string>& run_dirs, const std::string& out_dir) {
  if (run_dirs.size() < 2) throw ValidationError({"compare needs at least two run directories"});
  std::vector<CsvTable> summaries;
  std::vector<std::string> names;
  std::vector<std::string> hashes;
  for (const auto& d : run_dirs) {
    summaries.push_back(read_csv((fs::path(d) / "summary.csv").string()));
    std::string name = fs::path(d).lexically_normal().filename().string();
    if (name.empty()) name = fs::path(d).lexically_normal().parent_path().filename().string();
    if (std::find(names.begin(), names.end(), name) != names.end()) name += "_" + std::to_string(names.size());
    names.push_back(name);
    hashes.push_back(summaries.back().scenario_hash);
  }
  for (const auto& t : summaries)
    if (t.schema_version != summaries.front().schema_version)
      throw ValidationError({"runs use different schema versions"});
  std::string joined_hash;
  for (const auto& h : hashes) joined_hash += (joined_hash.empty() ? "" : "+") + h;

  fs::create_directories(out_dir);
  std::vector<std::string> files;

  // Metrics in first-seen order across runs.
  std::vector<std::string> metrics;
  std::vector<std::map<std::string, std::string>> values(summaries.size());
  for (std::size_t r = 0; r < summaries.size(); ++r)
    for (const auto& row : summaries[r].rows) {
      if (row.size() < 2) continue;
      if (!values[r].count(row[0]) && std::find(metrics.begin(), metrics.end(), row[0]) == metrics.end())
        metrics.push_back(row[0]);
      values[r][row[0]] = row[1];
    }
  std::vector<std::string> header{"metric"};
  for (const auto& n : names) header.push_back(n);
  for (std::size_t r = 1; r < names.size(); ++r) header.push_back("delta_" + names[r]);
  {
    const std::string path = (fs::path(out_dir) / "comparison.csv").string();
    CsvWriter w(path, joined_hash, header);
    for (const auto& m : metrics) {
      std::vector<std::string> row{m};
      for (auto& v : values) row.push_back(v.count(m) ? v[m] : "");
      const std::string& base = row[1];
      for (std::size_t r = 1; r < names.size(); ++r) {
        const std::string& other = row[r + 1];
        char* e1 = nullptr;
        char* e2 = nullptr;
        const double a = std::strtod(base.c_str(), &e1);
        const double b = std::strtod(other.c_str(), &e2);
        const bool numeric = !base.empty() && !other.empty() && *e1 == '\0' && *e2 == '\0';
        row.push_back(numeric ? format_number(b - a) : "");
      }
      w.row(row);
    }
    files.push_back(path);
  }

  // Per-period profiles for plotting.
  const std::set<std::string> wanted{"grid_buy_kw", "grid_export_kw", "battery_discharge_kw", "battery_charge_kw",
                                     "sofc_power_kw", "et_power_kw", "der_kw", "hgn_m3h", "omega",
                                     "g2p_m3h", "h2_injection_m3h"};
  using Key = std::tuple<std::string, std::string, std::string, int>;
  std::vector<Key> keys;
  std::map<Key, std::vector<std::string>> profile;
  for (std::size_t r = 0; r < run_dirs.size(); ++r)
    for (const char* file : {"adn_schedule.csv", "gdn_schedule.csv"}) {
      const fs::path p = fs::path(run_dirs[r]) / file;
      if (!fs::exists(p)) continue;
      const CsvTable t = read_csv(p.string());
      const std::string source = std::string(file).substr(0, 3);
      for (const auto& row : t.rows) {
        if (row.size() < 4 || !wanted.count(row[0])) continue;
        const Key k{source, row[0], row[1], std::stoi(row[2])};
        auto [it, fresh] = profile.try_emplace(k, std::vector<std::string>(run_dirs.size()));
        if (fresh) keys.push_back(k);
        it->second[r] = row[3];
      }
    }
  {
    std::vector<std::string> ph{"network", "quantity", "element", "period"};
    for (const auto& n : names) ph.push_back(n);
    const std::string path = (fs::path(out_dir) / "profiles.csv").string();
    CsvWriter w(path, joined_hash, ph);
    for (const auto& k : keys) {
      std::vector<std::string> row{std::get<0>(k), std::get<1>(k), std::get<2>(k), std::to_string(std::get<3>(k))};
      for (const auto& v : profile[k]) row.push_back(v);
      w.row(row);
    }
    files.push_back(path);
  }
  return files;
}

}  // namespace hcng
