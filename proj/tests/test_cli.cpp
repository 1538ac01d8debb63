#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "doctest.h"
#include "hcng/csv.hpp"
#include "hcng/error.hpp"
#include "hcng/runner.hpp"

using namespace hcng;
namespace fs = std::filesystem;

namespace {

std::string scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("hcng_test_cli_" + name);
  fs::remove_all(p);
  return p.string();
}

std::map<std::string, std::string> summary_of(const std::string& dir) {
  std::map<std::string, std::string> m;
  for (const auto& row : read_csv(dir + "/summary.csv").rows) m[row[0]] = row[1];
  return m;
}

double value(const std::map<std::string, std::string>& m, const std::string& k) { return std::stod(m.at(k)); }

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

RunConfig config(RunMode mode, const std::string& out) {
  RunConfig c;
  c.scenario = "tiny4x3";
  c.mode = mode;
  c.out_dir = out;
  return c;
}

}  // namespace

TEST_CASE("number formatting") {
  CHECK(format_number(0.0) == "0");
  CHECK(format_number(-0.0) == "0");
  CHECK(format_number(1.5) == "1.5");
  CHECK(format_number(1.0 / 3.0) == "0.333333333333");
  CHECK(format_number(std::numeric_limits<double>::infinity()) == "inf");
}

TEST_CASE("csv round trip") {
  const std::string dir = scratch("csv");
  fs::create_directories(dir);
  const std::string path = dir + "/t.csv";
  {
    CsvWriter w(path, "abc123", {"a", "b"});
    w.row({"x,y", "say \"hi\""});
    CHECK_THROWS(w.row({"only one"}));
  }
  const CsvTable t = read_csv(path);
  CHECK(t.schema_version == kSchemaVersion);
  CHECK(t.scenario_hash == "abc123");
  CHECK(t.header == std::vector<std::string>{"a", "b"});
  REQUIRE(t.rows.size() == 1);
  CHECK(t.rows[0] == std::vector<std::string>{"x,y", "say \"hi\""});

  std::ofstream(dir + "/bad.csv") << "a,b\n1,2\n";
  CHECK_THROWS_AS(read_csv(dir + "/bad.csv"), ParseError);
}

TEST_CASE("mode and scenario resolution") {
  CHECK(parse_mode("oracle-suite") == RunMode::OracleSuite);
  CHECK(std::string(to_string(RunMode::Robust)) == "robust");
  CHECK_THROWS_AS(parse_mode("fast"), ValidationError);
  CHECK(fs::exists(resolve_scenario_path("tiny4x3")));
  CHECK_THROWS_AS(resolve_scenario_path("no_such_scenario"), ValidationError);
}

TEST_CASE("overrides") {
  const Scenario s = load_scenario(resolve_scenario_path("tiny4x3"));
  const Scenario t = apply_overrides(s, {"algorithm.admm_tol=1e-4", "uncertainty.orientation=asymmetric-up",
                                         "algorithm.pressure_penalty=2.5"});
  CHECK(t.algo.admm_tol == 1e-4);
  CHECK(t.uncertainty.orientation == BoxOrientation::AsymmetricUp);
  CHECK(t.pressure_penalty() == 2.5);
  CHECK(apply_overrides(s, {}) == s);
  CHECK_THROWS_AS(apply_overrides(s, {"algorithm.no_such_key=1"}), ValidationError);
  CHECK_THROWS_AS(apply_overrides(s, {"no_equals_sign"}), ValidationError);
  CHECK_THROWS_AS(apply_overrides(s, {"uncertainty.load_radius=-0.1"}), ValidationError);
}

TEST_CASE("independent run") {
  const std::string out = scratch("independent");
  const RunResult r = run(config(RunMode::Independent, out));
  REQUIRE(r.exit_code == kExitOk);
  CHECK_FALSE(fs::exists(out + "/trades.csv"));
  const auto m = summary_of(out);
  CHECK(value(m, "c0_adn") > 0.0);
  CHECK(value(m, "c0_gdn") > 0.0);
  CHECK(value(m, "nash_product") == 0.0);
  // Every artifact carries the schema version and the scenario hash.
  const std::string hash = scenario_hash(load_scenario(resolve_scenario_path("tiny4x3")));
  for (const auto& f : r.files) {
    const CsvTable t = read_csv(f);
    CHECK(t.schema_version == kSchemaVersion);
    CHECK(t.scenario_hash == hash);
  }
}

TEST_CASE("battery-only run trades nothing") {
  RunConfig c = config(RunMode::Cooperative, scratch("model3"));
  c.variant = ModelVariant::BatteryOnly;
  REQUIRE(run(c).exit_code == kExitOk);
  RunConfig ind = config(RunMode::Independent, scratch("model3_independent"));
  ind.variant = ModelVariant::BatteryOnly;
  REQUIRE(run(ind).exit_code == kExitOk);

  const auto m = summary_of(c.out_dir);
  const auto i = summary_of(ind.out_dir);
  CHECK(m.at("adn_cost") == i.at("adn_cost"));
  CHECK(m.at("gdn_cost") == i.at("gdn_cost"));
  CHECK(m.at("bargained") == "0");
  for (const auto& row : read_csv(c.out_dir + "/trades.csv").rows) CHECK(std::stod(row[3]) == 0.0);
}

TEST_CASE("cooperative runs are byte-identical") {
  RunConfig a = config(RunMode::Cooperative, scratch("det_a"));
  RunConfig b = config(RunMode::Cooperative, scratch("det_b"));
  a.emit_trace = b.emit_trace = true;
  const RunResult ra = run(a);
  const RunResult rb = run(b);
  REQUIRE(ra.exit_code == kExitOk);
  REQUIRE(ra.files.size() == rb.files.size());
  CHECK(fs::exists(a.out_dir + "/admm_trace.csv"));
  for (std::size_t i = 0; i < ra.files.size(); ++i) CHECK(slurp(ra.files[i]) == slurp(rb.files[i]));

  SUBCASE("comparing a run with itself gives zero deltas") {
    const std::string out = scratch("cmp");
    const auto files = compare_runs({a.out_dir, b.out_dir}, out);
    REQUIRE(files.size() == 2);
    const CsvTable t = read_csv(out + "/comparison.csv");
    REQUIRE(t.header.size() == 4);
    for (const auto& row : t.rows)
      if (!row[3].empty()) CHECK(row[3] == "0");
    CHECK_FALSE(read_csv(out + "/profiles.csv").rows.empty());
  }
  SUBCASE("schema mismatch is refused") {
    const std::string other = scratch("old_schema");
    fs::create_directories(other);
    std::ofstream(other + "/summary.csv") << "# schema_version=0 scenario_hash=x\nmetric,value\n";
    CHECK_THROWS_AS(compare_runs({a.out_dir, other}, scratch("cmp2")), ValidationError);
    CHECK_THROWS_AS(compare_runs({a.out_dir}, scratch("cmp3")), ValidationError);
  }
}

TEST_CASE("robust run") {
  RunConfig c = config(RunMode::Robust, scratch("robust"));
  c.uncertainty = UncertaintyCase::Case4;
  REQUIRE(run(c).exit_code == kExitOk);
  const auto m = summary_of(c.out_dir);
  CHECK(value(m, "gap") <= 1e-3);
  CHECK(value(m, "joint_at_worst") <= value(m, "deterministic_joint_at_worst") * (1 + 1e-6));
  const CsvTable trace = read_csv(c.out_dir + "/ccg_trace.csv");
  REQUIRE_FALSE(trace.rows.empty());
  CHECK(std::stod(trace.rows.back()[5]) <= 1e-3);
  for (const char* f : {"worst_cases.csv", "recourse.csv", "trades.csv"}) CHECK(fs::exists(c.out_dir + "/" + f));
}

TEST_CASE("failure classes map to exit codes") {
  RunConfig missing = config(RunMode::Cooperative, scratch("missing"));
  missing.scenario = "no_such_scenario";
  CHECK(run(missing).exit_code == kExitValidation);

  RunConfig bad = config(RunMode::Robust, scratch("bad"));
  bad.variant = ModelVariant::BatteryOnly;
  CHECK(run(bad).exit_code == kExitValidation);

  RunConfig stray = config(RunMode::Cooperative, scratch("stray"));
  stray.uncertainty = UncertaintyCase::Case2;
  CHECK(run(stray).exit_code == kExitValidation);

  RunConfig capped = config(RunMode::Cooperative, scratch("capped"));
  capped.overrides = {"algorithm.admm_max_iter=2"};
  const RunResult r = run(capped);
  CHECK(r.exit_code == kExitNonConvergence);
  CHECK(fs::exists(capped.out_dir + "/summary.csv"));
}
