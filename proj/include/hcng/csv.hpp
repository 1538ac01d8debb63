#pragma once

// CSV artifacts.  Every file opens with a comment line carrying the schema
// version and the scenario hash, then a header row.  Numbers are printed
// with a fixed format so that identical runs give identical bytes.

#include <fstream>
#include <string>
#include <vector>

#include "hcng/adn.hpp"
#include "hcng/bargain.hpp"
#include "hcng/gdn.hpp"
#include "hcng/oracle.hpp"
#include "hcng/robust.hpp"

namespace hcng {

std::string format_number(double v);

class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::string& scenario_hash, const std::vector<std::string>& header);

  void row(const std::vector<std::string>& cells);
  const std::string& path() const { return path_; }

 private:
  std::string path_;
  std::size_t columns_;
  std::ofstream out_;
};

// First line of every file: "# schema_version=1 scenario_hash=<hex>".
std::string csv_preamble(const std::string& scenario_hash);

// Reads a file written by CsvWriter: the hash from the preamble, the header
// and the rows.  Throws ParseError on a missing or foreign preamble.
struct CsvTable {
  int schema_version = 0;
  std::string scenario_hash;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};
CsvTable read_csv(const std::string& path);

// Long-format schedules: quantity, element, period, value.
void write_gdn_schedule(const std::string& path, const Scenario& s, const GdnSchedule& g);
void write_adn_schedule(const std::string& path, const Scenario& s, const AdnSchedule& a);

// entity, component, value
void write_costs(const std::string& path, const Scenario& s, const AdnCostBreakdown& adn,
                 const GdnCostBreakdown& gdn);

// link, device, period, quantity, unit, price, payment
void write_trades(const std::string& path, const Scenario& s, const TradeDecision& trade);

void write_admm_trace(const std::string& path, const Scenario& s, const std::vector<const AdmmTrace*>& traces);
void write_ccg_trace(const std::string& path, const Scenario& s, const RobustSolution& r);
// Every stored cut plus the final worst case: realization, kind, element, period, value, bound.
void write_worst_cases(const std::string& path, const Scenario& s, const RobustSolution& r);
// Battery plan and adjustment at the worst case.
void write_recourse(const std::string& path, const Scenario& s, const RobustSolution& r);
void write_oracle_report(const std::string& path, const Scenario& s, const std::vector<OracleReport>& reports);

}  // namespace hcng
