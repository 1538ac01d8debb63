#pragma once

// Brute-force checks for the bargaining and robust solvers.  The searches
// here are deliberately naive: exhaustive vertex enumeration, a lattice over
// trade quantities evaluated by standalone operator solves, and a scan over
// surplus splits.  Each refuses explicitly when its search space is too big.

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "hcng/bargain.hpp"
#include "hcng/robust.hpp"

namespace hcng {

struct OracleReport {
  std::string check;
  double oracle_value = 0.0;
  double tested_value = 0.0;
  double abs_gap = 0.0;
  double rel_gap = 0.0;  // abs_gap / max(|oracle_value|, 1e-12)
  double tolerance = 0.0;
  bool passed = false;
  std::size_t enumeration_size = 0;
  std::string note;
};

// Two-sided comparison: passes when rel_gap <= tolerance.
OracleReport compare_values(std::string check, double oracle, double tested, double tolerance,
                            std::size_t enumeration_size);

struct EnumeratedWorstCase {
  Realization u;
  double value = 0.0;
  std::size_t vertices = 0;
};

inline constexpr std::size_t max_enumerated_pairs = 16;

// Recourse value at every vertex of the box; returns the largest.  Ties go to
// the lexicographically smallest vertex (lower before upper, pairs in box
// order).  Throws DomainError above max_enumerated_pairs uncertain pairs.
EnumeratedWorstCase enumerate_worst_case(const Scenario& s, const FirstStage& y, const UncertaintyBox& box,
                                         const RecourseOptions& opts = {});

OracleReport certify_worst_case(const Scenario& s, const FirstStage& y, const UncertaintyBox& box,
                                const WorstCase& found, const RecourseOptions& opts = {});

struct GridOptions {
  int points = 11;                    // per link-period, endpoints included
  std::size_t exhaustive_limit = 4096;  // above this the lattice is searched coordinate-wise
  int max_links = 2;
  int max_periods = 4;
  int max_sweeps = 20;
  // Evaluate every point at this blend instead of iterating the blend per point.
  std::optional<BlendState> blend;
};

struct GridResult {
  double best_benefit = 0.0;  // C0^E + C0^G - joint own cost
  TradeDecision best;
  std::vector<double> upper;  // per flattened quantity
  std::size_t lattice_size = 0;  // points^dimensions (saturating)
  std::size_t evaluations = 0;
  bool exhaustive = false;
};

// Joint benefit of fixed trade quantities from standalone solves of both
// operators (blend iterated by the GDN).  Returns -infinity when either
// operator cannot accommodate the trade.  With a blend given the GDN is
// solved once at that blend.
double evaluate_trade(const Scenario& s, const Disagreement& d, const TradeDecision& quantities,
                      const BlendState* blend = nullptr);

// Lattice search over the trade quantities.  Small lattices are enumerated;
// larger ones are searched one coordinate at a time, starting from the best
// point of the coarser lattice when points - 1 is even (so halving the step
// never loses the coarse optimum).  Throws DomainError above the link or
// period limits.
GridResult grid_search_q1(const Scenario& s, const GridOptions& opts = {});

// One-sided: passes when benefit >= grid best - (1e-3 |grid best| + 1e-6).
OracleReport grid_report(const GridResult& grid, double benefit);

// Scan of ln(dE) + ln(S - dE) over dE in [0, S] at steps of 1e-3 S, compared
// with the given split; tolerance 1% of S.  S <= 0 passes trivially.
OracleReport transfer_split_check(double adn_surplus, double gdn_surplus);
OracleReport transfer_split_check(const BargainOutcome& o);

}  // namespace hcng
