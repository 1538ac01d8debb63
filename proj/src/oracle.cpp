#include "hcng/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <map>
#include <mutex>
#include <thread>

#include "hcng/error.hpp"

namespace hcng {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

std::size_t saturating_pow(std::size_t base, std::size_t exp) {
  std::size_t r = 1;
  for (std::size_t i = 0; i < exp; ++i) {
    if (r > std::numeric_limits<std::size_t>::max() / base) return std::numeric_limits<std::size_t>::max();
    r *= base;
  }
  return r;
}

// Runs f(i) for i in [0, n) on a few threads; the first exception wins.
template <class F>
void parallel_for(std::size_t n, F f) {
  const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(std::thread::hardware_concurrency(), 8));
  std::exception_ptr error;
  std::mutex m;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < n; i += workers) {
        try {
          f(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(m);
          if (!error) error = std::current_exception();
          return;
        }
      }
    });
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

class Lattice {
 public:
  Lattice(const Scenario& s, const Disagreement& d, const BlendState* blend, std::vector<double> upper,
          int points)
      : s_(s), d_(d), blend_(blend), upper_(std::move(upper)), points_(points) {}

  double value(const std::vector<int>& idx) {
    auto it = cache_.find(idx);
    if (it != cache_.end()) return it->second;
    const double v = evaluate_trade(s_, d_, unflatten_quantities(s_, point(idx)), blend_);
    cache_.emplace(idx, v);
    return v;
  }

  std::vector<double> point(const std::vector<int>& idx) const {
    std::vector<double> x(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) x[i] = upper_[i] * idx[i] / (points_ - 1);
    return x;
  }

  std::size_t evaluations() const { return cache_.size(); }

 private:
  const Scenario& s_;
  const Disagreement& d_;
  const BlendState* blend_;
  std::vector<double> upper_;
  int points_;
  std::map<std::vector<int>, double> cache_;
};

struct LatticeBest {
  std::vector<int> idx;
  double value = kNegInf;
  std::size_t evaluations = 0;
  bool exhaustive = false;
};

LatticeBest search_lattice(const Scenario& s, const Disagreement& d, const std::vector<double>& upper,
                           int points, const GridOptions& opts) {
  const std::size_t n = upper.size();
  Lattice lat(s, d, opts.blend ? &*opts.blend : nullptr, upper, points);
  LatticeBest best;
  best.idx.assign(n, 0);

  if (saturating_pow(points, n) <= opts.exhaustive_limit) {
    best.exhaustive = true;
    std::vector<int> idx(n, 0);
    while (true) {
      const double v = lat.value(idx);
      if (v > best.value) {
        best.value = v;
        best.idx = idx;
      }
      std::size_t i = 0;
      while (i < n && ++idx[i] == points) idx[i++] = 0;
      if (i == n) break;
    }
    best.evaluations = lat.evaluations();
    return best;
  }

  std::size_t inherited = 0;
  if (points > 2 && (points - 1) % 2 == 0) {
    const LatticeBest coarse = search_lattice(s, d, upper, (points - 1) / 2 + 1, opts);
    for (std::size_t i = 0; i < n; ++i) best.idx[i] = 2 * coarse.idx[i];
    inherited = coarse.evaluations;
  }
  best.value = lat.value(best.idx);
  for (int sweep = 0; sweep < opts.max_sweeps; ++sweep) {
    bool moved = false;
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<int> trial = best.idx;
      for (int k = 0; k < points; ++k) {
        trial[i] = k;
        const double v = lat.value(trial);
        if (v > best.value + 1e-12 * std::abs(best.value)) {
          best.value = v;
          best.idx = trial;
          moved = true;
        }
      }
    }
    if (!moved) break;
  }
  best.evaluations = lat.evaluations() + inherited;
  return best;
}

}  // namespace

OracleReport compare_values(std::string check, double oracle, double tested, double tolerance,
                            std::size_t enumeration_size) {
  OracleReport r;
  r.check = std::move(check);
  r.oracle_value = oracle;
  r.tested_value = tested;
  r.abs_gap = std::abs(tested - oracle);
  r.rel_gap = r.abs_gap / std::max(std::abs(oracle), 1e-12);
  r.tolerance = tolerance;
  r.passed = r.rel_gap <= tolerance;
  r.enumeration_size = enumeration_size;
  return r;
}

EnumeratedWorstCase enumerate_worst_case(const Scenario& s, const FirstStage& y, const UncertaintyBox& box,
                                         const RecourseOptions& opts) {
  const auto pairs = box.pairs();
  if (pairs.size() > max_enumerated_pairs)
    throw DomainError("vertex enumeration refused: " + std::to_string(pairs.size()) +
                      " uncertain pairs exceed the cap of " + std::to_string(max_enumerated_pairs));
  const std::size_t n = std::size_t{1} << pairs.size();
  // Vertex i sets pair j to its upper bound when bit (m-1-j) is set, so the
  // numeric order of i is the lexicographic order of the bit vectors.
  auto bits_of = [&](std::size_t i) {
    std::vector<bool> bits(pairs.size());
    for (std::size_t j = 0; j < pairs.size(); ++j) bits[j] = (i >> (pairs.size() - 1 - j)) & 1u;
    return bits;
  };
  std::vector<double> values(n);
  parallel_for(n, [&](std::size_t i) { values[i] = solve_sp1(s, y, box.vertex(bits_of(i)), opts).value; });

  const double top = *std::max_element(values.begin(), values.end());
  const double tie = 1e-9 * std::max(1.0, std::abs(top));
  std::size_t pick = 0;
  while (values[pick] < top - tie) ++pick;
  return {box.vertex(bits_of(pick)), values[pick], n};
}

OracleReport certify_worst_case(const Scenario& s, const FirstStage& y, const UncertaintyBox& box,
                                const WorstCase& found, const RecourseOptions& opts) {
  const EnumeratedWorstCase e = enumerate_worst_case(s, y, box, opts);
  OracleReport r = compare_values("worst case vs vertex enumeration", e.value, found.value, 1e-6, e.vertices);
  if (!box.is_vertex(found.u)) {
    r.passed = false;
    r.note = "reported worst case is not a box vertex";
  }
  return r;
}

double evaluate_trade(const Scenario& s, const Disagreement& d, const TradeDecision& quantities,
                      const BlendState* blend) {
  try {
    const GdnResult g = blend ? solve_gdn_at(s, quantities, *blend) : solve_gdn(s, quantities);
    const AdnResult a = solve_adn(s, quantities, g.schedule.blend);
    return d.adn_cost + d.gdn_cost - a.cost.total - g.cost.total;
  } catch (const SolverError&) {
    return kNegInf;
  } catch (const ConvergenceError&) {
    return kNegInf;
  }
}

GridResult grid_search_q1(const Scenario& s, const GridOptions& opts) {
  if (opts.points < 2) throw DomainError("grid search needs at least two points per quantity");
  const int links = static_cast<int>(s.devices.electrolyzers.size() + s.devices.fuel_cells.size());
  if (s.variant != ModelVariant::Cooperative || links == 0)
    throw DomainError("grid search refused: the variant has no trade links");
  if (links > opts.max_links || s.periods() > opts.max_periods)
    throw DomainError("grid search refused: " + std::to_string(links) + " links x " +
                      std::to_string(s.periods()) + " periods exceeds " + std::to_string(opts.max_links) +
                      " x " + std::to_string(opts.max_periods));

  // Upper ends: electrolyzer rating, and the fuel gas that reaches the
  // fuel-cell rating at the leanest allowed blend.
  const double lean = hhv_mix(s.blend.omega_max, s.blend.hhv_h2, s.blend.hhv_ch4);
  TradeDecision cap = TradeDecision::zero(s);
  for (std::size_t k = 0; k < s.devices.electrolyzers.size(); ++k)
    std::fill(cap.p2g_kw[k].begin(), cap.p2g_kw[k].end(), s.devices.electrolyzers[k].rated_kw);
  for (std::size_t k = 0; k < s.devices.fuel_cells.size(); ++k) {
    const FuelCell& f = s.devices.fuel_cells[k];
    std::fill(cap.g2p_m3h[k].begin(), cap.g2p_m3h[k].end(), f.rated_kw / sofc_power_kw(f, 1.0, lean, s));
  }

  GridResult out;
  out.upper = flatten_quantities(cap);
  out.lattice_size = saturating_pow(opts.points, out.upper.size());
  const Disagreement d = solve_independent(s);
  const LatticeBest best = search_lattice(s, d, out.upper, opts.points, opts);
  Lattice lat(s, d, nullptr, out.upper, opts.points);
  out.best = unflatten_quantities(s, lat.point(best.idx));
  out.best_benefit = best.value;
  out.evaluations = best.evaluations;
  out.exhaustive = best.exhaustive;
  return out;
}

OracleReport grid_report(const GridResult& grid, double benefit) {
  const double slack = 1e-3 * std::abs(grid.best_benefit) + 1e-6;
  OracleReport r = compare_values("joint benefit vs trade lattice", grid.best_benefit, benefit, 0.0,
                                  grid.lattice_size);
  r.tolerance = slack / std::max(std::abs(grid.best_benefit), 1e-12);
  r.passed = benefit >= grid.best_benefit - slack;
  r.note = (grid.exhaustive ? "exhaustive, " : "coordinate search, ") + std::to_string(grid.evaluations) +
           " evaluations";
  return r;
}

OracleReport transfer_split_check(double adn_surplus, double gdn_surplus) {
  const double S = adn_surplus + gdn_surplus;
  if (!(S > 0.0)) {
    OracleReport r = compare_values("surplus split vs transfer scan", 0.0, 0.0, 0.01, 0);
    r.passed = true;
    r.note = "no surplus";
    return r;
  }
  constexpr int steps = 1000;
  double best_share = 0.0;
  double best_log = kNegInf;
  for (int i = 0; i <= steps; ++i) {
    const double share = S * i / steps;
    const double v = std::log(share) + std::log(S - share);  // -inf at the ends
    if (v > best_log) {
      best_log = v;
      best_share = share;
    }
  }
  OracleReport r = compare_values("surplus split vs transfer scan", best_share, adn_surplus, 0.0, steps + 1);
  r.rel_gap = r.abs_gap / S;
  r.tolerance = 0.01;
  r.passed = r.rel_gap <= r.tolerance;
  r.note = "gaps relative to the total surplus";
  return r;
}

OracleReport transfer_split_check(const BargainOutcome& o) {
  if (!o.bargained) return transfer_split_check(0.0, 0.0);
  return transfer_split_check(o.adn_surplus(), o.gdn_surplus());
}

}  // namespace hcng
