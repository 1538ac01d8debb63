#pragma once

// Solver-agnostic conic programs: linear, second-order-cone and logarithmic
// objective terms, plus a convex quadratic objective part.  Every model in
// the library is assembled as a Program and handed to solve().

#include <limits>
#include <span>
#include <string>
#include <vector>

namespace hcng::conic {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct Term {
  int var;
  double coef;
};

class LinExpr {
 public:
  LinExpr() = default;
  LinExpr(double constant) : constant_(constant) {}  // NOLINT: implicit by design of the algebra

  static LinExpr var(int v, double coef = 1.0) {
    LinExpr e;
    e.terms_.push_back({v, coef});
    return e;
  }

  LinExpr& add(int v, double coef) {
    if (coef != 0.0) terms_.push_back({v, coef});
    return *this;
  }
  LinExpr& add_constant(double c) {
    constant_ += c;
    return *this;
  }
  LinExpr& operator+=(const LinExpr& o);
  LinExpr& operator-=(const LinExpr& o);
  LinExpr& operator*=(double k);

  const std::vector<Term>& terms() const { return terms_; }
  double constant() const { return constant_; }
  double evaluate(std::span<const double> x) const;

 private:
  std::vector<Term> terms_;
  double constant_ = 0.0;
};

inline LinExpr operator+(LinExpr a, const LinExpr& b) { return a += b; }
inline LinExpr operator-(LinExpr a, const LinExpr& b) { return a -= b; }
inline LinExpr operator*(double k, LinExpr a) { return a *= k; }
inline LinExpr operator*(LinExpr a, double k) { return a *= k; }

enum class RowKind { Equality, Inequality, Cone };

// Handle to a constraint; stable for the lifetime of the Program.
struct RowRef {
  RowKind kind = RowKind::Equality;
  int index = -1;
};

struct LogTerm {
  double coef;  // objective contribution coef * log(arg); coef < 0 keeps it convex
  LinExpr arg;
  std::string name;
};

struct LinearRow {
  LinExpr lhs;  // constant folded: lhs.terms . x  (sense)  rhs
  double rhs;
  std::string name;
  bool flipped = false;  // stored as -(user lhs) <= -(user rhs)
};

struct ConeRow {
  LinExpr bound;                // ||members||_2 <= bound
  std::vector<LinExpr> members;
  std::string name;
};

struct QuadEntry {
  int i;
  int j;
  double coef;
};

class Program {
 public:
  int add_variable(std::string name, double lb = -kInf, double ub = kInf);
  int num_variables() const { return static_cast<int>(names_.size()); }
  const std::string& variable_name(int v) const { return names_.at(v); }
  double lower(int v) const { return lb_.at(v); }
  double upper(int v) const { return ub_.at(v); }
  void set_bounds(int v, double lb, double ub);
  void fix(int v, double value) { set_bounds(v, value, value); }

  // Objective (minimised).
  void add_cost(int v, double coef);
  void add_cost(const LinExpr& e);
  // Adds coef * x_i * x_j to the objective.  The resulting quadratic form
  // must be positive semidefinite.
  void add_quadratic_cost(int i, int j, double coef);
  // Adds coef * log(arg) to the objective.  coef must be negative.  The
  // caller is responsible for a strict-margin constraint arg >= eps.
  void add_log_term(double coef, LinExpr arg, std::string name = {});

  RowRef add_equality(LinExpr lhs, double rhs, std::string name = {});
  RowRef add_less_equal(LinExpr lhs, double rhs, std::string name = {});
  RowRef add_greater_equal(LinExpr lhs, double rhs, std::string name = {});
  RowRef add_soc(LinExpr bound, std::vector<LinExpr> members, std::string name = {});

  const std::vector<double>& linear_cost() const { return cost_; }
  double cost_offset() const { return cost_offset_; }
  const std::vector<QuadEntry>& quadratic_cost() const { return quad_; }
  const std::vector<LogTerm>& log_terms() const { return logs_; }
  const std::vector<LinearRow>& equalities() const { return eqs_; }
  const std::vector<LinearRow>& inequalities() const { return ineqs_; }
  const std::vector<ConeRow>& cones() const { return cones_; }

  // Objective value (including log and quadratic terms) at x.
  double objective(std::span<const double> x) const;

  // Throws std::invalid_argument if a row references an undeclared variable
  // or a log coefficient is nonnegative.
  void validate() const;

 private:
  void check_expr(const LinExpr& e, const std::string& where) const;
  static LinExpr fold(LinExpr lhs, double& rhs);

  std::vector<std::string> names_;
  std::vector<double> lb_, ub_, cost_;
  double cost_offset_ = 0.0;
  std::vector<QuadEntry> quad_;
  std::vector<LogTerm> logs_;
  std::vector<LinearRow> eqs_, ineqs_;
  std::vector<ConeRow> cones_;
};

enum class Status { Optimal, Infeasible, Unbounded, IterationLimit, NumericalError };

const char* to_string(Status s);

struct Solution {
  Status status = Status::NumericalError;
  std::vector<double> x;
  double objective = 0.0;
  // Lagrange multipliers in user orientation; see sensitivity().
  std::vector<double> eq_duals;
  std::vector<double> ineq_duals;
  std::vector<std::vector<double>> cone_duals;
  int iterations = 0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double gap = 0.0;
  std::string diagnostics;

  bool optimal() const { return status == Status::Optimal; }
  double value(int v) const { return x.at(v); }
  // d(optimal objective) / d(rhs) of a linear row.
  double sensitivity(const Program& p, RowRef row) const;
};

struct SolverOptions {
  double feas_tol = 1e-8;
  double gap_tol = 1e-9;  // relative complementarity gap
  int max_iter = 150;
  bool verbose = false;
};

Solution solve(const Program& program, const SolverOptions& opts = {});
Solution solve(const Program& program, double feas_tol);

struct ConeResidual {
  int index;
  std::string name;
  double slack;           // bound - ||members||
  double relative_slack;  // slack / max(|bound|, 1e-12)
  bool loose;
};

// Requires solution.status == Optimal.  A cone is flagged loose when its
// relative slack exceeds loose_threshold.
std::vector<ConeResidual> cone_residuals(const Program& program, const Solution& solution,
                                         double loose_threshold = 1e-4);

}  // namespace hcng::conic
