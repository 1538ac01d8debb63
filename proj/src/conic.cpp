#include "hcng/conic.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_map>

namespace hcng::conic {

LinExpr& LinExpr::operator+=(const LinExpr& o) {
  terms_.insert(terms_.end(), o.terms_.begin(), o.terms_.end());
  constant_ += o.constant_;
  return *this;
}

LinExpr& LinExpr::operator-=(const LinExpr& o) {
  for (const auto& t : o.terms_) terms_.push_back({t.var, -t.coef});
  constant_ -= o.constant_;
  return *this;
}

LinExpr& LinExpr::operator*=(double k) {
  for (auto& t : terms_) t.coef *= k;
  constant_ *= k;
  return *this;
}

double LinExpr::evaluate(std::span<const double> x) const {
  double v = constant_;
  for (const auto& t : terms_) v += t.coef * x[t.var];
  return v;
}

int Program::add_variable(std::string name, double lb, double ub) {
  if (lb > ub) throw std::invalid_argument("variable " + name + ": lower bound exceeds upper bound");
  names_.push_back(std::move(name));
  lb_.push_back(lb);
  ub_.push_back(ub);
  cost_.push_back(0.0);
  return num_variables() - 1;
}

void Program::set_bounds(int v, double lb, double ub) {
  if (lb > ub)
    throw std::invalid_argument("variable " + names_.at(v) + ": lower bound exceeds upper bound");
  lb_.at(v) = lb;
  ub_.at(v) = ub;
}

void Program::add_cost(int v, double coef) { cost_.at(v) += coef; }

void Program::add_cost(const LinExpr& e) {
  for (const auto& t : e.terms()) add_cost(t.var, t.coef);
  cost_offset_ += e.constant();
}

void Program::add_quadratic_cost(int i, int j, double coef) {
  if (i < 0 || j < 0 || i >= num_variables() || j >= num_variables())
    throw std::invalid_argument("quadratic term references an undeclared variable");
  quad_.push_back({i, j, coef});
}

void Program::add_log_term(double coef, LinExpr arg, std::string name) {
  if (!(coef < 0.0)) throw std::invalid_argument("log term coefficient must be negative");
  logs_.push_back({coef, std::move(arg), std::move(name)});
}

// Moves the constant to the right-hand side and merges repeated variables.
LinExpr Program::fold(LinExpr lhs, double& rhs) {
  rhs -= lhs.constant();
  std::unordered_map<int, double> acc;
  std::vector<int> order;
  for (const auto& t : lhs.terms()) {
    auto [it, inserted] = acc.try_emplace(t.var, 0.0);
    if (inserted) order.push_back(t.var);
    it->second += t.coef;
  }
  LinExpr out;
  for (int v : order)
    if (acc[v] != 0.0) out.add(v, acc[v]);
  return out;
}

RowRef Program::add_equality(LinExpr lhs, double rhs, std::string name) {
  LinExpr e = fold(std::move(lhs), rhs);
  eqs_.push_back({std::move(e), rhs, std::move(name), false});
  return {RowKind::Equality, static_cast<int>(eqs_.size()) - 1};
}

RowRef Program::add_less_equal(LinExpr lhs, double rhs, std::string name) {
  LinExpr e = fold(std::move(lhs), rhs);
  ineqs_.push_back({std::move(e), rhs, std::move(name), false});
  return {RowKind::Inequality, static_cast<int>(ineqs_.size()) - 1};
}

RowRef Program::add_greater_equal(LinExpr lhs, double rhs, std::string name) {
  LinExpr e = fold(std::move(lhs), rhs);
  e *= -1.0;
  ineqs_.push_back({std::move(e), -rhs, std::move(name), true});
  return {RowKind::Inequality, static_cast<int>(ineqs_.size()) - 1};
}

RowRef Program::add_soc(LinExpr bound, std::vector<LinExpr> members, std::string name) {
  cones_.push_back({std::move(bound), std::move(members), std::move(name)});
  return {RowKind::Cone, static_cast<int>(cones_.size()) - 1};
}

double Program::objective(std::span<const double> x) const {
  double v = cost_offset_;
  for (int i = 0; i < num_variables(); ++i) v += cost_[i] * x[i];
  for (const auto& q : quad_) v += q.coef * x[q.i] * x[q.j];
  for (const auto& l : logs_) v += l.coef * std::log(l.arg.evaluate(x));
  return v;
}

void Program::check_expr(const LinExpr& e, const std::string& where) const {
  for (const auto& t : e.terms())
    if (t.var < 0 || t.var >= num_variables())
      throw std::invalid_argument(where + " references undeclared variable " +
                                  std::to_string(t.var));
}

void Program::validate() const {
  for (const auto& r : eqs_) check_expr(r.lhs, "equality '" + r.name + "'");
  for (const auto& r : ineqs_) check_expr(r.lhs, "inequality '" + r.name + "'");
  for (const auto& c : cones_) {
    check_expr(c.bound, "cone '" + c.name + "'");
    for (const auto& m : c.members) check_expr(m, "cone '" + c.name + "'");
  }
  for (const auto& l : logs_) {
    check_expr(l.arg, "log term '" + l.name + "'");
    if (!(l.coef < 0.0)) throw std::invalid_argument("log term '" + l.name + "' is not convex");
  }
}

const char* to_string(Status s) {
  switch (s) {
    case Status::Optimal: return "optimal";
    case Status::Infeasible: return "infeasible";
    case Status::Unbounded: return "unbounded";
    case Status::IterationLimit: return "iteration-limit";
    case Status::NumericalError: return "numerical-error";
  }
  return "unknown";
}

double Solution::sensitivity(const Program& p, RowRef row) const {
  switch (row.kind) {
    case RowKind::Equality:
      return -eq_duals.at(row.index);
    case RowKind::Inequality: {
      const double z = ineq_duals.at(row.index);
      return p.inequalities().at(row.index).flipped ? z : -z;
    }
    case RowKind::Cone:
      break;
  }
  throw std::invalid_argument("sensitivity is defined for linear rows only");
}

Solution solve(const Program& program, double feas_tol) {
  SolverOptions opts;
  opts.feas_tol = feas_tol;
  return solve(program, opts);
}

std::vector<ConeResidual> cone_residuals(const Program& program, const Solution& solution,
                                         double loose_threshold) {
  if (!solution.optimal())
    throw std::invalid_argument("cone residuals need an optimal solution");
  std::vector<ConeResidual> out;
  const auto& cones = program.cones();
  out.reserve(cones.size());
  for (std::size_t k = 0; k < cones.size(); ++k) {
    const auto& c = cones[k];
    const double t = c.bound.evaluate(solution.x);
    double nrm2 = 0.0;
    for (const auto& m : c.members) {
      const double v = m.evaluate(solution.x);
      nrm2 += v * v;
    }
    const double slack = t - std::sqrt(nrm2);
    const double rel = slack / std::max(std::abs(t), 1e-12);
    out.push_back({static_cast<int>(k), c.name, slack, rel, rel > loose_threshold});
  }
  return out;
}

}  // namespace hcng::conic
