// Primal-dual interior-point method for
//
//   minimise    1/2 x'Px + q'x + sum_k c_k log(x_{v_k})      (c_k < 0)
//   subject to  A x = b,   G x + s = h,   s in K
//
// with K a product of a nonnegative orthant and second-order cones.  The
// method uses Nesterov-Todd scaling and Mehrotra predictor-corrector steps
// on a regularised quasi-definite KKT system (sparse LDL' with AMD
// ordering, iterative refinement against the unregularised system).  Log
// terms are handled as a smooth objective part whose Hessian enters the
// (1,1) block; their arguments are auxiliary variables kept strictly
// positive by the step-length rule.

#include <Eigen/OrderingMethods>
#include <Eigen/SparseCore>
#include <algorithm>
#include <cmath>
#include <limits>
#include <cstdio>
#include <sstream>

#include "hcng/conic.hpp"

namespace hcng::conic {
namespace {

using Vec = Eigen::VectorXd;
using SpMat = Eigen::SparseMatrix<double>;
using Trip = Eigen::Triplet<double>;

struct Layout {
  int lp = 0;
  std::vector<int> soc_start;
  std::vector<int> soc_dim;
  int m = 0;
  int degree() const { return lp + static_cast<int>(soc_dim.size()); }
};

struct StandardForm {
  int n_user = 0;
  int n = 0;
  int p = 0;
  SpMat A, G, P;  // P stored with both triangles
  Vec q, b, h;
  Layout cones;
  std::vector<int> log_var;
  std::vector<double> log_coef;
  int user_eq = 0;
  int user_ineq = 0;
  std::vector<int> user_cone_row;
};

StandardForm build_standard_form(const Program& prog) {
  StandardForm sf;
  const int nu = prog.num_variables();
  sf.n_user = nu;
  sf.n = nu + static_cast<int>(prog.log_terms().size());

  std::vector<Trip> at, gt;
  std::vector<double> b, h;

  for (const auto& r : prog.equalities()) {
    const int row = static_cast<int>(b.size());
    for (const auto& t : r.lhs.terms()) at.emplace_back(row, t.var, t.coef);
    b.push_back(r.rhs);
  }
  sf.user_eq = static_cast<int>(b.size());
  for (int v = 0; v < nu; ++v) {
    if (prog.lower(v) == prog.upper(v)) {
      at.emplace_back(static_cast<int>(b.size()), v, 1.0);
      b.push_back(prog.lower(v));
    }
  }
  for (std::size_t k = 0; k < prog.log_terms().size(); ++k) {
    const auto& lt = prog.log_terms()[k];
    const int row = static_cast<int>(b.size());
    const int zv = nu + static_cast<int>(k);
    at.emplace_back(row, zv, 1.0);
    for (const auto& t : lt.arg.terms()) at.emplace_back(row, t.var, -t.coef);
    b.push_back(lt.arg.constant());
    sf.log_var.push_back(zv);
    sf.log_coef.push_back(lt.coef);
  }

  for (const auto& r : prog.inequalities()) {
    const int row = static_cast<int>(h.size());
    for (const auto& t : r.lhs.terms()) gt.emplace_back(row, t.var, t.coef);
    h.push_back(r.rhs);
  }
  sf.user_ineq = static_cast<int>(h.size());
  for (int v = 0; v < nu; ++v) {
    if (prog.lower(v) == prog.upper(v)) continue;
    if (std::isfinite(prog.upper(v))) {
      gt.emplace_back(static_cast<int>(h.size()), v, 1.0);
      h.push_back(prog.upper(v));
    }
    if (std::isfinite(prog.lower(v))) {
      gt.emplace_back(static_cast<int>(h.size()), v, -1.0);
      h.push_back(-prog.lower(v));
    }
  }
  sf.cones.lp = static_cast<int>(h.size());
  for (const auto& c : prog.cones()) {
    const int start = static_cast<int>(h.size());
    sf.user_cone_row.push_back(start);
    auto put = [&](const LinExpr& e) {
      const int row = static_cast<int>(h.size());
      for (const auto& t : e.terms()) gt.emplace_back(row, t.var, -t.coef);
      h.push_back(e.constant());
    };
    put(c.bound);
    for (const auto& mbr : c.members) put(mbr);
    sf.cones.soc_start.push_back(start);
    sf.cones.soc_dim.push_back(static_cast<int>(c.members.size()) + 1);
  }
  sf.cones.m = static_cast<int>(h.size());
  sf.p = static_cast<int>(b.size());

  sf.A.resize(sf.p, sf.n);
  sf.A.setFromTriplets(at.begin(), at.end());
  sf.G.resize(sf.cones.m, sf.n);
  sf.G.setFromTriplets(gt.begin(), gt.end());
  sf.b = Eigen::Map<Vec>(b.data(), static_cast<Eigen::Index>(b.size()));
  sf.h = Eigen::Map<Vec>(h.data(), static_cast<Eigen::Index>(h.size()));

  sf.q = Vec::Zero(sf.n);
  for (int v = 0; v < nu; ++v) sf.q[v] = prog.linear_cost()[v];
  std::vector<Trip> pt;
  for (const auto& e : prog.quadratic_cost()) {
    // coef * x_i x_j  ->  1/2 x'Px with P_ij = P_ji = coef (i != j), P_ii = 2 coef
    if (e.i == e.j) {
      pt.emplace_back(e.i, e.i, 2.0 * e.coef);
    } else {
      pt.emplace_back(e.i, e.j, e.coef);
      pt.emplace_back(e.j, e.i, e.coef);
    }
  }
  sf.P.resize(sf.n, sf.n);
  sf.P.setFromTriplets(pt.begin(), pt.end());
  return sf;
}

// Modified Ruiz equilibration of [A; G].  Rows of one cone block share a
// factor so cone membership is preserved.
struct Scaling {
  Vec D;   // columns
  Vec EA;  // equality rows
  Vec EG;  // cone rows
  double cost = 1.0;
};

Scaling equilibrate(StandardForm& sf) {
  Scaling sc;
  sc.D = Vec::Ones(sf.n);
  sc.EA = Vec::Ones(sf.p);
  sc.EG = Vec::Ones(sf.cones.m);
  std::vector<bool> frozen(sf.n, false);
  for (int v : sf.log_var) frozen[v] = true;

  for (int pass = 0; pass < 20; ++pass) {
    Vec cn = Vec::Zero(sf.n);
    Vec ra = Vec::Zero(sf.p);
    Vec rg = Vec::Zero(sf.cones.m);
    for (int j = 0; j < sf.n; ++j) {
      for (SpMat::InnerIterator it(sf.A, j); it; ++it) {
        cn[j] = std::max(cn[j], std::abs(it.value()));
        ra[it.row()] = std::max(ra[it.row()], std::abs(it.value()));
      }
      for (SpMat::InnerIterator it(sf.G, j); it; ++it) {
        cn[j] = std::max(cn[j], std::abs(it.value()));
        rg[it.row()] = std::max(rg[it.row()], std::abs(it.value()));
      }
    }
    for (std::size_t k = 0; k < sf.cones.soc_dim.size(); ++k) {
      const int s0 = sf.cones.soc_start[k];
      const int d = sf.cones.soc_dim[k];
      const double mx = rg.segment(s0, d).maxCoeff();
      rg.segment(s0, d).setConstant(mx);
    }
    Vec dc = Vec::Ones(sf.n);
    for (int j = 0; j < sf.n; ++j)
      if (!frozen[j] && cn[j] > 0) dc[j] = 1.0 / std::sqrt(cn[j]);
    Vec da = Vec::Ones(sf.p);
    for (int i = 0; i < sf.p; ++i)
      if (ra[i] > 0) da[i] = 1.0 / std::sqrt(ra[i]);
    Vec dg = Vec::Ones(sf.cones.m);
    for (int i = 0; i < sf.cones.m; ++i)
      if (rg[i] > 0) dg[i] = 1.0 / std::sqrt(rg[i]);

    sf.A = da.asDiagonal() * sf.A * dc.asDiagonal();
    sf.G = dg.asDiagonal() * sf.G * dc.asDiagonal();
    sc.D.array() *= dc.array();
    sc.EA.array() *= da.array();
    sc.EG.array() *= dg.array();
    double cmin = kInf, cmax = 0.0;
    for (int j = 0; j < sf.n; ++j)
      if (cn[j] > 0) {
        cmin = std::min(cmin, cn[j]);
        cmax = std::max(cmax, cn[j]);
      }
    const double spread = cmax > 0 ? cmax / cmin : 1.0;
    if (spread < 1.0 + 1e-3) break;
  }
  sf.b = sc.EA.cwiseProduct(sf.b);
  sf.h = sc.EG.cwiseProduct(sf.h);
  sf.q = sc.D.cwiseProduct(sf.q);
  sf.P = sc.D.asDiagonal() * sf.P * sc.D.asDiagonal();

  double qmax = sf.q.size() ? sf.q.cwiseAbs().maxCoeff() : 0.0;
  for (int k = 0; k < sf.P.outerSize(); ++k)
    for (SpMat::InnerIterator it(sf.P, k); it; ++it) qmax = std::max(qmax, std::abs(it.value()));
  for (double c : sf.log_coef) qmax = std::max(qmax, std::abs(c));
  sc.cost = qmax > 0 ? std::clamp(1.0 / qmax, 1e-6, 1e6) : 1.0;
  sf.q *= sc.cost;
  sf.P *= sc.cost;
  for (double& c : sf.log_coef) c *= sc.cost;
  return sc;
}

// ---- cone algebra -------------------------------------------------------

struct NtScaling {
  Vec lp_w;                  // sqrt(s/z)
  std::vector<double> eta;   // per SOC
  std::vector<Vec> wbar;     // per SOC, J-normalised scaling point
};

double jnorm(const Eigen::Ref<const Vec>& v) {
  const double t = v[0] * v[0] - v.tail(v.size() - 1).squaredNorm();
  return std::sqrt(std::max(t, 0.0));
}

NtScaling compute_scaling(const Layout& L, const Vec& s, const Vec& z) {
  NtScaling W;
  W.lp_w = (s.head(L.lp).array() / z.head(L.lp).array()).sqrt();
  for (std::size_t k = 0; k < L.soc_dim.size(); ++k) {
    const int o = L.soc_start[k];
    const int d = L.soc_dim[k];
    const Vec sk = s.segment(o, d);
    const Vec zk = z.segment(o, d);
    const double a = jnorm(sk);
    const double bb = jnorm(zk);
    const Vec sb = sk / a;
    const Vec zb = zk / bb;
    const double gamma = std::sqrt((1.0 + sb.dot(zb)) / 2.0);
    Vec w(d);
    w[0] = (sb[0] + zb[0]) / (2.0 * gamma);
    w.tail(d - 1) = (sb.tail(d - 1) - zb.tail(d - 1)) / (2.0 * gamma);
    W.eta.push_back(std::sqrt(a / bb));
    W.wbar.push_back(w);
  }
  return W;
}

Vec apply_w(const Layout& L, const NtScaling& W, const Vec& v, bool inverse) {
  Vec out(v.size());
  if (inverse)
    out.head(L.lp) = v.head(L.lp).array() / W.lp_w.array();
  else
    out.head(L.lp) = v.head(L.lp).array() * W.lp_w.array();
  for (std::size_t k = 0; k < L.soc_dim.size(); ++k) {
    const int o = L.soc_start[k];
    const int d = L.soc_dim[k];
    const Vec& w = W.wbar[k];
    const double v0 = v[o];
    const auto v1 = v.segment(o + 1, d - 1);
    const auto w1 = w.tail(d - 1);
    const double w1v1 = w1.dot(v1);
    if (!inverse) {
      const double eta = W.eta[k];
      out[o] = eta * (w[0] * v0 + w1v1);
      out.segment(o + 1, d - 1) = eta * (v1 + (v0 + w1v1 / (1.0 + w[0])) * w1);
    } else {
      const double ie = 1.0 / W.eta[k];
      out[o] = ie * (w[0] * v0 - w1v1);
      out.segment(o + 1, d - 1) = ie * (v1 + (-v0 + w1v1 / (1.0 + w[0])) * w1);
    }
  }
  return out;
}

Vec jordan_prod(const Layout& L, const Vec& u, const Vec& v) {
  Vec out(u.size());
  out.head(L.lp) = u.head(L.lp).cwiseProduct(v.head(L.lp));
  for (std::size_t k = 0; k < L.soc_dim.size(); ++k) {
    const int o = L.soc_start[k];
    const int d = L.soc_dim[k];
    out[o] = u.segment(o, d).dot(v.segment(o, d));
    out.segment(o + 1, d - 1) = u[o] * v.segment(o + 1, d - 1) + v[o] * u.segment(o + 1, d - 1);
  }
  return out;
}

// Solves lambda o u = d for u.
Vec jordan_div(const Layout& L, const Vec& lambda, const Vec& d) {
  Vec u(d.size());
  u.head(L.lp) = d.head(L.lp).cwiseQuotient(lambda.head(L.lp));
  for (std::size_t k = 0; k < L.soc_dim.size(); ++k) {
    const int o = L.soc_start[k];
    const int n = L.soc_dim[k];
    const double l0 = lambda[o];
    const auto l1 = lambda.segment(o + 1, n - 1);
    const double det = l0 * l0 - l1.squaredNorm();
    const double u0 = (l0 * d[o] - l1.dot(d.segment(o + 1, n - 1))) / det;
    u[o] = u0;
    u.segment(o + 1, n - 1) = (d.segment(o + 1, n - 1) - u0 * l1) / l0;
  }
  return u;
}

Vec identity(const Layout& L) {
  Vec e = Vec::Zero(L.m);
  e.head(L.lp).setOnes();
  for (int o : L.soc_start) e[o] = 1.0;
  return e;
}

// Largest alpha with v + alpha d in K (capped at cap).
double max_step(const Layout& L, const Vec& v, const Vec& d, double cap) {
  double a = cap;
  for (int i = 0; i < L.lp; ++i)
    if (d[i] < 0) a = std::min(a, -v[i] / d[i]);
  for (std::size_t k = 0; k < L.soc_dim.size(); ++k) {
    const int o = L.soc_start[k];
    const int n = L.soc_dim[k];
    const double v0 = v[o], d0 = d[o];
    const auto v1 = v.segment(o + 1, n - 1);
    const auto d1 = d.segment(o + 1, n - 1);
    if (d0 < 0) a = std::min(a, -v0 / d0);
    const double qa = d0 * d0 - d1.squaredNorm();
    const double qb = 2.0 * (v0 * d0 - v1.dot(d1));
    const double qc = std::max(v0 * v0 - v1.squaredNorm(), 0.0);
    double root = cap;
    if (std::abs(qa) < 1e-300) {
      if (qb < 0) root = -qc / qb;
    } else {
      const double disc = qb * qb - 4.0 * qa * qc;
      if (qa < 0) {
        const double sq = std::sqrt(std::max(disc, 0.0));
        // positive root of a negative-leading quadratic with c >= 0
        const double r1 = (-qb - sq) / (2.0 * qa);
        const double r2 = (-qb + sq) / (2.0 * qa);
        root = std::max(r1, r2);
      } else if (disc >= 0 && qb < 0) {
        const double sq = std::sqrt(disc);
        const double qq = -0.5 * (qb - sq);  // stable form, qq > 0
        root = std::min(qq / qa, qc / qq);
      }
    }
    if (root >= 0) a = std::min(a, root);
  }
  return std::max(a, 0.0);
}

double shift_amount(const Layout& L, const Vec& v) {
  double worst = -kInf;
  for (int i = 0; i < L.lp; ++i) worst = std::max(worst, -v[i]);
  for (std::size_t k = 0; k < L.soc_dim.size(); ++k) {
    const int o = L.soc_start[k];
    const int n = L.soc_dim[k];
    worst = std::max(worst, v.segment(o + 1, n - 1).norm() - v[o]);
  }
  return worst;
}

// ---- quasi-definite LDL' --------------------------------------------------

// Sparse LDL' (up-looking, elimination tree) of a symmetric quasi-definite
// matrix under a fill-reducing ordering.  Pivots whose sign disagrees with
// the expected inertia, or that vanish, are replaced by a small value of the
// right sign; iterative refinement recovers the accuracy.
class QuasiDefiniteLdl {
 public:
  // lower: lower triangle (with diagonal) of the matrix; sign: expected
  // pivot sign per row.
  void analyze(const SpMat& lower, std::vector<int> sign) {
    n_ = static_cast<int>(lower.rows());
    Eigen::AMDOrdering<int> amd;
    const SpMat full = lower.selfadjointView<Eigen::Lower>();
    amd(full, pinv_);
    perm_ = pinv_.inverse();
    permute(lower);
    // Row i of the original system becomes row perm_(i).
    sign_.assign(n_, 1);
    for (int i = 0; i < n_; ++i) sign_[perm_.indices()[i]] = sign[i];

    const int* Ap = upper_.outerIndexPtr();
    const int* Ai = upper_.innerIndexPtr();
    etree_.assign(n_, -1);
    lnz_.assign(n_, 0);
    std::vector<int> work(n_, -1);
    for (int j = 0; j < n_; ++j) {
      work[j] = j;
      for (int p = Ap[j]; p < Ap[j + 1]; ++p) {
        int i = Ai[p];
        while (i < j && work[i] != j) {
          if (etree_[i] == -1) etree_[i] = j;
          ++lnz_[i];
          work[i] = j;
          i = etree_[i];
        }
      }
    }
    Lp_.assign(n_ + 1, 0);
    for (int i = 0; i < n_; ++i) Lp_[i + 1] = Lp_[i] + lnz_[i];
    Li_.assign(Lp_[n_], 0);
    Lx_.assign(Lp_[n_], 0.0);
    D_.assign(n_, 0.0);
    Dinv_.assign(n_, 0.0);
  }

  void factor(const SpMat& lower, double eps, double delta) {
    permute(lower);
    const int* Ap = upper_.outerIndexPtr();
    const int* Ai = upper_.innerIndexPtr();
    const double* Ax = upper_.valuePtr();
    std::vector<double> y(n_, 0.0);
    std::vector<char> mark(n_, 0);
    std::vector<int> yidx(n_), buf(n_);
    std::vector<int> next(Lp_.begin(), Lp_.end() - 1);
    dynamic_ = 0;
    for (int k = 0; k < n_; ++k) {
      int nnz_y = 0;
      D_[k] = 0.0;
      for (int p = Ap[k]; p < Ap[k + 1]; ++p) {
        const int b = Ai[p];
        if (b == k) {
          D_[k] += Ax[p];
          continue;
        }
        y[b] += Ax[p];
        if (mark[b]) continue;
        mark[b] = 1;
        buf[0] = b;
        int ne = 1;
        int nx = etree_[b];
        while (nx != -1 && nx < k && !mark[nx]) {
          mark[nx] = 1;
          buf[ne++] = nx;
          nx = etree_[nx];
        }
        while (ne) yidx[nnz_y++] = buf[--ne];
      }
      for (int i = nnz_y - 1; i >= 0; --i) {
        const int c = yidx[i];
        const int slot = next[c];
        const double yc = y[c];
        for (int j = Lp_[c]; j < slot; ++j) y[Li_[j]] -= Lx_[j] * yc;
        Li_[slot] = k;
        Lx_[slot] = yc * Dinv_[c];
        D_[k] -= yc * Lx_[slot];
        ++next[c];
        y[c] = 0.0;
        mark[c] = 0;
      }
      if (sign_[k] * D_[k] <= eps || !std::isfinite(D_[k])) {
        D_[k] = sign_[k] * delta;
        ++dynamic_;
      }
      Dinv_[k] = 1.0 / D_[k];
    }
  }

  Vec solve(const Vec& b) const {
    Vec x = perm_ * b;
    for (int i = 0; i < n_; ++i)
      for (int j = Lp_[i]; j < Lp_[i + 1]; ++j) x[Li_[j]] -= Lx_[j] * x[i];
    for (int i = 0; i < n_; ++i) x[i] *= Dinv_[i];
    for (int i = n_ - 1; i >= 0; --i)
      for (int j = Lp_[i]; j < Lp_[i + 1]; ++j) x[i] -= Lx_[j] * x[Li_[j]];
    return pinv_ * x;
  }

  int dynamic_pivots() const { return dynamic_; }

 private:
  void permute(const SpMat& lower) {
    upper_.resize(n_, n_);
    upper_.selfadjointView<Eigen::Upper>() = lower.selfadjointView<Eigen::Lower>().twistedBy(perm_);
    upper_.makeCompressed();
  }

  int n_ = 0;
  Eigen::PermutationMatrix<Eigen::Dynamic, Eigen::Dynamic, int> perm_, pinv_;
  SpMat upper_;
  std::vector<int> sign_, etree_, lnz_, Lp_, Li_;
  std::vector<double> Lx_, D_, Dinv_;
  int dynamic_ = 0;
};

// ---- KKT system ---------------------------------------------------------

class Kkt {
 public:
  Kkt(const StandardForm& sf, double reg) : sf_(sf), reg_(reg) {
    n_ = sf.n;
    p_ = sf.p;
    m_ = sf.cones.m;
    const int N = n_ + p_ + m_;
    std::vector<Trip> t;
    for (int k = 0; k < sf.P.outerSize(); ++k)
      for (SpMat::InnerIterator it(sf.P, k); it; ++it)
        if (it.row() > it.col()) t.emplace_back(it.row(), it.col(), it.value());
    for (int i = 0; i < n_; ++i) t.emplace_back(i, i, 0.0);
    for (int k = 0; k < sf.A.outerSize(); ++k)
      for (SpMat::InnerIterator it(sf.A, k); it; ++it)
        t.emplace_back(n_ + it.row(), it.col(), it.value());
    for (int i = 0; i < p_; ++i) t.emplace_back(n_ + i, n_ + i, 0.0);
    for (int k = 0; k < sf.G.outerSize(); ++k)
      for (SpMat::InnerIterator it(sf.G, k); it; ++it)
        t.emplace_back(n_ + p_ + it.row(), it.col(), it.value());
    const int zo = n_ + p_;
    for (int i = 0; i < sf.cones.lp; ++i) t.emplace_back(zo + i, zo + i, 0.0);
    for (std::size_t k = 0; k < sf.cones.soc_dim.size(); ++k) {
      const int o = sf.cones.soc_start[k];
      const int d = sf.cones.soc_dim[k];
      for (int c = 0; c < d; ++c)
        for (int r = c; r < d; ++r) t.emplace_back(zo + o + r, zo + o + c, 0.0);
    }
    K_.resize(N, N);
    K_.setFromTriplets(t.begin(), t.end());
    K_.makeCompressed();
    Pdiag_ = Vec::Zero(n_);
    for (int k = 0; k < sf.P.outerSize(); ++k)
      for (SpMat::InnerIterator it(sf.P, k); it; ++it)
        if (it.row() == it.col()) Pdiag_[it.row()] += it.value();
    for (int i = 0; i < n_; ++i) diag_ptr_.push_back(&K_.coeffRef(i, i));
    for (int i = 0; i < p_; ++i) *(&K_.coeffRef(n_ + i, n_ + i)) = -reg_;
    for (int i = 0; i < sf.cones.lp; ++i) lp_ptr_.push_back(&K_.coeffRef(zo + i, zo + i));
    for (std::size_t k = 0; k < sf.cones.soc_dim.size(); ++k) {
      const int o = sf.cones.soc_start[k];
      const int d = sf.cones.soc_dim[k];
      std::vector<double*> block;
      for (int c = 0; c < d; ++c)
        for (int r = c; r < d; ++r) block.push_back(&K_.coeffRef(zo + o + r, zo + o + c));
      soc_ptr_.push_back(std::move(block));
    }
    std::vector<int> sign(N, -1);
    std::fill(sign.begin(), sign.begin() + n_, 1);
    ldl_.analyze(K_, std::move(sign));
  }

  bool factor(const Vec& hlog, const NtScaling& W) {
    hlog_ = hlog;
    W_ = &W;
    for (int i = 0; i < n_; ++i) *diag_ptr_[i] = Pdiag_[i] + hlog[i] + reg_;
    for (int i = 0; i < sf_.cones.lp; ++i) *lp_ptr_[i] = -(W.lp_w[i] * W.lp_w[i]) - reg_;
    for (std::size_t k = 0; k < sf_.cones.soc_dim.size(); ++k) {
      const int d = sf_.cones.soc_dim[k];
      const Vec& w = W.wbar[k];
      const double e2 = W.eta[k] * W.eta[k];
      int idx = 0;
      for (int c = 0; c < d; ++c)
        for (int r = c; r < d; ++r) {
          double v = 2.0 * w[r] * w[c];
          if (r == c) v += (r == 0 ? -1.0 : 1.0);
          *soc_ptr_[k][idx++] = -e2 * v - (r == c ? reg_ : 0.0);
        }
    }
    for (int k = 0; k < K_.outerSize(); ++k)
      for (SpMat::InnerIterator it(K_, k); it; ++it)
        if (!std::isfinite(it.value())) return false;
    ldl_.factor(K_, 1e-13, 2e-7);
    return true;
  }

  // Solves the unregularised system with iterative refinement.
  Vec solve(const Vec& rhs) const {
    Vec sol = ldl_.solve(rhs);
    const double target = 1e-13 * (1.0 + rhs.lpNorm<Eigen::Infinity>());
    Vec r = rhs - multiply(sol);
    double rn = r.lpNorm<Eigen::Infinity>();
    for (int it = 0; it < 10 && rn > target; ++it) {
      const Vec cand = sol + ldl_.solve(r);
      const Vec rc = rhs - multiply(cand);
      const double cn = rc.lpNorm<Eigen::Infinity>();
      if (!(cn < rn)) break;
      sol = cand;
      r = rc;
      rn = cn;
    }
    return sol;
  }

 private:
  Vec multiply(const Vec& v) const {
    const Vec dx = v.head(n_);
    const Vec dy = v.segment(n_, p_);
    const Vec dz = v.tail(m_);
    Vec out(v.size());
    out.head(n_) = sf_.P * dx + hlog_.cwiseProduct(dx) + sf_.A.transpose() * dy +
                   sf_.G.transpose() * dz;
    out.segment(n_, p_) = sf_.A * dx;
    const Layout& L = sf_.cones;
    Vec w2 = apply_w(L, *W_, apply_w(L, *W_, dz, false), false);
    out.tail(m_) = sf_.G * dx - w2;
    return out;
  }

  const StandardForm& sf_;
  double reg_;
  int n_ = 0, p_ = 0, m_ = 0;
  SpMat K_;
  Vec Pdiag_;
  Vec hlog_;
  const NtScaling* W_ = nullptr;
  std::vector<double*> diag_ptr_, lp_ptr_;
  std::vector<std::vector<double*>> soc_ptr_;
  QuasiDefiniteLdl ldl_;
};

struct RawResult {
  Status status = Status::NumericalError;
  Vec x, y, s, z;
  int iterations = 0;
  double pres = 0, dres = 0, gap = 0;
  std::string note;
};

RawResult run_ipm(const StandardForm& sf, const SolverOptions& opts) {
  const Layout& L = sf.cones;
  const int n = sf.n;
  const int deg = std::max(L.degree(), 1);
  RawResult res;

  Kkt kkt(sf, 1e-8);
  Vec hlog = Vec::Zero(n);
  NtScaling ident;
  ident.lp_w = Vec::Ones(L.lp);
  for (int d : L.soc_dim) {
    ident.eta.push_back(1.0);
    Vec w = Vec::Zero(d);
    w[0] = 1.0;
    ident.wbar.push_back(w);
  }
  if (!kkt.factor(hlog, ident)) {
    res.note = "initial KKT factorisation failed";
    return res;
  }
  Vec rhs(n + sf.p + L.m);
  rhs << -sf.q, sf.b, sf.h;
  Vec sol = kkt.solve(rhs);
  Vec x = sol.head(n);
  Vec y = sol.segment(n, sf.p);
  Vec zs = sol.tail(L.m);
  Vec s = -zs;
  Vec z = zs;
  const Vec e = identity(L);
  {
    const double ap = shift_amount(L, s);
    if (ap >= -1e-8) s += (1.0 + std::max(ap, 0.0)) * e;
    const double ad = shift_amount(L, z);
    if (ad >= -1e-8) z += (1.0 + std::max(ad, 0.0)) * e;
  }
  for (std::size_t k = 0; k < sf.log_var.size(); ++k) {
    const int v = sf.log_var[k];
    if (x[v] < 1.0) x[v] = 1.0;
  }

  const double bnorm = std::max(sf.b.size() ? sf.b.lpNorm<Eigen::Infinity>() : 0.0,
                                sf.h.size() ? sf.h.lpNorm<Eigen::Infinity>() : 0.0);
  const double qnorm = sf.q.size() ? sf.q.lpNorm<Eigen::Infinity>() : 0.0;
  int stall = 0;
  // Best iterate seen, by its worst ratio of residual to tolerance.
  struct Best {
    double score = std::numeric_limits<double>::infinity();
    Vec x, y, s, z;
    double pres = 0, dres = 0, gap = 0;
  } best;

  for (int it = 0; it <= opts.max_iter; ++it) {
    res.iterations = it;
    Vec glog = Vec::Zero(n);
    hlog.setZero();
    double logval = 0.0;
    for (std::size_t k = 0; k < sf.log_var.size(); ++k) {
      const int v = sf.log_var[k];
      const double c = sf.log_coef[k];
      glog[v] = c / x[v];
      hlog[v] = -c / (x[v] * x[v]);
      logval += c * std::log(x[v]);
    }
    const Vec Px = sf.P * x;
    const Vec rx = Px + sf.q + glog + sf.A.transpose() * y + sf.G.transpose() * z;
    const Vec ry = sf.A * x - sf.b;
    const Vec rz = sf.G * x + s - sf.h;
    const double mu = s.dot(z) / deg;
    const double pobj = 0.5 * x.dot(Px) + sf.q.dot(x) + logval;

    res.pres = std::max(ry.size() ? ry.lpNorm<Eigen::Infinity>() : 0.0,
                        rz.size() ? rz.lpNorm<Eigen::Infinity>() : 0.0) /
               (1.0 + bnorm);
    res.dres = rx.lpNorm<Eigen::Infinity>() / (1.0 + qnorm);
    res.gap = s.dot(z);
    {
      const double score = std::max({res.pres / opts.feas_tol, res.dres / opts.feas_tol,
                                     res.gap / (opts.gap_tol * std::max(1.0, std::abs(pobj)))});
      if (score < best.score) best = {score, x, y, s, z, res.pres, res.dres, res.gap};
    }
    if (opts.verbose)
      std::fprintf(stderr, "ipm %3d pobj %+.8e pres %.2e dres %.2e gap %.2e\n", it, pobj,
                   res.pres, res.dres, res.gap);

    if (res.pres <= opts.feas_tol && res.dres <= opts.feas_tol &&
        res.gap <= opts.gap_tol * std::max(1.0, std::abs(pobj))) {
      res.status = Status::Optimal;
      break;
    }
    // Farkas-type certificates on diverging iterates.
    {
      const double hz = -(sf.h.dot(z) + sf.b.dot(y));
      if (hz > 0) {
        const Vec aty = sf.A.transpose() * y + sf.G.transpose() * z;
        if (aty.lpNorm<Eigen::Infinity>() <= 1e-9 * hz && hz > 1e3) {
          res.status = Status::Infeasible;
          break;
        }
      }
      const double qx = -sf.q.dot(x);
      if (qx > 1e3) {
        const double ax = ry.size() ? (sf.A * x).lpNorm<Eigen::Infinity>() : 0.0;
        const double gx = L.m ? (sf.G * x + s).lpNorm<Eigen::Infinity>() : 0.0;
        const double pxn = Px.size() ? Px.lpNorm<Eigen::Infinity>() : 0.0;
        if (std::max({ax, gx, pxn}) <= 1e-9 * qx && sf.log_var.empty()) {
          res.status = Status::Unbounded;
          break;
        }
      }
    }
    if (it == opts.max_iter) {
      res.status = Status::IterationLimit;
      res.note = "iteration limit";
      break;
    }

    const NtScaling W = compute_scaling(L, s, z);
    const Vec lambda = apply_w(L, W, z, false);
    if (!kkt.factor(hlog, W)) {
      res.note = "KKT factorisation failed";
      res.status = Status::NumericalError;
      break;
    }

    auto newton = [&](const Vec& dc, Vec& dx, Vec& dy, Vec& ds, Vec& dz) {
      const Vec u = jordan_div(L, lambda, dc);
      const Vec wu = apply_w(L, W, u, false);
      Vec r(n + sf.p + L.m);
      r << -rx, -ry, -rz - wu;
      const Vec d = kkt.solve(r);
      dx = d.head(n);
      dy = d.segment(n, sf.p);
      dz = d.tail(L.m);
      ds = apply_w(L, W, u - apply_w(L, W, dz, false), false);
    };
    auto step_cap = [&](const Vec& dx, const Vec& ds, const Vec& dz) {
      double a = std::min(max_step(L, s, ds, 1e30), max_step(L, z, dz, 1e30));
      for (int v : sf.log_var)
        if (dx[v] < 0) a = std::min(a, -x[v] / dx[v]);
      return a;
    };

    Vec dx, dy, ds, dz;
    const Vec ll = jordan_prod(L, lambda, lambda);
    newton(-ll, dx, dy, ds, dz);
    const double a_aff = std::min(1.0, step_cap(dx, ds, dz));
    const double sigma = std::pow(std::clamp(1.0 - a_aff, 0.0, 1.0), 3);
    const Vec corr = jordan_prod(L, apply_w(L, W, ds, true), apply_w(L, W, dz, false));
    newton(-ll - corr + sigma * mu * e, dx, dy, ds, dz);
    const double alpha = std::min(1.0, 0.99 * step_cap(dx, ds, dz));

    x += alpha * dx;
    y += alpha * dy;
    s += alpha * ds;
    z += alpha * dz;
    if (!x.allFinite() || !y.allFinite() || !s.allFinite() || !z.allFinite()) {
      res.status = Status::NumericalError;
      res.note = "non-finite iterate";
      break;
    }
    stall = alpha < 1e-9 ? stall + 1 : 0;
    if (stall >= 5) {
      res.status = Status::NumericalError;
      res.note = "step length collapsed";
      break;
    }
  }
  // Near the optimum the scaling can get too ill-conditioned for the last
  // steps; fall back to the best iterate if it is close enough.
  if ((res.status == Status::NumericalError || res.status == Status::IterationLimit) &&
      best.score <= 1e3 && best.pres <= 10.0 * opts.feas_tol && best.dres <= 10.0 * opts.feas_tol) {
    x = best.x;
    y = best.y;
    s = best.s;
    z = best.z;
    res.pres = best.pres;
    res.dres = best.dres;
    res.gap = best.gap;
    res.status = Status::Optimal;
    res.note = "reduced accuracy after " + res.note;
  }
  res.x = x;
  res.y = y;
  res.s = s;
  res.z = z;
  return res;
}

Solution unscale(const Program& prog, const StandardForm& sf, const Scaling& sc,
                 const RawResult& raw) {
  Solution sol;
  sol.status = raw.status;
  sol.iterations = raw.iterations;
  sol.diagnostics = raw.note;
  const Vec x = sc.D.cwiseProduct(raw.x);
  sol.x.assign(x.data(), x.data() + sf.n_user);
  const Vec y = sc.EA.cwiseProduct(raw.y) / sc.cost;
  const Vec z = sc.EG.cwiseProduct(raw.z) / sc.cost;
  sol.eq_duals.assign(y.data(), y.data() + sf.user_eq);
  sol.ineq_duals.assign(z.data(), z.data() + sf.user_ineq);
  for (std::size_t k = 0; k < prog.cones().size(); ++k) {
    const int o = sf.user_cone_row[k];
    const int d = sf.cones.soc_dim[k];
    sol.cone_duals.emplace_back(z.data() + o, z.data() + o + d);
  }
  sol.primal_residual = raw.pres;
  sol.dual_residual = raw.dres;
  sol.gap = raw.gap / sc.cost;
  if (sol.status == Status::Optimal) {
    bool domain_ok = true;
    for (const auto& l : prog.log_terms())
      if (!(l.arg.evaluate(sol.x) > 0)) domain_ok = false;
    sol.objective = domain_ok ? prog.objective(sol.x) : std::nan("");
  }
  return sol;
}

Solution solve_once(const Program& program, const SolverOptions& opts) {
  StandardForm sf = build_standard_form(program);
  const Scaling sc = equilibrate(sf);
  const RawResult raw = run_ipm(sf, opts);
  return unscale(program, sf, sc, raw);
}

// Minimum total violation of the constraint set; zero iff feasible.
double elastic_violation(const Program& prog, const SolverOptions& opts) {
  Program e;
  for (int v = 0; v < prog.num_variables(); ++v) e.add_variable(prog.variable_name(v));
  auto elastic = [&](const std::string& tag) {
    const int v = e.add_variable("elastic_" + tag, 0.0, kInf);
    e.add_cost(v, 1.0);
    return v;
  };
  for (const auto& r : prog.equalities()) {
    LinExpr l = r.lhs;
    l.add(elastic(r.name + "+"), 1.0).add(elastic(r.name + "-"), -1.0);
    e.add_equality(l, r.rhs);
  }
  for (const auto& r : prog.inequalities()) {
    LinExpr l = r.lhs;
    l.add(elastic(r.name), -1.0);
    e.add_less_equal(l, r.rhs);
  }
  for (int v = 0; v < prog.num_variables(); ++v) {
    if (std::isfinite(prog.upper(v)))
      e.add_less_equal(LinExpr::var(v).add(elastic("ub"), -1.0), prog.upper(v));
    if (std::isfinite(prog.lower(v)))
      e.add_greater_equal(LinExpr::var(v).add(elastic("lb"), 1.0), prog.lower(v));
  }
  for (const auto& c : prog.cones()) {
    LinExpr b = c.bound;
    b.add(elastic(c.name), 1.0);
    e.add_soc(b, c.members);
  }
  const Solution s = solve_once(e, opts);
  if (!s.optimal()) return kInf;
  return s.objective;
}

}  // namespace

Solution solve(const Program& program, const SolverOptions& opts) {
  program.validate();
  Solution sol = solve_once(program, opts);
  if (sol.status == Status::Optimal || sol.status == Status::Infeasible ||
      sol.status == Status::Unbounded)
    return sol;

  // The main run stalled: classify with an elastic feasibility program.
  SolverOptions diag = opts;
  diag.max_iter = std::max(opts.max_iter, 200);
  const double viol = elastic_violation(program, diag);
  std::ostringstream msg;
  msg << sol.diagnostics << (sol.diagnostics.empty() ? "" : "; ")
      << "elastic violation " << viol;
  if (!std::isfinite(viol)) {
    // The feasibility program failed too; leave the status unclassified.
  } else if (viol > 1e-6) {
    sol.status = Status::Infeasible;
  } else if (program.log_terms().empty()) {
    // Feasible: probe for an unbounded ray by boxing the variables.
    Program boxed = program;
    const double box = 1e7;
    for (int v = 0; v < boxed.num_variables(); ++v)
      boxed.set_bounds(v, std::max(boxed.lower(v), -box), std::min(boxed.upper(v), box));
    const Solution b = solve_once(boxed, diag);
    if (b.optimal()) {
      double mx = 0.0;
      for (int v = 0; v < boxed.num_variables(); ++v)
        if (!std::isfinite(program.lower(v)) || !std::isfinite(program.upper(v)))
          mx = std::max(mx, std::abs(b.x[v]));
      if (mx > 0.5 * box) sol.status = Status::Unbounded;
    }
  }
  sol.diagnostics = msg.str();
  return sol;
}

}  // namespace hcng::conic
