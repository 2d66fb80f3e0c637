#include "bess/conic.hpp"

#include "sparse_ldl.hpp"

#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace bess {

double LinExpr::eval(const std::vector<double>& x) const {
  double v = constant;
  for (const auto& [i, a] : terms) v += a * x[i];
  return v;
}

const char* to_string(RowKind k) {
  switch (k) {
    case RowKind::CurrentLimit: return "current_limit";
    case RowKind::Loss: return "loss";
    case RowKind::EnergyDynamics: return "energy_dynamics";
    case RowKind::ThermalDynamics: return "thermal_dynamics";
    case RowKind::StatePin: return "state_pin";
    case RowKind::EnergyWindow: return "energy_window";
    case RowKind::TemperatureBox: return "temperature_box";
    case RowKind::BalanceEnergy: return "balance_energy";
    case RowKind::BalanceTemperature: return "balance_temperature";
    case RowKind::Demand: return "demand";
    case RowKind::Auxiliary: return "auxiliary";
    case RowKind::Other: return "other";
  }
  return "?";
}

const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::Infeasible: return "infeasible";
    case SolveStatus::IterationLimit: return "iteration_limit";
    case SolveStatus::NumericalError: return "numerical_error";
  }
  return "?";
}

int ConicProblem::add_variable(std::string name, double lower, double upper, double cost) {
  if (lower > upper) throw std::invalid_argument("add_variable: lower > upper for " + name);
  names_.push_back(std::move(name));
  lower_.push_back(lower);
  upper_.push_back(upper);
  cost_.push_back(cost);
  return static_cast<int>(cost_.size()) - 1;
}

void ConicProblem::add_row(LinExpr expr, Sense sense, RowKind kind, int weight) {
  rows_.push_back({std::move(expr), sense, kind, weight});
}

void ConicProblem::validate() const {
  const int n = num_vars();
  auto check = [n](const LinExpr& e) {
    for (const auto& [i, a] : e.terms) {
      if (i < 0 || i >= n) throw std::invalid_argument("ConicProblem: variable index out of range");
      if (!std::isfinite(a)) throw std::invalid_argument("ConicProblem: non-finite coefficient");
    }
    if (!std::isfinite(e.constant)) throw std::invalid_argument("ConicProblem: non-finite constant");
  };
  for (const auto& r : rows_) check(r.expr);
  for (const auto& c : cones_) {
    if (c.w.empty()) throw std::invalid_argument("ConicProblem: cone without w entries");
    check(c.u);
    check(c.v);
    for (const auto& w : c.w) check(w);
  }
}

int ConicProblem::constraint_count() const {
  int total = embedded_;
  for (const auto& r : rows_) total += r.weight;
  for (const auto& c : cones_) total += c.weight;
  return total;
}

namespace {

void dump_expr(std::ostringstream& os, const LinExpr& e) {
  char buf[64];
  for (const auto& [i, a] : e.terms) {
    std::snprintf(buf, sizeof buf, " %+.17g*x%d", a, i);
    os << buf;
  }
  std::snprintf(buf, sizeof buf, " %+.17g", e.constant);
  os << buf;
}

}  // namespace

std::string ConicProblem::dump() const {
  std::ostringstream os;
  os << "# conic problem: " << num_vars() << " variables, " << rows_.size() << " rows, "
     << cones_.size() << " cones\n";
  char buf[96];
  for (int i = 0; i < num_vars(); ++i) {
    std::snprintf(buf, sizeof buf, " %.17g %.17g %.17g\n", lower_[i], upper_[i], cost_[i]);
    os << "var " << i << ' ' << names_[i] << buf;
  }
  for (std::size_t r = 0; r < rows_.size(); ++r) {
    const auto& row = rows_[r];
    os << "row " << r << ' ' << to_string(row.kind) << (row.sense == Sense::Equal ? " eq" : " le");
    dump_expr(os, row.expr);
    os << '\n';
  }
  for (std::size_t c = 0; c < cones_.size(); ++c) {
    os << "rcone " << c << ' ' << to_string(cones_[c].kind) << " u";
    dump_expr(os, cones_[c].u);
    os << " | v";
    dump_expr(os, cones_[c].v);
    for (const auto& w : cones_[c].w) {
      os << " | w";
      dump_expr(os, w);
    }
    os << '\n';
  }
  return os.str();
}

Residuals residuals(const ConicProblem& problem, const std::vector<double>& x) {
  Residuals r;
  auto scale_of = [&](const LinExpr& e) {
    double s = std::abs(e.constant);
    for (const auto& [i, a] : e.terms) s = std::max(s, std::abs(a * x[i]));
    return 1.0 + s;
  };
  for (const auto& row : problem.rows()) {
    if (row.expr.terms.empty()) continue;  // reported by the presolve instead
    const double v = row.expr.eval(x);
    const double viol = row.sense == Sense::Equal ? std::abs(v) : std::max(0.0, v);
    r.linear = std::max(r.linear, viol / scale_of(row.expr));
  }
  for (int i = 0; i < problem.num_vars(); ++i) {
    const double lo = problem.lower()[i], hi = problem.upper()[i];
    if (std::isfinite(lo)) r.linear = std::max(r.linear, (lo - x[i]) / (1.0 + std::abs(lo)));
    if (std::isfinite(hi)) r.linear = std::max(r.linear, (x[i] - hi) / (1.0 + std::abs(hi)));
  }
  for (const auto& c : problem.cones()) {
    const double u = c.u.eval(x), v = c.v.eval(x);
    double ww = 0.0;
    for (const auto& w : c.w) {
      const double wi = w.eval(x);
      ww += 2.0 * wi * wi;
    }
    const double norm = std::sqrt((u - v) * (u - v) + ww);
    const double viol = std::max({norm - (u + v), -u, -v, 0.0});
    r.cone = std::max(r.cone, viol / (1.0 + std::abs(u) + std::abs(v)));
  }
  return r;
}

namespace {

using SpMat = Eigen::SparseMatrix<double>;
using Vec = Eigen::VectorXd;
using Triplet = Eigen::Triplet<double>;

// min c'x  s.t.  A x = b,  G x + s = h,  s in R+^l x SOC(q_1) x ... x SOC(q_r)
struct Standard {
  int n = 0, p = 0, m = 0, l = 0;
  std::vector<int> soc;
  SpMat A, G;
  Vec b, h, c;
  int dropped = 0, violated = 0;
};

Standard to_standard(const ConicProblem& prob, double tol) {
  Standard st;
  st.n = prob.num_vars();
  std::vector<Triplet> ta, tg;
  std::vector<double> b, h;

  auto is_constant = [](const LinExpr& e) {
    for (const auto& t : e.terms)
      if (t.second != 0.0) return false;
    return true;
  };

  for (const auto& row : prob.rows()) {
    if (is_constant(row.expr)) {
      ++st.dropped;
      const double v = row.expr.constant;
      const double viol = row.sense == Sense::Equal ? std::abs(v) : v;
      if (viol > tol * (1.0 + std::abs(v))) ++st.violated;
      continue;
    }
    if (row.sense == Sense::Equal) {
      for (const auto& [i, a] : row.expr.terms) ta.emplace_back(static_cast<int>(b.size()), i, a);
      b.push_back(-row.expr.constant);
    } else {
      for (const auto& [i, a] : row.expr.terms) tg.emplace_back(static_cast<int>(h.size()), i, a);
      h.push_back(-row.expr.constant);
    }
  }
  for (int i = 0; i < st.n; ++i) {
    if (std::isfinite(prob.lower()[i])) {
      tg.emplace_back(static_cast<int>(h.size()), i, -1.0);
      h.push_back(-prob.lower()[i]);
    }
    if (std::isfinite(prob.upper()[i])) {
      tg.emplace_back(static_cast<int>(h.size()), i, 1.0);
      h.push_back(prob.upper()[i]);
    }
  }
  st.l = static_cast<int>(h.size());

  // 2uv >= |w|^2  <=>  (u+v, u-v, sqrt2 w) in SOC. Rows are s = h - Gx.
  const double r2 = std::sqrt(2.0);
  for (const auto& cone : prob.cones()) {
    const int base = static_cast<int>(h.size());
    for (const auto& [i, a] : cone.u.terms) {
      tg.emplace_back(base, i, -a);
      tg.emplace_back(base + 1, i, -a);
    }
    for (const auto& [i, a] : cone.v.terms) {
      tg.emplace_back(base, i, -a);
      tg.emplace_back(base + 1, i, a);
    }
    h.push_back(cone.u.constant + cone.v.constant);
    h.push_back(cone.u.constant - cone.v.constant);
    for (const auto& w : cone.w) {
      const int r = static_cast<int>(h.size());
      for (const auto& [i, a] : w.terms) tg.emplace_back(r, i, -r2 * a);
      h.push_back(r2 * w.constant);
    }
    st.soc.push_back(static_cast<int>(h.size()) - base);
  }

  st.p = static_cast<int>(b.size());
  st.m = static_cast<int>(h.size());
  st.A.resize(st.p, st.n);
  st.A.setFromTriplets(ta.begin(), ta.end());
  st.G.resize(st.m, st.n);
  st.G.setFromTriplets(tg.begin(), tg.end());
  st.b = Eigen::Map<const Vec>(b.data(), st.p);
  st.h = Eigen::Map<const Vec>(h.data(), st.m);
  st.c = Eigen::Map<const Vec>(prob.cost().data(), st.n);
  return st;
}

// Ruiz equilibration. One scalar per SOC block keeps the cone invariant.
struct Scaling {
  Vec d, ea, eg;
};

Scaling equilibrate(Standard& st, int passes) {
  Scaling sc{Vec::Ones(st.n), Vec::Ones(st.p), Vec::Ones(st.m)};
  for (int pass = 0; pass < passes; ++pass) {
    Vec col = Vec::Zero(st.n), ra = Vec::Zero(st.p), rg = Vec::Zero(st.m);
    for (int j = 0; j < st.n; ++j) {
      for (SpMat::InnerIterator it(st.A, j); it; ++it) {
        const double a = std::abs(it.value());
        col[j] = std::max(col[j], a);
        ra[it.row()] = std::max(ra[it.row()], a);
      }
      for (SpMat::InnerIterator it(st.G, j); it; ++it) {
        const double a = std::abs(it.value());
        col[j] = std::max(col[j], a);
        rg[it.row()] = std::max(rg[it.row()], a);
      }
    }
    int k = st.l;
    for (int q : st.soc) {
      const double mx = rg.segment(k, q).maxCoeff();
      rg.segment(k, q).setConstant(mx);
      k += q;
    }
    auto inv_sqrt = [](double v) { return v > 0.0 ? 1.0 / std::sqrt(v) : 1.0; };
    Vec dc = col.unaryExpr(inv_sqrt), da = ra.unaryExpr(inv_sqrt), dg = rg.unaryExpr(inv_sqrt);
    for (int j = 0; j < st.n; ++j) {
      for (SpMat::InnerIterator it(st.A, j); it; ++it) it.valueRef() *= da[it.row()] * dc[j];
      for (SpMat::InnerIterator it(st.G, j); it; ++it) it.valueRef() *= dg[it.row()] * dc[j];
    }
    sc.d.array() *= dc.array();
    sc.ea.array() *= da.array();
    sc.eg.array() *= dg.array();
  }
  st.b.array() *= sc.ea.array();
  st.h.array() *= sc.eg.array();
  st.c.array() *= sc.d.array();
  return sc;
}

// Nesterov-Todd scaling for the product cone.
class NtScaling {
 public:
  NtScaling(const Standard& st) : st_(st) {}

  bool update(const Vec& s, const Vec& z) {
    d_.resize(st_.l);
    for (int i = 0; i < st_.l; ++i) {
      if (s[i] <= 0 || z[i] <= 0) return false;
      d_[i] = std::sqrt(s[i] / z[i]);
    }
    blocks_.clear();
    int k = st_.l;
    for (int q : st_.soc) {
      Block b;
      const double sres = s[k] * s[k] - s.segment(k + 1, q - 1).squaredNorm();
      const double zres = z[k] * z[k] - z.segment(k + 1, q - 1).squaredNorm();
      if (sres <= 0 || zres <= 0 || s[k] <= 0 || z[k] <= 0) return false;
      const double sn = std::sqrt(sres), zn = std::sqrt(zres);
      const Vec sb = s.segment(k, q) / sn, zb = z.segment(k, q) / zn;
      const double gamma = std::sqrt(0.5 * (1.0 + sb.dot(zb)));
      b.eta = std::sqrt(sn / zn);
      b.a = 0.5 / gamma * (sb[0] + zb[0]);
      b.q = 0.5 / gamma * (sb.tail(q - 1) - zb.tail(q - 1));
      Eigen::MatrixXd w(q, q);
      w(0, 0) = b.a;
      w.block(0, 1, 1, q - 1) = b.q.transpose();
      w.block(1, 0, q - 1, 1) = b.q;
      w.block(1, 1, q - 1, q - 1) = Eigen::MatrixXd::Identity(q - 1, q - 1) + b.q * b.q.transpose() / (1.0 + b.a);
      b.w2 = b.eta * b.eta * (w * w);
      blocks_.push_back(std::move(b));
      k += q;
    }
    return true;
  }

  Vec apply(const Vec& v, bool inverse) const {
    Vec out(v.size());
    for (int i = 0; i < st_.l; ++i) out[i] = inverse ? v[i] / d_[i] : v[i] * d_[i];
    int k = st_.l;
    for (std::size_t c = 0; c < blocks_.size(); ++c) {
      const auto& b = blocks_[c];
      const int q = st_.soc[c];
      const double v0 = v[k];
      const auto v1 = v.segment(k + 1, q - 1);
      const double qv = b.q.dot(v1);
      const double sign = inverse ? -1.0 : 1.0;
      const double f = inverse ? 1.0 / b.eta : b.eta;
      out[k] = f * (b.a * v0 + sign * qv);
      out.segment(k + 1, q - 1) = f * (v1 + (sign * v0 + qv / (1.0 + b.a)) * b.q);
      k += q;
    }
    return out;
  }

  Vec apply_w2(const Vec& v) const {
    Vec out(v.size());
    for (int i = 0; i < st_.l; ++i) out[i] = d_[i] * d_[i] * v[i];
    int k = st_.l;
    for (std::size_t c = 0; c < blocks_.size(); ++c) {
      const int q = st_.soc[c];
      out.segment(k, q) = blocks_[c].w2 * v.segment(k, q);
      k += q;
    }
    return out;
  }

  // Values of -W^2 - delta for the z block, lower triangle, in the entry
  // order used by KktSystem.
  void append_block(std::vector<double>& out, double delta) const {
    for (int i = 0; i < st_.l; ++i) out.push_back(-d_[i] * d_[i] - delta);
    for (std::size_t c = 0; c < blocks_.size(); ++c) {
      const int q = st_.soc[c];
      for (int i = 0; i < q; ++i)
        for (int j = 0; j <= i; ++j) out.push_back(-blocks_[c].w2(i, j) - (i == j ? delta : 0.0));
    }
  }

  void set_identity() {
    d_ = Vec::Ones(st_.l);
    blocks_.clear();
    for (int q : st_.soc) {
      Block b;
      b.q = Vec::Zero(q - 1);
      b.w2 = Eigen::MatrixXd::Identity(q, q);
      blocks_.push_back(std::move(b));
    }
  }

 private:
  struct Block {
    double eta = 1.0, a = 1.0;
    Vec q;
    Eigen::MatrixXd w2;
  };
  const Standard& st_;
  Vec d_;
  std::vector<Block> blocks_;
};

Vec jordan(const Standard& st, const Vec& x, const Vec& y) {
  Vec out(x.size());
  for (int i = 0; i < st.l; ++i) out[i] = x[i] * y[i];
  int k = st.l;
  for (int q : st.soc) {
    out[k] = x.segment(k, q).dot(y.segment(k, q));
    out.segment(k + 1, q - 1) = x[k] * y.segment(k + 1, q - 1) + y[k] * x.segment(k + 1, q - 1);
    k += q;
  }
  return out;
}

// Solves lambda o u = v for u.
Vec jordan_div(const Standard& st, const Vec& lambda, const Vec& v) {
  Vec out(v.size());
  for (int i = 0; i < st.l; ++i) out[i] = v[i] / lambda[i];
  int k = st.l;
  for (int q : st.soc) {
    const double l0 = lambda[k];
    const auto l1 = lambda.segment(k + 1, q - 1);
    const double rho = l0 * l0 - l1.squaredNorm();
    const double u0 = (l0 * v[k] - l1.dot(v.segment(k + 1, q - 1))) / rho;
    out[k] = u0;
    out.segment(k + 1, q - 1) = (v.segment(k + 1, q - 1) - u0 * l1) / l0;
    k += q;
  }
  return out;
}

Vec identity_element(const Standard& st) {
  Vec e = Vec::Zero(st.m);
  e.head(st.l).setOnes();
  int k = st.l;
  for (int q : st.soc) {
    e[k] = 1.0;
    k += q;
  }
  return e;
}

// Largest step (capped at `cap`) keeping v + alpha dv in the cone.
double max_step(const Standard& st, const Vec& v, const Vec& dv, double cap) {
  double alpha = cap;
  for (int i = 0; i < st.l; ++i)
    if (dv[i] < 0) alpha = std::min(alpha, -v[i] / dv[i]);
  int k = st.l;
  for (int q : st.soc) {
    const double t = v[k], dt = dv[k];
    const auto x = v.segment(k + 1, q - 1), dx = dv.segment(k + 1, q - 1);
    const double a = dt * dt - dx.squaredNorm();
    const double b = 2.0 * (t * dt - x.dot(dx));
    const double c = std::max(0.0, t * t - x.squaredNorm());
    double root = kInf;
    if (std::abs(a) < 1e-14 * (dt * dt + dx.squaredNorm() + 1e-300)) {
      if (b < 0) root = -c / b;
    } else {
      const double disc = b * b - 4.0 * a * c;
      if (disc >= 0) {
        const double sq = std::sqrt(disc);
        const double qq = -0.5 * (b + (b >= 0 ? sq : -sq));
        const double r1 = qq / a, r2 = qq != 0.0 ? c / qq : kInf;
        for (double r : {r1, r2})
          if (r > 0) root = std::min(root, r);
      }
    }
    if (dt < 0) root = std::min(root, -t / dt);
    alpha = std::min(alpha, root);
    k += q;
  }
  return std::max(alpha, 0.0);
}

// Smallest t with v + t e in the cone (negative when v is interior).
double cone_violation(const Standard& st, const Vec& v) {
  double worst = -kInf;
  for (int i = 0; i < st.l; ++i) worst = std::max(worst, -v[i]);
  int k = st.l;
  for (int q : st.soc) {
    worst = std::max(worst, v.segment(k + 1, q - 1).norm() - v[k]);
    k += q;
  }
  return worst;
}

class KktSystem {
 public:
  KktSystem(const Standard& st, double delta, int refine)
      : st_(st), delta_(delta), refine_(refine), dim_(st.n + st.p + st.m) {
    std::vector<detail::SparseLdl::Entry> entries;
    for (int i = 0; i < st.n; ++i) entries.push_back({i, i});
    for (int j = 0; j < st.n; ++j) {
      for (SpMat::InnerIterator it(st.A, j); it; ++it) entries.push_back({st.n + static_cast<int>(it.row()), j});
      for (SpMat::InnerIterator it(st.G, j); it; ++it)
        entries.push_back({st.n + st.p + static_cast<int>(it.row()), j});
    }
    for (int i = 0; i < st.p; ++i) entries.push_back({st.n + i, st.n + i});
    const int zoff = st.n + st.p;
    for (int i = 0; i < st.l; ++i) entries.push_back({zoff + i, zoff + i});
    int k = st.l;
    for (int q : st.soc) {
      for (int i = 0; i < q; ++i)
        for (int j = 0; j <= i; ++j) entries.push_back({zoff + k + i, zoff + k + j});
      k += q;
    }
    std::vector<int> signs(dim_, -1);
    std::fill(signs.begin(), signs.begin() + st.n, 1);
    ldl_.analyze(dim_, entries, std::move(signs));
    values_.reserve(entries.size());
  }

  void factor(const NtScaling& w) {
    values_.clear();
    for (int i = 0; i < st_.n; ++i) values_.push_back(delta_);
    for (int j = 0; j < st_.n; ++j) {
      for (SpMat::InnerIterator it(st_.A, j); it; ++it) values_.push_back(it.value());
      for (SpMat::InnerIterator it(st_.G, j); it; ++it) values_.push_back(it.value());
    }
    for (int i = 0; i < st_.p; ++i) values_.push_back(-delta_);
    w.append_block(values_, delta_);
    ldl_.factor(values_);
    w_ = &w;
  }

  Vec solve(const Vec& rhs) const {
    std::vector<double> buf(rhs.data(), rhs.data() + dim_);
    ldl_.solve(buf);
    Vec sol = Eigen::Map<Vec>(buf.data(), dim_);
    const double scale = 1.0 + rhs.lpNorm<Eigen::Infinity>();
    for (int it = 0; it < refine_; ++it) {
      const Vec r = rhs - multiply(sol);
      if (r.lpNorm<Eigen::Infinity>() <= 1e-14 * scale) break;
      std::copy(r.data(), r.data() + dim_, buf.begin());
      ldl_.solve(buf);
      sol += Eigen::Map<Vec>(buf.data(), dim_);
    }
    return sol;
  }

 private:
  Vec multiply(const Vec& v) const {
    const auto vx = v.head(st_.n), vy = v.segment(st_.n, st_.p), vz = v.tail(st_.m);
    Vec out(dim_);
    out.head(st_.n) = st_.A.transpose() * vy + st_.G.transpose() * vz;
    out.segment(st_.n, st_.p) = st_.A * vx;
    out.tail(st_.m) = st_.G * vx - w_->apply_w2(vz);
    return out;
  }

  const Standard& st_;
  double delta_;
  int refine_;
  int dim_;
  const NtScaling* w_ = nullptr;
  detail::SparseLdl ldl_;
  std::vector<double> values_;
};

}  // namespace

Solution solve(const ConicProblem& problem, const SolverOptions& opts) {
  problem.validate();
  Solution sol;
  Standard st = to_standard(problem, opts.check_tolerance);
  sol.dropped_constant_rows = st.dropped;
  sol.violated_constant_rows = st.violated;
  const Scaling sc = equilibrate(st, opts.equilibration_passes);

  const int n = st.n, p = st.p, m = st.m;
  const double nu = static_cast<double>(st.l + st.soc.size());
  const Vec e = identity_element(st);
  KktSystem kkt(st, opts.static_regularization, opts.refinement_steps);

  Vec x(n), y(p), z(m), s(m);
  auto split = [&](const Vec& v, Vec& vx, Vec& vy, Vec& vz) {
    vx = v.head(n);
    vy = v.segment(n, p);
    vz = v.tail(m);
  };

  NtScaling w(st);
  w.set_identity();
  kkt.factor(w);
  {
    Vec rhs = Vec::Zero(n + p + m);
    rhs.segment(n, p) = st.b;
    rhs.tail(m) = st.h;
    Vec tx, ty, tz;
    split(kkt.solve(rhs), tx, ty, tz);
    x = tx;
    s = -tz;
    rhs.setZero();
    rhs.head(n) = -st.c;
    split(kkt.solve(rhs), tx, ty, tz);
    y = ty;
    z = tz;
    const double as = cone_violation(st, s);
    if (as >= -1e-8 * std::max(1.0, s.norm())) s += (1.0 + as) * e;
    const double az = cone_violation(st, z);
    if (az >= -1e-8 * std::max(1.0, z.norm())) z += (1.0 + az) * e;
  }

  const double bnorm = 1.0 + st.b.lpNorm<Eigen::Infinity>();
  const double hnorm = 1.0 + st.h.lpNorm<Eigen::Infinity>();
  const double cnorm = 1.0 + st.c.lpNorm<Eigen::Infinity>();
  bool converged = false;
  double pres = kInf, dres = kInf, rel_gap = kInf;
  int it = 0;
  for (; it < opts.max_iterations; ++it) {
    const Vec rx = st.A.transpose() * y + st.G.transpose() * z + st.c;
    const Vec ry = st.A * x - st.b;
    const Vec rz = st.G * x + s - st.h;
    const double gap = s.dot(z);
    const double mu = gap / nu;
    const double pcost = st.c.dot(x);
    pres = std::max(ry.size() ? ry.lpNorm<Eigen::Infinity>() / bnorm : 0.0,
                    rz.size() ? rz.lpNorm<Eigen::Infinity>() / hnorm : 0.0);
    dres = rx.lpNorm<Eigen::Infinity>() / cnorm;
    rel_gap = gap / std::max(1.0, std::abs(pcost));
    sol.gap = gap;
    if (pres <= opts.tolerance && dres <= opts.tolerance && rel_gap <= opts.tolerance) {
      converged = true;
      break;
    }

    if (!w.update(s, z)) break;
    kkt.factor(w);
    const Vec lambda = w.apply(z, false);
    const Vec ll = jordan(st, lambda, lambda);

    auto direction = [&](const Vec& ds, Vec& dx, Vec& dy, Vec& dz, Vec& dsv) {
      const Vec u = jordan_div(st, lambda, ds);
      Vec rhs(n + p + m);
      rhs.head(n) = -rx;
      rhs.segment(n, p) = -ry;
      rhs.tail(m) = -rz - w.apply(u, false);
      split(kkt.solve(rhs), dx, dy, dz);
      dsv = w.apply(u - w.apply(dz, false), false);
    };

    Vec dx, dy, dz, ds;
    direction(-ll, dx, dy, dz, ds);
    const double a_aff = std::min(max_step(st, s, ds, 1.0), max_step(st, z, dz, 1.0));
    const double rho = (s + a_aff * ds).dot(z + a_aff * dz) / std::max(gap, 1e-300);
    const double sigma = std::clamp(rho * rho * rho, 0.0, 1.0);

    const Vec corr = jordan(st, w.apply(ds, true), w.apply(dz, false));
    direction(-ll - corr + sigma * mu * e, dx, dy, dz, ds);
    const double amax = std::min(max_step(st, s, ds, kInf), max_step(st, z, dz, kInf));
    const double alpha = std::min(1.0, 0.99 * amax);
    // A breakdown in the factorization shows up as a non-finite direction;
    // stop on the last finite iterate.
    if (!dx.allFinite() || !dy.allFinite() || !dz.allFinite() || !ds.allFinite()) break;
    if (!(alpha > 1e-12)) break;
    x += alpha * dx;
    y += alpha * dy;
    z += alpha * dz;
    s += alpha * ds;
  }
  sol.iterations = it;
  // A stalled iterate that already meets a looser tolerance is kept.
  if (!converged && it < opts.max_iterations) {
    const double loose = std::sqrt(opts.tolerance);
    converged = pres <= loose && dres <= loose && rel_gap <= loose;
  }

  const Vec xu = x.array() * sc.d.array();
  sol.x.assign(xu.data(), xu.data() + n);
  sol.objective = 0.0;
  for (int i = 0; i < n; ++i) sol.objective += problem.cost()[i] * sol.x[i];
  const Residuals res = residuals(problem, sol.x);
  sol.primal_residual = res.linear;
  sol.cone_residual = res.cone;
  {
    // A'y + G'z + c of the scaled system equals D times the original one.
    const Vec rx = st.A.transpose() * y + st.G.transpose() * z + st.c;
    sol.dual_residual = (rx.array() / sc.d.array()).abs().maxCoeff() /
                        (1.0 + Eigen::Map<const Vec>(problem.cost().data(), n).lpNorm<Eigen::Infinity>());
  }

  if (converged) {
    const bool certified = sol.primal_residual <= opts.check_tolerance &&
                           sol.cone_residual <= opts.check_tolerance;
    sol.status = certified ? SolveStatus::Optimal : SolveStatus::NumericalError;
  } else if (it >= opts.max_iterations) {
    // The method has no infeasibility certificate; a primal residual that
    // never came down is reported as infeasible.
    sol.status = pres > 1e-4 ? SolveStatus::Infeasible : SolveStatus::IterationLimit;
  } else {
    sol.status = pres > 1e-4 ? SolveStatus::Infeasible : SolveStatus::NumericalError;
  }
  return sol;
}

}  // namespace bess
