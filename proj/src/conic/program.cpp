#include <cmath>
#include <limits>

#include "dr2s/conic.hpp"
#include "dr2s/error.hpp"

namespace dr2s {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

SpMat from_triplets(int rows, int cols, const std::vector<Eigen::Triplet<double>>& t) {
  SpMat m(rows, cols);
  m.setFromTriplets(t.begin(), t.end());
  m.makeCompressed();
  return m;
}

}  // namespace

const char* to_string(ConicStatus s) {
  switch (s) {
    case ConicStatus::optimal: return "optimal";
    case ConicStatus::infeasible: return "infeasible";
    case ConicStatus::unbounded: return "unbounded";
    case ConicStatus::numerical_failure: return "numerical-failure";
  }
  return "?";
}

ConeProgram ConeProgram::with_vars(int n) {
  ConeProgram p;
  p.objective = Eigen::VectorXd::Zero(n);
  p.G = SpMat(0, n);
  p.h.resize(0);
  p.E = SpMat(0, n);
  p.e.resize(0);
  p.lo = Eigen::VectorXd::Constant(n, -kInf);
  p.hi = Eigen::VectorXd::Constant(n, kInf);
  return p;
}

void ConeProgram::validate() const {
  const int n = num_vars();
  auto fail = [](const std::string& m) { throw Error(ErrorCode::input, "cone program: " + m); };
  if (G.cols() != n || G.rows() != h.size()) fail("linear row dimensions");
  if (static_cast<int>(origin.size()) != h.size()) fail("row origin tags");
  if (E.cols() != n || E.rows() != e.size()) fail("equality dimensions");
  if (lo.size() != n || hi.size() != n) fail("box dimensions");
  for (int j = 0; j < n; ++j) {
    if (std::isnan(lo[j]) || std::isnan(hi[j]) || lo[j] > hi[j]) fail("lo > hi at variable " + std::to_string(j));
  }
  for (const auto& r : soc) {
    if (r.A.cols() != n || r.A.rows() != r.b.size() || r.g.size() != n) fail("soc row dimensions");
  }
}

double ConeProgram::eval_objective(const Eigen::VectorXd& x) const { return objective.dot(x) + objective_offset; }

ProgramBuilder::ProgramBuilder(int num_vars)
    : n_(num_vars),
      c_(Eigen::VectorXd::Zero(num_vars)),
      lo_(Eigen::VectorXd::Constant(num_vars, -kInf)),
      hi_(Eigen::VectorXd::Constant(num_vars, kInf)) {}

void ProgramBuilder::set_objective(const Eigen::VectorXd& c, double offset) {
  c_ = c;
  offset_ = offset;
}

void ProgramBuilder::set_bounds(const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
  lo_ = lo;
  hi_ = hi;
}

void ProgramBuilder::set_bound(int j, double lo, double hi) {
  lo_[j] = lo;
  hi_[j] = hi;
}

void ProgramBuilder::add_ge(const std::vector<std::pair<int, double>>& row, double rhs, RowOrigin o) {
  const int r = static_cast<int>(h_.size());
  for (const auto& [j, v] : row)
    if (v != 0.0) g_.emplace_back(r, j, v);
  h_.push_back(rhs);
  origin_.push_back(o);
}

void ProgramBuilder::add_eq(const std::vector<std::pair<int, double>>& row, double rhs) {
  const int r = static_cast<int>(eq_.size());
  for (const auto& [j, v] : row)
    if (v != 0.0) e_.emplace_back(r, j, v);
  eq_.push_back(rhs);
}

void ProgramBuilder::add_soc(SocRow row) { soc_.push_back(std::move(row)); }

ConeProgram ProgramBuilder::build() const {
  ConeProgram p;
  p.objective = c_;
  p.objective_offset = offset_;
  p.G = from_triplets(static_cast<int>(h_.size()), n_, g_);
  p.h = Eigen::Map<const Eigen::VectorXd>(h_.data(), static_cast<Eigen::Index>(h_.size()));
  p.origin = origin_;
  p.E = from_triplets(static_cast<int>(eq_.size()), n_, e_);
  p.e = Eigen::Map<const Eigen::VectorXd>(eq_.data(), static_cast<Eigen::Index>(eq_.size()));
  p.soc = soc_;
  p.lo = lo_;
  p.hi = hi_;
  return p;
}

// ---------------------------------------------------------------------------

double dual_objective(const ConeProgram& p, const ConicDuals& d) {
  double v = p.h.dot(d.linear) + p.e.dot(d.equality) + p.objective_offset;
  for (int j = 0; j < p.num_vars(); ++j) {
    if (d.tauL[j] != 0.0) v += p.lo[j] * d.tauL[j];
    if (d.tauU[j] != 0.0) v -= p.hi[j] * d.tauU[j];
  }
  for (std::size_t i = 0; i < p.soc.size(); ++i) v += p.soc[i].b.dot(d.soc[i].theta) - p.soc[i].d * d.soc[i].lambda;
  return v;
}

void recompute_objectives(const ConeProgram& p, ConicSolution& sol) {
  sol.obj = p.eval_objective(sol.x);
  sol.dual_obj = dual_objective(p, sol.duals);
  sol.gap = std::fabs(sol.obj - sol.dual_obj);
}

namespace {

// c - (G'linear + E'eq + sum(g lambda - A'theta)); box multipliers excluded.
Eigen::VectorXd reduced_cost(const ConeProgram& p, const ConicDuals& d) {
  Eigen::VectorXd rc = p.objective;
  rc -= p.G.transpose() * d.linear;
  if (p.E.rows() > 0) rc -= p.E.transpose() * d.equality;
  for (std::size_t i = 0; i < p.soc.size(); ++i) {
    rc -= p.soc[i].g * d.soc[i].lambda;
    rc += p.soc[i].A.transpose() * d.soc[i].theta;
  }
  return rc;
}

void split_gamma(const ConeProgram& p, ConicDuals& d) {
  std::vector<double> g1, g2;
  for (int i = 0; i < p.num_linear(); ++i) {
    if (p.origin[i] == RowOrigin::recourse) g1.push_back(d.linear[i]);
    else if (p.origin[i] == RowOrigin::local_cut) g2.push_back(d.linear[i]);
  }
  d.gamma1 = Eigen::Map<Eigen::VectorXd>(g1.data(), static_cast<Eigen::Index>(g1.size()));
  d.gamma2 = Eigen::Map<Eigen::VectorXd>(g2.data(), static_cast<Eigen::Index>(g2.size()));
}

// Project multipliers into their cones and recompute box multipliers from reduced costs
// wherever both bounds are finite, so that dual feasibility holds up to rounding.
void repair_duals(const ConeProgram& p, ConicDuals& d, bool zero_cost) {
  for (int i = 0; i < d.linear.size(); ++i) d.linear[i] = std::max(d.linear[i], 0.0);
  for (auto& s : d.soc) s.lambda = std::max(s.lambda, s.theta.norm());
  ConeProgram q;
  const ConeProgram* pp = &p;
  if (zero_cost) {
    q = p;
    q.objective.setZero();
    pp = &q;
  }
  Eigen::VectorXd rc = reduced_cost(*pp, d);
  for (int j = 0; j < p.num_vars(); ++j) {
    const bool lf = std::isfinite(p.lo[j]), hf = std::isfinite(p.hi[j]);
    if (lf && hf) {
      d.tauL[j] = std::max(rc[j], 0.0);
      d.tauU[j] = std::max(-rc[j], 0.0);
    } else {
      d.tauL[j] = lf ? std::max(d.tauL[j], 0.0) : 0.0;
      d.tauU[j] = hf ? std::max(d.tauU[j], 0.0) : 0.0;
    }
  }
}

struct Presolved {
  ConeProgram reduced;
  std::vector<int> keep;        // reduced var -> original var
  std::vector<int> lin_keep;    // reduced linear row -> original row
  std::vector<int> soc_keep;    // reduced soc row -> original soc row
  Eigen::VectorXd fixed_value;  // original indexing, meaningful for fixed vars
  std::vector<bool> fixed;
  bool infeasible = false;
  int infeasible_linear = -1;
  int infeasible_soc = -1;
};

Presolved presolve(const ConeProgram& p, double tol) {
  Presolved ps;
  const int n = p.num_vars();
  ps.fixed.assign(n, false);
  ps.fixed_value = Eigen::VectorXd::Zero(n);
  std::vector<int> newidx(n, -1);
  for (int j = 0; j < n; ++j) {
    if (p.lo[j] == p.hi[j]) {
      ps.fixed[j] = true;
      ps.fixed_value[j] = p.lo[j];
    } else {
      newidx[j] = static_cast<int>(ps.keep.size());
      ps.keep.push_back(j);
    }
  }
  const int nr = static_cast<int>(ps.keep.size());
  ConeProgram& r = ps.reduced;
  r.objective.resize(nr);
  r.lo.resize(nr);
  r.hi.resize(nr);
  for (int k = 0; k < nr; ++k) {
    r.objective[k] = p.objective[ps.keep[k]];
    r.lo[k] = p.lo[ps.keep[k]];
    r.hi[k] = p.hi[ps.keep[k]];
  }
  r.objective_offset = p.objective_offset + p.objective.dot(ps.fixed_value);

  auto row_scale = [](double v) { return std::max(1.0, std::fabs(v)); };

  std::vector<Eigen::Triplet<double>> gt;
  std::vector<double> hv;
  for (int i = 0; i < p.G.rows(); ++i) {
    double rhs = p.h[i];
    int nnz = 0;
    for (SpMat::InnerIterator it(p.G, i); it; ++it) {
      if (ps.fixed[it.col()]) rhs -= it.value() * ps.fixed_value[it.col()];
      else if (it.value() != 0.0) ++nnz;
    }
    if (nnz == 0) {
      if (rhs > tol * row_scale(p.h[i])) {
        ps.infeasible = true;
        ps.infeasible_linear = i;
      }
      continue;
    }
    const int ri = static_cast<int>(hv.size());
    for (SpMat::InnerIterator it(p.G, i); it; ++it)
      if (!ps.fixed[it.col()] && it.value() != 0.0) gt.emplace_back(ri, newidx[it.col()], it.value());
    hv.push_back(rhs);
    r.origin.push_back(p.origin[i]);
    ps.lin_keep.push_back(i);
  }
  r.G = from_triplets(static_cast<int>(hv.size()), nr, gt);
  r.h = Eigen::Map<Eigen::VectorXd>(hv.data(), static_cast<Eigen::Index>(hv.size()));

  std::vector<Eigen::Triplet<double>> et;
  std::vector<double> ev;
  for (int i = 0; i < p.E.rows(); ++i) {
    double rhs = p.e[i];
    int nnz = 0;
    for (SpMat::InnerIterator it(p.E, i); it; ++it) {
      if (ps.fixed[it.col()]) rhs -= it.value() * ps.fixed_value[it.col()];
      else if (it.value() != 0.0) ++nnz;
    }
    if (nnz == 0) {
      if (std::fabs(rhs) > tol * row_scale(p.e[i])) ps.infeasible = true;
      continue;
    }
    const int ri = static_cast<int>(ev.size());
    for (SpMat::InnerIterator it(p.E, i); it; ++it)
      if (!ps.fixed[it.col()] && it.value() != 0.0) et.emplace_back(ri, newidx[it.col()], it.value());
    ev.push_back(rhs);
  }
  r.E = from_triplets(static_cast<int>(ev.size()), nr, et);
  r.e = Eigen::Map<Eigen::VectorXd>(ev.data(), static_cast<Eigen::Index>(ev.size()));
  // Equality rows are kept in original order; rows mapped back by position among non-empty rows.

  for (std::size_t i = 0; i < p.soc.size(); ++i) {
    const SocRow& s = p.soc[i];
    SocRow t;
    t.b = s.b;
    t.d = s.d;
    t.g.resize(nr);
    for (int j = 0; j < n; ++j) {
      if (ps.fixed[j]) t.d += s.g[j] * ps.fixed_value[j];
      else t.g[newidx[j]] = s.g[j];
    }
    std::vector<Eigen::Triplet<double>> at;
    for (int k = 0; k < s.A.rows(); ++k)
      for (SpMat::InnerIterator it(s.A, k); it; ++it) {
        if (ps.fixed[it.col()]) t.b[k] += it.value() * ps.fixed_value[it.col()];
        else if (it.value() != 0.0) at.emplace_back(k, newidx[it.col()], it.value());
      }
    t.A = from_triplets(static_cast<int>(s.A.rows()), nr, at);
    if (at.empty() && (nr == 0 || t.g.cwiseAbs().maxCoeff() == 0.0)) {
      if (t.b.norm() > t.d + tol * row_scale(t.d)) {
        ps.infeasible = true;
        ps.infeasible_soc = static_cast<int>(i);
      }
      continue;
    }
    ps.soc_keep.push_back(static_cast<int>(i));
    r.soc.push_back(std::move(t));
  }
  if (nr == 0) {
    r.G = SpMat(0, 0);
    r.h.resize(0);
    r.origin.clear();
    r.E = SpMat(0, 0);
    r.e.resize(0);
  }
  return ps;
}

ConicDuals zero_duals(const ConeProgram& p) {
  ConicDuals d;
  d.linear = Eigen::VectorXd::Zero(p.num_linear());
  d.equality = Eigen::VectorXd::Zero(p.E.rows());
  d.tauL = Eigen::VectorXd::Zero(p.num_vars());
  d.tauU = Eigen::VectorXd::Zero(p.num_vars());
  d.soc.resize(p.soc.size());
  for (std::size_t i = 0; i < p.soc.size(); ++i) d.soc[i].theta = Eigen::VectorXd::Zero(p.soc[i].b.size());
  return d;
}

}  // namespace

ConicSolution solve_conic(const ConeProgram& p, const ConicOptions& opts) {
  static const HsdeBackend backend;
  return solve_conic(p, opts, backend);
}

ConicSolution solve_conic(const ConeProgram& p, const ConicOptions& opts, const ConicBackend& backend) {
  if (!(opts.tol > 0.0)) throw Error(ErrorCode::input, "conic tolerance must be positive");
  p.validate();
  Presolved ps = presolve(p, opts.tol);
  ConicSolution out;
  out.duals = zero_duals(p);
  out.x = ps.fixed_value;

  if (ps.infeasible) {
    out.status = ConicStatus::infeasible;
    out.message = "presolve: constant row violated";
    if (ps.infeasible_linear >= 0) out.duals.linear[ps.infeasible_linear] = 1.0;
    if (ps.infeasible_soc >= 0) {
      // theta = b_eff/||b_eff||, lambda = 1 gives ||b_eff|| - d_eff > 0
      const SocRow& s = p.soc[ps.infeasible_soc];
      Eigen::VectorXd beff = s.b + s.A * ps.fixed_value;
      const double nb = beff.norm();
      out.duals.soc[ps.infeasible_soc].lambda = 1.0;
      out.duals.soc[ps.infeasible_soc].theta = nb > 0.0 ? Eigen::VectorXd(beff / nb) : beff;
    }
    repair_duals(p, out.duals, true);
    out.farkas_value = dual_objective(p, out.duals) - p.objective_offset;
    split_gamma(p, out.duals);
    return out;
  }

  ConicSolution red;
  if (ps.keep.empty()) {
    red.status = ConicStatus::optimal;
    red.x.resize(0);
    red.duals = zero_duals(ps.reduced);
  } else {
    red = backend.solve(ps.reduced, opts);
  }
  out.status = red.status;
  out.iterations = red.iterations;
  out.message = red.message;
  out.farkas_value = red.farkas_value;
  for (std::size_t k = 0; k < ps.keep.size(); ++k) {
    const int j = ps.keep[k];
    out.x[j] = red.x.size() ? red.x[k] : 0.0;
    out.duals.tauL[j] = red.duals.tauL.size() ? red.duals.tauL[k] : 0.0;
    out.duals.tauU[j] = red.duals.tauU.size() ? red.duals.tauU[k] : 0.0;
  }
  for (std::size_t k = 0; k < ps.lin_keep.size(); ++k) out.duals.linear[ps.lin_keep[k]] = red.duals.linear[k];
  {
    // equality rows: non-empty rows were kept in order
    int k = 0;
    for (int i = 0; i < p.E.rows(); ++i) {
      bool empty = true;
      for (SpMat::InnerIterator it(p.E, i); it; ++it)
        if (!ps.fixed[it.col()] && it.value() != 0.0) empty = false;
      if (!empty) out.duals.equality[i] = red.duals.equality[k++];
    }
  }
  for (std::size_t k = 0; k < ps.soc_keep.size(); ++k) out.duals.soc[ps.soc_keep[k]] = red.duals.soc[k];

  const bool ray = out.status == ConicStatus::infeasible;
  if (out.status == ConicStatus::optimal || out.status == ConicStatus::numerical_failure || ray) {
    // Box multipliers of fixed variables always come from reduced costs.
    Eigen::VectorXd rc;
    {
      ConeProgram q;
      const ConeProgram* pp = &p;
      if (ray) {
        q = p;
        q.objective.setZero();
        pp = &q;
      }
      rc = reduced_cost(*pp, out.duals);
    }
    for (int j = 0; j < p.num_vars(); ++j)
      if (ps.fixed[j]) {
        out.duals.tauL[j] = std::max(rc[j], 0.0);
        out.duals.tauU[j] = std::max(-rc[j], 0.0);
      }
    if (opts.repair_duals) repair_duals(p, out.duals, ray);
  }
  split_gamma(p, out.duals);
  if (ray) {
    out.farkas_value = dual_objective(p, out.duals) - p.objective_offset;
    out.obj = std::numeric_limits<double>::infinity();
    return out;
  }
  if (out.status == ConicStatus::unbounded) {
    out.obj = -std::numeric_limits<double>::infinity();
    return out;
  }
  recompute_objectives(p, out);
  return out;
}

}  // namespace dr2s
