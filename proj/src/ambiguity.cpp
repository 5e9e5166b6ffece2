#include "dr2s/ambiguity.hpp"

#include <cmath>

#include "dr2s/conic.hpp"
#include "dr2s/error.hpp"

namespace dr2s {

bool in_ambiguity_set(const Vec& p, const AmbiguitySet& set, double tol) {
  if (p.size() != set.p0.size()) return false;
  if (p.minCoeff() < -tol || std::fabs(p.sum() - 1.0) > tol) return false;
  switch (set.kind) {
    case AmbiguityKind::singleton: return (p - set.p0).cwiseAbs().maxCoeff() <= tol;
    case AmbiguityKind::total_variation: return (p - set.p0).cwiseAbs().sum() <= set.radius + tol;
    case AmbiguityKind::polyhedral:
      if (set.C.rows() == 0) return true;
      return ((set.C * p - set.rhs).array() >= -tol).all();
  }
  return false;
}

namespace {

// LP over (p, u): u only for the TV kind.
ProgramBuilder base_lp(const AmbiguitySet& set, int N, bool tv) {
  const int nv = tv ? 2 * N : N;
  ProgramBuilder b(nv);
  for (int w = 0; w < N; ++w) b.set_bound(w, 0.0, 1.0);
  std::vector<std::pair<int, double>> simplex;
  for (int w = 0; w < N; ++w) simplex.emplace_back(w, 1.0);
  b.add_eq(simplex, 1.0);
  if (tv) {
    std::vector<std::pair<int, double>> budget;
    for (int w = 0; w < N; ++w) {
      b.set_bound(N + w, 0.0, 2.0);
      b.add_ge({{N + w, 1.0}, {w, -1.0}}, -set.p0[w]);  // u >= p - p0
      b.add_ge({{N + w, 1.0}, {w, 1.0}}, set.p0[w]);    // u >= p0 - p
      budget.emplace_back(N + w, -1.0);
    }
    b.add_ge(budget, -set.radius);
  } else {
    for (int i = 0; i < set.C.rows(); ++i) {
      std::vector<std::pair<int, double>> row;
      for (int w = 0; w < N; ++w) row.emplace_back(w, set.C(i, w));
      b.add_ge(row, set.rhs[i]);
    }
  }
  return b;
}

// The tolerance sits near machine precision; a stalled solve is kept if its certificate holds at 1e-8.
ConicSolution solve_lp(const ConeProgram& p, const ConicOptions& co) {
  ConicSolution sol = solve_conic(p, co);
  if (sol.status == ConicStatus::numerical_failure && check_strong_duality(p, sol, 1e-8).passed)
    sol.status = ConicStatus::optimal;
  return sol;
}

// Move an interior-point answer onto the nearby vertex: entries within 1e-7 of p0 or of 0 are
// fixed, the rest (at most two) come from the simplex row and the tight budget row.
// Kept only if the objective does not drop.
void snap_tv_vertex(Vec& p, const Vec& values, const AmbiguitySet& set) {
  const int N = static_cast<int>(p.size());
  Vec q = p;
  std::vector<int> free;
  double mass = 1.0, budget = set.radius;
  for (int w = 0; w < N; ++w) {
    if (std::fabs(p[w] - set.p0[w]) < 1e-7) q[w] = set.p0[w];
    else if (p[w] < 1e-7) q[w] = 0.0;
    else {
      free.push_back(w);
      continue;
    }
    mass -= q[w];
    budget -= std::fabs(q[w] - set.p0[w]);
  }
  if (free.size() == 1) {
    q[free[0]] = mass;
  } else if (free.size() == 2) {
    const int a = free[0], b = free[1];
    const double sa = p[a] > set.p0[a] ? 1.0 : -1.0, sb = p[b] > set.p0[b] ? 1.0 : -1.0;
    if (sa == sb) return;
    // q_a + q_b = mass,  sa (q_a - p0_a) + sb (q_b - p0_b) = budget
    q[a] = 0.5 * (mass + sa * budget + set.p0[a] - set.p0[b]);
    q[b] = mass - q[a];
  } else if (!free.empty()) {
    return;
  }
  if (q.minCoeff() < 0.0 || !in_ambiguity_set(q, set, 1e-12)) return;
  const double scale = 1.0 + values.cwiseAbs().maxCoeff();
  if (q.dot(values) < p.dot(values) - 1e-9 * scale) return;
  p = q;
}

}  // namespace

WorstCaseResult worst_case_distribution(const Vec& values, const AmbiguitySet& set, const WorstCaseOptions& opts) {
  const int N = static_cast<int>(set.p0.size());
  if (values.size() != N) throw Error(ErrorCode::internal, "worst_case_distribution: length mismatch");
  WorstCaseResult res;
  const bool trivial =
      set.kind == AmbiguityKind::singleton || (set.kind == AmbiguityKind::total_variation && set.radius == 0.0);
  if (trivial) {
    res.p = set.p0;
  } else {
    const bool tv = set.kind == AmbiguityKind::total_variation;
    ProgramBuilder b = base_lp(set, N, tv);
    const int nv = tv ? 2 * N : N;
    Vec c = Vec::Zero(nv);
    c.head(N) = -values;
    b.set_objective(c);
    ConicOptions co;
    co.tol = opts.tol;
    ConicSolution sol = solve_lp(b.build(), co);
    if (sol.status == ConicStatus::infeasible) throw Error(ErrorCode::infeasible, "ambiguity set is empty");
    if (sol.status != ConicStatus::optimal) throw Error(ErrorCode::numerical, "worst-case LP failed: " + sol.message);
    if (opts.tie_break && N > 1) {
      const double vstar = -sol.obj;
      const double scale = 1.0 + values.cwiseAbs().maxCoeff();
      std::vector<std::pair<int, double>> row;
      for (int w = 0; w < N; ++w) row.emplace_back(w, values[w]);
      b.add_ge(row, vstar - 1e-10 * scale);
      Vec c2 = Vec::Zero(nv);
      for (int w = 0; w < N; ++w) c2[w] = static_cast<double>(w) / N;  // cheaper on low indices
      b.set_objective(c2);
      ConicSolution sol2 = solve_lp(b.build(), co);
      if (sol2.status == ConicStatus::optimal) sol = std::move(sol2);
    }
    res.p = sol.x.head(N);
  }

  if (!trivial && set.kind == AmbiguityKind::total_variation) snap_tv_vertex(res.p, values, set);

  // Clean-up: clip, renormalise, pull back inside the TV ball if rounding pushed it out.
  if (!trivial) {
    res.p = res.p.cwiseMax(0.0);
    res.p /= res.p.sum();
    for (int w = 0; w < N; ++w)
      if (std::fabs(res.p[w] - set.p0[w]) < 1e-12) res.p[w] = set.p0[w];
    if (set.kind == AmbiguityKind::total_variation) {
      const double dist = (res.p - set.p0).cwiseAbs().sum();
      if (dist > set.radius) res.p = set.p0 + (set.radius / dist) * (res.p - set.p0);
    }
  }
  if (!in_ambiguity_set(res.p, set, 1e-8)) throw Error(ErrorCode::numerical, "worst-case distribution outside the set");
  res.value = res.p.dot(values);
  for (int w = 0; w < N; ++w)
    if (std::fabs(res.p[w] - set.p0[w]) > 1e-9 || res.p[w] <= 1e-12) res.active.push_back(w);
  return res;
}

}  // namespace dr2s
