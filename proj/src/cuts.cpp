#include "dr2s/cuts.hpp"

#include <cmath>
#include <limits>

#include "dr2s/error.hpp"

namespace dr2s {

NodeCut node_cut_from_duals(const LeafRecord& leaf, const ScenarioData& sc) {
  const ConicDuals& d = leaf.relaxation.duals;
  const int n = static_cast<int>(sc.T.cols());
  if (d.soc.size() != sc.soc_blocks.size() || d.gamma1.size() != sc.r.size() ||
      d.gamma2.size() != static_cast<Eigen::Index>(leaf.box.local_cuts.size()) || d.tauL.size() != sc.num_vars())
    throw Error(ErrorCode::internal, "node_cut_from_duals: dual layout does not match scenario");
  NodeCut nc;
  nc.leaf_id = leaf.id;
  nc.R = Vec::Zero(n);
  nc.S = 0.0;
  for (std::size_t i = 0; i < sc.soc_blocks.size(); ++i) {
    const SocBlock& blk = sc.soc_blocks[i];
    const SocDual& sd = d.soc[i];
    nc.R += blk.B.transpose() * sd.theta;
    nc.S += blk.b.dot(sd.theta) - blk.d * sd.lambda;
  }
  nc.R -= sc.T.transpose() * d.gamma1;
  nc.S += sc.r.dot(d.gamma1);
  for (std::size_t k = 0; k < leaf.box.local_cuts.size(); ++k) nc.S += leaf.box.local_cuts[k].t * d.gamma2[static_cast<Eigen::Index>(k)];
  nc.S += leaf.box.zL.dot(d.tauL) - leaf.box.zU.dot(d.tauU);
  return nc;
}

namespace {

ScenarioCut fallback_cut(const std::vector<NodeCut>& cuts) {
  ScenarioCut c;
  c.lambda = cuts[0].R;
  c.zeta = cuts[0].S;
  for (const auto& nc : cuts) {
    c.lambda = c.lambda.cwiseMin(nc.R);
    c.zeta = std::min(c.zeta, nc.S);
  }
  c.degraded = true;
  return c;
}

}  // namespace

ScenarioCut build_and_solve_disjunctive_lp(const std::vector<NodeCut>& node_cuts, const Mat& F, const Vec& a,
                                           const Vec& y_k, const DisjunctiveOptions& opts) {
  if (node_cuts.empty()) throw Error(ErrorCode::internal, "disjunctive LP needs at least one leaf");
  const int n = static_cast<int>(y_k.size());
  for (const auto& c : node_cuts)
    if (c.R.size() != n) throw Error(ErrorCode::internal, "disjunctive LP: leaf dimension mismatch");
  if (node_cuts.size() == 1) {
    ScenarioCut c;
    c.lambda = node_cuts[0].R;
    c.zeta = node_cuts[0].S;
    return c;
  }
  const int m0 = static_cast<int>(F.rows());
  const int L = static_cast<int>(node_cuts.size());
  double big = 0.0;
  for (const auto& c : node_cuts) big = std::max(big, c.R.cwiseAbs().maxCoeff() + std::fabs(c.S));
  const double Lambda = 10.0 * (1.0 + big);
  const double mult_cap = 100.0 * Lambda;

  // variables: lambda(n), zeta, then per leaf sigma(m0), gamma(n)
  const int per = m0 + n;
  const int nv = n + 1 + L * per;
  auto sig = [&](int v, int i) { return n + 1 + v * per + i; };
  auto gam = [&](int v, int j) { return n + 1 + v * per + m0 + j; };
  ProgramBuilder b(nv);
  for (int j = 0; j <= n; ++j) b.set_bound(j, -Lambda, Lambda);
  for (int k = n + 1; k < nv; ++k) b.set_bound(k, 0.0, mult_cap);
  for (int v = 0; v < L; ++v) {
    const NodeCut& nc = node_cuts[v];
    for (int j = 0; j < n; ++j) {
      // lambda_j + (F'sigma)_j - gamma_j <= R_j
      std::vector<std::pair<int, double>> row{{j, -1.0}, {gam(v, j), 1.0}};
      for (int i = 0; i < m0; ++i)
        if (F(i, j) != 0.0) row.emplace_back(sig(v, i), -F(i, j));
      b.add_ge(row, -nc.R[j]);
    }
    // zeta - sigma'a + 1'gamma <= S
    std::vector<std::pair<int, double>> row{{n, -1.0}};
    for (int i = 0; i < m0; ++i)
      if (a[i] != 0.0) row.emplace_back(sig(v, i), a[i]);
    for (int j = 0; j < n; ++j) row.emplace_back(gam(v, j), -1.0);
    b.add_ge(row, -nc.S);
  }
  Vec c = Vec::Zero(nv);
  c.head(n) = -y_k;
  c[n] = -1.0;
  b.set_objective(c);
  ConicOptions co;
  co.tol = opts.tol;
  ConicSolution sol = solve_conic(b.build(), co);
  if (sol.status != ConicStatus::optimal) return fallback_cut(node_cuts);

  if (opts.tie_break) {
    const double zstar = -sol.obj;
    std::vector<std::pair<int, double>> row;
    for (int j = 0; j < n; ++j) row.emplace_back(j, y_k[j]);
    row.emplace_back(n, 1.0);
    b.add_ge(row, zstar - 1e-9 * (1.0 + std::fabs(zstar)));
    Vec c2 = Vec::Zero(nv);
    c2.head(n).setConstant(-0.5);
    c2[n] = -1.0;
    b.set_objective(c2);
    ConicSolution sol2 = solve_conic(b.build(), co);
    if (sol2.status == ConicStatus::optimal) sol = std::move(sol2);
  }

  // Make the point exactly feasible for V: raise gamma where needed, then lower zeta.
  ScenarioCut out;
  out.lambda = sol.x.head(n);
  double zeta = sol.x[n];
  for (int v = 0; v < L; ++v) {
    const NodeCut& nc = node_cuts[v];
    Vec s(m0), g(n);
    for (int i = 0; i < m0; ++i) s[i] = std::max(sol.x[sig(v, i)], 0.0);
    for (int j = 0; j < n; ++j) g[j] = std::max(sol.x[gam(v, j)], 0.0);
    Vec fts = F.transpose() * s;
    for (int j = 0; j < n; ++j) g[j] = std::max(g[j], out.lambda[j] - nc.R[j] + fts[j]);
    zeta = std::min(zeta, nc.S + s.dot(a) - g.sum());
  }
  out.zeta = zeta;
  return out;
}

AggregatedCut aggregate(const std::vector<ScenarioCut>& cuts, const Vec& p) {
  if (cuts.size() != static_cast<std::size_t>(p.size()) || cuts.empty())
    throw Error(ErrorCode::internal, "aggregate: cut count does not match distribution length");
  AggregatedCut a;
  a.f = Vec::Zero(cuts[0].lambda.size());
  a.h = 0.0;
  for (std::size_t w = 0; w < cuts.size(); ++w) {
    if (cuts[w].lambda.size() != a.f.size()) throw Error(ErrorCode::internal, "aggregate: dimension mismatch");
    a.f += p[static_cast<Eigen::Index>(w)] * cuts[w].lambda;
    a.h += p[static_cast<Eigen::Index>(w)] * cuts[w].zeta;
  }
  a.p_used = p;
  return a;
}

bool is_duplicate(const AggregatedCut& c, const std::vector<AggregatedCut>& existing, double tol) {
  for (const auto& e : existing) {
    if (std::fabs(e.h - c.h) > tol) continue;
    if ((e.f - c.f).cwiseAbs().maxCoeff() <= tol) return true;
  }
  return false;
}

nlohmann::json cut_ledger_json(const std::vector<CutLedgerEntry>& ledger) {
  auto vec = [](const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
  nlohmann::json out = nlohmann::json::array();
  for (const auto& e : ledger) {
    nlohmann::json leaves = nlohmann::json::array();
    for (const auto& l : e.leaves) leaves.push_back({{"leaf_id", l.leaf_id}, {"R", vec(l.R)}, {"S", l.S}});
    out.push_back({{"iteration", e.iteration},
                   {"scenario", e.scenario},
                   {"lambda", vec(e.cut.lambda)},
                   {"zeta", e.cut.zeta},
                   {"degraded", e.cut.degraded},
                   {"leaves", leaves}});
  }
  return out;
}

}  // namespace dr2s
