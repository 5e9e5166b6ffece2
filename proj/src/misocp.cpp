#include "dr2s/misocp.hpp"

#include <cmath>
#include <limits>
#include <queue>
#include <sstream>

#include "dr2s/cuts.hpp"
#include "dr2s/error.hpp"

namespace dr2s {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Node {
  int id = 0;
  int parent = -1;
  int depth = 0;
  Vec lo, hi;
  std::vector<LocalCut> cuts;
  ConicSolution sol;
  double bound = 0.0;
};

struct NodeOrder {
  bool operator()(const Node* a, const Node* b) const {
    if (a->bound != b->bound) return a->bound > b->bound;
    return a->id > b->id;
  }
};

ConeProgram with_node(const ConeProgram& base, const Vec& lo, const Vec& hi, const std::vector<LocalCut>& cuts) {
  ConeProgram p = base;
  p.lo = lo;
  p.hi = hi;
  if (cuts.empty()) return p;
  const int m0 = p.num_linear();
  const int m = m0 + static_cast<int>(cuts.size());
  std::vector<Eigen::Triplet<double>> t;
  for (int i = 0; i < m0; ++i)
    for (SpMat::InnerIterator it(base.G, i); it; ++it) t.emplace_back(i, it.col(), it.value());
  p.h.conservativeResize(m);
  for (std::size_t k = 0; k < cuts.size(); ++k) {
    for (int j = 0; j < cuts[k].X.size(); ++j)
      if (cuts[k].X[j] != 0.0) t.emplace_back(m0 + static_cast<int>(k), j, cuts[k].X[j]);
    p.h[m0 + static_cast<int>(k)] = cuts[k].t;
    p.origin.push_back(RowOrigin::local_cut);
  }
  p.G.resize(m, p.num_vars());
  p.G.setFromTriplets(t.begin(), t.end());
  p.G.makeCompressed();
  return p;
}

std::string box_string(const Vec& lo, const Vec& hi, const std::vector<int>& ints) {
  std::ostringstream os;
  os << "[";
  for (std::size_t k = 0; k < ints.size(); ++k) {
    if (k) os << ", ";
    os << "x" << ints[k] << " in [" << lo[ints[k]] << "," << hi[ints[k]] << "]";
  }
  os << "]";
  return os.str();
}

class BranchAndBound {
 public:
  BranchAndBound(const MiConeProgram& p, const BcOptions& o) : p_(p), o_(o) {}

  BcResult run() {
    BcResult res;
    res.obj = kInf;
    auto root = std::make_unique<Node>();
    root->lo = p_.relaxation.lo;
    root->hi = p_.relaxation.hi;
    for (int j : p_.integer_vars) {
      if (!std::isfinite(root->lo[j]) || !std::isfinite(root->hi[j]))
        throw Error(ErrorCode::input, o_.context + "integer variable " + std::to_string(j) + " is unbounded");
      root->lo[j] = std::ceil(root->lo[j] - o_.int_tol);
      root->hi[j] = std::floor(root->hi[j] + o_.int_tol);
    }
    std::priority_queue<Node*, std::vector<Node*>, NodeOrder> open;
    std::vector<std::unique_ptr<Node>> store;
    if (evaluate(*root, res)) {
      open.push(root.get());
      store.push_back(std::move(root));
    }
    incumbent_ = kInf;
    double& incumbent = incumbent_;
    long processed = 0;
    while (!open.empty()) {
      if (o_.node_limit >= 0 && processed >= o_.node_limit) break;
      Node* nd = open.top();
      open.pop();
      ++processed;
      if (nd->bound >= incumbent - gap_tol(incumbent)) {
        add_leaf(res, *nd, FathomReason::bound);
        continue;
      }
      bool all_fixed = true;
      int branch = -1;
      double best_frac = o_.int_tol;
      for (int j : p_.integer_vars) {
        if (nd->lo[j] != nd->hi[j]) all_fixed = false;
        const double v = nd->sol.x[j];
        const double frac = std::fabs(v - std::round(v));
        if (frac > best_frac) {
          best_frac = frac;
          branch = j;
        }
      }
      if (all_fixed || branch < 0) {
        Vec x = nd->sol.x;
        for (int j : p_.integer_vars) x[j] = std::round(x[j]);
        if (nd->sol.obj < incumbent) {
          incumbent = nd->sol.obj;
          res.incumbent = x;
          res.obj = nd->sol.obj;
        }
        add_leaf(res, *nd, all_fixed ? FathomReason::bounds_fixed : FathomReason::integral);
        continue;
      }
      if (!std::isfinite(incumbent) || processed % 8 == 0) round_and_fix(*nd, res);
      const double v = nd->sol.x[branch];
      for (int side = 0; side < 2; ++side) {
        auto ch = std::make_unique<Node>();
        ch->parent = nd->id;
        ch->depth = nd->depth + 1;
        ch->lo = nd->lo;
        ch->hi = nd->hi;
        ch->cuts = nd->cuts;
        if (side == 0) ch->hi[branch] = std::floor(v);
        else ch->lo[branch] = std::ceil(v);
        if (evaluate(*ch, res)) {
          open.push(ch.get());
          store.push_back(std::move(ch));
        }
      }
    }
    res.nodes_explored = static_cast<int>(processed);
    bool any_open = false;
    double best_open = kInf;
    while (!open.empty()) {
      Node* nd = open.top();
      open.pop();
      if (nd->bound >= incumbent - gap_tol(incumbent)) {
        add_leaf(res, *nd, FathomReason::bound);
      } else {
        any_open = true;
        best_open = std::min(best_open, nd->bound);
        add_leaf(res, *nd, FathomReason::open);
      }
    }
    if (any_open) {
      res.status = BcStatus::gap_limit;
      res.bound = best_open;
    } else if (std::isfinite(incumbent)) {
      res.status = BcStatus::optimal;
      res.bound = incumbent;
      double b = incumbent;
      for (const auto& l : res.leaves) b = std::min(b, l.relaxation.obj);
      res.bound = b;
    } else {
      res.status = BcStatus::infeasible;
      res.bound = kInf;
    }
    return res;
  }

 private:
  // The relaxation bounds carry IPM error, so the prune test never goes below that accuracy.
  double gap_tol(double inc) const {
    if (!std::isfinite(inc)) return 0.0;
    return std::max(o_.rel_gap, 10.0 * o_.conic.tol) * std::max(1.0, std::fabs(inc));
  }

  void log(BcResult& res, const Node& nd, const char* ev) const {
    if (o_.keep_log) res.log.push_back({nd.id, nd.parent, nd.depth, nd.bound, ev});
  }

  // Solve the node relaxation; false if pruned as infeasible.
  bool evaluate(Node& nd, BcResult& res) {
    nd.id = next_id_++;
    for (int round = 0;; ++round) {
      ConeProgram prog = with_node(p_.relaxation, nd.lo, nd.hi, nd.cuts);
      nd.sol = solve_conic(prog, o_.conic);
      if (nd.sol.status == ConicStatus::numerical_failure) {
        const CertificateReport rep = check_strong_duality(prog, nd.sol, 1e-6);
        if (rep.passed) nd.sol.status = ConicStatus::optimal;
      }
      if (nd.sol.status == ConicStatus::infeasible) {
        nd.bound = kInf;
        log(res, nd, "infeasible");
        if (o_.infeasible_is_error)
          throw Error(ErrorCode::recourse, o_.context + "Assumption 1 violated: node relaxation infeasible at box " +
                                               box_string(nd.lo, nd.hi, p_.integer_vars) +
                                               "; consider --slack-augment");
        return false;
      }
      if (nd.sol.status == ConicStatus::unbounded)
        throw Error(ErrorCode::input, o_.context + "node relaxation unbounded");
      if (nd.sol.status != ConicStatus::optimal)
        throw Error(ErrorCode::numerical, o_.context + "conic solve failed at box " +
                                              box_string(nd.lo, nd.hi, p_.integer_vars) + ": " + nd.sol.message);
      nd.bound = nd.sol.obj;
      if (!o_.cut_callback || round >= o_.cut_rounds) break;
      NodeBox box{nd.lo, nd.hi, nd.cuts};
      std::vector<LocalCut> extra = o_.cut_callback(box, nd.sol);
      if (extra.empty()) break;
      nd.cuts.insert(nd.cuts.end(), extra.begin(), extra.end());
    }
    log(res, nd, "solved");
    return true;
  }

  // Primal heuristic: fix the integers to their rounded values and solve the rest.
  void round_and_fix(const Node& nd, BcResult& res) {
    Vec lo = nd.lo, hi = nd.hi;
    for (int j : p_.integer_vars) {
      const double v = std::min(std::max(std::round(nd.sol.x[j]), nd.lo[j]), nd.hi[j]);
      lo[j] = hi[j] = v;
    }
    ConeProgram prog = with_node(p_.relaxation, lo, hi, nd.cuts);
    ConicSolution sol = solve_conic(prog, o_.conic);
    if (sol.status == ConicStatus::numerical_failure && check_strong_duality(prog, sol, 1e-6).passed)
      sol.status = ConicStatus::optimal;
    if (sol.status != ConicStatus::optimal || !(sol.obj < incumbent_)) return;
    incumbent_ = sol.obj;
    res.incumbent = sol.x;
    for (int j : p_.integer_vars) res.incumbent[j] = lo[j];
    res.obj = sol.obj;
  }

  void add_leaf(BcResult& res, const Node& nd, FathomReason why) const {
    LeafRecord lr;
    lr.id = nd.id;
    lr.depth = nd.depth;
    lr.box = NodeBox{nd.lo, nd.hi, nd.cuts};
    lr.relaxation = nd.sol;
    lr.fathom_reason = why;
    res.leaves.push_back(std::move(lr));
    if (o_.keep_log) res.log.push_back({nd.id, nd.parent, nd.depth, nd.bound, std::string("leaf:") + to_string(why)});
  }

  const MiConeProgram& p_;
  const BcOptions& o_;
  int next_id_ = 0;
  double incumbent_ = kInf;
};

}  // namespace

const char* to_string(FathomReason r) {
  switch (r) {
    case FathomReason::integral: return "integral";
    case FathomReason::bound: return "bound";
    case FathomReason::bounds_fixed: return "bounds-fixed";
    case FathomReason::open: return "open";
  }
  return "?";
}

const char* to_string(BcStatus s) {
  switch (s) {
    case BcStatus::optimal: return "optimal";
    case BcStatus::gap_limit: return "gap-limit";
    case BcStatus::infeasible: return "infeasible";
  }
  return "?";
}

BcResult solve_monolithic(const MiConeProgram& p, const BcOptions& opts) {
  p.relaxation.validate();
  BranchAndBound bb(p, opts);
  return bb.run();
}

NodeBox root_box(const ScenarioData& sc) { return NodeBox{sc.zL, sc.zU, {}}; }

ConeProgram scenario_relaxation(const ScenarioData& sc, const Vec& y, const NodeBox& box) {
  const int nx = sc.num_vars();
  ProgramBuilder b(nx);
  b.set_objective(sc.q);
  b.set_bounds(box.zL, box.zU);
  const Vec rhs = sc.r - sc.T * y;
  for (int i = 0; i < sc.W.rows(); ++i) {
    std::vector<std::pair<int, double>> row;
    for (int j = 0; j < nx; ++j)
      if (sc.W(i, j) != 0.0) row.emplace_back(j, sc.W(i, j));
    b.add_ge(row, rhs[i], RowOrigin::recourse);
  }
  for (const auto& c : box.local_cuts) {
    std::vector<std::pair<int, double>> row;
    for (int j = 0; j < nx; ++j)
      if (c.X[j] != 0.0) row.emplace_back(j, c.X[j]);
    b.add_ge(row, c.t, RowOrigin::local_cut);
  }
  for (const auto& blk : sc.soc_blocks) {
    SocRow r;
    r.A = blk.A.sparseView();
    r.b = blk.B * y + blk.b;
    r.g = blk.g;
    r.d = blk.d;
    b.add_soc(std::move(r));
  }
  return b.build();
}

BcOptions subproblem_options(const SolveOptions& opts) {
  BcOptions b;
  b.rel_gap = opts.sub_tol;
  b.conic.tol = opts.conic_tol;
  b.conic.max_iters = opts.ipm_max_iters;
  b.infeasible_is_error = true;
  b.keep_log = opts.node_log;
  return b;
}

BcResult solve_subproblem(const ScenarioData& sc, const Vec& y, const SolveOptions& opts, int scenario_index) {
  return solve_subproblem(sc, y, subproblem_options(opts), scenario_index);
}

BcResult solve_subproblem(const ScenarioData& sc, const Vec& y, const BcOptions& opts, int scenario_index) {
  MiConeProgram mp;
  mp.relaxation = scenario_relaxation(sc, y, root_box(sc));
  for (int j = 0; j < sc.l1; ++j) mp.integer_vars.push_back(j);
  BcOptions o = opts;
  if (o.context.empty() && scenario_index >= 0) o.context = "scenario " + std::to_string(scenario_index) + ": ";
  BcResult res = solve_monolithic(mp, o);
  for (auto& leaf : res.leaves) {
    NodeCut nc = node_cut_from_duals(leaf, sc);
    leaf.R = nc.R;
    leaf.S = nc.S;
  }
  return res;
}

std::string format_node_log(const BcResult& r) {
  std::ostringstream os;
  for (const auto& e : r.log) os << e.id << " parent=" << e.parent << " depth=" << e.depth << " bound=" << e.bound << " " << e.event << "\n";
  return os.str();
}

}  // namespace dr2s
