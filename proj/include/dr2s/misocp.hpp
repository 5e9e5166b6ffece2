#pragma once

#include <functional>
#include <string>
#include <vector>

#include "dr2s/conic.hpp"
#include "dr2s/model.hpp"

namespace dr2s {

// X x >= t added at a node and inherited by its descendants.
struct LocalCut {
  Eigen::VectorXd X;
  double t = 0.0;
};

struct NodeBox {
  Vec zL;
  Vec zU;
  std::vector<LocalCut> local_cuts;
};

enum class FathomReason { integral, bound, bounds_fixed, open };
const char* to_string(FathomReason r);

struct LeafRecord {
  int id = 0;
  int depth = 0;
  NodeBox box;
  ConicSolution relaxation;
  Vec R;         // filled by solve_subproblem
  double S = 0.0;
  FathomReason fathom_reason = FathomReason::integral;
};

enum class BcStatus { optimal, gap_limit, infeasible };
const char* to_string(BcStatus s);

struct NodeLogEntry {
  int id = 0;
  int parent = -1;
  int depth = 0;
  double bound = 0.0;
  std::string event;
};

struct BcResult {
  BcStatus status = BcStatus::infeasible;
  Vec incumbent;
  double obj = 0.0;    // incumbent objective (+inf if none)
  double bound = 0.0;  // best remaining relaxation bound
  std::vector<LeafRecord> leaves;
  int nodes_explored = 0;
  std::vector<NodeLogEntry> log;
};

// Returns local cuts for a just-solved node; empty = none. Invoked at most a few rounds per node.
using CutCallback = std::function<std::vector<LocalCut>(const NodeBox&, const ConicSolution&)>;

struct BcOptions {
  double rel_gap = 1e-9;
  double int_tol = 1e-6;
  long node_limit = -1;  // < 0: unlimited; otherwise stop after this many processed nodes
  ConicOptions conic;
  bool keep_log = false;
  bool infeasible_is_error = false;  // scenario subproblems: infeasible node violates complete recourse
  std::string context;               // prefixed to error messages
  CutCallback cut_callback;
  int cut_rounds = 3;
};

struct MiConeProgram {
  ConeProgram relaxation;
  std::vector<int> integer_vars;
};

BcResult solve_monolithic(const MiConeProgram& p, const BcOptions& opts = {});

// Node relaxation of Sub(y, w) over the given box.
ConeProgram scenario_relaxation(const ScenarioData& sc, const Vec& y, const NodeBox& box);
NodeBox root_box(const ScenarioData& sc);

BcOptions subproblem_options(const SolveOptions& opts);
// Best-bound branch-and-cut on Sub(y, w); leaves carry (R, S).
BcResult solve_subproblem(const ScenarioData& sc, const Vec& y, const BcOptions& opts, int scenario_index = -1);
BcResult solve_subproblem(const ScenarioData& sc, const Vec& y, const SolveOptions& opts, int scenario_index = -1);

std::string format_node_log(const BcResult& r);

}  // namespace dr2s
