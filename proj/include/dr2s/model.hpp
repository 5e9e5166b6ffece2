#pragma once

#include <Eigen/Dense>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace dr2s {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// ||f y + g||_2 <= h'y + e
struct FirstStageSoc {
  Mat f;
  Vec g;
  Vec h;
  double e = 0.0;
};

// min c'y + max_p E_p[Q(y, w)]  s.t.  F y >= a, soc rows, y binary.
struct FirstStage {
  Vec c;
  Mat F;
  Vec a;
  std::vector<FirstStageSoc> soc_constraints;
  int n() const { return static_cast<int>(c.size()); }
};

// ||A x + B y + b||_2 <= g'x + d
struct SocBlock {
  Mat A;
  Mat B;
  Vec b;
  Vec g;
  double d = 0.0;
};

// Q(y) = min q'x  s.t.  W x + T y >= r, soc blocks, zL <= x <= zU,
// x_0..x_{l1-1} integer.
struct ScenarioData {
  Vec q;
  Mat W;
  Mat T;
  Vec r;
  std::vector<SocBlock> soc_blocks;
  int l1 = 0;
  int l2 = 0;
  Vec zL;
  Vec zU;
  int num_vars() const { return l1 + l2; }
};

enum class AmbiguityKind { singleton, total_variation, polyhedral };

// Polyhedral rows read C p >= rhs (on top of the simplex).
struct AmbiguitySet {
  AmbiguityKind kind = AmbiguityKind::singleton;
  Vec p0;
  double radius = 0.0;
  Mat C;
  Vec rhs;
};

struct Instance {
  std::string name;
  FirstStage first_stage;
  std::vector<ScenarioData> scenarios;
  AmbiguitySet ambiguity;
  std::optional<std::vector<int>> initial_y;
};

enum class MasterMode { automatic, enumerate, branch_and_cut };

struct SolveOptions {
  double epsilon = -1.0;  // <= 0: 1e-6 * (1 + |U|)
  double sub_tol = 1e-9;
  double conic_tol = 1e-8;
  int ipm_max_iters = 200;
  int max_iters = 10000;
  double time_limit_seconds = std::numeric_limits<double>::infinity();
  MasterMode master_mode = MasterMode::automatic;
  bool parallel_scenarios = true;
  int threads = 0;  // 0: hardware concurrency
  bool slack_augment = false;
  double slack_penalty = 1e6;
  int partial_subsolve_iters = 0;
  int partial_node_limit = 1;
  bool node_log = false;  // keep per-node events in subproblem results
  std::optional<std::vector<int>> initial_y;
};

enum class Severity { fatal, warning, info };

struct Finding {
  Severity severity;
  std::string code;
  std::string message;
};

struct ValidationReport {
  std::vector<Finding> findings;
  bool ok() const;
  int count(Severity s) const;
};

// Structural checks only (dimensions, bounds, ambiguity set).
ValidationReport validate_structure(const Instance& inst);
// Structural checks plus a complete-recourse spot check at one feasible y.
ValidationReport validate(const Instance& inst);
// Throws Error(input) listing fatal findings.
void require_valid(const Instance& inst);

Instance augment_with_slacks(const Instance& inst, double penalty);

// Feasibility of a binary y for the first stage.
bool first_stage_feasible(const FirstStage& fs, const std::vector<int>& y, double tol = 1e-9);

namespace json_io {
std::string to_json(const Instance& inst);
Instance from_json(const std::string& text);
Instance load(const std::string& path);
void save(const Instance& inst, const std::string& path);
}  // namespace json_io

}  // namespace dr2s
