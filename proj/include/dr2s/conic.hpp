#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace dr2s {

using SpMat = Eigen::SparseMatrix<double, Eigen::RowMajor>;

enum class RowOrigin : std::uint8_t { recourse, local_cut, other };

// ||A x + b||_2 <= g'x + d
struct SocRow {
  SpMat A;
  Eigen::VectorXd b;
  Eigen::VectorXd g;
  double d = 0.0;
};

// min c'x + offset
// s.t.  G x >= h   (rows tagged by origin)
//       E x  = e
//       soc rows
//       lo <= x <= hi   (entries may be infinite)
struct ConeProgram {
  Eigen::VectorXd objective;
  double objective_offset = 0.0;
  SpMat G;
  Eigen::VectorXd h;
  std::vector<RowOrigin> origin;
  SpMat E;
  Eigen::VectorXd e;
  std::vector<SocRow> soc;
  Eigen::VectorXd lo;
  Eigen::VectorXd hi;

  int num_vars() const { return static_cast<int>(objective.size()); }
  int num_linear() const { return static_cast<int>(h.size()); }
  // Empty program with n free variables and no rows.
  static ConeProgram with_vars(int n);
  // Throws Error(input) on inconsistent dimensions or lo > hi.
  void validate() const;
  double eval_objective(const Eigen::VectorXd& x) const;
};

// Incremental row builder for ConeProgram.
class ProgramBuilder {
 public:
  explicit ProgramBuilder(int num_vars);
  void set_objective(const Eigen::VectorXd& c, double offset = 0.0);
  void set_bounds(const Eigen::VectorXd& lo, const Eigen::VectorXd& hi);
  void set_bound(int j, double lo, double hi);
  // sum coef_k x_{idx_k} >= rhs
  void add_ge(const std::vector<std::pair<int, double>>& row, double rhs, RowOrigin o = RowOrigin::other);
  void add_eq(const std::vector<std::pair<int, double>>& row, double rhs);
  void add_soc(SocRow row);
  ConeProgram build() const;

 private:
  int n_;
  Eigen::VectorXd c_;
  double offset_ = 0.0;
  Eigen::VectorXd lo_, hi_;
  std::vector<Eigen::Triplet<double>> g_, e_;
  std::vector<double> h_, eq_;
  std::vector<RowOrigin> origin_;
  std::vector<SocRow> soc_;
};

enum class ConicStatus { optimal, infeasible, unbounded, numerical_failure };
const char* to_string(ConicStatus s);

struct SocDual {
  double lambda = 0.0;
  Eigen::VectorXd theta;
};

// Lagrangian layout: c = G'linear + tauL - tauU + E'equality + sum_i (g_i lambda_i - A_i' theta_i)
// dual objective = h'linear + lo'tauL - hi'tauU + e'equality + sum_i (b_i'theta_i - d_i lambda_i)
struct ConicDuals {
  std::vector<SocDual> soc;
  Eigen::VectorXd linear;
  Eigen::VectorXd gamma1;  // linear restricted to recourse rows (in row order)
  Eigen::VectorXd gamma2;  // local-cut rows
  Eigen::VectorXd equality;
  Eigen::VectorXd tauL;
  Eigen::VectorXd tauU;
};

struct ConicSolution {
  ConicStatus status = ConicStatus::numerical_failure;
  Eigen::VectorXd x;
  double obj = 0.0;
  double dual_obj = 0.0;
  double gap = 0.0;
  ConicDuals duals;
  int iterations = 0;
  // status == infeasible: multipliers (linear, soc, box, equality) of a Farkas ray,
  // stored in `duals` with dual objective > 0 and zero cost; farkas_value holds that objective.
  double farkas_value = 0.0;
  std::string message;
};

struct ConicOptions {
  double tol = 1e-8;
  int max_iters = 200;
  bool repair_duals = true;
};

class ConicBackend {
 public:
  virtual ~ConicBackend() = default;
  virtual ConicSolution solve(const ConeProgram& p, const ConicOptions& opts) const = 0;
};

// Embedded homogeneous self-dual interior-point solver.
class HsdeBackend final : public ConicBackend {
 public:
  ConicSolution solve(const ConeProgram& p, const ConicOptions& opts) const override;
};

// Presolve (fixed variables), solve with the embedded backend, map duals back.
ConicSolution solve_conic(const ConeProgram& p, const ConicOptions& opts = {});
ConicSolution solve_conic(const ConeProgram& p, const ConicOptions& opts, const ConicBackend& backend);

struct CertificateReport {
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double cone_residual = 0.0;
  double complementarity = 0.0;
  double gap = 0.0;
  bool passed = false;
  std::vector<std::string> findings;
};

// Residuals are scaled by max(1, |data|); the gap is |primal - dual| / max(1, |primal|).
CertificateReport check_strong_duality(const ConeProgram& p, const ConicSolution& sol, double tol);
// Recomputes obj, dual_obj, gap from x and duals.
void recompute_objectives(const ConeProgram& p, ConicSolution& sol);
// Lagrangian dual objective of the stored multipliers.
double dual_objective(const ConeProgram& p, const ConicDuals& d);

}  // namespace dr2s
