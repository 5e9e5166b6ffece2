#pragma once

#include <functional>
#include <json.hpp>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "dr2s/ambiguity.hpp"
#include "dr2s/cuts.hpp"
#include "dr2s/misocp.hpp"
#include "dr2s/model.hpp"

namespace dr2s {

struct MasterState {
  std::vector<AggregatedCut> cuts;
  double L = -std::numeric_limits<double>::infinity();
  double U = std::numeric_limits<double>::infinity();
  std::vector<int> incumbent;
  double incumbent_obj = std::numeric_limits<double>::infinity();
  int iteration = 0;
  std::set<std::vector<int>> visited;
  double eta_floor = 0.0;  // -M0
  // Feasible binary points, filled lazily in enumerate mode.
  std::shared_ptr<std::vector<std::vector<int>>> feasible;
};

struct MasterSolution {
  std::vector<int> y;
  double eta = 0.0;
  double L = 0.0;
};

// M0 = sum_w max|q_w| * (||zU_w||_1 + ||zL_w||_1) + 1
double eta_guard(const Instance& inst);
MasterMode resolve_master_mode(MasterMode m, int n);
std::vector<std::vector<int>> enumerate_feasible(const FirstStage& fs);
MasterSolution solve_master(MasterState& state, const FirstStage& fs, const SolveOptions& opts);

enum class RunStatus { optimal, gap_limit, infeasible };
const char* to_string(RunStatus s);

struct IterationRecord {
  int iteration = 0;
  std::vector<int> y;
  double eta = std::numeric_limits<double>::quiet_NaN();  // NaN: y not from a master solve
  double L = 0.0;
  double U_start = 0.0;
  double U = 0.0;
  Vec p;           // worst case of the cut values at y
  Vec Q;           // realised subproblem values
  Vec cut_values;  // lambda'y + zeta per scenario
  double worst_case_Q = 0.0;
  int cut_id = -1;  // index into RunResult::cuts, -1 if dropped as duplicate
  Vec cut_f;        // aggregated cut eta >= f'y + h built this iteration
  double cut_h = 0.0;
  bool terminal = false;
  bool repeat = false;
  bool partial = false;
  double wall_time = 0.0;
  double master_time = 0.0;
  double scenario_time = 0.0;
};

struct RunResult {
  RunStatus status = RunStatus::gap_limit;
  std::vector<int> y_star;
  double objective = 0.0;
  double L = 0.0;
  double U = 0.0;
  int iterations = 0;
  std::vector<IterationRecord> trace;
  std::vector<AggregatedCut> cuts;
  std::vector<CutLedgerEntry> ledger;
  double wall_time = 0.0;
  double master_time = 0.0;
  double scenario_time = 0.0;
  std::string message;
};

struct RunHooks {
  // Called on the coordinator thread, in scenario order, after each scenario phase.
  std::function<void(int iteration, int scenario, const Vec& y, const BcResult& sub, const ScenarioCut& cut)> on_subproblem;
};

RunResult run(const Instance& instance, const SolveOptions& opts, const RunHooks& hooks = {});

nlohmann::json trace_record_json(const IterationRecord& r);
nlohmann::json report_json(const RunResult& r);
std::string trace_jsonl(const RunResult& r);

}  // namespace dr2s
