#pragma once

#include <json.hpp>
#include <string>
#include <vector>

#include "dr2s/misocp.hpp"
#include "dr2s/model.hpp"

namespace dr2s {

struct NodeCut {
  Vec R;
  double S = 0.0;
  int leaf_id = -1;
  double value_at(const Vec& y) const { return R.dot(y) + S; }
};

struct ScenarioCut {
  Vec lambda;
  double zeta = 0.0;
  int scenario = -1;
  int iteration = -1;
  bool degraded = false;  // fallback point used
  double value_at(const Vec& y) const { return lambda.dot(y) + zeta; }
};

struct AggregatedCut {
  Vec f;
  double h = 0.0;
  Vec p_used;
  double value_at(const Vec& y) const { return f.dot(y) + h; }
};

NodeCut node_cut_from_duals(const LeafRecord& leaf, const ScenarioData& sc);

struct DisjunctiveOptions {
  double tol = 1e-8;
  bool tie_break = true;  // second LP: maximise the cut at y = 1/2 on the optimal face
};

ScenarioCut build_and_solve_disjunctive_lp(const std::vector<NodeCut>& node_cuts, const Mat& F, const Vec& a,
                                           const Vec& y_k, const DisjunctiveOptions& opts = {});

AggregatedCut aggregate(const std::vector<ScenarioCut>& cuts, const Vec& p);

// True if (f, h) lies within tol (inf-norm) of an existing cut.
bool is_duplicate(const AggregatedCut& c, const std::vector<AggregatedCut>& existing, double tol = 1e-9);

struct CutLedgerEntry {
  int iteration = 0;
  int scenario = 0;
  ScenarioCut cut;
  std::vector<NodeCut> leaves;
};

nlohmann::json cut_ledger_json(const std::vector<CutLedgerEntry>& ledger);

}  // namespace dr2s
