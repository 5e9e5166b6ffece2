#pragma once

#include <cstdint>
#include <json.hpp>

#include "dr2s/misocp.hpp"
#include "dr2s/model.hpp"

namespace dr2s {

// Four-scenario toy with two facilities.
Instance gen_illustrative();

struct RflParams {
  int sites = 3;
  int budget = 2;
  int scenarios = 5;
  std::uint64_t seed = 1;
  double d_tv = 0.1;
  double square_side = 15.0;
  double effective_distance = 5.0;
  double gamma = 0.2;
  double b_coef = 0.2;
  double demand_lo = 40.0, demand_hi = 60.0;
  double capacity_lo = 100.0, capacity_hi = 180.0;
  double a_scale = 0.3;
  double beta_self = 10.0;
};

// Per-pair variable layout of a generated facility-location scenario.
struct RflLayout {
  int sites = 0;
  int s(int i, int j) const { return i * sites + j; }
  int x(int i, int j) const { return sites * sites + i * sites + j; }
  int pair_base(int i, int j) const { return 2 * sites * sites + (i * sites + j) * (2 + 2 * sites); }
  int u1(int i, int j) const { return pair_base(i, j); }
  int u2(int i, int j) const { return pair_base(i, j) + 1; }
  int v1(int i, int j, int k) const { return pair_base(i, j) + 2 + k; }
  int v2(int i, int j, int k) const { return pair_base(i, j) + 2 + sites + k; }
  int num_vars() const { return 2 * sites * sites + sites * sites * (2 + 2 * sites); }
};

// Randomness exposed for tests; regenerated deterministically from params.
struct RflData {
  std::vector<Vec> coords;
  Vec capacity;
  std::vector<Vec> demand;          // per scenario
  std::vector<std::vector<int>> effective;  // F_i
  std::vector<Mat> sigma, a_mat;    // per pair i * sites + j
  std::vector<Mat> sigma_half, a_inv_half;
  std::vector<Vec> beta;
};

RflData rfl_data(const RflParams& p);
Instance gen_rfl(const RflParams& p);

// Deterministic equivalent; requires a singleton (or radius-0 TV) ambiguity set.
// Variables: y, then x^w for each scenario in order.
MiConeProgram build_extensive_form(const Instance& inst);
nlohmann::json extensive_form_json(const MiConeProgram& p);

}  // namespace dr2s
