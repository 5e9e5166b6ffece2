#pragma once

// Independent reference computations used by the unit and acceptance tests.

#include <functional>
#include <random>
#include <vector>

#include "dr2s/conic.hpp"
#include "dr2s/model.hpp"

namespace oracle {

using dr2s::Instance;
using dr2s::Mat;
using dr2s::Vec;

// Every integer point of the box lo <= x <= hi restricted to the listed coordinates.
void for_each_lattice_point(const std::vector<int>& lo, const std::vector<int>& hi,
                            const std::function<void(const std::vector<int>&)>& f);

// min c'x s.t. A x >= b by enumerating every basis (tiny dense LPs only). +inf if infeasible.
double lp_by_vertices(const Vec& c, const Mat& A, const Vec& b, Vec* argmin = nullptr);

// Q(y, w) by fixing every integer assignment and solving the continuous conic program.
double recourse_by_lattice(const dr2s::ScenarioData& sc, const Vec& y);

// max over the TV ball of p'values, by enumerating vertices of {p >= 0, 1'p = 1, sum|p - p0| <= d}.
double tv_worst_case_by_vertices(const Vec& values, const Vec& p0, double d, Vec* argmax = nullptr);

// min over feasible binary y of c'y + max_p E_p Q(y, .)
struct BruteForce {
  double objective = 0.0;
  std::vector<int> y;
  std::vector<std::vector<int>> feasible;
  std::vector<Vec> Q;  // per feasible y
};
BruteForce dro_brute_force(const Instance& inst);

// All feasible binary first-stage points (lexicographic in the bit order y_j = (m >> j) & 1).
std::vector<std::vector<int>> feasible_first_stage(const dr2s::FirstStage& fs);

struct RandomSpec {
  int max_n = 5;
  int max_scenarios = 4;
  int max_l1 = 2;
  int max_l2 = 3;
  double d_tv = 0.0;
  bool soc = true;
};
// Random instance whose node relaxations stay feasible for every y and every integer box.
Instance random_instance(std::mt19937_64& rng, const RandomSpec& spec);

}  // namespace oracle
