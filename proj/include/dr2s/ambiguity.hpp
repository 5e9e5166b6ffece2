#pragma once

#include <vector>

#include "dr2s/model.hpp"

namespace dr2s {

struct WorstCaseResult {
  Vec p;
  double value = 0.0;
  std::vector<int> active;  // scenarios whose probability moved away from p0, or sits at zero
};

struct WorstCaseOptions {
  double tol = 1e-11;
  // Among maximisers prefer mass on lower scenario indices (second LP).
  bool tie_break = true;
};

// max_{p in set} sum_w p_w values_w
WorstCaseResult worst_case_distribution(const Vec& values, const AmbiguitySet& set, const WorstCaseOptions& opts = {});

// Membership with tolerance: simplex, TV radius, polyhedral rows.
bool in_ambiguity_set(const Vec& p, const AmbiguitySet& set, double tol = 1e-8);

}  // namespace dr2s
