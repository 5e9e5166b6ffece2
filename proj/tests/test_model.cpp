#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "dr2s/error.hpp"
#include "dr2s/generators.hpp"
#include "dr2s/model.hpp"
#include "oracles.hpp"

using namespace dr2s;

namespace {

bool has_fatal(const ValidationReport& r, const std::string& code) {
  for (const auto& f : r.findings)
    if (f.severity == Severity::fatal && f.code == code) return true;
  return false;
}

Instance small_random(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  oracle::RandomSpec spec;
  spec.d_tv = 0.1;
  return oracle::random_instance(rng, spec);
}

}  // namespace

TEST_CASE("illustrative instance validates cleanly") {
  const ValidationReport r = validate(gen_illustrative());
  CHECK(r.ok());
  CHECK(r.count(Severity::fatal) == 0);
  CHECK(r.count(Severity::warning) == 0);
  CHECK_NOTHROW(require_valid(gen_illustrative()));
}

TEST_CASE("infinite upper bound is fatal") {
  Instance inst = gen_illustrative();
  inst.scenarios[2].zU[1] = std::numeric_limits<double>::infinity();
  const ValidationReport r = validate_structure(inst);
  CHECK_FALSE(r.ok());
  CHECK(has_fatal(r, "unbounded-variable"));
  CHECK_THROWS_AS(require_valid(inst), Error);
}

TEST_CASE("nominal distribution must sum to one") {
  Instance inst = gen_illustrative();
  inst.ambiguity.p0[0] = 0.3;
  CHECK(has_fatal(validate_structure(inst), "nominal-not-distribution"));
  inst.ambiguity.p0 = Vec{{0.5, 0.5, 0.5, -0.5}};
  CHECK(has_fatal(validate_structure(inst), "nominal-not-distribution"));
}

TEST_CASE("other structural findings") {
  Instance inst = gen_illustrative();
  SUBCASE("radius outside [0, 2]") {
    inst.ambiguity.radius = 2.5;
    CHECK(has_fatal(validate_structure(inst), "radius-range"));
  }
  SUBCASE("bounds out of order") {
    inst.scenarios[0].zL[1] = 2.0;
    CHECK(has_fatal(validate_structure(inst), "bounds-order"));
  }
  SUBCASE("wrong T width") {
    inst.scenarios[1].T = Mat::Zero(1, 3);
    CHECK(has_fatal(validate_structure(inst), "dimension"));
  }
  SUBCASE("NaN in cost") {
    inst.scenarios[3].q[0] = std::nan("");
    CHECK(has_fatal(validate_structure(inst), "non-finite"));
  }
  SUBCASE("scenario count mismatch") {
    inst.ambiguity.p0 = Vec::Constant(3, 1.0 / 3.0);
    CHECK(has_fatal(validate_structure(inst), "scenario-count"));
  }
  SUBCASE("empty first stage") {
    inst.initial_y.reset();
    inst.first_stage.F = Mat{{1.0, 1.0}};
    inst.first_stage.a = Vec{{3.0}};
    CHECK(has_fatal(validate(inst), "first-stage-infeasible"));
  }
  SUBCASE("initial point of the wrong length") {
    inst.initial_y = std::vector<int>{1};
    CHECK(has_fatal(validate_structure(inst), "initial-y"));
  }
}

TEST_CASE("property: any single corrupted field gives a fatal finding") {
  std::mt19937_64 rng(2024);
  for (int k = 0; k < 60; ++k) {
    Instance inst = small_random(1000 + k);
    REQUIRE(validate_structure(inst).ok());
    const int w = static_cast<int>(rng() % inst.scenarios.size());
    ScenarioData& sc = inst.scenarios[w];
    const int nv = sc.num_vars();
    const int j = static_cast<int>(rng() % nv);
    switch (k % 8) {
      case 0: sc.zU[j] = std::numeric_limits<double>::infinity(); break;
      case 1: sc.zL[j] = -std::numeric_limits<double>::infinity(); break;
      case 2: sc.zL[j] = sc.zU[j] + 1.0; break;
      case 3: sc.q[j] = std::nan(""); break;
      case 4: sc.r.conservativeResize(sc.r.size() + 1); sc.r[sc.r.size() - 1] = 0.0; break;
      case 5: inst.ambiguity.p0[0] += 0.01; break;
      case 6: inst.ambiguity.radius = -0.1; break;
      case 7: inst.first_stage.c.conservativeResize(inst.first_stage.n() + 1); inst.first_stage.c.tail(1).setZero(); break;
    }
    CAPTURE(k);
    CHECK_FALSE(validate_structure(inst).ok());
  }
}

TEST_CASE("JSON round trip is byte-identical") {
  for (int k = 0; k < 20; ++k) {
    const Instance inst = small_random(50 + k);
    const std::string once = json_io::to_json(inst);
    const std::string twice = json_io::to_json(json_io::from_json(once));
    CHECK(once == twice);
  }
  RflParams rp;
  rp.sites = 3;
  const std::string r1 = json_io::to_json(gen_rfl(rp));
  CHECK(json_io::to_json(json_io::from_json(r1)) == r1);
  const std::string ill = json_io::to_json(gen_illustrative());
  const Instance back = json_io::from_json(ill);
  REQUIRE(back.initial_y.has_value());
  CHECK(*back.initial_y == std::vector<int>{1, 1});
}

TEST_CASE("JSON keeps infinite bounds and rejects garbage") {
  Instance inst = gen_illustrative();
  inst.first_stage.soc_constraints.clear();
  inst.scenarios[0].zL[1] = -std::numeric_limits<double>::infinity();
  const Instance back = json_io::from_json(json_io::to_json(inst));
  CHECK(std::isinf(back.scenarios[0].zL[1]));
  CHECK(back.scenarios[0].zL[1] < 0.0);
  CHECK_THROWS_AS(json_io::from_json("{not json"), Error);
  CHECK_THROWS_AS(json_io::from_json("{\"format\": 1}"), Error);
}

TEST_CASE("slack augmentation") {
  Instance inst;
  inst.first_stage.c = Vec{{0.0}};
  ScenarioData sc;
  sc.l1 = 0;
  sc.l2 = 1;
  sc.q = Vec{{1.0}};
  sc.W = Mat{{1.0}};
  sc.T = Mat{{-1.0}};
  sc.r = Vec{{2.0}};  // x >= 2 + y with x <= 1: never feasible
  sc.zL = Vec{{0.0}};
  sc.zU = Vec{{1.0}};
  inst.scenarios.push_back(sc);
  inst.ambiguity.p0 = Vec{{1.0}};

  CHECK(std::isinf(oracle::recourse_by_lattice(inst.scenarios[0], Vec{{0.0}})));
  const Instance aug = augment_with_slacks(inst, 10.0);
  const ScenarioData& a = aug.scenarios[0];
  CHECK(a.num_vars() == 2);
  CHECK(a.l2 == 2);
  CHECK(a.W(0, 1) == 1.0);
  CHECK(a.q[1] == 10.0);
  CHECK(a.zL[1] == 0.0);
  CHECK(a.zU[1] >= 3.0);
  CHECK(oracle::recourse_by_lattice(a, Vec{{0.0}}) == doctest::Approx(11.0).epsilon(1e-7));
  CHECK(oracle::recourse_by_lattice(a, Vec{{1.0}}) == doctest::Approx(21.0).epsilon(1e-7));
  CHECK_THROWS_AS(augment_with_slacks(inst, 0.0), Error);
  CHECK_THROWS_AS(augment_with_slacks(inst, -1.0), Error);

  // cone rows are padded with zero columns
  const Instance ill = augment_with_slacks(gen_illustrative(), 5.0);
  CHECK(ill.scenarios[0].soc_blocks[0].A.cols() == 3);
  CHECK(ill.scenarios[0].soc_blocks[0].A.col(2).isZero());
  CHECK(ill.scenarios[0].soc_blocks[0].g[2] == 0.0);
}

TEST_CASE("first-stage feasibility") {
  const FirstStage fs = gen_illustrative().first_stage;
  CHECK_FALSE(first_stage_feasible(fs, {0, 0}));
  CHECK(first_stage_feasible(fs, {1, 0}));
  CHECK(first_stage_feasible(fs, {1, 1}));
}
