#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "dr2s/driver.hpp"
#include "dr2s/error.hpp"
#include "dr2s/generators.hpp"
#include "oracles.hpp"

using namespace dr2s;

namespace {

void check_invariants(const RunResult& r) {
  double prevL = -INFINITY, prevU = INFINITY;
  for (const auto& t : r.trace) {
    CHECK(t.L >= prevL - 1e-7 * (1.0 + std::fabs(prevL)));
    CHECK(t.U <= prevU + 1e-12);
    CHECK(t.L <= t.U + 1e-6 * (1.0 + std::fabs(t.U)));
    prevL = t.L;
    prevU = t.U;
  }
  REQUIRE(!r.trace.empty());
  if (r.status == RunStatus::optimal) CHECK(r.trace.back().terminal);
}

SolveOptions one_thread() {
  SolveOptions o;
  o.threads = 1;
  return o;
}

}  // namespace

TEST_CASE("illustrative instance solves to the brute-force optimum") {
  const Instance inst = gen_illustrative();
  const RunResult r = run(inst, one_thread());
  REQUIRE(r.status == RunStatus::optimal);
  const oracle::BruteForce bf = oracle::dro_brute_force(inst);
  CHECK(r.objective == doctest::Approx(bf.objective).epsilon(1e-6));
  CHECK(r.y_star == bf.y);
  CHECK(r.iterations == 2);
  // iteration 1 runs at the given start point without a master solve
  CHECK(r.trace[0].y == std::vector<int>{1, 1});
  CHECK(std::isnan(r.trace[0].eta));
  CHECK(r.trace[0].U == doctest::Approx(23.2).epsilon(1e-7));
  check_invariants(r);
}

TEST_CASE("random instances match brute force and keep the bound invariants") {
  std::mt19937_64 rng(77);
  for (int k = 0; k < 12; ++k) {
    oracle::RandomSpec spec;
    spec.d_tv = k % 2 ? 0.2 : 0.0;
    const Instance inst = oracle::random_instance(rng, spec);
    const RunResult r = run(inst, one_thread());
    REQUIRE(r.status == RunStatus::optimal);
    const oracle::BruteForce bf = oracle::dro_brute_force(inst);
    CAPTURE(k);
    CHECK(r.objective == doctest::Approx(bf.objective).epsilon(1e-6).scale(1.0));
    CHECK(r.U - r.L <= 1e-6 * (1.0 + std::fabs(r.U)) + 1e-12);
    check_invariants(r);
  }
}

TEST_CASE("master modes agree") {
  std::mt19937_64 rng(4);
  for (int k = 0; k < 6; ++k) {
    oracle::RandomSpec spec;
    spec.d_tv = 0.1;
    const Instance inst = oracle::random_instance(rng, spec);
    SolveOptions a = one_thread(), b = one_thread();
    a.master_mode = MasterMode::enumerate;
    b.master_mode = MasterMode::branch_and_cut;
    const RunResult ra = run(inst, a), rb = run(inst, b);
    CHECK(ra.objective == doctest::Approx(rb.objective).epsilon(1e-6).scale(1.0));
  }
  CHECK(resolve_master_mode(MasterMode::automatic, 16) == MasterMode::enumerate);
  CHECK(resolve_master_mode(MasterMode::automatic, 17) == MasterMode::branch_and_cut);
  CHECK(resolve_master_mode(MasterMode::enumerate, 30) == MasterMode::enumerate);
}

TEST_CASE("thread count does not change the result") {
  RflParams rp;
  rp.sites = 3;
  rp.scenarios = 6;
  const Instance inst = gen_rfl(rp);
  SolveOptions a = one_thread(), b = one_thread();
  b.threads = 4;
  const RunResult ra = run(inst, a), rb = run(inst, b);
  REQUIRE(ra.trace.size() == rb.trace.size());
  CHECK(ra.objective == rb.objective);
  CHECK(ra.y_star == rb.y_star);
  for (std::size_t i = 0; i < ra.trace.size(); ++i) {
    CHECK(ra.trace[i].y == rb.trace[i].y);
    CHECK(ra.trace[i].L == rb.trace[i].L);
    CHECK(ra.trace[i].U == rb.trace[i].U);
  }
  REQUIRE(ra.cuts.size() == rb.cuts.size());
  for (std::size_t i = 0; i < ra.cuts.size(); ++i) CHECK((ra.cuts[i].f - rb.cuts[i].f).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("partial subsolves still converge") {
  RflParams rp;
  rp.sites = 3;
  rp.scenarios = 3;
  const Instance inst = gen_rfl(rp);
  const RunResult exact = run(inst, one_thread());
  SolveOptions o = one_thread();
  o.partial_subsolve_iters = 3;
  o.partial_node_limit = 1;
  const RunResult part = run(inst, o);
  REQUIRE(part.status == RunStatus::optimal);
  CHECK(part.objective == doctest::Approx(exact.objective).epsilon(1e-6));
  bool saw_partial = false;
  for (const auto& t : part.trace) saw_partial = saw_partial || t.partial;
  CHECK(saw_partial);
  CHECK_FALSE(part.trace.back().partial);
}

TEST_CASE("explicit initial point and epsilon") {
  const Instance inst = gen_illustrative();
  SolveOptions o = one_thread();
  o.initial_y = std::vector<int>{0, 1};
  o.epsilon = 1e-4;
  const RunResult r = run(inst, o);
  REQUIRE(r.status == RunStatus::optimal);
  CHECK(r.trace[0].y == std::vector<int>{0, 1});
  CHECK(r.objective == doctest::Approx(oracle::dro_brute_force(inst).objective).epsilon(1e-4));
}

TEST_CASE("iteration limit reports a gap-limited run") {
  RflParams rp;
  rp.sites = 3;
  const Instance inst = gen_rfl(rp);
  SolveOptions o = one_thread();
  o.max_iters = 1;
  const RunResult r = run(inst, o);
  CHECK(r.status == RunStatus::gap_limit);
  CHECK(r.trace.size() == 2);
  CHECK(r.trace.back().terminal);
  CHECK(r.L <= r.U);
}

TEST_CASE("infeasible first stage") {
  Instance inst = gen_illustrative();
  inst.initial_y.reset();
  inst.first_stage.a = Vec{{3.0}};
  bool thrown = false;
  try {
    run(inst, one_thread());
  } catch (const Error& e) {
    thrown = e.code() == ErrorCode::infeasible;
  }
  CHECK(thrown);
}

TEST_CASE("master guard and enumeration") {
  const Instance inst = gen_illustrative();
  CHECK(eta_guard(inst) > 0.0);
  const auto feas = enumerate_feasible(inst.first_stage);
  CHECK(feas.size() == 3);
  CHECK(feas == oracle::feasible_first_stage(inst.first_stage));
}

TEST_CASE("trace and report JSON") {
  const RunResult r = run(gen_illustrative(), one_thread());
  const nlohmann::json first = trace_record_json(r.trace.front());
  CHECK(first.contains("p"));
  CHECK(first.contains("cut"));
  CHECK(first["eta"].is_null());
  const nlohmann::json last = trace_record_json(r.trace.back());
  CHECK(last["terminal"] == true);
  CHECK_FALSE(last.contains("cut"));
  const nlohmann::json rep = report_json(r);
  CHECK(rep["status"] == "optimal");
  CHECK(rep["iterations"] == 2);
  CHECK(rep.contains("masT"));
  CHECK(rep.contains("scenT"));
  const std::string jl = trace_jsonl(r);
  CHECK(std::count(jl.begin(), jl.end(), '\n') == static_cast<long>(r.trace.size()));
}
