#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "dr2s/conic.hpp"
#include "dr2s/error.hpp"
#include "oracles.hpp"

using namespace dr2s;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

SpMat sparse(const Mat& m) { return m.sparseView(); }

// min c'x s.t. A x >= b with everything boxed in [-5, 5]; bounds given to the solver as bounds,
// and to the vertex oracle as rows.
struct RandomLp {
  Vec c;
  Mat A;
  Vec b;
};

RandomLp random_lp(std::mt19937_64& rng, int n, int m) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  RandomLp lp;
  lp.c = Vec(n);
  for (int j = 0; j < n; ++j) lp.c[j] = u(rng);
  lp.A = Mat(m, n);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) lp.A(i, j) = u(rng);
  // feasible at a random interior point
  Vec x0(n);
  for (int j = 0; j < n; ++j) x0[j] = 2.0 * u(rng);
  lp.b = lp.A * x0 - Vec::Constant(m, 0.5 + 0.5 * std::fabs(u(rng)));
  return lp;
}

}  // namespace

TEST_CASE("LP optimum matches basis enumeration") {
  std::mt19937_64 rng(11);
  for (int k = 0; k < 40; ++k) {
    const int n = 1 + k % 4, m = 1 + k % 5;
    const RandomLp lp = random_lp(rng, n, m);
    ProgramBuilder pb(n);
    pb.set_objective(lp.c);
    pb.set_bounds(Vec::Constant(n, -5.0), Vec::Constant(n, 5.0));
    for (int i = 0; i < m; ++i) {
      std::vector<std::pair<int, double>> row;
      for (int j = 0; j < n; ++j) row.emplace_back(j, lp.A(i, j));
      pb.add_ge(row, lp.b[i]);
    }
    const ConeProgram p = pb.build();
    const ConicSolution s = solve_conic(p);
    REQUIRE(s.status == ConicStatus::optimal);

    Mat Abig(m + 2 * n, n);
    Vec bbig(m + 2 * n);
    Abig << lp.A, Mat::Identity(n, n), -Mat::Identity(n, n);
    bbig << lp.b, Vec::Constant(n, -5.0), Vec::Constant(n, -5.0);
    const double want = oracle::lp_by_vertices(lp.c, Abig, bbig);
    CAPTURE(k);
    CHECK(s.obj == doctest::Approx(want).epsilon(1e-7));
    CHECK(check_strong_duality(p, s, 1e-6).passed);
  }
}

TEST_CASE("second-order cone example") {
  // min t  s.t. ||(x1, x2)|| <= t, x1 = 3, x2 = 4
  ProgramBuilder pb(3);
  pb.set_objective(Vec{{0.0, 0.0, 1.0}});
  pb.set_bound(0, 3.0, 3.0);
  pb.set_bound(1, 4.0, 4.0);
  SocRow row;
  row.A = sparse(Mat{{1.0, 0.0, 0.0}, {0.0, 1.0, 0.0}});
  row.b = Vec::Zero(2);
  row.g = Vec{{0.0, 0.0, 1.0}};
  pb.add_soc(row);
  const ConeProgram p = pb.build();
  const ConicSolution s = solve_conic(p);
  REQUIRE(s.status == ConicStatus::optimal);
  CHECK(s.obj == doctest::Approx(5.0).epsilon(1e-7));
  CHECK(s.x[2] == doctest::Approx(5.0).epsilon(1e-7));
  CHECK(check_strong_duality(p, s, 1e-6).passed);
}

TEST_CASE("SOC with free variables: projection onto a disc") {
  // min -x1 - x2  s.t. ||(x1, x2)|| <= 1: optimum -sqrt(2)
  ProgramBuilder pb(2);
  pb.set_objective(Vec{{-1.0, -1.0}});
  SocRow row;
  row.A = sparse(Mat::Identity(2, 2));
  row.b = Vec::Zero(2);
  row.g = Vec::Zero(2);
  row.d = 1.0;
  pb.add_soc(row);
  const ConeProgram p = pb.build();
  const ConicSolution s = solve_conic(p);
  REQUIRE(s.status == ConicStatus::optimal);
  CHECK(s.obj == doctest::Approx(-std::sqrt(2.0)).epsilon(1e-7));
  REQUIRE(s.duals.soc.size() == 1);
  CHECK(s.duals.soc[0].lambda == doctest::Approx(std::sqrt(2.0)).epsilon(1e-6));
}

TEST_CASE("infeasible LP yields a Farkas certificate") {
  ProgramBuilder pb(1);
  pb.set_objective(Vec{{1.0}});
  pb.add_ge({{0, 1.0}}, 2.0);
  pb.add_ge({{0, -1.0}}, -1.0);  // x <= 1
  const ConeProgram p = pb.build();
  const ConicSolution s = solve_conic(p);
  REQUIRE(s.status == ConicStatus::infeasible);
  CHECK(s.farkas_value > 0.0);
  // zero-cost Lagrangian: G'y must vanish
  const Vec resid = p.G.transpose() * s.duals.linear + s.duals.tauL - s.duals.tauU;
  CHECK(resid.cwiseAbs().maxCoeff() < 1e-6 * std::max(1.0, s.duals.linear.cwiseAbs().maxCoeff()));
  CHECK((s.duals.linear.array() >= -1e-9).all());
}

TEST_CASE("infeasible SOC yields a certificate") {
  // ||x|| <= 1 and x >= 2
  ProgramBuilder pb(1);
  pb.set_objective(Vec{{0.0}});
  pb.set_bound(0, 2.0, kInf);
  SocRow row;
  row.A = sparse(Mat{{1.0}});
  row.b = Vec::Zero(1);
  row.g = Vec::Zero(1);
  row.d = 1.0;
  pb.add_soc(row);
  const ConicSolution s = solve_conic(pb.build());
  CHECK(s.status == ConicStatus::infeasible);
}

TEST_CASE("certificate check catches tampered duals") {
  ProgramBuilder pb(2);
  pb.set_objective(Vec{{1.0, 2.0}});
  pb.set_bounds(Vec::Zero(2), Vec::Constant(2, 10.0));
  pb.add_ge({{0, 1.0}, {1, 1.0}}, 1.0, RowOrigin::recourse);
  const ConeProgram p = pb.build();
  ConicSolution s = solve_conic(p);
  REQUIRE(s.status == ConicStatus::optimal);
  CHECK(s.obj == doctest::Approx(1.0).epsilon(1e-8));
  REQUIRE(s.duals.gamma1.size() == 1);
  CHECK(s.duals.gamma1[0] == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(dual_objective(p, s.duals) == doctest::Approx(1.0).epsilon(1e-7));
  CertificateReport ok = check_strong_duality(p, s, 1e-7);
  CHECK(ok.passed);
  s.duals.linear[0] = 0.5;
  CHECK_FALSE(check_strong_duality(p, s, 1e-7).passed);
}

TEST_CASE("presolve handles a program with every variable fixed") {
  ProgramBuilder pb(2);
  pb.set_objective(Vec{{1.0, -1.0}}, 0.5);
  pb.set_bounds(Vec{{1.0, 2.0}}, Vec{{1.0, 2.0}});
  pb.add_ge({{0, 1.0}, {1, 1.0}}, 0.0);
  const ConicSolution s = solve_conic(pb.build());
  REQUIRE(s.status == ConicStatus::optimal);
  CHECK(s.obj == doctest::Approx(-0.5));
}

TEST_CASE("program validation rejects bad dimensions") {
  ConeProgram p = ConeProgram::with_vars(2);
  p.lo = Vec{{1.0, 0.0}};
  p.hi = Vec{{0.0, 1.0}};
  CHECK_THROWS_AS(p.validate(), Error);
}
