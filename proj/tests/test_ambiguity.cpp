#include <doctest.h>

#include <random>

#include "dr2s/ambiguity.hpp"
#include "oracles.hpp"

using namespace dr2s;

namespace {

AmbiguitySet tv(const Vec& p0, double d) {
  AmbiguitySet s;
  s.kind = AmbiguityKind::total_variation;
  s.p0 = p0;
  s.radius = d;
  return s;
}

}  // namespace

TEST_CASE("illustrative instance worst case") {
  const WorstCaseResult r = worst_case_distribution(Vec{{1.0, 1.5, 1.2, 1.0}}, tv(Vec::Constant(4, 0.25), 0.1));
  CHECK((r.p - Vec{{0.25, 0.3, 0.25, 0.2}}).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(r.value == doctest::Approx(0.25 + 0.45 + 0.3 + 0.2));
}

TEST_CASE("TV worst case matches vertex enumeration") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 200; ++k) {
    const int N = 1 + k % 5;
    Vec p0(N), v(N);
    for (int w = 0; w < N; ++w) {
      p0[w] = 0.1 + u(rng);
      v[w] = k % 3 == 0 ? std::floor(4.0 * u(rng)) : 10.0 * u(rng) - 5.0;  // ties every third vector
    }
    p0 /= p0.sum();
    const AmbiguitySet set = tv(p0, 2.0 * u(rng));
    const WorstCaseResult r = worst_case_distribution(v, set);
    CAPTURE(k);
    CHECK(r.value == doctest::Approx(oracle::tv_worst_case_by_vertices(v, p0, set.radius)).epsilon(1e-9).scale(1.0));
    CHECK(in_ambiguity_set(r.p, set, 1e-9));
    CHECK(r.p.dot(v) == doctest::Approx(r.value).epsilon(1e-12).scale(1.0));
  }
}

TEST_CASE("singleton and zero radius return the nominal distribution") {
  const Vec p0{{0.1, 0.2, 0.7}}, v{{3.0, -1.0, 2.0}};
  AmbiguitySet s;
  s.p0 = p0;
  const WorstCaseResult a = worst_case_distribution(v, s);
  CHECK((a.p - p0).cwiseAbs().maxCoeff() == 0.0);
  CHECK(a.value == doctest::Approx(p0.dot(v)));
  const WorstCaseResult b = worst_case_distribution(v, tv(p0, 0.0));
  CHECK((b.p - p0).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("radius 2 puts all mass on the largest value") {
  const WorstCaseResult r = worst_case_distribution(Vec{{1.0, 4.0, 2.0}}, tv(Vec{{0.5, 0.25, 0.25}}, 2.0));
  CHECK(r.value == doctest::Approx(4.0));
  CHECK(r.p[1] == doctest::Approx(1.0));
}

TEST_CASE("polyhedral set") {
  AmbiguitySet s;
  s.kind = AmbiguityKind::polyhedral;
  s.p0 = Vec{{0.5, 0.5}};
  s.C = Mat{{1.0, 0.0}};  // p1 >= 0.3
  s.rhs = Vec{{0.3}};
  const WorstCaseResult r = worst_case_distribution(Vec{{0.0, 1.0}}, s);
  CHECK(r.p[0] == doctest::Approx(0.3).epsilon(1e-8));
  CHECK(r.value == doctest::Approx(0.7).epsilon(1e-8));
  CHECK(in_ambiguity_set(r.p, s));
  CHECK_FALSE(in_ambiguity_set(Vec{{0.2, 0.8}}, s));
}

TEST_CASE("membership") {
  const AmbiguitySet s = tv(Vec::Constant(4, 0.25), 0.1);
  CHECK(in_ambiguity_set(Vec{{0.25, 0.3, 0.25, 0.2}}, s));
  CHECK_FALSE(in_ambiguity_set(Vec{{0.25, 0.35, 0.25, 0.15}}, s));
  CHECK_FALSE(in_ambiguity_set(Vec{{0.25, 0.25, 0.25, 0.2}}, s));  // sum != 1
  CHECK_FALSE(in_ambiguity_set(Vec{{0.3, 0.3, 0.45, -0.05}}, tv(Vec::Constant(4, 0.25), 2.0)));
  CHECK_FALSE(in_ambiguity_set(Vec{{0.5, 0.5}}, s));  // wrong length
}
