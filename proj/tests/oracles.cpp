#include "oracles.hpp"

#include <Eigen/LU>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "dr2s/misocp.hpp"

namespace oracle {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Calls f on every k-subset of {0..m-1}.
void for_each_subset(int m, int k, const std::function<void(const std::vector<int>&)>& f) {
  std::vector<int> idx(k);
  for (int i = 0; i < k; ++i) idx[i] = i;
  if (k > m) return;
  while (true) {
    f(idx);
    int i = k - 1;
    while (i >= 0 && idx[i] == m - k + i) --i;
    if (i < 0) return;
    ++idx[i];
    for (int j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }
}

double uni(std::mt19937_64& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }
int uni_int(std::mt19937_64& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

}  // namespace

void for_each_lattice_point(const std::vector<int>& lo, const std::vector<int>& hi,
                            const std::function<void(const std::vector<int>&)>& f) {
  const std::size_t n = lo.size();
  for (std::size_t i = 0; i < n; ++i)
    if (lo[i] > hi[i]) return;
  std::vector<int> x = lo;
  while (true) {
    f(x);
    std::size_t i = 0;
    while (i < n && x[i] == hi[i]) {
      x[i] = lo[i];
      ++i;
    }
    if (i == n) return;
    ++x[i];
  }
}

double lp_by_vertices(const Vec& c, const Mat& A, const Vec& b, Vec* argmin) {
  const int n = static_cast<int>(c.size()), m = static_cast<int>(A.rows());
  double best = kInf;
  for_each_subset(m, n, [&](const std::vector<int>& rows) {
    Mat M(n, n);
    Vec r(n);
    for (int i = 0; i < n; ++i) {
      M.row(i) = A.row(rows[i]);
      r[i] = b[rows[i]];
    }
    Eigen::FullPivLU<Mat> lu(M);
    if (lu.rank() < n) return;
    const Vec x = lu.solve(r);
    if (((A * x - b).array() < -1e-9 * (1.0 + b.cwiseAbs().maxCoeff())).any()) return;
    const double v = c.dot(x);
    if (v < best) {
      best = v;
      if (argmin) *argmin = x;
    }
  });
  return best;
}

double recourse_by_lattice(const dr2s::ScenarioData& sc, const Vec& y) {
  std::vector<int> lo(sc.l1), hi(sc.l1);
  for (int j = 0; j < sc.l1; ++j) {
    lo[j] = static_cast<int>(std::ceil(sc.zL[j] - 1e-9));
    hi[j] = static_cast<int>(std::floor(sc.zU[j] + 1e-9));
  }
  double best = kInf;
  for_each_lattice_point(lo, hi, [&](const std::vector<int>& xi) {
    dr2s::NodeBox box = dr2s::root_box(sc);
    for (int j = 0; j < sc.l1; ++j) box.zL[j] = box.zU[j] = xi[j];
    const dr2s::ConeProgram p = dr2s::scenario_relaxation(sc, y, box);
    dr2s::ConicSolution s = dr2s::solve_conic(p);
    if (s.status == dr2s::ConicStatus::infeasible) return;
    if (s.status != dr2s::ConicStatus::optimal && !dr2s::check_strong_duality(p, s, 1e-6).passed)
      throw std::runtime_error("lattice oracle: conic solve failed: " + s.message);
    best = std::min(best, s.obj);
  });
  return best;
}

double tv_worst_case_by_vertices(const Vec& values, const Vec& p0, double d, Vec* argmax) {
  const int N = static_cast<int>(values.size());
  // rows a'p <= beta
  std::vector<Vec> rows;
  std::vector<double> rhs;
  for (int w = 0; w < N; ++w) {
    rows.push_back(-Vec::Unit(N, w));
    rhs.push_back(0.0);
  }
  for (int mask = 0; mask < (1 << N); ++mask) {
    Vec s(N);
    for (int w = 0; w < N; ++w) s[w] = (mask >> w) & 1 ? 1.0 : -1.0;
    rows.push_back(s);
    rhs.push_back(d + s.dot(p0));
  }
  auto feasible = [&](const Vec& p) {
    if (std::fabs(p.sum() - 1.0) > 1e-12) return false;
    for (std::size_t r = 0; r < rows.size(); ++r)
      if (rows[r].dot(p) > rhs[r] + 1e-12) return false;
    return true;
  };
  double best = -kInf;
  for_each_subset(static_cast<int>(rows.size()), N - 1, [&](const std::vector<int>& act) {
    Mat M(N, N);
    Vec r(N);
    M.row(0) = Vec::Ones(N).transpose();
    r[0] = 1.0;
    for (int i = 0; i < N - 1; ++i) {
      M.row(i + 1) = rows[act[i]].transpose();
      r[i + 1] = rhs[act[i]];
    }
    Eigen::FullPivLU<Mat> lu(M);
    if (lu.rank() < N) return;
    const Vec p = lu.solve(r);
    if (!feasible(p)) return;
    const double v = p.dot(values);
    if (v > best) {
      best = v;
      if (argmax) *argmax = p;
    }
  });
  return best;
}

std::vector<std::vector<int>> feasible_first_stage(const dr2s::FirstStage& fs) {
  std::vector<std::vector<int>> out;
  const int n = fs.n();
  for (int m = 0; m < (1 << n); ++m) {
    std::vector<int> y(n);
    Vec yv(n);
    for (int j = 0; j < n; ++j) yv[j] = y[j] = (m >> j) & 1;
    bool ok = fs.F.rows() == 0 || ((fs.F * yv - fs.a).array() >= -1e-9).all();
    for (const auto& s : fs.soc_constraints) ok = ok && (s.f * yv + s.g).norm() <= s.h.dot(yv) + s.e + 1e-9;
    if (ok) out.push_back(y);
  }
  return out;
}

BruteForce dro_brute_force(const Instance& inst) {
  BruteForce bf;
  bf.objective = kInf;
  bf.feasible = feasible_first_stage(inst.first_stage);
  const auto& amb = inst.ambiguity;
  for (const auto& y : bf.feasible) {
    Vec yv(static_cast<Eigen::Index>(y.size()));
    for (std::size_t j = 0; j < y.size(); ++j) yv[static_cast<Eigen::Index>(j)] = y[j];
    Vec Q(static_cast<Eigen::Index>(inst.scenarios.size()));
    for (std::size_t w = 0; w < inst.scenarios.size(); ++w)
      Q[static_cast<Eigen::Index>(w)] = recourse_by_lattice(inst.scenarios[w], yv);
    double g;
    if (amb.kind == dr2s::AmbiguityKind::singleton || amb.radius == 0.0) g = amb.p0.dot(Q);
    else if (amb.kind == dr2s::AmbiguityKind::total_variation) g = tv_worst_case_by_vertices(Q, amb.p0, amb.radius);
    else throw std::runtime_error("brute force supports singleton and TV sets only");
    const double obj = inst.first_stage.c.dot(yv) + g;
    bf.Q.push_back(Q);
    if (obj < bf.objective) {
      bf.objective = obj;
      bf.y = y;
    }
  }
  return bf;
}

Instance random_instance(std::mt19937_64& rng, const RandomSpec& spec) {
  Instance inst;
  inst.name = "random";
  const int n = uni_int(rng, 1, spec.max_n);
  const int N = uni_int(rng, 1, spec.max_scenarios);
  auto& fs = inst.first_stage;
  fs.c = Vec(n);
  for (int j = 0; j < n; ++j) fs.c[j] = uni(rng, -1.0, 3.0);
  // one covering-type row satisfied by a random binary point
  std::vector<int> ybar(n);
  for (int j = 0; j < n; ++j) ybar[j] = uni_int(rng, 0, 1);
  fs.F = Mat(1, n);
  double fy = 0.0;
  for (int j = 0; j < n; ++j) {
    fs.F(0, j) = uni(rng, -1.0, 2.0);
    fy += fs.F(0, j) * ybar[j];
  }
  fs.a = Vec{{fy - uni(rng, 0.0, 0.5)}};

  const int l1 = uni_int(rng, 0, spec.max_l1);
  const int l2 = uni_int(rng, 1, spec.max_l2);
  const int nv = l1 + l2;
  const int slack = nv - 1;  // last continuous variable: penalised, covers every linear row
  for (int w = 0; w < N; ++w) {
    dr2s::ScenarioData sc;
    sc.l1 = l1;
    sc.l2 = l2;
    sc.zL = Vec(nv);
    sc.zU = Vec(nv);
    for (int k = 0; k < l1; ++k) {
      sc.zL[k] = 0.0;
      sc.zU[k] = uni_int(rng, 1, 2);
    }
    for (int k = l1; k < slack; ++k) {
      sc.zL[k] = -uni(rng, 0.0, 1.0);
      sc.zU[k] = uni(rng, 1.0, 3.0);
    }
    sc.q = Vec(nv);
    for (int k = 0; k < slack; ++k) sc.q[k] = uni(rng, -1.0, 2.0);
    sc.q[slack] = uni(rng, 1.0, 3.0);
    const int m = uni_int(rng, 1, 3);
    sc.W = Mat::Zero(m, nv);
    sc.T = Mat(m, n);
    sc.r = Vec(m);
    double slack_bound = 1.0;
    for (int i = 0; i < m; ++i) {
      double need = 1.0;
      for (int k = 0; k < slack; ++k) {
        sc.W(i, k) = uni(rng, -1.0, 1.0);
        need += std::fabs(sc.W(i, k)) * std::max(std::fabs(sc.zL[k]), std::fabs(sc.zU[k]));
      }
      sc.W(i, slack) = 1.0;
      for (int j = 0; j < n; ++j) {
        sc.T(i, j) = uni(rng, -1.5, 1.5);
        need += std::fabs(sc.T(i, j));
      }
      sc.r[i] = uni(rng, -0.5, 1.5);
      slack_bound = std::max(slack_bound, need + std::fabs(sc.r[i]));
    }
    sc.zL[slack] = 0.0;
    sc.zU[slack] = slack_bound;
    // reference point for the cone rows: midpoint of the non-slack continuous box
    Vec xc = Vec::Zero(nv);
    for (int k = l1; k < slack; ++k) xc[k] = 0.5 * (sc.zL[k] + sc.zU[k]);
    if (spec.soc && uni_int(rng, 0, 2) > 0) {
      const int k = uni_int(rng, 1, 2);
      dr2s::SocBlock b;
      b.A = Mat::Zero(k, nv);
      b.B = Mat(k, n);
      b.b = Vec(k);
      b.g = Vec::Zero(nv);
      for (int r = 0; r < k; ++r) {
        for (int c = 0; c < slack; ++c) b.A(r, c) = uni(rng, -1.0, 1.0);
        for (int c = 0; c < n; ++c) b.B(r, c) = uni(rng, -1.0, 1.0);
        b.b[r] = uni(rng, -0.5, 0.5);
      }
      for (int c = l1; c < slack; ++c) b.g[c] = uni(rng, 0.0, 0.5);
      // d large enough for x = xc (any integer part) and any y, with margin
      double bound = (b.A * xc + b.b).norm();
      for (int c = 0; c < l1; ++c) bound += b.A.col(c).norm() * sc.zU[c];
      for (int c = 0; c < n; ++c) bound += b.B.col(c).norm();
      b.d = bound - b.g.dot(xc) + uni(rng, 0.1, 0.5);
      sc.soc_blocks.push_back(std::move(b));
    }
    inst.scenarios.push_back(std::move(sc));
  }
  auto& a = inst.ambiguity;
  a.p0 = Vec(N);
  for (int w = 0; w < N; ++w) a.p0[w] = uni(rng, 0.5, 1.5);
  a.p0 /= a.p0.sum();
  a.kind = spec.d_tv > 0.0 ? dr2s::AmbiguityKind::total_variation : dr2s::AmbiguityKind::singleton;
  a.radius = spec.d_tv;
  return inst;
}

}  // namespace oracle
