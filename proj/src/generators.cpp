#include "dr2s/generators.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <random>

#include "dr2s/error.hpp"

namespace dr2s {

Instance gen_illustrative() {
  Instance inst;
  inst.name = "illustrative";
  FirstStage& fs = inst.first_stage;
  fs.c = Vec{{10.0, 12.0}};
  fs.F = Mat{{1.0, 1.0}};
  fs.a = Vec{{1.0}};
  struct Row {
    double q1, q2, g1, g2, d;
  };
  const Row rows[4] = {{2.0, 1.0, 0.5, 1.0, 1.0}, {1.5, 1.5, 0.5, 1.0, 1.0}, {1.2, 1.5, 0.5, 1.0, 1.5}, {1.0, 1.0, 0.5, 1.5, 1.0}};
  for (const Row& r : rows) {
    ScenarioData sc;
    sc.q = Vec{{r.q1, r.q2}};
    sc.W = Mat{{1.0, 1.0}};
    sc.T = Mat{{-0.5, -0.5}};
    sc.r = Vec{{0.0}};
    SocBlock blk;
    blk.A = Mat::Identity(2, 2);
    blk.B = 0.5 * Mat::Identity(2, 2);
    blk.b = Vec::Zero(2);
    blk.g = Vec{{r.g1, r.g2}};
    blk.d = r.d;
    sc.soc_blocks.push_back(blk);
    sc.l1 = 1;
    sc.l2 = 1;
    sc.zL = Vec::Zero(2);
    sc.zU = Vec::Ones(2);
    inst.scenarios.push_back(std::move(sc));
  }
  inst.ambiguity.kind = AmbiguityKind::total_variation;
  inst.ambiguity.p0 = Vec::Constant(4, 0.25);
  inst.ambiguity.radius = 0.1;
  inst.initial_y = std::vector<int>{1, 1};
  return inst;
}

namespace {

// Independent stream per (seed, tag): splitmix64 scrambles the pair into an mt19937_64 seed.
std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

class Stream {
 public:
  Stream(std::uint64_t seed, std::uint64_t tag) : eng_(splitmix64(splitmix64(seed) ^ tag)) {}
  // 53-bit uniform on [lo, hi); std::uniform_real_distribution is not portable across libraries.
  double uniform(double lo, double hi) { return lo + (hi - lo) * static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

 private:
  std::mt19937_64 eng_;
};

Mat psd_power(const Mat& m, double power) {
  Eigen::SelfAdjointEigenSolver<Mat> es(m);
  Vec ev = es.eigenvalues().cwiseMax(1e-12);
  for (Eigen::Index i = 0; i < ev.size(); ++i) ev[i] = std::pow(ev[i], power);
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

void check_params(const RflParams& p) {
  if (p.sites < 1) throw Error(ErrorCode::input, "rfl: sites must be >= 1");
  if (p.budget < 0 || p.budget > p.sites) throw Error(ErrorCode::input, "rfl: budget must lie in [0, sites]");
  if (p.scenarios < 1) throw Error(ErrorCode::input, "rfl: scenarios must be >= 1");
  if (!(p.d_tv >= 0.0 && p.d_tv <= 2.0)) throw Error(ErrorCode::input, "rfl: dtv must lie in [0, 2]");
  if (!(p.demand_lo <= p.demand_hi) || !(p.capacity_lo <= p.capacity_hi) || !(p.square_side > 0.0) ||
      !(p.effective_distance > 0.0))
    throw Error(ErrorCode::input, "rfl: ranges must be ordered and lengths positive");
}

}  // namespace

RflData rfl_data(const RflParams& p) {
  check_params(p);
  const int S = p.sites;
  RflData d;
  Stream coord(p.seed, 1);
  d.coords.assign(S, Vec::Zero(2));
  for (int i = 0; i < S; ++i) d.coords[i] = Vec{{coord.uniform(0.0, p.square_side), coord.uniform(0.0, p.square_side)}};
  auto dist = [&](int i, int j) { return (d.coords[i] - d.coords[j]).norm(); };
  d.effective.assign(S, {});
  for (int i = 0; i < S; ++i) {
    for (int attempt = 0;; ++attempt) {
      d.effective[i].clear();
      for (int j = 0; j < S; ++j)
        if (dist(i, j) <= p.effective_distance) d.effective[i].push_back(j);
      if (!d.effective[i].empty()) break;
      if (attempt == 100) throw Error(ErrorCode::input, "rfl: empty effective set after 100 retries");
      d.coords[i] = Vec{{coord.uniform(0.0, p.square_side), coord.uniform(0.0, p.square_side)}};
    }
  }
  Stream cap(p.seed, 2);
  d.capacity.resize(S);
  for (int j = 0; j < S; ++j) d.capacity[j] = cap.uniform(p.capacity_lo, p.capacity_hi);

  const int P = S * S;
  d.sigma.resize(P);
  d.a_mat.resize(P);
  d.sigma_half.resize(P);
  d.a_inv_half.resize(P);
  d.beta.assign(P, Vec::Zero(S));
  for (int i = 0; i < S; ++i) {
    for (int j = 0; j < S; ++j) {
      const int ij = i * S + j;
      Stream st(p.seed, 100 + static_cast<std::uint64_t>(ij));
      Mat Q(S, S);
      for (int r = 0; r < S; ++r)
        for (int c = 0; c < S; ++c) Q(r, c) = st.uniform(0.0, 1.0);
      d.sigma[ij] = Q.transpose() * Q;
      d.a_mat[ij] = Mat::Identity(S, S) + p.a_scale * d.sigma[ij];
      d.sigma_half[ij] = psd_power(d.sigma[ij], 0.5);
      d.a_inv_half[ij] = psd_power(d.a_mat[ij], -0.5);
      const bool eff = dist(i, j) <= p.effective_distance;
      if (!eff) continue;
      for (int k = 0; k < S; ++k) {
        const double base = 1.0 - dist(i, k) / p.effective_distance;
        d.beta[ij][k] = k == j ? p.beta_self * (1.0 - dist(i, j) / p.effective_distance) : base;
      }
    }
  }
  d.demand.resize(p.scenarios);
  for (int w = 0; w < p.scenarios; ++w) {
    Stream st(p.seed, 1000000 + static_cast<std::uint64_t>(w));
    d.demand[w].resize(S);
    for (int i = 0; i < S; ++i) d.demand[w][i] = st.uniform(p.demand_lo, p.demand_hi);
  }
  return d;
}

// Maximisation of total utility is stored as minimisation of its negative.
// Pairs with j outside F_i have beta = 0, which forces v1 = v2 = 0 and U1 = U2 = 0;
// those variables are fixed by bounds and their SOC rows are omitted.
Instance gen_rfl(const RflParams& p) {
  const RflData d = rfl_data(p);
  const int S = p.sites;
  const RflLayout L{S};
  const int nv = L.num_vars();
  Instance inst;
  inst.name = "rfl-s" + std::to_string(S) + "-b" + std::to_string(p.budget) + "-w" + std::to_string(p.scenarios) + "-seed" +
              std::to_string(p.seed);
  FirstStage& fs = inst.first_stage;
  fs.c = Vec::Zero(S);
  fs.F = -Mat::Ones(1, S);
  fs.a = Vec{{-static_cast<double>(p.budget)}};

  const double sg = std::sqrt(p.gamma);
  for (int w = 0; w < p.scenarios; ++w) {
    ScenarioData sc;
    sc.l1 = S * S;
    sc.l2 = nv - S * S;
    sc.q = Vec::Zero(nv);
    sc.zL = Vec::Zero(nv);
    sc.zU = Vec::Zero(nv);
    std::vector<std::vector<std::pair<int, double>>> Wrows;
    std::vector<std::vector<std::pair<int, double>>> Trows;
    std::vector<double> rhs;
    auto add = [&](std::vector<std::pair<int, double>> wr, std::vector<std::pair<int, double>> tr, double r) {
      Wrows.push_back(std::move(wr));
      Trows.push_back(std::move(tr));
      rhs.push_back(r);
    };
    for (int i = 0; i < S; ++i) {
      for (int j = 0; j < S; ++j) {
        const int ij = i * S + j;
        const double R = std::min(d.demand[w][i], d.capacity[j]);
        const bool eff = d.beta[ij].cwiseAbs().sum() > 0.0;
        sc.zU[L.s(i, j)] = eff ? 1.0 : 0.0;
        sc.zU[L.x(i, j)] = R;
        const double ubound = eff ? d.beta[ij].cwiseAbs().sum() * R : 0.0;
        sc.zU[L.u1(i, j)] = ubound;
        sc.zU[L.u2(i, j)] = ubound;
        sc.q[L.u1(i, j)] = -1.0;
        sc.q[L.u2(i, j)] = -1.0;
        for (int k = 0; k < S; ++k) {
          sc.zU[L.v1(i, j, k)] = eff ? R : 0.0;
          sc.zU[L.v2(i, j, k)] = eff ? R : 0.0;
          const int a = L.v1(i, j, k), b = L.v2(i, j, k), s = L.s(i, j), x = L.x(i, j);
          add({{s, R}, {a, -1.0}}, {}, 0.0);                       // v1_k <= R s
          add({{s, -R}, {b, -1.0}}, {}, -R);                       // v2_k <= R (1 - s)
          add({{a, -1.0}, {b, -1.0}}, {{k, R}}, 0.0);              // v_k <= R y_k
          add({{x, 1.0}, {a, -1.0}, {b, -1.0}}, {}, 0.0);          // v_k <= x
          add({{a, 1.0}, {b, 1.0}, {x, -1.0}}, {{k, -R}}, -R);     // v_k >= x - R (1 - y_k)
        }
        if (!eff) continue;
        SocBlock b1;  // ||b A^{-1/2} v1|| <= beta'v1 - U1
        b1.A = Mat::Zero(S, nv);
        b1.B = Mat::Zero(S, S);
        b1.b = Vec::Zero(S);
        b1.g = Vec::Zero(nv);
        SocBlock b2 = b1;  // ||sqrt(gamma) Sigma^{1/2} v2|| <= beta'v2 - U2
        for (int k = 0; k < S; ++k) {
          for (int r = 0; r < S; ++r) {
            b1.A(r, L.v1(i, j, k)) = p.b_coef * d.a_inv_half[ij](r, k);
            b2.A(r, L.v2(i, j, k)) = sg * d.sigma_half[ij](r, k);
          }
          b1.g[L.v1(i, j, k)] = d.beta[ij][k];
          b2.g[L.v2(i, j, k)] = d.beta[ij][k];
        }
        b1.g[L.u1(i, j)] = -1.0;
        b2.g[L.u2(i, j)] = -1.0;
        sc.soc_blocks.push_back(std::move(b1));
        sc.soc_blocks.push_back(std::move(b2));
      }
    }
    for (int j = 0; j < S; ++j) {  // sum_i x_ij <= C_j y_j
      std::vector<std::pair<int, double>> wr;
      for (int i = 0; i < S; ++i) wr.emplace_back(L.x(i, j), -1.0);
      add(std::move(wr), {{j, d.capacity[j]}}, 0.0);
    }
    for (int i = 0; i < S; ++i) {  // sum_j x_ij <= D_i
      std::vector<std::pair<int, double>> wr;
      for (int j = 0; j < S; ++j) wr.emplace_back(L.x(i, j), -1.0);
      add(std::move(wr), {}, -d.demand[w][i]);
    }
    const int m = static_cast<int>(rhs.size());
    sc.W = Mat::Zero(m, nv);
    sc.T = Mat::Zero(m, S);
    sc.r.resize(m);
    for (int r = 0; r < m; ++r) {
      for (auto [c, v] : Wrows[r]) sc.W(r, c) += v;
      for (auto [c, v] : Trows[r]) sc.T(r, c) += v;
      sc.r[r] = rhs[r];
    }
    inst.scenarios.push_back(std::move(sc));
  }
  inst.ambiguity.kind = AmbiguityKind::total_variation;
  inst.ambiguity.p0 = Vec::Constant(p.scenarios, 1.0 / p.scenarios);
  inst.ambiguity.radius = p.d_tv;
  return inst;
}

}  // namespace dr2s
