// Homogeneous self-dual embedding interior-point method over R_+^l x SOC blocks.
//
// Internal standard form:  min c'x  s.t.  A x = b,  G x + s = h,  s in K.
// Search directions use Nesterov-Todd scaling and a Mehrotra predictor-corrector.
// The reduced KKT system is solved through normal equations M = G' W^-1 W^-1 G
// (sparse LDL'), with a dense Schur complement for equality rows and iterative refinement.

#include <cstdio>
#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <limits>

#include "dr2s/conic.hpp"
#include "dr2s/kernels.hpp"

namespace dr2s {

namespace {

using VecX = Eigen::VectorXd;
using SpCol = Eigen::SparseMatrix<double>;
constexpr double kInf = std::numeric_limits<double>::infinity();

double vdot(const VecX& a, const VecX& b) { return kernels::dot(a.data(), b.data(), static_cast<std::size_t>(a.size())); }
void vaxpy(double alpha, const VecX& x, VecX& y) { kernels::axpy(alpha, x.data(), y.data(), static_cast<std::size_t>(x.size())); }
double vnorm_inf(const VecX& a) { return kernels::norm_inf(a.data(), static_cast<std::size_t>(a.size())); }

enum class RowKind : std::uint8_t { linear, lower, upper };

struct Standard {
  int n = 0, p = 0, m = 0, ml = 0;
  std::vector<int> soc_start, soc_dim;
  SpMat A, G;
  VecX c, b, h;
  // provenance of orthant rows
  std::vector<RowKind> kind;
  std::vector<int> index;
};

Standard to_standard(const ConeProgram& cp) {
  Standard st;
  st.n = cp.num_vars();
  st.p = static_cast<int>(cp.E.rows());
  std::vector<Eigen::Triplet<double>> gt;
  std::vector<double> hv;
  auto push_row = [&](RowKind k, int idx) {
    st.kind.push_back(k);
    st.index.push_back(idx);
  };
  for (int i = 0; i < cp.G.rows(); ++i) {
    const int r = static_cast<int>(hv.size());
    for (SpMat::InnerIterator it(cp.G, i); it; ++it) gt.emplace_back(r, it.col(), -it.value());
    hv.push_back(-cp.h[i]);
    push_row(RowKind::linear, i);
  }
  for (int j = 0; j < st.n; ++j) {
    if (std::isfinite(cp.lo[j])) {
      gt.emplace_back(static_cast<int>(hv.size()), j, -1.0);
      hv.push_back(-cp.lo[j]);
      push_row(RowKind::lower, j);
    }
    if (std::isfinite(cp.hi[j])) {
      gt.emplace_back(static_cast<int>(hv.size()), j, 1.0);
      hv.push_back(cp.hi[j]);
      push_row(RowKind::upper, j);
    }
  }
  st.ml = static_cast<int>(hv.size());
  for (const auto& s : cp.soc) {
    const int r0 = static_cast<int>(hv.size());
    st.soc_start.push_back(r0);
    st.soc_dim.push_back(1 + static_cast<int>(s.b.size()));
    for (int j = 0; j < st.n; ++j)
      if (s.g[j] != 0.0) gt.emplace_back(r0, j, -s.g[j]);
    hv.push_back(s.d);
    for (int k = 0; k < s.A.rows(); ++k) {
      for (SpMat::InnerIterator it(s.A, k); it; ++it) gt.emplace_back(r0 + 1 + k, it.col(), -it.value());
      hv.push_back(s.b[k]);
    }
  }
  st.m = static_cast<int>(hv.size());
  st.G.resize(st.m, st.n);
  st.G.setFromTriplets(gt.begin(), gt.end());
  st.G.makeCompressed();
  st.h = Eigen::Map<VecX>(hv.data(), st.m);
  st.A = cp.E;
  st.b = cp.e;
  st.c = cp.objective;
  return st;
}

// ---- cone algebra ----------------------------------------------------------

struct SocScale {
  double eta = 1.0;
  double w0 = 1.0;
  VecX w1;
};

struct Scaling {
  VecX wl;  // orthant: sqrt(s/z)
  std::vector<SocScale> q;
  VecX lambda;
};

class Cones {
 public:
  explicit Cones(const Standard& st) : st_(st) {}

  int degree() const { return st_.ml + static_cast<int>(st_.soc_dim.size()); }

  void identity(VecX& u) const {
    u.setZero(st_.m);
    u.head(st_.ml).setOnes();
    for (int start : st_.soc_start) u[start] = 1.0;
  }

  // Largest alpha such that u + alpha du stays in K (may be +inf).
  double step(const VecX& u, const VecX& du) const {
    double a = kernels::orthant_step(u.data(), du.data(), static_cast<std::size_t>(st_.ml));
    for (std::size_t k = 0; k < st_.soc_start.size(); ++k) {
      const int s0 = st_.soc_start[k], q = st_.soc_dim[k];
      a = std::min(a, soc_step(u.segment(s0, q), du.segment(s0, q)));
    }
    return a;
  }

  bool interior(const VecX& u) const {
    for (int i = 0; i < st_.ml; ++i)
      if (!(u[i] > 0.0)) return false;
    for (std::size_t k = 0; k < st_.soc_start.size(); ++k) {
      const int s0 = st_.soc_start[k], q = st_.soc_dim[k];
      if (!(u[s0] > u.segment(s0 + 1, q - 1).norm())) return false;
    }
    return true;
  }

  Scaling scaling(const VecX& s, const VecX& z) const {
    Scaling w;
    w.wl.resize(st_.ml);
    w.lambda.resize(st_.m);
    for (int i = 0; i < st_.ml; ++i) {
      w.wl[i] = std::sqrt(s[i] / z[i]);
      w.lambda[i] = std::sqrt(s[i] * z[i]);
    }
    w.q.resize(st_.soc_start.size());
    for (std::size_t k = 0; k < st_.soc_start.size(); ++k) {
      const int s0 = st_.soc_start[k], q = st_.soc_dim[k];
      auto sb = s.segment(s0 + 1, q - 1);
      auto zb = z.segment(s0 + 1, q - 1);
      const double sres = std::max((s[s0] - sb.norm()) * (s[s0] + sb.norm()), 1e-300);
      const double zres = std::max((z[s0] - zb.norm()) * (z[s0] + zb.norm()), 1e-300);
      const double sn = std::sqrt(sres), zn = std::sqrt(zres);
      const double s0b = s[s0] / sn, z0b = z[s0] / zn;
      VecX s1b = sb / sn, z1b = zb / zn;
      const double sz = s0b * z0b + s1b.dot(z1b);
      const double gamma = std::sqrt(std::max((1.0 + sz) / 2.0, 1e-300));
      SocScale& sc = w.q[k];
      sc.eta = std::sqrt(sn / zn);
      sc.w0 = (s0b + z0b) / (2.0 * gamma);
      sc.w1 = (s1b - z1b) / (2.0 * gamma);
      // keep w on the hyperboloid w0^2 - |w1|^2 = 1
      sc.w0 = std::sqrt(1.0 + sc.w1.squaredNorm());
    }
    apply_w(w, z, w.lambda, false);
    return w;
  }

  // out = W u (inverse=false) or W^-1 u
  void apply_w(const Scaling& w, const VecX& u, VecX& out, bool inverse) const {
    out.resize(st_.m);
    for (int i = 0; i < st_.ml; ++i) out[i] = inverse ? u[i] / w.wl[i] : u[i] * w.wl[i];
    for (std::size_t k = 0; k < st_.soc_start.size(); ++k) {
      const int s0 = st_.soc_start[k], q = st_.soc_dim[k];
      const SocScale& sc = w.q[k];
      const double u0 = u[s0];
      auto u1 = u.segment(s0 + 1, q - 1);
      const double zeta = sc.w1.dot(u1);
      if (!inverse) {
        out[s0] = sc.eta * (sc.w0 * u0 + zeta);
        out.segment(s0 + 1, q - 1) = sc.eta * (u1 + (u0 + zeta / (1.0 + sc.w0)) * sc.w1);
      } else {
        out[s0] = (sc.w0 * u0 - zeta) / sc.eta;
        out.segment(s0 + 1, q - 1) = (u1 + (-u0 + zeta / (1.0 + sc.w0)) * sc.w1) / sc.eta;
      }
    }
  }

  // Dense W^-1 for one SOC block.
  Eigen::MatrixXd winv_block(const SocScale& sc, int q) const {
    Eigen::MatrixXd M(q, q);
    M(0, 0) = sc.w0;
    M.block(0, 1, 1, q - 1) = -sc.w1.transpose();
    M.block(1, 0, q - 1, 1) = -sc.w1;
    M.block(1, 1, q - 1, q - 1) = Eigen::MatrixXd::Identity(q - 1, q - 1) + sc.w1 * sc.w1.transpose() / (1.0 + sc.w0);
    return M / sc.eta;
  }

  // u o v
  void prod(const VecX& u, const VecX& v, VecX& out) const {
    out.resize(st_.m);
    for (int i = 0; i < st_.ml; ++i) out[i] = u[i] * v[i];
    for (std::size_t k = 0; k < st_.soc_start.size(); ++k) {
      const int s0 = st_.soc_start[k], q = st_.soc_dim[k];
      out[s0] = u.segment(s0, q).dot(v.segment(s0, q));
      out.segment(s0 + 1, q - 1) = u[s0] * v.segment(s0 + 1, q - 1) + v[s0] * u.segment(s0 + 1, q - 1);
    }
  }

  // x with lambda o x = v
  void div(const VecX& lambda, const VecX& v, VecX& out) const {
    out.resize(st_.m);
    for (int i = 0; i < st_.ml; ++i) out[i] = v[i] / lambda[i];
    for (std::size_t k = 0; k < st_.soc_start.size(); ++k) {
      const int s0 = st_.soc_start[k], q = st_.soc_dim[k];
      const double l0 = lambda[s0];
      auto l1 = lambda.segment(s0 + 1, q - 1);
      const double det = (l0 - l1.norm()) * (l0 + l1.norm());
      const double x0 = (l0 * v[s0] - l1.dot(v.segment(s0 + 1, q - 1))) / det;
      out[s0] = x0;
      out.segment(s0 + 1, q - 1) = (v.segment(s0 + 1, q - 1) - x0 * l1) / l0;
    }
  }

 private:
  static double soc_step(const VecX& u, const VecX& du) {
    const int q = static_cast<int>(u.size());
    const double u0 = u[0], d0 = du[0];
    auto u1 = u.tail(q - 1);
    auto d1 = du.tail(q - 1);
    const double a = d0 * d0 - d1.squaredNorm();
    const double b = u0 * d0 - u1.dot(d1);
    const double c = std::max((u0 - u1.norm()) * (u0 + u1.norm()), 0.0);
    double alpha = kInf;
    if (d0 < 0.0) alpha = -u0 / d0;
    const double disc = b * b - a * c;
    if (std::fabs(a) < 1e-300) {
      if (b < 0.0) alpha = std::min(alpha, -c / (2.0 * b));
    } else if (disc >= 0.0) {
      const double sq = std::sqrt(disc);
      const double qq = -(b + (b >= 0.0 ? sq : -sq));
      const double r1 = qq / a;
      const double r2 = qq != 0.0 ? c / qq : kInf;
      if (r1 > 0.0) alpha = std::min(alpha, r1);
      if (r2 > 0.0) alpha = std::min(alpha, r2);
    }
    return alpha;
  }

  const Standard& st_;
};

// ---- linear algebra --------------------------------------------------------

class KktSolver {
 public:
  KktSolver(const Standard& st, const Cones& cones) : st_(st), cones_(cones) {
    Gc_ = st.G;  // column-major copy for building scaled rows
    At_ = SpCol(st.A.transpose());
    // structural pattern of each SOC block: union of columns
    for (std::size_t k = 0; k < st.soc_start.size(); ++k) {
      std::vector<int> cols;
      for (int r = st.soc_start[k]; r < st.soc_start[k] + st.soc_dim[k]; ++r)
        for (SpMat::InnerIterator it(st.G, r); it; ++it) cols.push_back(static_cast<int>(it.col()));
      std::sort(cols.begin(), cols.end());
      cols.erase(std::unique(cols.begin(), cols.end()), cols.end());
      block_cols_.push_back(std::move(cols));
    }
  }

  bool factor(const Scaling& w) {
    w_ = &w;
    std::vector<Eigen::Triplet<double>> bt;
    bt.reserve(static_cast<std::size_t>(st_.G.nonZeros()) * 2);
    for (int i = 0; i < st_.ml; ++i)
      for (SpMat::InnerIterator it(st_.G, i); it; ++it) bt.emplace_back(i, it.col(), it.value() / w.wl[i]);
    for (std::size_t k = 0; k < st_.soc_start.size(); ++k) {
      const int s0 = st_.soc_start[k], q = st_.soc_dim[k];
      const auto& cols = block_cols_[k];
      Eigen::MatrixXd Gb = Eigen::MatrixXd::Zero(q, static_cast<Eigen::Index>(cols.size()));
      for (int r = 0; r < q; ++r)
        for (SpMat::InnerIterator it(st_.G, s0 + r); it; ++it) {
          const auto pos = std::lower_bound(cols.begin(), cols.end(), static_cast<int>(it.col())) - cols.begin();
          Gb(r, pos) = it.value();
        }
      Eigen::MatrixXd Bb = cones_.winv_block(w.q[k], q) * Gb;
      for (int r = 0; r < q; ++r)
        for (std::size_t c = 0; c < cols.size(); ++c) bt.emplace_back(s0 + r, cols[c], Bb(r, static_cast<Eigen::Index>(c)));
    }
    SpCol B(st_.m, st_.n);
    B.setFromTriplets(bt.begin(), bt.end());
    SpCol M = SpCol(B.transpose()) * B;
    double dmax = 1.0;
    for (int j = 0; j < st_.n; ++j) dmax = std::max(dmax, M.coeff(j, j));
    delta_ = 1e-13 * dmax;
    SpCol I(st_.n, st_.n);
    I.setIdentity();
    M += delta_ * I;
    M_ = M;
    if (!analyzed_) {
      ldlt_.analyzePattern(M_);
      analyzed_ = true;
    }
    ldlt_.factorize(M_);
    if (ldlt_.info() != Eigen::Success) return false;
    if (st_.p > 0) {
      Eigen::MatrixXd X(st_.n, st_.p);
      for (int i = 0; i < st_.p; ++i) {
        VecX col = At_.col(i);
        X.col(i) = ldlt_.solve(col);
      }
      Minv_At_ = X;
      Eigen::MatrixXd S = st_.A * X;
      S.diagonal().array() += 1e-13 * std::max(1.0, S.diagonal().cwiseAbs().maxCoeff());
      schur_.compute(S);
      if (schur_.info() != Eigen::Success) return false;
    }
    return true;
  }

  // Solve [0 A' G'; A 0 0; G 0 -V] [dx;dy;dz] = [r1;r2;r3]
  void solve(const VecX& r1, const VecX& r2, const VecX& r3, VecX& dx, VecX& dy, VecX& dz) const {
    raw_solve(r1, r2, r3, dx, dy, dz);
    VecX e1, e2, e3, cx, cy, cz;
    double prev = kInf;
    for (int it = 0; it < 4; ++it) {
      residual(r1, r2, r3, dx, dy, dz, e1, e2, e3);
      const double res = std::max({vnorm_inf(e1), st_.p ? vnorm_inf(e2) : 0.0, vnorm_inf(e3)});
      const double scale = 1.0 + std::max({vnorm_inf(r1), st_.p ? vnorm_inf(r2) : 0.0, vnorm_inf(r3)});
      if (res <= 1e-14 * scale || res >= prev) break;
      prev = res;
      raw_solve(e1, e2, e3, cx, cy, cz);
      dx += cx;
      if (st_.p) dy += cy;
      dz += cz;
    }
  }

 private:
  void apply_v(const VecX& u, VecX& out) const {
    VecX t;
    cones_.apply_w(*w_, u, t, false);
    cones_.apply_w(*w_, t, out, false);
  }
  void apply_vinv(const VecX& u, VecX& out) const {
    VecX t;
    cones_.apply_w(*w_, u, t, true);
    cones_.apply_w(*w_, t, out, true);
  }

  void residual(const VecX& r1, const VecX& r2, const VecX& r3, const VecX& dx, const VecX& dy, const VecX& dz,
                VecX& e1, VecX& e2, VecX& e3) const {
    e1 = r1 - st_.G.transpose() * dz;
    if (st_.p) {
      e1 -= st_.A.transpose() * dy;
      e2 = r2 - st_.A * dx;
    } else {
      e2.resize(0);
    }
    VecX vdz;
    apply_v(dz, vdz);
    e3 = r3 - (st_.G * dx - vdz);
  }

  void raw_solve(const VecX& r1, const VecX& r2, const VecX& r3, VecX& dx, VecX& dy, VecX& dz) const {
    VecX t;
    apply_vinv(r3, t);
    VecX rhs = r1 + st_.G.transpose() * t;
    if (st_.p) {
      VecX u = ldlt_.solve(rhs);
      dy = schur_.solve(st_.A * u - r2);
      dx = ldlt_.solve(VecX(rhs - st_.A.transpose() * dy));
    } else {
      dy.resize(0);
      dx = ldlt_.solve(rhs);
    }
    VecX g = st_.G * dx - r3;
    apply_vinv(g, dz);
  }

  const Standard& st_;
  const Cones& cones_;
  SpCol Gc_, At_;
  std::vector<std::vector<int>> block_cols_;
  const Scaling* w_ = nullptr;
  SpCol M_;
  Eigen::SimplicialLDLT<SpCol> ldlt_;
  bool analyzed_ = false;
  double delta_ = 0.0;
  Eigen::MatrixXd Minv_At_;
  Eigen::LDLT<Eigen::MatrixXd> schur_;
};

struct Iterate {
  VecX x, y, z, s;
  double tau = 1.0, kappa = 1.0;
};

struct Measures {
  double pres = kInf, dres = kInf, pcost = 0, dcost = 0, gap = kInf, relgap = kInf;
  double infres = kInf, unbres = kInf;
  bool infeasible_dir = false, unbounded_dir = false;
};

}  // namespace

ConicSolution HsdeBackend::solve(const ConeProgram& cp, const ConicOptions& opts) const {
  const Standard st = to_standard(cp);
  const Cones cones(st);
  KktSolver kkt(st, cones);
  ConicSolution out;

  const double tol = opts.tol;
  const double nb = std::max(1.0, st.p ? st.b.norm() : 0.0);
  const double nh = std::max(1.0, st.h.norm());
  const double nc = std::max(1.0, st.c.norm());
  const int nu = cones.degree();

  // Initial point: box midpoints, unit cone duals, slacks shifted to the interior.
  Iterate it;
  it.x.resize(st.n);
  for (int j = 0; j < st.n; ++j) {
    const bool lf = std::isfinite(cp.lo[j]), hf = std::isfinite(cp.hi[j]);
    it.x[j] = lf && hf ? 0.5 * (cp.lo[j] + cp.hi[j]) : lf ? cp.lo[j] + 1.0 : hf ? cp.hi[j] - 1.0 : 0.0;
  }
  it.y = VecX::Zero(st.p);
  cones.identity(it.z);
  {
    VecX r = st.h - st.G * it.x;
    it.s = r;
    for (int i = 0; i < st.ml; ++i) it.s[i] = std::max(r[i], 1.0);
    for (std::size_t k = 0; k < st.soc_start.size(); ++k) {
      const int s0 = st.soc_start[k], q = st.soc_dim[k];
      const double nr = r.segment(s0 + 1, q - 1).norm();
      if (r[s0] - nr < 1.0) it.s[s0] = nr + 1.0;
    }
  }

  auto measure = [&](const Iterate& p) {
    Measures m;
    VecX rx = st.G.transpose() * p.z;
    if (st.p) rx += st.A.transpose() * p.y;
    VecX rx_h = rx;  // A'y + G'z without c
    vaxpy(p.tau, st.c, rx);
    VecX rz = st.G * p.x + p.s;
    VecX rz_h = rz;
    vaxpy(-p.tau, st.h, rz);
    double ry = 0.0, ry_h = 0.0;
    if (st.p) {
      VecX ax = st.A * p.x;
      ry = (ax - p.tau * st.b).norm();
      ry_h = ax.norm();
    }
    const double cx = vdot(st.c, p.x);
    const double by = st.p ? st.b.dot(p.y) : 0.0;
    const double hz = vdot(st.h, p.z);
    m.pres = std::max(rz.norm() / nh, ry / nb) / p.tau;
    m.dres = rx.norm() / nc / p.tau;
    m.pcost = cx / p.tau;
    m.dcost = -(by + hz) / p.tau;
    m.gap = vdot(p.s, p.z) / (p.tau * p.tau);
    m.relgap = std::fabs(m.pcost - m.dcost) / std::max(1.0, std::min(std::fabs(m.pcost), std::fabs(m.dcost)));
    if (by + hz < 0.0) {
      m.infeasible_dir = true;
      m.infres = rx_h.norm() / (-(by + hz)) / nc;
    }
    if (cx < 0.0) {
      m.unbounded_dir = true;
      m.unbres = std::max(rz_h.norm() / nh, ry_h / nb) / (-cx);
    }
    return m;
  };

  auto converged = [&](const Measures& m) {
    const double scale = std::max(1.0, std::fabs(m.pcost));
    return m.pres <= tol && m.dres <= tol && m.gap <= tol * scale && std::fabs(m.pcost - m.dcost) <= tol * scale;
  };

  auto finish_optimal = [&](const Iterate& p) {
    out.status = ConicStatus::optimal;
    out.x = p.x / p.tau;
    VecX z = p.z / p.tau;
    VecX y = st.p ? VecX(p.y / p.tau) : VecX();
    out.duals.linear = VecX::Zero(cp.num_linear());
    out.duals.tauL = VecX::Zero(st.n);
    out.duals.tauU = VecX::Zero(st.n);
    for (int i = 0; i < st.ml; ++i) {
      switch (st.kind[i]) {
        case RowKind::linear: out.duals.linear[st.index[i]] = z[i]; break;
        case RowKind::lower: out.duals.tauL[st.index[i]] = z[i]; break;
        case RowKind::upper: out.duals.tauU[st.index[i]] = z[i]; break;
      }
    }
    out.duals.soc.resize(st.soc_start.size());
    for (std::size_t k = 0; k < st.soc_start.size(); ++k) {
      const int s0 = st.soc_start[k], q = st.soc_dim[k];
      out.duals.soc[k].lambda = z[s0];
      out.duals.soc[k].theta = -z.segment(s0 + 1, q - 1);
    }
    out.duals.equality = st.p ? VecX(-y) : VecX();
  };

  Measures m;
  Iterate best = it;
  double best_merit = kInf;
  int small_steps = 0;
  for (int iter = 0; iter <= opts.max_iters; ++iter) {
    out.iterations = iter;
    m = measure(it);
    if (converged(m)) {
      finish_optimal(it);
      return out;
    }
    if (m.infeasible_dir && m.infres <= tol && it.kappa > it.tau) {
      const double by = st.p ? st.b.dot(it.y) : 0.0;
      const double hz = vdot(st.h, it.z);
      Iterate ray = it;
      ray.tau = -(by + hz);
      finish_optimal(ray);
      out.status = ConicStatus::infeasible;
      out.farkas_value = 1.0;
      out.message = "primal infeasibility certificate";
      return out;
    }
    if (m.unbounded_dir && m.unbres <= tol && it.kappa > it.tau) {
      out.status = ConicStatus::unbounded;
      out.x = it.x / (-vdot(st.c, it.x));
      out.message = "dual infeasibility certificate";
      return out;
    }
    const double merit = std::max({m.pres, m.dres, m.gap / std::max(1.0, std::fabs(m.pcost))});
    if (merit < best_merit) {
      best_merit = merit;
      best = it;
    }
    if (iter == opts.max_iters) break;

    const Scaling w = cones.scaling(it.s, it.z);
    if (!kkt.factor(w)) {
      out.message = "factorization failed";
      break;
    }
    const double mu = (vdot(it.s, it.z) + it.kappa * it.tau) / (nu + 1);

    VecX rx = st.G.transpose() * it.z;
    if (st.p) rx += st.A.transpose() * it.y;
    vaxpy(it.tau, st.c, rx);
    VecX ry = st.p ? VecX(st.A * it.x - it.tau * st.b) : VecX();
    VecX rz = st.G * it.x + it.s;
    vaxpy(-it.tau, st.h, rz);
    const double rtau = it.kappa + vdot(st.c, it.x) + (st.p ? st.b.dot(it.y) : 0.0) + vdot(st.h, it.z);

    VecX dx1, dy1, dz1;
    kkt.solve(-st.c, st.b, st.h, dx1, dy1, dz1);
    const double den_base = vdot(st.c, dx1) + (st.p ? st.b.dot(dy1) : 0.0) + vdot(st.h, dz1);

    auto direction = [&](double eta, const VecX& d_s, double d_k, VecX& dx, VecX& dy, VecX& dz, VecX& ds,
                         double& dtau, double& dkappa) {
      VecX ld, wld;
      cones.div(w.lambda, d_s, ld);
      cones.apply_w(w, ld, wld, false);
      VecX r3 = -eta * rz - wld;
      VecX dx2, dy2, dz2;
      kkt.solve(-eta * rx, st.p ? VecX(-eta * ry) : VecX(), r3, dx2, dy2, dz2);
      const double num = -eta * rtau - d_k / it.tau - vdot(st.c, dx2) - (st.p ? st.b.dot(dy2) : 0.0) - vdot(st.h, dz2);
      const double den = den_base - it.kappa / it.tau;
      dtau = num / den;
      dx = dx2 + dtau * dx1;
      dy = st.p ? VecX(dy2 + dtau * dy1) : VecX();
      dz = dz2 + dtau * dz1;
      VecX wdz;
      cones.apply_w(w, dz, wdz, false);
      VecX t = ld - wdz;
      cones.apply_w(w, t, ds, false);
      dkappa = (d_k - it.kappa * dtau) / it.tau;
    };

    auto max_step = [&](const VecX& ds, const VecX& dz, double dtau, double dkappa) {
      double a = std::min(cones.step(it.s, ds), cones.step(it.z, dz));
      if (dtau < 0.0) a = std::min(a, -it.tau / dtau);
      if (dkappa < 0.0) a = std::min(a, -it.kappa / dkappa);
      return a;
    };

    // predictor
    VecX ll;
    cones.prod(w.lambda, w.lambda, ll);
    VecX dxa, dya, dza, dsa;
    double dta, dka;
    direction(1.0, -ll, -it.kappa * it.tau, dxa, dya, dza, dsa, dta, dka);
    const double alpha_aff = std::min(1.0, max_step(dsa, dza, dta, dka));
    double sigma = std::pow(1.0 - alpha_aff, 3);
    sigma = std::clamp(sigma, 0.0, 1.0);

    // corrector
    VecX wids, wdz, corr, e;
    cones.apply_w(w, dsa, wids, true);
    cones.apply_w(w, dza, wdz, false);
    cones.prod(wids, wdz, corr);
    cones.identity(e);
    VecX d_s = -ll - corr + sigma * mu * e;
    const double d_k = -it.kappa * it.tau - dka * dta + sigma * mu;
    VecX dx, dy, dz, ds;
    double dtau, dkappa;
    direction(1.0 - sigma, d_s, d_k, dx, dy, dz, ds, dtau, dkappa);
    double alpha = std::min(1.0, 0.99 * max_step(ds, dz, dtau, dkappa));
    if (!(alpha > 0.0) || !std::isfinite(alpha)) {
      out.message = "zero step";
      break;
    }
    vaxpy(alpha, dx, it.x);
    if (st.p) vaxpy(alpha, dy, it.y);
    vaxpy(alpha, dz, it.z);
    vaxpy(alpha, ds, it.s);
    it.tau += alpha * dtau;
    it.kappa += alpha * dkappa;
    if (!cones.interior(it.s) || !cones.interior(it.z) || !(it.tau > 0.0) || !(it.kappa > 0.0)) {
      out.message = "left the cone";
      break;
    }
    // normalise the embedding to keep tau + kappa moderate
    const double scale = it.tau + it.kappa;
    if (scale > 1e8 || scale < 1e-8) {
      it.x /= scale;
      it.y /= scale;
      it.z /= scale;
      it.s /= scale;
      it.tau /= scale;
      it.kappa /= scale;
    }
    small_steps = alpha < 1e-8 ? small_steps + 1 : 0;
    if (small_steps >= 5) {
      out.message = "stalled";
      break;
    }
  }

  // Not converged: report the best iterate, flagged.
  finish_optimal(best);
  out.status = ConicStatus::numerical_failure;
  if (out.message.empty()) out.message = "iteration limit";
  const Measures bm = measure(best);
  char buf[128];
  std::snprintf(buf, sizeof buf, " (pres=%.2e dres=%.2e gap=%.2e)", bm.pres, bm.dres, bm.gap);
  out.message += buf;
  return out;
}

}  // namespace dr2s
