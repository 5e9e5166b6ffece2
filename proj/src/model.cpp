#include "dr2s/model.hpp"

#include <cmath>
#include <sstream>

#include "dr2s/conic.hpp"
#include "dr2s/error.hpp"
#include "dr2s/misocp.hpp"

namespace dr2s {

bool ValidationReport::ok() const { return count(Severity::fatal) == 0; }

int ValidationReport::count(Severity s) const {
  int k = 0;
  for (const auto& f : findings)
    if (f.severity == s) ++k;
  return k;
}

namespace {

struct Checker {
  ValidationReport& rep;
  void fatal(const std::string& code, const std::string& msg) { rep.findings.push_back({Severity::fatal, code, msg}); }
  void warn(const std::string& code, const std::string& msg) { rep.findings.push_back({Severity::warning, code, msg}); }
  void info(const std::string& code, const std::string& msg) { rep.findings.push_back({Severity::info, code, msg}); }

  template <class M>
  bool dims(const M& m, Eigen::Index r, Eigen::Index c, const std::string& what) {
    if (m.rows() == r && m.cols() == c) return true;
    std::ostringstream os;
    os << what << " is " << m.rows() << "x" << m.cols() << ", expected " << r << "x" << c;
    fatal("dimension", os.str());
    return false;
  }
  bool len(const Vec& v, Eigen::Index n, const std::string& what) {
    if (v.size() == n) return true;
    std::ostringstream os;
    os << what << " has length " << v.size() << ", expected " << n;
    fatal("dimension", os.str());
    return false;
  }
  bool finite(const Vec& v, const std::string& what) {
    if (v.allFinite()) return true;
    fatal("non-finite", what + " contains non-finite entries");
    return false;
  }
  bool finite(const Mat& m, const std::string& what) {
    if (m.allFinite()) return true;
    fatal("non-finite", what + " contains non-finite entries");
    return false;
  }
};

void check_first_stage(Checker& ck, const FirstStage& fs) {
  const int n = fs.n();
  if (n == 0) ck.fatal("dimension", "first stage has no variables");
  ck.finite(fs.c, "c");
  if (fs.F.size() > 0 || fs.a.size() > 0) {
    ck.dims(fs.F, fs.a.size(), n, "F");
    ck.finite(fs.F, "F");
    ck.finite(fs.a, "a");
  }
  for (std::size_t i = 0; i < fs.soc_constraints.size(); ++i) {
    const auto& s = fs.soc_constraints[i];
    const std::string p = "first-stage soc[" + std::to_string(i) + "].";
    ck.dims(s.f, s.g.size(), n, p + "f");
    ck.len(s.h, n, p + "h");
    ck.finite(s.f, p + "f");
    ck.finite(s.g, p + "g");
    ck.finite(s.h, p + "h");
    if (!std::isfinite(s.e)) ck.fatal("non-finite", p + "e is not finite");
  }
}

void check_scenario(Checker& ck, const ScenarioData& sc, int n, int w) {
  const std::string p = "scenario[" + std::to_string(w) + "].";
  if (sc.l1 < 0 || sc.l2 < 0 || sc.l1 + sc.l2 == 0) {
    ck.fatal("dimension", p + "l1/l2 must be nonnegative with l1 + l2 > 0");
    return;
  }
  const int nv = sc.num_vars();
  ck.len(sc.q, nv, p + "q");
  ck.finite(sc.q, p + "q");
  const Eigen::Index m = sc.r.size();
  ck.dims(sc.W, m, nv, p + "W");
  ck.dims(sc.T, m, n, p + "T");
  ck.finite(sc.W, p + "W");
  ck.finite(sc.T, p + "T");
  ck.finite(sc.r, p + "r");
  if (ck.len(sc.zL, nv, p + "zL") && ck.len(sc.zU, nv, p + "zU")) {
    for (int k = 0; k < nv; ++k) {
      if (!std::isfinite(sc.zL[k]) || !std::isfinite(sc.zU[k])) {
        ck.fatal("unbounded-variable", p + "x[" + std::to_string(k) + "] has an infinite bound (unbounded variable)");
      } else if (sc.zL[k] > sc.zU[k]) {
        ck.fatal("bounds-order", p + "zL[" + std::to_string(k) + "] > zU[" + std::to_string(k) + "]");
      }
    }
  }
  for (std::size_t i = 0; i < sc.soc_blocks.size(); ++i) {
    const auto& s = sc.soc_blocks[i];
    const std::string q = p + "soc_blocks[" + std::to_string(i) + "].";
    const Eigen::Index k = s.b.size();
    ck.dims(s.A, k, nv, q + "A");
    ck.dims(s.B, k, n, q + "B");
    ck.len(s.g, nv, q + "g");
    ck.finite(s.A, q + "A");
    ck.finite(s.B, q + "B");
    ck.finite(s.b, q + "b");
    ck.finite(s.g, q + "g");
    if (!std::isfinite(s.d)) ck.fatal("non-finite", q + "d is not finite");
  }
}

void check_ambiguity(Checker& ck, const AmbiguitySet& a, int N) {
  if (N == 0) return;
  if (a.p0.size() != N) {
    std::ostringstream os;
    os << "p0 has length " << a.p0.size() << " but there are " << N << " scenarios";
    ck.fatal("scenario-count", os.str());
    return;
  }
  if (!a.p0.allFinite() || a.p0.minCoeff() < 0.0 || std::fabs(a.p0.sum() - 1.0) > 1e-9) {
    ck.fatal("nominal-not-distribution", "nominal not a distribution: p0 must be nonnegative and sum to 1");
    return;
  }
  switch (a.kind) {
    case AmbiguityKind::singleton: break;
    case AmbiguityKind::total_variation:
      if (!(a.radius >= 0.0 && a.radius <= 2.0)) ck.fatal("radius-range", "total-variation radius must lie in [0, 2]");
      break;
    case AmbiguityKind::polyhedral:
      if (a.C.rows() > 0 || a.rhs.size() > 0) {
        if (!ck.dims(a.C, a.rhs.size(), N, "ambiguity.C")) return;
        if (!((a.C * a.p0 - a.rhs).array() >= -1e-9).all())
          ck.fatal("p0-not-in-set", "nominal distribution violates the polyhedral rows");
      }
      break;
  }
}

std::optional<std::vector<int>> find_feasible_y(const FirstStage& fs) {
  const int n = fs.n();
  if (n <= 20) {
    std::vector<int> y(n);
    for (unsigned long m = 0; m < (1ul << n); ++m) {
      for (int j = 0; j < n; ++j) y[j] = static_cast<int>((m >> j) & 1ul);
      if (first_stage_feasible(fs, y)) return y;
    }
    return std::nullopt;
  }
  ProgramBuilder b(n);
  for (int j = 0; j < n; ++j) b.set_bound(j, 0.0, 1.0);
  for (int i = 0; i < fs.F.rows(); ++i) {
    std::vector<std::pair<int, double>> row;
    for (int j = 0; j < n; ++j) row.emplace_back(j, fs.F(i, j));
    b.add_ge(row, fs.a[i]);
  }
  for (const auto& s : fs.soc_constraints) b.add_soc(SocRow{s.f.sparseView(), s.g, s.h, s.e});
  MiConeProgram mp;
  mp.relaxation = b.build();
  for (int j = 0; j < n; ++j) mp.integer_vars.push_back(j);
  BcResult r = solve_monolithic(mp);
  if (r.status == BcStatus::infeasible) return std::nullopt;
  std::vector<int> y(n);
  for (int j = 0; j < n; ++j) y[j] = static_cast<int>(std::lround(r.incumbent[j]));
  if (!first_stage_feasible(fs, y, 1e-6)) return std::nullopt;
  return y;
}

}  // namespace

ValidationReport validate_structure(const Instance& inst) {
  ValidationReport rep;
  Checker ck{rep};
  check_first_stage(ck, inst.first_stage);
  const int n = inst.first_stage.n();
  if (inst.scenarios.empty()) ck.fatal("no-scenarios", "instance has no scenarios");
  for (std::size_t w = 0; w < inst.scenarios.size(); ++w) check_scenario(ck, inst.scenarios[w], n, static_cast<int>(w));
  check_ambiguity(ck, inst.ambiguity, static_cast<int>(inst.scenarios.size()));
  if (inst.initial_y) {
    const auto& y = *inst.initial_y;
    bool binary = static_cast<int>(y.size()) == n;
    for (int v : y) binary = binary && (v == 0 || v == 1);
    if (!binary) ck.fatal("initial-y", "initial_y must be a binary vector of length n");
    else if (rep.ok() && !first_stage_feasible(inst.first_stage, y)) ck.fatal("initial-y", "initial_y is not first-stage feasible");
  }
  return rep;
}

ValidationReport validate(const Instance& inst) {
  ValidationReport rep = validate_structure(inst);
  if (!rep.ok()) return rep;
  Checker ck{rep};
  std::optional<std::vector<int>> y = inst.initial_y;
  if (!y) y = find_feasible_y(inst.first_stage);
  if (!y) {
    ck.fatal("first-stage-infeasible", "no binary point satisfies the first-stage constraints");
    return rep;
  }
  Vec yv(static_cast<Eigen::Index>(y->size()));
  for (std::size_t j = 0; j < y->size(); ++j) yv[static_cast<Eigen::Index>(j)] = (*y)[j];
  for (std::size_t w = 0; w < inst.scenarios.size(); ++w) {
    const auto& sc = inst.scenarios[w];
    ConicSolution s = solve_conic(scenario_relaxation(sc, yv, root_box(sc)));
    const std::string p = "scenario[" + std::to_string(w) + "]";
    if (s.status == ConicStatus::infeasible)
      ck.warn("recourse-spotcheck", p + ": root relaxation infeasible at a feasible y (complete recourse fails)");
    else if (s.status != ConicStatus::optimal)
      ck.info("recourse-spotcheck", p + ": root relaxation not solved (" + std::string(to_string(s.status)) + ")");
  }
  return rep;
}

void require_valid(const Instance& inst) {
  ValidationReport rep = validate_structure(inst);
  if (rep.ok()) return;
  std::ostringstream os;
  os << "invalid instance";
  for (const auto& f : rep.findings)
    if (f.severity == Severity::fatal) os << "\n  [" << f.code << "] " << f.message;
  throw Error(ErrorCode::input, os.str());
}

bool first_stage_feasible(const FirstStage& fs, const std::vector<int>& y, double tol) {
  if (static_cast<int>(y.size()) != fs.n()) return false;
  Vec yv(fs.n());
  for (int j = 0; j < fs.n(); ++j) {
    if (y[j] != 0 && y[j] != 1) return false;
    yv[j] = y[j];
  }
  if (fs.F.rows() > 0 && ((fs.F * yv - fs.a).array() < -tol).any()) return false;
  for (const auto& s : fs.soc_constraints)
    if ((s.f * yv + s.g).norm() > s.h.dot(yv) + s.e + tol) return false;
  return true;
}

Instance augment_with_slacks(const Instance& inst, double penalty) {
  if (!(penalty > 0.0)) throw Error(ErrorCode::input, "slack penalty must be positive");
  Instance out = inst;
  for (auto& sc : out.scenarios) {
    const int m = static_cast<int>(sc.r.size());
    if (m == 0) continue;
    const int nv = sc.num_vars();
    Vec bound(m);
    for (int i = 0; i < m; ++i) {
      double s = std::fabs(sc.r[i]) + 1.0;
      if (sc.T.cols() > 0) s += sc.T.row(i).cwiseAbs().sum();
      for (int k = 0; k < nv; ++k) s += std::fabs(sc.W(i, k)) * std::max(std::fabs(sc.zL[k]), std::fabs(sc.zU[k]));
      bound[i] = s;
    }
    Mat W(m, nv + m);
    W << sc.W, Mat::Identity(m, m);
    sc.W = std::move(W);
    Vec q(nv + m);
    q << sc.q, Vec::Constant(m, penalty);
    sc.q = std::move(q);
    Vec zL(nv + m), zU(nv + m);
    zL << sc.zL, Vec::Zero(m);
    zU << sc.zU, bound;
    sc.zL = std::move(zL);
    sc.zU = std::move(zU);
    for (auto& blk : sc.soc_blocks) {
      Mat A = Mat::Zero(blk.A.rows(), nv + m);
      A.leftCols(nv) = blk.A;
      blk.A = std::move(A);
      Vec g = Vec::Zero(nv + m);
      g.head(nv) = blk.g;
      blk.g = std::move(g);
    }
    sc.l2 += m;
  }
  return out;
}

}  // namespace dr2s
