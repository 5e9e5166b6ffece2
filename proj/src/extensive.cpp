#include "dr2s/error.hpp"
#include "dr2s/generators.hpp"

namespace dr2s {

MiConeProgram build_extensive_form(const Instance& inst) {
  require_valid(inst);
  const AmbiguitySet& amb = inst.ambiguity;
  const bool singleton = amb.kind == AmbiguityKind::singleton ||
                         (amb.kind == AmbiguityKind::total_variation && amb.radius == 0.0);
  if (!singleton)
    throw Error(ErrorCode::input,
                "extensive form needs a singleton ambiguity set (total-variation radius 0); use the decomposition solver");
  const FirstStage& fs = inst.first_stage;
  const int n = fs.n();
  std::vector<int> offset;
  int nv = n;
  for (const auto& sc : inst.scenarios) {
    offset.push_back(nv);
    nv += sc.num_vars();
  }
  ProgramBuilder b(nv);
  Vec c = Vec::Zero(nv), lo(nv), hi(nv);
  c.head(n) = fs.c;
  lo.head(n).setZero();
  hi.head(n).setOnes();
  MiConeProgram mp;
  for (int j = 0; j < n; ++j) mp.integer_vars.push_back(j);
  for (int i = 0; i < fs.F.rows(); ++i) {
    std::vector<std::pair<int, double>> row;
    for (int j = 0; j < n; ++j)
      if (fs.F(i, j) != 0.0) row.emplace_back(j, fs.F(i, j));
    b.add_ge(row, fs.a[i]);
  }
  for (const auto& s : fs.soc_constraints) {
    SocRow r;
    Mat A = Mat::Zero(s.f.rows(), nv);
    A.leftCols(n) = s.f;
    r.A = A.sparseView();
    r.b = s.g;
    r.g = Vec::Zero(nv);
    r.g.head(n) = s.h;
    r.d = s.e;
    b.add_soc(std::move(r));
  }
  for (std::size_t w = 0; w < inst.scenarios.size(); ++w) {
    const ScenarioData& sc = inst.scenarios[w];
    const int o = offset[w], k = sc.num_vars();
    c.segment(o, k) = amb.p0[static_cast<Eigen::Index>(w)] * sc.q;
    lo.segment(o, k) = sc.zL;
    hi.segment(o, k) = sc.zU;
    for (int j = 0; j < sc.l1; ++j) mp.integer_vars.push_back(o + j);
    for (int i = 0; i < sc.W.rows(); ++i) {
      std::vector<std::pair<int, double>> row;
      for (int j = 0; j < n; ++j)
        if (sc.T(i, j) != 0.0) row.emplace_back(j, sc.T(i, j));
      for (int j = 0; j < k; ++j)
        if (sc.W(i, j) != 0.0) row.emplace_back(o + j, sc.W(i, j));
      b.add_ge(row, sc.r[i], RowOrigin::recourse);
    }
    for (const auto& blk : sc.soc_blocks) {
      SocRow r;
      Mat A = Mat::Zero(blk.b.size(), nv);
      A.leftCols(n) = blk.B;
      A.middleCols(o, k) = blk.A;
      r.A = A.sparseView();
      r.b = blk.b;
      r.g = Vec::Zero(nv);
      r.g.segment(o, k) = blk.g;
      r.d = blk.d;
      b.add_soc(std::move(r));
    }
  }
  b.set_objective(c);
  b.set_bounds(lo, hi);
  mp.relaxation = b.build();
  return mp;
}

namespace {

nlohmann::json num(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

nlohmann::json vec(const Eigen::VectorXd& v) {
  nlohmann::json a = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(num(v[i]));
  return a;
}

nlohmann::json triplets(const SpMat& m) {
  nlohmann::json t = nlohmann::json::array();
  for (int i = 0; i < m.outerSize(); ++i)
    for (SpMat::InnerIterator it(m, i); it; ++it) t.push_back({static_cast<int>(it.row()), static_cast<int>(it.col()), it.value()});
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"triplets", t}};
}

}  // namespace

nlohmann::json extensive_form_json(const MiConeProgram& mp) {
  const ConeProgram& p = mp.relaxation;
  nlohmann::json soc = nlohmann::json::array();
  for (const auto& s : p.soc) soc.push_back({{"A", triplets(s.A)}, {"b", vec(s.b)}, {"g", vec(s.g)}, {"d", s.d}});
  return {{"format", 1},
          {"objective", vec(p.objective)},
          {"objective_offset", p.objective_offset},
          {"G", triplets(p.G)},
          {"h", vec(p.h)},
          {"E", triplets(p.E)},
          {"e", vec(p.e)},
          {"soc", soc},
          {"lo", vec(p.lo)},
          {"hi", vec(p.hi)},
          {"integer_vars", mp.integer_vars}};
}

}  // namespace dr2s
