#include <cmath>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "dr2s/error.hpp"
#include "dr2s/model.hpp"

namespace dr2s::json_io {

using nlohmann::json;

namespace {

json num(double v) {
  if (std::isnan(v)) throw Error(ErrorCode::input, "cannot serialise NaN");
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

double get_num(const json& j, const std::string& what) {
  if (j.is_number()) return j.get<double>();
  if (j.is_null()) return std::numeric_limits<double>::infinity();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf" || s == "+inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
  }
  throw Error(ErrorCode::input, what + ": expected a number");
}

json vec_json(const Vec& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(num(v[i]));
  return a;
}

json mat_json(const Mat& m) {
  json a = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(num(m(i, k)));
    a.push_back(row);
  }
  return a;
}

const json& field(const json& j, const char* key, const std::string& ctx) {
  if (!j.is_object() || !j.contains(key)) throw Error(ErrorCode::input, ctx + ": missing field '" + key + "'");
  return j.at(key);
}

Vec parse_vec(const json& j, const std::string& what) {
  if (!j.is_array()) throw Error(ErrorCode::input, what + ": expected an array");
  Vec v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = get_num(j[i], what);
  return v;
}

// An empty array is a 0 x cols matrix; cols comes from context.
Mat parse_mat(const json& j, Eigen::Index rows, Eigen::Index cols, const std::string& what) {
  if (!j.is_array()) throw Error(ErrorCode::input, what + ": expected an array of rows");
  (void)rows;
  if (j.empty()) return Mat::Zero(0, cols);
  const Eigen::Index r = static_cast<Eigen::Index>(j.size());
  Eigen::Index c = -1;
  for (const auto& row : j) {
    if (!row.is_array()) throw Error(ErrorCode::input, what + ": expected an array of rows");
    if (c < 0) c = static_cast<Eigen::Index>(row.size());
    if (static_cast<Eigen::Index>(row.size()) != c) throw Error(ErrorCode::input, what + ": ragged rows");
  }
  Mat m(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index k = 0; k < c; ++k) m(i, k) = get_num(j[i][k], what);
  return m;
}

int get_int(const json& j, const std::string& what) {
  if (!j.is_number_integer() && !(j.is_number() && std::floor(j.get<double>()) == j.get<double>()))
    throw Error(ErrorCode::input, what + ": expected an integer");
  return static_cast<int>(j.get<double>());
}

const char* kind_name(AmbiguityKind k) {
  switch (k) {
    case AmbiguityKind::singleton: return "singleton";
    case AmbiguityKind::total_variation: return "total-variation";
    case AmbiguityKind::polyhedral: return "polyhedral";
  }
  return "?";
}

}  // namespace

std::string to_json(const Instance& inst) {
  json j;
  j["format"] = 1;
  j["name"] = inst.name;
  const auto& fs = inst.first_stage;
  json soc = json::array();
  for (const auto& s : fs.soc_constraints)
    soc.push_back({{"f", mat_json(s.f)}, {"g", vec_json(s.g)}, {"h", vec_json(s.h)}, {"e", num(s.e)}});
  j["first_stage"] = {{"c", vec_json(fs.c)}, {"F", mat_json(fs.F)}, {"a", vec_json(fs.a)}, {"soc", soc}};
  json scs = json::array();
  for (const auto& sc : inst.scenarios) {
    json blocks = json::array();
    for (const auto& b : sc.soc_blocks)
      blocks.push_back({{"A", mat_json(b.A)}, {"B", mat_json(b.B)}, {"b", vec_json(b.b)}, {"g", vec_json(b.g)}, {"d", num(b.d)}});
    scs.push_back({{"q", vec_json(sc.q)},
                   {"W", mat_json(sc.W)},
                   {"T", mat_json(sc.T)},
                   {"r", vec_json(sc.r)},
                   {"soc_blocks", blocks},
                   {"l1", sc.l1},
                   {"l2", sc.l2},
                   {"zL", vec_json(sc.zL)},
                   {"zU", vec_json(sc.zU)}});
  }
  j["scenarios"] = scs;
  const auto& a = inst.ambiguity;
  j["ambiguity"] = {{"kind", kind_name(a.kind)}, {"p0", vec_json(a.p0)}, {"radius", num(a.radius)},
                    {"C", mat_json(a.C)}, {"rhs", vec_json(a.rhs)}};
  if (inst.initial_y) j["initial_y"] = *inst.initial_y;
  return j.dump(1) + "\n";
}

Instance from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::input, std::string("malformed JSON: ") + e.what());
  }
  if (!j.is_object()) throw Error(ErrorCode::input, "instance must be a JSON object");
  if (j.contains("format") && get_int(j["format"], "format") != 1) throw Error(ErrorCode::input, "unsupported format version");
  Instance inst;
  if (j.contains("name")) inst.name = j["name"].get<std::string>();

  const json& jf = field(j, "first_stage", "instance");
  FirstStage& fs = inst.first_stage;
  fs.c = parse_vec(field(jf, "c", "first_stage"), "first_stage.c");
  const Eigen::Index n = fs.c.size();
  fs.a = jf.contains("a") ? parse_vec(jf["a"], "first_stage.a") : Vec();
  fs.F = jf.contains("F") ? parse_mat(jf["F"], fs.a.size(), n, "first_stage.F") : Mat(0, n);
  if (jf.contains("soc")) {
    for (const auto& s : jf["soc"]) {
      FirstStageSoc q;
      q.g = parse_vec(field(s, "g", "first_stage.soc"), "first_stage.soc.g");
      q.f = parse_mat(field(s, "f", "first_stage.soc"), q.g.size(), n, "first_stage.soc.f");
      q.h = parse_vec(field(s, "h", "first_stage.soc"), "first_stage.soc.h");
      q.e = get_num(field(s, "e", "first_stage.soc"), "first_stage.soc.e");
      fs.soc_constraints.push_back(std::move(q));
    }
  }

  const json& js = field(j, "scenarios", "instance");
  if (!js.is_array()) throw Error(ErrorCode::input, "scenarios must be an array");
  for (std::size_t w = 0; w < js.size(); ++w) {
    const json& s = js[w];
    const std::string ctx = "scenarios[" + std::to_string(w) + "]";
    ScenarioData sc;
    sc.l1 = get_int(field(s, "l1", ctx), ctx + ".l1");
    sc.l2 = get_int(field(s, "l2", ctx), ctx + ".l2");
    const Eigen::Index nv = sc.l1 + sc.l2;
    sc.q = parse_vec(field(s, "q", ctx), ctx + ".q");
    sc.r = parse_vec(field(s, "r", ctx), ctx + ".r");
    sc.W = parse_mat(field(s, "W", ctx), sc.r.size(), nv, ctx + ".W");
    sc.T = parse_mat(field(s, "T", ctx), sc.r.size(), n, ctx + ".T");
    sc.zL = parse_vec(field(s, "zL", ctx), ctx + ".zL");
    sc.zU = parse_vec(field(s, "zU", ctx), ctx + ".zU");
    if (s.contains("soc_blocks")) {
      for (const auto& b : s["soc_blocks"]) {
        SocBlock blk;
        blk.b = parse_vec(field(b, "b", ctx), ctx + ".soc_blocks.b");
        blk.A = parse_mat(field(b, "A", ctx), blk.b.size(), nv, ctx + ".soc_blocks.A");
        blk.B = parse_mat(field(b, "B", ctx), blk.b.size(), n, ctx + ".soc_blocks.B");
        blk.g = parse_vec(field(b, "g", ctx), ctx + ".soc_blocks.g");
        blk.d = get_num(field(b, "d", ctx), ctx + ".soc_blocks.d");
        sc.soc_blocks.push_back(std::move(blk));
      }
    }
    inst.scenarios.push_back(std::move(sc));
  }

  const json& ja = field(j, "ambiguity", "instance");
  const std::string kind = field(ja, "kind", "ambiguity").get<std::string>();
  AmbiguitySet& a = inst.ambiguity;
  if (kind == "singleton") a.kind = AmbiguityKind::singleton;
  else if (kind == "total-variation") a.kind = AmbiguityKind::total_variation;
  else if (kind == "polyhedral") a.kind = AmbiguityKind::polyhedral;
  else throw Error(ErrorCode::input, "unknown ambiguity kind '" + kind + "'");
  a.p0 = parse_vec(field(ja, "p0", "ambiguity"), "ambiguity.p0");
  a.radius = ja.contains("radius") ? get_num(ja["radius"], "ambiguity.radius") : 0.0;
  a.rhs = ja.contains("rhs") ? parse_vec(ja["rhs"], "ambiguity.rhs") : Vec();
  a.C = ja.contains("C") ? parse_mat(ja["C"], a.rhs.size(), a.p0.size(), "ambiguity.C") : Mat(0, a.p0.size());
  if (j.contains("initial_y") && !j["initial_y"].is_null()) {
    std::vector<int> y;
    for (const auto& v : j["initial_y"]) y.push_back(get_int(v, "initial_y"));
    inst.initial_y = y;
  }
  return inst;
}

Instance load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::input, "cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

void save(const Instance& inst, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::input, "cannot write '" + path + "'");
  out << to_json(inst);
}

}  // namespace dr2s::json_io
