#include "dr2s/driver.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <sstream>
#include <thread>

#include "dr2s/error.hpp"

namespace dr2s {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

Vec to_vec(const std::vector<int>& y) {
  Vec v(static_cast<Eigen::Index>(y.size()));
  for (std::size_t j = 0; j < y.size(); ++j) v[static_cast<Eigen::Index>(j)] = y[j];
  return v;
}

double master_eta(const MasterState& st, const Vec& y) {
  double eta = st.eta_floor;
  for (const auto& c : st.cuts) eta = std::max(eta, c.value_at(y));
  return eta;
}

MasterSolution master_enumerate(MasterState& st, const FirstStage& fs) {
  if (!st.feasible) st.feasible = std::make_shared<std::vector<std::vector<int>>>(enumerate_feasible(fs));
  if (st.feasible->empty()) throw Error(ErrorCode::infeasible, "first stage has no feasible binary point");
  MasterSolution best;
  double best_obj = std::numeric_limits<double>::infinity();
  for (const auto& y : *st.feasible) {
    const Vec yv = to_vec(y);
    const double eta = master_eta(st, yv);
    const double obj = fs.c.dot(yv) + eta;
    if (obj < best_obj - 1e-12 * (1.0 + std::fabs(obj))) {
      best_obj = obj;
      best.y = y;
      best.eta = eta;
    }
  }
  best.L = best_obj;
  return best;
}

MasterSolution master_branch_and_cut(MasterState& st, const FirstStage& fs, const SolveOptions& opts) {
  const int n = fs.n();
  ProgramBuilder b(n + 1);
  Vec c(n + 1);
  c.head(n) = fs.c;
  c[n] = 1.0;
  b.set_objective(c);
  for (int j = 0; j < n; ++j) b.set_bound(j, 0.0, 1.0);
  b.set_bound(n, st.eta_floor, std::numeric_limits<double>::infinity());
  for (int i = 0; i < fs.F.rows(); ++i) {
    std::vector<std::pair<int, double>> row;
    for (int j = 0; j < n; ++j) row.emplace_back(j, fs.F(i, j));
    b.add_ge(row, fs.a[i]);
  }
  for (const auto& s : fs.soc_constraints) {
    SocRow r;
    Mat A = Mat::Zero(s.f.rows(), n + 1);
    A.leftCols(n) = s.f;
    r.A = A.sparseView();
    r.b = s.g;
    r.g = Vec::Zero(n + 1);
    r.g.head(n) = s.h;
    r.d = s.e;
    b.add_soc(std::move(r));
  }
  for (const auto& cut : st.cuts) {
    std::vector<std::pair<int, double>> row{{n, 1.0}};
    for (int j = 0; j < n; ++j) row.emplace_back(j, -cut.f[j]);
    b.add_ge(row, cut.h);
  }
  MiConeProgram mp;
  mp.relaxation = b.build();
  for (int j = 0; j < n; ++j) mp.integer_vars.push_back(j);
  BcOptions bo;
  bo.rel_gap = 1e-10;
  bo.conic.tol = opts.conic_tol;
  bo.conic.max_iters = opts.ipm_max_iters;
  bo.context = "master: ";
  BcResult res = solve_monolithic(mp, bo);
  if (res.status == BcStatus::infeasible) throw Error(ErrorCode::infeasible, "first stage has no feasible binary point");
  MasterSolution ms;
  ms.y.resize(n);
  for (int j = 0; j < n; ++j) ms.y[j] = static_cast<int>(std::lround(res.incumbent[j]));
  const Vec yv = to_vec(ms.y);
  ms.eta = master_eta(st, yv);
  ms.L = fs.c.dot(yv) + ms.eta;
  return ms;
}

struct ScenarioOutcome {
  BcResult sub;
  std::vector<NodeCut> node_cuts;
  ScenarioCut cut;
};

int resolve_threads(const SolveOptions& opts, int work) {
  if (!opts.parallel_scenarios) return 1;
  int t = opts.threads > 0 ? opts.threads : static_cast<int>(std::thread::hardware_concurrency());
  return std::max(1, std::min(t, work));
}

}  // namespace

const char* to_string(RunStatus s) {
  switch (s) {
    case RunStatus::optimal: return "optimal";
    case RunStatus::gap_limit: return "gap-limit";
    case RunStatus::infeasible: return "infeasible";
  }
  return "?";
}

double eta_guard(const Instance& inst) {
  double m = 1.0;
  for (const auto& sc : inst.scenarios) {
    const double qmax = sc.q.size() ? sc.q.cwiseAbs().maxCoeff() : 0.0;
    m += qmax * (sc.zU.cwiseAbs().sum() + sc.zL.cwiseAbs().sum());
  }
  return m;
}

MasterMode resolve_master_mode(MasterMode m, int n) {
  if (m != MasterMode::automatic) return m;
  return n <= 16 ? MasterMode::enumerate : MasterMode::branch_and_cut;
}

std::vector<std::vector<int>> enumerate_feasible(const FirstStage& fs) {
  const int n = fs.n();
  if (n > 30) throw Error(ErrorCode::input, "enumerate mode limited to n <= 30");
  std::vector<std::vector<int>> out;
  std::vector<int> y(n);
  for (unsigned long m = 0; m < (1ul << n); ++m) {
    for (int j = 0; j < n; ++j) y[j] = static_cast<int>((m >> j) & 1ul);
    if (first_stage_feasible(fs, y)) out.push_back(y);
  }
  return out;
}

MasterSolution solve_master(MasterState& state, const FirstStage& fs, const SolveOptions& opts) {
  if (resolve_master_mode(opts.master_mode, fs.n()) == MasterMode::enumerate) return master_enumerate(state, fs);
  return master_branch_and_cut(state, fs, opts);
}

RunResult run(const Instance& instance0, const SolveOptions& opts, const RunHooks& hooks) {
  const auto t_start = Clock::now();
  require_valid(instance0);
  const Instance inst = opts.slack_augment ? augment_with_slacks(instance0, opts.slack_penalty) : instance0;
  const FirstStage& fs = inst.first_stage;
  const int n = fs.n();
  const int N = static_cast<int>(inst.scenarios.size());

  MasterState st;
  st.eta_floor = -eta_guard(inst);
  std::optional<std::vector<int>> initial = opts.initial_y ? opts.initial_y : inst.initial_y;
  if (initial && (static_cast<int>(initial->size()) != n || !first_stage_feasible(fs, *initial)))
    throw Error(ErrorCode::input, "initial y is not first-stage feasible");

  auto eps_of = [&](double U) {
    if (opts.epsilon > 0.0) return opts.epsilon;
    return std::isfinite(U) ? 1e-6 * (1.0 + std::fabs(U)) : 1e-6;
  };

  RunResult out;
  std::set<std::vector<int>> visited_exact;
  for (int k = 1;; ++k) {
    IterationRecord rec;
    rec.iteration = k;
    rec.U_start = st.U;
    const auto t_iter = Clock::now();

    if (k == 1 && initial) {
      rec.y = *initial;
    } else {
      const auto tm = Clock::now();
      MasterSolution ms = solve_master(st, fs, opts);
      rec.master_time = seconds_since(tm);
      out.master_time += rec.master_time;
      rec.y = ms.y;
      rec.eta = ms.eta;
      st.L = std::max(st.L, ms.L);
    }
    rec.L = st.L;
    rec.U = st.U;
    const double elapsed = seconds_since(t_start);
    if (st.U - st.L <= eps_of(st.U)) {
      rec.terminal = true;
      out.status = RunStatus::optimal;
    } else if (k > opts.max_iters || elapsed > opts.time_limit_seconds) {
      rec.terminal = true;
      out.status = RunStatus::gap_limit;
      out.message = k > opts.max_iters ? "iteration limit" : "time limit";
    } else if (visited_exact.count(rec.y)) {
      rec.terminal = true;
      rec.repeat = true;
      out.status = RunStatus::gap_limit;
      out.message = "first-stage solution repeated without closing the gap";
    }
    if (rec.terminal) {
      rec.wall_time = seconds_since(t_iter);
      out.trace.push_back(rec);
      break;
    }
    rec.repeat = st.visited.count(rec.y) > 0;
    st.visited.insert(rec.y);
    st.iteration = k;

    // scenario phase
    const auto ts = Clock::now();
    const bool partial = k <= opts.partial_subsolve_iters;
    rec.partial = partial;
    if (!partial) visited_exact.insert(rec.y);
    BcOptions bo = subproblem_options(opts);
    if (partial) bo.node_limit = std::max(1, opts.partial_node_limit);
    const Vec yv = to_vec(rec.y);
    std::vector<ScenarioOutcome> outcomes(N);
    std::vector<std::exception_ptr> errors(N);
    auto work = [&](int w) {
      try {
        ScenarioOutcome& o = outcomes[w];
        o.sub = solve_subproblem(inst.scenarios[w], yv, bo, w);
        for (const auto& leaf : o.sub.leaves) o.node_cuts.push_back(NodeCut{leaf.R, leaf.S, leaf.id});
        DisjunctiveOptions dopt;
        dopt.tol = opts.conic_tol;
        o.cut = build_and_solve_disjunctive_lp(o.node_cuts, fs.F, fs.a, yv, dopt);
        o.cut.scenario = w;
        o.cut.iteration = k;
      } catch (...) {
        errors[w] = std::current_exception();
      }
    };
    const int nt = resolve_threads(opts, N);
    if (nt <= 1) {
      for (int w = 0; w < N; ++w) work(w);
    } else {
      std::atomic<int> next{0};
      std::vector<std::thread> pool;
      for (int t = 0; t < nt; ++t)
        pool.emplace_back([&] {
          for (int w = next++; w < N; w = next++) work(w);
        });
      for (auto& th : pool) th.join();
    }
    for (int w = 0; w < N; ++w)
      if (errors[w]) std::rethrow_exception(errors[w]);

    std::vector<ScenarioCut> cuts;
    rec.Q.resize(N);
    rec.cut_values.resize(N);
    bool exact_q = true;
    for (int w = 0; w < N; ++w) {
      cuts.push_back(outcomes[w].cut);
      rec.Q[w] = outcomes[w].sub.obj;
      rec.cut_values[w] = outcomes[w].cut.value_at(yv);
      if (!std::isfinite(rec.Q[w])) exact_q = false;
    }
    const WorstCaseResult pk = worst_case_distribution(rec.cut_values, inst.ambiguity);
    rec.p = pk.p;
    AggregatedCut agg = aggregate(cuts, pk.p);
    rec.cut_f = agg.f;
    rec.cut_h = agg.h;
    if (!is_duplicate(agg, st.cuts)) {
      rec.cut_id = static_cast<int>(st.cuts.size());
      st.cuts.push_back(agg);
    }
    if (exact_q) {
      const WorstCaseResult gq = worst_case_distribution(rec.Q, inst.ambiguity);
      rec.worst_case_Q = gq.value;
      const double ucand = fs.c.dot(yv) + gq.value;
      if (ucand < st.U) {
        st.U = ucand;
        st.incumbent = rec.y;
        st.incumbent_obj = ucand;
      }
    } else {
      rec.worst_case_Q = std::numeric_limits<double>::infinity();
    }
    for (int w = 0; w < N; ++w) {
      out.ledger.push_back(CutLedgerEntry{k, w, outcomes[w].cut, outcomes[w].node_cuts});
      if (hooks.on_subproblem) hooks.on_subproblem(k, w, yv, outcomes[w].sub, outcomes[w].cut);
    }
    rec.scenario_time = seconds_since(ts);
    out.scenario_time += rec.scenario_time;
    rec.U = st.U;
    rec.wall_time = seconds_since(t_iter);
    out.trace.push_back(rec);
    out.iterations = k;
  }

  out.cuts = st.cuts;
  out.L = st.L;
  out.U = st.U;
  out.y_star = st.incumbent;
  out.objective = st.U;
  if (st.incumbent.empty() && out.status == RunStatus::optimal) out.status = RunStatus::gap_limit;
  out.wall_time = seconds_since(t_start);
  return out;
}

namespace {

nlohmann::json num(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}

std::vector<double> vec(const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

}  // namespace

nlohmann::json trace_record_json(const IterationRecord& r) {
  nlohmann::json j;
  j["iteration"] = r.iteration;
  j["y"] = r.y;
  j["eta"] = num(r.eta);
  j["L"] = num(r.L);
  j["U_start"] = num(r.U_start);
  j["U"] = num(r.U);
  j["terminal"] = r.terminal;
  j["repeat"] = r.repeat;
  j["partial"] = r.partial;
  j["wall_time"] = r.wall_time;
  j["master_time"] = r.master_time;
  j["scenario_time"] = r.scenario_time;
  if (!r.terminal) {
    j["p"] = vec(r.p);
    j["Q"] = vec(r.Q);
    j["cut_values"] = vec(r.cut_values);
    j["worst_case_Q"] = num(r.worst_case_Q);
    j["cut_id"] = r.cut_id;
    j["cut"] = {{"f", vec(r.cut_f)}, {"h", r.cut_h}};
  }
  return j;
}

std::string trace_jsonl(const RunResult& r) {
  std::ostringstream os;
  for (const auto& rec : r.trace) os << trace_record_json(rec).dump() << "\n";
  return os.str();
}

nlohmann::json report_json(const RunResult& r) {
  nlohmann::json j;
  j["status"] = to_string(r.status);
  j["objective"] = num(r.objective);
  j["y_star"] = r.y_star;
  j["L"] = num(r.L);
  j["U"] = num(r.U);
  j["iterations"] = r.iterations;
  j["wall_time"] = r.wall_time;
  const double total = std::max(r.wall_time, 1e-12);
  j["masT"] = 100.0 * r.master_time / total;
  j["scenT"] = 100.0 * r.scenario_time / total;
  j["master_time"] = r.master_time;
  j["scenario_time"] = r.scenario_time;
  j["cuts"] = static_cast<int>(r.cuts.size());
  if (!r.message.empty()) j["message"] = r.message;
  return j;
}

}  // namespace dr2s
