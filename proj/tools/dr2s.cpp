#include <CLI11.hpp>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "dr2s/driver.hpp"
#include "dr2s/error.hpp"
#include "dr2s/generators.hpp"
#include "dr2s/kernels.hpp"

using namespace dr2s;

namespace {

enum Exit { kOptimal = 0, kFailure = 1, kGapLimit = 2, kInfeasible = 3, kInput = 4 };

void write_file(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::input, "cannot write '" + path + "'");
  out << text;
}

std::vector<int> parse_y(const std::string& s) {
  std::vector<int> y;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok == "0") y.push_back(0);
    else if (tok == "1") y.push_back(1);
    else throw Error(ErrorCode::input, "--initial-y expects a comma-separated 0/1 list");
  }
  return y;
}

std::string fmt_y(const std::vector<int>& y) {
  std::string s = "(";
  for (std::size_t j = 0; j < y.size(); ++j) s += (j ? "," : "") + std::to_string(y[j]);
  return s + ")";
}

int exit_code(const Error& e) {
  switch (e.code()) {
    case ErrorCode::input: return kInput;
    case ErrorCode::recourse: return kInput;
    case ErrorCode::infeasible: return kInfeasible;
    default: return kFailure;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Decomposition branch-and-cut for distributionally robust two-stage MISOCPs"};
  app.require_subcommand(1);

  // solve
  auto* solve = app.add_subcommand("solve", "Solve an instance");
  std::string instance_path, trace_path, report_path, ledger_path, node_log_path, initial_y, master_mode = "auto";
  SolveOptions opts;
  int threads = 0;
  bool slack = false;
  solve->add_option("instance", instance_path, "Instance JSON")->required()->check(CLI::ExistingFile);
  solve->add_option("--epsilon", opts.epsilon, "Absolute gap tolerance (default 1e-6 (1 + |U|))");
  solve->add_option("--time-limit", opts.time_limit_seconds, "Wall-clock limit in seconds");
  solve->add_option("--threads", threads, "Scenario worker threads (0: all cores)");
  solve->add_option("--master-mode", master_mode, "auto | enumerate | bc")
      ->check(CLI::IsMember({"auto", "enumerate", "bc"}));
  solve->add_option("--partial-subsolve", opts.partial_subsolve_iters, "Node-limited subsolves for the first N iterations");
  solve->add_option("--partial-nodes", opts.partial_node_limit, "Node limit used by --partial-subsolve");
  solve->add_flag("--slack-augment", slack, "Add penalised slacks to recourse rows");
  solve->add_option("--slack-penalty", opts.slack_penalty, "Slack cost for --slack-augment");
  solve->add_option("--max-iters", opts.max_iters, "Iteration limit");
  solve->add_option("--conic-tol", opts.conic_tol, "IPM tolerance");
  solve->add_option("--initial-y", initial_y, "Starting first-stage point, e.g. 1,0,1");
  solve->add_option("--trace", trace_path, "Per-iteration trace (JSON lines)");
  solve->add_option("--report", report_path, "Final report (JSON)");
  solve->add_option("--ledger", ledger_path, "Cut ledger (JSON)");
  solve->add_option("--node-log", node_log_path, "Subproblem node log (text)");

  // gen
  auto* gen = app.add_subcommand("gen", "Generate an instance");
  gen->require_subcommand(1);
  std::string gen_out;
  auto* gill = gen->add_subcommand("illustrative", "Four-scenario toy instance");
  gill->add_option("-o,--output", gen_out, "Output file (default stdout)");
  auto* grfl = gen->add_subcommand("rfl", "Facility location with stochastic demand");
  RflParams rp;
  grfl->add_option("--sites", rp.sites, "Customer sites (= candidate locations)");
  grfl->add_option("--budget", rp.budget, "Facility budget");
  grfl->add_option("--scenarios", rp.scenarios, "Demand scenarios");
  grfl->add_option("--seed", rp.seed, "RNG seed");
  grfl->add_option("--dtv", rp.d_tv, "Total-variation radius");
  grfl->add_option("-o,--output", gen_out, "Output file (default stdout)");

  // extensive
  auto* ext = app.add_subcommand("extensive", "Write the deterministic equivalent");
  std::string ext_in, ext_out;
  bool ext_solve = false;
  ext->add_option("instance", ext_in, "Instance JSON")->required()->check(CLI::ExistingFile);
  ext->add_option("-o,--output", ext_out, "Output file (default stdout)");
  ext->add_flag("--solve", ext_solve, "Also solve it and print the optimum");

  // check
  auto* chk = app.add_subcommand("check", "Validate an instance");
  std::string chk_in;
  chk->add_option("instance", chk_in, "Instance JSON")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kInput;
  }

  try {
    if (*solve) {
      Instance inst = json_io::load(instance_path);
      if (const char* env = std::getenv("DR2S_THREADS")) threads = std::atoi(env);
      opts.threads = threads;
      opts.slack_augment = slack;
      opts.node_log = !node_log_path.empty();
      opts.master_mode = master_mode == "enumerate" ? MasterMode::enumerate
                         : master_mode == "bc"      ? MasterMode::branch_and_cut
                                                    : MasterMode::automatic;
      if (!initial_y.empty()) opts.initial_y = parse_y(initial_y);
      std::ostringstream nodelog;
      RunHooks hooks;
      if (opts.node_log)
        hooks.on_subproblem = [&](int k, int w, const Vec&, const BcResult& sub, const ScenarioCut&) {
          nodelog << "# iteration " << k << " scenario " << w << "\n" << format_node_log(sub);
        };
      RunResult r = run(inst, opts, hooks);
      if (!trace_path.empty()) write_file(trace_path, trace_jsonl(r));
      if (!report_path.empty()) write_file(report_path, report_json(r).dump(2) + "\n");
      if (!ledger_path.empty()) write_file(ledger_path, cut_ledger_json(r.ledger).dump(1) + "\n");
      if (opts.node_log) write_file(node_log_path, nodelog.str());
      std::printf("status      %s\n", to_string(r.status));
      std::printf("objective   %.10g\n", r.objective);
      std::printf("y*          %s\n", fmt_y(r.y_star).c_str());
      std::printf("L, U        %.10g, %.10g\n", r.L, r.U);
      std::printf("iterations  %d\n", r.iterations);
      std::printf("wall time   %.3fs (master %.1f%%, scenarios %.1f%%)\n", r.wall_time,
                  100.0 * r.master_time / std::max(r.wall_time, 1e-12),
                  100.0 * r.scenario_time / std::max(r.wall_time, 1e-12));
      std::printf("simd        %s\n", std::string(kernels::isa_name(kernels::active_isa())).c_str());
      if (!r.message.empty()) std::printf("note        %s\n", r.message.c_str());
      return r.status == RunStatus::optimal ? kOptimal : r.status == RunStatus::infeasible ? kInfeasible : kGapLimit;
    }
    if (*gen) {
      Instance inst = *gill ? gen_illustrative() : gen_rfl(rp);
      write_file(gen_out, json_io::to_json(inst));
      return kOptimal;
    }
    if (*ext) {
      Instance inst = json_io::load(ext_in);
      MiConeProgram mp = build_extensive_form(inst);
      write_file(ext_out, extensive_form_json(mp).dump(1) + "\n");
      if (ext_solve) {
        BcOptions bo;
        BcResult r = solve_monolithic(mp, bo);
        if (r.status == BcStatus::infeasible) {
          std::fprintf(stderr, "extensive form infeasible\n");
          return kInfeasible;
        }
        std::fprintf(ext_out.empty() ? stderr : stdout, "extensive optimum %.10g (%s, %d nodes)\n", r.obj,
                     to_string(r.status), r.nodes_explored);
        return r.status == BcStatus::optimal ? kOptimal : kGapLimit;
      }
      return kOptimal;
    }
    if (*chk) {
      Instance inst = json_io::load(chk_in);
      ValidationReport rep = validate(inst);
      for (const auto& f : rep.findings) {
        const char* sev = f.severity == Severity::fatal ? "fatal" : f.severity == Severity::warning ? "warning" : "info";
        std::printf("%s [%s] %s\n", sev, f.code.c_str(), f.message.c_str());
      }
      std::printf("%s: %d fatal, %d warning(s)\n", rep.ok() ? "ok" : "rejected", rep.count(Severity::fatal),
                  rep.count(Severity::warning));
      return rep.ok() ? kOptimal : kInput;
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return exit_code(e);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kFailure;
  }
  return kFailure;
}
