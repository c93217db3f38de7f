// Command-line front end: solve, pareto and convergence runs over the
// built-in problems with reproducible file outputs.

#include <cstdlib>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "dair/io.hpp"
#include "dair/problems.hpp"

namespace {

using namespace dair;
namespace fs = std::filesystem;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitRelaxed = 2;
constexpr int kExitFailure = 3;

fs::path output_dir(const RunConfig& cfg) {
  if (!cfg.out_dir.empty()) return cfg.out_dir;
  if (const char* root = std::getenv("DAIR_OUT_ROOT")) {
    return fs::path(root) / (cfg.problem + "-" + cfg.method);
  }
  return fs::path("dair-out") / (cfg.problem + "-" + cfg.method);
}

Mesh mesh_from_config(const RunConfig& cfg, const BenchmarkCase& bench) {
  const std::string scheme = cfg.scheme.empty() ? bench.recommended_scheme : cfg.scheme;
  const int K = cfg.K > 0 ? cfg.K : bench.recommended_K;
  int degree = cfg.degree > 0 ? cfg.degree : bench.recommended_degree;
  return build_mesh(scheme, K, {}, degree);
}

Vec weights_from_config(const RunConfig& cfg, const BenchmarkCase& bench, int ne) {
  if (!cfg.weights.empty()) {
    if (static_cast<int>(cfg.weights.size()) != ne) {
      throw std::invalid_argument("config: weights must have n + n_g entries");
    }
    return Eigen::Map<const Vec>(cfg.weights.data(), cfg.weights.size());
  }
  if (bench.recommended_weights.size() == ne) return bench.recommended_weights;
  return {};
}

AccuracyRequest request_from_config(const RunConfig& cfg, int ne) {
  AccuracyRequest req;
  if (cfg.mirs.empty()) {
    req = AccuracyRequest::uniform(ne, 1e-6, cfg.feas_tol);
  } else if (cfg.mirs.size() == 1) {
    req = AccuracyRequest::uniform(ne, cfg.mirs[0], cfg.feas_tol);
  } else {
    if (static_cast<int>(cfg.mirs.size()) != ne) {
      throw std::invalid_argument("config: mirs must be a scalar or have n + n_g entries");
    }
    req.mirs_request = Eigen::Map<const Vec>(cfg.mirs.data(), cfg.mirs.size());
    req.feas_tol = cfg.feas_tol;
    req.validate(ne);
  }
  return req;
}

SolverOptions options_from_config(const RunConfig& cfg) {
  SolverOptions opts;
  opts.tol = cfg.tol;
  opts.max_major = cfg.max_major;
  return opts;
}

void emit_common(const RunConfig& cfg, const fs::path& dir, const DopDefinition& dop,
                 const Trajectory& traj, const Vec& p, const ErrorReport& errors,
                 const std::vector<IterationRecord>& log, const nlohmann::json& report) {
  if (cfg.emit.count("csv")) {
    write_text_file(dir / "trajectory.csv", trajectory_csv(dop, traj, p));
    write_text_file(dir / "error_intervals.csv", error_intervals_csv(errors));
    write_text_file(dir / "error_summary.csv", error_summary_csv(errors));
    write_text_file(dir / "iterations.csv", iteration_log_csv(log));
  }
  if (cfg.emit.count("json")) {
    write_text_file(dir / "report.json", report.dump(2) + "\n");
  }
  if (cfg.emit.count("svg")) {
    write_text_file(dir / "trajectory.svg", trajectory_plot(dop, traj).render());
    write_text_file(dir / "residuals.svg", residual_plot(errors).render());
  }
}

int cmd_solve(const RunConfig& cfg) {
  const BenchmarkCase bench = benchmark_case(cfg.problem);
  const DopDefinition& dop = bench.dop;
  const Mesh mesh = mesh_from_config(cfg, bench);
  const int ne = dop.n + dop.ng;
  const Vec weights = weights_from_config(cfg, bench, ne);
  const SolverOptions opts = options_from_config(cfg);
  const fs::path dir = output_dir(cfg);

  nlohmann::json report;
  report["config"] = cfg.to_json();
  report["mesh"] = mesh.to_json();

  if (cfg.method == "collocation") {
    const SolveReport rep = run_collocation(dop, mesh, opts);
    report["status"] = to_string(rep.outcome.status);
    report["objective"] = rep.objective;
    report["errors"] = rep.errors.to_json();
    const DecisionLayout lay = DecisionLayout::build(dop, mesh);
    emit_common(cfg, dir, dop, rep.trajectory, unpack(lay, rep.outcome.x).p, rep.errors,
                rep.outcome.log, report);
    std::cout << "collocation " << to_string(rep.outcome.status) << ", objective "
              << rep.objective << ", MIRNS " << rep.errors.mirns_report << "\n";
    return rep.outcome.usable() ? kExitOk : kExitFailure;
  }

  if (cfg.method == "dair") {
    const AccuracyRequest req = request_from_config(cfg, ne);
    const DairReport rep = dair_solve(dop, mesh, req, opts, weights);
    report["residual_status"] = to_string(rep.residual_outcome.status);
    report["cost_status"] = to_string(rep.cost_outcome.status);
    report["objective"] = rep.objective;
    report["requested"] = std::vector<double>(rep.requested.begin(), rep.requested.end());
    report["achieved"] = std::vector<double>(rep.achieved.begin(), rep.achieved.end());
    report["applied"] = std::vector<double>(rep.applied.begin(), rep.applied.end());
    std::vector<std::string> flags;
    for (EquationFlag f : rep.flags) {
      flags.push_back(f == EquationFlag::met_requirement ? "met-requirement"
                                                         : "relaxed-to-achievable");
    }
    report["flags"] = flags;
    report["errors"] = rep.cost_errors.to_json();
    report["residual_errors"] = rep.residual_errors.to_json();
    std::vector<IterationRecord> log = rep.residual_outcome.log;
    log.insert(log.end(), rep.cost_outcome.log.begin(), rep.cost_outcome.log.end());
    const DecisionLayout lay = DecisionLayout::build(dop, mesh);
    emit_common(cfg, dir, dop, rep.trajectory, unpack(lay, rep.cost_outcome.x).p,
                rep.cost_errors, log, report);
    std::cout << "dair residual " << to_string(rep.residual_outcome.status) << ", cost "
              << to_string(rep.cost_outcome.status) << ", objective " << rep.objective
              << ", MIRNS " << rep.cost_errors.mirns_report
              << (rep.relaxed() ? " (accuracy relaxed to achievable)" : "") << "\n";
    if (!rep.cost_outcome.usable()) return kExitFailure;
    return rep.relaxed() ? kExitRelaxed : kExitOk;
  }

  if (cfg.method == "represent") {
    const AccuracyRequest req = request_from_config(cfg, ne);
    const SolverOptions copts = options_from_config(cfg);
    const SolveReport colloc = run_collocation(dop, mesh, copts);
    if (!colloc.outcome.usable()) {
      std::cerr << "collocation stage failed: " << to_string(colloc.outcome.status) << "\n";
      return kExitFailure;
    }
    const DairReport rep = represent_solution(dop, mesh, colloc.outcome.x, req, opts, weights);
    report["status"] = to_string(rep.residual_outcome.status);
    report["objective"] = rep.objective;
    report["collocation_objective"] = colloc.objective;
    report["errors"] = rep.residual_errors.to_json();
    const DecisionLayout lay = DecisionLayout::build(dop, mesh);
    emit_common(cfg, dir, dop, rep.trajectory, unpack(lay, rep.residual_outcome.x).p,
                rep.residual_errors, rep.residual_outcome.log, report);
    std::cout << "represent " << to_string(rep.residual_outcome.status) << ", objective "
              << rep.objective << " (collocation " << colloc.objective << "), MIRNS "
              << rep.residual_errors.mirns_report << "\n";
    return rep.residual_outcome.usable() ? kExitOk : kExitFailure;
  }

  std::cerr << "method '" << cfg.method << "' is not a solve method\n";
  return kExitConfig;
}

int cmd_pareto(const RunConfig& cfg) {
  const BenchmarkCase bench = benchmark_case(cfg.problem);
  const DopDefinition& dop = bench.dop;
  const Mesh mesh = mesh_from_config(cfg, bench);
  const int ne = dop.n + dop.ng;
  const Vec weights = weights_from_config(cfg, bench, ne);
  const SolverOptions opts = options_from_config(cfg);
  const fs::path dir = output_dir(cfg);

  // Achievable floor from a full residual solve, then a log grid; the top is
  // stretched to cover the collocation point so dominance is well posed.
  DairCaps caps;
  caps.weights = weights;
  const TranscribedNlp res_nlp = build_dair_residual(dop, mesh, caps);
  const SolveOutcome floor_out = solve(res_nlp, initial_guess(dop, mesh), opts);
  Vec floor = transcription_mirs(dop, mesh, floor_out.x);
  for (int j = 0; j < floor.size(); ++j) floor(j) = std::max(floor(j), 1e-14);

  double span = 1e3;
  try {
    const SolveReport colloc = run_collocation(dop, mesh, opts);
    if (colloc.outcome.usable()) {
      const Vec cm = transcription_mirs(dop, mesh, colloc.outcome.x);
      for (int j = 0; j < ne; ++j) {
        if (floor(j) > 0) span = std::max(span, 10.0 * cm(j) / floor(j));
      }
    }
  } catch (const std::exception&) {
    // keep the default span
  }

  std::function<double(const Trajectory&)> violation;
  if (cfg.problem == "cartpole") {
    auto dop_copy = dop;
    violation = [dop_copy](const Trajectory& traj) {
      const RolloutResult roll = simulate_rollout(dop_copy, traj, Vec(0));
      return cartpole_terminal_violation(roll.terminal_state);
    };
  }

  const std::vector<AccuracyRequest> grid =
      pareto_grid(floor, cfg.pareto_points, span, cfg.feas_tol);
  const ParetoResult result = pareto_sweep(dop, mesh, grid, opts, weights, violation);

  nlohmann::json report;
  report["config"] = cfg.to_json();
  report["mesh"] = mesh.to_json();
  nlohmann::json pts = nlohmann::json::array();
  for (const ParetoPoint& pt : result.points) {
    pts.push_back({{"method", pt.is_collocation ? "collocation" : "dair"},
                   {"mirns", pt.mirns},
                   {"objective", pt.objective},
                   {"violation", pt.violation},
                   {"dominated", pt.dominated},
                   {"status", pt.status}});
  }
  report["points"] = pts;
  if (cfg.emit.count("csv")) write_text_file(dir / "pareto.csv", pareto_csv(result));
  if (cfg.emit.count("json")) write_text_file(dir / "report.json", report.dump(2) + "\n");
  if (cfg.emit.count("svg")) write_text_file(dir / "pareto.svg", pareto_plot(result).render());

  std::cout << "pareto sweep: " << result.points.size() << " points written to " << dir << "\n";
  return kExitOk;
}

int cmd_convergence(const RunConfig& cfg) {
  const BenchmarkCase bench = benchmark_case(cfg.problem);
  const DopDefinition& dop = bench.dop;
  const std::string scheme = cfg.scheme.empty() ? bench.recommended_scheme : cfg.scheme;
  const int degree = cfg.degree > 0 ? cfg.degree : bench.recommended_degree;
  const int ne = dop.n + dop.ng;
  const Vec weights = weights_from_config(cfg, bench, ne);
  const SolverOptions opts = options_from_config(cfg);
  const fs::path dir = output_dir(cfg);

  const StudyResult result = convergence_study(dop, scheme, degree, cfg.k_list, opts, weights);

  nlohmann::json report;
  report["config"] = cfg.to_json();
  report["collocation_slope"] = result.colloc_slope;
  report["dair_slope"] = result.dair_slope;
  nlohmann::json rows = nlohmann::json::array();
  for (const StudyRow& r : result.rows) {
    rows.push_back({{"K", r.K},
                    {"collocation_mirns", r.colloc_mirns},
                    {"dair_mirns", r.dair_mirns},
                    {"collocation_status", r.colloc_status},
                    {"dair_status", r.dair_status}});
  }
  report["rows"] = rows;
  if (cfg.emit.count("csv")) {
    write_text_file(dir / "convergence_collocation.csv", convergence_csv(result, false));
    write_text_file(dir / "convergence_dair.csv", convergence_csv(result, true));
  }
  if (cfg.emit.count("json")) write_text_file(dir / "report.json", report.dump(2) + "\n");
  if (cfg.emit.count("svg")) {
    write_text_file(dir / "convergence.svg", convergence_plot(result).render());
  }

  std::cout << "convergence study over " << result.rows.size() << " meshes written to " << dir
            << "\n";
  return kExitOk;
}

void bind_common_flags(CLI::App* app, RunConfig& cfg, std::string& config_path,
                       std::vector<std::string>& emit_list) {
  app->add_option("--problem", cfg.problem, "problem name (see `problems`)");
  app->add_option("--scheme", cfg.scheme, "hs | lgr | uniform");
  app->add_option("--degree", cfg.degree, "polynomial degree for lgr/uniform");
  app->add_option("--K", cfg.K, "number of mesh intervals");
  app->add_option("--mirs", cfg.mirs, "requested MIRS cap (scalar or per-equation)");
  app->add_option("--weights", cfg.weights, "residual weighting diagonal");
  app->add_option("--jc", cfg.jc, "objective cap for representation runs");
  app->add_option("--tol", cfg.tol, "solver tolerance");
  app->add_option("--max-major", cfg.max_major, "solver major-iteration budget");
  app->add_option("--feas-tol", cfg.feas_tol, "feasibility tolerance for early termination");
  app->add_option("--out", cfg.out_dir, "output directory");
  app->add_option("--emit", emit_list, "outputs: csv, json, svg");
  app->add_option("--seed", cfg.seed, "random seed recorded in reports");
  app->add_option("--config", config_path, "JSON config file (overrides flags)");
}

RunConfig finalize_config(RunConfig cfg, const std::string& config_path,
                          const std::vector<std::string>& emit_list, const std::string& method) {
  cfg.method = method;
  if (!emit_list.empty()) cfg.emit = std::set<std::string>(emit_list.begin(), emit_list.end());
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) throw std::invalid_argument("cannot open config file '" + config_path + "'");
    nlohmann::json j = nlohmann::json::parse(in);
    RunConfig from_file = RunConfig::from_json(j);
    if (from_file.method.empty()) from_file.method = method;
    cfg = from_file;
  }
  cfg.validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "direct transcription toolkit: collocation and alternating integrated-residual solves"};
  app.require_subcommand(1);

  RunConfig cfg;
  std::string config_path;
  std::vector<std::string> emit_list;

  CLI::App* solve_cmd = app.add_subcommand("solve", "solve one problem on a fixed mesh");
  std::string method = "collocation";
  solve_cmd->add_option("--method", method, "collocation | dair | represent");
  bind_common_flags(solve_cmd, cfg, config_path, emit_list);

  CLI::App* pareto_cmd = app.add_subcommand("pareto", "accuracy/optimality trade-off sweep");
  pareto_cmd->add_option("--points", cfg.pareto_points, "number of sweep points");
  bind_common_flags(pareto_cmd, cfg, config_path, emit_list);

  CLI::App* conv_cmd = app.add_subcommand("convergence", "uniform-refinement study");
  conv_cmd->add_option("--K-list", cfg.k_list, "increasing interval counts");
  bind_common_flags(conv_cmd, cfg, config_path, emit_list);

  CLI::App* problems_cmd = app.add_subcommand("problems", "list built-in problems");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (problems_cmd->parsed()) {
      for (const std::string& name : dair::problem_names()) {
        const dair::BenchmarkCase bench = dair::benchmark_case(name);
        std::cout << name << ": n=" << bench.dop.n << " m=" << bench.dop.m
                  << " ng=" << bench.dop.ng << " nq=" << bench.dop.nq << " (recommended "
                  << bench.recommended_scheme;
        if (bench.recommended_scheme == "lgr") std::cout << "(" << bench.recommended_degree << ")";
        std::cout << " K=" << bench.recommended_K << ")\n";
      }
      return kExitOk;
    }
    if (solve_cmd->parsed()) {
      return cmd_solve(finalize_config(cfg, config_path, emit_list, method));
    }
    if (pareto_cmd->parsed()) {
      return cmd_pareto(finalize_config(cfg, config_path, emit_list, "pareto"));
    }
    if (conv_cmd->parsed()) {
      return cmd_convergence(finalize_config(cfg, config_path, emit_list, "convergence"));
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "run failed: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitConfig;
}
