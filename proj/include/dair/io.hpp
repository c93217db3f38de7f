#pragma once

#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "dair/driver.hpp"

namespace dair {

/// Validated run description shared by the CLI and the JSON config files.
/// Unknown keys are rejected.
struct RunConfig {
  std::string problem;
  std::string method = "collocation";  ///< collocation | dair | represent | pareto | convergence
  std::string scheme;                  ///< empty = the problem's recommended scheme
  int K = 0;                           ///< 0 = recommended
  int degree = 0;
  std::vector<double> mirs;  ///< scalar (1 entry) or per-equation caps
  std::vector<double> weights;
  double jc = std::numeric_limits<double>::quiet_NaN();
  double tol = 1e-9;
  int max_major = 60;
  double feas_tol = 1e-8;
  std::string out_dir;
  std::set<std::string> emit = {"csv", "json"};
  unsigned seed = 0;
  int pareto_points = 8;
  std::vector<int> k_list;

  void validate() const;
  static RunConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

/// Shortest-roundtrip decimal formatting used by every CSV/SVG emitter, so
/// identical runs produce byte-identical files.
std::string format_double(double v);

void write_text_file(const std::filesystem::path& path, const std::string& content);

/// Trajectory CSV on a uniform grid: t, states, inputs, residual components.
std::string trajectory_csv(const DopDefinition& dop, const Trajectory& traj, const Vec& p,
                           int grid = 500);

/// One row per interval: interval index, eta, zeta per equation.
std::string error_intervals_csv(const ErrorReport& rep);
/// Single summary row of the scalar metrics.
std::string error_summary_csv(const ErrorReport& rep);

std::string iteration_log_csv(const std::vector<IterationRecord>& log);

std::string pareto_csv(const ParetoResult& result);
std::string convergence_csv(const StudyResult& result, bool dair);

// ---- minimal SVG emitter ----

struct SvgSeries {
  std::vector<double> x, y;
  std::string color = "#1f5fa8";
  bool dashed = false;
  std::string label;
};

struct SvgCircle {
  double x = 0, y = 0;
  double radius = 2;
  std::string color = "#1f5fa8";
  bool filled = false;
};

struct SvgPlot {
  int width = 640, height = 420;
  std::string title, x_label, y_label;
  bool log_x = false, log_y = false;
  std::vector<SvgSeries> series;
  std::vector<SvgCircle> circles;
  std::vector<std::string> annotations;

  std::string render() const;
};

SvgPlot trajectory_plot(const DopDefinition& dop, const Trajectory& traj, int grid = 500);
SvgPlot residual_plot(const ErrorReport& rep);
/// Scatter with marker radius proportional to the violation column;
/// the collocation point is drawn filled.
SvgPlot pareto_plot(const ParetoResult& result);
SvgPlot convergence_plot(const StudyResult& result);

}  // namespace dair
