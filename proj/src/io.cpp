#include "dair/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "dair/metrics.hpp"

namespace dair {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << content;
}

void RunConfig::validate() const {
  if (problem.empty()) throw std::invalid_argument("config: problem name is required");
  static const std::set<std::string> methods = {"collocation", "dair", "represent", "pareto",
                                                "convergence"};
  if (!methods.count(method)) {
    throw std::invalid_argument("config: unknown method '" + method + "'");
  }
  if (!scheme.empty() && scheme != "hs" && scheme != "lgr" && scheme != "uniform") {
    throw std::invalid_argument("config: unknown scheme '" + scheme + "'");
  }
  if (K < 0) throw std::invalid_argument("config: K must be positive");
  for (double v : mirs) {
    if (!(v > 0.0)) throw std::invalid_argument("config: mirs entries must be positive");
  }
  for (double v : weights) {
    if (!(v >= 0.0)) throw std::invalid_argument("config: weights must be nonnegative");
  }
  if (!(tol > 0.0)) throw std::invalid_argument("config: tol must be positive");
  static const std::set<std::string> emits = {"csv", "json", "svg"};
  for (const auto& e : emit) {
    if (!emits.count(e)) throw std::invalid_argument("config: unknown emit target '" + e + "'");
  }
  if (method == "convergence" && k_list.empty()) {
    throw std::invalid_argument("config: convergence runs need a K list");
  }
  for (std::size_t i = 1; i < k_list.size(); ++i) {
    if (k_list[i] <= k_list[i - 1]) {
      throw std::invalid_argument("config: K list must be strictly increasing");
    }
  }
}

RunConfig RunConfig::from_json(const nlohmann::json& j) {
  static const std::set<std::string> known = {
      "problem", "method", "scheme", "K",        "degree",        "mirs",  "weights",
      "jc",      "tol",    "max_major", "feas_tol", "out",       "emit",  "seed",
      "pareto_points", "k_list"};
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!known.count(it.key())) {
      throw std::invalid_argument("config: unknown key '" + it.key() + "'");
    }
  }
  RunConfig c;
  c.problem = j.value("problem", std::string{});
  c.method = j.value("method", std::string{"collocation"});
  c.scheme = j.value("scheme", std::string{});
  c.K = j.value("K", 0);
  c.degree = j.value("degree", 0);
  if (j.contains("mirs")) {
    if (j["mirs"].is_number()) {
      c.mirs = {j["mirs"].get<double>()};
    } else {
      c.mirs = j["mirs"].get<std::vector<double>>();
    }
  }
  if (j.contains("weights")) c.weights = j["weights"].get<std::vector<double>>();
  if (j.contains("jc")) c.jc = j["jc"].get<double>();
  c.tol = j.value("tol", 1e-9);
  c.max_major = j.value("max_major", 60);
  c.feas_tol = j.value("feas_tol", 1e-8);
  c.out_dir = j.value("out", std::string{});
  if (j.contains("emit")) {
    c.emit.clear();
    for (const auto& e : j["emit"]) c.emit.insert(e.get<std::string>());
  }
  c.seed = j.value("seed", 0u);
  c.pareto_points = j.value("pareto_points", 8);
  if (j.contains("k_list")) c.k_list = j["k_list"].get<std::vector<int>>();
  c.validate();
  return c;
}

nlohmann::json RunConfig::to_json() const {
  nlohmann::json j;
  j["problem"] = problem;
  j["method"] = method;
  if (!scheme.empty()) j["scheme"] = scheme;
  if (K > 0) j["K"] = K;
  if (degree > 0) j["degree"] = degree;
  if (!mirs.empty()) j["mirs"] = mirs;
  if (!weights.empty()) j["weights"] = weights;
  if (std::isfinite(jc)) j["jc"] = jc;
  j["tol"] = tol;
  j["max_major"] = max_major;
  j["feas_tol"] = feas_tol;
  if (!out_dir.empty()) j["out"] = out_dir;
  j["emit"] = std::vector<std::string>(emit.begin(), emit.end());
  j["seed"] = seed;
  if (method == "pareto") j["pareto_points"] = pareto_points;
  if (!k_list.empty()) j["k_list"] = k_list;
  return j;
}

std::string trajectory_csv(const DopDefinition& dop, const Trajectory& traj, const Vec& p,
                           int grid) {
  std::string csv = "t";
  for (int j = 0; j < dop.n; ++j) csv += ",x" + std::to_string(j + 1);
  for (int j = 0; j < dop.m; ++j) csv += ",u" + std::to_string(j + 1);
  for (int j = 0; j < dop.n + dop.ng; ++j) csv += ",eps" + std::to_string(j + 1);
  csv += "\n";
  Vec x, xd, u;
  for (int i = 0; i < grid; ++i) {
    const double t = traj.t0 + (traj.tf - traj.t0) * i / (grid - 1);
    traj.eval(t, x, xd, u);
    const Vec eps = residual_at(dop, traj, p, t);
    csv += format_double(t);
    for (int j = 0; j < dop.n; ++j) csv += "," + format_double(x(j));
    for (int j = 0; j < dop.m; ++j) csv += "," + format_double(u(j));
    for (int j = 0; j < eps.size(); ++j) csv += "," + format_double(eps(j));
    csv += "\n";
  }
  return csv;
}

std::string error_intervals_csv(const ErrorReport& rep) {
  std::string csv = "interval,eta";
  for (int j = 0; j < rep.zeta.rows(); ++j) csv += ",zeta" + std::to_string(j + 1);
  csv += "\n";
  for (int k = 0; k < rep.eta.size(); ++k) {
    csv += std::to_string(k + 1) + "," + format_double(rep.eta(k));
    for (int j = 0; j < rep.zeta.rows(); ++j) csv += "," + format_double(rep.zeta(j, k));
    csv += "\n";
  }
  return csv;
}

std::string error_summary_csv(const ErrorReport& rep) {
  std::string csv = "r,mirns,r_report,mirns_report,constraint_violation";
  for (int j = 0; j < rep.mirs.size(); ++j) csv += ",mirs" + std::to_string(j + 1);
  csv += "\n";
  csv += format_double(rep.r) + "," + format_double(rep.mirns) + "," +
         format_double(rep.r_report) + "," + format_double(rep.mirns_report) + "," +
         format_double(rep.constraint_violation);
  for (int j = 0; j < rep.mirs.size(); ++j) csv += "," + format_double(rep.mirs(j));
  csv += "\n";
  return csv;
}

std::string iteration_log_csv(const std::vector<IterationRecord>& log) {
  std::string csv = "iter,objective,eq_violation,ineq_violation,step_norm,mu\n";
  for (const IterationRecord& r : log) {
    csv += std::to_string(r.iter) + "," + format_double(r.objective) + "," +
           format_double(r.eq_violation) + "," + format_double(r.ineq_violation) + "," +
           format_double(r.step_norm) + "," + format_double(r.mu) + "\n";
  }
  return csv;
}

std::string pareto_csv(const ParetoResult& result) {
  std::string csv = "method,mirns,objective,terminal_violation,dominated,status\n";
  for (const ParetoPoint& p : result.points) {
    csv += std::string(p.is_collocation ? "collocation" : "dair") + "," +
           format_double(p.mirns) + "," + format_double(p.objective) + "," +
           format_double(p.violation) + "," + (p.dominated ? "1" : "0") + "," + p.status + "\n";
  }
  return csv;
}

std::string convergence_csv(const StudyResult& result, bool dair) {
  std::string csv = "K,mirns\n";
  for (const StudyRow& r : result.rows) {
    csv += std::to_string(r.K) + "," + format_double(dair ? r.dair_mirns : r.colloc_mirns) + "\n";
  }
  return csv;
}

// ---- SVG ----

namespace {

struct Axis {
  double lo = 0, hi = 1;
  bool log = false;
  double map(double v, double pix_lo, double pix_hi) const {
    double a = log ? std::log10(std::max(v, 1e-300)) : v;
    double l = log ? std::log10(std::max(lo, 1e-300)) : lo;
    double h = log ? std::log10(std::max(hi, 1e-300)) : hi;
    if (h - l < 1e-300) h = l + 1.0;
    return pix_lo + (a - l) / (h - l) * (pix_hi - pix_lo);
  }
};

std::string fmt_tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

}  // namespace

std::string SvgPlot::render() const {
  const double ml = 70, mr = 20, mt = title.empty() ? 20 : 40, mb = 50;
  double x_lo = 1e300, x_hi = -1e300, y_lo = 1e300, y_hi = -1e300;
  auto absorb = [&](double x, double y) {
    x_lo = std::min(x_lo, x);
    x_hi = std::max(x_hi, x);
    y_lo = std::min(y_lo, y);
    y_hi = std::max(y_hi, y);
  };
  for (const SvgSeries& s : series) {
    for (std::size_t i = 0; i < s.x.size(); ++i) absorb(s.x[i], s.y[i]);
  }
  for (const SvgCircle& c : circles) absorb(c.x, c.y);
  if (x_lo > x_hi) {
    x_lo = 0;
    x_hi = 1;
    y_lo = 0;
    y_hi = 1;
  }
  if (!log_x) {
    const double pad = 0.05 * std::max(x_hi - x_lo, 1e-12);
    x_lo -= pad;
    x_hi += pad;
  } else {
    x_lo /= 1.5;
    x_hi *= 1.5;
  }
  if (!log_y) {
    const double pad = 0.05 * std::max(y_hi - y_lo, 1e-12);
    y_lo -= pad;
    y_hi += pad;
  } else {
    y_lo /= 1.5;
    y_hi *= 1.5;
  }
  Axis ax{x_lo, x_hi, log_x};
  Axis ay{y_lo, y_hi, log_y};
  auto px = [&](double v) { return ax.map(v, ml, width - mr); };
  auto py = [&](double v) { return ay.map(v, height - mb, mt); };

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(width) +
         "\" height=\"" + std::to_string(height) + "\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!title.empty()) {
    svg += "<text x=\"" + format_double(width / 2.0) +
           "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" + title + "</text>\n";
  }
  // axes box
  svg += "<rect x=\"" + format_double(ml) + "\" y=\"" + format_double(mt) + "\" width=\"" +
         format_double(width - ml - mr) + "\" height=\"" + format_double(height - mt - mb) +
         "\" fill=\"none\" stroke=\"#444\"/>\n";
  // ticks: 5 per axis
  for (int i = 0; i <= 4; ++i) {
    const double fx = i / 4.0;
    double xv = log_x ? std::pow(10.0, std::log10(x_lo) + fx * (std::log10(x_hi) - std::log10(x_lo)))
                      : x_lo + fx * (x_hi - x_lo);
    double yv = log_y ? std::pow(10.0, std::log10(y_lo) + fx * (std::log10(y_hi) - std::log10(y_lo)))
                      : y_lo + fx * (y_hi - y_lo);
    svg += "<text x=\"" + format_double(px(xv)) + "\" y=\"" + format_double(height - mb + 18) +
           "\" text-anchor=\"middle\" font-size=\"11\">" + fmt_tick(xv) + "</text>\n";
    svg += "<text x=\"" + format_double(ml - 8) + "\" y=\"" + format_double(py(yv) + 4) +
           "\" text-anchor=\"end\" font-size=\"11\">" + fmt_tick(yv) + "</text>\n";
  }
  if (!x_label.empty()) {
    svg += "<text x=\"" + format_double((ml + width - mr) / 2.0) + "\" y=\"" +
           format_double(height - 12.0) + "\" text-anchor=\"middle\" font-size=\"12\">" + x_label +
           "</text>\n";
  }
  if (!y_label.empty()) {
    svg += "<text x=\"16\" y=\"" + format_double((mt + height - mb) / 2.0) +
           "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 16 " +
           format_double((mt + height - mb) / 2.0) + ")\">" + y_label + "</text>\n";
  }
  for (const SvgSeries& s : series) {
    svg += "<polyline fill=\"none\" stroke=\"" + s.color + "\" stroke-width=\"1.5\"";
    if (s.dashed) svg += " stroke-dasharray=\"6 4\"";
    svg += " points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      svg += format_double(px(s.x[i])) + "," + format_double(py(s.y[i])) + " ";
    }
    svg += "\"/>\n";
  }
  for (const SvgCircle& c : circles) {
    svg += "<circle cx=\"" + format_double(px(c.x)) + "\" cy=\"" + format_double(py(c.y)) +
           "\" r=\"" + format_double(c.radius) + "\" stroke=\"" + c.color + "\" fill=\"" +
           (c.filled ? c.color : std::string("none")) + "\"/>\n";
  }
  double ann_y = mt + 16;
  for (const std::string& a : annotations) {
    svg += "<text x=\"" + format_double(ml + 10) + "\" y=\"" + format_double(ann_y) +
           "\" font-size=\"12\">" + a + "</text>\n";
    ann_y += 16;
  }
  svg += "</svg>\n";
  return svg;
}

SvgPlot trajectory_plot(const DopDefinition& dop, const Trajectory& traj, int grid) {
  static const char* palette[] = {"#1f5fa8", "#c44e52", "#55a868", "#8172b2",
                                  "#ccb974", "#64b5cd", "#8c8c8c"};
  SvgPlot plot;
  plot.title = dop.name + ": states and inputs";
  plot.x_label = "t";
  plot.y_label = "value";
  Vec x, xd, u;
  for (int j = 0; j < dop.n + dop.m; ++j) {
    SvgSeries s;
    s.color = palette[j % 7];
    s.dashed = j >= dop.n;
    for (int i = 0; i < grid; ++i) {
      const double t = traj.t0 + (traj.tf - traj.t0) * i / (grid - 1);
      traj.eval(t, x, xd, u);
      s.x.push_back(t);
      s.y.push_back(j < dop.n ? x(j) : u(j - dop.n));
    }
    plot.series.push_back(std::move(s));
  }
  return plot;
}

SvgPlot residual_plot(const ErrorReport& rep) {
  SvgPlot plot;
  plot.title = "local error per interval";
  plot.x_label = "interval";
  plot.y_label = "eta";
  plot.log_y = true;
  SvgSeries s;
  for (int k = 0; k < rep.eta.size(); ++k) {
    s.x.push_back(k + 1);
    s.y.push_back(std::max(rep.eta(k), 1e-300));
  }
  plot.series.push_back(std::move(s));
  return plot;
}

SvgPlot pareto_plot(const ParetoResult& result) {
  SvgPlot plot;
  plot.title = "accuracy versus optimality";
  plot.x_label = "MIRNS";
  plot.y_label = "objective";
  plot.log_x = true;
  double max_v = 0.0;
  for (const ParetoPoint& p : result.points) max_v = std::max(max_v, p.violation);
  const double scale = max_v > 0 ? 18.0 / max_v : 1.0;
  for (const ParetoPoint& p : result.points) {
    if (std::isnan(p.mirns)) continue;
    SvgCircle c;
    c.x = std::max(p.mirns, 1e-300);
    c.y = p.objective;
    c.radius = std::max(p.violation * scale, 1.0);
    c.color = p.is_collocation ? "#c44e52" : "#1f5fa8";
    c.filled = p.is_collocation;
    plot.circles.push_back(c);
  }
  plot.annotations.push_back("circle radius proportional to terminal violation");
  plot.annotations.push_back("filled marker: collocation");
  return plot;
}

SvgPlot convergence_plot(const StudyResult& result) {
  SvgPlot plot;
  plot.title = "MIRNS against mesh density";
  plot.x_label = "K";
  plot.y_label = "MIRNS";
  plot.log_x = true;
  plot.log_y = true;
  SvgSeries colloc, dair;
  colloc.color = "#c44e52";
  colloc.label = "collocation";
  dair.color = "#1f5fa8";
  dair.label = "residual minimization";
  for (const StudyRow& r : result.rows) {
    if (r.colloc_mirns > 0 && !std::isnan(r.colloc_mirns)) {
      colloc.x.push_back(r.K);
      colloc.y.push_back(r.colloc_mirns);
    }
    if (r.dair_mirns > 0 && !std::isnan(r.dair_mirns)) {
      dair.x.push_back(r.K);
      dair.y.push_back(r.dair_mirns);
    }
  }
  plot.series.push_back(std::move(colloc));
  plot.series.push_back(std::move(dair));
  char buf[80];
  std::snprintf(buf, sizeof(buf), "collocation slope %.3f", result.colloc_slope);
  plot.annotations.push_back(buf);
  std::snprintf(buf, sizeof(buf), "residual-minimization slope %.3f", result.dair_slope);
  plot.annotations.push_back(buf);
  return plot;
}

}  // namespace dair
