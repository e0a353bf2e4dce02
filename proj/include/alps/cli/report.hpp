#pragma once

// Learning curves from finished runs: curves.csv plus metric-vs-cost SVG plots
// (one curve per strategy, +-1 std band across seeds).

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "alps/selector/records.hpp"
#include "alps/util/error.hpp"

namespace alps::cli {

struct RunRecords {
  std::filesystem::path dir;
  std::string task;
  std::string strategy;
  std::vector<std::vector<al::CycleRecord>> per_seed;
};

/// Completed seeds of one run directory, read from their cycle JSONs.
inline RunRecords load_run(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw ConfigError("report: not a directory: " + dir.string());
  RunRecords run;
  run.dir = dir;
  std::vector<fs::path> seeds;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_directory() && e.path().filename().string().rfind("seed", 0) == 0 && fs::exists(e.path() / "summary.json"))
      seeds.push_back(e.path());
  // seed10 after seed9
  std::sort(seeds.begin(), seeds.end(), [](const fs::path& a, const fs::path& b) {
    const auto na = a.filename().string(), nb = b.filename().string();
    return na.size() != nb.size() ? na.size() < nb.size() : na < nb;
  });
  for (const auto& sd : seeds) {
    const std::size_t n = al::read_json_file(sd / "summary.json").at("cycles");
    std::vector<al::CycleRecord> recs;
    for (std::size_t c = 1; c <= n; ++c) recs.push_back(al::record_from_json(al::read_json_file(sd / al::cycle_file(c))));
    if (!al::records_consistent(recs)) throw ValidationError("report: inconsistent records in " + sd.string());
    for (const auto& r : recs) {
      if (run.task.empty()) {
        run.task = r.task;
        run.strategy = r.strategy;
      } else if (r.task != run.task || r.strategy != run.strategy) {
        throw ValidationError("report: mixed task or strategy within " + dir.string());
      }
    }
    if (!recs.empty()) run.per_seed.push_back(std::move(recs));
  }
  if (run.per_seed.empty()) throw ConfigError("report: no completed seeds in " + dir.string());
  return run;
}

struct CurvePoint {
  std::size_t cycle = 0;
  std::size_t seeds = 0;
  al::Stat reading, labeling, metric;
};

struct Curve {
  std::string label;
  std::vector<CurvePoint> points;
};

inline Curve curve_of(const RunRecords& run, const std::string& label) {
  Curve c;
  c.label = label;
  for (const auto& row : al::aggregate(run.per_seed))
    c.points.push_back({row.cycle, row.seeds, row.stats.at("reading_cost"), row.stats.at("labeling_cost"),
                        row.stats.at("test_primary")});
  return c;
}

inline const char* metric_name(const std::string& task) {
  if (task == "parsing") return "LAS";
  if (task == "ie") return "relation F1";
  return "F1";
}

inline void write_curves_csv(std::ostream& out, const std::vector<Curve>& curves) {
  out << "strategy,cycle,seeds,reading_cost_mean,reading_cost_std,labeling_cost_mean,labeling_cost_std,"
         "metric_mean,metric_std\n";
  using al::fmt_num;
  for (const auto& c : curves)
    for (const auto& p : c.points)
      out << c.label << "," << p.cycle << "," << p.seeds << "," << fmt_num(p.reading.mean) << ","
          << fmt_num(p.reading.std) << "," << fmt_num(p.labeling.mean) << "," << fmt_num(p.labeling.std) << ","
          << fmt_num(p.metric.mean) << "," << fmt_num(p.metric.std) << "\n";
}

// ---- svg ----------------------------------------------------------------------

namespace svg {

inline std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", x);
  return buf;
}

inline std::string escape(const std::string& s) {
  std::string o;
  for (char ch : s) {
    switch (ch) {
      case '&': o += "&amp;"; break;
      case '<': o += "&lt;"; break;
      case '>': o += "&gt;"; break;
      case '"': o += "&quot;"; break;
      default: o += ch;
    }
  }
  return o;
}

/// Tick values covering [lo, hi] with a 1/2/5 step.
inline std::vector<double> ticks(double lo, double hi, int target = 5) {
  if (!(hi > lo)) return {lo};
  const double raw = (hi - lo) / target;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 5.0, 10.0})
    if (m * mag >= raw) {
      step = m * mag;
      break;
    }
  std::vector<double> out;
  for (double t = std::ceil(lo / step) * step; t <= hi + 1e-9 * step; t += step) out.push_back(std::abs(t) < 1e-12 ? 0.0 : t);
  return out;
}

inline std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

inline const std::vector<std::string>& palette() {
  static const std::vector<std::string> p = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                             "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};
  return p;
}

}  // namespace svg

/// Metric against reading or labeling cost. Output depends only on the curves.
inline void write_curve_svg(std::ostream& out, const std::vector<Curve>& curves, bool labeling,
                            const std::string& task) {
  const double W = 640, H = 420, left = 70, right = 150, top = 40, bottom = 60;
  const double pw = W - left - right, ph = H - top - bottom;
  auto xstat = [&](const CurvePoint& p) { return labeling ? p.labeling : p.reading; };

  double xlo = 0, xhi = 0, ylo = 1e300, yhi = -1e300;
  for (const auto& c : curves)
    for (const auto& p : c.points) {
      xhi = std::max(xhi, xstat(p).mean);
      ylo = std::min(ylo, p.metric.mean - p.metric.std);
      yhi = std::max(yhi, p.metric.mean + p.metric.std);
    }
  if (ylo > yhi) ylo = 0, yhi = 1;
  if (xhi <= xlo) xhi = xlo + 1;
  const double pad = std::max(0.01, 0.05 * (yhi - ylo));
  ylo = std::max(0.0, ylo - pad);
  yhi = std::min(1.0, yhi + pad);
  if (yhi <= ylo) yhi = ylo + 0.01;

  auto X = [&](double v) { return left + (v - xlo) / (xhi - xlo) * pw; };
  auto Y = [&](double v) { return top + (1.0 - (v - ylo) / (yhi - ylo)) * ph; };
  using svg::num;

  const std::string xname = labeling ? "labeling cost" : "reading cost (tokens)";
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(W) << "\" height=\"" << num(H)
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  out << "<rect x=\"0\" y=\"0\" width=\"" << num(W) << "\" height=\"" << num(H) << "\" fill=\"white\"/>\n";
  out << "<text x=\"" << num(left + pw / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">"
      << svg::escape(task + ": " + metric_name(task) + " vs " + xname) << "</text>\n";

  // axes and grid
  for (double t : svg::ticks(ylo, yhi)) {
    out << "<line x1=\"" << num(left) << "\" y1=\"" << num(Y(t)) << "\" x2=\"" << num(left + pw) << "\" y2=\""
        << num(Y(t)) << "\" stroke=\"#dddddd\"/>\n";
    out << "<text x=\"" << num(left - 6) << "\" y=\"" << num(Y(t) + 4) << "\" text-anchor=\"end\">"
        << svg::tick_label(t) << "</text>\n";
  }
  for (double t : svg::ticks(xlo, xhi)) {
    out << "<line x1=\"" << num(X(t)) << "\" y1=\"" << num(top + ph) << "\" x2=\"" << num(X(t)) << "\" y2=\""
        << num(top + ph + 5) << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << num(X(t)) << "\" y=\"" << num(top + ph + 18) << "\" text-anchor=\"middle\">"
        << svg::tick_label(t) << "</text>\n";
  }
  out << "<rect x=\"" << num(left) << "\" y=\"" << num(top) << "\" width=\"" << num(pw) << "\" height=\""
      << num(ph) << "\" fill=\"none\" stroke=\"black\"/>\n";
  out << "<text x=\"" << num(left + pw / 2) << "\" y=\"" << num(H - 18) << "\" text-anchor=\"middle\">"
      << svg::escape(xname) << "</text>\n";
  out << "<text x=\"18\" y=\"" << num(top + ph / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
      << num(top + ph / 2) << ")\">" << svg::escape(metric_name(task)) << "</text>\n";

  for (std::size_t i = 0; i < curves.size(); ++i) {
    const auto& c = curves[i];
    const std::string& col = svg::palette()[i % svg::palette().size()];
    out << "<g class=\"curve\" data-label=\"" << svg::escape(c.label) << "\">\n";
    // std band: upper edge forward, lower edge back
    out << "<polygon fill=\"" << col << "\" fill-opacity=\"0.2\" stroke=\"none\" points=\"";
    for (const auto& p : c.points)
      out << num(X(xstat(p).mean)) << "," << num(Y(std::min(yhi, p.metric.mean + p.metric.std))) << " ";
    for (auto it = c.points.rbegin(); it != c.points.rend(); ++it)
      out << num(X(xstat(*it).mean)) << "," << num(Y(std::max(ylo, it->metric.mean - it->metric.std))) << " ";
    out << "\"/>\n";
    out << "<polyline fill=\"none\" stroke=\"" << col << "\" stroke-width=\"2\" points=\"";
    for (std::size_t k = 0; k < c.points.size(); ++k)
      out << (k ? " " : "") << num(X(xstat(c.points[k]).mean)) << "," << num(Y(c.points[k].metric.mean));
    out << "\"/>\n";
    for (const auto& p : c.points)
      out << "<circle cx=\"" << num(X(xstat(p).mean)) << "\" cy=\"" << num(Y(p.metric.mean)) << "\" r=\"2.5\" fill=\""
          << col << "\"/>\n";
    const double ly = top + 10 + 20.0 * static_cast<double>(i);
    out << "<line x1=\"" << num(left + pw + 15) << "\" y1=\"" << num(ly) << "\" x2=\"" << num(left + pw + 40)
        << "\" y2=\"" << num(ly) << "\" stroke=\"" << col << "\" stroke-width=\"2\"/>\n";
    out << "<text x=\"" << num(left + pw + 46) << "\" y=\"" << num(ly + 4) << "\">" << svg::escape(c.label)
        << "</text>\n";
    out << "</g>\n";
  }
  out << "</svg>\n";
}

struct ReportResult {
  std::string task;
  std::vector<Curve> curves;
  std::vector<std::filesystem::path> files;
};

/// Writes curves.csv, <task>_reading.svg and <task>_labeling.svg into `out`,
/// and refreshes each run's aggregate.csv from its cycle JSONs.
inline ReportResult make_report(const std::vector<std::filesystem::path>& dirs, const std::filesystem::path& out) {
  if (dirs.empty()) throw ConfigError("report: no run directories given");
  ReportResult res;
  std::map<std::string, std::size_t> seen;
  for (const auto& d : dirs) {
    const RunRecords run = load_run(d);
    if (res.task.empty()) res.task = run.task;
    if (run.task != res.task)
      throw ValidationError("report: mismatched tasks (" + res.task + " vs " + run.task + " in " + d.string() + ")");
    std::string label = run.strategy;
    if (seen[run.strategy]++) label += " (" + d.filename().string() + ")";
    res.curves.push_back(curve_of(run, label));
    al::write_aggregate(d, al::aggregate(run.per_seed));
  }
  std::filesystem::create_directories(out);
  auto emit = [&](const std::string& name, const std::function<void(std::ostream&)>& f) {
    std::ostringstream s;
    f(s);
    al::write_text_file(out / name, s.str());
    res.files.push_back(out / name);
  };
  emit("curves.csv", [&](std::ostream& s) { write_curves_csv(s, res.curves); });
  emit(res.task + "_reading.svg", [&](std::ostream& s) { write_curve_svg(s, res.curves, false, res.task); });
  emit(res.task + "_labeling.svg", [&](std::ostream& s) { write_curve_svg(s, res.curves, true, res.task); });
  return res;
}

}  // namespace alps::cli
