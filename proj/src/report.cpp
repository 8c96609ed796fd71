#include "reslab/report.hpp"

#include "reslab/config.hpp"
#include "reslab/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace reslab {

namespace fs = std::filesystem;

namespace {

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

}  // namespace

std::string csv_text(const TrajectoryRecord& rec) {
  std::string out = "t,x1,x2,rho,theta\n";
  out.reserve(out.size() + rec.samples.size() * 120);
  char buf[160];
  for (const auto& s : rec.samples) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g\n", s.t, s.x1, s.x2, s.rho, s.theta);
    out += buf;
  }
  return out;
}

void emit_csv(const TrajectoryRecord& rec, const fs::path& path) { write_text(path, csv_text(rec)); }

TrajectoryRecord read_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != "t,x1,x2,rho,theta") {
    throw IoError(path.string() + ": missing header t,x1,x2,rho,theta");
  }
  TrajectoryRecord rec;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    Sample s;
    double* fields[] = {&s.t, &s.x1, &s.x2, &s.rho, &s.theta};
    const char* p = line.c_str();
    for (int i = 0; i < 5; ++i) {
      char* end = nullptr;
      *fields[i] = std::strtod(p, &end);
      if (end == p || (i < 4 && *end != ',') || (i == 4 && *end != '\0')) {
        throw IoError(path.string() + ":" + std::to_string(lineno) + ": malformed row");
      }
      p = end + 1;
    }
    rec.samples.push_back(s);
  }
  return rec;
}

std::string grid_csv_text(const AveragedField& avg, const Eigen::VectorXd& r, const Eigen::VectorXd& psi) {
  std::string out = "k,r,psi,lambda_k,omega_k\n";
  char line[160];
  for (const auto& [k, _] : avg.entries) {
    const Eigen::MatrixXd g = grid_dump(avg, k, r, psi);
    for (Eigen::Index i = 0; i < g.rows(); ++i) {
      std::snprintf(line, sizeof line, "%d,%.17g,%.17g,%.17g,%.17g\n", k, g(i, 0), g(i, 1), g(i, 2), g(i, 3));
      out += line;
    }
  }
  return out;
}

void emit_grid_csv(const AveragedField& avg, const Eigen::VectorXd& r, const Eigen::VectorXd& psi,
                   const fs::path& path) {
  write_text(path, grid_csv_text(avg, r, psi));
}

void emit_json(const nlohmann::json& doc, const fs::path& path) { write_text(path, doc.dump(2) + "\n"); }

namespace {

struct Frame {
  double x0, x1, y0, y1;  // data bounds (x in plot space: log10 when log_x)
  double left, top, width, height;
  double px(double x) const { return left + (x - x0) / (x1 - x0) * width; }
  double py(double y) const { return top + height - (y - y0) / (y1 - y0) * height; }
};

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

double nice_step(double range, int target) {
  const double raw = range / target;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  const double f = raw / mag;
  return (f < 1.5 ? 1.0 : f < 3.0 ? 2.0 : f < 7.0 ? 5.0 : 10.0) * mag;
}

// Finite points in plot space; drops the rest and counts them.
std::vector<std::pair<double, double>> plot_points(const Series& s, bool log_x, std::size_t& dropped) {
  std::vector<std::pair<double, double>> pts;
  const std::size_t n = std::min(s.x.size(), s.y.size());
  pts.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    double x = s.x[i];
    const double y = s.y[i];
    if (log_x) x = x > 0.0 ? std::log10(x) : NAN;
    if (std::isfinite(x) && std::isfinite(y)) {
      pts.emplace_back(x, y);
    } else {
      ++dropped;
    }
  }
  return pts;
}

// Keeps first, min, max and last point of every pixel column, in order.
std::vector<std::pair<double, double>> decimate(const std::vector<std::pair<double, double>>& pts, const Frame& f,
                                                int columns) {
  if (pts.size() <= static_cast<std::size_t>(4 * columns)) return pts;
  std::vector<std::pair<double, double>> out;
  std::size_t i = 0;
  while (i < pts.size()) {
    const long col = static_cast<long>(std::floor((pts[i].first - f.x0) / (f.x1 - f.x0) * columns));
    std::size_t j = i, lo = i, hi = i;
    while (j < pts.size() && static_cast<long>(std::floor((pts[j].first - f.x0) / (f.x1 - f.x0) * columns)) == col) {
      if (pts[j].second < pts[lo].second) lo = j;
      if (pts[j].second > pts[hi].second) hi = j;
      ++j;
    }
    std::size_t keep[] = {i, std::min(lo, hi), std::max(lo, hi), j - 1};
    std::size_t last = static_cast<std::size_t>(-1);
    for (std::size_t k : keep) {
      if (k != last) out.push_back(pts[k]);
      last = k;
    }
    i = j;
  }
  return out;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

void render_panel(std::ostringstream& svg, const Panel& panel, double offset_x, const SvgFigure& fig,
                  std::size_t& dropped) {
  std::vector<std::vector<std::pair<double, double>>> solid, dashed;
  for (const auto& s : panel.series) solid.push_back(plot_points(s, panel.log_x, dropped));
  for (const auto& s : panel.references) dashed.push_back(plot_points(s, panel.log_x, dropped));

  double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
  for (const auto* group : {&solid, &dashed}) {
    for (const auto& pts : *group) {
      for (const auto& [x, y] : pts) {
        x0 = std::min(x0, x);
        x1 = std::max(x1, x);
        y0 = std::min(y0, y);
        y1 = std::max(y1, y);
      }
    }
  }
  if (!(x0 <= x1)) x0 = 0.0, x1 = 1.0;
  if (!(y0 <= y1)) y0 = 0.0, y1 = 1.0;
  if (x1 - x0 < 1e-12) x0 -= 0.5, x1 += 0.5;
  if (y1 - y0 < 1e-12 * std::max(1.0, std::abs(y0))) {
    const double pad = 0.5 * std::max(1e-3, std::abs(y0) * 1e-2);
    y0 -= pad;
    y1 += pad;
  }
  const double ypad = 0.05 * (y1 - y0);
  y0 -= ypad;
  y1 += ypad;

  const Frame f{x0, x1, y0, y1, offset_x + 64.0, 34.0, fig.panel_width - 84.0, fig.panel_height - 84.0};
  svg << "<g>\n";
  svg << "<rect x=\"" << fmt("%.2f", f.left) << "\" y=\"" << fmt("%.2f", f.top) << "\" width=\""
      << fmt("%.2f", f.width) << "\" height=\"" << fmt("%.2f", f.height)
      << "\" fill=\"none\" stroke=\"#000\" stroke-width=\"1\"/>\n";
  svg << "<text x=\"" << fmt("%.2f", f.left + f.width / 2) << "\" y=\"20\" text-anchor=\"middle\">"
      << escape(panel.title) << "</text>\n";
  svg << "<text x=\"" << fmt("%.2f", f.left + f.width / 2) << "\" y=\"" << fmt("%.2f", fig.panel_height - 10.0)
      << "\" text-anchor=\"middle\">" << escape(panel.x_label) << "</text>\n";
  svg << "<text x=\"" << fmt("%.2f", offset_x + 14.0) << "\" y=\"" << fmt("%.2f", f.top + f.height / 2)
      << "\" text-anchor=\"middle\" transform=\"rotate(-90 " << fmt("%.2f", offset_x + 14.0) << " "
      << fmt("%.2f", f.top + f.height / 2) << ")\">" << escape(panel.y_label) << "</text>\n";

  // x ticks
  if (panel.log_x) {
    for (double d = std::ceil(x0); d <= x1 + 1e-12; d += 1.0) {
      const double X = f.px(d);
      svg << "<line x1=\"" << fmt("%.2f", X) << "\" y1=\"" << fmt("%.2f", f.top + f.height) << "\" x2=\""
          << fmt("%.2f", X) << "\" y2=\"" << fmt("%.2f", f.top + f.height + 5) << "\" stroke=\"#000\"/>\n";
      svg << "<text x=\"" << fmt("%.2f", X) << "\" y=\"" << fmt("%.2f", f.top + f.height + 18)
          << "\" text-anchor=\"middle\" font-size=\"11\">1e" << static_cast<int>(d) << "</text>\n";
    }
  } else {
    const double step = nice_step(x1 - x0, 5);
    for (double v = std::ceil(x0 / step) * step; v <= x1 + 1e-9 * step; v += step) {
      const double X = f.px(v);
      svg << "<line x1=\"" << fmt("%.2f", X) << "\" y1=\"" << fmt("%.2f", f.top + f.height) << "\" x2=\""
          << fmt("%.2f", X) << "\" y2=\"" << fmt("%.2f", f.top + f.height + 5) << "\" stroke=\"#000\"/>\n";
      svg << "<text x=\"" << fmt("%.2f", X) << "\" y=\"" << fmt("%.2f", f.top + f.height + 18)
          << "\" text-anchor=\"middle\" font-size=\"11\">" << fmt("%g", std::abs(v) < 1e-12 * step ? 0.0 : v)
          << "</text>\n";
    }
  }
  // y ticks
  const double ystep = nice_step(y1 - y0, 5);
  for (double v = std::ceil(y0 / ystep) * ystep; v <= y1 + 1e-9 * ystep; v += ystep) {
    const double Y = f.py(v);
    svg << "<line x1=\"" << fmt("%.2f", f.left - 5) << "\" y1=\"" << fmt("%.2f", Y) << "\" x2=\""
        << fmt("%.2f", f.left) << "\" y2=\"" << fmt("%.2f", Y) << "\" stroke=\"#000\"/>\n";
    svg << "<text x=\"" << fmt("%.2f", f.left - 8) << "\" y=\"" << fmt("%.2f", Y + 4)
        << "\" text-anchor=\"end\" font-size=\"11\">" << fmt("%g", std::abs(v) < 1e-12 * ystep ? 0.0 : v)
        << "</text>\n";
  }

  auto polyline = [&](const std::vector<std::pair<double, double>>& pts, const char* color, bool is_dashed,
                      const std::string& label) {
    if (pts.empty()) return;
    svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"" << (is_dashed ? "1.5" : "1")
        << "\"" << (is_dashed ? " stroke-dasharray=\"6,4\"" : "") << " points=\"";
    bool first = true;
    for (const auto& [x, y] : decimate(pts, f, fig.columns)) {
      svg << (first ? "" : " ") << fmt("%.2f", f.px(x)) << "," << fmt("%.2f", f.py(y));
      first = false;
    }
    svg << "\"><title>" << escape(label) << "</title></polyline>\n";
  };
  for (std::size_t i = 0; i < solid.size(); ++i) {
    polyline(solid[i], kPalette[i % 8], false, panel.series[i].label);
  }
  for (std::size_t i = 0; i < dashed.size(); ++i) polyline(dashed[i], "#000", true, panel.references[i].label);
  svg << "</g>\n";
}

}  // namespace

std::string render_svg(const SvgFigure& fig) {
  if (fig.panels.empty()) throw ConfigError("render_svg: figure has no panels");
  const int width = fig.panel_width * static_cast<int>(fig.panels.size());
  std::ostringstream body;
  std::size_t dropped = 0;
  for (std::size_t i = 0; i < fig.panels.size(); ++i) {
    if (fig.panels[i].series.empty() && fig.panels[i].references.empty()) {
      throw ConfigError("render_svg: panel " + std::to_string(i) + " has no series");
    }
    render_panel(body, fig.panels[i], static_cast<double>(i) * fig.panel_width, fig, dropped);
  }
  std::ostringstream svg;
  svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << width << "\" height=\""
      << fig.panel_height << "\" viewBox=\"0 0 " << width << " " << fig.panel_height
      << "\" font-family=\"sans-serif\" font-size=\"13\">\n";
  svg << "<!-- config-hash: " << fig.config_hash << " -->\n";
  svg << "<!-- dropped non-finite points: " << dropped << " -->\n";
  svg << "<metadata>config-hash: " << escape(fig.config_hash) << "</metadata>\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"#fff\"/>\n";
  svg << body.str();
  svg << "</svg>\n";
  return svg.str();
}

void emit_svg(const SvgFigure& fig, const fs::path& path) { write_text(path, render_svg(fig)); }

nlohmann::json campaign_json(const CampaignResult& result) {
  nlohmann::json j = {{"summary", to_json(result.summary)}};
  j["runs"] = nlohmann::json::array();
  for (const auto& run : result.runs) {
    nlohmann::json r = {{"index", run.index}, {"init", {run.init[0], run.init[1]}}};
    r["observation"] = run.observation ? to_json(*run.observation) : nlohmann::json(nullptr);
    r["contained"] = run.contained ? nlohmann::json(*run.contained) : nlohmann::json(nullptr);
    r["max_deviation"] = run.max_deviation;
    r["leave_time"] = run.leave_time ? nlohmann::json(*run.leave_time) : nlohmann::json(nullptr);
    r["error"] = run.error;
    j["runs"].push_back(r);
  }
  return j;
}

void write_campaign(const CampaignResult& result, const fs::path& dir) {
  char name[32];
  for (const auto& run : result.runs) {
    std::snprintf(name, sizeof name, "traj_%03zu.csv", run.index);
    emit_csv(run.record, dir / name);
  }
  emit_json(campaign_json(result), dir / "summary.json");
}

}  // namespace reslab
