#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "reslab/error.hpp"
#include "reslab/report.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace reslab;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t count(const std::string& hay, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = hay.find(needle); pos != std::string::npos; pos = hay.find(needle, pos + 1)) ++n;
  return n;
}

SvgFigure simple_figure() {
  SvgFigure fig;
  fig.config_hash = "0123456789abcdef";
  Panel p;
  p.title = "rho(t)";
  p.y_label = "rho";
  p.series.push_back({"run", {1.0, 2.0, 3.0, 4.0}, {1.0, 1.0, 1.0, 1.0}});
  p.references.push_back({"rho*", {1.0, 4.0}, {1.0, 1.0}});
  fig.panels.push_back(p);
  return fig;
}

fs::path scratch(const std::string& name) { return fs::temp_directory_path() / "reslab_report_test" / name; }

}  // namespace

TEST_CASE("CSV layout") {
  TrajectoryRecord rec;
  CHECK(csv_text(rec) == "t,x1,x2,rho,theta\n");
  rec.samples = {{1.0, 1.0, 0.0, 1.0, -1.0}, {1.5, 0.5, -0.25, 0.559, -1.0}, {2.0, 0.0, -1.0, 1.0, -1.0}};
  const std::string text = csv_text(rec);
  CHECK(count(text, "\n") == 4);
  CHECK(text.rfind("t,x1,x2,rho,theta\n1,1,0,1,-1\n", 0) == 0);

  const fs::path path = scratch("three.csv");
  emit_csv(rec, path);
  CHECK(slurp(path) == text);
  const TrajectoryRecord back = read_csv(path);
  REQUIRE(back.size() == 3);
  CHECK(back.samples[1].rho == 0.559);
  CHECK(back.samples[1].x2 == -0.25);

  emit_csv(TrajectoryRecord{}, scratch("empty.csv"));
  CHECK(slurp(scratch("empty.csv")) == "t,x1,x2,rho,theta\n");
}

TEST_CASE("CSV round trip is exact") {
  TrajectoryRecord rec;
  for (int i = 0; i < 100; ++i) {
    const double t = 1.0 + 0.1 * i;
    rec.samples.push_back({t, std::cos(t), -std::sin(t), 1.0 / 3.0 + t * 1e-17, std::atan(t) * 1e5});
  }
  emit_csv(rec, scratch("exact.csv"));
  const TrajectoryRecord back = read_csv(scratch("exact.csv"));
  REQUIRE(back.size() == rec.size());
  for (std::size_t i = 0; i < rec.size(); ++i) {
    CHECK(back.samples[i].t == rec.samples[i].t);
    CHECK(back.samples[i].x1 == rec.samples[i].x1);
    CHECK(back.samples[i].rho == rec.samples[i].rho);
    CHECK(back.samples[i].theta == rec.samples[i].theta);
  }
}

TEST_CASE("I/O failures carry the path") {
  const fs::path blocker = scratch("blocker");
  { std::ofstream(blocker) << "x"; }
  try {
    emit_csv(TrajectoryRecord{}, blocker / "sub" / "out.csv");
    FAIL("expected IoError");
  } catch (const IoError& e) {
    CHECK(std::string(e.what()).find("blocker") != std::string::npos);
  }
  CHECK_THROWS_AS(read_csv(scratch("missing.csv")), IoError);
  { std::ofstream(scratch("bad.csv")) << "t,x1,x2,rho,theta\n1,2,3\n"; }
  CHECK_THROWS_AS(read_csv(scratch("bad.csv")), IoError);
}

TEST_CASE("SVG with a series and a matching reference") {
  const std::string svg = render_svg(simple_figure());
  CHECK(count(svg, "<polyline") == 2);
  CHECK(count(svg, "stroke-dasharray") == 1);
  CHECK(svg.find("config-hash: 0123456789abcdef") != std::string::npos);
  CHECK(svg.find("dropped non-finite points: 0") != std::string::npos);
  CHECK(svg.find("<svg xmlns=\"http://www.w3.org/2000/svg\"") != std::string::npos);
}

TEST_CASE("SVG output is deterministic and matches the golden file") {
  const std::string a = render_svg(simple_figure());
  CHECK(a == render_svg(simple_figure()));
  const std::string golden = slurp(fs::path(RESLAB_GOLDEN_DIR) / "simple.svg");
  CHECK(a == golden);
}

TEST_CASE("non-finite points are dropped and counted") {
  SvgFigure fig = simple_figure();
  fig.panels[0].series[0].y[1] = NAN;
  fig.panels[0].series[0].y[2] = INFINITY;
  const std::string svg = render_svg(fig);
  CHECK(svg.find("dropped non-finite points: 2") != std::string::npos);
  CHECK(svg.find("nan") == std::string::npos);
  CHECK(svg.find("inf") == std::string::npos);
}

TEST_CASE("log axis and decimation") {
  SvgFigure fig;
  Panel p;
  p.title = "rho(t)";
  p.log_x = true;
  Series s{"log", {}, {}};
  for (int i = 0; i <= 100000; ++i) {
    const double t = std::pow(10.0, 5.0 * i / 100000);
    s.x.push_back(t);
    s.y.push_back(0.5 * std::log(t) + 0.01 * std::sin(t));
  }
  p.series.push_back(s);
  p.series.push_back({"with zero", {0.0, 1.0, 10.0}, {0.0, 0.0, 1.0}});
  fig.panels.push_back(p);
  const std::string svg = render_svg(fig);
  CHECK(svg.find(">1e0<") != std::string::npos);
  CHECK(svg.find(">1e5<") != std::string::npos);
  CHECK(svg.find("dropped non-finite points: 1") != std::string::npos);  // t = 0 on a log axis
  CHECK(svg.size() < 200000);
}

TEST_CASE("figure without series is rejected") {
  SvgFigure fig;
  CHECK_THROWS_AS(render_svg(fig), ConfigError);
  fig.panels.push_back(Panel{});
  CHECK_THROWS_AS(render_svg(fig), ConfigError);
}

TEST_CASE("JSON emission") {
  emit_json(nlohmann::json{{"a", 1}}, scratch("doc.json"));
  CHECK(slurp(scratch("doc.json")) == "{\n  \"a\": 1\n}\n");
}

TEST_CASE("averaged grid CSV") {
  AveragedField avg;
  avg.entries[1] = [](double r, double psi) { return Vec2(r, psi); };
  avg.entries[2] = [](double r, double) { return Vec2(-r, 0.5); };
  const Eigen::Vector2d r(1.0, 2.0);
  const Eigen::Vector2d psi(0.0, 0.25);
  const std::string text = grid_csv_text(avg, r, psi);
  CHECK(text ==
        "k,r,psi,lambda_k,omega_k\n"
        "1,1,0,1,0\n1,1,0.25,1,0.25\n1,2,0,2,0\n1,2,0.25,2,0.25\n"
        "2,1,0,-1,0.5\n2,1,0.25,-1,0.5\n2,2,0,-2,0.5\n2,2,0.25,-2,0.5\n");
  emit_grid_csv(avg, r, psi, scratch("grid.csv"));
  CHECK(slurp(scratch("grid.csv")) == text);
}
