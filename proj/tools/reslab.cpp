// reslab: command-line front end.
//   simulate <config>          one trajectory -> CSV
//   average <config>           Lambda/Omega grids (+ closed-form comparison), or a CSV dump with --out x.csv
//   analyze <config>           fixed points, drift, classification
//   campaign <config>          ensemble -> <out>/<hash>/
//   reproduce-figure <id>      canned figure configs -> <out>/fig<id>/
// Exit codes: 0 ok, 1 config error, 2 numerical failure.

#include "reslab/analysis.hpp"
#include "reslab/averaging.hpp"
#include "reslab/bench.hpp"
#include "reslab/campaign.hpp"
#include "reslab/config.hpp"
#include "reslab/error.hpp"
#include "reslab/report.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>

using namespace reslab;
namespace fs = std::filesystem;

namespace {

struct Overrides {
  std::optional<double> tol;
  std::optional<double> t_end;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  bool dump = false;
  std::string out;
};

Json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path);
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

// Overrides go into the document so they are part of the hash.
RunConfig resolve(Json doc, const Overrides& o) {
  if (!doc.is_object()) throw ConfigError("config: top level must be an object");
  if (o.tol) {
    doc["integrator"]["rel_tol"] = *o.tol;
    doc["integrator"]["abs_tol"] = *o.tol * 1e-2;
  }
  if (o.t_end) doc["integrator"]["t_end"] = *o.t_end;
  if (o.seed) {
    if (!doc.contains("campaign") || !doc["campaign"].contains("ball") || doc["campaign"]["ball"].is_null()) {
      throw ConfigError("--seed needs a campaign.ball section");
    }
    doc["campaign"]["ball"]["seed"] = *o.seed;
  }
  RunConfig cfg = parse_config(doc);
  cfg.campaign.threads = 1;
  if (o.threads) {
    cfg.campaign.threads = *o.threads;
  } else if (const char* env = std::getenv("RESONANCE_LAB_THREADS")) {
    char* end = nullptr;
    const long n = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || n < 1) throw ConfigError("RESONANCE_LAB_THREADS must be a positive integer");
    cfg.campaign.threads = static_cast<int>(n);
  }
  if (cfg.campaign.threads < 1) throw ConfigError("--threads must be >= 1");
  return cfg;
}

void write_or_print(const Json& doc, const std::string& out) {
  if (out.empty()) {
    std::cout << doc.dump(2) << "\n";
  } else {
    emit_json(doc, out);
  }
}

int cmd_simulate(const RunConfig& cfg, const std::string& out) {
  const BenchFamily fam = build(cfg.family, cfg.params);
  TrajectoryRecord rec = integrate(fam.system, cfg.resolved_init(fam.system), cfg.integrator);
  rec.meta.config_hash = config_hash(cfg);
  if (out.empty()) {
    std::cout << csv_text(rec);
  } else {
    emit_csv(rec, out);
  }
  if (rec.exit_time) std::cerr << "trajectory left the domain at t = " << *rec.exit_time << "\n";
  return 0;
}

int cmd_average(const RunConfig& cfg, const std::string& out) {
  const BenchFamily fam = build(cfg.family, cfg.params);
  const AveragedField avg = average(fam.system, cfg.quad1, cfg.quad2);
  const int nr = 20, np = 20;
  const Eigen::VectorXd r = Eigen::VectorXd::LinSpaced(nr, avg.r_max / nr, avg.r_max);
  const Eigen::VectorXd psi = Eigen::VectorXd::LinSpaced(np, -kPi, kPi * (np - 2) / np);
  Json doc = {{"config_hash", config_hash(cfg)}, {"q", avg.q}, {"n", avg.n}, {"m", avg.m}, {"warnings", avg.warnings}};
  Json orders = Json::object();
  for (const auto& [k, _] : avg.entries) {
    const Eigen::MatrixXd g = grid_dump(avg, k, r, psi);
    Json rows = Json::array();
    for (Eigen::Index i = 0; i < g.rows(); ++i) rows.push_back({g(i, 0), g(i, 1), g(i, 2), g(i, 3)});
    Json entry = {{"columns", {"r", "psi", "Lambda", "Omega"}}, {"rows", rows}};
    if (fam.closed_form.has(k)) {
      double err = 0.0;
      for (Eigen::Index i = 0; i < g.rows(); ++i) {
        const Vec2 cf = fam.closed_form(k, g(i, 0), g(i, 1));
        err = std::max({err, std::abs(cf[0] - g(i, 2)), std::abs(cf[1] - g(i, 3))});
      }
      entry["closed_form_max_error"] = err;
    }
    orders[std::to_string(k)] = entry;
  }
  doc["orders"] = orders;
  if (fs::path(out).extension() == ".csv") {
    emit_grid_csv(avg, r, psi, out);
  } else {
    write_or_print(doc, out);
  }
  return 0;
}

int cmd_analyze(const RunConfig& cfg, const std::string& out) {
  const BenchFamily fam = build(cfg.family, cfg.params);
  const AveragedField avg = average(fam.system, cfg.quad1, cfg.quad2);
  Json doc = {{"config_hash", config_hash(cfg)},
              {"family", cfg.family},
              {"params", cfg.params},
              {"q", avg.q},
              {"n", avg.n},
              {"m", avg.m},
              {"warnings", avg.warnings},
              {"regime_expected", to_string(fam.regime)}};
  Json fps = Json::array();
  for (const FixedPointReport& fp : find_fixed_points(avg)) {
    Json j = to_json(fp);
    j["classification"] = to_json(classify(fp));
    try {
      const AsymptoticCorrection ac = asymptotic_correction(avg, fp);
      j["correction"] = {{"xi1", ac.xi1}, {"zeta1", ac.zeta1}};
    } catch (const NumericalError& e) {
      j["correction"] = {{"unavailable", e.what()}};
    }
    fps.push_back(j);
  }
  doc["fixed_points"] = fps;
  Json drifts = Json::array();
  for (const DriftReport& dr : detect_drift(avg)) {
    Json j = to_json(dr);
    j["classification"] = to_json(classify(dr));
    drifts.push_back(j);
  }
  doc["drift"] = drifts;
  write_or_print(doc, out);
  return 0;
}

void print_summary(const CampaignSummary& s, const fs::path& dir) {
  std::cout << "runs " << s.count << ": steady " << s.steady << ", log-growth " << s.log_growth << ", locked "
            << s.locked << ", drifting " << s.drifting << ", escaped " << s.escaped << ", failed " << s.failed
            << "; contained " << s.contained << "\n"
            << "written to " << dir.string() << "\n";
}

int cmd_campaign(const RunConfig& cfg, const std::string& out) {
  CampaignConfig cc = cfg.campaign;
  const std::string hash = config_hash(cfg);
  CampaignResult res = run_campaign(cc);
  res.summary.config_hash = hash;
  const fs::path dir = fs::path(out.empty() ? "runs" : out) / hash;
  write_campaign(res, dir);
  print_summary(res.summary, dir);
  return res.summary.failed == 0 ? 0 : 2;
}

// Canned figure setups.
struct FigureSpec {
  Json doc;
  std::string title;
  bool theta_panel = true;
  bool log_reference = false;
  std::optional<double> rho_ref;
  std::optional<double> theta_ref;
};

FigureSpec figure_spec(const std::string& id) {
  const double rho13 = 2.0 / std::sqrt(3.0);
  FigureSpec f;
  Json integrator = {{"t_end", 1e5}, {"record_stride", 200}};
  auto ball = [](double rho, double theta, double radius, int count) {
    return Json{{"center", {rho, theta}}, {"radius", radius}, {"count", count}, {"seed", 1}};
  };
  const Json spread_inits = Json::array({{0.4, 0.0}, {0.8, 1.5}, {1.2, -1.5}, {1.6, 3.0}, {2.0, -3.0}});
  if (id == "1a" || id == "1b" || id == "1c") {
    Json p = {{"a", 1.0}, {"b", 2.0}, {"c", 0.0}, {"s0", 1.0}, {"s1", 0.0}};
    if (id == "1b") p["s0"] = std::sqrt(2.0);
    if (id == "1c") p["c"] = -1.0;
    f.doc = {{"system", {{"family", "ex1"}, {"params", p}}},
             {"integrator", integrator},
             {"campaign", {{"inits", spread_inits}}}};
    f.title = id == "1a" ? "c = 0" : (id == "1b" ? "s0 = sqrt 2" : "s0 = 1");
    f.theta_panel = false;
    f.log_reference = true;
  } else if (id == "2") {
    f.doc = {{"system", {{"family", "ex1"}}},
             {"integrator", integrator},
             {"campaign", {{"ball", ball(rho13, -kPi, 0.3, 5)}}}};
    f.title = "ex1: a = 1, b = 2, c = -1";
    f.rho_ref = rho13;
    f.theta_ref = -kPi;
  } else if (id == "3" || id == "4") {
    const double s1 = id == "3" ? 0.5 : 0.0;
    const double theta = id == "3" ? 0.0 : kPi / 4 - kPi;
    f.doc = {{"system", {{"family", "ex2"}, {"params", {{"s1", s1}}}}},
             {"integrator", integrator},
             {"campaign", {{"ball", ball(1.0, theta, 0.2, 5)}}}};
    f.title = id == "3" ? "ex2: s1 = 1/2" : "ex2: s1 = 0";
    f.rho_ref = 1.0;
    if (id == "4") f.theta_ref = kPi / 4 - kPi;
  } else if (id == "5" || id == "6") {
    const double s2 = id == "5" ? -0.125 : 2.0;
    const double theta = id == "5" ? kPi / 4 - kPi : 0.0;
    f.doc = {{"system", {{"family", "ex3"}, {"params", {{"s2", s2}}}}},
             {"integrator", integrator},
             {"campaign", {{"ball", ball(rho13, theta, 0.2, 5)}}}};
    f.title = id == "5" ? "ex3: s2 = -1/8" : "ex3: s2 = 2";
    f.rho_ref = rho13;
    if (id == "5") f.theta_ref = kPi / 4 - kPi;
  } else {
    throw ConfigError("unknown figure '" + id + "' (expected 1a, 1b, 1c, 2, 3, 4, 5 or 6)");
  }
  return f;
}

Series constant_series(const std::string& label, double t0, double t1, double y) {
  return Series{label, {t0, t1}, {y, y}};
}

int cmd_figure(const std::string& id, const Overrides& o) {
  if (o.out.empty()) throw ConfigError("reproduce-figure needs --out");
  const FigureSpec spec = figure_spec(id);
  const RunConfig cfg = resolve(spec.doc, o);
  if (o.dump) {
    std::cout << to_json(cfg).dump(2) << "\n";
    return 0;
  }
  const std::string hash = config_hash(cfg);
  CampaignResult res = run_campaign(cfg.campaign);
  res.summary.config_hash = hash;
  const fs::path dir = fs::path(o.out) / ("fig" + id);
  write_campaign(res, dir);
  emit_json(to_json(cfg), dir / "config.json");

  Panel rho_panel{"rho(t), " + spec.title, "t", "rho", true, {}, {}};
  Panel theta_panel{"theta(t), " + spec.title, "t", "theta", true, {}, {}};
  const double t0 = cfg.integrator.t_start, t1 = cfg.integrator.t_end;
  for (const auto& run : res.runs) {
    const std::string label = "init " + std::to_string(run.index);
    std::vector<double> t, rho, theta;
    for (const Sample& s : run.record.samples) {
      t.push_back(s.t);
      rho.push_back(s.rho);
      theta.push_back(s.theta);
    }
    rho_panel.series.push_back({label, t, rho});
    theta_panel.series.push_back({label, std::move(t), std::move(theta)});
  }
  if (spec.log_reference) {
    Series ref{"(1/2) log t", {}, {}};
    for (int i = 0; i <= 200; ++i) {
      const double t = t0 * std::pow(t1 / t0, i / 200.0);
      ref.x.push_back(t);
      ref.y.push_back(0.5 * std::log(t));
    }
    rho_panel.references.push_back(std::move(ref));
  }
  if (spec.rho_ref) rho_panel.references.push_back(constant_series("rho*", t0, t1, *spec.rho_ref));
  if (spec.theta_ref) theta_panel.references.push_back(constant_series("theta*", t0, t1, *spec.theta_ref));

  SvgFigure fig;
  fig.config_hash = hash;
  fig.panels.push_back(std::move(rho_panel));
  if (spec.theta_panel) fig.panels.push_back(std::move(theta_panel));
  emit_svg(fig, dir / ("fig" + id + ".svg"));
  print_summary(res.summary, dir);
  return res.summary.failed == 0 ? 0 : 2;
}

void add_common(CLI::App* sub, Overrides& o, bool needs_out) {
  auto* out = sub->add_option("--out", o.out, "output file (simulate/average/analyze) or directory");
  if (needs_out) out->required();
  sub->add_option("--tol", o.tol, "integrator rel_tol (abs_tol = tol/100); default 1e-9")->check(CLI::PositiveNumber);
  sub->add_option("--t-end", o.t_end, "integration end time; default 1e3 (figures 1e5)");
  sub->add_option("--seed", o.seed, "campaign ball seed; default 1");
  sub->add_option("--threads", o.threads, "campaign worker threads; default $RESONANCE_LAB_THREADS or 1");
  sub->add_flag("--dump-config", o.dump, "print the canonical config and exit");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Resonance laboratory: averaging, fixed-point analysis and simulation of decaying oscillatory "
               "perturbations of isochronous systems.\n"
               "Config files are JSON with sections system {family, params}, init {rho, theta | x1, x2}, "
               "integrator, quadrature, detector, campaign; missing fields take defaults (see --dump-config)."};
  app.require_subcommand(1);
  Overrides o;
  std::string config_path, figure;

  struct Cmd {
    const char* name;
    const char* help;
    int (*run)(const RunConfig&, const std::string&);
  };
  const Cmd cmds[] = {{"simulate", "integrate one trajectory and write CSV (t,x1,x2,rho,theta)", cmd_simulate},
                      {"average", "averaged coefficient grids and closed-form comparison (JSON, or CSV when --out ends in .csv)", cmd_average},
                      {"analyze", "fixed points, drift candidates and their classification", cmd_analyze},
                      {"campaign", "ensemble run; writes <out>/<config hash>/", cmd_campaign}};
  std::vector<std::pair<CLI::App*, const Cmd*>> subs;
  for (const Cmd& c : cmds) {
    CLI::App* sub = app.add_subcommand(c.name, c.help);
    sub->add_option("config", config_path, "JSON config file")->required();
    add_common(sub, o, false);
    subs.emplace_back(sub, &c);
  }
  CLI::App* fig = app.add_subcommand("reproduce-figure", "run a canned figure config; writes <out>/fig<id>/");
  fig->add_option("figure", figure, "1a, 1b, 1c, 2, 3, 4, 5 or 6")->required();
  add_common(fig, o, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (fig->parsed()) return cmd_figure(figure, o);
    for (const auto& [sub, cmd] : subs) {
      if (!sub->parsed()) continue;
      const RunConfig cfg = resolve(load_json(config_path), o);
      if (o.dump) {
        std::cout << to_json(cfg).dump(2) << "\n";
        return 0;
      }
      return cmd->run(cfg, o.out);
    }
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
