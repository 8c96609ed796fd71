#include "reslab/config.hpp"

#include "reslab/bench.hpp"
#include "reslab/error.hpp"

#include <cinttypes>
#include <cstdio>
#include <set>

namespace reslab {

namespace {

void reject_unknown(const Json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw ConfigError("config: '" + where + "' must be an object");
  for (const auto& [key, _] : obj.items()) {
    if (!allowed.count(key)) throw ConfigError("config: unknown key '" + where + "." + key + "'");
  }
}

template <typename T>
void read(const Json& obj, const char* key, T& out, const std::string& where) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const Json::exception&) {
    throw ConfigError("config: bad value for '" + where + "." + key + "'");
  }
}

Vec2 read_pair(const Json& v, const std::string& where) {
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
    throw ConfigError("config: '" + where + "' must be a [rho, theta] pair");
  }
  return Vec2(v[0].get<double>(), v[1].get<double>());
}

Json pair_json(const Vec2& v) { return Json::array({v[0], v[1]}); }

}  // namespace

InitialState RunConfig::resolved_init(const SystemSpec& sys) const {
  if (const auto* p = std::get_if<PolarState>(&init)) {
    PolarState out = *p;
    out.t = integrator.t_start;
    if (init_is_theta) out.phi += sys.frame_ratio() * sys.drive.phase(out.t);
    return out;
  }
  CartesianState c = std::get<CartesianState>(init);
  c.t = integrator.t_start;
  return c;
}

RunConfig parse_config(const Json& doc) {
  RunConfig cfg;
  reject_unknown(doc, {"system", "init", "integrator", "quadrature", "detector", "campaign"}, "config");

  if (doc.contains("system")) {
    const Json& s = doc["system"];
    reject_unknown(s, {"family", "params"}, "system");
    read(s, "family", cfg.family, "system");
    if (s.contains("params")) {
      std::set<std::string> keys;
      for (const auto& [k, _] : default_params(cfg.family)) keys.insert(k);
      reject_unknown(s["params"], keys, "system.params");
      for (const auto& [k, v] : s["params"].items()) {
        if (!v.is_number()) throw ConfigError("config: parameter '" + k + "' must be a number");
        cfg.params[k] = v.get<double>();
      }
    }
  }
  // Fill defaults so the canonical form is explicit.
  Params full = default_params(cfg.family);
  for (const auto& [k, v] : cfg.params) full[k] = v;
  cfg.params = full;

  if (doc.contains("init")) {
    const Json& i = doc["init"];
    reject_unknown(i, {"rho", "theta", "x1", "x2"}, "init");
    if (i.contains("x1") || i.contains("x2")) {
      if (i.contains("rho") || i.contains("theta")) throw ConfigError("config: init mixes polar and Cartesian keys");
      CartesianState c{1.0, 0.0, 1.0};
      read(i, "x1", c.x1, "init");
      read(i, "x2", c.x2, "init");
      cfg.init = c;
    } else {
      PolarState p{1.0, 0.0, 1.0};
      read(i, "rho", p.rho, "init");
      read(i, "theta", p.phi, "init");
      cfg.init = p;
    }
  }

  if (doc.contains("integrator")) {
    const Json& g = doc["integrator"];
    reject_unknown(g, {"rel_tol", "abs_tol", "h_init", "h_max", "t_start", "t_end", "record_stride", "rho_floor"},
                   "integrator");
    IntegratorConfig& ic = cfg.integrator;
    read(g, "rel_tol", ic.rel_tol, "integrator");
    read(g, "abs_tol", ic.abs_tol, "integrator");
    read(g, "h_init", ic.h_init, "integrator");
    read(g, "h_max", ic.h_max, "integrator");
    read(g, "t_start", ic.t_start, "integrator");
    read(g, "t_end", ic.t_end, "integrator");
    read(g, "record_stride", ic.record_stride, "integrator");
    read(g, "rho_floor", ic.rho_floor, "integrator");
  }
  cfg.integrator.validate();

  if (doc.contains("quadrature")) {
    const Json& q = doc["quadrature"];
    reject_unknown(q, {"n_s", "n_s2", "fd_step"}, "quadrature");
    read(q, "n_s", cfg.quad1.n_s, "quadrature");
    read(q, "n_s2", cfg.quad2.n_s, "quadrature");
    read(q, "fd_step", cfg.quad2.fd_step, "quadrature");
    cfg.quad1.fd_step = cfg.quad2.fd_step;
  }
  cfg.quad1.validate();
  cfg.quad2.validate();

  CampaignConfig& cc = cfg.campaign;
  if (doc.contains("detector")) {
    const Json& d = doc["detector"];
    reject_unknown(d, {"slope_tol", "var_tol", "locked_tv", "drift_threshold", "monotone_fraction", "log_agreement",
                       "min_log_slope", "block_period", "min_decades"},
                   "detector");
    DetectorWindows& w = cc.windows;
    read(d, "slope_tol", w.slope_tol, "detector");
    read(d, "var_tol", w.var_tol, "detector");
    read(d, "locked_tv", w.locked_tv, "detector");
    read(d, "drift_threshold", w.drift_threshold, "detector");
    read(d, "monotone_fraction", w.monotone_fraction, "detector");
    read(d, "log_agreement", w.log_agreement, "detector");
    read(d, "min_log_slope", w.min_log_slope, "detector");
    read(d, "block_period", w.block_period, "detector");
    read(d, "min_decades", w.min_decades, "detector");
  }
  if (doc.contains("campaign")) {
    const Json& c = doc["campaign"];
    reject_unknown(c, {"inits", "ball", "epsilon", "t_contain", "reference"}, "campaign");
    if (c.contains("inits")) {
      if (!c["inits"].is_array()) throw ConfigError("config: 'campaign.inits' must be an array");
      for (const auto& v : c["inits"]) cc.inits.push_back(read_pair(v, "campaign.inits[]"));
    }
    if (c.contains("ball") && !c["ball"].is_null()) {
      const Json& b = c["ball"];
      reject_unknown(b, {"center", "radius", "count", "seed"}, "campaign.ball");
      InitBall ball;
      if (b.contains("center")) ball.center = read_pair(b["center"], "campaign.ball.center");
      read(b, "radius", ball.radius, "campaign.ball");
      read(b, "count", ball.count, "campaign.ball");
      read(b, "seed", ball.seed, "campaign.ball");
      cc.ball = ball;
    }
    read(c, "epsilon", cc.epsilon, "campaign");
    read(c, "t_contain", cc.t_contain, "campaign");
    if (c.contains("reference") && !c["reference"].is_null()) cc.reference = read_pair(c["reference"], "campaign.reference");
  }
  cc.family = cfg.family;
  cc.params = cfg.params;
  cc.integrator = cfg.integrator;
  cc.validate();
  return cfg;
}

Json to_json(const IntegratorConfig& c) {
  return {{"rel_tol", c.rel_tol}, {"abs_tol", c.abs_tol}, {"h_init", c.h_init},   {"h_max", c.h_max},
          {"t_start", c.t_start}, {"t_end", c.t_end},     {"record_stride", c.record_stride}, {"rho_floor", c.rho_floor}};
}

Json to_json(const DetectorWindows& w) {
  return {{"slope_tol", w.slope_tol},
          {"var_tol", w.var_tol},
          {"locked_tv", w.locked_tv},
          {"drift_threshold", w.drift_threshold},
          {"monotone_fraction", w.monotone_fraction},
          {"log_agreement", w.log_agreement},
          {"min_log_slope", w.min_log_slope},
          {"block_period", w.block_period},
          {"min_decades", w.min_decades}};
}

Json to_json(const RunConfig& cfg) {
  Json doc;
  doc["system"] = {{"family", cfg.family}, {"params", cfg.params}};
  if (const auto* p = std::get_if<PolarState>(&cfg.init)) {
    doc["init"] = {{"rho", p->rho}, {"theta", p->phi}};
  } else {
    const auto& c = std::get<CartesianState>(cfg.init);
    doc["init"] = {{"x1", c.x1}, {"x2", c.x2}};
  }
  doc["integrator"] = to_json(cfg.integrator);
  doc["quadrature"] = {{"n_s", cfg.quad1.n_s}, {"n_s2", cfg.quad2.n_s}, {"fd_step", cfg.quad2.fd_step}};
  doc["detector"] = to_json(cfg.campaign.windows);
  Json camp;
  camp["inits"] = Json::array();
  for (const auto& v : cfg.campaign.inits) camp["inits"].push_back(pair_json(v));
  if (cfg.campaign.ball) {
    const InitBall& b = *cfg.campaign.ball;
    camp["ball"] = {{"center", pair_json(b.center)}, {"radius", b.radius}, {"count", b.count}, {"seed", b.seed}};
  } else {
    camp["ball"] = nullptr;
  }
  camp["epsilon"] = cfg.campaign.epsilon;
  camp["t_contain"] = cfg.campaign.t_contain;
  camp["reference"] = cfg.campaign.reference ? pair_json(*cfg.campaign.reference) : Json(nullptr);
  doc["campaign"] = camp;
  return doc;
}

std::string config_hash(const RunConfig& cfg) {
  const std::string text = to_json(cfg).dump();
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
  return buf;
}

Json to_json(const RegimeObservation& obs) {
  Json j = {{"amplitude", to_string(obs.amplitude)},
            {"phase", to_string(obs.phase)},
            {"rho_inf", obs.rho_inf},
            {"tail_slope", obs.tail_slope},
            {"tail_var", obs.tail_var},
            {"log_slope", obs.log_slope},
            {"theta_inf", obs.theta_inf},
            {"theta_tv", obs.theta_tv},
            {"theta_advance", obs.theta_advance},
            {"monotone", obs.monotone},
            {"winding_sign", obs.winding_sign}};
  j["exit_time"] = obs.exit_time ? Json(*obs.exit_time) : Json(nullptr);
  return j;
}

Json to_json(const FixedPointReport& fp) {
  return {{"rho_star", fp.rho_star},
          {"phi_star", fp.phi_star},
          {"n", fp.n},
          {"m", fp.m},
          {"q", fp.q},
          {"lambda_n", fp.lambda_n},
          {"nu_n", fp.nu_n},
          {"eta_m", fp.eta_m},
          {"omega_m", fp.omega_m},
          {"det_D", fp.det_D},
          {"alpha1", {fp.alpha1.real(), fp.alpha1.imag()}},
          {"alpha2", {fp.alpha2.real(), fp.alpha2.imag()}},
          {"beta1", fp.beta1},
          {"beta2", fp.beta2},
          {"defective", fp.defective},
          {"degenerate", fp.degenerate},
          {"residual", {fp.residual[0], fp.residual[1]}}};
}

Json to_json(const DriftReport& dr) {
  return {{"rho_star", dr.rho_star},   {"n", dr.n},
          {"m", dr.m},                 {"ell_min", dr.ell_min},
          {"ell_max", dr.ell_max},     {"omega_min_abs", dr.omega_min_abs},
          {"omega_sign", dr.omega_sign}, {"lambda_sup", dr.lambda_sup}};
}

Json to_json(const RegimeClassification& c) {
  Json j = {{"kind", to_string(c.kind)}, {"basis", c.basis}, {"rho_star", c.rho_star}};
  j["phi_star"] = c.phi_star ? Json(*c.phi_star) : Json(nullptr);
  return j;
}

Json to_json(const CampaignSummary& s) {
  Json j = {{"config_hash", s.config_hash}, {"count", s.count},         {"steady", s.steady},
            {"log_growth", s.log_growth},   {"escaped", s.escaped},     {"locked", s.locked},
            {"drifting", s.drifting},       {"failed", s.failed},       {"contained", s.contained},
            {"contained_fraction", s.contained_fraction}, {"prediction_agrees", s.prediction_agrees}};
  if (s.prediction) {
    Json p = {{"classification", to_json(s.prediction->classification)}};
    p["lock"] = s.prediction->lock ? to_json(*s.prediction->lock) : Json(nullptr);
    p["drift"] = s.prediction->drift ? to_json(*s.prediction->drift) : Json(nullptr);
    j["prediction"] = p;
  } else {
    j["prediction"] = nullptr;
  }
  return j;
}

}  // namespace reslab
