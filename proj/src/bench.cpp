#include "reslab/bench.hpp"

#include "reslab/error.hpp"

#include <cmath>
#include <set>

namespace reslab {

const char* to_string(BenchRegime regime) {
  switch (regime) {
    case BenchRegime::Lock: return "lock";
    case BenchRegime::Drift: return "drift";
    case BenchRegime::None: return "none";
  }
  return "none";
}

Params default_params(const std::string& name) {
  if (name == "ex1") return {{"a", 1.0}, {"b", 2.0}, {"c", -1.0}, {"s0", 1.0}, {"s1", 0.0}};
  if (name == "ex2") return {{"b0", 1.5}, {"b1", 1.0}, {"c0", -2.0}, {"c1", -1.0}, {"s1", 0.0}};
  if (name == "ex3") return {{"b0", 1.0}, {"b1", 1.0}, {"c0", -1.0}, {"s2", -0.125}};
  throw ConfigError("bench: unknown family '" + name + "' (expected ex1, ex2 or ex3)");
}

namespace {

Params merge(const std::string& name, const Params& given) {
  Params p = default_params(name);
  for (const auto& [key, value] : given) {
    if (!p.count(key)) throw ConfigError("bench: family '" + name + "' has no parameter '" + key + "'");
    if (!std::isfinite(value)) throw ConfigError("bench: parameter '" + key + "' is not finite");
    p[key] = value;
  }
  return p;
}

// Forcing x2'' term p(x2, S, t) turned into the polar term pair.
PerturbationTerm polar_term(int k, std::function<double(double, double)> Z) {
  PerturbationTerm term;
  term.k = k;
  term.f = [Z](double rho, double phi, double S) { return -Z(-rho * std::sin(phi), S) * std::sin(phi); };
  term.g = [Z](double rho, double phi, double S) {
    return -Z(-rho * std::sin(phi), S) * std::cos(phi) / rho;
  };
  return term;
}

void finish_lock(BenchFamily& fam, std::vector<FixedPointReport> branches) {
  for (auto& fp : branches) {
    fp.n = fam.closed_form.n;
    fp.m = fam.closed_form.m;
    fp.q = fam.closed_form.q;
    fp.phi_star = wrap_angle(fp.phi_star);
    fp.residual = Vec2(fam.closed_form.lambda(fp.n, fp.rho_star, fp.phi_star),
                       fam.closed_form.omega(fp.m, fp.rho_star, fp.phi_star));
    fill_stability(fp);
  }
  std::sort(branches.begin(), branches.end(), [](const auto& a, const auto& b) { return a.phi_star < b.phi_star; });
  fam.predicted_lock = std::move(branches);
}

BenchFamily build_ex1(const Params& p) {
  const double a = p.at("a"), b = p.at("b"), c = p.at("c"), s0 = p.at("s0"), s1 = p.at("s1");
  if (!(s0 > 0.0)) throw ConfigError("bench ex1: s0 must be positive");
  BenchFamily fam;
  fam.name = "ex1";
  fam.params = p;
  auto Z = [a, b, c](double x, double S) { return (a + b * x + c * x * x) * std::sin(S); };

  SystemSpec& sys = fam.system;
  sys.name = "ex1";
  sys.omega = 1.0;
  sys.drive = power_series_drive(s0, 1, {{1, s1}});
  sys.resonance = check_resonance(s0, 1.0);
  sys.terms.push_back(polar_term(1, Z));
  const DrivePhase drive = sys.drive;
  sys.cartesian_rhs = [Z, drive](double x1, double x2, double t) {
    return Vec2(x2, -x1 + Z(x2, drive.phase(t)) / t);
  };

  const bool ac_neg = a * c < 0.0;
  const bool s1_ok = 12.0 * s1 * s1 < std::abs(a * c);
  fam.validity = {{"resonant with kappa = varkappa = 1", s0 == 1.0}, {"ac < 0", ac_neg}, {"12 s1^2 < |ac|", s1_ok}};
  fam.conditions = {"lock with rho* = sqrt(-4a/(3c)), phi* = (-1)^k theta* + pi k, theta* = arcsin(3 s1 rho*/a)",
                    "stable when (-1)^k c > 0, unstable when (-1)^k c < 0"};

  AveragedField& cf = fam.closed_form;
  cf.q = 1;
  cf.r_max = sys.r_max;
  cf.source = AveragingSource::ClosedForm;
  if (s0 != 1.0) return fam;
  cf.n = cf.m = 1;
  cf.entries[1] = [a, c, s1](double r, double psi) {
    return Vec2(-(4.0 * a + 3.0 * c * r * r) * std::cos(psi) / 8.0,
                -s1 + (4.0 * a + c * r * r) * std::sin(psi) / (8.0 * r));
  };
  cf.entries[2] = [a, b, c](double r, double psi) {
    const double cs2 = std::cos(psi) * std::cos(psi);
    return Vec2(-r * a * c * std::sin(2.0 * psi) / 16.0,
                -r * r * c * c * cs2 / 16.0 - r * r * c * c / 128.0 - a * c * cs2 / 8.0 + a * c / 16.0 -
                    b * b / 12.0);
  };
  if (!(ac_neg && s1_ok)) return fam;

  fam.regime = BenchRegime::Lock;
  const double rho = std::sqrt(-4.0 * a / (3.0 * c));
  const double theta = std::asin(3.0 * s1 * rho / a);
  std::vector<FixedPointReport> branches;
  for (int k = 0; k < 2; ++k) {
    FixedPointReport fp;
    fp.rho_star = rho;
    fp.phi_star = (k % 2 ? -theta : theta) + kPi * k;
    const double cphi = std::cos(fp.phi_star);
    fp.lambda_n = -3.0 * c * rho * cphi / 4.0;
    fp.nu_n = 0.0;
    fp.eta_m = c * std::sin(fp.phi_star) / 2.0;
    fp.omega_m = -c * rho * cphi / 4.0;
    branches.push_back(fp);
  }
  finish_lock(fam, std::move(branches));
  return fam;
}

BenchFamily build_ex2(const Params& p) {
  const double b0 = p.at("b0"), b1 = p.at("b1"), c0 = p.at("c0"), c1 = p.at("c1"), s1 = p.at("s1");
  BenchFamily fam;
  fam.name = "ex2";
  fam.params = p;
  auto Z = [b0, b1, c0, c1](double x, double S) {
    const double sS = std::sin(S);
    return ((b0 + b1 * sS) + (c0 + c1 * sS) * x * x) * x;
  };

  SystemSpec& sys = fam.system;
  sys.name = "ex2";
  sys.omega = 1.0;
  sys.drive = power_series_drive(2.0, 2, {{1, s1}});
  sys.resonance = ResonanceData{1, 2, 1.0};
  sys.terms.push_back(polar_term(1, Z));
  const DrivePhase drive = sys.drive;
  sys.cartesian_rhs = [Z, drive](double x1, double x2, double t) {
    return Vec2(x2, -x1 + Z(x2, drive.phase(t)) / std::sqrt(t));
  };

  const double delta = b1 != 0.0 ? 2.0 * b0 / b1 : std::numeric_limits<double>::quiet_NaN();
  const bool delta_ok = c1 != 0.0 && std::abs(3.0 * c0 / (2.0 * c1) - delta) < 1e-12 * std::max(1.0, std::abs(delta));
  const bool bc_neg = b1 * c1 < 0.0;
  fam.validity = {{"2 b0/b1 = 3 c0/(2 c1) = delta", delta_ok},
                  {"delta > 1", delta_ok && delta > 1.0},
                  {"b1 c1 < 0", bc_neg},
                  {"|b1| > 4|s1| (lock)", std::abs(b1) > 4.0 * std::abs(s1)},
                  {"|b1| < 4|s1| (drift)", std::abs(b1) < 4.0 * std::abs(s1)}};
  fam.conditions = {"lock: rho* = sqrt(-b1/c1), phi* = +-theta* + pi k, theta* = arccos(4 s1/b1)/2; stable iff "
                    "lambda_n < 0 and omega_m = -b1 sin(2 phi*)/4 < 0",
                    "drift: ell_n = -b1 (delta + sin 2 psi)/2; stable iff b1 > 0"};

  AveragedField& cf = fam.closed_form;
  cf.q = 2;
  cf.n = cf.m = 1;
  cf.r_max = sys.r_max;
  cf.source = AveragingSource::ClosedForm;
  cf.entries[1] = [b0, b1, c0, c1, s1](double r, double psi) {
    return Vec2(r / 8.0 * (4.0 * b0 + 3.0 * c0 * r * r + 2.0 * (b1 + c1 * r * r) * std::sin(2.0 * psi)),
                (-4.0 * s1 + (2.0 * b1 + c1 * r * r) * std::cos(2.0 * psi)) / 8.0);
  };
  if (!(delta_ok && delta > 1.0 && bc_neg)) return fam;
  const double rho = std::sqrt(-b1 / c1);

  if (std::abs(b1) > 4.0 * std::abs(s1)) {
    fam.regime = BenchRegime::Lock;
    const double theta = 0.5 * std::acos(4.0 * s1 / b1);
    std::vector<FixedPointReport> branches;
    for (double base : {theta, -theta}) {
      for (int k = 0; k < 2; ++k) {
        FixedPointReport fp;
        fp.rho_star = rho;
        fp.phi_star = base + kPi * k;
        const double s2p = std::sin(2.0 * fp.phi_star), c2p = std::cos(2.0 * fp.phi_star);
        fp.lambda_n = -b1 * (delta + s2p) / 2.0;
        fp.nu_n = 0.0;
        fp.eta_m = c1 * rho * c2p / 4.0;
        fp.omega_m = -b1 * s2p / 4.0;
        branches.push_back(fp);
      }
    }
    finish_lock(fam, std::move(branches));
  } else if (std::abs(b1) < 4.0 * std::abs(s1)) {
    fam.regime = BenchRegime::Drift;
    DriftReport dr;
    dr.rho_star = rho;
    dr.n = dr.m = 1;
    dr.ell_min = std::min(-b1 * (delta + 1.0) / 2.0, -b1 * (delta - 1.0) / 2.0);
    dr.ell_max = std::max(-b1 * (delta + 1.0) / 2.0, -b1 * (delta - 1.0) / 2.0);
    dr.omega_min_abs = (4.0 * std::abs(s1) - std::abs(b1)) / 8.0;
    dr.omega_sign = s1 > 0.0 ? -1.0 : 1.0;
    dr.lambda_sup = 0.0;
    fam.predicted_drift = dr;
  }
  return fam;
}

BenchFamily build_ex3(const Params& p) {
  const double b0 = p.at("b0"), b1 = p.at("b1"), c0 = p.at("c0"), s2 = p.at("s2");
  BenchFamily fam;
  fam.name = "ex3";
  fam.params = p;
  auto Z1 = [b0, c0](double x, double) { return (b0 + c0 * x * x) * x; };
  auto Z2 = [b1](double x, double S) { return b1 * x * std::sin(S); };

  SystemSpec& sys = fam.system;
  sys.name = "ex3";
  sys.omega = 1.0;
  sys.drive = power_series_drive(2.0, 2, {{2, s2}});
  sys.resonance = ResonanceData{1, 2, 1.0};
  sys.terms.push_back(polar_term(1, Z1));
  sys.terms.push_back(polar_term(2, Z2));
  const DrivePhase drive = sys.drive;
  sys.cartesian_rhs = [Z1, Z2, drive](double x1, double x2, double t) {
    const double S = drive.phase(t);
    return Vec2(x2, -x1 + Z1(x2, S) / std::sqrt(t) + Z2(x2, S) / t);
  };

  const double mu = b0 * b0 + 8.0 * s2;
  const bool bc_neg = b0 * c0 < 0.0;
  fam.validity = {{"b0 c0 < 0", bc_neg},
                  {"|b0^2 + 8 s2| < 4|b1| (lock)", std::abs(mu) < 4.0 * std::abs(b1)},
                  {"|b0^2 + 8 s2| > 4|b1| (drift)", std::abs(mu) > 4.0 * std::abs(b1)}};
  fam.conditions = {"lock: rho* = sqrt(-4 b0/(3 c0)), phi* = +-theta* + pi k, theta* = arccos((b0^2 + 8 s2)/(4 "
                    "b1))/2; stable iff b0 > 0 and -b1 sin(2 phi*)/2 + 1/4 < 0",
                    "drift: ell_n = -b0; stable iff b0 > 0"};

  AveragedField& cf = fam.closed_form;
  cf.q = 2;
  cf.n = 1;
  cf.m = 2;
  cf.r_max = sys.r_max;
  cf.source = AveragingSource::ClosedForm;
  cf.entries[1] = [b0, c0](double r, double) { return Vec2(r * (4.0 * b0 + 3.0 * c0 * r * r) / 8.0, 0.0); };
  cf.entries[2] = [b0, b1, c0, s2](double r, double psi) {
    const double r2 = r * r;
    return Vec2(b1 * r * std::sin(2.0 * psi) / 4.0,
                (-32.0 * b0 * b0 - 48.0 * b0 * c0 * r2 - 27.0 * c0 * c0 * r2 * r2 - 128.0 * s2 +
                 64.0 * b1 * std::cos(2.0 * psi)) /
                    256.0);
  };
  if (!bc_neg) return fam;
  const double rho = std::sqrt(-4.0 * b0 / (3.0 * c0));

  if (std::abs(mu) < 4.0 * std::abs(b1)) {
    fam.regime = BenchRegime::Lock;
    const double theta = 0.5 * std::acos(mu / (4.0 * b1));
    std::vector<FixedPointReport> branches;
    for (double base : {theta, -theta}) {
      for (int k = 0; k < 2; ++k) {
        FixedPointReport fp;
        fp.rho_star = rho;
        fp.phi_star = base + kPi * k;
        fp.lambda_n = -b0;
        fp.nu_n = 0.0;
        fp.eta_m = 3.0 * c0 * b0 * rho / 16.0;
        fp.omega_m = -b1 * std::sin(2.0 * fp.phi_star) / 2.0;
        branches.push_back(fp);
      }
    }
    finish_lock(fam, std::move(branches));
  } else if (std::abs(mu) > 4.0 * std::abs(b1)) {
    fam.regime = BenchRegime::Drift;
    DriftReport dr;
    dr.rho_star = rho;
    dr.n = 1;
    dr.m = 2;
    dr.ell_min = dr.ell_max = -b0;
    dr.omega_min_abs = (std::abs(mu) - 4.0 * std::abs(b1)) / 16.0;
    dr.omega_sign = mu > 0.0 ? -1.0 : 1.0;
    dr.lambda_sup = 0.0;
    fam.predicted_drift = dr;
  }
  return fam;
}

}  // namespace

BenchFamily build(const std::string& name, const Params& params) {
  const Params p = merge(name, params);
  if (name == "ex1") return build_ex1(p);
  if (name == "ex2") return build_ex2(p);
  return build_ex3(p);
}

PredictedReport predicted_report(const BenchFamily& fam, BenchRegime wanted) {
  if (wanted != fam.regime) {
    throw ConfigError(std::string("bench: requested ") + to_string(wanted) + " prediction but '" + fam.name +
                      "' parameters give regime " + to_string(fam.regime));
  }
  if (wanted == BenchRegime::Lock) return fam.predicted_lock;
  if (wanted == BenchRegime::Drift) return *fam.predicted_drift;
  throw ConfigError("bench: no prediction for regime none");
}

Params draw_params(const std::string& name, BenchRegime regime, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };
  auto sign = [&] { return unit(rng) < 0.5 ? -1.0 : 1.0; };
  if (regime == BenchRegime::None) throw ConfigError("bench: cannot draw parameters for regime none");

  if (name == "ex1") {
    if (regime != BenchRegime::Lock) throw ConfigError("bench: ex1 has no drift regime");
    const double a = sign() * uniform(0.5, 1.5);
    const double c = (a > 0 ? -1.0 : 1.0) * uniform(0.5, 1.5);
    const double s1_max = std::sqrt(std::abs(a * c) / 12.0);
    return {{"a", a}, {"b", uniform(-2.0, 2.0)}, {"c", c}, {"s0", 1.0}, {"s1", uniform(-0.7, 0.7) * s1_max}};
  }
  if (name == "ex2") {
    const double b1 = sign() * uniform(0.5, 1.5);
    const double c1 = (b1 > 0 ? -1.0 : 1.0) * uniform(0.5, 1.5);
    const double delta = uniform(1.5, 3.5);
    const double s1 = regime == BenchRegime::Lock ? uniform(-0.8, 0.8) * std::abs(b1) / 4.0
                                                  : sign() * uniform(1.3, 2.5) * std::abs(b1) / 4.0;
    return {{"b0", delta * b1 / 2.0}, {"b1", b1}, {"c0", 2.0 * delta * c1 / 3.0}, {"c1", c1}, {"s1", s1}};
  }
  if (name == "ex3") {
    const double b0 = sign() * uniform(0.5, 1.5);
    const double c0 = (b0 > 0 ? -1.0 : 1.0) * uniform(0.5, 1.5);
    const double b1 = sign() * uniform(0.5, 1.5);
    const double mu = regime == BenchRegime::Lock ? uniform(-0.9, 0.9) * 4.0 * std::abs(b1)
                                                  : sign() * uniform(1.2, 2.5) * 4.0 * std::abs(b1);
    return {{"b0", b0}, {"b1", b1}, {"c0", c0}, {"s2", (mu - b0 * b0) / 8.0}};
  }
  throw ConfigError("bench: unknown family '" + name + "'");
}

}  // namespace reslab
