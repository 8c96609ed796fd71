#include "reslab/model.hpp"

#include "reslab/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace reslab {

double wrap_angle(double angle) {
  double r = std::remainder(angle, kTwoPi);  // [-pi, pi]
  if (r <= -kPi) r += kTwoPi;
  return r;
}

double DrivePhase::coeff(int k) const {
  for (const auto& [idx, value] : s_coeffs) {
    if (idx == k) return value;
  }
  return 0.0;
}

void DrivePhase::validate() const {
  if (!(s0 > 0.0) || !std::isfinite(s0)) throw ConfigError("drive: s0 must be positive and finite");
  if (q < 1) throw ConfigError("drive: q must be >= 1");
  if (!phase || !rate) throw ConfigError("drive: S(t) and S'(t) evaluators are required");
  for (const auto& [k, v] : s_coeffs) {
    if (k < 1) throw ConfigError("drive: correction indices must be >= 1");
    if (!std::isfinite(v)) throw ConfigError("drive: non-finite correction coefficient");
  }
}

DrivePhase power_series_drive(double s0, int q, std::vector<std::pair<int, double>> coeffs) {
  DrivePhase d;
  d.s0 = s0;
  d.q = q;
  std::sort(coeffs.begin(), coeffs.end());
  d.s_coeffs = coeffs;
  d.phase = [s0, q, coeffs](double t) {
    double s = s0 * t;
    for (const auto& [k, sk] : coeffs) {
      if (k == q) {
        s += sk * std::log(t);
      } else {
        const double e = 1.0 - static_cast<double>(k) / q;
        s += sk * std::pow(t, e) / e;
      }
    }
    return s;
  };
  d.rate = [s0, q, coeffs](double t) {
    double r = s0;
    for (const auto& [k, sk] : coeffs) r += sk * std::pow(t, -static_cast<double>(k) / q);
    return r;
  };
  return d;
}

void ResonanceData::validate(double s0) const {
  if (!(omega > 0.0)) throw ConfigError("resonance: omega must be positive");
  if (kappa < 1 || varkappa < 1) throw ConfigError("resonance: kappa and varkappa must be positive");
  if (std::gcd(kappa, varkappa) != 1) throw ConfigError("resonance: kappa and varkappa must be coprime");
  const double lhs = kappa * s0;
  const double rhs = varkappa * omega;
  if (std::abs(lhs - rhs) > 1e-12 * std::max(std::abs(lhs), std::abs(rhs))) {
    throw ConfigError("resonance: kappa*s0 != varkappa*omega");
  }
}

Vec2 SystemSpec::polar_rates(double rho, double phi, double t) const {
  const double S = drive.phase(t);
  Vec2 out = Vec2::Zero();
  for (const auto& term : terms) {
    const double w = std::pow(t, -static_cast<double>(term.k) / drive.q);
    out[0] += w * term.f(rho, phi, S);
    out[1] += w * term.g(rho, phi, S);
  }
  return out;
}

double SystemSpec::frame_ratio() const {
  return resonance ? resonance->frame_ratio() : omega / drive.s0;
}

double SystemSpec::fast_period() const {
  if (resonance) return kTwoPi * resonance->varkappa / drive.s0;
  return kTwoPi / std::min(omega, drive.s0);
}

void SystemSpec::validate() const {
  drive.validate();
  if (!(omega > 0.0)) throw ConfigError("system: omega must be positive");
  if (!(r_max > 0.0)) throw ConfigError("system: R_max must be positive");
  if (resonance) resonance->validate(drive.s0);
  for (std::size_t i = 0; i < terms.size(); ++i) {
    if (!terms[i].f || !terms[i].g) throw ConfigError("system: perturbation term without evaluators");
    if (i > 0 && terms[i].k <= terms[i - 1].k) {
      throw ConfigError("system: term indices must be strictly increasing");
    }
  }
}

PolarState to_polar(const CartesianState& s) {
  const double rho = std::hypot(s.x1, s.x2);
  if (rho == 0.0) throw ConfigError("to_polar: phase undefined at the origin");
  return {rho, wrap_angle(-std::atan2(s.x2, s.x1)), s.t};
}

CartesianState to_cartesian(const PolarState& s) {
  return {s.rho * std::cos(s.phi), -s.rho * std::sin(s.phi), s.t};
}

std::optional<ResonanceData> check_resonance(double s0, double omega, const ResonanceSearch& search) {
  if (!(s0 > 0.0) || !(omega > 0.0)) throw ConfigError("check_resonance: s0 and omega must be positive");
  // s0 / omega = varkappa / kappa; walk the convergents p/q of that ratio.
  const double x = s0 / omega;
  long long p_prev = 1, p = static_cast<long long>(std::floor(x));
  long long q_prev = 0, q = 1;
  double rem = x - std::floor(x);
  for (int iter = 0; iter < 64; ++iter) {
    if (p > search.max_denominator || q > search.max_denominator) break;
    if (p >= 1 && std::abs(static_cast<double>(p) / q - x) <= search.tol * x) {
      ResonanceData r;
      r.varkappa = static_cast<int>(p);
      r.kappa = static_cast<int>(q);
      r.omega = omega;
      return r;
    }
    if (rem < 1e-15) break;
    const double inv = 1.0 / rem;
    const auto a = static_cast<long long>(std::floor(inv));
    rem = inv - std::floor(inv);
    const long long p_next = a * p + p_prev;
    const long long q_next = a * q + q_prev;
    p_prev = p;
    q_prev = q;
    p = p_next;
    q = q_next;
  }
  return std::nullopt;
}

std::optional<ResonanceData> check_resonance(const DrivePhase& drive, double omega,
                                             const ResonanceSearch& search) {
  return check_resonance(drive.s0, omega, search);
}

}  // namespace reslab
