#pragma once

#include <Eigen/Core>

#include <functional>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace reslab {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Reduces an angle to (-pi, pi].
double wrap_angle(double angle);

/// Signed distance between two angles on the circle, in (-pi, pi].
inline double angle_difference(double a, double b) { return wrap_angle(a - b); }

/// Drive phase S(t) with S'(t) ~ s0 + sum_k t^(-k/q) s_k.
struct DrivePhase {
  double s0 = 1.0;
  std::vector<std::pair<int, double>> s_coeffs;
  int q = 1;
  std::function<double(double)> phase;  // S(t)
  std::function<double(double)> rate;   // S'(t)

  /// s_k, zero when the coefficient is absent.
  double coeff(int k) const;
  void validate() const;
};

/// Drive with S'(t) = s0 + sum_k s_k t^(-k/q) exactly, integrated in closed
/// form (t^(1-k/q) terms, and log t when k = q).
DrivePhase power_series_drive(double s0, int q, std::vector<std::pair<int, double>> coeffs);

/// Coprime (kappa, varkappa) with kappa s0 = varkappa omega.
struct ResonanceData {
  int kappa = 1;
  int varkappa = 1;
  double omega = 1.0;

  /// kappa / varkappa, the slope of the rotating frame.
  double frame_ratio() const { return static_cast<double>(kappa) / varkappa; }
  void validate(double s0) const;
};

using PolarRate = std::function<double(double rho, double phi, double S)>;

/// One term t^(-k/q) (f_k, g_k) of the perturbation series.
struct PerturbationTerm {
  int k = 1;
  PolarRate f;
  PolarRate g;
};

using CartesianRhs = std::function<Vec2(double x1, double x2, double t)>;

/// A perturbed isochronous system in the plane.
struct SystemSpec {
  std::string name;
  DrivePhase drive;
  double omega = 1.0;
  std::optional<ResonanceData> resonance;
  std::vector<PerturbationTerm> terms;
  double r_max = 4.0;
  CartesianRhs cartesian_rhs;  // may be empty

  /// (f, g) summed over the series at (rho, phi, t).
  Vec2 polar_rates(double rho, double phi, double t) const;

  /// Slope of the frame used for theta = phi - ratio * S(t). Falls back to
  /// omega / s0 when there is no resonance.
  double frame_ratio() const;

  /// Length in t of one period of the fast variable in the rotating frame.
  double fast_period() const;

  void validate() const;
};

struct PolarState {
  double rho = 1.0;
  double phi = 0.0;
  double t = 1.0;
};

struct CartesianState {
  double x1 = 1.0;
  double x2 = 0.0;
  double t = 1.0;
};

/// rho = |x|, phi = -atan2(x2, x1) in (-pi, pi]. Throws ConfigError at the origin.
PolarState to_polar(const CartesianState& s);

/// x1 = rho cos(phi), x2 = -rho sin(phi).
CartesianState to_cartesian(const PolarState& s);

struct ResonanceSearch {
  int max_denominator = 64;
  double tol = 1e-9;
};

/// Detects kappa s0 = varkappa omega by continued fractions of s0 / omega.
/// Returns nullopt when no ratio with both integers <= max_denominator fits
/// within the relative tolerance.
std::optional<ResonanceData> check_resonance(double s0, double omega,
                                             const ResonanceSearch& search = {});
std::optional<ResonanceData> check_resonance(const DrivePhase& drive, double omega,
                                             const ResonanceSearch& search = {});

}  // namespace reslab
