#pragma once

#include "reslab/model.hpp"

#include <Eigen/Core>

#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace reslab {

struct IntegratorConfig {
  double rel_tol = 1e-9;
  double abs_tol = 1e-11;
  double h_init = 1e-3;
  double h_max = 0.5;
  double t_start = 1.0;
  double t_end = 1e3;
  int record_stride = 1;
  double rho_floor = 1e-6;

  void validate() const;
};

enum class IntegrationForm { Auto, Cartesian, Polar };

/// One recorded point. theta is the unwrapped phase minus ratio * S(t).
struct Sample {
  double t = 0.0;
  double x1 = 0.0;
  double x2 = 0.0;
  double rho = 0.0;
  double theta = 0.0;
};

struct TrajectoryMeta {
  std::string system;
  std::string config_hash;
  PolarState init;
  double frame_ratio = 1.0;
  double fast_period = kTwoPi;
};

struct TrajectoryRecord {
  std::vector<Sample> samples;
  TrajectoryMeta meta;
  /// Set when the polar integration left (rho_floor, R_max].
  std::optional<double> exit_time;

  bool empty() const { return samples.empty(); }
  std::size_t size() const { return samples.size(); }
};

/// Copies one field of every sample into a column vector.
Eigen::VectorXd column(const TrajectoryRecord& rec, double Sample::*field);

using InitialState = std::variant<CartesianState, PolarState>;

/// Integrates the full non-autonomous system from init (whose time must equal
/// cfg.t_start) to cfg.t_end. Cartesian form is used when the system has a
/// Cartesian right-hand side (Auto), otherwise the polar series. A PolarState
/// init keeps its phase branch, so theta starts at phi - ratio * S(t_start).
TrajectoryRecord integrate(const SystemSpec& sys, const InitialState& init,
                           const IntegratorConfig& cfg,
                           IntegrationForm form = IntegrationForm::Auto);

/// theta split as principal value in [-pi, pi) plus 2 pi * winding.
struct WindingSample {
  double t = 0.0;
  double principal = 0.0;
  long winding = 0;
};

std::vector<WindingSample> resample_theta(const TrajectoryRecord& rec);

}  // namespace reslab
