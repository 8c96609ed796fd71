#include "reslab/integrate.hpp"

#include "reslab/dopri5.hpp"
#include "reslab/error.hpp"

#include <cmath>

namespace reslab {

void IntegratorConfig::validate() const {
  if (!(t_start > 0.0)) throw ConfigError("integrator: t_start must be positive");
  if (!(t_end > t_start)) throw ConfigError("integrator: t_end must exceed t_start");
  if (!(rel_tol > 0.0) || !(abs_tol > 0.0)) throw ConfigError("integrator: tolerances must be positive");
  if (!(h_init > 0.0) || !(h_max > 0.0)) throw ConfigError("integrator: step sizes must be positive");
  if (record_stride < 1) throw ConfigError("integrator: record_stride must be >= 1");
  if (!(rho_floor > 0.0)) throw ConfigError("integrator: rho_floor must be positive");
}

Eigen::VectorXd column(const TrajectoryRecord& rec, double Sample::*field) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(rec.samples.size()));
  for (std::size_t i = 0; i < rec.samples.size(); ++i) out[static_cast<Eigen::Index>(i)] = rec.samples[i].*field;
  return out;
}

namespace {

using Integrator = DormandPrince54<double, 2>;

StepControl<double> step_control(const IntegratorConfig& cfg, double omega) {
  StepControl<double> c;
  c.rel_tol = cfg.rel_tol;
  c.abs_tol = cfg.abs_tol;
  c.h_init = cfg.h_init;
  // Keep the phase advance per accepted step below pi/2 so unwrapping is exact.
  c.h_max = std::min(cfg.h_max, 0.5 * kPi / omega);
  return c;
}

// Records every record_stride-th accepted step and always the final point.
class Recorder {
 public:
  Recorder(TrajectoryRecord& rec, int stride) : rec_(rec), stride_(stride) {}

  void push(const Sample& s) {
    pending_ = s;
    has_pending_ = true;
    if (count_++ % stride_ == 0) flush();
  }

  void finish() {
    if (has_pending_) flush();
  }

 private:
  void flush() {
    rec_.samples.push_back(pending_);
    has_pending_ = false;
  }

  TrajectoryRecord& rec_;
  int stride_;
  long count_ = 0;
  Sample pending_;
  bool has_pending_ = false;
};

}  // namespace

TrajectoryRecord integrate(const SystemSpec& sys, const InitialState& init,
                           const IntegratorConfig& cfg, IntegrationForm form) {
  cfg.validate();
  sys.validate();

  PolarState p0;
  if (const auto* c = std::get_if<CartesianState>(&init)) {
    p0 = to_polar(*c);
  } else {
    p0 = std::get<PolarState>(init);
    if (!(p0.rho > 0.0)) throw ConfigError("integrate: initial amplitude must be positive");
  }
  if (std::abs(p0.t - cfg.t_start) > 1e-12 * std::max(1.0, std::abs(cfg.t_start))) {
    throw ConfigError("integrate: initial state time must equal t_start");
  }
  if (form == IntegrationForm::Auto) {
    form = sys.cartesian_rhs ? IntegrationForm::Cartesian : IntegrationForm::Polar;
  }
  if (form == IntegrationForm::Cartesian && !sys.cartesian_rhs) {
    throw ConfigError("integrate: system has no Cartesian right-hand side");
  }

  const double ratio = sys.frame_ratio();
  TrajectoryRecord rec;
  rec.meta.system = sys.name;
  rec.meta.init = p0;
  rec.meta.frame_ratio = ratio;
  rec.meta.fast_period = sys.fast_period();

  Recorder recorder(rec, cfg.record_stride);
  const Integrator stepper(step_control(cfg, sys.omega));

  if (form == IntegrationForm::Cartesian) {
    const CartesianState c0 = to_cartesian(p0);
    double phi_unwrapped = p0.phi;
    double phi_last = wrap_angle(p0.phi);
    auto sample_at = [&](double t, const Vec2& y) {
      const double rho = std::hypot(y[0], y[1]);
      if (rho > 0.0) {
        const double phi = -std::atan2(y[1], y[0]);
        phi_unwrapped += wrap_angle(phi - phi_last);
        phi_last = phi;
      }
      return Sample{t, y[0], y[1], rho, phi_unwrapped - ratio * sys.drive.phase(t)};
    };
    rec.samples.push_back(Sample{cfg.t_start, c0.x1, c0.x2, p0.rho,
                                 p0.phi - ratio * sys.drive.phase(cfg.t_start)});
    auto rhs = [&sys](double t, const Vec2& y) -> Vec2 { return sys.cartesian_rhs(y[0], y[1], t); };
    stepper.integrate(rhs, Vec2(c0.x1, c0.x2), cfg.t_start, cfg.t_end, [&](double t, const Vec2& y) {
      recorder.push(sample_at(t, y));
      return true;
    });
  } else {
    auto rhs = [&sys](double t, const Vec2& y) -> Vec2 {
      Vec2 d = sys.polar_rates(y[0], y[1], t);
      d[1] += sys.omega;
      return d;
    };
    auto sample_at = [&](double t, const Vec2& y) {
      return Sample{t, y[0] * std::cos(y[1]), -y[0] * std::sin(y[1]), y[0],
                    y[1] - ratio * sys.drive.phase(t)};
    };
    if (!(p0.rho > cfg.rho_floor && p0.rho <= sys.r_max)) {
      throw ConfigError("integrate: polar initial amplitude outside (rho_floor, R_max]");
    }
    rec.samples.push_back(sample_at(cfg.t_start, Vec2(p0.rho, p0.phi)));
    stepper.integrate(rhs, Vec2(p0.rho, p0.phi), cfg.t_start, cfg.t_end, [&](double t, const Vec2& y) {
      recorder.push(sample_at(t, y));
      if (!(y[0] > cfg.rho_floor && y[0] <= sys.r_max)) {
        rec.exit_time = t;
        return false;
      }
      return true;
    });
  }
  recorder.finish();
  return rec;
}

std::vector<WindingSample> resample_theta(const TrajectoryRecord& rec) {
  std::vector<WindingSample> out;
  out.reserve(rec.samples.size());
  for (const auto& s : rec.samples) {
    const double w = std::floor((s.theta + kPi) / kTwoPi);
    out.push_back({s.t, s.theta - kTwoPi * w, static_cast<long>(w)});
  }
  return out;
}

}  // namespace reslab
