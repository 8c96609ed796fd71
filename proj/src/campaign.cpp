#include "reslab/campaign.hpp"

#include "reslab/error.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <random>
#include <thread>

namespace reslab {

const char* to_string(AmplitudeVerdict v) {
  switch (v) {
    case AmplitudeVerdict::SteadyAmplitude: return "SteadyAmplitude";
    case AmplitudeVerdict::LogGrowth: return "LogGrowth";
    case AmplitudeVerdict::Escaped: return "Escaped";
    case AmplitudeVerdict::Undetermined: return "Undetermined";
  }
  return "Undetermined";
}

const char* to_string(PhaseVerdict v) {
  switch (v) {
    case PhaseVerdict::PhaseLocked: return "PhaseLocked";
    case PhaseVerdict::PhaseDrifting: return "PhaseDrifting";
    case PhaseVerdict::Undetermined: return "Undetermined";
  }
  return "Undetermined";
}

void DetectorWindows::validate() const {
  if (!(slope_tol > 0.0) || !(var_tol > 0.0) || !(locked_tv > 0.0) || !(drift_threshold > 0.0)) {
    throw ConfigError("detector: thresholds must be positive");
  }
  if (!(monotone_fraction > 0.0 && monotone_fraction <= 1.0)) throw ConfigError("detector: monotone_fraction in (0, 1]");
  if (block_period < 0.0) throw ConfigError("detector: block_period must be >= 0");
}

namespace {

struct Block {
  double t = 0.0;
  double rho = 0.0;
  double theta = 0.0;
};

// Trapezoid means over consecutive windows of length period.
std::vector<Block> block_means(const std::vector<Sample>& samples, double period) {
  std::vector<Block> out;
  if (samples.size() < 2) return out;
  const double t0 = samples.front().t;
  long current = -1;
  double start = 0.0, end = 0.0, rho_int = 0.0, theta_int = 0.0;
  auto flush = [&] {
    if (current >= 0 && end > start) {
      out.push_back({0.5 * (start + end), rho_int / (end - start), theta_int / (end - start)});
    }
  };
  for (std::size_t i = 0; i + 1 < samples.size(); ++i) {
    const Sample& a = samples[i];
    const Sample& b = samples[i + 1];
    const long k = static_cast<long>(std::floor((a.t - t0) / period));
    if (k != current) {
      flush();
      current = k;
      start = a.t;
      rho_int = theta_int = 0.0;
    }
    const double dt = b.t - a.t;
    rho_int += 0.5 * (a.rho + b.rho) * dt;
    theta_int += 0.5 * (a.theta + b.theta) * dt;
    end = b.t;
  }
  flush();
  return out;
}

double ls_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  if (n < 2) return 0.0;
  const Eigen::Map<const Eigen::VectorXd> X(x.data(), static_cast<Eigen::Index>(n));
  const Eigen::Map<const Eigen::VectorXd> Y(y.data(), static_cast<Eigen::Index>(n));
  const Eigen::VectorXd xc = X.array() - X.mean();
  const double den = xc.squaredNorm();
  return den > 0.0 ? xc.dot(Y) / den : 0.0;
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<long>(mid), v.end());
  if (v.size() % 2) return v[mid];
  const double hi = v[mid];
  return 0.5 * (hi + *std::max_element(v.begin(), v.begin() + static_cast<long>(mid)));
}

double variance(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const Eigen::Map<const Eigen::VectorXd> V(v.data(), static_cast<Eigen::Index>(v.size()));
  return (V.array() - V.mean()).square().mean();
}

}  // namespace

RegimeObservation detect_regime(const TrajectoryRecord& rec, const DetectorWindows& windows) {
  windows.validate();
  RegimeObservation obs;
  obs.exit_time = rec.exit_time;
  if (rec.samples.size() < 2) throw ConfigError("detect_regime: record is too short");
  const double t_first = rec.samples.front().t, t_end = rec.samples.back().t;
  if (obs.exit_time) {
    obs.amplitude = AmplitudeVerdict::Escaped;
    return obs;
  }
  if (!(t_first > 0.0) || std::log10(t_end / t_first) < windows.min_decades - 1e-12) {
    throw ConfigError("detect_regime: record covers fewer than the required decades of time");
  }
  const double period = windows.block_period > 0.0 ? windows.block_period : rec.meta.fast_period;
  const std::vector<Block> all = block_means(rec.samples, period);

  const double tail_start = t_end / 10.0;
  const double split = t_end / std::sqrt(10.0);
  std::vector<double> t, logt, rho, theta;
  std::vector<double> logt_a, rho_a, logt_b, rho_b;
  for (const Block& b : all) {
    if (b.t < tail_start) continue;
    t.push_back(b.t);
    logt.push_back(std::log(b.t));
    rho.push_back(b.rho);
    theta.push_back(b.theta);
    auto& lt = b.t < split ? logt_a : logt_b;
    auto& rr = b.t < split ? rho_a : rho_b;
    lt.push_back(std::log(b.t));
    rr.push_back(b.rho);
  }
  if (t.size() < 4) throw ConfigError("detect_regime: too few tail blocks for the block period");

  obs.rho_inf = median(rho);
  obs.tail_slope = ls_slope(t, rho);
  obs.tail_var = variance(rho);
  obs.log_slope = ls_slope(logt, rho);
  const double sa = ls_slope(logt_a, rho_a), sb = ls_slope(logt_b, rho_b);
  if (std::abs(obs.tail_slope) < windows.slope_tol && obs.tail_var < windows.var_tol) {
    obs.amplitude = AmplitudeVerdict::SteadyAmplitude;
  } else if (std::min(sa, sb) > windows.min_log_slope &&
             std::abs(sa - sb) <= windows.log_agreement * std::max(std::abs(sa), std::abs(sb))) {
    obs.amplitude = AmplitudeVerdict::LogGrowth;
  }

  obs.theta_inf = median(theta);
  obs.theta_advance = theta.back() - theta.front();
  obs.winding_sign = obs.theta_advance > 0.0 ? 1 : (obs.theta_advance < 0.0 ? -1 : 0);
  std::size_t along = 0;
  for (std::size_t i = 1; i < theta.size(); ++i) {
    const double d = theta[i] - theta[i - 1];
    obs.theta_tv += std::abs(d);
    if (d * obs.winding_sign > 0.0) ++along;
  }
  obs.monotone = static_cast<double>(along) / static_cast<double>(theta.size() - 1);
  if (obs.theta_tv < windows.locked_tv) {
    obs.phase = PhaseVerdict::PhaseLocked;
  } else if (std::abs(obs.theta_advance) > windows.drift_threshold && obs.monotone >= windows.monotone_fraction) {
    obs.phase = PhaseVerdict::PhaseDrifting;
  }
  return obs;
}

void CampaignConfig::validate() const {
  integrator.validate();
  windows.validate();
  if (ball) {
    if (ball->count < 0) throw ConfigError("campaign: ball count must be >= 0");
    if (!(ball->radius >= 0.0)) throw ConfigError("campaign: ball radius must be >= 0");
  }
  if (!(epsilon > 0.0)) throw ConfigError("campaign: epsilon must be positive");
  if (threads < 1) throw ConfigError("campaign: threads must be >= 1");
}

std::vector<Vec2> initial_states(const CampaignConfig& cfg) {
  std::vector<Vec2> out = cfg.inits;
  if (cfg.ball) {
    std::mt19937_64 rng(cfg.ball->seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int i = 0; i < cfg.ball->count;) {
      const Vec2 d(u(rng), u(rng));
      if (d.lpNorm<1>() > 1.0) continue;
      out.push_back(cfg.ball->center + cfg.ball->radius * d);
      ++i;
    }
  }
  return out;
}

Containment check_containment(const TrajectoryRecord& rec, const Vec2& reference, bool drift, double epsilon,
                              double t_contain) {
  Containment c;
  if (rec.samples.empty()) return c;
  const double theta0 = rec.samples.front().theta;
  const double phi_ref = reference[1] + kTwoPi * std::round((theta0 - reference[1]) / kTwoPi);
  for (const Sample& s : rec.samples) {
    if (s.t <= t_contain) continue;
    double dev = std::abs(s.rho - reference[0]);
    if (!drift) dev += std::abs(s.theta - phi_ref);
    if (!std::isfinite(dev)) dev = std::numeric_limits<double>::infinity();
    c.max_deviation = std::max(c.max_deviation, dev);
    if (dev >= epsilon && !c.leave_time) {
      c.contained = false;
      c.leave_time = s.t;
    }
  }
  if (rec.exit_time) {
    c.contained = false;
    if (!c.leave_time) c.leave_time = rec.exit_time;
  }
  return c;
}

std::optional<Prediction> predict(const SystemSpec& sys, const Vec2& near) {
  if (!sys.resonance) return std::nullopt;
  AveragedField avg;
  try {
    avg = average(sys);
  } catch (const NumericalError&) {
    return std::nullopt;
  }
  const auto fps = find_fixed_points(avg);
  if (!fps.empty()) {
    const auto best = std::min_element(fps.begin(), fps.end(), [&](const auto& a, const auto& b) {
      auto dist = [&](const FixedPointReport& f) {
        return std::abs(f.rho_star - near[0]) + std::abs(angle_difference(f.phi_star, near[1]));
      };
      return dist(a) < dist(b);
    });
    return Prediction{classify(*best), *best, std::nullopt};
  }
  const auto drifts = detect_drift(avg);
  if (!drifts.empty()) {
    const auto best = std::min_element(drifts.begin(), drifts.end(), [&](const auto& a, const auto& b) {
      return std::abs(a.rho_star - near[0]) < std::abs(b.rho_star - near[0]);
    });
    return Prediction{classify(*best), std::nullopt, *best};
  }
  return std::nullopt;
}

CampaignResult run_campaign(const CampaignConfig& cfg) {
  cfg.validate();
  const BenchFamily fam = build(cfg.family, cfg.params);
  const SystemSpec& sys = fam.system;
  const std::vector<Vec2> inits = initial_states(cfg);

  CampaignResult result;
  result.summary.count = inits.size();
  if (inits.empty()) return result;

  std::optional<Prediction> prediction = predict(sys, cfg.ball ? cfg.ball->center : inits.front());
  result.summary.prediction = prediction;
  std::optional<Vec2> reference = cfg.reference;
  bool drift_reference = false;
  if (!reference && prediction) {
    if (prediction->lock) reference = Vec2(prediction->lock->rho_star, prediction->lock->phi_star);
    if (prediction->drift) {
      reference = Vec2(prediction->drift->rho_star, 0.0);
      drift_reference = true;
    }
  } else if (reference && prediction && prediction->drift) {
    drift_reference = true;
  }

  const double ratio = sys.frame_ratio();
  const double S0 = sys.drive.phase(cfg.integrator.t_start);
  result.runs.resize(inits.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < inits.size(); i = next++) {
      TrajectoryOutcome& out = result.runs[i];
      out.index = i;
      out.init = inits[i];
      try {
        const PolarState p0{inits[i][0], inits[i][1] + ratio * S0, cfg.integrator.t_start};
        try {
          out.record = integrate(sys, p0, cfg.integrator);
        } catch (const NumericalError&) {
          // a Cartesian blow-up; the polar form stops at R_max instead
          if (!sys.cartesian_rhs || sys.terms.empty()) throw;
          out.record = integrate(sys, p0, cfg.integrator, IntegrationForm::Polar);
        }
        out.observation = detect_regime(out.record, cfg.windows);
        if (reference) {
          const Containment c =
              check_containment(out.record, *reference, drift_reference, cfg.epsilon, cfg.t_contain);
          out.contained = c.contained;
          out.max_deviation = c.max_deviation;
          out.leave_time = c.leave_time;
        }
      } catch (const Error& e) {
        out.error = e.what();
      }
    }
  };
  const int threads = std::min<int>(cfg.threads, static_cast<int>(inits.size()));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < threads; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  CampaignSummary& sum = result.summary;
  for (const auto& run : result.runs) {
    if (!run.error.empty()) {
      ++sum.failed;
      continue;
    }
    if (run.observation) {
      sum.steady += run.observation->amplitude == AmplitudeVerdict::SteadyAmplitude;
      sum.log_growth += run.observation->amplitude == AmplitudeVerdict::LogGrowth;
      sum.escaped += run.observation->amplitude == AmplitudeVerdict::Escaped;
      sum.locked += run.observation->phase == PhaseVerdict::PhaseLocked;
      sum.drifting += run.observation->phase == PhaseVerdict::PhaseDrifting;
    }
    sum.contained += run.contained.value_or(false);
  }
  sum.contained_fraction = static_cast<double>(sum.contained) / static_cast<double>(sum.count);
  if (prediction) {
    switch (prediction->classification.kind) {
      case RegimeKind::PhaseLockedStable:
        sum.prediction_agrees = sum.steady == sum.count && sum.locked == sum.count;
        break;
      case RegimeKind::PhaseDriftStable:
        sum.prediction_agrees = sum.steady == sum.count && sum.drifting == sum.count;
        break;
      case RegimeKind::PhaseLockedUnstable:
      case RegimeKind::PhaseDriftUnstable:
        sum.prediction_agrees = sum.contained < sum.count;
        break;
      default:
        break;
    }
  }
  return result;
}

}  // namespace reslab
