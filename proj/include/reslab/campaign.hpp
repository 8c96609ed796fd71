#pragma once

#include "reslab/analysis.hpp"
#include "reslab/bench.hpp"
#include "reslab/integrate.hpp"

#include <optional>
#include <string>
#include <vector>

namespace reslab {

/// Thresholds of the empirical regime detector. Amplitude and phase verdicts
/// are computed on block means over block_period, which removes the fast
/// oscillation of the drive.
struct DetectorWindows {
  double slope_tol = 1e-5;
  double var_tol = 1e-3;
  double locked_tv = 0.2;
  double drift_threshold = 4.0 * kPi;
  double monotone_fraction = 0.9;
  double log_agreement = 0.1;
  double min_log_slope = 1e-3;
  double block_period = 0.0;  // 0: use the record's fast period
  double min_decades = 2.0;

  void validate() const;
};

enum class AmplitudeVerdict { SteadyAmplitude, LogGrowth, Escaped, Undetermined };
enum class PhaseVerdict { PhaseLocked, PhaseDrifting, Undetermined };

const char* to_string(AmplitudeVerdict v);
const char* to_string(PhaseVerdict v);

struct RegimeObservation {
  AmplitudeVerdict amplitude = AmplitudeVerdict::Undetermined;
  PhaseVerdict phase = PhaseVerdict::Undetermined;
  double rho_inf = 0.0;      // median of tail block means
  double tail_slope = 0.0;   // d rho / d t over the tail
  double tail_var = 0.0;
  double log_slope = 0.0;    // d rho / d log t over the tail
  double theta_inf = 0.0;    // median of tail block means
  double theta_tv = 0.0;     // total variation of tail block means
  double theta_advance = 0.0;
  double monotone = 0.0;     // fraction of block steps along the advance
  int winding_sign = 0;
  std::optional<double> exit_time;
};

/// Classifies the tail decade [t_end/10, t_end] of a record. Throws
/// ConfigError when the record covers fewer than min_decades decades.
RegimeObservation detect_regime(const TrajectoryRecord& rec, const DetectorWindows& windows = {});

/// l1 ball |d rho| + |d theta| <= radius around (rho, theta).
struct InitBall {
  Vec2 center = Vec2(1.0, 0.0);
  double radius = 0.1;
  int count = 5;
  std::uint64_t seed = 1;
};

struct CampaignConfig {
  std::string family = "ex1";
  Params params;
  std::vector<Vec2> inits;      // explicit (rho, theta) at integrator.t_start
  std::optional<InitBall> ball;  // sampled after the explicit list
  IntegratorConfig integrator;
  DetectorWindows windows;
  double epsilon = 0.5;
  double t_contain = 10.0;
  /// Reference (rho*, phi*) for containment; by default the analysis
  /// prediction nearest to the first initial state.
  std::optional<Vec2> reference;
  int threads = 1;

  void validate() const;
};

/// Deterministic list of (rho, theta) starting points.
std::vector<Vec2> initial_states(const CampaignConfig& cfg);

struct TrajectoryOutcome {
  std::size_t index = 0;
  Vec2 init = Vec2::Zero();
  TrajectoryRecord record;
  std::optional<RegimeObservation> observation;
  std::optional<bool> contained;
  double max_deviation = 0.0;  // over t > t_contain
  std::optional<double> leave_time;
  std::string error;
};

struct Prediction {
  RegimeClassification classification;
  std::optional<FixedPointReport> lock;
  std::optional<DriftReport> drift;
};

struct CampaignSummary {
  std::string config_hash;
  std::size_t count = 0;
  std::size_t steady = 0;
  std::size_t log_growth = 0;
  std::size_t escaped = 0;
  std::size_t locked = 0;
  std::size_t drifting = 0;
  std::size_t failed = 0;
  std::size_t contained = 0;
  double contained_fraction = 0.0;
  std::optional<Prediction> prediction;
  bool prediction_agrees = false;
};

struct CampaignResult {
  CampaignSummary summary;
  std::vector<TrajectoryOutcome> runs;  // sorted by index
};

/// Closed-loop numeric prediction: quadrature averaging, fixed points or
/// drift candidates, classification. Nearest to `near` (rho, theta).
std::optional<Prediction> predict(const SystemSpec& sys, const Vec2& near);

/// Integrates every initial state (in parallel), detects regimes and checks
/// containment against the reference. Integration failures are recorded per
/// trajectory.
CampaignResult run_campaign(const CampaignConfig& cfg);

/// The same containment test on one record.
struct Containment {
  bool contained = true;
  double max_deviation = 0.0;
  std::optional<double> leave_time;
};
Containment check_containment(const TrajectoryRecord& rec, const Vec2& reference, bool drift, double epsilon,
                              double t_contain);

}  // namespace reslab
