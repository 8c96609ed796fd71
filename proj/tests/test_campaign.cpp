#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "reslab/campaign.hpp"
#include "reslab/error.hpp"
#include "reslab/report.hpp"

#include <cmath>
#include <filesystem>
#include <random>

using namespace reslab;
using doctest::Approx;

namespace {

TrajectoryRecord synthetic(double t_end, double (*rho)(double), double (*theta)(double)) {
  TrajectoryRecord rec;
  rec.meta.fast_period = kTwoPi;
  for (double t = 1.0; t <= t_end; t += 0.25) rec.samples.push_back({t, 0.0, 0.0, rho(t), theta(t)});
  return rec;
}

}  // namespace

TEST_CASE("constant amplitude is steady") {
  const auto rec = synthetic(1e4, [](double) { return 1.7; }, [](double) { return -kPi; });
  const RegimeObservation obs = detect_regime(rec);
  CHECK(obs.amplitude == AmplitudeVerdict::SteadyAmplitude);
  CHECK(std::abs(obs.rho_inf - 1.7) < 1e-12);
  CHECK(obs.phase == PhaseVerdict::PhaseLocked);
  CHECK(obs.theta_inf == Approx(-kPi));
}

TEST_CASE("logarithmic amplitude with noise") {
  TrajectoryRecord rec;
  rec.meta.fast_period = kTwoPi;
  std::mt19937_64 rng(1);
  std::normal_distribution<double> noise(0.0, 1e-6);
  for (double t = 1.0; t <= 1e5; t += 0.5) rec.samples.push_back({t, 0.0, 0.0, 0.5 * std::log(t) + noise(rng), 0.0});
  const RegimeObservation obs = detect_regime(rec);
  CHECK(obs.amplitude == AmplitudeVerdict::LogGrowth);
  CHECK(std::abs(obs.log_slope - 0.5) < 1e-3);
}

TEST_CASE("linear phase advance is drifting") {
  const auto rec = synthetic(1e4, [](double) { return 1.0; }, [](double t) { return -0.01 * t + 0.1 * std::sin(t); });
  const RegimeObservation obs = detect_regime(rec);
  CHECK(obs.phase == PhaseVerdict::PhaseDrifting);
  CHECK(obs.winding_sign == -1);
  CHECK(obs.monotone > 0.99);
}

TEST_CASE("slow phase wander is undetermined") {
  const auto rec = synthetic(1e4, [](double) { return 1.0; }, [](double t) { return std::sin(t / 500.0); });
  CHECK(detect_regime(rec).phase == PhaseVerdict::Undetermined);
}

TEST_CASE("escape and short records") {
  auto rec = synthetic(1e3, [](double) { return 1.0; }, [](double) { return 0.0; });
  rec.exit_time = 500.0;
  CHECK(detect_regime(rec).amplitude == AmplitudeVerdict::Escaped);
  CHECK(*detect_regime(rec).exit_time == 500.0);

  const auto shortrec = synthetic(50.0, [](double) { return 1.0; }, [](double) { return 0.0; });
  CHECK_THROWS_AS(detect_regime(shortrec), ConfigError);
  CHECK_THROWS_AS(detect_regime(TrajectoryRecord{}), ConfigError);
}

TEST_CASE("detection on a stored CSV reproduces the verdict bit for bit") {
  CampaignConfig cfg;
  cfg.family = "ex1";
  cfg.inits = {{2.0 / std::sqrt(3.0) + 0.05, -kPi + 0.05}};
  cfg.integrator.t_end = 1e4;
  cfg.integrator.record_stride = 5;
  const CampaignResult res = run_campaign(cfg);
  REQUIRE(res.runs.size() == 1);
  const auto path = std::filesystem::temp_directory_path() / "reslab_detect_roundtrip.csv";
  emit_csv(res.runs[0].record, path);
  TrajectoryRecord back = read_csv(path);
  back.meta = res.runs[0].record.meta;
  const RegimeObservation a = detect_regime(res.runs[0].record), b = detect_regime(back);
  CHECK(a.amplitude == b.amplitude);
  CHECK(a.phase == b.phase);
  CHECK(a.rho_inf == b.rho_inf);
  CHECK(a.tail_slope == b.tail_slope);
  CHECK(a.theta_tv == b.theta_tv);
  CHECK(a.theta_advance == b.theta_advance);
  std::filesystem::remove(path);
}

TEST_CASE("ball sampling is deterministic and inside the ball") {
  CampaignConfig cfg;
  cfg.ball = InitBall{Vec2(1.0, -kPi), 0.3, 20, 42};
  const auto a = initial_states(cfg), b = initial_states(cfg);
  REQUIRE(a.size() == 20);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i] == b[i]);
    CHECK((a[i] - Vec2(1.0, -kPi)).lpNorm<1>() <= 0.3);
  }
  cfg.ball->seed = 43;
  CHECK(initial_states(cfg)[0] != a[0]);
}

TEST_CASE("empty init list gives an empty summary") {
  CampaignConfig cfg;
  const CampaignResult res = run_campaign(cfg);
  CHECK(res.runs.empty());
  CHECK(res.summary.count == 0);
}

TEST_CASE("ex1 stable-branch campaign") {
  CampaignConfig cfg;
  cfg.family = "ex1";
  cfg.ball = InitBall{Vec2(2.0 / std::sqrt(3.0), -kPi), 0.3, 5, 1};
  cfg.integrator.t_end = 1e5;
  cfg.integrator.record_stride = 20;
  cfg.t_contain = 50.0;
  cfg.threads = 2;
  const CampaignResult res = run_campaign(cfg);
  REQUIRE(res.runs.size() == 5);
  CHECK(res.summary.steady == 5);
  CHECK(res.summary.locked == 5);
  CHECK(res.summary.contained == 5);
  REQUIRE(res.summary.prediction);
  CHECK(res.summary.prediction->classification.kind == RegimeKind::PhaseLockedStable);
  CHECK(res.summary.prediction_agrees);
  for (const auto& run : res.runs) {
    REQUIRE(run.observation);
    CHECK(std::abs(run.observation->rho_inf - 2.0 / std::sqrt(3.0)) < 0.02);
    CHECK(std::abs(angle_difference(run.observation->theta_inf, -kPi)) < 0.05);
  }
}

TEST_CASE("ex1 unstable branch is left") {
  CampaignConfig cfg;
  cfg.family = "ex1";
  cfg.ball = InitBall{Vec2(2.0 / std::sqrt(3.0), 0.0), 0.01, 5, 3};
  cfg.integrator.t_end = 1e4;
  cfg.integrator.record_stride = 20;
  cfg.epsilon = 0.3;
  cfg.reference = Vec2(2.0 / std::sqrt(3.0), 0.0);
  const CampaignResult res = run_campaign(cfg);
  std::size_t left = 0;
  for (const auto& run : res.runs) left += run.contained && !*run.contained;
  CHECK(left >= 4);
}

TEST_CASE("ex2 drift run") {
  CampaignConfig cfg;
  cfg.family = "ex2";
  cfg.params = {{"s1", 0.5}};
  cfg.inits = {{1.0, 0.0}};
  cfg.integrator.t_end = 1e5;
  cfg.integrator.record_stride = 20;
  const CampaignResult res = run_campaign(cfg);
  REQUIRE(res.runs[0].observation);
  CHECK(res.runs[0].observation->amplitude == AmplitudeVerdict::SteadyAmplitude);
  CHECK(res.runs[0].observation->rho_inf == Approx(1.0).epsilon(0.03));
  CHECK(res.runs[0].observation->phase == PhaseVerdict::PhaseDrifting);
  REQUIRE(res.summary.prediction);
  CHECK(res.summary.prediction->classification.kind == RegimeKind::PhaseDriftStable);
}

TEST_CASE("containment check") {
  TrajectoryRecord rec;
  for (int i = 0; i <= 100; ++i) rec.samples.push_back({1.0 + i, 0, 0, 1.0 + (i > 80 ? 0.5 : 0.0), kTwoPi + 0.1});
  const Containment c = check_containment(rec, Vec2(1.0, 0.0), false, 0.3, 10.0);
  CHECK_FALSE(c.contained);
  REQUIRE(c.leave_time);
  CHECK(*c.leave_time == Approx(82.0));
  CHECK(c.max_deviation == Approx(0.6));
  const Containment d = check_containment(rec, Vec2(1.0, 5.0), true, 0.6, 10.0);
  CHECK(d.contained);
}

TEST_CASE("identical configs give identical records across thread counts") {
  CampaignConfig cfg;
  cfg.family = "ex3";
  cfg.ball = InitBall{Vec2(1.15, 0.0), 0.2, 4, 5};
  cfg.integrator.t_end = 2e3;
  cfg.integrator.record_stride = 10;
  cfg.threads = 1;
  const CampaignResult a = run_campaign(cfg);
  cfg.threads = 3;
  const CampaignResult b = run_campaign(cfg);
  REQUIRE(a.runs.size() == b.runs.size());
  for (std::size_t i = 0; i < a.runs.size(); ++i) {
    CHECK(csv_text(a.runs[i].record) == csv_text(b.runs[i].record));
  }
}
