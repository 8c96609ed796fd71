#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "reslab/bench.hpp"
#include "reslab/dopri5.hpp"
#include "reslab/error.hpp"
#include "reslab/integrate.hpp"

#include <cmath>
#include <string>

using namespace reslab;
using doctest::Approx;

namespace {

SystemSpec unperturbed() { return build("ex1", {{"a", 0.0}, {"b", 0.0}, {"c", 0.0}}).system; }

double max_amplitude_error(double rel_tol) {
  IntegratorConfig cfg;
  cfg.rel_tol = rel_tol;
  cfg.abs_tol = rel_tol * 1e-2;
  cfg.t_end = 200.0;
  const auto rec = integrate(unperturbed(), CartesianState{1.0, 0.0, 1.0}, cfg);
  double err = 0.0;
  for (const auto& s : rec.samples) err = std::max(err, std::abs(s.rho - 1.0));
  return err;
}

}  // namespace

TEST_CASE("config validation") {
  IntegratorConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.t_end = 0.5;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = {};
  cfg.rel_tol = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = {};
  cfg.record_stride = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  CHECK_THROWS_AS(integrate(unperturbed(), CartesianState{1.0, 0.0, 2.0}, IntegratorConfig{}), ConfigError);
}

TEST_CASE("Dormand-Prince on y' = -y") {
  DormandPrince54<double, 1> dp({1e-10, 1e-12, 1e-3, 0.5});
  Eigen::Matrix<double, 1, 1> y;
  y << 1.0;
  double t = 0.0;
  dp.integrate([](double, const auto& v) { return Eigen::Matrix<double, 1, 1>(-v); }, y, 0.0, 5.0,
               [&](double tt, const auto& v) {
                 t = tt;
                 y = v;
                 return true;
               });
  CHECK(t == Approx(5.0));
  CHECK(y[0] == Approx(std::exp(-5.0)).epsilon(1e-8));
}

TEST_CASE("unperturbed system keeps its amplitude and rotates at unit rate") {
  IntegratorConfig cfg;
  const auto rec = integrate(unperturbed(), CartesianState{1.0, 0.0, 1.0}, cfg);
  REQUIRE(rec.size() > 100);
  CHECK(rec.samples.front().t == 1.0);
  CHECK(rec.samples.back().t == Approx(1e3));
  double rho_err = 0.0, theta_err = 0.0;
  for (const auto& s : rec.samples) {
    rho_err = std::max(rho_err, std::abs(s.rho - 1.0));
    // phi = t - 1 and S = t, so theta = -1
    theta_err = std::max(theta_err, std::abs(s.theta + 1.0));
  }
  CHECK(rho_err < 1e-6);
  CHECK(theta_err < 1e-6);
}

TEST_CASE("record invariants") {
  const auto rec = integrate(build("ex2").system, PolarState{1.0, 0.3, 1.0}, IntegratorConfig{});
  for (std::size_t i = 1; i < rec.size(); ++i) {
    CHECK(rec.samples[i].t > rec.samples[i - 1].t);
    CHECK(std::abs(rec.samples[i].theta - rec.samples[i - 1].theta) < kPi);
  }
  for (const auto& s : rec.samples) CHECK(s.rho >= 0.0);
  // the polar init keeps its branch
  CHECK(rec.samples.front().theta == Approx(0.3 - 0.5 * build("ex2").system.drive.phase(1.0)));
}

TEST_CASE("record stride thins and keeps the end point") {
  IntegratorConfig cfg;
  cfg.t_end = 100.0;
  const auto full = integrate(build("ex1").system, CartesianState{1.0, 0.0, 1.0}, cfg);
  cfg.record_stride = 10;
  const auto thin = integrate(build("ex1").system, CartesianState{1.0, 0.0, 1.0}, cfg);
  CHECK(thin.size() < full.size() / 5);
  CHECK(thin.samples.back().t == Approx(100.0));
  CHECK(thin.samples.back().rho == Approx(full.samples.back().rho).epsilon(1e-12));
}

TEST_CASE("halving tolerances reduces amplitude error") {
  // fifth order: a factor 2^5 in tolerance should buy >= 2^4 in error
  const double coarse = max_amplitude_error(1e-6);
  const double fine = max_amplitude_error(1e-6 / 32.0);
  CHECK(coarse / fine >= 16.0);
}

SystemSpec bounded(const char* name) {
  // ex1 defaults blow up in finite time from these amplitudes
  if (std::string(name) == "ex1") return build(name, {{"c", 0.0}}).system;
  return build(name).system;
}

TEST_CASE("Cartesian and polar integration agree") {
  for (const char* name : {"ex1", "ex2", "ex3"}) {
    const SystemSpec sys = bounded(name);
    IntegratorConfig cfg;
    const PolarState init{1.1, 0.4, 1.0};
    const auto a = integrate(sys, init, cfg, IntegrationForm::Cartesian);
    const auto b = integrate(sys, init, cfg, IntegrationForm::Polar);
    CHECK(std::abs(a.samples.back().rho - b.samples.back().rho) < 1e-6);
    CHECK(std::abs(a.samples.back().theta - b.samples.back().theta) < 1e-5);
  }
}

TEST_CASE("time-grid independence") {
  for (const char* name : {"ex1", "ex2", "ex3"}) {
    const SystemSpec sys = build(name).system;
    // ex1 starts next to its stable locked state; elsewhere it blows up
    const bool locked = std::string(name) == "ex1";
    const PolarState init{locked ? 2.0 / std::sqrt(3.0) : 1.0,
                          locked ? -kPi + sys.frame_ratio() * sys.drive.phase(1.0) : 0.2, 1.0};
    IntegratorConfig cfg;
    cfg.t_end = 1e4;
    cfg.record_stride = 1000;
    const auto a = integrate(sys, init, cfg);
    cfg.rel_tol = 1e-11;
    cfg.abs_tol = 1e-13;
    const auto b = integrate(sys, init, cfg);
    CHECK(std::abs(a.samples.back().rho - b.samples.back().rho) < 1e-6);
  }
}

TEST_CASE("polar integration records a domain exit") {
  SystemSpec sys = build("ex1", {{"a", 1.0}, {"b", 0.0}, {"c", 0.0}}).system;
  sys.cartesian_rhs = nullptr;
  sys.r_max = 1.5;
  IntegratorConfig cfg;
  cfg.t_end = 1e4;
  const auto rec = integrate(sys, PolarState{1.0, 0.0, 1.0}, cfg);
  REQUIRE(rec.exit_time);
  CHECK(*rec.exit_time < 1e4);
  CHECK(rec.samples.back().t == Approx(*rec.exit_time));
}

TEST_CASE("log growth of the resonant linear forcing") {
  const SystemSpec sys = build("ex1", {{"a", 1.0}, {"b", 0.0}, {"c", 0.0}}).system;
  IntegratorConfig cfg;
  cfg.t_end = 1e5;
  cfg.record_stride = 50;
  const auto rec = integrate(sys, CartesianState{0.5, 0.0, 1.0}, cfg);
  std::vector<double> lt, r;
  for (const auto& s : rec.samples) {
    if (s.t < 1e4) continue;
    lt.push_back(std::log(s.t));
    r.push_back(s.rho);
  }
  const Eigen::Map<Eigen::VectorXd> X(lt.data(), lt.size()), Y(r.data(), r.size());
  const Eigen::VectorXd xc = X.array() - X.mean();
  CHECK(xc.dot(Y) / xc.squaredNorm() == Approx(0.5).epsilon(0.04));
}

TEST_CASE("off resonance the amplitude settles at init-dependent constants") {
  const SystemSpec sys = build("ex1", {{"a", 1.0}, {"b", 2.0}, {"c", 0.0}, {"s0", std::sqrt(2.0)}}).system;
  IntegratorConfig cfg;
  cfg.t_end = 1e5;
  cfg.record_stride = 50;
  std::vector<double> finals;
  for (double r0 : {0.5, 1.0, 1.5}) {
    const auto rec = integrate(sys, PolarState{r0, 0.0, 1.0}, cfg);
    std::vector<double> t, r;
    for (const auto& s : rec.samples) {
      if (s.t < 1e4) continue;
      t.push_back(s.t);
      r.push_back(s.rho);
    }
    const Eigen::Map<Eigen::VectorXd> X(t.data(), t.size()), Y(r.data(), r.size());
    const Eigen::VectorXd xc = X.array() - X.mean();
    CHECK(std::abs(xc.dot(Y) / xc.squaredNorm()) < 1e-4);
    finals.push_back(rec.samples.back().rho);
  }
  CHECK(std::abs(finals[1] - finals[0]) > 0.05);
  CHECK(std::abs(finals[2] - finals[1]) > 0.05);
}

TEST_CASE("winding of a constant and a linear phase") {
  TrajectoryRecord rec;
  for (int i = 0; i <= 100; ++i) rec.samples.push_back({double(i), 0, 0, 1, -kPi});
  for (const auto& w : resample_theta(rec)) {
    CHECK(w.winding == 0);
    CHECK(w.principal == Approx(-kPi));
  }
  rec.samples.clear();
  for (int i = 0; i <= 200; ++i) rec.samples.push_back({double(i), 0, 0, 1, 0.1 * i});
  const auto ws = resample_theta(rec);
  std::vector<double> changes;
  for (std::size_t i = 1; i < ws.size(); ++i) {
    CHECK(ws[i].winding - ws[i - 1].winding >= 0);
    if (ws[i].winding != ws[i - 1].winding) changes.push_back(ws[i].t);
    CHECK(ws[i].principal + kTwoPi * ws[i].winding == Approx(rec.samples[i].theta));
  }
  REQUIRE(changes.size() == 3);
  CHECK(changes[1] - changes[0] == Approx(63.0).epsilon(0.02));
}

TEST_CASE("drift run winds monotonically") {
  const SystemSpec sys = build("ex2", {{"s1", 0.5}}).system;
  IntegratorConfig cfg;
  cfg.t_end = 2e4;
  cfg.record_stride = 20;
  const auto rec = integrate(sys, PolarState{1.0, 0.0, 1.0}, cfg);
  const auto ws = resample_theta(rec);
  // theta decreases for these parameters; the fast ripple may cross a
  // winding boundary twice, so the winding is tracked with hysteresis
  long level = 0;
  bool first = true;
  std::size_t changes = 0, wrong = 0;
  for (const auto& w : ws) {
    if (w.t < 100.0) continue;
    const double theta = w.principal + kTwoPi * w.winding;
    if (first) {
      level = w.winding;
      first = false;
      continue;
    }
    if (theta < kTwoPi * level - kPi - 0.1) {
      --level;
      ++changes;
    } else if (theta > kTwoPi * level + kPi + 0.1) {
      ++level;
      ++wrong;
    }
  }
  CHECK(changes > 2);
  CHECK(wrong == 0);
}
