#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "reslab/bench.hpp"
#include "reslab/error.hpp"
#include "reslab/model.hpp"

#include <cmath>
#include <random>

using namespace reslab;
using doctest::Approx;

TEST_CASE("to_polar on axis and quadrant points") {
  auto p = to_polar({1.0, 0.0, 1.0});
  CHECK(p.rho == Approx(1.0));
  CHECK(p.phi == Approx(0.0));
  CHECK(p.t == 1.0);

  p = to_polar({0.0, -1.0, 1.0});
  CHECK(p.rho == Approx(1.0));
  CHECK(p.phi == Approx(kPi / 2));

  p = to_polar({3.0, 4.0, 2.0});
  CHECK(p.rho == Approx(5.0));
  CHECK(p.phi == Approx(-0.927295218).epsilon(1e-9));
  CHECK(p.t == 2.0);

  CHECK_THROWS_AS(to_polar({0.0, 0.0, 1.0}), ConfigError);
}

TEST_CASE("polar and Cartesian round trip") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  for (int i = 0; i < 1000; ++i) {
    const CartesianState c{u(rng), u(rng), 1.0};
    if (std::hypot(c.x1, c.x2) < 1e-9) continue;
    const CartesianState back = to_cartesian(to_polar(c));
    CHECK(std::abs(back.x1 - c.x1) < 1e-12);
    CHECK(std::abs(back.x2 - c.x2) < 1e-12);
  }
}

TEST_CASE("wrap_angle lands in (-pi, pi]") {
  CHECK(wrap_angle(kPi) == Approx(kPi));
  CHECK(wrap_angle(-kPi) == Approx(kPi));
  CHECK(wrap_angle(3 * kPi / 2) == Approx(-kPi / 2));
  CHECK(wrap_angle(20.0) == Approx(20.0 - 6 * kPi));
  CHECK(angle_difference(0.1, kTwoPi - 0.1) == Approx(0.2));
}

TEST_CASE("resonance detection") {
  auto r = check_resonance(1.0, 1.0);
  REQUIRE(r);
  CHECK(r->kappa == 1);
  CHECK(r->varkappa == 1);

  r = check_resonance(2.0, 1.0);
  REQUIRE(r);
  CHECK(r->kappa == 1);
  CHECK(r->varkappa == 2);

  CHECK_FALSE(check_resonance(std::sqrt(2.0), 1.0));

  r = check_resonance(1.5, 1.0);
  REQUIRE(r);
  CHECK(r->kappa == 2);
  CHECK(r->varkappa == 3);
}

TEST_CASE("resonance detection is scale invariant") {
  for (double c : {0.1, 0.37, 1.0, 3.0, 250.0}) {
    for (auto [s0, w] : {std::pair{1.0, 1.0}, {2.0, 1.0}, {1.5, 1.0}, {3.0, 4.0}}) {
      const auto a = check_resonance(s0, w);
      const auto b = check_resonance(c * s0, c * w);
      REQUIRE(a);
      REQUIRE(b);
      CHECK(a->kappa == b->kappa);
      CHECK(a->varkappa == b->varkappa);
    }
  }
}

TEST_CASE("power-series drive") {
  const DrivePhase log_drive = power_series_drive(1.0, 1, {{1, 0.5}});
  CHECK(log_drive.phase(std::exp(1.0)) == Approx(std::exp(1.0) + 0.5));
  CHECK(log_drive.rate(2.0) == Approx(1.25));

  const DrivePhase sqrt_drive = power_series_drive(2.0, 2, {{1, 0.5}});
  CHECK(sqrt_drive.phase(4.0) == Approx(8.0 + 2.0));
  CHECK(sqrt_drive.rate(4.0) == Approx(2.25));
  CHECK(sqrt_drive.coeff(1) == 0.5);
  CHECK(sqrt_drive.coeff(2) == 0.0);

  // S' tends to s0
  CHECK(std::abs(sqrt_drive.rate(1e12) - 2.0) < 1e-6);

  // rate is the derivative of phase
  for (double t : {1.5, 10.0, 300.0}) {
    const double h = 1e-5 * t;
    const double fd = (sqrt_drive.phase(t + h) - sqrt_drive.phase(t - h)) / (2 * h);
    CHECK(fd == Approx(sqrt_drive.rate(t)).epsilon(1e-8));
  }
}

TEST_CASE("drive and system validation") {
  DrivePhase d = power_series_drive(1.0, 1, {});
  d.s0 = -1.0;
  CHECK_THROWS_AS(d.validate(), ConfigError);
  d = power_series_drive(1.0, 1, {});
  d.q = 0;
  CHECK_THROWS_AS(d.validate(), ConfigError);

  SystemSpec sys = build("ex3").system;
  CHECK_NOTHROW(sys.validate());
  std::swap(sys.terms[0], sys.terms[1]);
  CHECK_THROWS_AS(sys.validate(), ConfigError);
  sys = build("ex3").system;
  sys.r_max = 0.0;
  CHECK_THROWS_AS(sys.validate(), ConfigError);
}

TEST_CASE("Cartesian right-hand side matches the polar rates") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> ur(0.2, 3.0), up(-kPi, kPi), ut(1.0, 50.0);
  for (const char* name : {"ex1", "ex2", "ex3"}) {
    const SystemSpec sys = build(name).system;
    for (int i = 0; i < 200; ++i) {
      const double rho = ur(rng), phi = up(rng), t = ut(rng);
      const CartesianState c = to_cartesian({rho, phi, t});
      const Vec2 xd = sys.cartesian_rhs(c.x1, c.x2, t);
      // rho' = (x1 x1' + x2 x2') / rho, phi' = (x2 x1' - x1 x2') / rho^2
      const double rho_dot = (c.x1 * xd[0] + c.x2 * xd[1]) / rho;
      const double phi_dot = (c.x2 * xd[0] - c.x1 * xd[1]) / (rho * rho);
      const Vec2 pr = sys.polar_rates(rho, phi, t);
      CHECK(std::abs(rho_dot - pr[0]) < 1e-12);
      CHECK(std::abs(phi_dot - sys.omega - pr[1]) < 1e-12);
    }
  }
}

TEST_CASE("ex1 polar rates follow the Z form") {
  const Params p = {{"a", 1.0}, {"b", 2.0}, {"c", -1.0}, {"s0", 1.0}, {"s1", 0.3}};
  const SystemSpec sys = build("ex1", p).system;
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> ur(0.2, 3.0), up(-kPi, kPi), ut(1.0, 50.0);
  for (int i = 0; i < 100; ++i) {
    const double rho = ur(rng), phi = up(rng), t = ut(rng);
    const double S = t + 0.3 * std::log(t);
    const double x = -rho * std::sin(phi);
    const double Z = (1.0 + 2.0 * x - x * x) * std::sin(S);
    const Vec2 pr = sys.polar_rates(rho, phi, t);
    CHECK(std::abs(pr[0] - (-Z * std::sin(phi) / t)) < 1e-12);
    CHECK(std::abs(pr[1] - (-Z * std::cos(phi) / (rho * t))) < 1e-12);
  }
}

TEST_CASE("perturbation terms are 2 pi periodic") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> ur(0.2, 3.0), ua(-10.0, 10.0);
  for (const char* name : {"ex1", "ex2", "ex3"}) {
    for (const auto& term : build(name).system.terms) {
      for (int i = 0; i < 50; ++i) {
        const double rho = ur(rng), phi = ua(rng), S = ua(rng);
        CHECK(std::abs(term.f(rho, phi + kTwoPi, S) - term.f(rho, phi, S)) < 1e-12);
        CHECK(std::abs(term.f(rho, phi, S + kTwoPi) - term.f(rho, phi, S)) < 1e-12);
        CHECK(std::abs(term.g(rho, phi + kTwoPi, S) - term.g(rho, phi, S)) < 1e-12);
        CHECK(std::abs(term.g(rho, phi, S + kTwoPi) - term.g(rho, phi, S)) < 1e-12);
      }
    }
  }
}

TEST_CASE("frame ratio and fast period") {
  const SystemSpec s1 = build("ex1").system;
  CHECK(s1.frame_ratio() == Approx(1.0));
  CHECK(s1.fast_period() == Approx(kTwoPi));
  const SystemSpec s2 = build("ex2").system;
  CHECK(s2.frame_ratio() == Approx(0.5));
  CHECK(s2.fast_period() == Approx(kTwoPi));
  const SystemSpec s0 = build("ex1", {{"s0", std::sqrt(2.0)}, {"c", 0.0}}).system;
  CHECK_FALSE(s0.resonance);
}
