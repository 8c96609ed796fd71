#pragma once

#include "reslab/error.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace reslab {

/// Step-size controls for DormandPrince54.
template <typename Scalar>
struct StepControl {
  Scalar rel_tol = Scalar(1e-9);
  Scalar abs_tol = Scalar(1e-11);
  Scalar h_init = Scalar(1e-3);
  Scalar h_max = Scalar(0.5);
  /// A step below underflow_factor * |t| is reported as stiffness.
  Scalar underflow_factor = Scalar(1e-12);
};

/// Dormand-Prince 5(4) embedded pair with FSAL and a PI step controller.
///
/// The state is a fixed-size Eigen column vector. The right-hand side is any
/// callable `State rhs(Scalar t, const State& y)`. Each accepted step is
/// handed to `observer(t, y)`; returning false stops the integration early.
/// The local error estimate is controlled in the max norm against
/// abs_tol + rel_tol * max(|y_old|, |y_new|).
template <typename Scalar, int Dim>
class DormandPrince54 {
 public:
  using State = Eigen::Matrix<Scalar, Dim, 1>;

  explicit DormandPrince54(StepControl<Scalar> control) : control_(control) {}

  struct Stats {
    long accepted = 0;
    long rejected = 0;
    long evaluations = 0;
  };

  template <typename Rhs, typename Observer>
  Stats integrate(Rhs&& rhs, State y, Scalar t, Scalar t_end, Observer&& observer) const {
    using std::abs;
    using std::max;
    using std::min;
    using std::pow;

    constexpr Scalar c2 = Scalar(1) / 5, c3 = Scalar(3) / 10, c4 = Scalar(4) / 5, c5 = Scalar(8) / 9;
    constexpr Scalar a21 = Scalar(1) / 5;
    constexpr Scalar a31 = Scalar(3) / 40, a32 = Scalar(9) / 40;
    constexpr Scalar a41 = Scalar(44) / 45, a42 = Scalar(-56) / 15, a43 = Scalar(32) / 9;
    constexpr Scalar a51 = Scalar(19372) / 6561, a52 = Scalar(-25360) / 2187,
                     a53 = Scalar(64448) / 6561, a54 = Scalar(-212) / 729;
    constexpr Scalar a61 = Scalar(9017) / 3168, a62 = Scalar(-355) / 33, a63 = Scalar(46732) / 5247,
                     a64 = Scalar(49) / 176, a65 = Scalar(-5103) / 18656;
    constexpr Scalar a71 = Scalar(35) / 384, a73 = Scalar(500) / 1113, a74 = Scalar(125) / 192,
                     a75 = Scalar(-2187) / 6784, a76 = Scalar(11) / 84;
    constexpr Scalar e1 = Scalar(71) / 57600, e3 = Scalar(-71) / 16695, e4 = Scalar(71) / 1920,
                     e5 = Scalar(-17253) / 339200, e6 = Scalar(22) / 525, e7 = Scalar(-1) / 40;

    constexpr Scalar safety = Scalar(0.9);
    constexpr Scalar fac_min = Scalar(0.2);
    constexpr Scalar fac_max = Scalar(10);
    constexpr Scalar beta = Scalar(0.04);
    constexpr Scalar expo = Scalar(0.2) - beta * Scalar(0.75);

    Stats stats;
    if (!(t_end > t)) return stats;

    Scalar h = min(control_.h_init, t_end - t);
    Scalar err_old = Scalar(1e-4);
    State k1 = rhs(t, y);
    ++stats.evaluations;
    State k2, k3, k4, k5, k6, k7, y_new, err_vec;

    while (t < t_end) {
      if (t + h > t_end) h = t_end - t;
      const Scalar h_floor = control_.underflow_factor * max(abs(t), Scalar(1));
      if (h < h_floor) {
        std::ostringstream msg;
        msg << "step size underflow (h=" << h << ") at t=" << t << "; system is stiff or singular";
        throw NumericalError(msg.str());
      }

      k2 = rhs(t + c2 * h, (y + h * a21 * k1).eval());
      k3 = rhs(t + c3 * h, (y + h * (a31 * k1 + a32 * k2)).eval());
      k4 = rhs(t + c4 * h, (y + h * (a41 * k1 + a42 * k2 + a43 * k3)).eval());
      k5 = rhs(t + c5 * h, (y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4)).eval());
      k6 = rhs(t + h, (y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5)).eval());
      y_new = y + h * (a71 * k1 + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
      k7 = rhs(t + h, y_new);
      stats.evaluations += 6;
      err_vec = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

      Scalar err = 0;
      bool finite = y_new.allFinite() && err_vec.allFinite();
      if (finite) {
        for (int i = 0; i < y.size(); ++i) {
          const Scalar sc = control_.abs_tol + control_.rel_tol * max(abs(y[i]), abs(y_new[i]));
          err = max(err, abs(err_vec[i]) / sc);
        }
      }

      if (finite && err <= Scalar(1)) {
        t += h;
        y = y_new;
        k1 = k7;
        ++stats.accepted;
        const Scalar err_c = max(err, Scalar(1e-10));
        Scalar fac = safety * pow(err_c, -expo) * pow(err_old, beta);
        fac = min(fac_max, max(fac_min, fac));
        err_old = max(err, Scalar(1e-4));
        h = min(control_.h_max, h * fac);
        if (!observer(t, static_cast<const State&>(y))) break;
      } else {
        ++stats.rejected;
        const Scalar fac = finite ? max(fac_min, safety * pow(err, -Scalar(0.2))) : Scalar(0.1);
        h *= min(Scalar(1), fac);
      }
    }
    return stats;
  }

 private:
  StepControl<Scalar> control_;
};

}  // namespace reslab
