#include "reslab/analysis.hpp"

#include "reslab/error.hpp"

#include <Eigen/LU>
#include <boost/math/tools/roots.hpp>

#include <algorithm>
#include <cmath>
#include <type_traits>
#include <limits>
#include <mutex>
#include <thread>

namespace reslab {

const char* to_string(RegimeKind kind) {
  switch (kind) {
    case RegimeKind::PhaseLockedStable: return "PhaseLockedStable";
    case RegimeKind::PhaseLockedUnstable: return "PhaseLockedUnstable";
    case RegimeKind::PhaseDriftStable: return "PhaseDriftStable";
    case RegimeKind::PhaseDriftUnstable: return "PhaseDriftUnstable";
    case RegimeKind::Degenerate: return "Degenerate";
    case RegimeKind::Inconclusive: return "Inconclusive";
  }
  return "Inconclusive";
}

namespace {

// (Lambda_n, Omega_m) at (r, psi).
Vec2 leading(const AveragedField& avg, double r, double psi) {
  if (avg.n == avg.m) return avg(avg.n, r, psi);
  return Vec2(avg.lambda(avg.n, r, psi), avg.omega(avg.m, r, psi));
}

template <typename Eval>
auto central4(Eval&& eval, double h) {
  using Value = std::decay_t<decltype(eval(h))>;
  const Value out = (eval(-2.0 * h) - 8.0 * eval(-h) + 8.0 * eval(h) - eval(2.0 * h)) / (12.0 * h);
  return out;
}

void require_indices(const AveragedField& avg) {
  if (avg.n < 1 || avg.m < 1) throw ConfigError("analysis: leading indices n, m are not set");
}

double kronecker(int a, int b) { return a == b ? 1.0 : 0.0; }

}  // namespace

void fill_stability(FixedPointReport& fp, const AnalysisTolerances& tol) {
  const double lam = fp.lambda_n, nu = fp.nu_n, eta = fp.eta_m, om = fp.omega_m;
  fp.det_D = lam * om - nu * eta;
  fp.degenerate = std::abs(fp.det_D) < tol.degenerate_tol;
  fp.defective = false;
  const int n = fp.n, m = fp.m, q = fp.q;
  if (n < m) {
    fp.alpha1 = lam;
    fp.alpha2 = lam != 0.0 ? fp.det_D / lam : std::numeric_limits<double>::quiet_NaN();
  } else if (n > m) {
    fp.alpha1 = om != 0.0 ? fp.det_D / om : std::numeric_limits<double>::quiet_NaN();
    fp.alpha2 = om;
  } else {
    const double tr = lam + om;
    const double disc = tr * tr - 4.0 * fp.det_D;
    const std::complex<double> root = std::sqrt(std::complex<double>(disc, 0.0));
    fp.alpha1 = 0.5 * (tr + root);
    fp.alpha2 = 0.5 * (tr - root);
    fp.defective = std::abs(disc) < tol.defective_tol;
  }
  if (n == m) {
    fp.beta1 = fp.alpha1.real();
    fp.beta2 = fp.alpha2.real();
  } else {
    fp.beta1 = fp.alpha1.real() + (n - m) / (2.0 * q) * kronecker(n, q);
    fp.beta2 = fp.alpha2.real() + (m - n) / (2.0 * q) * kronecker(m, q);
  }
}

FixedPointReport linearize(const AveragedField& avg, double rho, double phi, const AnalysisTolerances& tol) {
  require_indices(avg);
  FixedPointReport fp;
  fp.rho_star = rho;
  fp.phi_star = wrap_angle(phi);
  fp.n = avg.n;
  fp.m = avg.m;
  fp.q = avg.q;
  const double h = 1e-5 * std::max(1.0, std::abs(rho));
  const Vec2 dR = central4([&](double d) -> Vec2 { return leading(avg, rho + d, phi); }, h);
  const Vec2 dPhi = central4([&](double d) -> Vec2 { return leading(avg, rho, phi + d); }, h);
  fp.lambda_n = dR[0];
  fp.eta_m = dR[1];
  fp.nu_n = dPhi[0];
  fp.omega_m = dPhi[1];
  fp.residual = leading(avg, rho, phi);
  fill_stability(fp, tol);
  return fp;
}

namespace {

// Converged roots shared between seeds; an iterate that lands next to one
// stops there.
class RootBook {
 public:
  std::optional<Vec2> near(const Vec2& x) const {
    const std::lock_guard lock(mutex_);
    for (const Vec2& r : roots_) {
      if (std::abs(r[0] - x[0]) < 1e-7 && std::abs(angle_difference(r[1], x[1])) < 1e-7) return r;
    }
    return std::nullopt;
  }
  void add(const Vec2& x) {
    const std::lock_guard lock(mutex_);
    roots_.push_back(x);
  }

 private:
  mutable std::mutex mutex_;
  std::vector<Vec2> roots_;
};

std::optional<Vec2> newton(const AveragedField& avg, Vec2 x, const AnalysisTolerances& tol, RootBook& book) {
  auto F = [&](const Vec2& y) { return leading(avg, y[0], y[1]); };
  auto inside = [&](const Vec2& y) { return y[0] > tol.rho_floor && y[0] <= avg.r_max && y.allFinite(); };
  Vec2 f = F(x);
  for (int it = 0; it < tol.max_iterations; ++it) {
    if (!f.allFinite()) return std::nullopt;
    if (f.cwiseAbs().maxCoeff() < tol.fp_tol) {
      book.add(x);
      return x;
    }
    Mat2 J;
    for (int c = 0; c < 2; ++c) {
      const double h = 1e-6 * std::max(1.0, std::abs(x[c]));
      Vec2 xp = x, xm = x;
      xp[c] += h;
      xm[c] -= h;
      J.col(c) = (F(xp) - F(xm)) / (2.0 * h);
    }
    const double det = J.determinant();
    if (!std::isfinite(det) || std::abs(det) < 1e-300) return std::nullopt;
    const Vec2 step = -J.inverse() * f;
    double scale = 1.0;
    bool moved = false;
    for (int k = 0; k < 12; ++k, scale *= 0.5) {
      Vec2 trial = x + scale * step;
      if (!inside(trial)) continue;
      trial[1] = wrap_angle(trial[1]);
      const Vec2 ft = F(trial);
      if (ft.allFinite() && ft.norm() < f.norm()) {
        x = trial;
        f = ft;
        moved = true;
        break;
      }
    }
    if (!moved) return std::nullopt;
    if (f.cwiseAbs().maxCoeff() < 1e-6) {
      if (const auto known = book.near(x)) return known;
    }
  }
  if (f.cwiseAbs().maxCoeff() < tol.fp_tol) {
    book.add(x);
    return x;
  }
  return std::nullopt;
}

}  // namespace

std::vector<FixedPointReport> find_fixed_points(const AveragedField& avg, const AnalysisTolerances& tol) {
  require_indices(avg);
  std::vector<Vec2> seeds;
  for (int i = 0; i < tol.psi_seeds; ++i) {
    const double psi = -kPi + kTwoPi * i / tol.psi_seeds + tol.seed_offset;
    for (int j = 0; j < tol.rho_seeds; ++j) seeds.emplace_back(avg.r_max * (j + 0.5) / tol.rho_seeds, psi);
  }

  std::vector<std::optional<Vec2>> roots(seeds.size());
  RootBook book;
  const int threads = std::max(1, std::min<int>(tol.threads, static_cast<int>(seeds.size())));
  if (threads == 1) {
    for (std::size_t i = 0; i < seeds.size(); ++i) roots[i] = newton(avg, seeds[i], tol, book);
  } else {
    std::vector<std::thread> pool;
    std::exception_ptr failure;
    std::mutex failure_mutex;
    for (int w = 0; w < threads; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t i = w; i < seeds.size(); i += threads) roots[i] = newton(avg, seeds[i], tol, book);
        } catch (...) {
          const std::lock_guard lock(failure_mutex);
          failure = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
  }

  std::vector<Vec2> unique;
  for (const auto& r : roots) {
    if (!r) continue;
    const Vec2 x((*r)[0], wrap_angle((*r)[1]));
    const bool seen = std::any_of(unique.begin(), unique.end(), [&](const Vec2& u) {
      return std::abs(u[0] - x[0]) < tol.dedup_tol && std::abs(angle_difference(u[1], x[1])) < tol.dedup_tol;
    });
    if (!seen) unique.push_back(x);
  }
  std::sort(unique.begin(), unique.end(), [](const Vec2& a, const Vec2& b) {
    return a[0] != b[0] ? a[0] < b[0] : a[1] < b[1];
  });

  std::vector<FixedPointReport> out;
  out.reserve(unique.size());
  for (const auto& x : unique) out.push_back(linearize(avg, x[0], x[1], tol));
  return out;
}

RegimeClassification classify(const FixedPointReport& fp) {
  RegimeClassification c;
  c.rho_star = fp.rho_star;
  c.phi_star = fp.phi_star;
  if (fp.degenerate) {
    c.kind = RegimeKind::Degenerate;
    c.basis = "|D| below degenerate_tol; degenerate equilibrium is not covered";
    return c;
  }
  const bool below_q = std::max(fp.n, fp.m) < fp.q;
  const bool persist_unstable = fp.beta1 > 0.0 && fp.beta2 > 0.0 && below_q;
  if (fp.n == fp.m) {
    const double re1 = fp.alpha1.real(), re2 = fp.alpha2.real();
    if (fp.defective) {
      const double a0 = 0.5 * (fp.lambda_n + fp.omega_m);
      if (a0 < 0.0) {
        c.kind = RegimeKind::PhaseLockedStable;
        c.basis = "defective n = m case: double eigenvalue negative, lock persists and is stable";
      } else if (a0 > 0.0) {
        c.kind = RegimeKind::PhaseLockedUnstable;
        c.basis = "defective n = m case: double eigenvalue positive";
      } else {
        c.kind = RegimeKind::Inconclusive;
        c.basis = "defective case with zero eigenvalue";
      }
      return c;
    }
    if (re1 < 0.0 && re2 < 0.0) {
      c.kind = RegimeKind::PhaseLockedStable;
      c.basis = "n = m: Re alpha1, Re alpha2 < 0, so beta1, beta2 < 0 and the lock is stable";
    } else if (re1 > 0.0 || re2 > 0.0) {
      c.kind = RegimeKind::PhaseLockedUnstable;
      c.basis = persist_unstable
                    ? "n = m: Re alpha_j > 0 with beta1, beta2 > 0 and max(n,m) < q, instability persists"
                    : "n = m: Re alpha_j > 0 in the limiting system only; persistence of the "
                      "instability needs beta1, beta2 > 0 and max(n,m) < q";
    } else {
      c.kind = RegimeKind::Inconclusive;
      c.basis = "n = m: eigenvalue on the imaginary axis";
    }
    return c;
  }
  if (fp.beta1 < 0.0 && fp.beta2 < 0.0) {
    c.kind = RegimeKind::PhaseLockedStable;
    c.basis = "n != m: beta1, beta2 < 0, lock is stable";
  } else if (fp.alpha1.real() > 0.0 && fp.alpha2.real() > 0.0 && below_q) {
    c.kind = RegimeKind::PhaseLockedUnstable;
    c.basis = persist_unstable ? "n != m: alpha and beta > 0 with max(n,m) < q, instability persists"
                               : "n != m: alpha1, alpha2 > 0 with max(n,m) < q, limiting system unstable";
  } else {
    c.kind = RegimeKind::Inconclusive;
    c.basis = "n != m with mixed signs or max(n,m) >= q: no clause applies";
  }
  return c;
}

RegimeClassification classify(const DriftReport& dr, double null_tol) {
  RegimeClassification c;
  c.rho_star = dr.rho_star;
  if (!(dr.lambda_sup < null_tol) || !(dr.omega_min_abs > 0.0)) {
    c.kind = RegimeKind::Inconclusive;
    c.basis = "drift assumption fails: Lambda_n not identically zero or Omega_m vanishes";
  } else if (dr.ell_max < 0.0) {
    c.kind = RegimeKind::PhaseDriftStable;
    c.basis = "drift: ell_n < 0 and Omega_m != 0, amplitude is stable";
  } else if (dr.ell_min > 0.0) {
    c.kind = RegimeKind::PhaseDriftUnstable;
    c.basis = "drift: ell_n > 0, amplitude is unstable";
  } else {
    c.kind = RegimeKind::Inconclusive;
    c.basis = "ell_n changes sign";
  }
  return c;
}

namespace {

constexpr int kPsiGrid = 256;

// Profiles Lambda_n, ell_n and Omega_m over the psi grid. Stops after the
// Lambda_n sweep when that already exceeds null_tol.
DriftReport drift_profile(const AveragedField& avg, double rho, double null_tol) {
  DriftReport dr;
  dr.rho_star = rho;
  dr.n = avg.n;
  dr.m = avg.m;
  for (int j = 0; j < kPsiGrid; ++j) {
    const double psi = -kPi + kTwoPi * j / kPsiGrid;
    dr.lambda_sup = std::max(dr.lambda_sup, std::abs(avg.lambda(avg.n, rho, psi)));
    if (dr.lambda_sup >= null_tol) return dr;
  }
  dr.ell_min = std::numeric_limits<double>::infinity();
  dr.ell_max = -std::numeric_limits<double>::infinity();
  dr.omega_min_abs = std::numeric_limits<double>::infinity();
  const double h = 1e-5 * std::max(1.0, rho);
  double omega_lo = std::numeric_limits<double>::infinity(), omega_hi = -omega_lo;
  for (int j = 0; j < kPsiGrid; ++j) {
    const double psi = -kPi + kTwoPi * j / kPsiGrid;
    const double ell = central4([&](double d) { return avg.lambda(avg.n, rho + d, psi); }, h);
    dr.ell_min = std::min(dr.ell_min, ell);
    dr.ell_max = std::max(dr.ell_max, ell);
    const double om = avg.omega(avg.m, rho, psi);
    omega_lo = std::min(omega_lo, om);
    omega_hi = std::max(omega_hi, om);
    dr.omega_min_abs = std::min(dr.omega_min_abs, std::abs(om));
  }
  if (omega_lo * omega_hi <= 0.0) dr.omega_min_abs = 0.0;
  dr.omega_sign = omega_hi < 0.0 ? -1.0 : (omega_lo > 0.0 ? 1.0 : 0.0);
  return dr;
}

// Sign changes of fn on a uniform grid, refined by TOMS 748. Cells where fn
// stays below the noise floor are skipped.
template <typename Fn>
void bracket_roots(Fn&& fn, double lo, double hi, int cells, double noise, std::vector<double>& out) {
  const double dr = (hi - lo) / cells;
  double a = lo, fa = fn(a);
  for (int i = 1; i <= cells; ++i) {
    const double b = lo + i * dr;
    const double fb = fn(b);
    if (std::max(std::abs(fa), std::abs(fb)) < noise) {
      // flat
    } else if (fa == 0.0) {
      out.push_back(a);
    } else if (fa * fb < 0.0) {
      std::uintmax_t iters = 100;
      const auto root = boost::math::tools::toms748_solve(
          fn, a, b, fa, fb, boost::math::tools::eps_tolerance<double>(50), iters);
      out.push_back(0.5 * (root.first + root.second));
    }
    a = b;
    fa = fb;
  }
}

}  // namespace

std::vector<DriftReport> detect_drift(const AveragedField& avg, const std::vector<double>& rho_seeds,
                                      const AnalysisTolerances& tol) {
  require_indices(avg);
  std::vector<double> candidates = rho_seeds;
  const double lo = avg.r_max / 400.0, hi = avg.r_max;
  // the psi-mean of a low-degree trigonometric polynomial is exact on 64 nodes
  constexpr int kMeanGrid = 64;
  auto averaged = [&](double r) {
    double acc = 0.0;
    for (int j = 0; j < kMeanGrid; ++j) acc += avg.lambda(avg.n, r, -kPi + kTwoPi * j / kMeanGrid);
    return acc / kMeanGrid;
  };
  bracket_roots(averaged, lo, hi, 200, tol.null_tol, candidates);
  for (int j = 0; j < 8; ++j) {
    const double psi = -kPi + kTwoPi * (j + 0.37) / 8;
    bracket_roots([&](double r) { return avg.lambda(avg.n, r, psi); }, lo, hi, 200, tol.null_tol, candidates);
  }
  std::sort(candidates.begin(), candidates.end());

  std::vector<DriftReport> out;
  for (double rho : candidates) {
    if (!(rho > 0.0 && rho <= avg.r_max)) continue;
    if (!out.empty() && std::abs(out.back().rho_star - rho) < 1e-6) continue;
    DriftReport dr = drift_profile(avg, rho, tol.null_tol);
    if (dr.lambda_sup < tol.null_tol && dr.omega_min_abs > tol.null_tol) out.push_back(dr);
  }
  return out;
}

AsymptoticCorrection asymptotic_correction(const AveragedField& avg, const FixedPointReport& fp) {
  const int n = fp.n, m = fp.m, q = fp.q;
  if (std::max(n, m) > q || (m == q && n < m) || (n == q && m < n)) {
    throw NumericalError("asymptotic_correction: logarithmic series branch is not supported");
  }
  AsymptoticCorrection ac;
  ac.rhs = Vec2(avg.lambda(n + 1, fp.rho_star, fp.phi_star), avg.omega(m + 1, fp.rho_star, fp.phi_star));
  ac.matrix = -fp.jacobian();
  ac.matrix(0, 0) -= kronecker(n, q) / q;
  ac.matrix(1, 1) -= kronecker(m, q) / q;
  const double det = ac.matrix.determinant();
  if (std::abs(det) < 1e-14) throw NumericalError("asymptotic_correction: singular linear system");
  const Vec2 sol = ac.matrix.inverse() * ac.rhs;
  ac.xi1 = sol[0];
  ac.zeta1 = sol[1];
  return ac;
}

LyapunovForm::LyapunovForm(const FixedPointReport& fp) {
  if (fp.n > fp.m) throw NumericalError("Lyapunov form: n > m is not supported");
  const double shift = kronecker(fp.m, fp.q) * (fp.m - fp.n) / (2.0 * fp.q);
  const double lam = fp.lambda_n;
  // nu from finite differences carries ~1e-12 noise where it vanishes exactly
  const double scale = std::max({1.0, std::abs(lam), std::abs(fp.eta_m), std::abs(fp.omega_m)});
  const double nu = std::abs(fp.nu_n) < 1e-8 * scale ? 0.0 : fp.nu_n;
  if (nu == 0.0) {
    C1 = lam * (fp.omega_m + shift);
  } else {
    C1 = lam * (fp.alpha2.real() + shift) / (2.0 * nu * nu);
  }
  if (!(C1 > 0.0)) throw NumericalError("Lyapunov form: C1 <= 0, beta signs are inconsistent");
  C2 = -(2.0 * C1 * nu + 2.0 * fp.eta_m) / lam;
  exponent = static_cast<double>(fp.m - fp.n) / fp.q;
}

LyapunovMonitorReport lyapunov_monitor(const FixedPointReport& fp, const TrajectoryRecord& rec, double t_min,
                                       const CoordinateMap& map, double rel_tol) {
  LyapunovMonitorReport rep(LyapunovForm{fp});
  std::optional<double> phi_ref;
  for (const auto& s : rec.samples) {
    if (s.t <= t_min) continue;
    const Vec2 y = map ? map(s.t, s.rho, s.theta) : Vec2(s.rho, s.theta);
    if (!phi_ref) phi_ref = fp.phi_star + kTwoPi * std::round((y[1] - fp.phi_star) / kTwoPi);
    rep.values.push_back(rep.form(y[0] - fp.rho_star, y[1] - *phi_ref, s.t));
  }
  std::optional<std::size_t> last_rise;
  for (std::size_t i = 1; i < rep.values.size(); ++i) {
    ++rep.pairs;
    if (rep.values[i] <= rep.values[i - 1] + rel_tol * std::abs(rep.values[i - 1])) {
      ++rep.decreasing;
    } else {
      last_rise = i;
    }
  }
  rep.monotone_fraction = rep.pairs ? static_cast<double>(rep.decreasing) / rep.pairs : 1.0;
  if (!rep.values.empty()) rep.monotone_from = last_rise ? *last_rise : 0;
  return rep;
}

}  // namespace reslab
