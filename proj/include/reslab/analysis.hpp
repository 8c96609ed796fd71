#pragma once

#include "reslab/averaging.hpp"
#include "reslab/integrate.hpp"
#include "reslab/model.hpp"

#include <cmath>
#include <complex>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace reslab {

/// Resonant equilibrium of the limiting system with its linearization data.
struct FixedPointReport {
  double rho_star = 0.0;
  double phi_star = 0.0;  // representative in (-pi, pi]
  int n = 1;
  int m = 1;
  int q = 1;
  double lambda_n = 0.0;  // d_rho Lambda_n
  double nu_n = 0.0;      // d_phi Lambda_n
  double eta_m = 0.0;     // d_rho Omega_m
  double omega_m = 0.0;   // d_phi Omega_m
  double det_D = 0.0;
  std::complex<double> alpha1;
  std::complex<double> alpha2;
  double beta1 = 0.0;
  double beta2 = 0.0;
  bool defective = false;
  bool degenerate = false;
  Vec2 residual = Vec2::Zero();

  Mat2 jacobian() const {
    Mat2 A;
    A << lambda_n, nu_n, eta_m, omega_m;
    return A;
  }
};

/// Drift candidate: Lambda_n(rho*, .) vanishes identically.
struct DriftReport {
  double rho_star = 0.0;
  int n = 1;
  int m = 1;
  double ell_min = 0.0;
  double ell_max = 0.0;
  double omega_min_abs = 0.0;
  double omega_sign = 0.0;  // sign of Omega_m(rho*, .)
  double lambda_sup = 0.0;
};

enum class RegimeKind {
  PhaseLockedStable,
  PhaseLockedUnstable,
  PhaseDriftStable,
  PhaseDriftUnstable,
  Degenerate,
  Inconclusive,
};

const char* to_string(RegimeKind kind);

struct RegimeClassification {
  RegimeKind kind = RegimeKind::Inconclusive;
  std::string basis;
  double rho_star = 0.0;
  std::optional<double> phi_star;  // empty for drift
};

struct AnalysisTolerances {
  double fp_tol = 1e-10;
  double null_tol = 1e-10;
  double degenerate_tol = 1e-8;
  double defective_tol = 1e-10;
  double dedup_tol = 1e-8;
  int max_iterations = 50;
  double rho_floor = 1e-6;  // amplitudes at or below are not equilibria
  int psi_seeds = 24;
  int rho_seeds = 16;
  double seed_offset = 0.0;  // shifts the psi seed grid
  int threads = 1;
};

/// Fills D, alpha, beta and the defective/degenerate flags from the Jacobian
/// entries already present in fp.
void fill_stability(FixedPointReport& fp, const AnalysisTolerances& tol = {});

/// Jacobian entries by 4th-order central differences with step
/// 1e-5 max(1, rho*), then fill_stability.
FixedPointReport linearize(const AveragedField& avg, double rho, double phi,
                           const AnalysisTolerances& tol = {});

/// Newton on (Lambda_n, Omega_m) = 0 from a psi x rho seed grid; results are
/// deduplicated modulo 2 pi and sorted by (rho, phi).
std::vector<FixedPointReport> find_fixed_points(const AveragedField& avg,
                                                const AnalysisTolerances& tol = {});

RegimeClassification classify(const FixedPointReport& fp);
RegimeClassification classify(const DriftReport& dr, double null_tol = 1e-10);

/// Drift candidates from roots in rho of the psi-averaged Lambda_n and of
/// Lambda_n along fixed psi lines, plus extra seeds. Only candidates with
/// sup |Lambda_n(rho*, .)| < null_tol and Omega_m(rho*, .) of one sign are
/// returned.
std::vector<DriftReport> detect_drift(const AveragedField& avg,
                                      const std::vector<double>& rho_seeds = {},
                                      const AnalysisTolerances& tol = {});

/// First correction rho*(t) = rho* + t^(-1/q) xi1, phi*(t) = phi* + t^(-1/q) zeta1.
struct AsymptoticCorrection {
  double xi1 = 0.0;
  double zeta1 = 0.0;
  Vec2 rhs = Vec2::Zero();  // (Lambda_{n+1}, Omega_{m+1}) at the fixed point
  Mat2 matrix = Mat2::Zero();  // -(A + T), so matrix * (xi1, zeta1) = rhs
};

/// Solves -(A + T)(xi1, zeta1) = (Lambda_{n+1}, Omega_{m+1}) where T carries
/// the 1/q contribution of d/dt t^(-1/q) on components whose leading index
/// equals q (zero when max(n, m) < q).
AsymptoticCorrection asymptotic_correction(const AveragedField& avg, const FixedPointReport& fp);

/// L(y1, y2, t) = C1 y1^2 + t^((m-n)/q) y2^2 + C2 y1 y2. nu_n below
/// 1e-8 times the largest other Jacobian entry (or 1) counts as zero.
struct LyapunovForm {
  double C1 = 0.0;
  double C2 = 0.0;
  double exponent = 0.0;

  explicit LyapunovForm(const FixedPointReport& fp);
  double operator()(double y1, double y2, double t) const {
    return C1 * y1 * y1 + std::pow(t, exponent) * y2 * y2 + C2 * y1 * y2;
  }
};

struct LyapunovMonitorReport {
  explicit LyapunovMonitorReport(const LyapunovForm& f) : form(f) {}

  LyapunovForm form;
  std::size_t pairs = 0;
  std::size_t decreasing = 0;
  double monotone_fraction = 0.0;
  std::optional<std::size_t> monotone_from;  // first index after which L never rises
  std::vector<double> values;
};

/// Maps a recorded (t, rho, theta) to the coordinates compared with the
/// equilibrium, for example through a NearIdentityTransform.
using CoordinateMap = std::function<Vec2(double t, double rho, double theta)>;

/// Evaluates L along rec for t > t_min with y = (rho - rho*, theta - phi*),
/// phi* shifted by a multiple of 2 pi to the branch nearest theta at t_min.
LyapunovMonitorReport lyapunov_monitor(const FixedPointReport& fp, const TrajectoryRecord& rec,
                                       double t_min = 100.0, const CoordinateMap& map = {},
                                       double rel_tol = 1e-9);

}  // namespace reslab
