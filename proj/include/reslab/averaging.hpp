#pragma once

#include "reslab/model.hpp"

#include <Eigen/Core>

#include <functional>
#include <map>
#include <string>
#include <vector>

namespace reslab {

using RotatingRate = std::function<Vec2(double R, double Psi, double S)>;

/// The system in the rotating frame Psi = phi - (kappa/varkappa) S:
/// F_k(R, Psi, S) = f_k(R, kappa S/varkappa + Psi, S),
/// G_k(R, Psi, S) = g_k(R, kappa S/varkappa + Psi, S) - kappa s_k / varkappa.
struct RotatingField {
  int q = 1;
  double s0 = 1.0;
  int kappa = 1;
  int varkappa = 1;
  std::map<int, RotatingRate> terms;  // k -> (F_k, G_k)
  std::map<int, double> s_coeffs;

  double s_period() const { return kTwoPi * varkappa; }
  double s_coeff(int k) const;
  bool has(int k) const { return terms.count(k) != 0; }
  /// (F_k, G_k), zero for absent k.
  Vec2 operator()(int k, double R, double Psi, double S) const;
};

/// Throws ConfigError when the system has no resonance data.
RotatingField rotate(const SystemSpec& sys);

struct QuadratureSpec {
  int n_s = 128;
  /// Step of the 4th-order central differences in R and Psi.
  double fd_step = 1e-3;
  void validate() const;
};

using AveragedRate = std::function<Vec2(double r, double psi)>;

enum class AveragingSource { ClosedForm, Quadrature };

/// Averaged coefficients (Lambda_k, Omega_k) keyed by k.
struct AveragedField {
  int q = 1;
  int n = 0;  // 0 until detected or declared
  int m = 0;
  double r_max = 4.0;
  AveragingSource source = AveragingSource::Quadrature;
  std::map<int, AveragedRate> entries;
  std::vector<std::string> warnings;

  bool has(int k) const { return entries.count(k) != 0; }
  /// (Lambda_k, Omega_k), zero for absent k.
  Vec2 operator()(int k, double r, double psi) const;
  double lambda(int k, double r, double psi) const { return (*this)(k, r, psi)[0]; }
  double omega(int k, double r, double psi) const { return (*this)(k, r, psi)[1]; }
};

/// Plain S-mean of (F_k, G_k) at one (R, Psi).
Vec2 mean_over_period(const RotatingField& rf, int k, double R, double Psi, int n_s);

/// Lambda_1, Omega_1 by the trapezoid rule over one S-period.
AveragedField average_order1(const RotatingField& rf, const QuadratureSpec& quad = {});

/// Uniform S-grid on [0, 2 pi varkappa).
Eigen::VectorXd s_grid(const RotatingField& rf, int n_s);

/// Tensor grid in (R, Psi); S is always the full uniform period grid.
struct TensorGrid {
  Eigen::VectorXd R;
  Eigen::VectorXd Psi;
  int n_s = 128;
};

/// u_1, v_1 sampled on a TensorGrid. Row i * Psi.size() + j holds the S
/// samples at (R[i], Psi[j]).
struct HomologicalSolution {
  TensorGrid grid;
  Eigen::MatrixXd u;
  Eigen::MatrixXd v;
  double s_period = kTwoPi;
};

/// Solves s0 dS (u_1, v_1) = (Lambda_1 - F_1, Omega_1 - G_1) with zero S-mean.
class HomologicalSolver {
 public:
  HomologicalSolver(RotatingField rf, AveragedField avg1, int n_s = 128);

  /// S samples of (u_1, v_1) at one (R, Psi), as two columns. Throws
  /// NumericalError when the right-hand side has a mean above 1e-10.
  Eigen::Matrix<double, Eigen::Dynamic, 2> solve_at(double R, double Psi) const;

  /// (u_1, v_1) at an arbitrary S by trigonometric interpolation.
  Vec2 evaluate(double R, double Psi, double S) const;

  const RotatingField& field() const { return rf_; }
  const AveragedField& averaged() const { return avg1_; }
  int n_s() const { return n_s_; }
  const Eigen::VectorXd& nodes() const { return nodes_; }

 private:
  RotatingField rf_;
  AveragedField avg1_;
  int n_s_;
  Eigen::VectorXd nodes_;
};

HomologicalSolution solve_homological_order1(const HomologicalSolver& solver, const TensorGrid& grid);

/// Adds the k = 2 entry: Lambda_2 = <F_2 - F~_2>, Omega_2 = <G_2 - G~_2> with
/// F~_2 = -(F_1 dR + G_1 dPsi + s_1 dS) u_1 + [q = 1] u_1 + (u_1 dR + v_1 dPsi) Lambda_1
/// and G~_2 likewise with v_1 and Omega_1. A warning is attached when halving
/// the difference step moves the result by more than 1e-6.
AveragedField average_order2(const HomologicalSolver& solver, const QuadratureSpec& quad = {});

/// Full quadrature pipeline up to order 2.
AveragedField average(const SystemSpec& sys, const QuadratureSpec& quad1 = {},
                      const QuadratureSpec& quad2 = {64, 1e-3});

struct LeadingIndices {
  int n = 0;
  int m = 0;
};

/// Least k with sup |Lambda_k| >= null_tol over a 20 x 20 (r, psi) grid, and
/// the same for Omega. Throws NumericalError when either is zero for all k.
LeadingIndices detect_leading_indices(const AveragedField& avg, double null_tol = 1e-10);

/// Maps the rotating-frame state (R, Psi) at time t to averaged coordinates
/// r = R + t^(-1/q) u_1, psi = Psi + t^(-1/q) v_1.
class NearIdentityTransform {
 public:
  NearIdentityTransform(const HomologicalSolver& solver, DrivePhase drive);
  Vec2 operator()(double t, double R, double Psi) const;

 private:
  const HomologicalSolver* solver_;
  DrivePhase drive_;
};

/// Rows r, psi, lambda_k, omega_k on a grid, for inspection dumps.
Eigen::MatrixXd grid_dump(const AveragedField& avg, int k, const Eigen::VectorXd& r,
                          const Eigen::VectorXd& psi);

}  // namespace reslab
