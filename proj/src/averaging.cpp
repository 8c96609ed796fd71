#include "reslab/averaging.hpp"

#include "reslab/error.hpp"
#include "reslab/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace reslab {

double RotatingField::s_coeff(int k) const {
  const auto it = s_coeffs.find(k);
  return it == s_coeffs.end() ? 0.0 : it->second;
}

Vec2 RotatingField::operator()(int k, double R, double Psi, double S) const {
  const auto it = terms.find(k);
  return it == terms.end() ? Vec2::Zero() : it->second(R, Psi, S);
}

RotatingField rotate(const SystemSpec& sys) {
  if (!sys.resonance) throw ConfigError("rotate: system '" + sys.name + "' is not resonant");
  const ResonanceData res = *sys.resonance;
  RotatingField rf;
  rf.q = sys.drive.q;
  rf.s0 = sys.drive.s0;
  rf.kappa = res.kappa;
  rf.varkappa = res.varkappa;
  const double ratio = res.frame_ratio();
  for (const auto& [k, sk] : sys.drive.s_coeffs) rf.s_coeffs[k] += sk;

  for (const auto& term : sys.terms) {
    const double shift = ratio * rf.s_coeff(term.k);
    rf.terms[term.k] = [f = term.f, g = term.g, ratio, shift](double R, double Psi, double S) {
      const double phi = ratio * S + Psi;
      return Vec2(f(R, phi, S), g(R, phi, S) - shift);
    };
  }
  // Drive corrections without a matching perturbation term still shift G_k.
  for (const auto& [k, sk] : rf.s_coeffs) {
    if (rf.terms.count(k) || sk == 0.0) continue;
    const double shift = ratio * sk;
    rf.terms[k] = [shift](double, double, double) { return Vec2(0.0, -shift); };
  }
  return rf;
}

void QuadratureSpec::validate() const {
  if (n_s < 8) throw ConfigError("quadrature: n_s must be at least 8");
  if (!(fd_step > 0.0)) throw ConfigError("quadrature: fd_step must be positive");
}

Vec2 AveragedField::operator()(int k, double r, double psi) const {
  const auto it = entries.find(k);
  return it == entries.end() ? Vec2::Zero() : it->second(r, psi);
}

Eigen::VectorXd s_grid(const RotatingField& rf, int n_s) {
  return Eigen::VectorXd::LinSpaced(n_s, 0.0, rf.s_period() * (n_s - 1) / n_s);
}

Vec2 mean_over_period(const RotatingField& rf, int k, double R, double Psi, int n_s) {
  const double dS = rf.s_period() / n_s;
  Vec2 acc = Vec2::Zero();
  for (int j = 0; j < n_s; ++j) {
    const Vec2 v = rf(k, R, Psi, j * dS);
    if (!v.allFinite()) {
      std::ostringstream msg;
      msg << "averaging: non-finite F_" << k << " at R=" << R << " Psi=" << Psi << " S=" << j * dS;
      throw NumericalError(msg.str());
    }
    acc += v;
  }
  return acc / n_s;
}

AveragedField average_order1(const RotatingField& rf, const QuadratureSpec& quad) {
  quad.validate();
  AveragedField avg;
  avg.q = rf.q;
  avg.source = AveragingSource::Quadrature;
  const int n_s = quad.n_s;
  avg.entries[1] = [rf, n_s](double r, double psi) { return mean_over_period(rf, 1, r, psi, n_s); };
  return avg;
}

HomologicalSolver::HomologicalSolver(RotatingField rf, AveragedField avg1, int n_s)
    : rf_(std::move(rf)), avg1_(std::move(avg1)), n_s_(n_s) {
  if (n_s_ < 8) throw ConfigError("homological: n_s must be at least 8");
  nodes_ = s_grid(rf_, n_s_);
}

Eigen::Matrix<double, Eigen::Dynamic, 2> HomologicalSolver::solve_at(double R, double Psi) const {
  Eigen::Matrix<double, Eigen::Dynamic, 2> rhs(n_s_, 2);
  const Vec2 avg = avg1_(1, R, Psi);
  for (int j = 0; j < n_s_; ++j) rhs.row(j) = (avg - rf_(1, R, Psi, nodes_[j])).transpose();
  const Vec2 mean = rhs.colwise().mean().transpose();
  if (!rhs.allFinite() || mean.cwiseAbs().maxCoeff() > 1e-10) {
    std::ostringstream msg;
    msg << "homological: right-hand side has mean (" << mean[0] << ", " << mean[1]
        << ") at R=" << R << " Psi=" << Psi;
    throw NumericalError(msg.str());
  }
  Eigen::Matrix<double, Eigen::Dynamic, 2> out(n_s_, 2);
  for (int c = 0; c < 2; ++c) {
    out.col(c) = spectral::antiderivative(rhs.col(c).eval(), rf_.s_period()) / rf_.s0;
  }
  return out;
}

Vec2 HomologicalSolver::evaluate(double R, double Psi, double S) const {
  const auto uv = solve_at(R, Psi);
  const double x = std::fmod(S, rf_.s_period());
  return Vec2(spectral::interpolate(uv.col(0), rf_.s_period(), x),
              spectral::interpolate(uv.col(1), rf_.s_period(), x));
}

HomologicalSolution solve_homological_order1(const HomologicalSolver& solver, const TensorGrid& grid) {
  if (grid.n_s != solver.n_s()) throw ConfigError("homological: grid n_s differs from solver");
  HomologicalSolution sol;
  sol.grid = grid;
  sol.s_period = solver.field().s_period();
  const Eigen::Index rows = grid.R.size() * grid.Psi.size();
  sol.u.resize(rows, grid.n_s);
  sol.v.resize(rows, grid.n_s);
  for (Eigen::Index i = 0; i < grid.R.size(); ++i) {
    for (Eigen::Index j = 0; j < grid.Psi.size(); ++j) {
      const auto uv = solver.solve_at(grid.R[i], grid.Psi[j]);
      sol.u.row(i * grid.Psi.size() + j) = uv.col(0).transpose();
      sol.v.row(i * grid.Psi.size() + j) = uv.col(1).transpose();
    }
  }
  return sol;
}

namespace {

using Columns = Eigen::Matrix<double, Eigen::Dynamic, 2>;

// F_1 samples over the S-grid and the matching zero-mean (u_1, v_1).
struct StencilSample {
  Columns F;
  Columns uv;
};

StencilSample sample_at(const HomologicalSolver& solver, double r, double psi) {
  const RotatingField& rf = solver.field();
  const Eigen::VectorXd& S = solver.nodes();
  StencilSample out;
  out.F.resize(solver.n_s(), 2);
  for (int j = 0; j < solver.n_s(); ++j) out.F.row(j) = rf(1, r, psi, S[j]).transpose();
  out.uv.resize(solver.n_s(), 2);
  for (int c = 0; c < 2; ++c) {
    out.uv.col(c) = spectral::antiderivative((-out.F.col(c)).eval(), rf.s_period()) / rf.s0;
  }
  return out;
}

// The Lambda_1 derivatives reuse the stencil samples: the S-mean of F_1 at
// each stencil node is Lambda_1 there.
Vec2 order2_at(const HomologicalSolver& solver, double r, double psi, double h) {
  const RotatingField& rf = solver.field();
  const Eigen::VectorXd& S = solver.nodes();
  const int n_s = solver.n_s();

  Vec2 acc = Vec2::Zero();
  if (!rf.has(1)) {
    for (int j = 0; j < n_s; ++j) acc += rf(2, r, psi, S[j]);
    return acc / n_s;
  }

  const StencilSample centre = sample_at(solver, r, psi);
  const Vec2 lead = solver.averaged()(1, r, psi);
  const Vec2 gap = lead - centre.F.colwise().mean().transpose();
  if (!centre.F.allFinite() || gap.cwiseAbs().maxCoeff() > 1e-10) {
    std::ostringstream msg;
    msg << "homological: right-hand side has mean (" << gap[0] << ", " << gap[1] << ") at R=" << r
        << " Psi=" << psi;
    throw NumericalError(msg.str());
  }
  Columns dR = Columns::Zero(n_s, 2), dPsi = Columns::Zero(n_s, 2);
  Vec2 avg_dR = Vec2::Zero(), avg_dPsi = Vec2::Zero();
  const double weights[4] = {1.0, -8.0, 8.0, -1.0};
  const double offsets[4] = {-2.0, -1.0, 1.0, 2.0};
  for (int i = 0; i < 4; ++i) {
    const double w = weights[i] / (12.0 * h);
    const StencilSample sr = sample_at(solver, r + offsets[i] * h, psi);
    const StencilSample sp = sample_at(solver, r, psi + offsets[i] * h);
    dR += w * sr.uv;
    dPsi += w * sp.uv;
    avg_dR += w * sr.F.colwise().mean().transpose();
    avg_dPsi += w * sp.F.colwise().mean().transpose();
  }
  Columns dS(n_s, 2);
  for (int c = 0; c < 2; ++c) dS.col(c) = spectral::derivative(centre.uv.col(c).eval(), rf.s_period());

  const double s1 = rf.s_coeff(1);
  const double time_term = rf.q == 1 ? 1.0 : 0.0;
  for (int j = 0; j < n_s; ++j) {
    const Vec2 FG1 = centre.F.row(j).transpose();
    const Vec2 FG2 = rf(2, r, psi, S[j]);
    const Vec2 u = centre.uv.row(j).transpose();
    const Vec2 tilde = -(FG1[0] * dR.row(j).transpose() + FG1[1] * dPsi.row(j).transpose() +
                         s1 * dS.row(j).transpose()) +
                       time_term * u + u[0] * avg_dR + u[1] * avg_dPsi;
    acc += FG2 - tilde;
  }
  return acc / n_s;
}

}  // namespace

AveragedField average_order2(const HomologicalSolver& solver, const QuadratureSpec& quad) {
  quad.validate();
  if (quad.n_s != solver.n_s()) throw ConfigError("average_order2: n_s differs from solver");
  AveragedField avg = solver.averaged();
  const double h = quad.fd_step;
  avg.entries[2] = [solver, h](double r, double psi) { return order2_at(solver, r, psi, h); };

  const double probes[][2] = {{0.5, 0.3}, {0.25, 1.1}, {0.75, -2.0}};
  double worst = 0.0;
  for (const auto& p : probes) {
    const double r = p[0] * avg.r_max;
    const Vec2 coarse = order2_at(solver, r, p[1], h);
    const Vec2 fine = order2_at(solver, r, p[1], 0.5 * h);
    worst = std::max(worst, (coarse - fine).cwiseAbs().maxCoeff());
  }
  if (worst > 1e-6) {
    std::ostringstream msg;
    msg << "order-2 averaging: difference-step sensitivity " << worst << " exceeds 1e-6";
    avg.warnings.push_back(msg.str());
  }
  return avg;
}

AveragedField average(const SystemSpec& sys, const QuadratureSpec& quad1, const QuadratureSpec& quad2) {
  const RotatingField rf = rotate(sys);
  AveragedField avg1 = average_order1(rf, quad1);
  avg1.r_max = sys.r_max;
  AveragedField avg;
  if (rf.has(2) || rf.has(1)) {
    const HomologicalSolver solver(rf, avg1, quad2.n_s);
    avg = average_order2(solver, quad2);
  } else {
    avg = avg1;
  }
  const LeadingIndices idx = detect_leading_indices(avg);
  avg.n = idx.n;
  avg.m = idx.m;
  return avg;
}

LeadingIndices detect_leading_indices(const AveragedField& avg, double null_tol) {
  constexpr int kNodes = 20;
  const Eigen::VectorXd r = Eigen::VectorXd::LinSpaced(kNodes, avg.r_max / kNodes, avg.r_max);
  const Eigen::VectorXd psi = Eigen::VectorXd::LinSpaced(kNodes, -kPi, kPi - kTwoPi / kNodes);
  LeadingIndices out;
  for (const auto& [k, entry] : avg.entries) {
    if (out.n && out.m) break;
    Vec2 sup = Vec2::Zero();
    for (Eigen::Index i = 0; i < r.size(); ++i) {
      for (Eigen::Index j = 0; j < psi.size(); ++j) sup = sup.cwiseMax(entry(r[i], psi[j]).cwiseAbs());
    }
    if (!out.n && sup[0] >= null_tol) out.n = k;
    if (!out.m && sup[1] >= null_tol) out.m = k;
  }
  if (!out.n || !out.m) {
    const int kmax = avg.entries.empty() ? 0 : avg.entries.rbegin()->first;
    throw NumericalError("averaging: indeterminate order, Lambda or Omega vanishes up to k=" +
                         std::to_string(kmax));
  }
  return out;
}

NearIdentityTransform::NearIdentityTransform(const HomologicalSolver& solver, DrivePhase drive)
    : solver_(&solver), drive_(std::move(drive)) {}

Vec2 NearIdentityTransform::operator()(double t, double R, double Psi) const {
  const double scale = std::pow(t, -1.0 / solver_->field().q);
  return Vec2(R, Psi) + scale * solver_->evaluate(R, Psi, drive_.phase(t));
}

Eigen::MatrixXd grid_dump(const AveragedField& avg, int k, const Eigen::VectorXd& r,
                          const Eigen::VectorXd& psi) {
  Eigen::MatrixXd out(r.size() * psi.size(), 4);
  for (Eigen::Index i = 0; i < r.size(); ++i) {
    for (Eigen::Index j = 0; j < psi.size(); ++j) {
      const Vec2 v = avg(k, r[i], psi[j]);
      out.row(i * psi.size() + j) << r[i], psi[j], v[0], v[1];
    }
  }
  return out;
}

}  // namespace reslab
