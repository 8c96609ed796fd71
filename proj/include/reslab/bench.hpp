#pragma once

#include "reslab/analysis.hpp"
#include "reslab/averaging.hpp"
#include "reslab/model.hpp"

#include <map>
#include <optional>
#include <random>
#include <string>
#include <variant>
#include <vector>

namespace reslab {

using Params = std::map<std::string, double>;

enum class BenchRegime { Lock, Drift, None };

const char* to_string(BenchRegime regime);

/// One of the three benchmark families with its closed-form averaged field
/// and predicted resonant state.
struct BenchFamily {
  std::string name;
  Params params;
  SystemSpec system;
  /// Closed-form Lambda_k, Omega_k with n, m set; empty entries when the
  /// parameters are off the resonance the formulas assume.
  AveragedField closed_form;
  std::vector<std::pair<std::string, bool>> validity;
  std::vector<std::string> conditions;
  BenchRegime regime = BenchRegime::None;
  std::vector<FixedPointReport> predicted_lock;  // all branches modulo 2 pi
  std::optional<DriftReport> predicted_drift;

  double param(const std::string& key) const { return params.at(key); }
};

/// Default parameters of a family (the values used in the figures).
Params default_params(const std::string& name);

/// Builds ex1 (a, b, c, s0, s1), ex2 (b0, b1, c0, c1, s1) or ex3 (b0, b1, c0,
/// s2). Missing keys take the defaults; unknown names or keys throw ConfigError.
BenchFamily build(const std::string& name, const Params& params = {});

using PredictedReport = std::variant<std::vector<FixedPointReport>, DriftReport>;

/// Closed-form prediction for the requested regime. Throws ConfigError when
/// the parameters put the family in another regime.
PredictedReport predicted_report(const BenchFamily& fam, BenchRegime wanted);

/// Random parameters inside the documented validity ranges for the requested
/// regime (Lock or Drift).
Params draw_params(const std::string& name, BenchRegime regime, std::mt19937_64& rng);

}  // namespace reslab
