#pragma once

#include "reslab/averaging.hpp"
#include "reslab/campaign.hpp"
#include "reslab/integrate.hpp"

#include <json.hpp>

#include <string>

namespace reslab {

using Json = nlohmann::json;

/// Everything a subcommand needs, parsed from one JSON document:
///   system      {family, params}
///   init        {rho, theta} or {x1, x2}, at integrator.t_start
///   integrator  IntegratorConfig fields
///   quadrature  {n_s, n_s2, fd_step}
///   detector    DetectorWindows fields
///   campaign    {inits, ball, epsilon, t_contain, reference}
/// Missing fields take defaults; unknown fields are rejected.
struct RunConfig {
  std::string family = "ex1";
  Params params;
  InitialState init = PolarState{1.0, 0.0, 1.0};
  bool init_is_theta = true;  // polar init phase is theta (rotating frame)
  IntegratorConfig integrator;
  QuadratureSpec quad1{128, 1e-3};
  QuadratureSpec quad2{64, 1e-3};
  CampaignConfig campaign;

  /// Resolves the init against the system: theta to phi, time to t_start.
  InitialState resolved_init(const SystemSpec& sys) const;
};

/// Parses and validates. Throws ConfigError with the offending key.
RunConfig parse_config(const Json& doc);

/// Fully populated canonical document; parse_config(to_json(c)) == c.
Json to_json(const RunConfig& cfg);

/// FNV-1a (64 bit, hex) of the canonical dump.
std::string config_hash(const RunConfig& cfg);

Json to_json(const RegimeObservation& obs);
Json to_json(const FixedPointReport& fp);
Json to_json(const DriftReport& dr);
Json to_json(const RegimeClassification& c);
Json to_json(const CampaignSummary& s);
Json to_json(const IntegratorConfig& c);
Json to_json(const DetectorWindows& w);

}  // namespace reslab
