#pragma once

#include "reslab/averaging.hpp"
#include "reslab/campaign.hpp"
#include "reslab/integrate.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace reslab {

/// Header `t,x1,x2,rho,theta`, one row per sample, 17 significant digits.
void emit_csv(const TrajectoryRecord& rec, const std::filesystem::path& path);
std::string csv_text(const TrajectoryRecord& rec);

/// Reads a file written by emit_csv. Metadata is not stored in the CSV.
TrajectoryRecord read_csv(const std::filesystem::path& path);

/// Header `k,r,psi,lambda_k,omega_k`, every averaged order on the r x psi
/// tensor grid, 17 significant digits.
std::string grid_csv_text(const AveragedField& avg, const Eigen::VectorXd& r, const Eigen::VectorXd& psi);
void emit_grid_csv(const AveragedField& avg, const Eigen::VectorXd& r, const Eigen::VectorXd& psi,
                   const std::filesystem::path& path);

/// Pretty-printed JSON with a trailing newline.
void emit_json(const nlohmann::json& doc, const std::filesystem::path& path);

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

struct Panel {
  std::string title;
  std::string x_label = "t";
  std::string y_label;
  bool log_x = false;
  std::vector<Series> series;      // solid
  std::vector<Series> references;  // dashed
};

struct SvgFigure {
  std::vector<Panel> panels;  // laid out left to right
  std::string config_hash;
  int panel_width = 480;
  int panel_height = 360;
  /// Points kept per series after per-pixel min/max decimation.
  int columns = 600;
};

/// Self-contained SVG 1.1. Output depends only on the figure contents.
std::string render_svg(const SvgFigure& fig);
void emit_svg(const SvgFigure& fig, const std::filesystem::path& path);

/// Writes traj_XXX.csv per run and summary.json into dir.
void write_campaign(const CampaignResult& result, const std::filesystem::path& dir);

/// Campaign summary plus per-run observations as JSON.
nlohmann::json campaign_json(const CampaignResult& result);

}  // namespace reslab
