#pragma once

#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "stwave/assembly.hpp"
#include "stwave/config.hpp"
#include "stwave/observation.hpp"
#include "stwave/solvers.hpp"

namespace stw {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct LevelResult {
  int level = 0;
  int nx = 0;
  int nt = 0;
  double h = 0.0;
  double r = 0.0;
  double relL2_QT = kNaN;
  double relL2_qT = kNaN;
  double normL = kNaN;
  double norm_lambda = kNaN;
  double norm_f = kNaN;
  double kappa = kNaN;
  double delta = kNaN;
  int m_h = 0;
  int cg_iters = -1;
  double wall_ms = 0.0;

  double yh_qT = kNaN;    // ||y_h||_{L2(q_T)}
  double yobs_qT = kNaN;  // ||y_obs||_{L2(q_T)}
  double ydiff_qT = kNaN; // ||y_h - y_obs||_{L2(q_T)}
  double residual = kNaN;
  double rcond = kNaN;
  bool near_singular = false;
  bool cg_converged = true;
  std::string solver_used;
  bool ok = false;
  std::string error;
};

struct Slope {
  double value = kNaN;
  int points = 0;
};

struct SolveReport {
  StudyConfig config;
  std::vector<LevelResult> levels;
  Slope slope_QT, slope_qT, slope_L, slope_lambda;

  bool all_ok() const;
};

/// Least-squares slope of log(error) against log(h). Needs at least 3 pairs of positive values.
double fit_rate(const std::vector<std::pair<double, double>>& pairs);

/// Slope over the successful levels, dropping the coarsest one when at least 3 remain.
Slope study_slope(const std::vector<LevelResult>& levels, double LevelResult::*field);

ObservationDomain make_domain(const StudyConfig& cfg);
Formulation assembly_formulation(const StudyConfig& cfg);
AssemblyOptions assembly_options(const StudyConfig& cfg, const SpaceTimeMesh& mesh, bool for_infsup = false);

/// Solution vectors of one level, kept for callers that need more than the metrics.
struct LevelFields {
  SparseSymSystem system;
  SaddleSolution solution;
};

/// Assembles, solves and measures one level. Numerical failures are recorded in the result.
LevelResult run_level(const StudyConfig& cfg, int level, int nx, int nt, LevelFields* keep = nullptr);

/// Runs every level of the config in order, then fits the slopes.
SolveReport run_study(const StudyConfig& cfg);

/// delta_h for one level: mixed assembly with eta = r.
LevelResult run_infsup_level(const StudyConfig& cfg, int level, int nx, int nt);

/// delta_h for every configured level; per-level failures are recorded, not thrown.
SolveReport run_infsup_study(const StudyConfig& cfg);

std::string report_csv(const SolveReport& rep);
/// level,nx,nt,h,r,delta,m_h,wall_ms
std::string infsup_csv(const SolveReport& rep);
std::string report_json(const SolveReport& rep);
std::string report_plot(const SolveReport& rep);

/// Writes report.csv, report.json and plot.dat into cfg.out_dir (temp file + rename).
void write_report(const SolveReport& rep, bool plot = true);

/// Writes infsup.csv and report.json into cfg.out_dir.
void write_infsup_report(const SolveReport& rep);

/// Nodal values x,t,y of a solved level.
std::string field_csv(const LevelFields& fields);

/// Writes `content` to `path` through a temporary file in the same directory.
void write_atomic(const std::string& path, const std::string& content);

}  // namespace stw
