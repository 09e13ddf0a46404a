#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace stw {

struct StudyConfig {
  std::string example = "EX1";  // EX1, EX2 or file:<csv>
  double T = 2.0;
  std::string domain_kind = "cylinder";  // cylinder | oblique | slab_union
  std::vector<double> domain_params{0.1, 0.3};
  std::string formulation = "mixed";  // mixed | stabilized | lambda_zero | dual_cg | source
  std::string r = "1";                // number or h^-2
  std::string eta = "r";              // number, h^-2 or r
  double alpha = 0.5;
  double eps = 1e-2;
  std::vector<std::pair<int, int>> levels;  // empty: derived from level_count
  int level_count = 4;
  int quad_order = 4;
  int cut_depth = 4;
  std::string xinner_mode = "auto";  // auto | l2 | hminus1 | sine
  int xinner_modes = 64;
  int xinner_samples = 256;
  double noise_amplitude = 0.0;
  std::uint64_t noise_seed = 0;
  std::string solver = "auto";  // auto | direct | cg
  double cg_threshold = 1e-10;
  int cg_maxiter = 0;
  std::string out_dir = "out";
  int threads = 1;
  std::string coeff_c = "one";
  std::string coeff_d = "zero";
  bool timing = true;
  bool infsup = false;
  bool condition = false;

  /// Levels as (nx, nt); the default ladder is nx = 20 * 2^(l-1), nt = nx * T.
  std::vector<std::pair<int, int>> resolved_levels() const;
  double r_at(double h) const;
  double eta_at(double h) const;
};

/// All accepted keys, in canonical order.
const std::vector<std::string>& config_keys();

/// Applies one key=value setting. Unknown keys and malformed values throw InvalidArgument.
void apply_setting(StudyConfig& cfg, const std::string& key, const std::string& value);

/// Lines "key = value"; '#' starts a comment; blank lines are skipped.
StudyConfig parse_config(const std::string& text, StudyConfig base = {});
StudyConfig load_config(const std::string& path, StudyConfig base = {});

/// Cross-field checks (horizon, levels refining, parameter ranges).
void validate(const StudyConfig& cfg);

/// Canonical "key = value" text of every key; round-trips through parse_config.
std::string to_config_text(const StudyConfig& cfg);

}  // namespace stw
