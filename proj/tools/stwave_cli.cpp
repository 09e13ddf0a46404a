#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "stwave/stwave.h"

namespace {

constexpr int kOk = 0;
constexpr int kUsage = 1;
constexpr int kNumerical = 2;

struct Options {
  std::string config;
  std::vector<std::string> sets;
  int threads = 0;
  std::string solver;
  double cg_threshold = 0.0;
  bool infsup = false;
  bool condition = false;
  bool no_timing = false;
  bool no_plot = false;
  std::string out;
  std::string field;
};

int status_exit(stw_status s) {
  if (s == STW_OK) return kOk;
  std::fprintf(stderr, "error: %s\n", stw_last_error());
  return (s == STW_ERR_ARGUMENT || s == STW_ERR_IO) ? kUsage : kNumerical;
}

struct ConfigHandle {
  stw_config* p = nullptr;
  ~ConfigHandle() { stw_config_free(p); }
};

struct ReportHandle {
  stw_report* p = nullptr;
  ~ReportHandle() { stw_report_free(p); }
};

int build_config(const Options& o, ConfigHandle& cfg) {
  if (int rc = status_exit(stw_config_new(&cfg.p))) return rc;
  if (!o.config.empty())
    if (int rc = status_exit(stw_config_load(cfg.p, o.config.c_str()))) return rc;
  for (const auto& s : o.sets)
    if (int rc = status_exit(stw_config_set_pair(cfg.p, s.c_str()))) return rc;
  if (o.threads > 0)
    if (int rc = status_exit(stw_config_set(cfg.p, "threads", std::to_string(o.threads).c_str()))) return rc;
  if (!o.solver.empty())
    if (int rc = status_exit(stw_config_set(cfg.p, "solver", o.solver.c_str()))) return rc;
  if (o.cg_threshold > 0.0) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", o.cg_threshold);
    if (int rc = status_exit(stw_config_set(cfg.p, "cg.threshold", buf))) return rc;
  }
  if (!o.out.empty())
    if (int rc = status_exit(stw_config_set(cfg.p, "out.dir", o.out.c_str()))) return rc;
  stw_config_set_flag(cfg.p, "infsup", o.infsup);
  stw_config_set_flag(cfg.p, "condition", o.condition);
  stw_config_set_flag(cfg.p, "timing", !o.no_timing);
  return status_exit(stw_config_validate(cfg.p));
}

void print_config(const ConfigHandle& cfg) {
  size_t need = 0;
  stw_config_text(cfg.p, nullptr, 0, &need);
  std::string text(need, '\0');
  stw_config_text(cfg.p, text.data(), need, &need);
  text.resize(need - 1);
  size_t start = 0;
  while (start < text.size()) {
    const size_t end = text.find('\n', start);
    std::printf("# %s\n", text.substr(start, end - start).c_str());
    start = end == std::string::npos ? text.size() : end + 1;
  }
}

std::string cell(double v, const char* fmt = "%.3e") {
  if (!std::isfinite(v)) return "-";
  char buf[32];
  std::snprintf(buf, sizeof buf, fmt, v);
  return buf;
}

void print_levels(const ReportHandle& rep) {
  std::printf("%5s %5s %5s %10s %10s %10s %10s %10s %10s %10s %7s %6s %9s\n", "level", "nx", "nt", "h", "relL2_QT",
              "relL2_qT", "normL", "norm_lam", "norm_f", "kappa", "m_h", "cg", "wall_ms");
  for (size_t i = 0; i < stw_report_levels(rep.p); ++i) {
    stw_level_info l;
    stw_report_level(rep.p, i, &l);
    if (!l.ok) {
      std::printf("%5d %5d %5d %10s  failed: %s\n", l.level, l.nx, l.nt, cell(l.h).c_str(), l.error);
      continue;
    }
    std::printf("%5d %5d %5d %10s %10s %10s %10s %10s %10s %10s %7d %6s %9.0f\n", l.level, l.nx, l.nt,
                cell(l.h).c_str(), cell(l.relL2_QT).c_str(), cell(l.relL2_qT).c_str(), cell(l.normL).c_str(),
                cell(l.norm_lambda).c_str(), cell(l.norm_f).c_str(), cell(l.kappa, "%.1e").c_str(), l.m_h,
                l.cg_iters >= 0 ? std::to_string(l.cg_iters).c_str() : "-", l.wall_ms);
    if (std::isfinite(l.delta)) std::printf("      delta_h = %.4f\n", l.delta);
    if (l.near_singular) std::printf("      warning: near-singular factorization (rcond %.1e)\n", l.rcond);
    if (!l.cg_converged) std::printf("      warning: CG did not converge\n");
  }
  for (const char* m : {"relL2_QT", "relL2_qT", "normL", "norm_lambda"}) {
    double v = NAN;
    int n = 0;
    stw_report_slope(rep.p, m, &v, &n);
    if (n > 0) std::printf("slope %-12s %.3f (%d points)\n", m, v, n);
  }
}

int finish(const ReportHandle& rep, const Options& o, bool table = true) {
  if (table) print_levels(rep);
  if (int rc = status_exit(stw_report_write(rep.p, !o.no_plot))) return rc;
  if (!stw_report_ok(rep.p)) {
    for (size_t i = 0; i < stw_report_levels(rep.p); ++i) {
      stw_level_info l;
      stw_report_level(rep.p, i, &l);
      if (!l.ok) std::fprintf(stderr, "level %d failed: %s\n", l.level, l.error);
      if (l.ok && !l.cg_converged) std::fprintf(stderr, "level %d: CG did not converge\n", l.level);
    }
    return kNumerical;
  }
  return kOk;
}

int cmd_study(Options o, const char* forced_formulation) {
  if (forced_formulation) o.sets.push_back(std::string("formulation=") + forced_formulation);
  ConfigHandle cfg;
  if (int rc = build_config(o, cfg)) return rc;
  print_config(cfg);
  ReportHandle rep;
  if (int rc = status_exit(stw_study_run(cfg.p, &rep.p))) return rc;
  return finish(rep, o);
}

int cmd_solve(const Options& o) {
  ConfigHandle cfg;
  if (int rc = build_config(o, cfg)) return rc;
  print_config(cfg);
  ReportHandle rep;
  const std::string field = o.field.empty() ? "" : o.field;
  if (int rc = status_exit(stw_solve_run(cfg.p, field.empty() ? nullptr : field.c_str(), &rep.p))) return rc;
  return finish(rep, o);
}

int cmd_infsup(const Options& o) {
  ConfigHandle cfg;
  if (int rc = build_config(o, cfg)) return rc;
  print_config(cfg);
  ReportHandle rep;
  if (int rc = status_exit(stw_infsup_run(cfg.p, &rep.p))) return rc;
  std::printf("%5s %5s %5s %10s %10s %10s %7s %9s\n", "level", "nx", "nt", "h", "r", "delta_h", "m_h", "wall_ms");
  for (size_t i = 0; i < stw_report_levels(rep.p); ++i) {
    stw_level_info l;
    stw_report_level(rep.p, i, &l);
    if (!l.ok && !std::isfinite(l.delta)) {
      std::printf("%5d %5d %5d %10s  failed: %s\n", l.level, l.nx, l.nt, cell(l.h).c_str(), l.error);
      continue;
    }
    std::printf("%5d %5d %5d %10s %10s %10.4f %7d %9.0f\n", l.level, l.nx, l.nt, cell(l.h).c_str(),
                cell(l.r).c_str(), l.delta, l.m_h, l.wall_ms);
  }
  return finish(rep, o, false);
}

int cmd_selftest() {
  int passed = 0, failed = 0;
  size_t need = 0;
  stw_selftest(&passed, &failed, nullptr, 0, &need);
  std::string log(need, '\0');
  const stw_status st = stw_selftest(&passed, &failed, log.data(), need, &need);
  std::fputs(log.c_str(), stdout);
  std::printf("%d passed, %d failed\n", passed, failed);
  if (st != STW_OK) return status_exit(st);
  return failed == 0 ? kOk : kNumerical;
}

void add_common(CLI::App* sub, Options& o) {
  sub->add_option("--config,-c", o.config, "Config file (key = value lines)");
  sub->add_option("--set,-s", o.sets, "Override one key: --set key=value (repeatable)");
  sub->add_option("--threads", o.threads, "Assembly worker threads")->check(CLI::Range(1, 256));
  sub->add_option("--solver", o.solver, "auto | direct | cg");
  sub->add_option("--cg-threshold", o.cg_threshold, "Relative stopping threshold of the dual CG");
  sub->add_flag("--infsup", o.infsup, "Also compute delta_h per level");
  sub->add_flag("--condition", o.condition, "Also estimate the condition number per level");
  sub->add_flag("--no-timing", o.no_timing, "Write wall_ms = 0 (byte-stable reports)");
  sub->add_flag("--no-plot", o.no_plot, "Skip plot.dat");
  sub->add_option("--out,-o", o.out, "Output directory (overrides out.dir)");
}

}  // namespace

int main(int argc, char** argv) {
  stw_ensure_blas(argv);
  CLI::App app{"Space-time mixed finite elements for the inverse wave problem"};
  app.require_subcommand(1);
  Options o;
  auto* solve = app.add_subcommand("solve", "Solve the finest configured level");
  auto* study = app.add_subcommand("study", "Convergence study over all levels");
  auto* infsup = app.add_subcommand("infsup", "Discrete inf-sup constant per level");
  auto* dual = app.add_subcommand("dual", "Study with the dual conjugate gradient solver");
  auto* source = app.add_subcommand("source", "Study of the state and source recovery problem");
  auto* selftest = app.add_subcommand("selftest", "Built-in sanity suite");
  for (auto* s : {solve, study, infsup, dual, source}) add_common(s, o);
  solve->add_option("--field", o.field, "Write nodal values x,t,y to this CSV file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    app.exit(e);
    return kOk;
  } catch (const CLI::CallForAllHelp& e) {
    app.exit(e);
    return kOk;
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  if (*selftest) return cmd_selftest();
  if (*solve) return cmd_solve(o);
  if (*study) return cmd_study(o, nullptr);
  if (*infsup) return cmd_infsup(o);
  if (*dual) return cmd_study(o, "dual_cg");
  if (*source) return cmd_study(o, "source");
  return kUsage;
}
