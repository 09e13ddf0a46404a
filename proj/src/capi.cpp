#include "stwave/stwave.h"

#include <cmath>
#include <cstring>
#include <new>
#include <string>

#include "stwave/config.hpp"
#include "stwave/error.hpp"
#include "stwave/harness.hpp"
#include "stwave/selftest.hpp"
#include "stwave/solvers.hpp"

struct stw_config {
  stw::StudyConfig cfg;
};

struct stw_report {
  stw::SolveReport rep;
  bool infsup = false;
};

namespace {

thread_local std::string g_last_error;

stw_status fail(stw_status s, const std::string& msg) {
  g_last_error = msg;
  return s;
}

template <class Fn>
stw_status guarded(Fn&& fn) {
  try {
    g_last_error.clear();
    fn();
    return STW_OK;
  } catch (const stw::InvalidArgument& e) {
    return fail(STW_ERR_ARGUMENT, e.what());
  } catch (const stw::OutOfMemory& e) {
    return fail(STW_ERR_MEMORY, e.what());
  } catch (const stw::NumericalError& e) {
    return fail(STW_ERR_NUMERICAL, e.what());
  } catch (const stw::IoError& e) {
    return fail(STW_ERR_IO, e.what());
  } catch (const std::bad_alloc&) {
    return fail(STW_ERR_MEMORY, "out of memory");
  } catch (const std::exception& e) {
    return fail(STW_ERR_INTERNAL, e.what());
  }
}

stw_status copy_out(const std::string& s, char* buf, size_t cap, size_t* needed) {
  if (needed) *needed = s.size() + 1;
  if (buf && cap > 0) {
    const size_t n = std::min(cap - 1, s.size());
    std::memcpy(buf, s.data(), n);
    buf[n] = '\0';
  }
  return STW_OK;
}

}  // namespace

extern "C" {

const char* stw_version(void) { return "1.0.0"; }

const char* stw_last_error(void) { return g_last_error.c_str(); }

int stw_ensure_blas(char** argv) { return stw::ensure_working_blas(argv) ? 1 : 0; }

stw_status stw_config_new(stw_config** out) {
  if (!out) return fail(STW_ERR_ARGUMENT, "stw_config_new: null output pointer");
  return guarded([&] { *out = new stw_config(); });
}

void stw_config_free(stw_config* cfg) { delete cfg; }

stw_status stw_config_load(stw_config* cfg, const char* path) {
  if (!cfg || !path) return fail(STW_ERR_ARGUMENT, "stw_config_load: null argument");
  return guarded([&] { cfg->cfg = stw::load_config(path, cfg->cfg); });
}

stw_status stw_config_set(stw_config* cfg, const char* key, const char* value) {
  if (!cfg || !key || !value) return fail(STW_ERR_ARGUMENT, "stw_config_set: null argument");
  return guarded([&] { stw::apply_setting(cfg->cfg, key, value); });
}

stw_status stw_config_set_pair(stw_config* cfg, const char* assignment) {
  if (!cfg || !assignment) return fail(STW_ERR_ARGUMENT, "stw_config_set_pair: null argument");
  const std::string a(assignment);
  const auto eq = a.find('=');
  if (eq == std::string::npos) return fail(STW_ERR_ARGUMENT, "expected key=value, got '" + a + "'");
  return guarded([&] { stw::apply_setting(cfg->cfg, a.substr(0, eq), a.substr(eq + 1)); });
}

stw_status stw_config_set_flag(stw_config* cfg, const char* flag, int on) {
  if (!cfg || !flag) return fail(STW_ERR_ARGUMENT, "stw_config_set_flag: null argument");
  const std::string f(flag);
  if (f == "timing")
    cfg->cfg.timing = on != 0;
  else if (f == "infsup")
    cfg->cfg.infsup = on != 0;
  else if (f == "condition")
    cfg->cfg.condition = on != 0;
  else
    return fail(STW_ERR_ARGUMENT, "unknown flag '" + f + "'");
  return STW_OK;
}

stw_status stw_config_validate(const stw_config* cfg) {
  if (!cfg) return fail(STW_ERR_ARGUMENT, "stw_config_validate: null config");
  return guarded([&] { stw::validate(cfg->cfg); });
}

stw_status stw_config_text(const stw_config* cfg, char* buf, size_t cap, size_t* needed) {
  if (!cfg) return fail(STW_ERR_ARGUMENT, "stw_config_text: null config");
  return copy_out(stw::to_config_text(cfg->cfg), buf, cap, needed);
}

stw_status stw_study_run(const stw_config* cfg, stw_report** out) {
  if (!cfg || !out) return fail(STW_ERR_ARGUMENT, "stw_study_run: null argument");
  *out = nullptr;
  return guarded([&] {
    auto* r = new stw_report();
    try {
      r->rep = stw::run_study(cfg->cfg);
    } catch (...) {
      delete r;
      throw;
    }
    *out = r;
  });
}

stw_status stw_solve_run(const stw_config* cfg, const char* field_path, stw_report** out) {
  if (!cfg || !out) return fail(STW_ERR_ARGUMENT, "stw_solve_run: null argument");
  *out = nullptr;
  return guarded([&] {
    stw::validate(cfg->cfg);
    const auto levels = cfg->cfg.resolved_levels();
    auto* r = new stw_report();
    try {
      r->rep.config = cfg->cfg;
      stw::LevelFields fields;
      const auto [nx, nt] = levels.back();
      r->rep.levels.push_back(stw::run_level(cfg->cfg, static_cast<int>(levels.size()), nx, nt, &fields));
      if (field_path && r->rep.levels.back().ok) stw::write_atomic(field_path, stw::field_csv(fields));
    } catch (...) {
      delete r;
      throw;
    }
    *out = r;
  });
}

stw_status stw_infsup_run(const stw_config* cfg, stw_report** out) {
  if (!cfg || !out) return fail(STW_ERR_ARGUMENT, "stw_infsup_run: null argument");
  *out = nullptr;
  return guarded([&] {
    auto* r = new stw_report();
    r->infsup = true;
    try {
      r->rep = stw::run_infsup_study(cfg->cfg);
    } catch (...) {
      delete r;
      throw;
    }
    *out = r;
  });
}

size_t stw_report_levels(const stw_report* rep) { return rep ? rep->rep.levels.size() : 0; }

stw_status stw_report_level(const stw_report* rep, size_t i, stw_level_info* out) {
  if (!rep || !out) return fail(STW_ERR_ARGUMENT, "stw_report_level: null argument");
  if (i >= rep->rep.levels.size()) return fail(STW_ERR_ARGUMENT, "stw_report_level: index out of range");
  const auto& l = rep->rep.levels[i];
  *out = stw_level_info{l.level,
                        l.nx,
                        l.nt,
                        l.h,
                        l.r,
                        l.relL2_QT,
                        l.relL2_qT,
                        l.normL,
                        l.norm_lambda,
                        l.norm_f,
                        l.kappa,
                        l.delta,
                        l.m_h,
                        l.cg_iters,
                        l.cg_converged ? 1 : 0,
                        l.wall_ms,
                        l.yh_qT,
                        l.yobs_qT,
                        l.ydiff_qT,
                        l.residual,
                        l.rcond,
                        l.near_singular ? 1 : 0,
                        l.ok ? 1 : 0,
                        l.solver_used.c_str(),
                        l.error.c_str()};
  return STW_OK;
}

stw_status stw_report_slope(const stw_report* rep, const char* metric, double* value, int* points) {
  if (!rep || !metric || !value) return fail(STW_ERR_ARGUMENT, "stw_report_slope: null argument");
  const std::string m(metric);
  const stw::Slope* s = nullptr;
  if (m == "relL2_QT")
    s = &rep->rep.slope_QT;
  else if (m == "relL2_qT")
    s = &rep->rep.slope_qT;
  else if (m == "normL")
    s = &rep->rep.slope_L;
  else if (m == "norm_lambda")
    s = &rep->rep.slope_lambda;
  else
    return fail(STW_ERR_ARGUMENT, "unknown metric '" + m + "'");
  *value = s->value;
  if (points) *points = s->points;
  return STW_OK;
}

int stw_report_ok(const stw_report* rep) { return rep && rep->rep.all_ok() ? 1 : 0; }

stw_status stw_report_write(const stw_report* rep, int plot) {
  if (!rep) return fail(STW_ERR_ARGUMENT, "stw_report_write: null report");
  return guarded([&] {
    if (rep->infsup)
      stw::write_infsup_report(rep->rep);
    else
      stw::write_report(rep->rep, plot != 0);
  });
}

stw_status stw_report_csv(const stw_report* rep, char* buf, size_t cap, size_t* needed) {
  if (!rep) return fail(STW_ERR_ARGUMENT, "stw_report_csv: null report");
  return copy_out(rep->infsup ? stw::infsup_csv(rep->rep) : stw::report_csv(rep->rep), buf, cap, needed);
}

void stw_report_free(stw_report* rep) { delete rep; }

stw_status stw_selftest(int* passed, int* failed, char* log, size_t cap, size_t* needed) {
  std::string text;
  int p = 0, f = 0;
  const stw_status st = guarded([&] {
    for (const auto& c : stw::run_selftest()) {
      if (c.passed) {
        ++p;
        text += "PASS " + c.name + "\n";
      } else {
        ++f;
        text += "FAIL " + c.name + (c.detail.empty() ? "" : ": " + c.detail) + "\n";
      }
    }
  });
  if (passed) *passed = p;
  if (failed) *failed = f;
  copy_out(text, log, cap, needed);
  return st;
}

}  // extern "C"
