#include "stwave/harness.hpp"

#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <memory>
#include <optional>
#include <sstream>

#include "stwave/error.hpp"
#include "stwave/oracle.hpp"

namespace stw {

namespace {

using Clock = std::chrono::steady_clock;

std::optional<FourierSolution> oracle_for(const StudyConfig& cfg) {
  if (cfg.example.rfind("file:", 0) == 0) return std::nullopt;
  return FourierSolution::make(example_from_string(cfg.example));
}

ObservationFn observation_for(const StudyConfig& cfg, const std::optional<FourierSolution>& sol) {
  if (!sol) return load_observation_csv(cfg.example.substr(5));
  return make_observation(*sol, cfg.noise_amplitude, cfg.noise_seed);
}

// ||y_h - y_obs||_{L2(q_T)} with the assembly quadrature
double observed_misfit(const SparseSymSystem& sys, const ObservationDomain& domain, const Vec& y,
                       const ObservationFn& obs) {
  const SpaceTimeMesh& mesh = sys.mesh;
  const QuadratureRule rule = tensor_gauss(sys.options.quad_order);
  double s = 0.0;
  for (std::size_t e = 0; e < mesh.num_elements(); ++e)
    for (const auto& op : indicator_weights(domain, mesh, e, rule, sys.options.cut_depth)) {
      const double d = eval_bfs_field(mesh, sys.zmap, y, op.x, op.t).v - obs(op.x, op.t);
      s += op.weight * d * d;
    }
  return std::sqrt(s);
}

std::string num(double x) {
  if (!std::isfinite(x)) return "";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6e", x);
  return buf;
}

nlohmann::ordered_json jnum(double x) { return std::isfinite(x) ? nlohmann::ordered_json(x) : nlohmann::ordered_json(); }

}  // namespace

bool SolveReport::all_ok() const {
  for (const auto& l : levels)
    if (!l.ok || !l.cg_converged) return false;
  return true;
}

double fit_rate(const std::vector<std::pair<double, double>>& pairs) {
  require(pairs.size() >= 3, "fit_rate: at least 3 (h, error) pairs are required");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& [h, e] : pairs) {
    require(h > 0.0 && e > 0.0 && std::isfinite(h) && std::isfinite(e), "fit_rate: h and error must be positive");
    const double x = std::log(h), y = std::log(e);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double n = static_cast<double>(pairs.size());
  const double den = n * sxx - sx * sx;
  require(den > 0.0, "fit_rate: h values must not all coincide");
  return (n * sxy - sx * sy) / den;
}

Slope study_slope(const std::vector<LevelResult>& levels, double LevelResult::*field) {
  std::vector<std::pair<double, double>> pts;
  for (const auto& l : levels)
    if (l.ok && std::isfinite(l.*field) && l.*field > 0.0) pts.emplace_back(l.h, l.*field);
  if (pts.size() >= 4) pts.erase(pts.begin());
  if (pts.size() < 3) return {};
  return {fit_rate(pts), static_cast<int>(pts.size())};
}

ObservationDomain make_domain(const StudyConfig& cfg) {
  const auto& p = cfg.domain_params;
  if (cfg.domain_kind == "cylinder") {
    require(p.size() == 2, "cylinder domain needs two parameters");
    return ObservationDomain::cylinder(p[0], p[1]);
  }
  if (cfg.domain_kind == "oblique") {
    if (p.empty()) return ObservationDomain::oblique_reference(cfg.T);
    require(p.size() == 3, "oblique domain needs c0, slope, half_width");
    return ObservationDomain(ObliqueSlab{p[0], p[1], p[2]});
  }
  if (cfg.domain_kind == "slab_union") {
    if (p.empty()) return ObservationDomain::slab_union_reference(cfg.T);
    require(p.size() % 4 == 0, "slab_union parameters come in groups of four");
    SlabUnion u;
    for (std::size_t k = 0; k < p.size(); k += 4) u.rects.push_back({p[k], p[k + 1], p[k + 2], p[k + 3]});
    return ObservationDomain(u);
  }
  throw InvalidArgument("unknown domain kind '" + cfg.domain_kind + "'");
}

Formulation assembly_formulation(const StudyConfig& cfg) {
  if (cfg.formulation == "dual_cg") return Formulation::Mixed;
  return formulation_from_string(cfg.formulation);
}

AssemblyOptions assembly_options(const StudyConfig& cfg, const SpaceTimeMesh& mesh, bool for_infsup) {
  AssemblyOptions opt;
  opt.r = cfg.r_at(mesh.h());
  opt.eta = for_infsup ? opt.r : cfg.eta_at(mesh.h());
  opt.alpha = cfg.alpha;
  opt.eps = cfg.eps;
  opt.quad_order = cfg.quad_order;
  opt.cut_depth = cfg.cut_depth;
  opt.threads = cfg.threads;
  const bool hm = cfg.xinner_mode == "hminus1" || cfg.xinner_mode == "sine" || (cfg.xinner_mode == "auto" && for_infsup);
  opt.xinner = hm ? XInnerMode::sine(cfg.xinner_modes, cfg.xinner_samples) : XInnerMode::l2();
  return opt;
}

LevelResult run_level(const StudyConfig& cfg, int level, int nx, int nt, LevelFields* keep) {
  const auto t0 = Clock::now();
  LevelResult res;
  res.level = level;
  res.nx = nx;
  res.nt = nt;
  try {
    const SpaceTimeMesh mesh(nx, nt, cfg.T);
    res.h = mesh.h();
    const ObservationDomain domain = make_domain(cfg);
    Coefficients coeffs = Coefficients::from_names(cfg.coeff_c, cfg.coeff_d);
    coeffs.validate();
    const auto sol = oracle_for(cfg);
    const ObservationFn obs = observation_for(cfg, sol);
    const AssemblyOptions opt = assembly_options(cfg, mesh);
    res.r = opt.r;

    SparseSymSystem sys = assemble(assembly_formulation(cfg), mesh, domain, coeffs, opt, obs);
    res.m_h = sys.m();

    SaddleSolution s;
    auto run_cg = [&] {
      auto [cs, rep] = solve_dual_cg(sys, cfg.cg_threshold, cfg.cg_maxiter);
      res.cg_iters = rep.iterations;
      res.cg_converged = rep.converged;
      return cs;
    };
    if (sys.formulation == Formulation::LambdaZero) {
      s = solve_saddle(sys);
      res.solver_used = "primal";
    } else if (cfg.formulation == "dual_cg" || cfg.solver == "cg") {
      s = run_cg();
      res.solver_used = "cg";
    } else if (cfg.solver == "direct") {
      s = solve_saddle(sys);
      res.solver_used = "direct";
    } else {
      try {
        s = solve_saddle(sys);
        res.solver_used = "direct";
      } catch (const OutOfMemory&) {
        s = run_cg();
        res.solver_used = "cg";
      }
    }
    res.residual = s.residual_norm;
    res.rcond = s.rcond;
    res.near_singular = s.near_singular;

    ObservationFn exact;
    GridFn grid;
    if (sol) {
      exact = [&sol](double x, double t) { return sol->eval(x, t); };
      grid = [&sol](const std::vector<double>& xs, const std::vector<double>& ts) { return sol->eval_grid(xs, ts); };
    }
    const FieldNorms n = measure(sys, domain, s.y, s.lambda, s.f, exact, cfg.quad_order + 1, grid);
    if (sol) {
      res.relL2_QT = n.err_QT / n.exact_QT;
      res.relL2_qT = n.err_qT / n.exact_qT;
    }
    res.normL = n.normL;
    res.norm_lambda = n.norm_lambda;
    if (sys.n_f > 0) res.norm_f = n.norm_f;
    res.yh_qT = observed_norm(sys, domain, s.y);
    res.yobs_qT = std::sqrt(sys.obs_norm2);
    if (sys.formulation == Formulation::Source) res.ydiff_qT = observed_misfit(sys, domain, s.y, obs);

    if (cfg.condition) {
      try {
        res.kappa = condition_estimate(sys);
      } catch (const OutOfMemory&) {
      }
    }
    if (cfg.infsup) res.delta = run_infsup_level(cfg, level, nx, nt).delta;
    res.ok = true;
    if (keep) {
      keep->system = std::move(sys);
      keep->solution = std::move(s);
    }
  } catch (const NumericalError& e) {
    res.error = e.what();
  } catch (const InvalidArgument& e) {
    res.error = e.what();
  }
  if (cfg.timing) res.wall_ms = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
  return res;
}

LevelResult run_infsup_level(const StudyConfig& cfg, int level, int nx, int nt) {
  const auto t0 = Clock::now();
  LevelResult res;
  res.level = level;
  res.nx = nx;
  res.nt = nt;
  const SpaceTimeMesh mesh(nx, nt, cfg.T);
  res.h = mesh.h();
  const ObservationDomain domain = make_domain(cfg);
  Coefficients coeffs = Coefficients::from_names(cfg.coeff_c, cfg.coeff_d);
  const AssemblyOptions opt = assembly_options(cfg, mesh, true);
  res.r = opt.r;
  const SparseSymSystem sys = assemble_mixed(mesh, domain, coeffs, opt, [](double, double) { return 0.0; });
  res.m_h = sys.m();
  const InfsupResult inf = infsup_constant(sys);
  res.delta = inf.delta;
  res.ok = inf.converged;
  if (!inf.converged) res.error = "inf-sup iteration did not converge";
  if (cfg.timing) res.wall_ms = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
  return res;
}

SolveReport run_study(const StudyConfig& cfg) {
  validate(cfg);
  SolveReport rep;
  rep.config = cfg;
  int level = 1;
  for (const auto& [nx, nt] : cfg.resolved_levels()) rep.levels.push_back(run_level(cfg, level++, nx, nt));
  rep.slope_QT = study_slope(rep.levels, &LevelResult::relL2_QT);
  rep.slope_qT = study_slope(rep.levels, &LevelResult::relL2_qT);
  rep.slope_L = study_slope(rep.levels, &LevelResult::normL);
  rep.slope_lambda = study_slope(rep.levels, &LevelResult::norm_lambda);
  return rep;
}

SolveReport run_infsup_study(const StudyConfig& cfg) {
  validate(cfg);
  SolveReport rep;
  rep.config = cfg;
  int level = 1;
  for (const auto& [nx, nt] : cfg.resolved_levels()) {
    LevelResult res;
    try {
      res = run_infsup_level(cfg, level, nx, nt);
    } catch (const std::exception& e) {
      res.level = level;
      res.nx = nx;
      res.nt = nt;
      res.h = std::hypot(1.0 / nx, cfg.T / nt);
      res.error = e.what();
    }
    rep.levels.push_back(res);
    ++level;
  }
  return rep;
}

namespace {

std::string config_comment(const StudyConfig& cfg) {
  std::ostringstream o;
  std::istringstream in(to_config_text(cfg));
  for (std::string line; std::getline(in, line);) o << "# " << line << "\n";
  return o.str();
}

std::string wall(double ms) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.0f", ms);
  return buf;
}

}  // namespace

std::string infsup_csv(const SolveReport& rep) {
  std::ostringstream o;
  o << config_comment(rep.config) << "level,nx,nt,h,r,delta,m_h,wall_ms\n";
  for (const auto& l : rep.levels)
    o << l.level << "," << l.nx << "," << l.nt << "," << num(l.h) << "," << num(l.r) << "," << num(l.delta) << ","
      << l.m_h << "," << wall(l.wall_ms) << "\n";
  return o.str();
}

std::string report_csv(const SolveReport& rep) {
  std::ostringstream o;
  o << config_comment(rep.config) << "level,nx,nt,h,relL2_QT,relL2_qT,normL,norm_lambda,kappa,m_h,cg_iters,wall_ms\n";
  for (const auto& l : rep.levels) {
    o << l.level << "," << l.nx << "," << l.nt << "," << num(l.h) << "," << num(l.relL2_QT) << "," << num(l.relL2_qT)
      << "," << num(l.normL) << "," << num(l.norm_lambda) << "," << num(l.kappa) << "," << l.m_h << ","
      << (l.cg_iters >= 0 ? std::to_string(l.cg_iters) : "") << "," << wall(l.wall_ms) << "\n";
  }
  return o.str();
}

std::string report_json(const SolveReport& rep) {
  nlohmann::ordered_json j;
  nlohmann::ordered_json cfg = nlohmann::ordered_json::object();
  std::istringstream in(to_config_text(rep.config));
  for (std::string line; std::getline(in, line);) {
    const auto eq = line.find(" = ");
    cfg[line.substr(0, eq)] = eq + 3 <= line.size() ? line.substr(eq + 3) : "";
  }
  j["config"] = cfg;
  nlohmann::ordered_json levels = nlohmann::ordered_json::array();
  for (const auto& l : rep.levels) {
    nlohmann::ordered_json e;
    e["level"] = l.level;
    e["nx"] = l.nx;
    e["nt"] = l.nt;
    e["h"] = jnum(l.h);
    e["r"] = jnum(l.r);
    e["relL2_QT"] = jnum(l.relL2_QT);
    e["relL2_qT"] = jnum(l.relL2_qT);
    e["normL"] = jnum(l.normL);
    e["norm_lambda"] = jnum(l.norm_lambda);
    e["norm_f"] = jnum(l.norm_f);
    e["kappa"] = jnum(l.kappa);
    e["delta"] = jnum(l.delta);
    e["m_h"] = l.m_h;
    e["cg_iters"] = l.cg_iters >= 0 ? nlohmann::ordered_json(l.cg_iters) : nlohmann::ordered_json();
    e["cg_converged"] = l.cg_converged;
    e["wall_ms"] = std::round(l.wall_ms);
    e["yh_qT"] = jnum(l.yh_qT);
    e["yobs_qT"] = jnum(l.yobs_qT);
    e["residual"] = jnum(l.residual);
    e["rcond"] = jnum(l.rcond);
    e["near_singular"] = l.near_singular;
    e["solver"] = l.solver_used;
    e["ok"] = l.ok;
    e["error"] = l.error;
    levels.push_back(e);
  }
  j["levels"] = levels;
  auto slope = [](const Slope& s) {
    nlohmann::ordered_json o;
    o["value"] = jnum(s.value);
    o["points"] = s.points;
    return o;
  };
  j["slopes"]["relL2_QT"] = slope(rep.slope_QT);
  j["slopes"]["relL2_qT"] = slope(rep.slope_qT);
  j["slopes"]["normL"] = slope(rep.slope_L);
  j["slopes"]["norm_lambda"] = slope(rep.slope_lambda);
  return j.dump(2) + "\n";
}

std::string report_plot(const SolveReport& rep) {
  std::ostringstream o;
  const std::pair<const char*, double LevelResult::*> cols[] = {{"relL2_QT", &LevelResult::relL2_QT},
                                                                {"relL2_qT", &LevelResult::relL2_qT},
                                                                {"normL", &LevelResult::normL},
                                                                {"norm_lambda", &LevelResult::norm_lambda}};
  for (const auto& [name, field] : cols) {
    o << "# h " << name << "\n";
    for (const auto& l : rep.levels)
      if (l.ok && std::isfinite(l.*field)) o << num(l.h) << " " << num(l.*field) << "\n";
    o << "\n\n";
  }
  return o.str();
}

void write_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp);
    out << content;
    out.flush();
    if (!out) throw IoError("write failed for " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw IoError("cannot rename " + tmp + " to " + path);
  }
}

void write_report(const SolveReport& rep, bool plot) {
  std::error_code ec;
  std::filesystem::create_directories(rep.config.out_dir, ec);
  if (ec) throw IoError("cannot create output directory " + rep.config.out_dir);
  const std::filesystem::path dir(rep.config.out_dir);
  write_atomic((dir / "report.csv").string(), report_csv(rep));
  write_atomic((dir / "report.json").string(), report_json(rep));
  if (plot) write_atomic((dir / "plot.dat").string(), report_plot(rep));
}

void write_infsup_report(const SolveReport& rep) {
  std::error_code ec;
  std::filesystem::create_directories(rep.config.out_dir, ec);
  if (ec) throw IoError("cannot create output directory " + rep.config.out_dir);
  const std::filesystem::path dir(rep.config.out_dir);
  write_atomic((dir / "infsup.csv").string(), infsup_csv(rep));
  write_atomic((dir / "report.json").string(), report_json(rep));
}

std::string field_csv(const LevelFields& f) {
  const SpaceTimeMesh& mesh = f.system.mesh;
  std::ostringstream o;
  o << "x,t,y\n";
  char buf[96];
  for (int j = 0; j <= mesh.nt(); ++j)
    for (int i = 0; i <= mesh.nx(); ++i) {
      const int d = f.system.zmap(mesh.node(i, j), 0);
      const double v = d >= 0 ? f.solution.y[d] : 0.0;
      std::snprintf(buf, sizeof buf, "%.9e,%.9e,%.9e\n", mesh.x(i), mesh.t(j), v);
      o << buf;
    }
  return o.str();
}

}  // namespace stw
