#include "stwave/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "stwave/error.hpp"

namespace stw {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(trim(cur));
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  double x = 0.0;
  const char* end = v.data() + v.size();
  auto [p, ec] = std::from_chars(v.data(), end, x);
  if (ec != std::errc() || p != end || !std::isfinite(x))
    throw InvalidArgument("config: '" + key + "' expects a number, got '" + v + "'");
  return x;
}

long long to_int(const std::string& key, const std::string& v) {
  long long x = 0;
  const char* end = v.data() + v.size();
  auto [p, ec] = std::from_chars(v.data(), end, x);
  if (ec != std::errc() || p != end) throw InvalidArgument("config: '" + key + "' expects an integer, got '" + v + "'");
  return x;
}

void one_of(const std::string& key, const std::string& v, std::initializer_list<const char*> allowed) {
  for (const char* a : allowed)
    if (v == a) return;
  std::string list;
  for (const char* a : allowed) list += std::string(list.empty() ? "" : "|") + a;
  throw InvalidArgument("config: '" + key + "' must be one of " + list + ", got '" + v + "'");
}

void check_scale(const std::string& key, const std::string& v, bool allow_r) {
  if (v == "h^-2" || (allow_r && v == "r")) return;
  if (to_double(key, v) <= 0.0) throw InvalidArgument("config: '" + key + "' must be positive");
}

std::string fmt(double x) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

}  // namespace

std::vector<std::pair<int, int>> StudyConfig::resolved_levels() const {
  if (!levels.empty()) return levels;
  std::vector<std::pair<int, int>> out;
  for (int l = 1; l <= level_count; ++l) {
    const int nx = 20 << (l - 1);
    out.emplace_back(nx, std::max(1, static_cast<int>(std::lround(nx * T))));
  }
  return out;
}

double StudyConfig::r_at(double h) const { return r == "h^-2" ? 1.0 / (h * h) : to_double("r", r); }

double StudyConfig::eta_at(double h) const {
  if (eta == "r") return r_at(h);
  return eta == "h^-2" ? 1.0 / (h * h) : to_double("eta", eta);
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys{
      "example",      "T",         "domain.kind",   "domain.params",  "formulation",     "r",
      "eta",          "alpha",     "eps",           "levels",         "quad.order",      "cut.depth",
      "xinner.mode",  "xinner.modes", "xinner.samples", "noise.amplitude", "noise.seed",  "solver",
      "cg.threshold", "cg.maxiter", "out.dir",      "threads",        "coeff.c",         "coeff.d"};
  return keys;
}

void apply_setting(StudyConfig& cfg, const std::string& key_in, const std::string& value_in) {
  const std::string key = trim(key_in), v = trim(value_in);
  if (key == "example") {
    if (v.rfind("file:", 0) != 0) one_of(key, v, {"EX1", "EX2"});
    cfg.example = v;
  } else if (key == "T") {
    cfg.T = to_double(key, v);
  } else if (key == "domain.kind") {
    one_of(key, v, {"cylinder", "oblique", "slab_union"});
    if (v != cfg.domain_kind) cfg.domain_params = v == "cylinder" ? std::vector<double>{0.1, 0.3} : std::vector<double>{};
    cfg.domain_kind = v;
  } else if (key == "domain.params") {
    cfg.domain_params.clear();
    if (!v.empty())
      for (const auto& p : split(v, ',')) cfg.domain_params.push_back(to_double(key, p));
  } else if (key == "formulation") {
    one_of(key, v, {"mixed", "stabilized", "lambda_zero", "dual_cg", "source"});
    cfg.formulation = v;
  } else if (key == "r") {
    check_scale(key, v, false);
    cfg.r = v;
  } else if (key == "eta") {
    check_scale(key, v, true);
    cfg.eta = v;
  } else if (key == "alpha") {
    cfg.alpha = to_double(key, v);
  } else if (key == "eps") {
    cfg.eps = to_double(key, v);
  } else if (key == "levels") {
    cfg.levels.clear();
    if (v.find(':') == std::string::npos) {
      cfg.level_count = static_cast<int>(to_int(key, v));
      if (cfg.level_count < 1 || cfg.level_count > 8) throw InvalidArgument("config: 'levels' count must be in [1, 8]");
    } else {
      for (const auto& item : split(v, ',')) {
        const auto parts = split(item, ':');
        if (parts.size() != 2) throw InvalidArgument("config: 'levels' entries must look like nx:nt, got '" + item + "'");
        cfg.levels.emplace_back(static_cast<int>(to_int(key, parts[0])), static_cast<int>(to_int(key, parts[1])));
      }
    }
  } else if (key == "quad.order") {
    cfg.quad_order = static_cast<int>(to_int(key, v));
  } else if (key == "cut.depth") {
    cfg.cut_depth = static_cast<int>(to_int(key, v));
  } else if (key == "xinner.mode") {
    one_of(key, v, {"auto", "l2", "hminus1", "sine"});
    cfg.xinner_mode = v;
  } else if (key == "xinner.modes") {
    cfg.xinner_modes = static_cast<int>(to_int(key, v));
  } else if (key == "xinner.samples") {
    cfg.xinner_samples = static_cast<int>(to_int(key, v));
  } else if (key == "noise.amplitude") {
    cfg.noise_amplitude = to_double(key, v);
  } else if (key == "noise.seed") {
    const long long s = to_int(key, v);
    if (s < 0) throw InvalidArgument("config: 'noise.seed' must be nonnegative");
    cfg.noise_seed = static_cast<std::uint64_t>(s);
  } else if (key == "solver") {
    one_of(key, v, {"auto", "direct", "cg"});
    cfg.solver = v;
  } else if (key == "cg.threshold") {
    cfg.cg_threshold = to_double(key, v);
  } else if (key == "cg.maxiter") {
    cfg.cg_maxiter = static_cast<int>(to_int(key, v));
  } else if (key == "out.dir") {
    if (v.empty()) throw InvalidArgument("config: 'out.dir' must not be empty");
    cfg.out_dir = v;
  } else if (key == "threads") {
    cfg.threads = static_cast<int>(to_int(key, v));
  } else if (key == "coeff.c") {
    cfg.coeff_c = v;
  } else if (key == "coeff.d") {
    cfg.coeff_d = v;
  } else {
    throw InvalidArgument("config: unknown key '" + key + "'");
  }
}

StudyConfig parse_config(const std::string& text, StudyConfig cfg) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw InvalidArgument("config line " + std::to_string(lineno) + ": expected key = value");
    apply_setting(cfg, line.substr(0, eq), line.substr(eq + 1));
  }
  return cfg;
}

StudyConfig load_config(const std::string& path, StudyConfig base) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), std::move(base));
}

void validate(const StudyConfig& cfg) {
  require(cfg.T > 0.0, "config: T must be positive");
  if (cfg.domain_kind == "cylinder") {
    require(cfg.domain_params.size() == 2, "config: cylinder domain needs domain.params = a, b");
    require(0.0 <= cfg.domain_params[0] && cfg.domain_params[0] < cfg.domain_params[1] && cfg.domain_params[1] <= 1.0,
            "config: cylinder domain needs 0 <= a < b <= 1");
  } else if (cfg.domain_kind == "oblique") {
    require(cfg.domain_params.empty() || cfg.domain_params.size() == 3,
            "config: oblique domain takes no params or c0, slope, half_width");
  } else {
    require(cfg.domain_params.size() % 4 == 0, "config: slab_union params come in groups x0, x1, t0, t1");
  }
  require(cfg.alpha > 0.0 && cfg.alpha < 1.0, "config: alpha must lie in (0, 1)");
  require(cfg.eps > 0.0, "config: eps must be positive");
  const auto lv = cfg.resolved_levels();
  require(!lv.empty(), "config: no levels");
  double prev_h = 1e300;
  for (const auto& [nx, nt] : lv) {
    require(nx >= 2 && nt >= 1, "config: levels need nx >= 2 and nt >= 1");
    const double h = std::hypot(1.0 / nx, cfg.T / nt);
    require(h < prev_h, "config: levels must be strictly refining");
    prev_h = h;
  }
  require(cfg.quad_order >= 2 && cfg.quad_order <= 6, "config: quad.order must be in [2, 6]");
  require(cfg.cut_depth >= 0 && cfg.cut_depth <= 6, "config: cut.depth must be in [0, 6]");
  require(cfg.xinner_modes >= 1 && cfg.xinner_samples >= 2 * cfg.xinner_modes,
          "config: xinner needs modes >= 1 and samples >= 2 * modes");
  require(cfg.noise_amplitude >= 0.0, "config: noise.amplitude must be nonnegative");
  require(cfg.cg_threshold > 0.0 && cfg.cg_threshold < 1.0, "config: cg.threshold must lie in (0, 1)");
  require(cfg.cg_maxiter >= 0, "config: cg.maxiter must be nonnegative");
  require(cfg.threads >= 1 && cfg.threads <= 256, "config: threads must be in [1, 256]");
}

std::string to_config_text(const StudyConfig& cfg) {
  std::ostringstream o;
  auto list = [](const std::vector<double>& v) {
    std::string s;
    for (double x : v) s += (s.empty() ? "" : ", ") + fmt(x);
    return s;
  };
  std::string levels;
  if (cfg.levels.empty()) {
    levels = std::to_string(cfg.level_count);
  } else {
    for (const auto& [nx, nt] : cfg.levels)
      levels += (levels.empty() ? "" : ",") + std::to_string(nx) + ":" + std::to_string(nt);
  }
  o << "example = " << cfg.example << "\n"
    << "T = " << fmt(cfg.T) << "\n"
    << "domain.kind = " << cfg.domain_kind << "\n"
    << "domain.params = " << list(cfg.domain_params) << "\n"
    << "formulation = " << cfg.formulation << "\n"
    << "r = " << cfg.r << "\n"
    << "eta = " << cfg.eta << "\n"
    << "alpha = " << fmt(cfg.alpha) << "\n"
    << "eps = " << fmt(cfg.eps) << "\n"
    << "levels = " << levels << "\n"
    << "quad.order = " << cfg.quad_order << "\n"
    << "cut.depth = " << cfg.cut_depth << "\n"
    << "xinner.mode = " << cfg.xinner_mode << "\n"
    << "xinner.modes = " << cfg.xinner_modes << "\n"
    << "xinner.samples = " << cfg.xinner_samples << "\n"
    << "noise.amplitude = " << fmt(cfg.noise_amplitude) << "\n"
    << "noise.seed = " << cfg.noise_seed << "\n"
    << "solver = " << cfg.solver << "\n"
    << "cg.threshold = " << fmt(cfg.cg_threshold) << "\n"
    << "cg.maxiter = " << cfg.cg_maxiter << "\n"
    << "out.dir = " << cfg.out_dir << "\n"
    << "threads = " << cfg.threads << "\n"
    << "coeff.c = " << cfg.coeff_c << "\n"
    << "coeff.d = " << cfg.coeff_d << "\n";
  return o.str();
}

}  // namespace stw
