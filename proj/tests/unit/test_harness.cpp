#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <cstdlib>

#include "stwave/error.hpp"
#include "stwave/harness.hpp"

using namespace stw;
namespace fs = std::filesystem;

namespace {

StudyConfig small(const std::string& example = "EX1") {
  StudyConfig cfg;
  cfg.example = example;
  cfg.timing = false;
  apply_setting(cfg, "levels", "10:20,20:40,40:80");
  return cfg;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST_CASE("fit_rate") {
  std::vector<std::pair<double, double>> p1, p2;
  for (double h : {0.1, 0.05, 0.025, 0.0125}) {
    p1.emplace_back(h, 3.0 * h);
    p2.emplace_back(h, 0.7 * h * h);
  }
  CHECK(std::abs(fit_rate(p1) - 1.0) < 1e-12);
  CHECK(std::abs(fit_rate(p2) - 2.0) < 1e-12);
  CHECK_THROWS_AS(fit_rate({{0.1, 1.0}, {0.05, 0.5}}), InvalidArgument);
  CHECK_THROWS_AS(fit_rate({{0.1, 1.0}, {0.05, 0.0}, {0.025, 0.1}}), InvalidArgument);
}

TEST_CASE("fit_rate on a near-linear sequence") {
  std::vector<std::pair<double, double>> p;
  const double e[5] = {9.55e-2, 4.58e-2, 2.24e-2, 1.10e-2, 5.52e-3};
  for (int k = 0; k < 5; ++k) p.emplace_back(0.0707 / (1 << k), e[k]);
  CHECK(fit_rate(p) == doctest::Approx(1.03).epsilon(0.02));
}

TEST_CASE("study slope drops the coarsest level") {
  std::vector<LevelResult> lv(4);
  const double h[4] = {0.1, 0.05, 0.025, 0.0125};
  for (int k = 0; k < 4; ++k) {
    lv[k].ok = true;
    lv[k].h = h[k];
    lv[k].relL2_QT = k == 0 ? 1.0 : h[k] * h[k];
  }
  const auto s = study_slope(lv, &LevelResult::relL2_QT);
  CHECK(s.points == 3);
  CHECK(s.value == doctest::Approx(2.0).epsilon(1e-12));
  lv.pop_back();
  CHECK(study_slope(lv, &LevelResult::relL2_QT).points == 3);
  lv.pop_back();
  CHECK(study_slope(lv, &LevelResult::relL2_QT).points == 0);
}

TEST_CASE("small EX1 study") {
  const auto rep = run_study(small());
  REQUIRE(rep.levels.size() == 3);
  CHECK(rep.all_ok());
  for (const auto& l : rep.levels) {
    CHECK(l.relL2_QT > 0.0);
    CHECK(l.normL >= 0.0);
    CHECK(l.norm_lambda >= 0.0);
    CHECK(l.m_h == (l.nx - 1) * (l.nt + 1));
    CHECK(l.wall_ms == 0.0);
    CHECK(l.yh_qT <= l.yobs_qT * (1 + 1e-6));
  }
  CHECK(rep.levels[2].relL2_QT < rep.levels[0].relL2_QT);
  CHECK(rep.slope_QT.points == 3);
}

TEST_CASE("reports are byte-identical across runs") {
  const auto cfg = small("EX2");
  const auto a = run_study(cfg), b = run_study(cfg);
  CHECK(report_csv(a) == report_csv(b));
  CHECK(report_json(a) == report_json(b));
  auto c3 = cfg;
  c3.threads = 3;
  CHECK(report_csv(run_study(c3)).substr(report_csv(a).find("level,")) ==
        report_csv(a).substr(report_csv(a).find("level,")));
}

TEST_CASE("noise sensitivity is linear") {
  auto cfg = small();
  apply_setting(cfg, "levels", "20:40");
  cfg.noise_seed = 3;
  const auto base = run_study(cfg).levels[0];
  for (double sigma : {1e-3, 1e-2}) {
    cfg.noise_amplitude = sigma;
    const auto l = run_study(cfg).levels[0];
    REQUIRE(l.ok);
    // yobs_qT of the clean run is ||y||_{L2(q_T)}
    CHECK(l.relL2_qT <= base.relL2_qT + 3 * sigma / base.yobs_qT);
    CHECK(l.yh_qT <= l.yobs_qT * (1 + 1e-6));
  }
}

TEST_CASE("csv layout") {
  auto cfg = small();
  apply_setting(cfg, "levels", "10:20,20:40");
  const auto rep = run_study(cfg);
  const std::string csv = report_csv(rep);
  std::istringstream in(csv);
  std::string line;
  int comments = 0;
  while (std::getline(in, line) && line.rfind("# ", 0) == 0) ++comments;
  CHECK(comments == static_cast<int>(config_keys().size()));
  CHECK(line == "level,nx,nt,h,relL2_QT,relL2_qT,normL,norm_lambda,kappa,m_h,cg_iters,wall_ms");
  std::getline(in, line);
  CHECK(line.rfind("1,10,20,", 0) == 0);
  CHECK(line.find(",,") != std::string::npos);  // kappa not requested
  int rows = 1;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 2);
}

TEST_CASE("json mirror and plot blocks") {
  const auto rep = run_study(small());
  const auto j = nlohmann::json::parse(report_json(rep));
  CHECK(j["levels"].size() == 3);
  CHECK(j["config"]["example"] == "EX1");
  CHECK(j["levels"][1]["nx"] == 20);
  CHECK(j["levels"][0]["relL2_QT"].get<double>() == doctest::Approx(rep.levels[0].relL2_QT));
  const std::string plot = report_plot(rep);
  CHECK(plot.find("# h relL2_QT\n") != std::string::npos);
  CHECK(plot.find("\n\n\n") != std::string::npos);
}

TEST_CASE("reports are written atomically") {
  auto cfg = small();
  apply_setting(cfg, "levels", "10:20");
  cfg.out_dir = "harness_test_out";
  fs::remove_all(cfg.out_dir);
  const auto rep = run_study(cfg);
  write_report(rep, true);
  CHECK(fs::exists("harness_test_out/report.csv"));
  CHECK(fs::exists("harness_test_out/report.json"));
  CHECK(fs::exists("harness_test_out/plot.dat"));
  for (const auto& e : fs::directory_iterator(cfg.out_dir)) CHECK(e.path().extension() != ".tmp");
  CHECK(slurp("harness_test_out/report.csv") == report_csv(rep));
  fs::remove_all(cfg.out_dir);
}

TEST_CASE("failing levels are recorded and the study continues") {
  auto cfg = small();
  cfg.solver = "direct";
  apply_setting(cfg, "levels", "10:20,40:80");
  ::setenv("STWAVE_MEMORY_MB", "30", 1);
  const auto rep = run_study(cfg);
  ::unsetenv("STWAVE_MEMORY_MB");
  REQUIRE(rep.levels.size() == 2);
  CHECK(rep.levels[0].ok);
  CHECK_FALSE(rep.levels[1].ok);
  CHECK(rep.levels[1].error.find("budget") != std::string::npos);
  CHECK_FALSE(rep.all_ok());
}

TEST_CASE("every formulation runs") {
  for (const char* f : {"stabilized", "lambda_zero", "dual_cg", "source"}) {
    auto cfg = small();
    cfg.formulation = f;
    apply_setting(cfg, "levels", "10:20");
    const auto l = run_study(cfg).levels[0];
    CHECK(l.ok);
    CHECK(l.relL2_QT < 1.0);
    if (std::string(f) == "dual_cg") CHECK(l.cg_iters > 0);
    if (std::string(f) == "source") CHECK(l.norm_f >= 0.0);
  }
}

TEST_CASE("non-cylindrical domains") {
  for (const char* kind : {"oblique", "slab_union"}) {
    auto cfg = small("EX2");
    apply_setting(cfg, "domain.kind", kind);
    apply_setting(cfg, "levels", "10:20");
    CHECK(run_study(cfg).levels[0].ok);
  }
}

TEST_CASE("observation from a file") {
  const std::string path = "harness_obs.csv";
  {
    std::ofstream f(path);
    f << "x,t,value\n";
    for (int i = 0; i <= 20; ++i)
      for (int j = 0; j <= 40; ++j) f << i / 20.0 << "," << j / 20.0 << "," << 0.0 << "\n";
  }
  auto cfg = small();
  cfg.example = "file:" + path;
  apply_setting(cfg, "levels", "10:20");
  const auto l = run_study(cfg).levels[0];
  CHECK(l.ok);
  CHECK(std::isnan(l.relL2_QT));
  CHECK(l.yh_qT == 0.0);
  fs::remove(path);
}

TEST_CASE("condition and inf-sup columns on request") {
  auto cfg = small();
  apply_setting(cfg, "levels", "10:20");
  cfg.condition = true;
  cfg.infsup = true;
  const auto l = run_study(cfg).levels[0];
  CHECK(l.kappa > 1.0);
  CHECK(l.delta > 0.0);
}

TEST_CASE("inf-sup study") {
  auto cfg = small();
  apply_setting(cfg, "levels", "10:20,20:40");
  const auto rep = run_infsup_study(cfg);
  REQUIRE(rep.levels.size() == 2);
  for (const auto& l : rep.levels) CHECK(l.delta > 0.0);
  const std::string csv = infsup_csv(rep);
  CHECK(csv.find("level,nx,nt,h,r,delta,m_h,wall_ms") != std::string::npos);
}

TEST_CASE("field export") {
  auto cfg = small();
  LevelFields f;
  const auto l = run_level(cfg, 1, 10, 20, &f);
  REQUIRE(l.ok);
  const std::string csv = field_csv(f);
  CHECK(csv.rfind("x,t,y\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 11 * 21);
}
