#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <fstream>

#include "stwave/config.hpp"
#include "stwave/error.hpp"

using namespace stw;

TEST_CASE("every documented key is accepted") {
  const std::vector<std::string> documented{"example", "T", "domain.kind", "domain.params", "formulation", "r", "eta",
                                            "alpha", "eps", "levels", "quad.order", "cut.depth", "xinner.mode",
                                            "xinner.modes", "xinner.samples", "noise.amplitude", "noise.seed",
                                            "solver", "cg.threshold", "cg.maxiter", "out.dir", "threads"};
  const auto& keys = config_keys();
  for (const auto& k : documented) CHECK(std::find(keys.begin(), keys.end(), k) != keys.end());
}

TEST_CASE("parse a config file") {
  const auto cfg = parse_config(R"(# EX2 stabilized
example = EX2
T = 1.5
formulation = stabilized   # trailing comment
alpha = 0.2
levels = 10:15, 20:30
domain.params = 0.2, 0.4
noise.amplitude = 1e-3
noise.seed = 42
)");
  CHECK(cfg.example == "EX2");
  CHECK(cfg.T == 1.5);
  CHECK(cfg.formulation == "stabilized");
  CHECK(cfg.alpha == 0.2);
  REQUIRE(cfg.levels.size() == 2);
  CHECK(cfg.levels[1] == std::pair{20, 30});
  CHECK(cfg.domain_params == std::vector<double>{0.2, 0.4});
  CHECK(cfg.noise_seed == 42);
  CHECK_NOTHROW(validate(cfg));
}

TEST_CASE("unknown keys and malformed values are rejected") {
  StudyConfig cfg;
  CHECK_THROWS_AS(apply_setting(cfg, "bogus", "1"), InvalidArgument);
  CHECK_THROWS_AS(apply_setting(cfg, "T", "two"), InvalidArgument);
  CHECK_THROWS_AS(apply_setting(cfg, "formulation", "galerkin"), InvalidArgument);
  CHECK_THROWS_AS(apply_setting(cfg, "levels", "0"), InvalidArgument);
  CHECK_THROWS_AS(apply_setting(cfg, "levels", "10x20"), InvalidArgument);
  CHECK_THROWS_AS(parse_config("T 2\n"), InvalidArgument);
  CHECK_THROWS_AS(load_config("no/such/file.cfg"), IoError);
}

TEST_CASE("validation") {
  auto bad = [](const std::string& k, const std::string& v) {
    StudyConfig cfg;
    apply_setting(cfg, k, v);
    CHECK_THROWS_AS(validate(cfg), InvalidArgument);
  };
  bad("T", "0");
  bad("T", "-1");
  bad("alpha", "1");
  bad("eps", "0");
  bad("domain.params", "0.3, 0.1");
  bad("levels", "20:40, 10:20");
  bad("quad.order", "7");
  bad("cut.depth", "9");
  bad("xinner.samples", "100");
  bad("noise.amplitude", "-1");
  bad("cg.threshold", "2");
  bad("threads", "0");
  StudyConfig ok;
  CHECK_NOTHROW(validate(ok));
}

TEST_CASE("default level ladder") {
  StudyConfig cfg;
  const auto l = cfg.resolved_levels();
  REQUIRE(l.size() == 4);
  CHECK(l[0] == std::pair{20, 40});
  CHECK(l[3] == std::pair{160, 320});
  apply_setting(cfg, "T", "1");
  apply_setting(cfg, "levels", "5");
  CHECK(cfg.resolved_levels().back() == std::pair{320, 320});
}

TEST_CASE("r and eta scaling") {
  StudyConfig cfg;
  CHECK(cfg.r_at(0.1) == 1.0);
  CHECK(cfg.eta_at(0.1) == 1.0);
  apply_setting(cfg, "r", "h^-2");
  CHECK(cfg.r_at(0.1) == doctest::Approx(100.0));
  CHECK(cfg.eta_at(0.1) == doctest::Approx(100.0));
  apply_setting(cfg, "eta", "3");
  CHECK(cfg.eta_at(0.1) == 3.0);
}

TEST_CASE("canonical text round trips") {
  StudyConfig cfg;
  apply_setting(cfg, "example", "EX2");
  apply_setting(cfg, "levels", "10:20,20:40,40:80");
  apply_setting(cfg, "domain.kind", "oblique");
  apply_setting(cfg, "eps", "1e-4");
  const std::string text = to_config_text(cfg);
  CHECK(to_config_text(parse_config(text)) == text);
  CHECK(text.find("eps = 1e-04\n") != std::string::npos);
  CHECK(text.find("levels = 10:20,20:40,40:80\n") != std::string::npos);
}

TEST_CASE("load from file over a base") {
  const std::string path = "config_test.cfg";
  {
    std::ofstream f(path);
    f << "T = 1\n";
  }
  StudyConfig base;
  base.example = "EX2";
  const auto cfg = load_config(path, base);
  CHECK(cfg.T == 1.0);
  CHECK(cfg.example == "EX2");
  std::remove(path.c_str());
}
