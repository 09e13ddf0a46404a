#include <doctest.h>

#include <sys/wait.h>

#include <array>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out;
};

Run run(const std::string& args) {
  const std::string cmd = std::string(STWAVE_CLI) + " " + args + " 2>&1";
  Run r;
  FILE* p = popen(cmd.c_str(), "r");
  REQUIRE(p != nullptr);
  std::array<char, 4096> buf;
  size_t n;
  while ((n = fread(buf.data(), 1, buf.size(), p)) > 0) r.out.append(buf.data(), n);
  const int st = pclose(p);
  r.code = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
  return r;
}

int rows(const fs::path& csv) {
  std::ifstream in(csv);
  std::string line;
  int n = 0;
  bool header = false;
  while (std::getline(in, line)) {
    if (line.rfind("#", 0) == 0) continue;
    if (!header) {
      header = true;
      continue;
    }
    ++n;
  }
  return n;
}

}  // namespace

TEST_CASE("selftest exits 0 quickly") {
  const auto t0 = std::chrono::steady_clock::now();
  const auto r = run("selftest");
  const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  CHECK(r.code == 0);
  CHECK(r.out.find("0 failed") != std::string::npos);
  CHECK(s < 60.0);
}

TEST_CASE("usage errors exit 1") {
  CHECK(run("study --set T=0").code == 1);
  CHECK(run("study --set nokey=1").code == 1);
  CHECK(run("study --bogus").code == 1);
  CHECK(run("").code == 1);
  CHECK(run("study --config /no/such/file.cfg").code == 1);
  CHECK(run("frobnicate").code == 1);
}

TEST_CASE("study prints the config header and writes reports") {
  fs::remove_all("cli_out");
  const auto r = run("study --set levels=10:20,20:40 --no-timing -o cli_out");
  CHECK(r.code == 0);
  CHECK(r.out.find("# example = EX1") != std::string::npos);
  CHECK(r.out.find("# out.dir = cli_out") != std::string::npos);
  CHECK(rows("cli_out/report.csv") == 2);
  CHECK(fs::exists("cli_out/report.json"));
  CHECK(fs::exists("cli_out/plot.dat"));
  std::ifstream in("cli_out/report.csv");
  std::string first;
  std::getline(in, first);
  CHECK(first == "# example = EX1");
  fs::remove_all("cli_out");
}

TEST_CASE("no-plot skips plot.dat") {
  fs::remove_all("cli_out2");
  CHECK(run("study --set levels=10:20 --no-plot -o cli_out2").code == 0);
  CHECK(fs::exists("cli_out2/report.csv"));
  CHECK_FALSE(fs::exists("cli_out2/plot.dat"));
  fs::remove_all("cli_out2");
}

TEST_CASE("infsup prints delta per level") {
  fs::remove_all("cli_inf");
  const auto r = run("infsup --set r=1 --set levels=2 -o cli_inf");
  CHECK(r.code == 0);
  CHECK(r.out.find("delta_h") != std::string::npos);
  CHECK(r.out.find("3.10") != std::string::npos);
  CHECK(rows("cli_inf/infsup.csv") == 2);
  fs::remove_all("cli_inf");
}

TEST_CASE("dual and source commands") {
  fs::remove_all("cli_ds");
  auto r = run("dual --set levels=10:20 -o cli_ds");
  CHECK(r.code == 0);
  CHECK(r.out.find("# formulation = dual_cg") != std::string::npos);
  r = run("source --set levels=10:20 --set eps=1e-4 -o cli_ds");
  CHECK(r.code == 0);
  CHECK(r.out.find("# formulation = source") != std::string::npos);
  fs::remove_all("cli_ds");
}

TEST_CASE("solve writes the field") {
  fs::remove_all("cli_solve");
  const auto r = run("solve --set levels=10:20,20:40 --field cli_field.csv -o cli_solve");
  CHECK(r.code == 0);
  CHECK(rows("cli_solve/report.csv") == 1);
  std::ifstream in("cli_field.csv");
  std::string head;
  std::getline(in, head);
  CHECK(head == "x,t,y");
  fs::remove("cli_field.csv");
  fs::remove_all("cli_solve");
}

TEST_CASE("CG non-convergence exits 2") {
  fs::remove_all("cli_cg");
  const auto r = run("study --solver cg --set cg.maxiter=2 --set levels=20:40 -o cli_cg");
  CHECK(r.code == 2);
  CHECK(r.out.find("did not converge") != std::string::npos);
  fs::remove_all("cli_cg");
}

TEST_CASE("reports are byte-stable without timing") {
  fs::remove_all("cli_a");
  fs::remove_all("cli_b");
  CHECK(run("study --set levels=10:20,20:40 --no-timing -o cli_a").code == 0);
  CHECK(run("study --set levels=10:20,20:40 --no-timing -o cli_b").code == 0);
  auto slurp = [](const char* p) {
    std::ifstream in(p);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
  };
  const std::string a = slurp("cli_a/report.csv"), b = slurp("cli_b/report.csv");
  CHECK(a.substr(a.find("level,")) == b.substr(b.find("level,")));
  fs::remove_all("cli_a");
  fs::remove_all("cli_b");
}

TEST_CASE("acceptance config runs end to end") {
  fs::remove_all("cli_ex1");
  const auto r = run(std::string("study --config ") + STWAVE_CONFIG_DIR + "/ex1_T2.cfg -o cli_ex1");
  CHECK(r.code == 0);
  CHECK(rows("cli_ex1/report.csv") == 5);
  fs::remove_all("cli_ex1");
}
