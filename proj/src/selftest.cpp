#include "stwave/selftest.hpp"

#include <cmath>
#include <functional>
#include <numbers>
#include <sstream>

#include "stwave/assembly.hpp"
#include "stwave/error.hpp"
#include "stwave/harness.hpp"
#include "stwave/oracle.hpp"
#include "stwave/solvers.hpp"

namespace stw {

namespace {

constexpr double pi = std::numbers::pi;

struct Runner {
  std::vector<SelftestCase> cases;

  void check(const std::string& name, const std::function<bool(std::string&)>& fn) {
    SelftestCase c;
    c.name = name;
    try {
      c.passed = fn(c.detail);
    } catch (const std::exception& e) {
      c.passed = false;
      c.detail = std::string("exception: ") + e.what();
    }
    cases.push_back(std::move(c));
  }
};

std::string show(double v) {
  std::ostringstream s;
  s.precision(10);
  s << v;
  return s.str();
}

const ObservationFn zero_obs = [](double, double) { return 0.0; };

}  // namespace

std::vector<SelftestCase> run_selftest() {
  Runner r;

  r.check("mesh single element", [](std::string& d) {
    const SpaceTimeMesh m(1, 1, 2.0);
    d = "h=" + show(m.h());
    return m.num_nodes() == 4 && m.num_elements() == 1 && m.dx() == 1.0 && m.dt() == 2.0 &&
           std::abs(m.h() - std::sqrt(5.0)) < 1e-15;
  });
  r.check("mesh rejects nx=0", [](std::string&) {
    try {
      SpaceTimeMesh(0, 1, 1.0);
    } catch (const InvalidArgument&) {
      return true;
    }
    return false;
  });
  r.check("cylinder membership", [](std::string&) {
    return membership(ObservationDomain::cylinder(0.1, 0.3), 0.2, 1.7);
  });
  r.check("indicator weights inside and outside", [](std::string& d) {
    const SpaceTimeMesh m(10, 20, 2.0);
    const auto dom = ObservationDomain::cylinder(0.1, 0.3);
    const auto rule = gauss_rule(4);
    double in = 0.0;
    for (const auto& p : indicator_weights(dom, m, m.element(1, 3), rule, 4)) in += p.weight;
    const auto out = indicator_weights(dom, m, m.element(6, 3), rule, 4);
    d = "inside sum " + show(in);
    return std::abs(in - m.dx() * m.dt()) < 1e-15 && out.empty();
  });
  r.check("bfs Kronecker at corner 0", [](std::string&) {
    const double c[4][2] = {{0, 0}, {1, 0}, {0, 1}, {1, 1}};
    for (int k = 0; k < 4; ++k) {
      const double v = eval_bfs(0.3, 0.7, c[k][0], c[k][1])[0].v;
      if (std::abs(v - (k == 0 ? 1.0 : 0.0)) > 1e-14) return false;
    }
    return true;
  });
  r.check("bfs partition of unity", [](std::string& d) {
    const auto s = eval_bfs(0.3, 0.7, 0.37, 0.61);
    double sum = 0.0;
    for (int c = 0; c < 4; ++c) sum += s[bfs_local(c, BfsDof::Value)].v;
    d = "sum " + show(sum);
    return std::abs(sum - 1.0) < 1e-14;
  });
  r.check("q1 Kronecker and partition of unity", [](std::string&) {
    const auto q = eval_q1(0.5, 0.5, 0.0, 0.0);
    const auto p = eval_q1(0.5, 0.5, 0.21, 0.83);
    return q[0].v == 1.0 && std::abs(p[0].v + p[1].v + p[2].v + p[3].v - 1.0) < 1e-15;
  });
  r.check("gauss g=2 integrates xi*tau", [](std::string& d) {
    double s = 0.0;
    for (const auto& p : gauss_rule(2).points) s += p.weight * p.xi * p.tau;
    d = show(s);
    return std::abs(s - 0.25) < 1e-15;
  });
  r.check("gauss g=4 beyond exactness on xi^8", [](std::string& d) {
    const auto line = gauss_rule(4).line;
    double s = 0.0;
    for (int a = 0; a < line.size(); ++a) s += line.weights[a] * std::pow(line.points[a], 8);
    d = "error " + show(s - 1.0 / 9.0);
    return std::isfinite(s);
  });
  r.check("L sin(pi x) sin(pi t) = 0", [](std::string& d) {
    const double x = 0.31, t = 0.77;
    const FieldTraces f{-pi * pi * std::sin(pi * x) * std::sin(pi * t), pi * std::cos(pi * x) * std::sin(pi * t),
                        -pi * pi * std::sin(pi * x) * std::sin(pi * t), std::sin(pi * x) * std::sin(pi * t)};
    const double v = apply_L(Coefficients::standard(), f, x, t);
    d = show(v);
    return std::abs(v) < 1e-12;
  });
  r.check("x_inner L2 of ones", [](std::string&) {
    return std::abs(x_inner(XInnerMode::l2(), [](double) { return 1.0; }, [](double) { return 1.0; }) - 1.0) < 1e-14;
  });
  r.check("x_inner sine orthogonality", [](std::string& d) {
    const double v = x_inner(XInnerMode::sine(64, 256), [](double x) { return std::sin(pi * x); },
                             [](double x) { return std::sin(2 * pi * x); });
    d = show(v);
    return std::abs(v) < 1e-10;
  });

  const SpaceTimeMesh small(4, 8, 2.0);
  const auto dom = ObservationDomain::cylinder(0.25, 0.5);
  const AssemblyOptions opt;
  r.check("zero observation gives zero load", [&](std::string&) {
    const auto sys = assemble_mixed(small, dom, Coefficients::standard(), opt, zero_obs);
    return sys.L1.cwiseAbs().maxCoeff() == 0.0 && sys.L2.cwiseAbs().maxCoeff() == 0.0;
  });
  r.check("zero load gives zero solution", [&](std::string&) {
    const auto sys = assemble_mixed(small, dom, Coefficients::standard(), opt, zero_obs);
    const auto s = solve_saddle(sys);
    return s.y.cwiseAbs().maxCoeff() == 0.0 && s.lambda.cwiseAbs().maxCoeff() == 0.0;
  });
  r.check("stabilized zero load", [&](std::string&) {
    const auto sys = assemble_stabilized(small, dom, Coefficients::standard(), opt, zero_obs);
    const auto s = solve_saddle(sys);
    return s.y.cwiseAbs().maxCoeff() == 0.0 && s.lambda.cwiseAbs().maxCoeff() == 0.0;
  });
  r.check("source zero load", [&](std::string&) {
    const auto sys = assemble_source(small, dom, Coefficients::standard(), opt, zero_obs);
    const auto s = solve_saddle(sys);
    return s.y.cwiseAbs().maxCoeff() == 0.0 && s.f.cwiseAbs().maxCoeff() == 0.0 &&
           s.lambda.cwiseAbs().maxCoeff() == 0.0;
  });
  r.check("lambda_zero A equals mixed A", [&](std::string&) {
    const auto obs = make_observation(FourierSolution::ex1(), 0.0, 0);
    const auto a = assemble_mixed(small, dom, Coefficients::standard(), opt, obs);
    const auto b = assemble_lambda_zero(small, dom, Coefficients::standard(), opt, obs);
    return SpMat(a.A - b.A).norm() == 0.0 && (a.L1 - b.L1).norm() == 0.0;
  });
  r.check("lambda_zero zero load", [&](std::string&) {
    const auto sys = assemble_lambda_zero(small, dom, Coefficients::standard(), opt, zero_obs);
    return solve_saddle(sys).y.cwiseAbs().maxCoeff() == 0.0;
  });
  r.check("dual CG zero load", [&](std::string&) {
    const auto sys = assemble_mixed(small, dom, Coefficients::standard(), opt, zero_obs);
    const auto [s, rep] = solve_dual_cg(sys);
    return rep.iterations == 0 && rep.converged && s.y.cwiseAbs().maxCoeff() == 0.0;
  });
  r.check("dual operator symmetric", [&](std::string& d) {
    const auto sys = assemble_mixed(small, dom, Coefficients::standard(), opt, zero_obs);
    const DualOperator S(sys);
    Vec l(sys.m()), m(sys.m());
    for (int k = 0; k < sys.m(); ++k) {
      l[k] = std::sin(1.0 + 3.0 * k);
      m[k] = std::cos(2.0 + 5.0 * k);
    }
    const double a = l.dot(S.apply(m)), b = m.dot(S.apply(l));
    d = show(std::abs(a - b));
    return std::abs(a - b) <= 1e-9 * std::max(1.0, std::abs(a));
  });
  r.check("condition of identity", [](std::string& d) {
    SpMat I(5, 5);
    I.setIdentity();
    const double k = condition_estimate(I);
    d = show(k);
    return std::abs(k - 1.0) < 1e-12;
  });
  r.check("EX1 initial value at x=0.5", [](std::string& d) {
    const double v = FourierSolution::ex1().eval(0.5, 0.0);
    d = show(v);
    return std::abs(v - 1.0) < 1e-9;
  });
  r.check("EX1 a_2 = 0", [](std::string&) { return FourierSolution::ex1().a(2) == 0.0; });
  r.check("noise-free observation equals exact", [](std::string&) {
    const auto sol = FourierSolution::ex2();
    const auto obs = make_observation(sol, 0.0, 7);
    return obs(0.3, 0.9) == eval_exact(sol, 0.3, 0.9);
  });
  r.check("noise is reproducible", [](std::string&) {
    const auto sol = FourierSolution::ex1();
    const auto a = make_observation(sol, 1e-2, 11), b = make_observation(sol, 1e-2, 11);
    return a(0.41, 1.3) == b(0.41, 1.3);
  });
  r.check("fit_rate linear and quadratic", [](std::string& d) {
    std::vector<std::pair<double, double>> p1, p2;
    for (double h : {0.1, 0.05, 0.025, 0.0125}) {
      p1.emplace_back(h, 3.0 * h);
      p2.emplace_back(h, 3.0 * h * h);
    }
    const double s1 = fit_rate(p1), s2 = fit_rate(p2);
    d = show(s1) + " " + show(s2);
    return std::abs(s1 - 1.0) < 1e-12 && std::abs(s2 - 2.0) < 1e-12;
  });
  r.check("config rejects T=0", [](std::string&) {
    StudyConfig cfg;
    apply_setting(cfg, "T", "0");
    try {
      validate(cfg);
    } catch (const InvalidArgument&) {
      return true;
    }
    return false;
  });
  return r.cases;
}

}  // namespace stw
