#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <random>

#include "stwave/error.hpp"
#include "stwave/oracle.hpp"

using namespace stw;
constexpr double pi = std::numbers::pi;
constexpr double sqrt2 = std::numbers::sqrt2;

namespace {

double ex1_a(int k) { return 32 * sqrt2 * (pi * pi * k * k - 12) / std::pow(pi * k, 5) * ((k % 2 ? -1.0 : 1.0) - 1.0); }
double ex1_b(int k) { return 48 * sqrt2 * std::sin(pi * k / 2) / std::pow(pi * k, 4); }
double ex2_a(int k) { return 4 * sqrt2 * std::sin(pi * k / 2) / (pi * pi * k * k); }
double ex2_b(int k) { return (std::cos(pi * k / 3) - std::cos(2 * pi * k / 3)) / (pi * k); }

// ||y||^2 over Q_T for T a positive integer: the sqrt(2) sin modes are orthonormal and
// int_0^T cos^2 = int_0^T sin^2 = T/2, int_0^T cos sin = 0
double exact_QT2(double (*a)(int), double (*b)(int), int K, double T, double scale) {
  double s = 0.0;
  for (int k = 1; k <= K; ++k) {
    const double c = b(k) / (k * pi);
    s += 0.5 * T * (a(k) * a(k) + c * c);
  }
  return scale * scale * s;
}

// ||y||^2 over (x0, x1) x (0, T) by composite 5-point Gauss, separable series evaluation
double strip2(double (*a)(int), double (*b)(int), int K, double x0, double x1, double T, double scale) {
  const double gx[5] = {0.046910077030668, 0.230765344947158, 0.5, 0.769234655052842, 0.953089922969332};
  const double gw[5] = {0.118463442528095, 0.239314335249683, 0.284444444444444, 0.239314335249683,
                        0.118463442528095};
  const int cx = 40, ct = 160;
  std::vector<double> xs, wx, ts, wt;
  for (int i = 0; i < cx; ++i)
    for (int q = 0; q < 5; ++q) {
      xs.push_back(x0 + (i + gx[q]) * (x1 - x0) / cx);
      wx.push_back(gw[q] * (x1 - x0) / cx);
    }
  for (int j = 0; j < ct; ++j)
    for (int q = 0; q < 5; ++q) {
      ts.push_back((j + gx[q]) * T / ct);
      wt.push_back(gw[q] * T / ct);
    }
  std::vector<double> X(xs.size() * K), Tt(ts.size() * K);
  for (std::size_t p = 0; p < xs.size(); ++p)
    for (int k = 1; k <= K; ++k) X[p * K + k - 1] = sqrt2 * std::sin(k * pi * xs[p]);
  for (std::size_t p = 0; p < ts.size(); ++p)
    for (int k = 1; k <= K; ++k)
      Tt[p * K + k - 1] = a(k) * std::cos(k * pi * ts[p]) + b(k) / (k * pi) * std::sin(k * pi * ts[p]);
  double s = 0.0;
  for (std::size_t p = 0; p < xs.size(); ++p)
    for (std::size_t q = 0; q < ts.size(); ++q) {
      double y = 0.0;
      for (int k = 0; k < K; ++k) y += X[p * K + k] * Tt[q * K + k];
      s += wx[p] * wt[q] * y * y;
    }
  return scale * scale * s;
}

}  // namespace

TEST_CASE("EX1 coefficients follow the closed forms") {
  const auto s = FourierSolution::ex1();
  CHECK(s.a(2) == 0.0);
  CHECK(s.a(1) == doctest::Approx(-64 * sqrt2 * (pi * pi - 12) / std::pow(pi, 5)).epsilon(1e-14));
  CHECK(s.a(1) == doctest::Approx(0.6301).epsilon(1e-4));
  for (int k = 1; k <= 60; ++k) {
    CHECK(s.a(k) == doctest::Approx(ex1_a(k)).epsilon(1e-13).scale(1e-20));
    CHECK(s.b(k) == doctest::Approx(ex1_b(k)).epsilon(1e-13).scale(1e-20));
  }
}

TEST_CASE("EX2 coefficients follow the closed forms") {
  const auto s = FourierSolution::ex2();
  for (int k = 1; k <= 60; ++k) {
    CHECK(s.a(k) == doctest::Approx(ex2_a(k)).epsilon(1e-13).scale(1e-20));
    CHECK(s.b(k) == doctest::Approx(ex2_b(k)).epsilon(1e-13).scale(1e-20));
  }
}

TEST_CASE("EX1 initial data") {
  const auto s = FourierSolution::ex1();
  CHECK(eval_exact(s, 0.5, 0.0) == doctest::Approx(1.0).epsilon(1e-9));
  for (double x : {0.1, 0.27, 0.5, 0.83}) {
    const double y0 = 16 * x * x * (1 - x) * (1 - x);
    CHECK(std::abs(eval_exact(s, x, 0.0) - y0) < 1e-9);
  }
  CHECK(s.tail_bound() <= 1e-10);
}

TEST_CASE("EX2 initial data is the hat function in the unit sine basis") {
  const auto s = FourierSolution::ex2();
  CHECK(s.scale() == doctest::Approx(1.0 / sqrt2).epsilon(1e-15));
  for (double x : {0.1, 0.3, 0.61, 0.9}) CHECK(std::abs(sqrt2 * eval_exact(s, x, 0.0) - (1 - std::abs(2 * x - 1))) < 1e-3);
  CHECK(s.tail_bound() <= 1e-6 / sqrt2 * 1.0001);
}

TEST_CASE("truncated series satisfy the wave equation") {
  std::mt19937 rng(21);
  std::uniform_real_distribution<double> ux(0.0, 1.0), ut(0.0, 2.0);
  for (const auto& s : {FourierSolution::ex1(), FourierSolution::ex2()}) {
    for (int n = 0; n < 100; ++n) {
      const double x = ux(rng), t = ut(rng);
      const auto tr = s.eval_traces(x, t);
      CHECK(std::abs(tr.ytt - tr.yxx) <= 10 * s.tail_bound());
      CHECK(tr.y == doctest::Approx(s.eval(x, t)).epsilon(1e-12).scale(1e-12));
    }
  }
}

TEST_CASE("EX1 time reversal parts") {
  const auto s = FourierSolution::ex1();
  std::mt19937 rng(4);
  std::uniform_real_distribution<double> ux(0.0, 1.0), ut(0.0, 2.0);
  for (int n = 0; n < 10; ++n) {
    const double x = ux(rng), t = ut(rng);
    double even = 0.0, odd = 0.0;
    for (int k = 1; k <= 20000; ++k) {
      even += ex1_a(k) * std::cos(k * pi * t) * sqrt2 * std::sin(k * pi * x);
      odd += ex1_b(k) / (k * pi) * std::sin(k * pi * t) * sqrt2 * std::sin(k * pi * x);
    }
    CHECK(0.5 * (s.eval(x, t) + s.eval(x, -t)) == doctest::Approx(even).epsilon(1e-7).scale(1e-7));
    CHECK(0.5 * (s.eval(x, t) - s.eval(x, -t)) == doctest::Approx(odd).epsilon(1e-7).scale(1e-7));
  }
}

TEST_CASE("grid evaluation matches pointwise evaluation") {
  const auto s = FourierSolution::ex2();
  const std::vector<double> xs{0.05, 0.2, 0.71}, ts{0.0, 0.33, 1.9};
  const auto g = s.eval_grid(xs, ts);
  for (std::size_t j = 0; j < ts.size(); ++j)
    for (std::size_t i = 0; i < xs.size(); ++i)
      CHECK(g[j * xs.size() + i] == doctest::Approx(s.eval(xs[i], ts[j])).epsilon(1e-12).scale(1e-12));
}

TEST_CASE("reference norms on Q_T") {
  for (double T : {1.0, 2.0}) {
    const SpaceTimeMesh m(40, static_cast<int>(40 * T), T);
    const auto d = ObservationDomain::cylinder(0.1, 0.3);
    const auto n1 = norms_reference(FourierSolution::ex1(), m, d);
    CHECK(n1.first == doctest::Approx(std::sqrt(exact_QT2(ex1_a, ex1_b, 3100, T, 1.0))).epsilon(1e-6));
    const auto n2 = norms_reference(FourierSolution::ex2(), m, d);
    CHECK(n2.first == doctest::Approx(std::sqrt(exact_QT2(ex2_a, ex2_b, 2000, T, 1 / sqrt2))).epsilon(1e-4));
  }
}

TEST_CASE("reference norms on the observed strip") {
  const double T = 2.0;
  const SpaceTimeMesh m(20, 40, T);
  const auto d = ObservationDomain::cylinder(0.1, 0.3);
  const auto n1 = norms_reference(FourierSolution::ex1(), m, d);
  CHECK(n1.second == doctest::Approx(std::sqrt(strip2(ex1_a, ex1_b, 600, 0.1, 0.3, T, 1.0))).epsilon(1e-6));
}

TEST_CASE("observation synthesis") {
  const auto s = FourierSolution::ex1();
  const auto clean = make_observation(s, 0.0, 5);
  CHECK(clean(0.3, 0.9) == eval_exact(s, 0.3, 0.9));
  const auto a = make_observation(s, 1e-2, 11), b = make_observation(s, 1e-2, 11), c = make_observation(s, 1e-2, 12);
  CHECK(a(0.41, 1.3) == b(0.41, 1.3));
  CHECK(a(0.41, 1.3) != c(0.41, 1.3));
  double mean = 0.0;
  const int n = 20000;
  for (int k = 0; k < n; ++k) {
    const double u = noise_sample(7, k * 1e-4, 0.5);
    CHECK(u > -1.0);
    CHECK(u < 1.0);
    mean += u / n;
  }
  CHECK(std::abs(mean) < 0.03);
  CHECK(std::abs(a(0.41, 1.3) - eval_exact(s, 0.41, 1.3)) <= 1e-2);
}

TEST_CASE("observation from CSV") {
  const std::string path = "oracle_obs_test.csv";
  {
    std::ofstream f(path);
    f << "x,t,value\n0.1,0.0,1.5\n0.5,0.5,-2\n0.9,1.0,3\n";
  }
  const auto obs = load_observation_csv(path);
  CHECK(obs(0.12, 0.01) == 1.5);
  CHECK(obs(0.55, 0.45) == -2.0);
  CHECK(obs(1.0, 1.0) == 3.0);
  std::remove(path.c_str());
  CHECK_THROWS_AS(load_observation_csv("does/not/exist.csv"), IoError);
  {
    std::ofstream f(path);
    f << "a,b,c\n1,2,3\n";
  }
  CHECK_THROWS_AS(load_observation_csv(path), InvalidArgument);
  std::remove(path.c_str());
}

TEST_CASE("example names") {
  CHECK(example_from_string("EX1") == Example::EX1);
  CHECK(example_from_string("EX2") == Example::EX2);
  CHECK_THROWS_AS(example_from_string("EX3"), InvalidArgument);
}
