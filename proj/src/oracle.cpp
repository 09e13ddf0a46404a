#include "stwave/oracle.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <memory>
#include <numbers>
#include <sstream>
#include <tuple>

#include "stwave/error.hpp"

namespace stw {

namespace {

constexpr double pi = std::numbers::pi;

std::uint64_t splitmix(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

std::string to_string(Example e) { return e == Example::EX1 ? "EX1" : "EX2"; }

Example example_from_string(const std::string& s) {
  if (s == "EX1" || s == "ex1") return Example::EX1;
  if (s == "EX2" || s == "ex2") return Example::EX2;
  throw InvalidArgument("unknown example '" + s + "' (expected EX1 or EX2)");
}

FourierSolution::FourierSolution(std::vector<double> a, std::vector<double> b, double scale, Generator gen)
    : a_(std::move(a)), b_(std::move(b)), scale_(scale), gen_(gen) {
  require(!a_.empty() && a_.size() == b_.size(), "Fourier solution: coefficient lists must match and be nonempty");
}

namespace {

std::pair<double, double> ex1_coeff(int k) {
  const double kk = k;
  const double sgn = (k % 2 == 0) ? 1.0 : -1.0;
  return {32.0 * std::numbers::sqrt2 * (pi * pi * kk * kk - 12.0) / std::pow(pi * kk, 5) * (sgn - 1.0),
          48.0 * std::numbers::sqrt2 * std::sin(pi * kk / 2.0) / std::pow(pi * kk, 4)};
}

std::pair<double, double> ex2_coeff(int k) {
  const double kk = k;
  return {4.0 * std::numbers::sqrt2 / (pi * pi * kk * kk) * std::sin(pi * kk / 2.0),
          (std::cos(pi * kk / 3.0) - std::cos(2.0 * pi * kk / 3.0)) / (pi * kk)};
}

FourierSolution from_generator(FourierSolution::Generator gen, int kmax, double scale) {
  require(kmax >= 1, "kmax must be positive");
  std::vector<double> a(kmax), b(kmax);
  for (int k = 1; k <= kmax; ++k) std::tie(a[k - 1], b[k - 1]) = gen(k);
  return FourierSolution(std::move(a), std::move(b), scale, gen);
}

}  // namespace

FourierSolution FourierSolution::ex1(int kmax) { return from_generator(ex1_coeff, kmax, 1.0); }

// unit sine basis: the sqrt(2) sin(k pi x) modes are rescaled by 1/sqrt(2)
FourierSolution FourierSolution::ex2(int kmax) { return from_generator(ex2_coeff, kmax, 1.0 / std::numbers::sqrt2); }

FourierSolution FourierSolution::make(Example e) { return e == Example::EX1 ? ex1() : ex2(); }

double FourierSolution::tail_bound() const {
  const int K = kmax();
  double m = 0.0;
  if (gen_) {
    for (int k = K + 1; k <= 4 * K; ++k) {
      const auto [a, b] = gen_(k);
      m = std::max(m, std::abs(a) + std::abs(b) / (k * pi));
    }
  } else {
    for (int k = std::max(1, K - 1); k <= K; ++k) m = std::max(m, std::abs(a_[k - 1]) + std::abs(b_[k - 1]) / (k * pi));
  }
  return scale_ * m;
}

double FourierSolution::eval(double x, double t) const { return eval_traces(x, t).y; }

FourierSolution::Traces FourierSolution::eval_traces(double x, double t) const {
  Traces out{0, 0, 0, 0, 0};
  const double sx1 = std::sin(pi * x), cx1 = std::cos(pi * x);
  const double st1 = std::sin(pi * t), ct1 = std::cos(pi * t);
  double sx = sx1, cx = cx1, st = st1, ct = ct1;
  for (int k = 1; k <= kmax(); ++k) {
    const double w = k * pi;
    const double ak = a_[k - 1], bk = b_[k - 1] / w;
    const double T = ak * ct + bk * st;
    const double Tt = w * (-ak * st + bk * ct);
    out.y += T * sx;
    out.yx += T * w * cx;
    out.yxx -= T * w * w * sx;
    out.yt += Tt * sx;
    out.ytt -= w * w * T * sx;
    // angle addition for the next mode
    const double sxn = sx * cx1 + cx * sx1, cxn = cx * cx1 - sx * sx1;
    const double stn = st * ct1 + ct * st1, ctn = ct * ct1 - st * st1;
    sx = sxn;
    cx = cxn;
    st = stn;
    ct = ctn;
  }
  const double s = scale_ * std::numbers::sqrt2;
  out.y *= s;
  out.yx *= s;
  out.yxx *= s;
  out.yt *= s;
  out.ytt *= s;
  return out;
}

std::vector<double> FourierSolution::eval_grid(const std::vector<double>& xs, const std::vector<double>& ts) const {
  const int K = kmax();
  Eigen::MatrixXd S(K, xs.size()), C(K, ts.size());
  for (std::size_t p = 0; p < xs.size(); ++p)
    for (int k = 1; k <= K; ++k) S(k - 1, p) = std::sin(k * pi * xs[p]);
  for (std::size_t q = 0; q < ts.size(); ++q)
    for (int k = 1; k <= K; ++k)
      C(k - 1, q) = a_[k - 1] * std::cos(k * pi * ts[q]) + b_[k - 1] / (k * pi) * std::sin(k * pi * ts[q]);
  const Eigen::MatrixXd Y = S.transpose() * C;  // xs x ts
  std::vector<double> out(xs.size() * ts.size());
  const double s = scale_ * std::numbers::sqrt2;
  for (std::size_t q = 0; q < ts.size(); ++q)
    for (std::size_t p = 0; p < xs.size(); ++p) out[q * xs.size() + p] = s * Y(p, q);
  return out;
}

double eval_exact(const FourierSolution& sol, double x, double t) { return sol.eval(x, t); }

std::pair<double, double> norms_reference(const FourierSolution& sol, const SpaceTimeMesh& mesh,
                                          const ObservationDomain& domain, int order, int cut_depth) {
  const QuadratureRule rule = tensor_gauss(order);
  std::vector<double> xs, ts;
  for (int i = 0; i < mesh.nx(); ++i)
    for (int a = 0; a < order; ++a) xs.push_back(mesh.x(i) + rule.line.points[a] * mesh.dx());
  for (int j = 0; j < mesh.nt(); ++j)
    for (int b = 0; b < order; ++b) ts.push_back(mesh.t(j) + rule.line.points[b] * mesh.dt());
  const auto grid = sol.eval_grid(xs, ts);
  double nQ = 0.0;
  for (std::size_t q = 0; q < ts.size(); ++q) {
    const double wt = rule.line.weights[q % order] * mesh.dt();
    for (std::size_t p = 0; p < xs.size(); ++p) {
      const double v = grid[q * xs.size() + p];
      nQ += wt * rule.line.weights[p % order] * mesh.dx() * v * v;
    }
  }
  double nq = 0.0;
  for (std::size_t e = 0; e < mesh.num_elements(); ++e)
    for (const auto& op : indicator_weights(domain, mesh, e, rule, cut_depth)) {
      const double v = sol.eval(op.x, op.t);
      nq += op.weight * v * v;
    }
  return {std::sqrt(nQ), std::sqrt(nq)};
}

double noise_sample(std::uint64_t seed, double x, double t) {
  std::uint64_t h = splitmix(seed);
  h = splitmix(h ^ std::bit_cast<std::uint64_t>(x));
  h = splitmix(h ^ std::rotl(std::bit_cast<std::uint64_t>(t), 17));
  // 53 random bits mapped to [-1, 1)
  return static_cast<double>(h >> 11) * 0x1.0p-52 - 1.0;
}

ObservationFn make_observation(const FourierSolution& sol, double noise_amplitude, std::uint64_t seed) {
  require(noise_amplitude >= 0.0 && std::isfinite(noise_amplitude), "noise amplitude must be nonnegative");
  auto s = std::make_shared<FourierSolution>(sol);
  if (noise_amplitude == 0.0) return [s](double x, double t) { return s->eval(x, t); };
  return [s, noise_amplitude, seed](double x, double t) {
    return s->eval(x, t) + noise_amplitude * noise_sample(seed, x, t);
  };
}

ObservationFn load_observation_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open observation file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw InvalidArgument("observation file is empty: " + path);
  line.erase(std::remove_if(line.begin(), line.end(), ::isspace), line.end());
  if (line != "x,t,value") throw InvalidArgument("observation file must start with header x,t,value");
  struct Sample {
    double x, t, v;
  };
  auto pts = std::make_shared<std::vector<Sample>>();
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ls(line);
    Sample s;
    if (!(ls >> s.x >> s.t >> s.v)) throw InvalidArgument("observation file: bad row '" + line + "'");
    pts->push_back(s);
  }
  require(!pts->empty(), "observation file has no samples");
  return [pts](double x, double t) {
    double best = 1e300, v = 0.0;
    for (const auto& s : *pts) {
      const double d = (s.x - x) * (s.x - x) + (s.t - t) * (s.t - t);
      if (d < best) {
        best = d;
        v = s.v;
      }
    }
    return v;
  };
}

}  // namespace stw
