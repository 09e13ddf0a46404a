#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "stwave/assembly.hpp"
#include "stwave/mesh.hpp"
#include "stwave/observation.hpp"

namespace stw {

enum class Example { EX1, EX2 };

std::string to_string(Example e);
Example example_from_string(const std::string& s);

/// y(x, t) = scale * sum_k (a_k cos(k pi t) + b_k / (k pi) sin(k pi t)) sqrt(2) sin(k pi x).
class FourierSolution {
 public:
  using Generator = std::pair<double, double> (*)(int k);

  FourierSolution(std::vector<double> a, std::vector<double> b, double scale = 1.0, Generator gen = nullptr);

  /// Truncated where every dropped mode satisfies |a_k| + |b_k| / (k pi) <= 1e-10 (a_k decays like k^-3).
  static FourierSolution ex1(int kmax = 3100);
  static FourierSolution ex2(int kmax = 2000);
  static FourierSolution make(Example e);

  int kmax() const { return static_cast<int>(a_.size()); }
  double a(int k) const { return a_[k - 1]; }
  double b(int k) const { return b_[k - 1]; }
  double scale() const { return scale_; }
  /// max over dropped modes of scale * (|a_k| + |b_k| / (k pi)); checked over k in (kmax, 4 kmax]
  /// when the coefficients come from a closed form, otherwise estimated from the last mode.
  double tail_bound() const;

  double eval(double x, double t) const;
  /// y, y_x, y_xx, y_t, y_tt by term-wise differentiation.
  struct Traces {
    double y, yx, yxx, yt, ytt;
  };
  Traces eval_traces(double x, double t) const;

  /// Values on the tensor grid xs x ts, row-major with x fastest.
  std::vector<double> eval_grid(const std::vector<double>& xs, const std::vector<double>& ts) const;

 private:
  std::vector<double> a_;
  std::vector<double> b_;
  double scale_;
  Generator gen_;
};

double eval_exact(const FourierSolution& sol, double x, double t);

/// (||y||_{L2(Q_T)}, ||y||_{L2(q_T)}) by element quadrature on `mesh`.
std::pair<double, double> norms_reference(const FourierSolution& sol, const SpaceTimeMesh& mesh,
                                          const ObservationDomain& domain, int order = 5, int cut_depth = 4);

/// Deterministic uniform(-1, 1) value attached to (seed, x, t).
double noise_sample(std::uint64_t seed, double x, double t);

/// y(x, t) + amplitude * u(x, t); the noise field is a pure function of (seed, x, t).
ObservationFn make_observation(const FourierSolution& sol, double noise_amplitude, std::uint64_t seed);

/// Observation read from a CSV file with header x,t,value; nearest-sample lookup.
ObservationFn load_observation_csv(const std::string& path);

}  // namespace stw
