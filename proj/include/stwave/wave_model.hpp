#pragma once

#include <functional>
#include <string>
#include <vector>

namespace stw {

/// Coefficients of L y = y_tt - (c(x) y_x)_x + d(x, t) y.
struct Coefficients {
  std::function<double(double)> c;
  /// Optional analytic c'(x); central differences are used when empty.
  std::function<double(double)> dc;
  std::function<double(double, double)> d;
  /// Lower bound of c claimed by the caller (validated on a sample grid).
  double c0 = 1.0;
  bool constant_c = true;
  bool zero_d = true;

  static Coefficients standard();
  /// Named built-ins: "one", "zero", a decimal constant, or "file:<path>" with lines "x value"
  /// (piecewise linear on the listed abscissae).
  static Coefficients from_names(const std::string& c_name, const std::string& d_name);

  double c_at(double x) const { return c(x); }
  double dc_at(double x) const;
  double d_at(double x, double t) const { return d(x, t); }

  /// Throws unless c >= c0 > 0 at 1000 uniform samples of [0, 1].
  void validate() const;
};

/// Pointwise traces of a field needed to apply L.
struct FieldTraces {
  double y_tt = 0;
  double y_x = 0;
  double y_xx = 0;
  double y = 0;
};

double apply_L(const Coefficients& coeffs, const FieldTraces& f, double x, double t);

/// Realization of the spatial inner product of X = L2(0, T; H^-1(0, 1)).
struct XInnerMode {
  enum class Kind { L2, SineHminus1 };
  Kind kind = Kind::L2;
  int modes = 64;
  int samples = 256;

  static XInnerMode l2() { return {}; }
  static XInnerMode sine(int modes, int samples) { return {Kind::SineHminus1, modes, samples}; }
  bool is_l2() const { return kind == Kind::L2; }
  std::string name() const { return is_l2() ? "l2" : "hminus1"; }
};

/// Sine coefficients sqrt(2) * int_0^1 f(x) sin(k pi x) dx, k = 1..K, by the composite trapezoid rule
/// on `samples` uniform intervals.
std::vector<double> sine_transform(const std::function<double(double)>& f, int modes, int samples);

/// Spatial inner product of two slices f, g on (0, 1).
///
/// L2: composite Gauss quadrature (order 4 on `samples` cells).
/// SineHminus1: sum_k fk gk / (k pi)^2, so that the H^-1 norm of sin(pi x) squared is 1 / (2 pi^2).
double x_inner(const XInnerMode& mode, const std::function<double(double)>& f,
               const std::function<double(double)>& g);

/// Weight of mode k in the sine realization.
inline double sine_weight(int k) {
  constexpr double pi = 3.141592653589793238462643383279502884;
  return 1.0 / ((k * pi) * (k * pi));
}

/// Exact squared H^-1(0, 1) norm of a function given on a uniform partition with `cells` cells,
/// via the P1 Green's function part plus local bubble corrections (quadrature order `order`).
double hminus1_norm2(const std::function<double(double)>& f, int cells, int order);

}  // namespace stw
