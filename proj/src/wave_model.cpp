#include "stwave/wave_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <memory>
#include <numbers>
#include <sstream>

#include "stwave/elements.hpp"
#include "stwave/error.hpp"

namespace stw {

namespace {

constexpr double kFdStep = 1e-6;

bool parse_number(const std::string& s, double& v) {
  std::istringstream is(s);
  is >> v;
  return !is.fail() && is.eof();
}

struct Table {
  std::vector<double> x, v;
  double operator()(double s) const {
    if (s <= x.front()) return v.front();
    if (s >= x.back()) return v.back();
    const auto it = std::upper_bound(x.begin(), x.end(), s);
    const std::size_t k = static_cast<std::size_t>(it - x.begin());
    const double w = (s - x[k - 1]) / (x[k] - x[k - 1]);
    return (1.0 - w) * v[k - 1] + w * v[k];
  }
};

std::shared_ptr<Table> load_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("coefficient file not readable: " + path);
  auto tab = std::make_shared<Table>();
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    double a, b;
    if (!(ls >> a >> b)) throw InvalidArgument("coefficient file: bad line '" + line + "'");
    if (!tab->x.empty() && a <= tab->x.back()) throw InvalidArgument("coefficient file: abscissae must increase");
    tab->x.push_back(a);
    tab->v.push_back(b);
  }
  require(tab->x.size() >= 2, "coefficient file needs at least two samples: " + path);
  return tab;
}

}  // namespace

Coefficients Coefficients::standard() {
  Coefficients k;
  k.c = [](double) { return 1.0; };
  k.dc = [](double) { return 0.0; };
  k.d = [](double, double) { return 0.0; };
  return k;
}

Coefficients Coefficients::from_names(const std::string& c_name, const std::string& d_name) {
  Coefficients k = standard();
  double v = 0.0;
  if (c_name == "one") {
  } else if (c_name == "zero") {
    throw InvalidArgument("coeff.c must be positive; 'zero' is not allowed");
  } else if (parse_number(c_name, v)) {
    require(v > 0.0, "coeff.c constant must be positive");
    k.c = [v](double) { return v; };
    k.c0 = v;
  } else if (c_name.rfind("file:", 0) == 0) {
    auto tab = load_table(c_name.substr(5));
    k.c = [tab](double x) { return (*tab)(x); };
    k.dc = nullptr;
    k.constant_c = false;
    k.c0 = *std::min_element(tab->v.begin(), tab->v.end());
  } else {
    throw InvalidArgument("unknown coefficient c: '" + c_name + "'");
  }

  if (d_name == "zero") {
  } else if (d_name == "one") {
    k.d = [](double, double) { return 1.0; };
    k.zero_d = false;
  } else if (parse_number(d_name, v)) {
    k.d = [v](double, double) { return v; };
    k.zero_d = (v == 0.0);
  } else {
    throw InvalidArgument("unknown coefficient d: '" + d_name + "'");
  }
  k.validate();
  return k;
}

double Coefficients::dc_at(double x) const {
  if (dc) return dc(x);
  return (c(x + kFdStep) - c(x - kFdStep)) / (2.0 * kFdStep);
}

void Coefficients::validate() const {
  require(static_cast<bool>(c) && static_cast<bool>(d), "coefficients: c and d must be set");
  require(c0 > 0.0, "coefficients: c0 must be positive");
  for (int i = 0; i < 1000; ++i) {
    const double x = i / 999.0;
    if (!(c(x) >= c0)) throw InvalidArgument("coefficients: c(x) < c0 at x = " + std::to_string(x));
  }
}

double apply_L(const Coefficients& coeffs, const FieldTraces& f, double x, double t) {
  return f.y_tt - coeffs.dc_at(x) * f.y_x - coeffs.c_at(x) * f.y_xx + coeffs.d_at(x, t) * f.y;
}

std::vector<double> sine_transform(const std::function<double(double)>& f, int modes, int samples) {
  require(modes >= 1 && samples >= 2, "sine_transform: need modes >= 1 and samples >= 2");
  require(2 * modes <= samples, "sine_transform: modes must not exceed samples / 2");
  std::vector<double> fx(samples + 1);
  for (int m = 0; m <= samples; ++m) fx[m] = f(static_cast<double>(m) / samples);
  std::vector<double> out(modes);
  const double h = 1.0 / samples;
  for (int k = 1; k <= modes; ++k) {
    // end samples carry sin(0) = sin(k pi) = 0
    double s = 0.0;
    for (int m = 1; m < samples; ++m) s += fx[m] * std::sin(k * std::numbers::pi * m * h);
    out[k - 1] = std::numbers::sqrt2 * h * s;
  }
  return out;
}

double x_inner(const XInnerMode& mode, const std::function<double(double)>& f,
               const std::function<double(double)>& g) {
  require(mode.samples >= 1, "x_inner: samples must be positive");
  if (mode.is_l2()) {
    const GaussRule1d r = gauss_legendre(4);
    const double h = 1.0 / mode.samples;
    double s = 0.0;
    for (int c = 0; c < mode.samples; ++c)
      for (int q = 0; q < r.size(); ++q) {
        const double x = (c + r.points[q]) * h;
        s += r.weights[q] * h * f(x) * g(x);
      }
    return s;
  }
  require(mode.modes >= 1, "x_inner: modes must be positive");
  require(2 * mode.modes <= mode.samples, "x_inner: modes K must satisfy K <= samples / 2");
  const auto fh = sine_transform(f, mode.modes, mode.samples);
  const auto gh = sine_transform(g, mode.modes, mode.samples);
  double s = 0.0;
  for (int k = 1; k <= mode.modes; ++k) s += fh[k - 1] * gh[k - 1] * sine_weight(k);
  return s;
}

double hminus1_norm2(const std::function<double(double)>& f, int cells, int order) {
  require(cells >= 1 && order >= 1, "hminus1_norm2: need cells >= 1 and order >= 1");
  const GaussRule1d r = gauss_legendre(order);
  const double h = 1.0 / cells;
  // load against interior hat functions
  std::vector<double> g(cells + 1, 0.0);
  double bubble = 0.0;
  for (int e = 0; e < cells; ++e) {
    const double x0 = e * h;
    std::vector<double> F(r.size());
    double Fbar = 0.0;
    for (int p = 0; p < r.size(); ++p) {
      const double s = r.points[p];
      const double fx = f(x0 + s * h);
      g[e] += r.weights[p] * h * fx * (1.0 - s);
      g[e + 1] += r.weights[p] * h * fx * s;
      double acc = 0.0;
      for (int k = 0; k < r.size(); ++k) acc += r.weights[k] * f(x0 + s * h * r.points[k]);
      F[p] = s * h * acc;
      Fbar += r.weights[p] * F[p];
    }
    for (int p = 0; p < r.size(); ++p) bubble += r.weights[p] * h * (F[p] - Fbar) * (F[p] - Fbar);
  }
  const int n = cells - 1;
  if (n <= 0) return bubble;
  // Thomas algorithm for the P1 stiffness tridiag(-1, 2, -1) / h
  std::vector<double> diag(n, 2.0 / h), rhs(g.begin() + 1, g.begin() + cells);
  const std::vector<double> rhs0 = rhs;
  for (int i = 1; i < n; ++i) {
    const double m = (-1.0 / h) / diag[i - 1];
    diag[i] -= m * (-1.0 / h);
    rhs[i] -= m * rhs[i - 1];
  }
  std::vector<double> w(n);
  w[n - 1] = rhs[n - 1] / diag[n - 1];
  for (int i = n - 2; i >= 0; --i) w[i] = (rhs[i] + w[i + 1] / h) / diag[i];
  double gw = 0.0;
  for (int i = 0; i < n; ++i) gw += rhs0[i] * w[i];
  return gw + bubble;
}

}  // namespace stw
