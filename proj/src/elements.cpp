#include "stwave/elements.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "stwave/error.hpp"

namespace stw {

GaussRule1d gauss_legendre(int n) {
  require(n >= 1 && n <= 64, "gauss_legendre: n must be in [1, 64]");
  GaussRule1d rule;
  rule.points.resize(n);
  rule.weights.resize(n);
  // Newton iteration on P_n starting from the Chebyshev-like guess; roots on [-1, 1].
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int k = 1; k <= n; ++k) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p2) / k;
      }
      dp = n * (z * p0 - p1) / (z * z - 1.0);
      const double dz = p0 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    if (n == 1) dp = 1.0;
    const double w = (n == 1) ? 2.0 : 2.0 / ((1.0 - z * z) * dp * dp);
    // map to [0, 1]
    rule.points[i] = 0.5 * (1.0 - z);
    rule.points[n - 1 - i] = 0.5 * (1.0 + z);
    rule.weights[i] = 0.5 * w;
    rule.weights[n - 1 - i] = 0.5 * w;
  }
  if (n % 2 == 1) rule.points[n / 2] = 0.5;
  return rule;
}

QuadratureRule tensor_gauss(int order) {
  QuadratureRule q;
  q.order = order;
  q.line = gauss_legendre(order);
  q.points.reserve(static_cast<std::size_t>(order) * order);
  for (int b = 0; b < order; ++b)
    for (int a = 0; a < order; ++a)
      q.points.push_back({q.line.points[a], q.line.points[b], q.line.weights[a] * q.line.weights[b]});
  return q;
}

QuadratureRule gauss_rule(int order) {
  require(order >= 2 && order <= 6, "gauss_rule: order must be in [2, 6] (got " + std::to_string(order) + ")");
  return tensor_gauss(order);
}

Hermite1d hermite_cubic(double s, double len) {
  const double s2 = s * s, s3 = s2 * s;
  const double il = 1.0 / len, il2 = il * il;
  Hermite1d h;
  h.v = {1.0 - 3.0 * s2 + 2.0 * s3, len * (s - 2.0 * s2 + s3), 3.0 * s2 - 2.0 * s3, len * (-s2 + s3)};
  h.d1 = {(-6.0 * s + 6.0 * s2) * il, 1.0 - 4.0 * s + 3.0 * s2, (6.0 * s - 6.0 * s2) * il, -2.0 * s + 3.0 * s2};
  h.d2 = {(-6.0 + 12.0 * s) * il2, (-4.0 + 6.0 * s) * il, (6.0 - 12.0 * s) * il2, (-2.0 + 6.0 * s) * il};
  return h;
}

std::array<BfsShape, 16> eval_bfs(double dx, double dt, double xi, double tau) {
  const Hermite1d hx = hermite_cubic(xi, dx);
  const Hermite1d ht = hermite_cubic(tau, dt);
  std::array<BfsShape, 16> out{};
  for (int c = 0; c < 4; ++c) {
    const int a = c & 1;         // x corner
    const int b = (c >> 1) & 1;  // t corner
    for (int f = 0; f < 4; ++f) {
      const int ix = 2 * a + ((f == 1 || f == 3) ? 1 : 0);
      const int it = 2 * b + ((f == 2 || f == 3) ? 1 : 0);
      BfsShape& s = out[4 * c + f];
      s.v = hx.v[ix] * ht.v[it];
      s.dx = hx.d1[ix] * ht.v[it];
      s.dt = hx.v[ix] * ht.d1[it];
      s.dxx = hx.d2[ix] * ht.v[it];
      s.dtt = hx.v[ix] * ht.d2[it];
      s.dxt = hx.d1[ix] * ht.d1[it];
    }
  }
  return out;
}

std::array<Q1Shape, 4> eval_q1(double dx, double dt, double xi, double tau) {
  const double lx[2] = {1.0 - xi, xi};
  const double lt[2] = {1.0 - tau, tau};
  const double gx[2] = {-1.0 / dx, 1.0 / dx};
  const double gt[2] = {-1.0 / dt, 1.0 / dt};
  std::array<Q1Shape, 4> out{};
  for (int c = 0; c < 4; ++c) {
    const int a = c & 1, b = (c >> 1) & 1;
    out[c] = {lx[a] * lt[b], gx[a] * lt[b], lx[a] * gt[b]};
  }
  return out;
}

}  // namespace stw
