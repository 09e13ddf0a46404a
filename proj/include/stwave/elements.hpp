#pragma once

#include <array>
#include <vector>

namespace stw {

/// Gauss-Legendre rule on [0, 1]; weights sum to 1.
struct GaussRule1d {
  std::vector<double> points;
  std::vector<double> weights;
  int size() const { return static_cast<int>(points.size()); }
};

/// n-point Gauss-Legendre rule on [0, 1], 1 <= n <= 64.
GaussRule1d gauss_legendre(int n);

struct QuadPoint2d {
  double xi;
  double tau;
  double weight;
};

/// Tensor rule on the reference square [0, 1]^2 (weights sum to 1).
struct QuadratureRule {
  int order = 0;
  GaussRule1d line;
  std::vector<QuadPoint2d> points;
};

/// Tensor Gauss rule with order^2 points, exact for degree <= 2*order - 1 per variable.
/// Accepts 2 <= order <= 6.
QuadratureRule gauss_rule(int order);

/// Same as gauss_rule without the public range restriction (internal error norms use order + 1).
QuadratureRule tensor_gauss(int order);

/// Values and physical derivatives of one shape function at a point.
struct BfsShape {
  double v = 0, dx = 0, dt = 0, dxx = 0, dtt = 0, dxt = 0;
};

struct Q1Shape {
  double v = 0, dx = 0, dt = 0;
};

/// Local DOF functionals of the Bogner-Fox-Schmit element, per corner.
enum class BfsDof : int { Value = 0, Dx = 1, Dt = 2, Dxt = 3 };

/// Local index of DOF `f` at corner `c` (corners (0,0), (1,0), (0,1), (1,1)).
constexpr int bfs_local(int corner, BfsDof f) { return 4 * corner + static_cast<int>(f); }

/// The 16 BFS shape functions on an element of size dx x dt at reference point (xi, tau).
///
/// Each corner carries (value, d/dx, d/dt, d2/dxdt); the basis is the tensor product of
/// cubic Hermite functions, so derivatives are returned in physical coordinates.
std::array<BfsShape, 16> eval_bfs(double dx, double dt, double xi, double tau);

/// The 4 bilinear shape functions (corner order as for BFS).
std::array<Q1Shape, 4> eval_q1(double dx, double dt, double xi, double tau);

/// Cubic Hermite basis on [0, 1] for an interval of length len: value, first and second
/// derivatives (physical) of H0 (value at 0), H1 (slope at 0), H2 (value at 1), H3 (slope at 1).
struct Hermite1d {
  std::array<double, 4> v, d1, d2;
};
Hermite1d hermite_cubic(double s, double len);

}  // namespace stw
