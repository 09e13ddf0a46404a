#pragma once

#include <array>
#include <cstddef>

namespace stw {

/// Uniform rectangular mesh of the space-time cylinder (0, length) x (0, horizon).
///
/// Nodes are numbered x-fastest: node(i, j) = i + (nx + 1) * j, where i indexes
/// the spatial abscissa and j the time level. Elements follow the same rule
/// with (nx, nt) in place of (nx + 1, nt + 1).
class SpaceTimeMesh {
 public:
  SpaceTimeMesh(int nx, int nt, double horizon, double length = 1.0);

  int nx() const { return nx_; }
  int nt() const { return nt_; }
  double length() const { return length_; }
  double horizon() const { return horizon_; }
  double dx() const { return dx_; }
  double dt() const { return dt_; }
  /// Element diameter sqrt(dx^2 + dt^2).
  double h() const { return h_; }

  std::size_t num_nodes() const { return static_cast<std::size_t>(nx_ + 1) * (nt_ + 1); }
  std::size_t num_elements() const { return static_cast<std::size_t>(nx_) * nt_; }

  std::size_t node(int i, int j) const { return static_cast<std::size_t>(i) + static_cast<std::size_t>(nx_ + 1) * j; }
  std::size_t element(int i, int j) const { return static_cast<std::size_t>(i) + static_cast<std::size_t>(nx_) * j; }
  /// (i, j) of element e.
  std::array<int, 2> element_ij(std::size_t e) const {
    return {static_cast<int>(e % nx_), static_cast<int>(e / nx_)};
  }

  double x(int i) const { return i * dx_; }
  double t(int j) const { return j * dt_; }

  /// Global node numbers of element (i, j), local order (0,0), (1,0), (0,1), (1,1).
  std::array<std::size_t, 4> element_nodes(int i, int j) const {
    return {node(i, j), node(i + 1, j), node(i, j + 1), node(i + 1, j + 1)};
  }

  bool on_lateral_boundary(int i) const { return i == 0 || i == nx_; }

 private:
  int nx_;
  int nt_;
  double length_;
  double horizon_;
  double dx_;
  double dt_;
  double h_;
};

SpaceTimeMesh build_mesh(int nx, int nt, double horizon);

}  // namespace stw
