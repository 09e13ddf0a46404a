#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "stwave/mesh.hpp"

namespace stw {

/// Global numbering of nodal degrees of freedom; eliminated entries carry -1.
///
/// per_node is 4 for BFS spaces (value, d/dx, d/dt, d2/dxdt) and 1 for Q1 spaces.
class DofMap {
 public:
  DofMap() = default;
  DofMap(const SpaceTimeMesh& mesh, int per_node, std::vector<int> index);

  int per_node() const { return per_node_; }
  int size() const { return ndofs_; }
  int operator()(std::size_t node, int f = 0) const { return index_[node * per_node_ + f]; }

  /// Local-to-global map of element (i, j): 4 * per_node entries, corner-major.
  template <int N>
  std::array<int, N> element_dofs(int i, int j) const {
    std::array<int, N> out{};
    const auto nodes = mesh_nodes(i, j);
    for (int c = 0; c < 4; ++c)
      for (int f = 0; f < per_node_; ++f) out[c * per_node_ + f] = index_[nodes[c] * per_node_ + f];
    return out;
  }

 private:
  std::array<std::size_t, 4> mesh_nodes(int i, int j) const {
    const std::size_t n0 = static_cast<std::size_t>(i) + static_cast<std::size_t>(nx_ + 1) * j;
    return {n0, n0 + 1, n0 + nx_ + 1, n0 + nx_ + 2};
  }

  int nx_ = 0;
  int per_node_ = 1;
  int ndofs_ = 0;
  std::vector<int> index_;
};

/// Z_h: BFS with y = y_t = 0 on x = 0 and x = 1.
DofMap make_z_dofmap(const SpaceTimeMesh& mesh);

/// Stabilized multiplier space: Z_h constraints plus all four functionals at t = 0
/// (lambda(., 0) = 0 forces lambda_x = 0 there, lambda_t(., 0) = 0 forces lambda_xt = 0).
DofMap make_lambda_tilde_dofmap(const SpaceTimeMesh& mesh);

/// Lambda_h: Q1 on nodes with 0 < x < 1.
DofMap make_lambda_dofmap(const SpaceTimeMesh& mesh);

/// F_h: Q1 on every node.
DofMap make_source_dofmap(const SpaceTimeMesh& mesh);

}  // namespace stw
