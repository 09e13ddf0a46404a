#include "stwave/dofmap.hpp"


namespace stw {

namespace {

template <class Keep>
DofMap number(const SpaceTimeMesh& mesh, int per_node, Keep keep) {
  std::vector<int> index(mesh.num_nodes() * per_node, -1);
  int next = 0;
  for (int j = 0; j <= mesh.nt(); ++j)
    for (int i = 0; i <= mesh.nx(); ++i)
      for (int f = 0; f < per_node; ++f)
        if (keep(i, j, f)) index[mesh.node(i, j) * per_node + f] = next++;
  return DofMap(mesh, per_node, std::move(index));
}

// value and d/dt vanish on the lateral boundary
bool lateral_free(const SpaceTimeMesh& mesh, int i, int f) { return !(mesh.on_lateral_boundary(i) && (f == 0 || f == 2)); }

}  // namespace

DofMap::DofMap(const SpaceTimeMesh& mesh, int per_node, std::vector<int> index)
    : nx_(mesh.nx()), per_node_(per_node), index_(std::move(index)) {
  for (int v : index_)
    if (v >= 0) ++ndofs_;
}

DofMap make_z_dofmap(const SpaceTimeMesh& mesh) {
  return number(mesh, 4, [&](int i, int, int f) { return lateral_free(mesh, i, f); });
}

DofMap make_lambda_tilde_dofmap(const SpaceTimeMesh& mesh) {
  return number(mesh, 4, [&](int i, int j, int f) { return j > 0 && lateral_free(mesh, i, f); });
}

DofMap make_lambda_dofmap(const SpaceTimeMesh& mesh) {
  return number(mesh, 1, [&](int i, int, int) { return !mesh.on_lateral_boundary(i); });
}

DofMap make_source_dofmap(const SpaceTimeMesh& mesh) {
  return number(mesh, 1, [](int, int, int) { return true; });
}

}  // namespace stw
