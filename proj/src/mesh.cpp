#include "stwave/mesh.hpp"

#include <cmath>
#include <string>

#include "stwave/error.hpp"

namespace stw {

SpaceTimeMesh::SpaceTimeMesh(int nx, int nt, double horizon, double length)
    : nx_(nx), nt_(nt), length_(length), horizon_(horizon) {
  require(nx >= 1, "mesh: nx must be >= 1 (got " + std::to_string(nx) + ")");
  require(nt >= 1, "mesh: nt must be >= 1 (got " + std::to_string(nt) + ")");
  require(horizon > 0.0 && std::isfinite(horizon), "mesh: horizon T must be positive and finite");
  require(length > 0.0 && std::isfinite(length), "mesh: length must be positive and finite");
  dx_ = length_ / nx_;
  dt_ = horizon_ / nt_;
  h_ = std::sqrt(dx_ * dx_ + dt_ * dt_);
}

SpaceTimeMesh build_mesh(int nx, int nt, double horizon) { return SpaceTimeMesh(nx, nt, horizon); }

}  // namespace stw
