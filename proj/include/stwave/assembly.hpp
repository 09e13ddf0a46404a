#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "stwave/dofmap.hpp"
#include "stwave/elements.hpp"
#include "stwave/mesh.hpp"
#include "stwave/observation.hpp"
#include "stwave/wave_model.hpp"

namespace stw {

using SpMat = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;
using Vec = Eigen::VectorXd;
using ObservationFn = std::function<double(double, double)>;

enum class Formulation { Mixed, Stabilized, LambdaZero, Source };

std::string to_string(Formulation f);
Formulation formulation_from_string(const std::string& s);

struct AssemblyOptions {
  double r = 1.0;
  double eta = 1.0;
  double alpha = 0.5;
  double eps = 1e-2;
  int quad_order = 4;
  int cut_depth = 4;
  XInnerMode xinner;
  int threads = 1;
};

/// Assembled blocks of
///
///   [ A   G^T  B^T ] [u]   [L1]
///   [ G  -K    0   ] [w] = [0 ]
///   [ B   0   -C   ] [l]   [L2]
///
/// u = y (or (y, f) for the source problem), l the multiplier. The w rows only exist when the
/// X inner product is realized in H^-1: they carry the P1 Green's function part of ||.||_X.
struct SparseSymSystem {
  Formulation formulation = Formulation::Mixed;
  AssemblyOptions options;
  SpaceTimeMesh mesh{1, 1, 1.0};
  Coefficients coeffs;
  DofMap zmap;
  DofMap lmap;
  DofMap fmap;
  int n_y = 0;
  int n_f = 0;

  SpMat A;
  SpMat B;
  SpMat C;
  SpMat J;
  SpMat G;
  SpMat K;
  Vec L1;
  Vec L2;

  /// int_{q_T} y_obs^2 by the same quadrature as the loads.
  double obs_norm2 = 0.0;
  /// Measure of q_T as seen by the quadrature.
  double obs_area = 0.0;

  int n_primal() const { return n_y + n_f; }
  int n_aux() const { return static_cast<int>(K.rows()); }
  int m() const { return static_cast<int>(B.rows()); }
  bool has_aux() const { return K.rows() > 0; }
  bool multiplier_is_bfs() const { return formulation == Formulation::Stabilized; }

  /// Full symmetric saddle matrix in the block order (u, w, l).
  SpMat saddle_matrix() const;
  /// [A G^T; G -K]: the primal operator with its auxiliary rows.
  SpMat primal_matrix() const;
};

SparseSymSystem assemble_mixed(const SpaceTimeMesh& mesh, const ObservationDomain& domain, const Coefficients& coeffs,
                               const AssemblyOptions& opt, const ObservationFn& y_obs);

SparseSymSystem assemble_stabilized(const SpaceTimeMesh& mesh, const ObservationDomain& domain,
                                    const Coefficients& coeffs, const AssemblyOptions& opt,
                                    const ObservationFn& y_obs);

SparseSymSystem assemble_source(const SpaceTimeMesh& mesh, const ObservationDomain& domain, const Coefficients& coeffs,
                                const AssemblyOptions& opt, const ObservationFn& y_obs);

/// A_{r,h} and the load alone (multiplier fixed to zero).
SparseSymSystem assemble_lambda_zero(const SpaceTimeMesh& mesh, const ObservationDomain& domain,
                                     const Coefficients& coeffs, const AssemblyOptions& opt,
                                     const ObservationFn& y_obs);

SparseSymSystem assemble(Formulation f, const SpaceTimeMesh& mesh, const ObservationDomain& domain,
                         const Coefficients& coeffs, const AssemblyOptions& opt, const ObservationFn& y_obs);

/// Point values of a BFS field given by its coefficient vector over `map`.
BfsShape eval_bfs_field(const SpaceTimeMesh& mesh, const DofMap& map, const Vec& coeffs, double x, double t);
/// Point value of a Q1 field.
double eval_q1_field(const SpaceTimeMesh& mesh, const DofMap& map, const Vec& coeffs, double x, double t);

/// Norms of a discrete solution measured by element quadrature of order `order`.
struct FieldNorms {
  double err_QT = 0;      // ||y - y_h||_{L2(Q_T)}
  double exact_QT = 0;    // ||y||_{L2(Q_T)}
  double err_qT = 0;
  double exact_qT = 0;
  double yh_qT = 0;       // ||y_h||_{L2(q_T)}
  double normL = 0;       // ||L y_h||_{L2(Q_T)}
  double norm_lambda = 0; // ||lambda_h||_{L2(Q_T)}
  double norm_f = 0;      // ||f_h||_{L2(Q_T)} (source problem)
};

/// Exact values on a tensor grid (x fastest), used instead of pointwise calls on Q_T when set.
using GridFn = std::function<std::vector<double>(const std::vector<double>&, const std::vector<double>&)>;

/// `exact` may be empty; error fields are then zero.
FieldNorms measure(const SparseSymSystem& sys, const ObservationDomain& domain, const Vec& y, const Vec& lambda,
                   const Vec& f, const ObservationFn& exact, int order, const GridFn& exact_grid = {});

/// ||y_h||_{L2(q_T)} with the assembly quadrature, comparable to sqrt(obs_norm2).
double observed_norm(const SparseSymSystem& sys, const ObservationDomain& domain, const Vec& y);

}  // namespace stw
