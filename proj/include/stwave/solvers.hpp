#pragma once

#include <memory>
#include <utility>
#include <vector>

#include "stwave/assembly.hpp"

namespace stw {

/// Sparse LU (UMFPACK) of a row/column equilibrated copy of a square matrix.
/// Throws NumericalError on a singular matrix.
class LuFactor {
 public:
  explicit LuFactor(const SpMat& M);
  ~LuFactor();
  LuFactor(const LuFactor&) = delete;
  LuFactor& operator=(const LuFactor&) = delete;

  Vec solve(const Vec& b) const;
  /// Solves M^T x = b.
  Vec solve_transpose(const Vec& b) const;

  int rows() const { return n_; }
  /// Reciprocal pivot ratio min|u_ii| / max|u_ii| of the equilibrated factorization.
  double rcond() const { return rcond_; }
  double lu_nonzeros() const { return lnz_ + unz_; }
  double flops() const { return flops_; }

 private:
  Vec solve_sys(const Vec& b, int sys) const;

  SpMat M_;  // equilibrated copy diag(dr) M diag(dc)
  Vec dr_;
  Vec dc_;
  void* numeric_ = nullptr;
  int n_ = 0;
  double rcond_ = 0.0;
  double lnz_ = 0.0;
  double unz_ = 0.0;
  double flops_ = 0.0;
};

/// LDL^T without pivoting of a symmetric quasi-definite matrix [P B^T; B -N] (P, N positive
/// definite), after symmetric scaling. Solves apply iterative refinement.
/// Throws OutOfMemory when the factor would exceed the memory budget.
class QuasiDefiniteFactor {
 public:
  explicit QuasiDefiniteFactor(const SpMat& M);
  ~QuasiDefiniteFactor();
  QuasiDefiniteFactor(const QuasiDefiniteFactor&) = delete;
  QuasiDefiniteFactor& operator=(const QuasiDefiniteFactor&) = delete;

  Vec solve(const Vec& b) const;
  int rows() const { return static_cast<int>(M_.rows()); }
  double factor_nonzeros() const { return lnz_; }
  /// Largest relative residual seen by solve() so far.
  double worst_residual() const { return worst_; }
  /// min |D| / max |D| of the scaled factorization, a cheap reciprocal condition indicator.
  double pivot_ratio() const { return pivot_ratio_; }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  SpMat M_;  // scaled copy diag(d) M diag(d)
  Vec d_;
  double lnz_ = 0.0;
  double pivot_ratio_ = 0.0;
  mutable double worst_ = 0.0;
};

/// Solves with the primal operator: A when there are no auxiliary rows (sparse Cholesky),
/// otherwise the quasi-definite [A G^T; G -K], returning the primal part.
class PrimalSolver {
 public:
  explicit PrimalSolver(const SparseSymSystem& sys);
  ~PrimalSolver();
  Vec solve(const Vec& rhs) const;
  bool uses_cholesky() const { return chol_ != nullptr; }

 private:
  struct Chol;
  int n_ = 0;
  int naux_ = 0;
  std::unique_ptr<Chol> chol_;
  std::unique_ptr<QuasiDefiniteFactor> qd_;
};

struct SaddleSolution {
  Vec y;
  Vec lambda;
  Vec f;
  /// ||M x - b|| / (||b|| + ||M|| ||x||) for the assembled block system.
  double residual_norm = 0.0;
  double rcond = 0.0;
  double fill = 0.0;
  double flops = 0.0;
  bool near_singular = false;
};

struct SolverOptions {
  /// Factorizations with rcond below this are flagged near-singular.
  double pivot_tol = 1e-14;
  /// Treat near-singular factorizations as errors.
  bool strict = false;
};

SaddleSolution solve_saddle(const SparseSymSystem& sys, const SolverOptions& opt = {});

/// Single SPD solve A y = L1 (multiplier fixed to zero); also valid for any formulation's A block.
SaddleSolution solve_primal_only(const SparseSymSystem& sys);

struct CgReport {
  int iterations = 0;
  std::vector<double> residual_history;
  bool converged = false;
  double threshold = 1e-10;
};

/// Conjugate gradient on (B A^-1 B^T + C) l = B A^-1 L1 - L2 preconditioned by J.
/// max_iters <= 0 selects 10 * m.
std::pair<SaddleSolution, CgReport> solve_dual_cg(const SparseSymSystem& sys, double threshold = 1e-10,
                                                  int max_iters = 0);

/// Dual operator l -> B A^-1 B^T l (no C term).
class DualOperator {
 public:
  explicit DualOperator(const SparseSymSystem& sys);
  Vec apply(const Vec& l) const;

 private:
  const SparseSymSystem& sys_;
  PrimalSolver solver_;
};

struct InfsupOptions {
  int cap = 60000;
  int max_iters = 400;
  /// Relative Ritz residual at which Lanczos stops.
  double tol = 1e-8;
  /// Shift tau = shift / r keeping the factored matrix quasi-definite.
  double shift = 1e-2;
};

struct InfsupResult {
  double delta = 0.0;
  int iterations = 0;
  bool converged = false;
  double solve_residual = 0.0;
};

/// sqrt of the smallest eigenvalue of B A^-1 B^T l = d J l.
InfsupResult infsup_constant(const SparseSymSystem& sys, const InfsupOptions& opt = {});

/// ||M||_2 ||M^-1||_2 by 20 power steps on M^T M and on its inverse.
double condition_estimate(const SpMat& M, int steps = 20);
double condition_estimate(const SparseSymSystem& sys, int steps = 20);

/// Triangular solve through the linked BLAS compared against a plain loop. False when the
/// BLAS kernels selected for this CPU return wrong results.
bool blas_selfcheck();

/// For executables: when the self-check fails and OPENBLAS_CORETYPE is unset, sets it to
/// Haswell and re-executes the current process. Returns false if the BLAS is still broken.
bool ensure_working_blas(char** argv);

}  // namespace stw
