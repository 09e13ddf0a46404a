#include "stwave/solvers.hpp"

#include <umfpack.h>

#include <Eigen/CholmodSupport>
#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <string>
#include <unistd.h>

#include "stwave/error.hpp"

extern "C" void dtrsm_(const char*, const char*, const char*, const char*, const int*, const int*, const double*,
                       const double*, const int*, double*, const int*);

namespace stw {

// ---------------------------------------------------------------------------
// LU

namespace {

double memory_budget() {
  if (const char* env = std::getenv("STWAVE_MEMORY_MB")) return std::atof(env) * 1e6;
  const double phys = static_cast<double>(::sysconf(_SC_PHYS_PAGES)) * static_cast<double>(::sysconf(_SC_PAGESIZE));
  return phys > 0.0 ? 0.7 * phys : 4e9;
}

// Ruiz equilibration: scales rows and columns until every max-norm is close to one.
void equilibrate(SpMat& M, Vec& dr, Vec& dc, int sweeps = 8) {
  dr = Vec::Ones(M.rows());
  dc = Vec::Ones(M.cols());
  for (int s = 0; s < sweeps; ++s) {
    Vec rmax = Vec::Zero(M.rows()), cmax = Vec::Zero(M.cols());
    for (int k = 0; k < M.outerSize(); ++k)
      for (SpMat::InnerIterator it(M, k); it; ++it) {
        const double a = std::abs(it.value());
        rmax[it.row()] = std::max(rmax[it.row()], a);
        cmax[it.col()] = std::max(cmax[it.col()], a);
      }
    for (int i = 0; i < rmax.size(); ++i) rmax[i] = rmax[i] > 0.0 ? 1.0 / std::sqrt(rmax[i]) : 1.0;
    for (int i = 0; i < cmax.size(); ++i) cmax[i] = cmax[i] > 0.0 ? 1.0 / std::sqrt(cmax[i]) : 1.0;
    for (int k = 0; k < M.outerSize(); ++k)
      for (SpMat::InnerIterator it(M, k); it; ++it) it.valueRef() *= rmax[it.row()] * cmax[it.col()];
    dr.array() *= rmax.array();
    dc.array() *= cmax.array();
  }
}

}  // namespace

LuFactor::LuFactor(const SpMat& M) : M_(M), n_(static_cast<int>(M.rows())) {
  require(M.rows() == M.cols(), "LU: matrix must be square");
  M_.makeCompressed();
  equilibrate(M_, dr_, dc_);
  double control[UMFPACK_CONTROL], info[UMFPACK_INFO];
  umfpack_di_defaults(control);
  control[UMFPACK_PIVOT_TOLERANCE] = 0.5;
  control[UMFPACK_SYM_PIVOT_TOLERANCE] = 0.5;
  void* symbolic = nullptr;
  int status = umfpack_di_symbolic(n_, n_, M_.outerIndexPtr(), M_.innerIndexPtr(), M_.valuePtr(), &symbolic, control,
                                   info);
  if (status != UMFPACK_OK) {
    if (symbolic) umfpack_di_free_symbolic(&symbolic);
    throw NumericalError("LU symbolic analysis failed (status " + std::to_string(status) + ")");
  }
  const double estimate = info[UMFPACK_PEAK_MEMORY_ESTIMATE] * info[UMFPACK_SIZE_OF_UNIT];
  if (estimate > memory_budget()) {
    umfpack_di_free_symbolic(&symbolic);
    throw OutOfMemory("LU factorization needs about " + std::to_string(static_cast<long>(estimate / 1e6)) +
                      " MB, over the budget of " + std::to_string(static_cast<long>(memory_budget() / 1e6)) + " MB");
  }
  status = umfpack_di_numeric(M_.outerIndexPtr(), M_.innerIndexPtr(), M_.valuePtr(), symbolic, &numeric_, control, info);
  umfpack_di_free_symbolic(&symbolic);
  if (status == UMFPACK_ERROR_out_of_memory) throw OutOfMemory("LU factorization ran out of memory");
  if (status != UMFPACK_OK && status != UMFPACK_WARNING_singular_matrix) {
    if (numeric_) umfpack_di_free_numeric(&numeric_);
    throw NumericalError("LU numeric factorization failed (status " + std::to_string(status) + ")");
  }
  rcond_ = info[UMFPACK_RCOND];
  lnz_ = info[UMFPACK_LNZ];
  unz_ = info[UMFPACK_UNZ];
  flops_ = info[UMFPACK_FLOPS];
  if (status == UMFPACK_WARNING_singular_matrix || !(rcond_ > 0.0)) {
    if (numeric_) umfpack_di_free_numeric(&numeric_);
    throw NumericalError("singular matrix: zero pivot in LU factorization");
  }
}

LuFactor::~LuFactor() {
  if (numeric_) umfpack_di_free_numeric(&numeric_);
}

Vec LuFactor::solve_sys(const Vec& b, int sys) const {
  require(b.size() == n_, "LU solve: dimension mismatch");
  const bool tr = sys == UMFPACK_At;
  const Vec bs = (tr ? dc_ : dr_).cwiseProduct(b);
  Vec x(n_);
  double control[UMFPACK_CONTROL], info[UMFPACK_INFO];
  umfpack_di_defaults(control);
  const int status = umfpack_di_solve(sys, M_.outerIndexPtr(), M_.innerIndexPtr(), M_.valuePtr(), x.data(), bs.data(),
                                      numeric_, control, info);
  if (status != UMFPACK_OK && status != UMFPACK_WARNING_singular_matrix)
    throw NumericalError("LU solve failed (status " + std::to_string(status) + ")");
  return (tr ? dr_ : dc_).cwiseProduct(x);
}

Vec LuFactor::solve(const Vec& b) const { return solve_sys(b, UMFPACK_A); }
Vec LuFactor::solve_transpose(const Vec& b) const { return solve_sys(b, UMFPACK_At); }

// ---------------------------------------------------------------------------
// quasi-definite LDL^T

struct QuasiDefiniteFactor::Impl {
  struct Ldl : Eigen::CholmodSimplicialLDLT<SpMat, Eigen::Lower> {
    const cholmod_factor* factor() const { return m_cholmodFactor; }
  } ldl;
};

QuasiDefiniteFactor::QuasiDefiniteFactor(const SpMat& M) : impl_(std::make_unique<Impl>()), M_(M) {
  require(M.rows() == M.cols(), "LDL: matrix must be square");
  M_.makeCompressed();
  d_ = Vec::Ones(M_.rows());
  for (int s = 0; s < 8; ++s) {
    Vec rmax = Vec::Zero(M_.rows());
    for (int k = 0; k < M_.outerSize(); ++k)
      for (SpMat::InnerIterator it(M_, k); it; ++it)
        rmax[it.row()] = std::max(rmax[it.row()], std::abs(it.value()));
    for (int i = 0; i < rmax.size(); ++i) rmax[i] = rmax[i] > 0.0 ? 1.0 / std::sqrt(rmax[i]) : 1.0;
    for (int k = 0; k < M_.outerSize(); ++k)
      for (SpMat::InnerIterator it(M_, k); it; ++it) it.valueRef() *= rmax[it.row()] * rmax[it.col()];
    d_.array() *= rmax.array();
  }
  auto& ldl = impl_->ldl;
  ldl.analyzePattern(M_);
  if (ldl.info() != Eigen::Success) throw NumericalError("LDL symbolic analysis failed");
  lnz_ = ldl.cholmod().lnz;
  const double estimate = lnz_ * (sizeof(double) + sizeof(int)) * 1.2;
  if (estimate > memory_budget())
    throw OutOfMemory("LDL factorization needs about " + std::to_string(static_cast<long>(estimate / 1e6)) +
                      " MB, over the budget of " + std::to_string(static_cast<long>(memory_budget() / 1e6)) + " MB");
  ldl.factorize(M_);
  if (ldl.info() != Eigen::Success) throw NumericalError("LDL factorization failed: zero pivot");
  const cholmod_factor* L = ldl.factor();
  if (L && !L->is_super && !L->is_ll) {
    const auto* p = static_cast<const int*>(L->p);
    const auto* x = static_cast<const double*>(L->x);
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (std::size_t j = 0; j < L->n; ++j) {
      const double d = std::abs(x[p[j]]);
      lo = std::min(lo, d);
      hi = std::max(hi, d);
    }
    pivot_ratio_ = hi > 0.0 ? lo / hi : 0.0;
  }
}

QuasiDefiniteFactor::~QuasiDefiniteFactor() = default;

Vec QuasiDefiniteFactor::solve(const Vec& b) const {
  require(b.size() == M_.rows(), "LDL solve: dimension mismatch");
  const Vec bs = d_.cwiseProduct(b);
  const double bn = bs.norm();
  if (bn == 0.0) return Vec::Zero(b.size());
  Vec x = impl_->ldl.solve(bs);
  double res = (bs - M_ * x).norm() / bn;
  for (int k = 0; k < 5 && res > 1e-13; ++k) {
    const Vec r = bs - M_ * x;
    const Vec x2 = x + impl_->ldl.solve(r);
    const double res2 = (bs - M_ * x2).norm() / bn;
    if (!(res2 < res)) break;
    x = x2;
    res = res2;
  }
  worst_ = std::max(worst_, res);
  return d_.cwiseProduct(x);
}

// ---------------------------------------------------------------------------
// primal operator

struct PrimalSolver::Chol {
  Eigen::CholmodSupernodalLLT<SpMat, Eigen::Lower> llt;
};

PrimalSolver::PrimalSolver(const SparseSymSystem& sys) : n_(sys.n_primal()), naux_(sys.n_aux()) {
  if (naux_ == 0) {
    chol_ = std::make_unique<Chol>();
    chol_->llt.compute(sys.A);
    if (chol_->llt.info() != Eigen::Success)
      throw NumericalError("Cholesky factorization of A failed: A is not positive definite");
  } else {
    qd_ = std::make_unique<QuasiDefiniteFactor>(sys.primal_matrix());
  }
}

PrimalSolver::~PrimalSolver() = default;

Vec PrimalSolver::solve(const Vec& rhs) const {
  require(rhs.size() == n_, "primal solve: dimension mismatch");
  if (chol_) {
    Vec x = chol_->llt.solve(rhs);
    return x;
  }
  Vec b = Vec::Zero(n_ + naux_);
  b.head(n_) = rhs;
  return qd_->solve(b).head(n_);
}

// ---------------------------------------------------------------------------

namespace {

void split_primal(const SparseSymSystem& sys, const Vec& u, SaddleSolution& s) {
  s.y = u.head(sys.n_y);
  if (sys.n_f > 0) s.f = u.segment(sys.n_y, sys.n_f);
}

double sparse_norm1(const SpMat& M) {
  double best = 0.0;
  for (int k = 0; k < M.outerSize(); ++k) {
    double c = 0.0;
    for (SpMat::InnerIterator it(M, k); it; ++it) c += std::abs(it.value());
    best = std::max(best, c);
  }
  return best;
}

}  // namespace

SaddleSolution solve_saddle(const SparseSymSystem& sys, const SolverOptions& opt) {
  if (sys.formulation == Formulation::LambdaZero) return solve_primal_only(sys);
  require(sys.m() >= 1, "saddle solve: empty multiplier space");
  const SpMat M = sys.saddle_matrix();
  const int n = sys.n_primal(), na = sys.n_aux(), m = sys.m();
  Vec b = Vec::Zero(n + na + m);
  b.head(n) = sys.L1;
  b.tail(m) = sys.L2;
  SaddleSolution s;
  if (sys.formulation == Formulation::Stabilized) {
    // [A B^T; B -C] with C positive definite on the stabilized multiplier space
    std::unique_ptr<QuasiDefiniteFactor> qd;
    try {
      qd = std::make_unique<QuasiDefiniteFactor>(M);
    } catch (const OutOfMemory&) {
      throw;
    } catch (const NumericalError&) {
    }
    if (qd) {
      const Vec x = qd->solve(b);
      s.rcond = qd->pivot_ratio();
      s.fill = qd->factor_nonzeros();
      s.near_singular = qd->worst_residual() > 1e-8;
      if (s.near_singular && opt.strict)
        throw NumericalError("inaccurate quasi-definite solve (residual " + std::to_string(qd->worst_residual()) + ")");
      const double scale = b.norm() + sparse_norm1(M) * x.norm();
      s.residual_norm = scale > 0.0 ? (M * x - b).norm() / scale : 0.0;
      split_primal(sys, x.head(n), s);
      s.lambda = x.tail(m);
      return s;
    }
  }
  LuFactor lu(M);
  s.rcond = lu.rcond();
  s.fill = lu.lu_nonzeros();
  s.flops = lu.flops();
  s.near_singular = lu.rcond() < opt.pivot_tol;
  if (s.near_singular && opt.strict)
    throw NumericalError("near-singular saddle factorization (rcond " + std::to_string(lu.rcond()) + ")");
  const Vec x = lu.solve(b);
  const double scale = b.norm() + sparse_norm1(M) * x.norm();
  s.residual_norm = scale > 0.0 ? (M * x - b).norm() / scale : 0.0;
  split_primal(sys, x.head(n), s);
  s.lambda = x.tail(m);
  return s;
}

SaddleSolution solve_primal_only(const SparseSymSystem& sys) {
  PrimalSolver P(sys);
  SaddleSolution s;
  const Vec u = P.solve(sys.L1);
  split_primal(sys, u, s);
  s.lambda = Vec::Zero(sys.m());
  const double scale = sys.L1.norm() + sparse_norm1(sys.A) * u.norm();
  // with auxiliary rows the operator is the Schur complement, not A alone
  if (!sys.has_aux()) s.residual_norm = scale > 0.0 ? (sys.A * u - sys.L1).norm() / scale : 0.0;
  s.rcond = 1.0;
  return s;
}

DualOperator::DualOperator(const SparseSymSystem& sys) : sys_(sys), solver_(sys) {}

Vec DualOperator::apply(const Vec& l) const { return sys_.B * solver_.solve(sys_.B.transpose() * l); }

std::pair<SaddleSolution, CgReport> solve_dual_cg(const SparseSymSystem& sys, double threshold, int max_iters) {
  require(threshold > 0.0, "cg threshold must be positive");
  require(sys.options.r > 0.0, "dual CG requires r > 0");
  require(sys.m() >= 1, "dual CG: empty multiplier space");
  const int m = sys.m();
  if (max_iters <= 0) max_iters = 10 * m;

  PrimalSolver P(sys);
  Eigen::SimplicialLLT<SpMat> Jllt(sys.J);
  if (Jllt.info() != Eigen::Success) throw NumericalError("multiplier mass matrix is not positive definite");
  const SpMat Bt = sys.B.transpose();

  CgReport rep;
  rep.threshold = threshold;
  Vec u = P.solve(sys.L1);  // u = A^-1 (L1 - B^T l), updated as l changes
  Vec lam = Vec::Zero(m);
  Vec g = sys.B * u - sys.L2;  // residual of (S + C) l = B A^-1 L1 - L2 at l = 0
  Vec z = Jllt.solve(g);
  double rz = g.dot(z);
  const double g0 = std::sqrt(std::max(rz, 0.0));
  rep.residual_history.push_back(g0);
  if (g0 == 0.0) {
    rep.converged = true;
  } else {
    Vec p = z;
    for (int it = 1; it <= max_iters; ++it) {
      const Vec Ap_u = P.solve(Bt * p);
      Vec Sp = sys.B * Ap_u;
      if (sys.C.nonZeros() > 0) Sp += sys.C * p;
      const double pSp = p.dot(Sp);
      if (!(pSp > 0.0)) throw NumericalError("dual CG breakdown: operator not positive definite");
      const double a = rz / pSp;
      lam += a * p;
      u -= a * Ap_u;
      g -= a * Sp;
      z = Jllt.solve(g);
      const double rz_new = g.dot(z);
      const double gn = std::sqrt(std::max(rz_new, 0.0));
      rep.residual_history.push_back(gn);
      rep.iterations = it;
      if (gn <= threshold * g0) {
        rep.converged = true;
        break;
      }
      p = z + (rz_new / rz) * p;
      rz = rz_new;
    }
  }
  SaddleSolution s;
  split_primal(sys, u, s);
  s.lambda = lam;
  s.rcond = 1.0;
  return {s, rep};
}

InfsupResult infsup_constant(const SparseSymSystem& sys, const InfsupOptions& opt) {
  const int m = sys.m();
  require(m >= 1, "inf-sup: empty multiplier space");
  if (m > opt.cap)
    throw InvalidArgument("inf-sup: multiplier space too large (m_h = " + std::to_string(m) + " > cap " +
                          std::to_string(opt.cap) + "); use a coarser level or raise the cap");
  // (S + tau J)^-1 z by one solve of the quasi-definite [Ahat B^T; B -tau J][y; -x] = [0; z]
  const double tau = opt.shift / std::max(sys.options.r, 1e-300);
  SparseSymSystem shifted = sys;
  shifted.C = tau * sys.J;
  const QuasiDefiniteFactor qd(shifted.saddle_matrix());
  const int off = sys.n_primal() + sys.n_aux();
  auto Sinv = [&](const Vec& zv) {
    Vec b = Vec::Zero(off + m);
    b.tail(m) = zv;
    return Vec(-qd.solve(b).tail(m));
  };

  // Lanczos for T = (S + tau J)^-1 J, self-adjoint in the J inner product; its top eigenvalue is
  // 1 / (delta_min^2 + tau).
  const SpMat& J = sys.J;
  std::vector<Vec> V;
  std::vector<double> alpha, beta;
  Vec v(m);
  for (int k = 0; k < m; ++k) v[k] = 1.0 + 0.5 * std::sin(1.0 + 7.0 * k);
  v /= std::sqrt(v.dot(J * v));
  InfsupResult res;
  double prev = 0.0;
  const int kmax = std::min(opt.max_iters, m);
  for (int k = 0; k < kmax; ++k) {
    V.push_back(v);
    Vec w = Sinv(J * v);
    const double a = v.dot(J * w);
    alpha.push_back(a);
    // full reorthogonalization in the J inner product
    for (int pass = 0; pass < 2; ++pass)
      for (const Vec& q : V) w -= q.dot(J * w) * q;
    const double b = std::sqrt(std::max(w.dot(J * w), 0.0));
    Eigen::VectorXd d = Eigen::Map<Eigen::VectorXd>(alpha.data(), static_cast<Eigen::Index>(alpha.size()));
    Eigen::VectorXd e = Eigen::VectorXd::Zero(std::max<Eigen::Index>(d.size() - 1, 0));
    for (Eigen::Index s = 0; s + 1 < d.size(); ++s) e[s] = beta[s];
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    es.computeFromTridiagonal(d, e, Eigen::ComputeEigenvectors);
    Eigen::Index idx = 0;
    const double top = es.eigenvalues().maxCoeff(&idx);
    const double ritz_res = b * std::abs(es.eigenvectors()(d.size() - 1, idx));
    res.iterations = k + 1;
    prev = top;
    if (ritz_res <= opt.tol * std::abs(top) || b <= 1e-14 * std::abs(top)) {
      res.converged = true;
      break;
    }
    beta.push_back(b);
    v = w / b;
  }
  const double mu = 1.0 / prev - tau;
  if (!(prev > 0.0) || !(mu > 0.0)) throw NumericalError("inf-sup: eigen iteration produced a nonpositive estimate");
  res.delta = std::sqrt(mu);
  res.solve_residual = qd.worst_residual();
  return res;
}

double condition_estimate(const SpMat& M, int steps) {
  require(M.rows() == M.cols() && M.rows() > 0, "condition estimate: square nonempty matrix required");
  require(steps >= 1, "condition estimate: steps must be positive");
  const int n = static_cast<int>(M.rows());
  auto start = [&] {
    Vec v(n);
    for (int k = 0; k < n; ++k) v[k] = 1.0 + 0.25 * std::sin(3.0 + 11.0 * k);
    return Vec(v / v.norm());
  };
  const SpMat Mt = M.transpose();
  Vec v = start();
  double smax = 0.0;
  for (int s = 0; s < steps; ++s) {
    Vec w = Mt * (M * v);
    smax = std::sqrt(w.norm());
    v = w / w.norm();
  }
  const LuFactor lu(M);
  v = start();
  double sinv = 0.0;
  for (int s = 0; s < steps; ++s) {
    Vec w = lu.solve(lu.solve_transpose(v));
    sinv = std::sqrt(w.norm());
    v = w / w.norm();
  }
  return smax * sinv;
}

double condition_estimate(const SparseSymSystem& sys, int steps) {
  if (sys.formulation == Formulation::LambdaZero) return condition_estimate(sys.primal_matrix(), steps);
  return condition_estimate(sys.saddle_matrix(), steps);
}

// ---------------------------------------------------------------------------
// BLAS sanity

bool blas_selfcheck() {
  const int n = 48;
  std::vector<double> L(n * n), X(n * n);
  for (int i = 0; i < n * n; ++i) {
    L[i] = std::sin(0.7 * i);
    X[i] = std::cos(1.3 * i);
  }
  for (int i = 0; i < n; ++i) L[i + i * n] += n;
  std::vector<double> Y(X);
  const double one = 1.0;
  dtrsm_("L", "L", "N", "N", &n, &n, &one, L.data(), &n, Y.data(), &n);
  double err = 0.0;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      double r = 0.0;
      for (int k = 0; k <= i; ++k) r += L[i + k * n] * Y[k + j * n];
      if (!std::isfinite(r)) return false;
      err = std::max(err, std::abs(r - X[i + j * n]));
    }
  return err < 1e-10;
}

bool ensure_working_blas(char** argv) {
  if (blas_selfcheck()) return true;
  if (std::getenv("OPENBLAS_CORETYPE") != nullptr || argv == nullptr) return false;
  ::setenv("OPENBLAS_CORETYPE", "Haswell", 1);
  ::execv("/proc/self/exe", argv);
  return false;
}

}  // namespace stw
