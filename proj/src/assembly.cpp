#include "stwave/assembly.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <thread>

#include "stwave/error.hpp"

namespace stw {

namespace {

using Trip = Eigen::Triplet<double, int>;

constexpr int kMaxLocal = 20;  // 16 BFS + 4 Q1 source dofs

struct Buffers {
  std::vector<Trip> A, B, C, J, G;
  std::vector<std::pair<int, double>> L1, L2;
  double obs2 = 0.0;
  double area = 0.0;
};

// One quadratic term coef * ||ell(u)||_X^2 with ell linear in the local primal dofs.
struct XTerm {
  double coef;
  bool uses_L;   // ell contains L N_k on the y block
  double f_sign; // ell contains f_sign * M_m on the f block (0 when absent)
};

struct Context {
  const SpaceTimeMesh* mesh;
  const ObservationDomain* domain;
  const Coefficients* coeffs;
  const AssemblyOptions* opt;
  const ObservationFn* y_obs;
  Formulation form;
  const DofMap* zmap;
  const DofMap* lmap;
  const DofMap* fmap;
  int n_y;
  std::vector<XTerm> terms;
  QuadratureRule rule;
  GaussRule1d outer;  // bubble outer points
  bool hminus1;
  int aux_per_term;
};

double Lval(const Coefficients& k, const BfsShape& s, double x, double t) {
  return apply_L(k, {s.dtt, s.dx, s.dxx, s.v}, x, t);
}

// ell values of each X-term for all local primal dofs at one point
void term_values(const Context& ctx, const std::array<BfsShape, 16>& bfs, const std::array<Q1Shape, 4>& q1, double x,
                 double t, int nloc, std::vector<std::array<double, kMaxLocal>>& out) {
  std::array<double, 16> LN{};
  for (int k = 0; k < 16; ++k) LN[k] = Lval(*ctx.coeffs, bfs[k], x, t);
  for (std::size_t a = 0; a < ctx.terms.size(); ++a) {
    auto& v = out[a];
    v.fill(0.0);
    if (ctx.terms[a].uses_L)
      for (int k = 0; k < 16; ++k) v[k] = LN[k];
    if (nloc > 16)
      for (int m = 0; m < 4; ++m) v[16 + m] = ctx.terms[a].f_sign * q1[m].v;
  }
}

void add_outer(std::vector<Trip>& out, const int* rows, int nr, const int* cols, int nc, const double* M) {
  for (int a = 0; a < nr; ++a) {
    if (rows[a] < 0) continue;
    for (int b = 0; b < nc; ++b)
      if (cols[b] >= 0 && M[a * nc + b] != 0.0) out.emplace_back(rows[a], cols[b], M[a * nc + b]);
  }
}

void assemble_element(const Context& ctx, std::size_t e, Buffers& buf) {
  const SpaceTimeMesh& mesh = *ctx.mesh;
  const auto [i, j] = mesh.element_ij(e);
  const double dx = mesh.dx(), dt = mesh.dt();
  const double x0 = mesh.x(i), t0 = mesh.t(j);
  const bool stab = ctx.form == Formulation::Stabilized;
  const bool source = ctx.form == Formulation::Source;
  const bool has_mult = ctx.form != Formulation::LambdaZero;
  const double alpha = stab ? ctx.opt->alpha : 0.0;

  // local primal dofs
  const auto zl = ctx.zmap->element_dofs<16>(i, j);
  std::array<int, kMaxLocal> pl{};
  pl.fill(-1);
  std::copy(zl.begin(), zl.end(), pl.begin());
  int nloc = 16;
  if (source) {
    const auto fl = ctx.fmap->element_dofs<4>(i, j);
    for (int m = 0; m < 4; ++m) pl[16 + m] = fl[m] + ctx.n_y;
    nloc = 20;
  }
  // local multiplier dofs
  std::array<int, 16> ml{};
  ml.fill(-1);
  int nm = 0;
  if (has_mult) {
    if (stab) {
      ml = ctx.lmap->element_dofs<16>(i, j);
      nm = 16;
    } else {
      const auto q = ctx.lmap->element_dofs<4>(i, j);
      std::copy(q.begin(), q.end(), ml.begin());
      nm = 4;
    }
  }

  std::array<double, kMaxLocal * kMaxLocal> Aloc{};
  std::array<double, 16 * kMaxLocal> Bloc{};
  std::array<double, 16 * 16> Cloc{}, Jloc{};
  std::array<double, kMaxLocal> L1loc{};
  std::array<double, 16> L2loc{};

  const int g = ctx.rule.order;
  const std::size_t nterms = ctx.terms.size();
  std::vector<std::array<double, kMaxLocal>> ell(nterms);
  // ell at tensor points, kept for the H^-1 Green's part: [term][q_t][p_x][loc]
  std::vector<double> ell_store;
  if (ctx.hminus1) ell_store.assign(nterms * g * g * kMaxLocal, 0.0);

  for (int b = 0; b < g; ++b)
    for (int a = 0; a < g; ++a) {
      const auto& qp = ctx.rule.points[static_cast<std::size_t>(b) * g + a];
      const double x = x0 + qp.xi * dx, t = t0 + qp.tau * dt;
      const double w = qp.weight * dx * dt;
      const auto bfs = eval_bfs(dx, dt, qp.xi, qp.tau);
      const auto q1 = eval_q1(dx, dt, qp.xi, qp.tau);
      term_values(ctx, bfs, q1, x, t, nloc, ell);

      if (ctx.hminus1) {
        for (std::size_t s = 0; s < nterms; ++s)
          std::copy(ell[s].begin(), ell[s].end(), ell_store.begin() + ((s * g + b) * g + a) * kMaxLocal);
      } else {
        for (std::size_t s = 0; s < nterms; ++s) {
          const double cw = ctx.terms[s].coef * w;
          for (int p = 0; p < nloc; ++p) {
            if (ell[s][p] == 0.0) continue;
            for (int q = 0; q < nloc; ++q) Aloc[p * kMaxLocal + q] += cw * ell[s][p] * ell[s][q];
          }
        }
      }

      if (!has_mult) continue;
      std::array<double, 16> LN{};
      for (int k = 0; k < 16; ++k) LN[k] = Lval(*ctx.coeffs, bfs[k], x, t);
      if (stab) {
        for (int l = 0; l < 16; ++l) {
          for (int k = 0; k < 16; ++k) {
            Bloc[l * kMaxLocal + k] += w * bfs[l].v * LN[k];
            Cloc[l * 16 + k] += alpha * w * LN[l] * LN[k];
            Jloc[l * 16 + k] += w * bfs[l].v * bfs[k].v;
          }
        }
      } else {
        for (int l = 0; l < 4; ++l) {
          for (int k = 0; k < 16; ++k) Bloc[l * kMaxLocal + k] += w * q1[l].v * LN[k];
          if (source)
            for (int m = 0; m < 4; ++m) Bloc[l * kMaxLocal + 16 + m] -= w * q1[l].v * q1[m].v;
          for (int m = 0; m < 4; ++m) Jloc[l * 16 + m] += w * q1[l].v * q1[m].v;
        }
      }
    }

  // observation term
  const auto obs = indicator_weights(*ctx.domain, mesh, e, ctx.rule, ctx.opt->cut_depth);
  const double afac = stab ? 1.0 - alpha : 1.0;
  for (const auto& op : obs) {
    const double xi = (op.x - x0) / dx, tau = (op.t - t0) / dt;
    const auto bfs = eval_bfs(dx, dt, xi, tau);
    const double yo = (*ctx.y_obs)(op.x, op.t);
    buf.obs2 += op.weight * yo * yo;
    buf.area += op.weight;
    for (int p = 0; p < 16; ++p) {
      L1loc[p] += afac * op.weight * yo * bfs[p].v;
      for (int q = 0; q < 16; ++q) Aloc[p * kMaxLocal + q] += afac * op.weight * bfs[p].v * bfs[q].v;
    }
    if (stab) {
      std::array<double, 16> LN{};
      for (int k = 0; k < 16; ++k) LN[k] = Lval(*ctx.coeffs, bfs[k], op.x, op.t);
      for (int l = 0; l < 16; ++l) {
        L2loc[l] -= alpha * op.weight * yo * LN[l];
        for (int k = 0; k < 16; ++k) Bloc[l * kMaxLocal + k] -= alpha * op.weight * bfs[k].v * LN[l];
      }
    }
  }

  if (ctx.hminus1) {
    const GaussRule1d& inner = ctx.rule.line;
    const int nxi = mesh.nx() - 1;
    std::vector<std::array<double, kMaxLocal>> Phi(ctx.outer.size());
    std::vector<std::array<double, kMaxLocal>> tmp(nterms);
    for (int b = 0; b < g; ++b) {
      const double tau = ctx.rule.line.points[b];
      const double t = t0 + tau * dt;
      for (std::size_t s = 0; s < nterms; ++s) {
        const double cq = ctx.terms[s].coef * ctx.rule.line.weights[b] * dt;
        // Green's part: loads against the interior hats of nodes i and i + 1
        for (int side = 0; side < 2; ++side) {
          const int node = i + side;
          if (node < 1 || node > nxi) continue;
          const int row = static_cast<int>(s) * ctx.aux_per_term + (j * g + b) * nxi + (node - 1);
          std::array<double, kMaxLocal> gl{};
          for (int a = 0; a < g; ++a) {
            const double xi = ctx.rule.line.points[a];
            const double hat = side == 0 ? 1.0 - xi : xi;
            const double wx = ctx.rule.line.weights[a] * dx * hat;
            const double* ev = &ell_store[((s * g + b) * g + a) * kMaxLocal];
            for (int p = 0; p < nloc; ++p) gl[p] += wx * ev[p];
          }
          for (int p = 0; p < nloc; ++p)
            if (pl[p] >= 0 && gl[p] != 0.0) buf.G.emplace_back(row, pl[p], gl[p]);
        }
        // bubble part: antiderivative from the left end of the cell, minus its mean
        std::array<double, kMaxLocal> mean{};
        for (int p = 0; p < ctx.outer.size(); ++p) {
          const double sp = ctx.outer.points[p];
          Phi[p].fill(0.0);
          for (int k = 0; k < inner.size(); ++k) {
            const double xi = sp * inner.points[k];
            const auto bfs = eval_bfs(dx, dt, xi, tau);
            const auto q1 = eval_q1(dx, dt, xi, tau);
            term_values(ctx, bfs, q1, x0 + xi * dx, t, nloc, tmp);
            for (int q = 0; q < nloc; ++q) Phi[p][q] += sp * dx * inner.weights[k] * tmp[s][q];
          }
          for (int q = 0; q < nloc; ++q) mean[q] += ctx.outer.weights[p] * Phi[p][q];
        }
        for (int p = 0; p < ctx.outer.size(); ++p) {
          const double cw = cq * dx * ctx.outer.weights[p];
          for (int a = 0; a < nloc; ++a) {
            const double da = Phi[p][a] - mean[a];
            if (da == 0.0) continue;
            for (int c = 0; c < nloc; ++c) Aloc[a * kMaxLocal + c] += cw * da * (Phi[p][c] - mean[c]);
          }
        }
      }
    }
  }

  add_outer(buf.A, pl.data(), kMaxLocal, pl.data(), kMaxLocal, Aloc.data());
  for (int p = 0; p < nloc; ++p)
    if (pl[p] >= 0 && L1loc[p] != 0.0) buf.L1.emplace_back(pl[p], L1loc[p]);
  if (has_mult) {
    add_outer(buf.B, ml.data(), nm, pl.data(), kMaxLocal, Bloc.data());
    std::array<double, 16 * 16> Jc{};
    for (int a = 0; a < nm; ++a)
      for (int b = 0; b < nm; ++b) Jc[a * nm + b] = 0.5 * (Jloc[a * 16 + b] + Jloc[b * 16 + a]);
    add_outer(buf.J, ml.data(), nm, ml.data(), nm, Jc.data());
    if (stab) {
      add_outer(buf.C, ml.data(), 16, ml.data(), 16, Cloc.data());
      for (int l = 0; l < 16; ++l)
        if (ml[l] >= 0 && L2loc[l] != 0.0) buf.L2.emplace_back(ml[l], L2loc[l]);
    }
  }
}

template <class Fn>
std::vector<Buffers> run_elements(const SpaceTimeMesh& mesh, int threads, Fn fn) {
  const std::size_t ne = mesh.num_elements();
  const int nthreads = std::max(1, std::min<int>(threads, static_cast<int>(ne)));
  std::vector<Buffers> bufs(nthreads);
  auto work = [&](int tid) {
    const std::size_t e0 = ne * tid / nthreads, e1 = ne * (tid + 1) / nthreads;
    for (std::size_t e = e0; e < e1; ++e) fn(e, bufs[tid]);
  };
  if (nthreads == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errs(nthreads);
    for (int t = 0; t < nthreads; ++t)
      pool.emplace_back([&, t] {
        try {
          work(t);
        } catch (...) {
          errs[t] = std::current_exception();
        }
      });
    for (auto& th : pool) th.join();
    for (auto& e : errs)
      if (e) std::rethrow_exception(e);
  }
  return bufs;
}

SpMat build(int rows, int cols, std::vector<Buffers>& bufs, std::vector<Trip> Buffers::*field) {
  std::vector<Trip> all;
  std::size_t n = 0;
  for (auto& b : bufs) n += (b.*field).size();
  all.reserve(n);
  for (auto& b : bufs) {
    all.insert(all.end(), (b.*field).begin(), (b.*field).end());
    std::vector<Trip>().swap(b.*field);
  }
  SpMat M(rows, cols);
  M.setFromTriplets(all.begin(), all.end());
  M.makeCompressed();
  return M;
}

Vec gather(int n, const std::vector<Buffers>& bufs, std::vector<std::pair<int, double>> Buffers::*field) {
  Vec v = Vec::Zero(n);
  for (const auto& b : bufs)
    for (const auto& [k, val] : b.*field) v[k] += val;
  return v;
}

void check_options(const AssemblyOptions& opt) {
  require(opt.r > 0.0 && std::isfinite(opt.r), "r must be positive");
  require(opt.eta > 0.0 && std::isfinite(opt.eta), "eta must be positive");
  require(opt.quad_order >= 2 && opt.quad_order <= 6, "quad.order must be in [2, 6]");
  require(opt.cut_depth >= 0 && opt.cut_depth <= 6, "cut.depth must be in [0, 6]");
  require(opt.threads >= 1, "threads must be >= 1");
}

SparseSymSystem assemble_impl(Formulation form, const SpaceTimeMesh& mesh, const ObservationDomain& domain,
                              const Coefficients& coeffs, const AssemblyOptions& opt, const ObservationFn& y_obs) {
  check_options(opt);
  require(static_cast<bool>(y_obs), "observation evaluator is empty");
  SparseSymSystem sys;
  sys.formulation = form;
  sys.options = opt;
  sys.mesh = mesh;
  sys.coeffs = coeffs;
  sys.zmap = make_z_dofmap(mesh);
  sys.n_y = sys.zmap.size();
  if (form == Formulation::Stabilized)
    sys.lmap = make_lambda_tilde_dofmap(mesh);
  else if (form != Formulation::LambdaZero)
    sys.lmap = make_lambda_dofmap(mesh);
  if (form == Formulation::Source) {
    sys.fmap = make_source_dofmap(mesh);
    sys.n_f = sys.fmap.size();
  }
  if (form != Formulation::LambdaZero && sys.lmap.size() == 0)
    throw InvalidArgument("empty multiplier space: the mesh has no interior x-nodes (nx must be >= 2)");

  Context ctx;
  ctx.mesh = &sys.mesh;
  ctx.domain = &domain;
  ctx.coeffs = &sys.coeffs;
  ctx.opt = &sys.options;
  ctx.y_obs = &y_obs;
  ctx.form = form;
  ctx.zmap = &sys.zmap;
  ctx.lmap = &sys.lmap;
  ctx.fmap = &sys.fmap;
  ctx.n_y = sys.n_y;
  ctx.terms.push_back({opt.r, true, form == Formulation::Source ? -1.0 : 0.0});
  if (form == Formulation::Source) ctx.terms.push_back({opt.eps, false, 1.0});
  ctx.rule = tensor_gauss(opt.quad_order);
  ctx.outer = gauss_legendre(opt.quad_order + 1);
  ctx.hminus1 = !opt.xinner.is_l2();
  const int nxi = mesh.nx() - 1;
  ctx.aux_per_term = ctx.hminus1 ? mesh.nt() * opt.quad_order * nxi : 0;

  auto bufs = run_elements(sys.mesh, opt.threads, [&](std::size_t e, Buffers& b) { assemble_element(ctx, e, b); });

  double area = 0.0, obs2 = 0.0;
  for (const auto& b : bufs) {
    area += b.area;
    obs2 += b.obs2;
  }
  if (!(area > 0.0)) throw InvalidArgument("no observation: q_T has zero quadrature weight on this mesh");
  sys.obs_area = area;
  sys.obs_norm2 = obs2;

  const int n = sys.n_primal();
  const int m = sys.lmap.size();
  const int naux = ctx.aux_per_term * static_cast<int>(ctx.terms.size());
  sys.A = build(n, n, bufs, &Buffers::A);
  sys.B = build(m, n, bufs, &Buffers::B);
  sys.J = build(m, m, bufs, &Buffers::J);
  sys.C = build(m, m, bufs, &Buffers::C);
  sys.G = build(naux, n, bufs, &Buffers::G);
  sys.L1 = gather(n, bufs, &Buffers::L1);
  sys.L2 = gather(m, bufs, &Buffers::L2);

  if (naux > 0) {
    std::vector<Trip> kt;
    kt.reserve(static_cast<std::size_t>(naux) * 3);
    const double dx = mesh.dx(), dt = mesh.dt();
    const int g = opt.quad_order;
    for (std::size_t s = 0; s < ctx.terms.size(); ++s)
      for (int j = 0; j < mesh.nt(); ++j)
        for (int b = 0; b < g; ++b) {
          const double cq = ctx.terms[s].coef * ctx.rule.line.weights[b] * dt;
          const int base = static_cast<int>(s) * ctx.aux_per_term + (j * g + b) * nxi;
          for (int a = 0; a < nxi; ++a) {
            kt.emplace_back(base + a, base + a, 2.0 / (dx * cq));
            if (a > 0) kt.emplace_back(base + a, base + a - 1, -1.0 / (dx * cq));
            if (a + 1 < nxi) kt.emplace_back(base + a, base + a + 1, -1.0 / (dx * cq));
          }
        }
    sys.K.resize(naux, naux);
    sys.K.setFromTriplets(kt.begin(), kt.end());
    sys.K.makeCompressed();
  } else {
    sys.K.resize(0, 0);
  }
  return sys;
}

}  // namespace

std::string to_string(Formulation f) {
  switch (f) {
    case Formulation::Mixed: return "mixed";
    case Formulation::Stabilized: return "stabilized";
    case Formulation::LambdaZero: return "lambda_zero";
    case Formulation::Source: return "source";
  }
  return "?";
}

Formulation formulation_from_string(const std::string& s) {
  if (s == "mixed") return Formulation::Mixed;
  if (s == "stabilized") return Formulation::Stabilized;
  if (s == "lambda_zero") return Formulation::LambdaZero;
  if (s == "source") return Formulation::Source;
  throw InvalidArgument("unknown formulation '" + s + "' (expected mixed, stabilized, lambda_zero, source)");
}

SpMat SparseSymSystem::primal_matrix() const {
  const int n = n_primal(), na = n_aux();
  std::vector<Trip> t;
  t.reserve(A.nonZeros() + 2 * G.nonZeros() + K.nonZeros());
  for (int k = 0; k < A.outerSize(); ++k)
    for (SpMat::InnerIterator it(A, k); it; ++it) t.emplace_back(it.row(), it.col(), it.value());
  for (int k = 0; k < G.outerSize(); ++k)
    for (SpMat::InnerIterator it(G, k); it; ++it) {
      t.emplace_back(n + it.row(), it.col(), it.value());
      t.emplace_back(it.col(), n + it.row(), it.value());
    }
  for (int k = 0; k < K.outerSize(); ++k)
    for (SpMat::InnerIterator it(K, k); it; ++it) t.emplace_back(n + it.row(), n + it.col(), -it.value());
  SpMat M(n + na, n + na);
  M.setFromTriplets(t.begin(), t.end());
  M.makeCompressed();
  return M;
}

SpMat SparseSymSystem::saddle_matrix() const {
  const SpMat P = primal_matrix();
  const int np = static_cast<int>(P.rows()), mm = m();
  std::vector<Trip> t;
  t.reserve(P.nonZeros() + 2 * B.nonZeros() + C.nonZeros());
  for (int k = 0; k < P.outerSize(); ++k)
    for (SpMat::InnerIterator it(P, k); it; ++it) t.emplace_back(it.row(), it.col(), it.value());
  for (int k = 0; k < B.outerSize(); ++k)
    for (SpMat::InnerIterator it(B, k); it; ++it) {
      t.emplace_back(np + it.row(), it.col(), it.value());
      t.emplace_back(it.col(), np + it.row(), it.value());
    }
  for (int k = 0; k < C.outerSize(); ++k)
    for (SpMat::InnerIterator it(C, k); it; ++it) t.emplace_back(np + it.row(), np + it.col(), -it.value());
  SpMat M(np + mm, np + mm);
  M.setFromTriplets(t.begin(), t.end());
  M.makeCompressed();
  return M;
}

SparseSymSystem assemble_mixed(const SpaceTimeMesh& mesh, const ObservationDomain& domain, const Coefficients& coeffs,
                               const AssemblyOptions& opt, const ObservationFn& y_obs) {
  return assemble_impl(Formulation::Mixed, mesh, domain, coeffs, opt, y_obs);
}

SparseSymSystem assemble_stabilized(const SpaceTimeMesh& mesh, const ObservationDomain& domain,
                                    const Coefficients& coeffs, const AssemblyOptions& opt,
                                    const ObservationFn& y_obs) {
  require(opt.alpha > 0.0 && opt.alpha < 1.0, "alpha must lie in (0, 1)");
  return assemble_impl(Formulation::Stabilized, mesh, domain, coeffs, opt, y_obs);
}

SparseSymSystem assemble_source(const SpaceTimeMesh& mesh, const ObservationDomain& domain, const Coefficients& coeffs,
                                const AssemblyOptions& opt, const ObservationFn& y_obs) {
  require(opt.eps > 0.0 && std::isfinite(opt.eps), "eps must be positive: the eps-term is part of the norm");
  return assemble_impl(Formulation::Source, mesh, domain, coeffs, opt, y_obs);
}

SparseSymSystem assemble_lambda_zero(const SpaceTimeMesh& mesh, const ObservationDomain& domain,
                                     const Coefficients& coeffs, const AssemblyOptions& opt,
                                     const ObservationFn& y_obs) {
  return assemble_impl(Formulation::LambdaZero, mesh, domain, coeffs, opt, y_obs);
}

SparseSymSystem assemble(Formulation f, const SpaceTimeMesh& mesh, const ObservationDomain& domain,
                         const Coefficients& coeffs, const AssemblyOptions& opt, const ObservationFn& y_obs) {
  switch (f) {
    case Formulation::Mixed: return assemble_mixed(mesh, domain, coeffs, opt, y_obs);
    case Formulation::Stabilized: return assemble_stabilized(mesh, domain, coeffs, opt, y_obs);
    case Formulation::LambdaZero: return assemble_lambda_zero(mesh, domain, coeffs, opt, y_obs);
    case Formulation::Source: return assemble_source(mesh, domain, coeffs, opt, y_obs);
  }
  throw InvalidArgument("unknown formulation");
}

namespace {

std::array<int, 2> locate(const SpaceTimeMesh& mesh, double x, double t) {
  const int i = std::clamp(static_cast<int>(std::floor(x / mesh.dx())), 0, mesh.nx() - 1);
  const int j = std::clamp(static_cast<int>(std::floor(t / mesh.dt())), 0, mesh.nt() - 1);
  return {i, j};
}

BfsShape combine(const std::array<BfsShape, 16>& bfs, const std::array<int, 16>& dofs, const Vec& v) {
  BfsShape s;
  for (int k = 0; k < 16; ++k) {
    if (dofs[k] < 0) continue;
    const double c = v[dofs[k]];
    s.v += c * bfs[k].v;
    s.dx += c * bfs[k].dx;
    s.dt += c * bfs[k].dt;
    s.dxx += c * bfs[k].dxx;
    s.dtt += c * bfs[k].dtt;
    s.dxt += c * bfs[k].dxt;
  }
  return s;
}

double combine_q1(const std::array<Q1Shape, 4>& q1, const std::array<int, 4>& dofs, const Vec& v) {
  double s = 0.0;
  for (int k = 0; k < 4; ++k)
    if (dofs[k] >= 0) s += v[dofs[k]] * q1[k].v;
  return s;
}

}  // namespace

BfsShape eval_bfs_field(const SpaceTimeMesh& mesh, const DofMap& map, const Vec& coeffs, double x, double t) {
  const auto [i, j] = locate(mesh, x, t);
  const auto bfs = eval_bfs(mesh.dx(), mesh.dt(), (x - mesh.x(i)) / mesh.dx(), (t - mesh.t(j)) / mesh.dt());
  return combine(bfs, map.element_dofs<16>(i, j), coeffs);
}

double eval_q1_field(const SpaceTimeMesh& mesh, const DofMap& map, const Vec& coeffs, double x, double t) {
  const auto [i, j] = locate(mesh, x, t);
  const auto q1 = eval_q1(mesh.dx(), mesh.dt(), (x - mesh.x(i)) / mesh.dx(), (t - mesh.t(j)) / mesh.dt());
  return combine_q1(q1, map.element_dofs<4>(i, j), coeffs);
}

FieldNorms measure(const SparseSymSystem& sys, const ObservationDomain& domain, const Vec& y, const Vec& lambda,
                   const Vec& f, const ObservationFn& exact, int order, const GridFn& exact_grid) {
  const SpaceTimeMesh& mesh = sys.mesh;
  const QuadratureRule rule = tensor_gauss(order);
  const double dx = mesh.dx(), dt = mesh.dt();
  std::vector<double> grid;
  const std::size_t gx = static_cast<std::size_t>(mesh.nx()) * order;
  if (exact_grid) {
    std::vector<double> xs, ts;
    for (int i = 0; i < mesh.nx(); ++i)
      for (int a = 0; a < order; ++a) xs.push_back(mesh.x(i) + rule.line.points[a] * dx);
    for (int j = 0; j < mesh.nt(); ++j)
      for (int b = 0; b < order; ++b) ts.push_back(mesh.t(j) + rule.line.points[b] * dt);
    grid = exact_grid(xs, ts);
  }
  const bool have_l = lambda.size() == sys.lmap.size() && sys.lmap.size() > 0;
  const bool have_f = f.size() > 0 && f.size() == sys.fmap.size();
  double eQ = 0, yQ = 0, eq = 0, yq = 0, hq = 0, nl = 0, nlam = 0, nf = 0;
  for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
    const auto [i, j] = mesh.element_ij(e);
    const double x0 = mesh.x(i), t0 = mesh.t(j);
    const auto zd = sys.zmap.element_dofs<16>(i, j);
    for (std::size_t qi = 0; qi < rule.points.size(); ++qi) {
      const auto& qp = rule.points[qi];
      const double x = x0 + qp.xi * dx, t = t0 + qp.tau * dt, w = qp.weight * dx * dt;
      const auto bfs = eval_bfs(dx, dt, qp.xi, qp.tau);
      const BfsShape yh = combine(bfs, zd, y);
      double ex = 0.0;
      if (!grid.empty()) {
        const std::size_t a = qi % order, b = qi / order;
        ex = grid[(static_cast<std::size_t>(j) * order + b) * gx + static_cast<std::size_t>(i) * order + a];
      } else if (exact) {
        ex = exact(x, t);
      }
      eQ += w * (ex - yh.v) * (ex - yh.v);
      yQ += w * ex * ex;
      const double Ly = apply_L(sys.coeffs, {yh.dtt, yh.dx, yh.dxx, yh.v}, x, t);
      nl += w * Ly * Ly;
      if (have_l) {
        double lv;
        if (sys.multiplier_is_bfs())
          lv = combine(bfs, sys.lmap.element_dofs<16>(i, j), lambda).v;
        else
          lv = combine_q1(eval_q1(dx, dt, qp.xi, qp.tau), sys.lmap.element_dofs<4>(i, j), lambda);
        nlam += w * lv * lv;
      }
      if (have_f) {
        const double fv = combine_q1(eval_q1(dx, dt, qp.xi, qp.tau), sys.fmap.element_dofs<4>(i, j), f);
        nf += w * fv * fv;
      }
    }
    const bool whole = !grid.empty() && domain.rect_inside(x0, mesh.x(i + 1), t0, mesh.t(j + 1));
    const auto pts = indicator_weights(domain, mesh, e, rule, sys.options.cut_depth);
    for (std::size_t qi = 0; qi < pts.size(); ++qi) {
      const auto& op = pts[qi];
      const auto bfs = eval_bfs(dx, dt, (op.x - x0) / dx, (op.t - t0) / dt);
      const double yh = combine(bfs, zd, y).v;
      double ex = 0.0;
      if (whole)
        ex = grid[(static_cast<std::size_t>(j) * order + qi / order) * gx + static_cast<std::size_t>(i) * order + qi % order];
      else if (exact)
        ex = exact(op.x, op.t);
      eq += op.weight * (ex - yh) * (ex - yh);
      yq += op.weight * ex * ex;
      hq += op.weight * yh * yh;
    }
  }
  FieldNorms out;
  out.err_QT = std::sqrt(eQ);
  out.exact_QT = std::sqrt(yQ);
  out.err_qT = std::sqrt(eq);
  out.exact_qT = std::sqrt(yq);
  out.yh_qT = std::sqrt(hq);
  out.normL = std::sqrt(nl);
  out.norm_lambda = std::sqrt(nlam);
  out.norm_f = std::sqrt(nf);
  return out;
}

double observed_norm(const SparseSymSystem& sys, const ObservationDomain& domain, const Vec& y) {
  const SpaceTimeMesh& mesh = sys.mesh;
  const QuadratureRule rule = tensor_gauss(sys.options.quad_order);
  double s = 0.0;
  for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
    const auto [i, j] = mesh.element_ij(e);
    const auto zd = sys.zmap.element_dofs<16>(i, j);
    for (const auto& op : indicator_weights(domain, mesh, e, rule, sys.options.cut_depth)) {
      const auto bfs = eval_bfs(mesh.dx(), mesh.dt(), (op.x - mesh.x(i)) / mesh.dx(), (op.t - mesh.t(j)) / mesh.dt());
      const double v = combine(bfs, zd, y).v;
      s += op.weight * v * v;
    }
  }
  return std::sqrt(s);
}

}  // namespace stw
