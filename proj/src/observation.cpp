#include "stwave/observation.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "stwave/error.hpp"

namespace stw {

namespace {

constexpr double kTol = 1e-12;

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

bool tab_sample(const Tabulated& tab, double x, double t) {
  const int i = std::clamp(static_cast<int>(std::lround(x * tab.nx)), 0, tab.nx);
  const int j = std::clamp(static_cast<int>(std::lround(t / tab.horizon * tab.nt)), 0, tab.nt);
  return tab.inside[static_cast<std::size_t>(i) + static_cast<std::size_t>(tab.nx + 1) * j] != 0;
}

// Range of sample values whose nearest-neighbour cells meet the rectangle: {any inside, any outside}.
std::pair<bool, bool> tab_range(const Tabulated& tab, double x0, double x1, double t0, double t1) {
  const double hx = 1.0 / tab.nx, ht = tab.horizon / tab.nt;
  const int i0 = std::clamp(static_cast<int>(std::floor(x0 / hx + 0.5 + kTol)), 0, tab.nx);
  const int i1 = std::clamp(static_cast<int>(std::ceil(x1 / hx - 0.5 - kTol)), 0, tab.nx);
  const int j0 = std::clamp(static_cast<int>(std::floor(t0 / ht + 0.5 + kTol)), 0, tab.nt);
  const int j1 = std::clamp(static_cast<int>(std::ceil(t1 / ht - 0.5 - kTol)), 0, tab.nt);
  bool any_in = false, any_out = false;
  for (int j = j0; j <= j1; ++j)
    for (int i = i0; i <= i1; ++i) {
      if (tab.inside[static_cast<std::size_t>(i) + static_cast<std::size_t>(tab.nx + 1) * j])
        any_in = true;
      else
        any_out = true;
    }
  return {any_in, any_out};
}

void collect(const ObservationDomain& dom, const QuadratureRule& rule, double x0, double x1, double t0, double t1,
             int depth, std::vector<WeightedPoint>& out) {
  if (dom.rect_outside(x0, x1, t0, t1)) return;
  if (dom.rect_inside(x0, x1, t0, t1)) {
    const double area = (x1 - x0) * (t1 - t0);
    for (const auto& q : rule.points)
      out.push_back({x0 + q.xi * (x1 - x0), t0 + q.tau * (t1 - t0), q.weight * area});
    return;
  }
  if (depth == 0) return;
  const double xm = 0.5 * (x0 + x1), tm = 0.5 * (t0 + t1);
  collect(dom, rule, x0, xm, t0, tm, depth - 1, out);
  collect(dom, rule, xm, x1, t0, tm, depth - 1, out);
  collect(dom, rule, x0, xm, tm, t1, depth - 1, out);
  collect(dom, rule, xm, x1, tm, t1, depth - 1, out);
}

}  // namespace

ObservationDomain::ObservationDomain(Kind kind) : kind_(std::move(kind)) {
  std::visit(overloaded{
                 [](const CylinderStrip& c) {
                   require(0.0 <= c.a && c.a < c.b && c.b <= 1.0, "cylinder strip needs 0 <= a < b <= 1");
                 },
                 [](const ObliqueSlab& s) {
                   require(s.half_width > 0.0 && std::isfinite(s.slope) && std::isfinite(s.c0),
                           "oblique slab needs a positive half width");
                 },
                 [](const SlabUnion& u) {
                   require(!u.rects.empty(), "slab union needs at least one rectangle");
                   for (const auto& r : u.rects)
                     require(r.x0 < r.x1 && r.t0 < r.t1, "slab union rectangle must have x0 < x1 and t0 < t1");
                 },
                 [](const Tabulated& tab) {
                   require(tab.nx >= 1 && tab.nt >= 1 && tab.horizon > 0.0, "tabulated domain needs a valid grid");
                   require(tab.inside.size() == static_cast<std::size_t>(tab.nx + 1) * (tab.nt + 1),
                           "tabulated domain: sample count does not match the grid");
                 },
             },
             kind_);
}

ObservationDomain ObservationDomain::cylinder(double a, double b) { return ObservationDomain(CylinderStrip{a, b}); }

ObservationDomain ObservationDomain::oblique_reference(double horizon) {
  require(horizon > 0.0, "oblique slab: horizon must be positive");
  return ObservationDomain(ObliqueSlab{0.2, 3.0 / (5.0 * horizon), 0.1});
}

ObservationDomain ObservationDomain::slab_union_reference(double horizon) {
  require(horizon > 0.0, "slab union: horizon must be positive");
  const double q = horizon / 4.0;
  return ObservationDomain(SlabUnion{{{0.1, 0.2, 0.0, q}, {0.5, 0.7, q, 2 * q}, {0.2, 0.4, 2 * q, 3 * q},
                                      {0.7, 0.9, 3 * q, 4 * q}}});
}

std::string ObservationDomain::name() const {
  std::ostringstream os;
  std::visit(overloaded{
                 [&](const CylinderStrip& c) { os << "cylinder(" << c.a << "," << c.b << ")"; },
                 [&](const ObliqueSlab& s) { os << "oblique(" << s.c0 << "," << s.slope << "," << s.half_width << ")"; },
                 [&](const SlabUnion& u) { os << "slabs(" << u.rects.size() << ")"; },
                 [&](const Tabulated& t) { os << "tabulated(" << t.nx << "x" << t.nt << ")"; },
             },
             kind_);
  return os.str();
}

bool ObservationDomain::contains(double x, double t) const {
  return std::visit(overloaded{
                        [&](const CylinderStrip& c) { return c.a < x && x < c.b; },
                        [&](const ObliqueSlab& s) { return std::abs(x - s.slope * t - s.c0) < s.half_width; },
                        [&](const SlabUnion& u) {
                          for (const auto& r : u.rects)
                            if (r.x0 < x && x < r.x1 && r.t0 < t && t < r.t1) return true;
                          return false;
                        },
                        [&](const Tabulated& tab) { return tab_sample(tab, x, t); },
                    },
                    kind_);
}

bool ObservationDomain::rect_inside(double x0, double x1, double t0, double t1) const {
  return std::visit(overloaded{
                        [&](const CylinderStrip& c) { return c.a <= x0 + kTol && x1 <= c.b + kTol; },
                        [&](const ObliqueSlab& s) {
                          const double u0 = x0 - s.c0 - std::max(s.slope * t0, s.slope * t1);
                          const double u1 = x1 - s.c0 - std::min(s.slope * t0, s.slope * t1);
                          return -s.half_width <= u0 + kTol && u1 <= s.half_width + kTol;
                        },
                        [&](const SlabUnion& u) {
                          for (const auto& r : u.rects)
                            if (r.x0 <= x0 + kTol && x1 <= r.x1 + kTol && r.t0 <= t0 + kTol && t1 <= r.t1 + kTol)
                              return true;
                          return false;
                        },
                        [&](const Tabulated& tab) {
                          const auto [in, out] = tab_range(tab, x0, x1, t0, t1);
                          return in && !out;
                        },
                    },
                    kind_);
}

bool ObservationDomain::rect_outside(double x0, double x1, double t0, double t1) const {
  return std::visit(overloaded{
                        [&](const CylinderStrip& c) { return x1 <= c.a + kTol || x0 >= c.b - kTol; },
                        [&](const ObliqueSlab& s) {
                          const double u0 = x0 - s.c0 - std::max(s.slope * t0, s.slope * t1);
                          const double u1 = x1 - s.c0 - std::min(s.slope * t0, s.slope * t1);
                          return u1 <= -s.half_width + kTol || u0 >= s.half_width - kTol;
                        },
                        [&](const SlabUnion& u) {
                          for (const auto& r : u.rects)
                            if (x0 < r.x1 - kTol && r.x0 < x1 - kTol && t0 < r.t1 - kTol && r.t0 < t1 - kTol)
                              return false;
                          return true;
                        },
                        [&](const Tabulated& tab) {
                          const auto [in, out] = tab_range(tab, x0, x1, t0, t1);
                          return out && !in;
                        },
                    },
                    kind_);
}

bool membership(const ObservationDomain& domain, double x, double t) { return domain.contains(x, t); }

bool membership(const ObservationDomain& domain, double x, double t, double horizon) {
  require(x >= 0.0 && x <= 1.0, "membership: x outside [0, 1]");
  require(t >= 0.0 && t <= horizon, "membership: t outside [0, T]");
  return domain.contains(x, t);
}

std::vector<WeightedPoint> indicator_weights(const ObservationDomain& domain, const SpaceTimeMesh& mesh,
                                             std::size_t element, const QuadratureRule& rule, int refine_depth) {
  require(element < mesh.num_elements(), "indicator_weights: element index out of range");
  require(refine_depth >= 0 && refine_depth <= 6, "indicator_weights: refine_depth must be in [0, 6]");
  const auto [i, j] = mesh.element_ij(element);
  std::vector<WeightedPoint> out;
  collect(domain, rule, mesh.x(i), mesh.x(i + 1), mesh.t(j), mesh.t(j + 1), refine_depth, out);
  return out;
}

double observed_area(const ObservationDomain& domain, const SpaceTimeMesh& mesh, const QuadratureRule& rule,
                     int refine_depth) {
  double s = 0.0;
  for (std::size_t e = 0; e < mesh.num_elements(); ++e)
    for (const auto& p : indicator_weights(domain, mesh, e, rule, refine_depth)) s += p.weight;
  return s;
}

}  // namespace stw
