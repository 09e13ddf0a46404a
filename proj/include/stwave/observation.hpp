#pragma once

#include <cstddef>
#include <string>
#include <variant>
#include <vector>

#include "stwave/elements.hpp"
#include "stwave/mesh.hpp"

namespace stw {

/// omega x (0, T) with omega = (a, b).
struct CylinderStrip {
  double a = 0.1;
  double b = 0.3;
};

/// |x - s*t - c0| < w.
struct ObliqueSlab {
  double c0 = 0.2;
  double slope = 0.3;
  double half_width = 0.1;
};

struct SlabRect {
  double x0, x1, t0, t1;
};

/// Union of open rectangles.
struct SlabUnion {
  std::vector<SlabRect> rects;
};

/// Indicator sampled on a regular (nx+1) x (nt+1) grid covering [0, 1] x [0, T];
/// a point is inside when the nearest sample is nonzero.
struct Tabulated {
  int nx = 0;
  int nt = 0;
  double horizon = 1.0;
  std::vector<unsigned char> inside;
};

class ObservationDomain {
 public:
  using Kind = std::variant<CylinderStrip, ObliqueSlab, SlabUnion, Tabulated>;

  explicit ObservationDomain(Kind kind);

  static ObservationDomain cylinder(double a, double b);
  /// The oblique slab |x - 3t/(5T) - 1/5| < 1/10.
  static ObservationDomain oblique_reference(double horizon);
  /// Four slabs sweeping across the domain over the quarters of (0, T).
  static ObservationDomain slab_union_reference(double horizon);

  const Kind& kind() const { return kind_; }
  std::string name() const;

  /// Open-set membership; rejects points outside [0, 1] x [0, horizon] with InvalidArgument
  /// when a horizon is given (horizon <= 0 skips the time check).
  bool contains(double x, double t) const;

  /// True when every point of the closed rectangle lies inside / outside the open set.
  /// Conservative: returns false when unsure.
  bool rect_inside(double x0, double x1, double t0, double t1) const;
  bool rect_outside(double x0, double x1, double t0, double t1) const;

 private:
  Kind kind_;
};

bool membership(const ObservationDomain& domain, double x, double t);

/// Checked variant: throws when (x, t) is outside [0, 1] x [0, horizon].
bool membership(const ObservationDomain& domain, double x, double t, double horizon);

struct WeightedPoint {
  double x;
  double t;
  double weight;
};

/// Quadrature over q_T intersected with element e, in physical coordinates.
///
/// Fully inside: plain rule scaled to the element. Fully outside: empty.
/// Cut: dyadic subdivision `refine_depth` times, keeping only subcells that are inside.
std::vector<WeightedPoint> indicator_weights(const ObservationDomain& domain, const SpaceTimeMesh& mesh,
                                             std::size_t element, const QuadratureRule& rule, int refine_depth);

/// Sum of indicator weights over all elements.
double observed_area(const ObservationDomain& domain, const SpaceTimeMesh& mesh, const QuadratureRule& rule,
                     int refine_depth);

}  // namespace stw
