#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <functional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "proxcat/errors.hpp"

namespace proxcat {

// ---------------------------------------------------------------------------
// Points
// ---------------------------------------------------------------------------

/// Point of n-dimensional Euclidean space.
struct EuclideanPoint {
  std::vector<double> coords;
};

/// Point of the Poincare upper half-plane; requires y > 0.
struct HalfPlanePoint {
  double x = 0.0;
  double y = 1.0;
};

/// Point of a metric spider (k rays glued at a hub): `radius` along ray
/// `ray`. Every point with radius 0 is the hub, whatever its ray index.
struct SpiderPoint {
  int ray = 0;
  double radius = 0.0;
};

using Point = std::variant<EuclideanPoint, HalfPlanePoint, SpiderPoint>;

inline Point euclidean_point(std::vector<double> coords) {
  return EuclideanPoint{std::move(coords)};
}

inline Point half_plane_point(double x, double y) {
  if (!(y > 0.0)) throw domain_error("half-plane point requires y > 0");
  return HalfPlanePoint{x, y};
}

inline Point spider_point(int ray, double radius) {
  if (ray < 0) throw invalid_input("spider point requires ray >= 0");
  if (!(radius >= 0.0)) throw invalid_input("spider point requires radius >= 0");
  return SpiderPoint{ray, radius};
}

/// Fixed-format rendering used by reports and CSV witnesses; locale
/// independent, round-trips doubles exactly.
inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

/// Shortest round-trip rendering; used in human-facing labels.
inline std::string format_compact(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline std::string format_point(const Point& p) {
  if (const auto* e = std::get_if<EuclideanPoint>(&p)) {
    std::string out = "(";
    for (std::size_t i = 0; i < e->coords.size(); ++i) {
      if (i) out += ", ";
      out += format_double(e->coords[i]);
    }
    return out + ")";
  }
  if (const auto* h = std::get_if<HalfPlanePoint>(&p)) {
    return "H(" + format_double(h->x) + ", " + format_double(h->y) + ")";
  }
  const auto& s = std::get<SpiderPoint>(p);
  return "S(ray=" + std::to_string(s.ray) + ", r=" + format_double(s.radius) + ")";
}

// ---------------------------------------------------------------------------
// Spaces
// ---------------------------------------------------------------------------

/// One of the three concrete CAT(0) models (Euclidean n-space, Poincare
/// upper half-plane, k-spider), or a user-supplied plug-in space given by
/// its distance and geodesic-combination maps.
class Space {
 public:
  enum class Kind { euclidean, half_plane, spider, custom };

  using DistFn = std::function<double(const Point&, const Point&)>;
  using CombineFn = std::function<Point(const Point&, const Point&, double)>;

  static Space euclidean(std::size_t dim) {
    if (dim < 1) throw invalid_input("Space::euclidean: dim must be >= 1");
    Space s;
    s.kind_ = Kind::euclidean;
    s.dim_ = dim;
    return s;
  }

  static Space half_plane() {
    Space s;
    s.kind_ = Kind::half_plane;
    return s;
  }

  static Space spider(int ray_count) {
    // two rays degenerate to a line; require a genuine branch point
    if (ray_count < 3) throw invalid_input("Space::spider: ray_count must be >= 3");
    Space s;
    s.kind_ = Kind::spider;
    s.rays_ = ray_count;
    return s;
  }

  /// Plug-in hook for any uniquely geodesic CAT(0) space. The callables
  /// take full responsibility for validating their own points.
  static Space custom(DistFn dist, CombineFn combine) {
    if (!dist || !combine) throw invalid_input("Space::custom: callables must be nonempty");
    Space s;
    s.kind_ = Kind::custom;
    s.custom_dist_ = std::move(dist);
    s.custom_combine_ = std::move(combine);
    return s;
  }

  Kind kind() const { return kind_; }
  std::size_t dim() const { return dim_; }
  int ray_count() const { return rays_; }
  const DistFn& custom_dist() const { return custom_dist_; }
  const CombineFn& custom_combine() const { return custom_combine_; }

 private:
  Space() = default;
  Kind kind_ = Kind::euclidean;
  std::size_t dim_ = 1;
  int rays_ = 3;
  DistFn custom_dist_;
  CombineFn custom_combine_;
};

inline void validate_point(const Space& space, const Point& p) {
  switch (space.kind()) {
    case Space::Kind::euclidean: {
      const auto* e = std::get_if<EuclideanPoint>(&p);
      if (!e) throw invalid_input("point kind does not match Euclidean space");
      if (e->coords.size() != space.dim())
        throw invalid_input("Euclidean point has wrong dimension");
      return;
    }
    case Space::Kind::half_plane: {
      const auto* h = std::get_if<HalfPlanePoint>(&p);
      if (!h) throw invalid_input("point kind does not match half-plane space");
      if (!(h->y > 0.0)) throw domain_error("half-plane point requires y > 0");
      return;
    }
    case Space::Kind::spider: {
      const auto* s = std::get_if<SpiderPoint>(&p);
      if (!s) throw invalid_input("point kind does not match spider space");
      if (s->ray < 0 || s->ray >= space.ray_count())
        throw invalid_input("spider point ray index out of range");
      if (!(s->radius >= 0.0)) throw invalid_input("spider point requires radius >= 0");
      return;
    }
    case Space::Kind::custom:
      return;  // delegated to the user callables
  }
}

/// Zero point of a Euclidean space.
inline Point origin(const Space& space) {
  if (space.kind() != Space::Kind::euclidean)
    throw invalid_input("origin: only defined for Euclidean spaces");
  return EuclideanPoint{std::vector<double>(space.dim(), 0.0)};
}

namespace detail {

inline double sq(double v) { return v * v; }

/// arccosh(1 + u) for u >= 0, stable near u = 0.
inline double acosh1p(double u) {
  return std::log1p(u + std::sqrt(u * (u + 2.0)));
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Distance
// ---------------------------------------------------------------------------

inline double dist(const Space& space, const Point& p, const Point& q) {
  if (space.kind() == Space::Kind::custom) return space.custom_dist()(p, q);
  validate_point(space, p);
  validate_point(space, q);
  switch (space.kind()) {
    case Space::Kind::euclidean: {
      const auto& a = std::get<EuclideanPoint>(p).coords;
      const auto& b = std::get<EuclideanPoint>(q).coords;
      double s = 0.0;
      for (std::size_t i = 0; i < a.size(); ++i) s += detail::sq(a[i] - b[i]);
      return std::sqrt(s);
    }
    case Space::Kind::half_plane: {
      const auto& a = std::get<HalfPlanePoint>(p);
      const auto& b = std::get<HalfPlanePoint>(q);
      const double u = (detail::sq(a.x - b.x) + detail::sq(a.y - b.y)) / (2.0 * a.y * b.y);
      return detail::acosh1p(u);
    }
    case Space::Kind::spider: {
      const auto& a = std::get<SpiderPoint>(p);
      const auto& b = std::get<SpiderPoint>(q);
      const bool same_branch = a.radius == 0.0 || b.radius == 0.0 || a.ray == b.ray;
      return same_branch ? std::abs(a.radius - b.radius) : a.radius + b.radius;
    }
    default:
      throw invalid_input("dist: unsupported space kind");
  }
}

// ---------------------------------------------------------------------------
// Geodesic combination: (1-t) p (+) t q
// ---------------------------------------------------------------------------

inline Point combine(const Space& space, const Point& p, const Point& q, double t) {
  if (!(t >= 0.0 && t <= 1.0)) throw invalid_input("combine: t must lie in [0,1]");
  if (space.kind() == Space::Kind::custom) return space.custom_combine()(p, q, t);
  validate_point(space, p);
  validate_point(space, q);
  if (t == 0.0) return p;
  if (t == 1.0) return q;
  switch (space.kind()) {
    case Space::Kind::euclidean: {
      const auto& a = std::get<EuclideanPoint>(p).coords;
      const auto& b = std::get<EuclideanPoint>(q).coords;
      std::vector<double> out(a.size());
      for (std::size_t i = 0; i < a.size(); ++i) out[i] = (1.0 - t) * a[i] + t * b[i];
      return EuclideanPoint{std::move(out)};
    }
    case Space::Kind::half_plane: {
      const auto& a = std::get<HalfPlanePoint>(p);
      const auto& b = std::get<HalfPlanePoint>(q);
      if (std::abs(a.x - b.x) < 1e-12) {
        // vertical geodesic; arclength is the log of the ordinate
        const double ly = (1.0 - t) * std::log(a.y) + t * std::log(b.y);
        return HalfPlanePoint{a.x, std::exp(ly)};
      }
      // semicircle centered on the boundary axis through both points
      const double c =
          (b.x * b.x + b.y * b.y - a.x * a.x - a.y * a.y) / (2.0 * (b.x - a.x));
      const double r = std::hypot(a.x - c, a.y);
      const double phi_a = std::atan2(a.y, a.x - c);  // in (0, pi)
      const double phi_b = std::atan2(b.y, b.x - c);
      // hyperbolic arclength along the arc: s(phi) = log tan(phi/2)
      const double sa = std::log(std::tan(0.5 * phi_a));
      const double sb = std::log(std::tan(0.5 * phi_b));
      const double s = (1.0 - t) * sa + t * sb;
      const double phi = 2.0 * std::atan(std::exp(s));
      return HalfPlanePoint{c + r * std::cos(phi), r * std::sin(phi)};
    }
    case Space::Kind::spider: {
      const auto& a = std::get<SpiderPoint>(p);
      const auto& b = std::get<SpiderPoint>(q);
      const bool same_branch = a.radius == 0.0 || b.radius == 0.0 || a.ray == b.ray;
      if (same_branch) {
        const int ray = a.radius == 0.0 ? b.ray : a.ray;
        return SpiderPoint{ray, (1.0 - t) * a.radius + t * b.radius};
      }
      // path runs through the hub
      const double m = t * (a.radius + b.radius);
      if (m <= a.radius) return SpiderPoint{a.ray, a.radius - m};
      return SpiderPoint{b.ray, m - a.radius};
    }
    default:
      throw invalid_input("combine: unsupported space kind");
  }
}

// ---------------------------------------------------------------------------
// Quasi-linearization (metric inner-product surrogate)
// ---------------------------------------------------------------------------

/// <xy, uv> = (d^2(x,v) + d^2(y,u) - d^2(x,u) - d^2(y,v)) / 2.
/// Reduces to the dot product <x-y, u-v> in Euclidean spaces.
inline double quasi_inner(const Space& space, const Point& x, const Point& y,
                          const Point& u, const Point& v) {
  const double dxv = dist(space, x, v);
  const double dyu = dist(space, y, u);
  const double dxu = dist(space, x, u);
  const double dyv = dist(space, y, v);
  return 0.5 * (dxv * dxv + dyu * dyu - dxu * dxu - dyv * dyv);
}

// ---------------------------------------------------------------------------
// Projection onto a geodesic segment
// ---------------------------------------------------------------------------

struct SegmentProjection {
  double t = 0.0;
  Point point;
};

namespace detail {

inline int ternary_iterations(double range, double tol) {
  if (tol >= range) return 0;
  const double k = std::ceil(std::log(range / tol) / std::log(1.5));
  return static_cast<int>(std::min(k, 200.0));
}

}  // namespace detail

/// Nearest point of the segment [a,b] to x, found by ternary search on
/// t -> d(x, (1-t)a (+) tb). That map is convex along geodesics in CAT(0)
/// spaces, hence unimodal on [0,1]. |t - t_opt| <= tol on return.
inline SegmentProjection project_to_segment(const Space& space, const Point& x,
                                            const Point& a, const Point& b, double tol) {
  if (!(tol > 0.0)) throw invalid_input("project_to_segment: tol must be > 0");
  double lo = 0.0, hi = 1.0;
  const int iters = detail::ternary_iterations(1.0, tol);
  for (int i = 0; i < iters; ++i) {
    const double m1 = lo + (hi - lo) / 3.0;
    const double m2 = hi - (hi - lo) / 3.0;
    const double f1 = dist(space, x, combine(space, a, b, m1));
    const double f2 = dist(space, x, combine(space, a, b, m2));
    if (f1 <= f2)
      hi = m2;
    else
      lo = m1;
  }
  const double t = 0.5 * (lo + hi);
  return {t, combine(space, a, b, t)};
}

/// Tolerance-based point equality; floating-point results are never
/// compared exactly.
inline bool points_close(const Space& space, const Point& p, const Point& q,
                         double tol = 1e-9) {
  return dist(space, p, q) <= tol;
}

}  // namespace proxcat
