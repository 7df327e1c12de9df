#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "proxcat/errors.hpp"
#include "proxcat/geometry.hpp"

namespace proxcat {

// ---------------------------------------------------------------------------
// Convex sets with analytic nearest-point maps
// ---------------------------------------------------------------------------

struct SingletonSet {
  Point a;
};

struct SegmentSet {
  Point a;
  Point b;
};

/// Affine line {point + s * direction : s real} of a Euclidean space.
struct EuclideanLineSet {
  std::vector<double> point;
  std::vector<double> direction;
};

/// {(ray, r) : r_min <= r <= r_max} on a spider.
struct SpiderRaySegmentSet {
  int ray = 0;
  double r_min = 0.0;
  double r_max = 0.0;
};

using ConvexSetDescriptor =
    std::variant<SingletonSet, SegmentSet, EuclideanLineSet, SpiderRaySegmentSet>;

struct EmptySet {};
struct UnknownSet {};

/// Fixed-point set of a family: an analytic convex description when one is
/// available, otherwise Empty or Unknown.
using FixedSetDescriptor = std::variant<ConvexSetDescriptor, EmptySet, UnknownSet>;

namespace detail {

inline std::vector<double> euclidean_coords(const Space& space, const Point& p) {
  validate_point(space, p);
  return std::get<EuclideanPoint>(p).coords;
}

constexpr double kProjectionTol = 1e-12;

}  // namespace detail

/// Nearest point of the described set. Euclidean segments/lines and spider
/// ray segments use closed forms; everything else falls back to a certified
/// ternary search along the segment.
inline Point project_onto(const Space& space, const ConvexSetDescriptor& set,
                          const Point& x) {
  validate_point(space, x);
  if (const auto* s = std::get_if<SingletonSet>(&set)) {
    validate_point(space, s->a);
    return s->a;
  }
  if (const auto* s = std::get_if<SegmentSet>(&set)) {
    if (space.kind() == Space::Kind::euclidean) {
      const auto a = detail::euclidean_coords(space, s->a);
      const auto b = detail::euclidean_coords(space, s->b);
      const auto& xc = std::get<EuclideanPoint>(x).coords;
      double num = 0.0, den = 0.0;
      for (std::size_t i = 0; i < a.size(); ++i) {
        num += (xc[i] - a[i]) * (b[i] - a[i]);
        den += (b[i] - a[i]) * (b[i] - a[i]);
      }
      const double t = den > 0.0 ? std::clamp(num / den, 0.0, 1.0) : 0.0;
      return combine(space, s->a, s->b, t);
    }
    return project_to_segment(space, x, s->a, s->b, detail::kProjectionTol).point;
  }
  if (const auto* s = std::get_if<EuclideanLineSet>(&set)) {
    if (space.kind() != Space::Kind::euclidean)
      throw invalid_input("project_onto: affine line requires a Euclidean space");
    if (s->point.size() != space.dim() || s->direction.size() != space.dim())
      throw invalid_input("project_onto: line descriptor has wrong dimension");
    const auto& xc = std::get<EuclideanPoint>(x).coords;
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < xc.size(); ++i) {
      num += (xc[i] - s->point[i]) * s->direction[i];
      den += s->direction[i] * s->direction[i];
    }
    if (!(den > 0.0)) throw invalid_input("project_onto: line direction is zero");
    std::vector<double> out(xc.size());
    for (std::size_t i = 0; i < xc.size(); ++i)
      out[i] = s->point[i] + (num / den) * s->direction[i];
    return EuclideanPoint{std::move(out)};
  }
  const auto& s = std::get<SpiderRaySegmentSet>(set);
  if (space.kind() != Space::Kind::spider)
    throw invalid_input("project_onto: ray segment requires a spider space");
  if (s.ray < 0 || s.ray >= space.ray_count() || !(s.r_min >= 0.0) || s.r_max < s.r_min)
    throw invalid_input("project_onto: bad ray segment descriptor");
  const auto& sp = std::get<SpiderPoint>(x);
  const bool on_branch = sp.ray == s.ray || sp.radius == 0.0;
  // off the branch the distance is radius + r, smallest at the near end
  const double r = on_branch ? std::clamp(sp.radius, s.r_min, s.r_max) : s.r_min;
  return SpiderPoint{s.ray, r};
}

inline double dist_to_set(const Space& space, const ConvexSetDescriptor& set,
                          const Point& x) {
  return dist(space, x, project_onto(space, set, x));
}

/// Membership test at the library-wide point-equality tolerance.
inline bool set_contains(const Space& space, const ConvexSetDescriptor& set,
                         const Point& x, double tol = 1e-9) {
  return dist_to_set(space, set, x) <= tol;
}

// ---------------------------------------------------------------------------
// Nonexpansive maps
// ---------------------------------------------------------------------------

struct IdentityMap {};
struct NegationMap {};
struct ConstantMap {
  Point a;
};
/// Plane rotation around the origin; Euclidean dim 2 only.
struct RotationMap {
  double angle = 0.0;
};
struct ProjectionMap {
  ConvexSetDescriptor set;
};

using NonexpansiveMap =
    std::variant<IdentityMap, NegationMap, ConstantMap, RotationMap, ProjectionMap>;

inline Point apply_map(const Space& space, const NonexpansiveMap& map, const Point& x) {
  validate_point(space, x);
  if (std::holds_alternative<IdentityMap>(map)) return x;
  if (std::holds_alternative<NegationMap>(map)) {
    if (space.kind() != Space::Kind::euclidean)
      throw invalid_input("apply_map: negation requires a Euclidean space");
    auto out = std::get<EuclideanPoint>(x).coords;
    for (auto& c : out) c = -c;
    return EuclideanPoint{std::move(out)};
  }
  if (const auto* m = std::get_if<ConstantMap>(&map)) {
    validate_point(space, m->a);
    return m->a;
  }
  if (const auto* m = std::get_if<RotationMap>(&map)) {
    if (space.kind() != Space::Kind::euclidean || space.dim() != 2)
      throw invalid_input("apply_map: rotation requires Euclidean dim 2");
    const auto& c = std::get<EuclideanPoint>(x).coords;
    const double cs = std::cos(m->angle), sn = std::sin(m->angle);
    return EuclideanPoint{{cs * c[0] - sn * c[1], sn * c[0] + cs * c[1]}};
  }
  return project_onto(space, std::get<ProjectionMap>(map).set, x);
}

// ---------------------------------------------------------------------------
// Dense linear algebra (small systems only)
// ---------------------------------------------------------------------------

namespace detail {

using Matrix = std::vector<std::vector<double>>;

inline void validate_square(const Matrix& m, const char* who) {
  if (m.empty()) throw invalid_input(std::string(who) + ": empty matrix");
  for (const auto& row : m)
    if (row.size() != m.size())
      throw invalid_input(std::string(who) + ": matrix must be square");
}

/// Gaussian elimination with partial pivoting.
inline std::vector<double> solve_linear(Matrix a, std::vector<double> b) {
  const std::size_t n = a.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
    if (a[piv][col] == 0.0) throw numeric_failure("solve_linear: singular matrix");
    std::swap(a[piv], a[col]);
    std::swap(b[piv], b[col]);
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = a[r][col] / a[col][col];
      for (std::size_t k = col; k < n; ++k) a[r][k] -= f * a[col][k];
      b[r] -= f * b[col];
    }
  }
  std::vector<double> x(n);
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t k = i + 1; k < n; ++k) s -= a[i][k] * x[k];
    x[i] = s / a[i][i];
  }
  return x;
}

/// Symmetry plus a Cholesky attempt on M + eps*I.
inline bool is_positive_semidefinite(const Matrix& m) {
  const std::size_t n = m.size();
  double scale = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) scale = std::max(scale, std::abs(m[i][j]));
  const double tol = 1e-12 * (1.0 + scale);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (std::abs(m[i][j] - m[j][i]) > tol) return false;
  Matrix l(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double s = m[i][j] + (i == j ? tol : 0.0);
      for (std::size_t k = 0; k < j; ++k) s -= l[i][k] * l[j][k];
      if (i == j) {
        if (s < 0.0) return false;
        l[i][i] = std::sqrt(s);
      } else {
        l[i][j] = l[j][j] > 0.0 ? s / l[j][j] : 0.0;
      }
    }
  }
  return true;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Resolvent-type families T_gamma
// ---------------------------------------------------------------------------

/// f = d^2(., a) / 2; T_gamma x = (1-s) x (+) s a with s = gamma/(1+gamma).
struct ProxQuadraticToPoint {
  Point a;
};

/// f = d(., a); T_gamma x moves min(gamma, d(x,a)) from x toward a.
struct ProxDistanceToPoint {
  Point a;
};

/// f = d^2(., C) / 2; T_gamma x = (1-s) x (+) s P_C x with s = gamma/(1+gamma).
struct ProxQuadraticToSet {
  ConvexSetDescriptor set;
};

/// f = (c/2) |x|^2 on a Euclidean space; T_gamma x = x / (1 + gamma c).
/// Identical to the resolvent of the linear operator c*I.
struct ProxScaledSquaredNorm {
  double c = 1.0;
};

/// Resolvent of order gamma of a nonexpansive map T: the unique fixed point
/// of z -> (1/(1+gamma)) x (+) (gamma/(1+gamma)) T z, found by contraction
/// iteration certified to `tol`.
struct ResolventOfNonexpansive {
  NonexpansiveMap map;
  double tol = 1e-10;
};

/// Resolvent (I + gamma M)^{-1} of a positive-semidefinite linear operator
/// on a Euclidean space.
struct ResolventOfMonotoneLinear {
  std::vector<std::vector<double>> matrix;
};

/// T_gamma x = (1 + gamma) x on a Euclidean space. Expansive negative-test
/// family: fails nonexpansiveness, the resolvent identity and every mutual
/// firm-nonexpansiveness check.
struct ExpansiveCounterexample {};

using ResolventFamily =
    std::variant<ProxQuadraticToPoint, ProxDistanceToPoint, ProxQuadraticToSet,
                 ProxScaledSquaredNorm, ResolventOfNonexpansive,
                 ResolventOfMonotoneLinear, ExpansiveCounterexample>;

inline std::string family_kind_name(const ResolventFamily& family) {
  struct Namer {
    std::string operator()(const ProxQuadraticToPoint&) const { return "prox_quadratic_to_point"; }
    std::string operator()(const ProxDistanceToPoint&) const { return "prox_distance_to_point"; }
    std::string operator()(const ProxQuadraticToSet&) const { return "prox_quadratic_to_set"; }
    std::string operator()(const ProxScaledSquaredNorm&) const { return "prox_scaled_squared_norm"; }
    std::string operator()(const ResolventOfNonexpansive&) const { return "resolvent_of_nonexpansive"; }
    std::string operator()(const ResolventOfMonotoneLinear&) const { return "resolvent_of_monotone_linear"; }
    std::string operator()(const ExpansiveCounterexample&) const { return "expansive_counterexample"; }
  };
  return std::visit(Namer{}, family);
}

inline void validate_family(const Space& space, const ResolventFamily& family) {
  if (const auto* f = std::get_if<ProxQuadraticToPoint>(&family)) {
    validate_point(space, f->a);
  } else if (const auto* f = std::get_if<ProxDistanceToPoint>(&family)) {
    validate_point(space, f->a);
  } else if (const auto* f = std::get_if<ProxScaledSquaredNorm>(&family)) {
    if (space.kind() != Space::Kind::euclidean)
      throw invalid_input("ProxScaledSquaredNorm requires a Euclidean space");
    if (!(f->c > 0.0)) throw invalid_input("ProxScaledSquaredNorm: c must be > 0");
  } else if (const auto* f = std::get_if<ResolventOfNonexpansive>(&family)) {
    if (!(f->tol > 0.0)) throw invalid_input("ResolventOfNonexpansive: tol must be > 0");
  } else if (const auto* f = std::get_if<ResolventOfMonotoneLinear>(&family)) {
    if (space.kind() != Space::Kind::euclidean)
      throw invalid_input("ResolventOfMonotoneLinear requires a Euclidean space");
    detail::validate_square(f->matrix, "ResolventOfMonotoneLinear");
    if (f->matrix.size() != space.dim())
      throw invalid_input("ResolventOfMonotoneLinear: matrix dimension mismatch");
    if (!detail::is_positive_semidefinite(f->matrix))
      throw invalid_input("ResolventOfMonotoneLinear: matrix must be positive semidefinite");
  } else if (std::holds_alternative<ExpansiveCounterexample>(family)) {
    if (space.kind() != Space::Kind::euclidean)
      throw invalid_input("ExpansiveCounterexample requires a Euclidean space");
  }
}

/// Resolvent of a nonexpansive map by contraction iteration. The map
/// z -> (1/(1+gamma)) x (+) (gamma/(1+gamma)) T z contracts with factor
/// q = gamma/(1+gamma); the loop stops once the step size guarantees
/// d(z, z_exact) <= tol, i.e. step <= tol (1-q)/q = tol/gamma.
inline Point resolvent_nonexp_iterate(const Space& space, const NonexpansiveMap& map,
                                      double gamma, const Point& x, double tol) {
  if (!(gamma > 0.0)) throw invalid_input("resolvent_nonexp_iterate: gamma must be > 0");
  if (!(tol > 0.0)) throw invalid_input("resolvent_nonexp_iterate: tol must be > 0");
  validate_point(space, x);
  const double q = gamma / (1.0 + gamma);
  const double threshold = tol / gamma;
  Point z = x;
  for (int iter = 0; iter < 1000000; ++iter) {
    Point zn = combine(space, x, apply_map(space, map, z), q);
    const double step = dist(space, z, zn);
    z = std::move(zn);
    if (step <= threshold) return z;
  }
  throw numeric_failure("resolvent_nonexp_iterate: no convergence within 1e6 iterations");
}

/// T_gamma x for every catalog family.
inline Point apply(const Space& space, const ResolventFamily& family, double gamma,
                   const Point& x) {
  if (!(gamma > 0.0)) throw invalid_input("apply: gamma must be > 0");
  validate_family(space, family);
  validate_point(space, x);
  if (const auto* f = std::get_if<ProxQuadraticToPoint>(&family)) {
    return combine(space, x, f->a, gamma / (1.0 + gamma));
  }
  if (const auto* f = std::get_if<ProxDistanceToPoint>(&family)) {
    const double d = dist(space, x, f->a);
    if (d <= gamma) return f->a;
    return combine(space, x, f->a, gamma / d);
  }
  if (const auto* f = std::get_if<ProxQuadraticToSet>(&family)) {
    const Point proj = project_onto(space, f->set, x);
    return combine(space, x, proj, gamma / (1.0 + gamma));
  }
  if (const auto* f = std::get_if<ProxScaledSquaredNorm>(&family)) {
    auto out = std::get<EuclideanPoint>(x).coords;
    for (auto& c : out) c /= 1.0 + gamma * f->c;
    return EuclideanPoint{std::move(out)};
  }
  if (const auto* f = std::get_if<ResolventOfNonexpansive>(&family)) {
    return resolvent_nonexp_iterate(space, f->map, gamma, x, f->tol);
  }
  if (const auto* f = std::get_if<ResolventOfMonotoneLinear>(&family)) {
    const auto& xc = std::get<EuclideanPoint>(x).coords;
    detail::Matrix a = f->matrix;
    for (std::size_t i = 0; i < a.size(); ++i) {
      for (auto& v : a[i]) v *= gamma;
      a[i][i] += 1.0;
    }
    return EuclideanPoint{detail::solve_linear(std::move(a), xc)};
  }
  auto out = std::get<EuclideanPoint>(x).coords;
  for (auto& c : out) c *= 1.0 + gamma;
  return EuclideanPoint{std::move(out)};
}

// ---------------------------------------------------------------------------
// Independent 1-D oracle for the prox catalog
// ---------------------------------------------------------------------------

/// Brute-force proximal point for the Prox* kinds: minimize
/// f(y) + d^2(x,y)/(2 gamma) over the geodesic from x to the anchor the
/// minimizer is known to lie on, by ternary search. Test-side oracle for
/// the closed forms in `apply`; the returned point is within `tol` of the
/// true minimizer.
inline Point prox_oracle_1d(const Space& space, const ResolventFamily& family,
                            double gamma, const Point& x, double tol) {
  if (!(gamma > 0.0)) throw invalid_input("prox_oracle_1d: gamma must be > 0");
  if (!(tol > 0.0)) throw invalid_input("prox_oracle_1d: tol must be > 0");
  validate_family(space, family);
  validate_point(space, x);

  Point anchor;
  std::function<double(const Point&)> f;
  if (const auto* fam = std::get_if<ProxQuadraticToPoint>(&family)) {
    anchor = fam->a;
    f = [&space, a = fam->a](const Point& y) {
      const double d = dist(space, y, a);
      return 0.5 * d * d;
    };
  } else if (const auto* fam = std::get_if<ProxDistanceToPoint>(&family)) {
    anchor = fam->a;
    f = [&space, a = fam->a](const Point& y) { return dist(space, y, a); };
  } else if (const auto* fam = std::get_if<ProxQuadraticToSet>(&family)) {
    anchor = project_onto(space, fam->set, x);
    f = [&space, set = fam->set](const Point& y) {
      const double d = dist_to_set(space, set, y);
      return 0.5 * d * d;
    };
  } else if (const auto* fam = std::get_if<ProxScaledSquaredNorm>(&family)) {
    anchor = origin(space);
    f = [&space, c = fam->c, o = origin(space)](const Point& y) {
      const double d = dist(space, y, o);
      return 0.5 * c * d * d;
    };
  } else {
    throw invalid_input("prox_oracle_1d: only the Prox* kinds have a 1-D oracle");
  }

  const double span = dist(space, x, anchor);
  if (span == 0.0) return x;
  const auto objective = [&](double t) {
    const Point y = combine(space, x, anchor, t);
    const double d = dist(space, x, y);
    return f(y) + d * d / (2.0 * gamma);
  };
  double lo = 0.0, hi = 1.0;
  const int iters = detail::ternary_iterations(1.0, tol / span);
  for (int i = 0; i < iters; ++i) {
    const double m1 = lo + (hi - lo) / 3.0;
    const double m2 = hi - (hi - lo) / 3.0;
    if (objective(m1) <= objective(m2))
      hi = m2;
    else
      lo = m1;
  }
  return combine(space, x, anchor, 0.5 * (lo + hi));
}

// ---------------------------------------------------------------------------
// Fixed-point sets
// ---------------------------------------------------------------------------

/// Analytic fixed-point set of a family. The description does not involve
/// gamma: any two members of a mutually-(P2) family share their fixed
/// points, so one descriptor serves the whole family.
inline FixedSetDescriptor fixed_set(const Space& space, const ResolventFamily& family) {
  validate_family(space, family);
  if (const auto* f = std::get_if<ProxQuadraticToPoint>(&family))
    return ConvexSetDescriptor{SingletonSet{f->a}};
  if (const auto* f = std::get_if<ProxDistanceToPoint>(&family))
    return ConvexSetDescriptor{SingletonSet{f->a}};
  if (const auto* f = std::get_if<ProxQuadraticToSet>(&family))
    return ConvexSetDescriptor{f->set};
  if (std::holds_alternative<ProxScaledSquaredNorm>(family))
    return ConvexSetDescriptor{SingletonSet{origin(space)}};
  if (const auto* f = std::get_if<ResolventOfNonexpansive>(&family)) {
    if (std::holds_alternative<IdentityMap>(f->map)) return UnknownSet{};  // whole space
    if (std::holds_alternative<NegationMap>(f->map))
      return ConvexSetDescriptor{SingletonSet{origin(space)}};
    if (const auto* m = std::get_if<ConstantMap>(&f->map))
      return ConvexSetDescriptor{SingletonSet{m->a}};
    if (const auto* m = std::get_if<RotationMap>(&f->map)) {
      if (std::cos(m->angle) > 1.0 - 1e-15 && std::abs(std::sin(m->angle)) < 1e-15)
        return UnknownSet{};  // identity rotation fixes the whole plane
      return ConvexSetDescriptor{SingletonSet{origin(space)}};
    }
    return ConvexSetDescriptor{std::get<ProjectionMap>(f->map).set};
  }
  if (const auto* f = std::get_if<ResolventOfMonotoneLinear>(&family)) {
    const auto& m = f->matrix;
    const std::size_t n = m.size();
    double scale = 0.0;
    for (const auto& row : m)
      for (double v : row) scale = std::max(scale, std::abs(v));
    const double tol = 1e-12 * (1.0 + scale);
    if (n == 1) {
      if (std::abs(m[0][0]) <= tol)
        return ConvexSetDescriptor{EuclideanLineSet{{0.0}, {1.0}}};  // whole line
      return ConvexSetDescriptor{SingletonSet{origin(space)}};
    }
    if (n == 2) {
      const double det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
      if (std::abs(det) > tol * (1.0 + scale))
        return ConvexSetDescriptor{SingletonSet{origin(space)}};
      if (scale <= tol) return UnknownSet{};  // zero operator fixes the whole plane
      // rank one: the kernel line, orthogonal to the larger row
      const double r0 = std::abs(m[0][0]) + std::abs(m[0][1]);
      const double r1 = std::abs(m[1][0]) + std::abs(m[1][1]);
      std::vector<double> dir = r0 >= r1 ? std::vector<double>{-m[0][1], m[0][0]}
                                         : std::vector<double>{m[1][1], -m[1][0]};
      return ConvexSetDescriptor{EuclideanLineSet{{0.0, 0.0}, std::move(dir)}};
    }
    return UnknownSet{};
  }
  return ConvexSetDescriptor{SingletonSet{origin(space)}};  // expansive counterexample
}

}  // namespace proxcat
