#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <vector>

#include "proxcat/errors.hpp"
#include "proxcat/geometry.hpp"
#include "proxcat/rng.hpp"

namespace proxcat {

/// Configuration of a sampled check: `count` points drawn from the closed
/// geodesic ball of the given radius around `base`, with per-sample
/// substreams derived from `seed`.
struct SampleConfig {
  std::uint64_t seed = 0;
  std::size_t count = 1;
  double radius = 1.0;
  Point base;
};

inline void validate_config(const Space& space, const SampleConfig& cfg) {
  if (cfg.count < 1) throw invalid_input("SampleConfig: count must be >= 1");
  if (!(cfg.radius > 0.0)) throw invalid_input("SampleConfig: radius must be > 0");
  validate_point(space, cfg.base);
}

namespace detail {

/// Point of the upper half-plane at hyperbolic distance s from `base` in
/// the direction selected by psi. Built from the vertical geodesic through
/// i, rotated around i by the elliptic Moebius map fixing i, then carried
/// to `base` by z -> x0 + y0 z.
inline Point half_plane_at(const HalfPlanePoint& base, double psi, double s) {
  const std::complex<double> z(0.0, std::exp(s));
  const double c = std::cos(0.5 * psi), sn = std::sin(0.5 * psi);
  const std::complex<double> w = (c * z + sn) / (-sn * z + c);
  const std::complex<double> out = base.x + base.y * w;
  return HalfPlanePoint{out.real(), std::max(out.imag(), 1e-300)};
}

}  // namespace detail

/// Draw one point of the closed ball B(base, radius); uniform direction,
/// with an exact per-space construction (no rejection).
inline Point sample_in_ball(const Space& space, const Point& base, double radius,
                            SplitMix64& rng) {
  switch (space.kind()) {
    case Space::Kind::euclidean: {
      const auto& b = std::get<EuclideanPoint>(base).coords;
      const std::size_t n = b.size();
      std::vector<double> dir(n);
      double norm2 = 0.0;
      for (auto& d : dir) {
        d = rng.next_gaussian();
        norm2 += d * d;
      }
      const double norm = std::sqrt(norm2);
      // radial CDF correction makes the draw uniform in the ball
      const double r = radius * std::pow(rng.next_unit(), 1.0 / static_cast<double>(n));
      std::vector<double> out(n);
      for (std::size_t i = 0; i < n; ++i)
        out[i] = b[i] + (norm > 0.0 ? r * dir[i] / norm : 0.0);
      return EuclideanPoint{std::move(out)};
    }
    case Space::Kind::half_plane: {
      const auto& b = std::get<HalfPlanePoint>(base);
      const double psi = rng.next_in(0.0, 6.283185307179586477);
      const double s = radius * rng.next_unit();
      return detail::half_plane_at(b, psi, s);
    }
    case Space::Kind::spider: {
      const auto& b = std::get<SpiderPoint>(base);
      const int ray = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(space.ray_count())));
      const double u = rng.next_unit();
      if (b.radius == 0.0) return SpiderPoint{ray, radius * u};
      const double budget = radius - b.radius;  // arclength available past the hub
      if (ray != b.ray && budget > 0.0) return SpiderPoint{ray, budget * u};
      return SpiderPoint{b.ray, std::max(0.0, b.radius + radius * (2.0 * u - 1.0))};
    }
    case Space::Kind::custom:
      throw invalid_input("sample_in_ball: custom spaces need caller-supplied samples");
  }
  throw invalid_input("sample_in_ball: unsupported space kind");
}

}  // namespace proxcat
