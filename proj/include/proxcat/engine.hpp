#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "proxcat/checkers.hpp"
#include "proxcat/errors.hpp"
#include "proxcat/geometry.hpp"
#include "proxcat/rates.hpp"
#include "proxcat/resolvents.hpp"

namespace proxcat {

// ---------------------------------------------------------------------------
// Step schedules
// ---------------------------------------------------------------------------

class StepSchedule {
 public:
  enum class Kind { constant, harmonic, explicit_list };

  static StepSchedule constant(double c) {
    if (!(c > 0.0)) throw invalid_input("StepSchedule::constant: c must be > 0");
    StepSchedule s;
    s.kind_ = Kind::constant;
    s.c_ = c;
    return s;
  }

  /// gamma_n = 1/(n+1).
  static StepSchedule harmonic() {
    StepSchedule s;
    s.kind_ = Kind::harmonic;
    return s;
  }

  static StepSchedule explicit_list(std::vector<double> values) {
    if (values.empty()) throw invalid_input("StepSchedule: explicit list must be nonempty");
    for (double v : values)
      if (!(v > 0.0)) throw invalid_input("StepSchedule: step sizes must be > 0");
    StepSchedule s;
    s.kind_ = Kind::explicit_list;
    s.values_ = std::move(values);
    return s;
  }

  double gamma(std::size_t n) const {
    switch (kind_) {
      case Kind::constant:
        return c_;
      case Kind::harmonic:
        return 1.0 / (static_cast<double>(n) + 1.0);
      case Kind::explicit_list:
        if (n >= values_.size())
          throw insufficient_schedule(
              "StepSchedule: explicit schedule exhausted at step " + std::to_string(n),
              total());
        return values_[n];
    }
    throw invalid_input("StepSchedule: bad kind");
  }

  Kind kind() const { return kind_; }
  double constant_value() const { return c_; }
  const std::vector<double>& values() const { return values_; }
  std::size_t length() const { return values_.size(); }

  double total() const {
    return std::accumulate(values_.begin(), values_.end(), 0.0);
  }

 private:
  StepSchedule() = default;
  Kind kind_ = Kind::constant;
  double c_ = 1.0;
  std::vector<double> values_;
};

/// Divergence modulus for a schedule: sum_{n<=theta(x)} gamma_n >= x.
///   constant c  ->  theta(x) = max(0, ceil(x/c) - 1)
///   harmonic    ->  theta(x) = ceil(e^x)   (partial sums dominate ln(N+2))
///   explicit    ->  least N with prefix_sum(N) >= x, by scan
inline DivergenceModulus theta_for_schedule(const StepSchedule& schedule) {
  switch (schedule.kind()) {
    case StepSchedule::Kind::constant: {
      const double c = schedule.constant_value();
      return DivergenceModulus::from_function(
          [c](double x) -> std::uint64_t {
            if (!(x > 0.0)) return 0;
            const std::uint64_t k = detail::ceil_index(x / c);
            return k == 0 ? 0 : k - 1;
          },
          "constant(" + format_double(c) + ")");
    }
    case StepSchedule::Kind::harmonic:
      return DivergenceModulus::from_function(
          [](double x) -> std::uint64_t {
            if (!(x > 0.0)) return 0;
            if (x > 43.0) throw numeric_failure("theta(harmonic): ceil(e^x) exceeds 64 bits");
            return detail::ceil_index(std::exp(x));
          },
          "harmonic");
    case StepSchedule::Kind::explicit_list: {
      std::vector<double> prefix(schedule.length());
      double acc = 0.0;
      for (std::size_t i = 0; i < schedule.length(); ++i) {
        acc += schedule.values()[i];
        prefix[i] = acc;
      }
      const double total = acc;
      return DivergenceModulus::from_function(
          [prefix = std::move(prefix), total](double x) -> std::uint64_t {
            if (!(x > 0.0)) return 0;
            for (std::size_t i = 0; i < prefix.size(); ++i)
              if (prefix[i] >= x) return i;
            throw insufficient_schedule(
                "theta(explicit): partial sums only reach " + format_double(total), total);
          },
          "explicit");
    }
  }
  throw invalid_input("theta_for_schedule: bad schedule kind");
}

// ---------------------------------------------------------------------------
// Proximal point iteration x_{n+1} = T_{gamma_n} x_n
// ---------------------------------------------------------------------------

struct PpaTrace {
  std::size_t steps = 0;
  std::vector<double> gammas;      // gamma_n, n = 0..steps-1
  std::vector<double> step_sizes;  // d(x_n, x_{n+1}), n = 0..steps-1
  std::vector<double> dist_to_p;   // d(x_n, p), n = 0..steps (empty without p)
  std::vector<Point> points;       // x_0..x_steps (empty when not recorded)
  std::optional<Point> p;
  Point final_point;

  /// Largest recorded distance to p; the radius bound the rate formulas use.
  double max_dist_to_p() const {
    double b = 0.0;
    for (double d : dist_to_p) b = std::max(b, d);
    return b;
  }
};

struct RunPpaOptions {
  bool record_points = true;  // disable for very long runs
};

inline PpaTrace run_ppa(const Space& space, const ResolventFamily& family,
                        const StepSchedule& schedule, const Point& x0, std::size_t steps,
                        const std::optional<Point>& p = std::nullopt,
                        const RunPpaOptions& options = {}) {
  if (steps < 1) throw invalid_input("run_ppa: steps must be >= 1");
  validate_point(space, x0);
  if (p) validate_point(space, *p);
  PpaTrace trace;
  trace.steps = steps;
  trace.p = p;
  trace.gammas.reserve(steps);
  trace.step_sizes.reserve(steps);
  if (p) {
    trace.dist_to_p.reserve(steps + 1);
    trace.dist_to_p.push_back(dist(space, x0, *p));
  }
  if (options.record_points) {
    trace.points.reserve(steps + 1);
    trace.points.push_back(x0);
  }
  Point x = x0;
  for (std::size_t n = 0; n < steps; ++n) {
    const double gamma = schedule.gamma(n);
    Point next = apply(space, family, gamma, x);
    trace.gammas.push_back(gamma);
    trace.step_sizes.push_back(dist(space, x, next));
    if (p) trace.dist_to_p.push_back(dist(space, next, *p));
    if (options.record_points) trace.points.push_back(next);
    x = std::move(next);
  }
  trace.final_point = std::move(x);
  return trace;
}

// ---------------------------------------------------------------------------
// Resolvent curve gamma -> T_gamma x
// ---------------------------------------------------------------------------

struct CurveSample {
  double gamma = 0.0;
  Point point;
  double d_from_base = 0.0;  // d(x, T_gamma x)
};

inline std::vector<CurveSample> sample_curve(const Space& space,
                                             const ResolventFamily& family,
                                             const Point& x,
                                             const std::vector<double>& gammas) {
  if (gammas.empty()) throw invalid_input("sample_curve: gamma list must be nonempty");
  validate_point(space, x);
  for (std::size_t i = 0; i < gammas.size(); ++i) {
    if (!(gammas[i] > 0.0)) throw invalid_input("sample_curve: gammas must be > 0");
    if (i > 0 && !(gammas[i] > gammas[i - 1]))
      throw invalid_input("sample_curve: gamma list must be strictly increasing");
  }
  std::vector<CurveSample> out;
  out.reserve(gammas.size());
  for (double gamma : gammas) {
    Point y = apply(space, family, gamma, x);
    const double d = dist(space, x, y);
    out.push_back({gamma, std::move(y), d});
  }
  return out;
}

/// Geometric grid {start * factor^k : k = 0..count-1}; curve experiments
/// default to this shape so a short list covers orders of magnitude.
inline std::vector<double> geometric_gammas(double start, double factor, std::size_t count) {
  if (!(start > 0.0) || !(factor > 1.0) || count < 1)
    throw invalid_input("geometric_gammas: need start > 0, factor > 1, count >= 1");
  std::vector<double> out(count);
  double g = start;
  for (auto& v : out) {
    v = g;
    g *= factor;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Nearest-point projection onto an analytic fixed-point set
// ---------------------------------------------------------------------------

inline Point project_fixed_set(const Space& space, const FixedSetDescriptor& fixed,
                               const Point& x) {
  if (std::holds_alternative<UnknownSet>(fixed))
    throw unsupported_set("project_fixed_set: fixed-point set has no analytic description");
  if (std::holds_alternative<EmptySet>(fixed))
    throw unsupported_set("project_fixed_set: fixed-point set is empty");
  return project_onto(space, std::get<ConvexSetDescriptor>(fixed), x);
}

// ---------------------------------------------------------------------------
// Rate verification
// ---------------------------------------------------------------------------

struct RateCheck {
  double eps = 0.0;
  std::uint64_t bound = 0;                     // first index the rate covers
  bool pass = false;                           // d(x_n, p) <= eps + 1e-9 for n >= bound
  std::optional<std::size_t> first_violation;  // earliest offending index
  double margin = 0.0;                         // eps - max_{n >= bound} d(x_n, p)
};

/// Check d(x_n, p) <= eps for every recorded n >= theta((b+1)^2/phi(eps)) + 1.
inline std::vector<RateCheck> verify_ppa_rate(const PpaTrace& trace,
                                              const DivergenceModulus& theta, double b,
                                              const Modulus& phi,
                                              const std::vector<double>& eps_list) {
  if (trace.dist_to_p.empty())
    throw invalid_input("verify_ppa_rate: trace was recorded without a reference point");
  if (trace.dist_to_p.front() > b + 1e-9)
    throw invalid_input("verify_ppa_rate: x0 lies outside the ball of radius b around p");
  std::vector<RateCheck> out;
  out.reserve(eps_list.size());
  for (double eps : eps_list) {
    RateCheck rc;
    rc.eps = eps;
    rc.bound = ppa_rate_bound(theta, b, phi, eps);
    if (rc.bound >= trace.dist_to_p.size())
      throw insufficient_sequence(
          "verify_ppa_rate: trace too short; need at least " +
              std::to_string(rc.bound + 1) + " entries for eps = " + format_double(eps),
          static_cast<std::size_t>(rc.bound) + 1);
    double worst = 0.0;
    rc.pass = true;
    for (std::size_t n = static_cast<std::size_t>(rc.bound); n < trace.dist_to_p.size(); ++n) {
      worst = std::max(worst, trace.dist_to_p[n]);
      if (trace.dist_to_p[n] > eps + 1e-9 && !rc.first_violation) {
        rc.first_violation = n;
        rc.pass = false;
      }
    }
    rc.margin = eps - worst;
    out.push_back(rc);
  }
  return out;
}

struct CurveLimitCheck {
  bool pass = false;
  double distance = 0.0;
};

/// d(T_{gamma_max} x, q) <= eps for the claimed limit q. Meaningful only
/// when the final grid entry is large for the family at hand.
inline CurveLimitCheck verify_curve_limit(const Space& space,
                                          const std::vector<CurveSample>& samples,
                                          const Point& limit, double eps) {
  if (samples.empty()) throw invalid_input("verify_curve_limit: no curve samples");
  const double d = dist(space, samples.back().point, limit);
  return {d <= eps, d};
}

/// Sampled check that every family member maps the ball B(p, b) into
/// itself; the rate theorem needs that invariance before it applies.
inline ViolationReport check_ball_invariance(const Space& space,
                                             const ResolventFamily& family,
                                             const std::vector<double>& gammas,
                                             const Point& p, double b,
                                             const SampleConfig& cfg, double tol) {
  if (!(b > 0.0)) throw invalid_input("check_ball_invariance: b must be > 0");
  if (gammas.empty()) throw invalid_input("check_ball_invariance: gamma list is empty");
  validate_point(space, p);
  const auto draw = [&](std::size_t i) {
    SplitMix64 rng(substream_seed(cfg.seed, i));
    return sample_in_ball(space, p, b, rng);
  };
  const auto eval = [&](std::size_t i) -> std::optional<detail::LhsRhs> {
    const std::size_t g = i % gammas.size();
    const Point x = draw(i / gammas.size());
    return detail::LhsRhs{dist(space, apply(space, family, gammas[g], x), p), b};
  };
  const auto witness = [&](std::size_t i) {
    const std::size_t g = i % gammas.size();
    const Point x = draw(i / gammas.size());
    return std::vector<std::pair<std::string, std::string>>{
        {"x", format_point(x)},
        {"gamma", format_double(gammas[g])},
        {"Tx", format_point(apply(space, family, gammas[g], x))}};
  };
  return detail::reduce_check("ball_invariance", cfg.count * gammas.size(), tol, eval,
                              witness);
}

}  // namespace proxcat
