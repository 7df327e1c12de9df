#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "proxcat/errors.hpp"
#include "proxcat/geometry.hpp"
#include "proxcat/rates.hpp"
#include "proxcat/resolvents.hpp"
#include "proxcat/rng.hpp"
#include "proxcat/sampling.hpp"

namespace proxcat {

using SelfMap = std::function<Point(const Point&)>;

/// One member of a family, as a plain self-map.
inline SelfMap family_member(const Space& space, const ResolventFamily& family,
                             double gamma) {
  if (!(gamma > 0.0)) throw invalid_input("family_member: gamma must be > 0");
  return [&space, family, gamma](const Point& x) { return apply(space, family, gamma, x); };
}

inline SelfMap map_as_selfmap(const Space& space, const NonexpansiveMap& map) {
  return [&space, map](const Point& x) { return apply_map(space, map, x); };
}

/// Cross-mapping weights for a (lambda, mu) pair, parameterized by
/// delta in (0, min(lambda, mu)] so that (1-alpha) lambda = (1-beta) mu =
/// delta holds exactly by construction.
struct MutualParams {
  double lambda = 1.0;
  double mu = 1.0;
  double delta = 1.0;
  double alpha = 0.0;
  double beta = 0.0;

  static MutualParams from_delta(double lambda, double mu, double delta) {
    if (!(lambda > 0.0) || !(mu > 0.0))
      throw invalid_input("MutualParams: lambda and mu must be > 0");
    if (!(delta > 0.0) || delta > std::min(lambda, mu))
      throw invalid_input("MutualParams: delta must lie in (0, min(lambda, mu)]");
    return {lambda, mu, delta, 1.0 - delta / lambda, 1.0 - delta / mu};
  }
};

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

struct ViolationWitness {
  std::size_t sample_index = 0;
  double lhs = 0.0;  // raw left side of the violated comparison
  double rhs = 0.0;  // raw right side
  std::vector<std::pair<std::string, std::string>> fields;
};

/// Result of a sampled inequality check. `max_violation` is the worst
/// scale-normalized excess (lhs - rhs) / (1 + |lhs| + |rhs|); a check
/// passes iff that stays at or below `tolerance`. With zero applicable
/// samples the check passes vacuously and `max_violation` is -infinity.
struct ViolationReport {
  std::string check_name;
  double max_violation = -std::numeric_limits<double>::infinity();
  double tolerance = 0.0;
  std::size_t checked = 0;
  bool pass = true;
  ViolationWitness worst;
};

namespace detail {

inline double scaled_violation(double lhs, double rhs) {
  return (lhs - rhs) / (1.0 + std::abs(lhs) + std::abs(rhs));
}

struct LhsRhs {
  double lhs;
  double rhs;
};

/// Scan all sample indices, reduce by max violation with lowest-index
/// tie-break, then replay the argmax substream to build the witness. The
/// per-index substreams make the reduction independent of evaluation order.
template <class EvalFn, class WitnessFn>
ViolationReport reduce_check(std::string name, std::size_t count, double tol,
                             EvalFn&& eval, WitnessFn&& witness) {
  ViolationReport report;
  report.check_name = std::move(name);
  report.tolerance = tol;
  bool have = false;
  double best = 0.0;
  std::size_t best_index = 0;
  for (std::size_t i = 0; i < count; ++i) {
    const std::optional<LhsRhs> v = eval(i);
    if (!v) continue;
    ++report.checked;
    const double s = scaled_violation(v->lhs, v->rhs);
    if (!have || s > best) {
      have = true;
      best = s;
      best_index = i;
    }
  }
  if (have) {
    report.max_violation = best;
    report.worst.sample_index = best_index;
    const auto v = eval(best_index);
    report.worst.lhs = v->lhs;
    report.worst.rhs = v->rhs;
    report.worst.fields = witness(best_index);
    report.pass = best <= tol;
  }
  return report;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Mutual firm nonexpansiveness:  d(Tx, Uy) <= d((1-a)x (+) aTx, (1-b)y (+) bUy)
// whenever (1-a) lambda = (1-b) mu
// ---------------------------------------------------------------------------

inline ViolationReport check_mutual_fne(const Space& space, const SelfMap& T,
                                        const SelfMap& U, double lambda, double mu,
                                        const SampleConfig& cfg, double tol) {
  if (!(lambda > 0.0) || !(mu > 0.0))
    throw invalid_input("check_mutual_fne: lambda and mu must be > 0");
  validate_config(space, cfg);
  const auto draw = [&](std::size_t i) {
    SplitMix64 rng(substream_seed(cfg.seed, i));
    Point x = sample_in_ball(space, cfg.base, cfg.radius, rng);
    Point y = sample_in_ball(space, cfg.base, cfg.radius, rng);
    const double delta = rng.next_unit_pos() * std::min(lambda, mu);
    return std::tuple<Point, Point, MutualParams>(
        std::move(x), std::move(y), MutualParams::from_delta(lambda, mu, delta));
  };
  const auto eval = [&](std::size_t i) -> std::optional<detail::LhsRhs> {
    const auto [x, y, mp] = draw(i);
    const Point tx = T(x), uy = U(y);
    const double lhs = dist(space, tx, uy);
    const double rhs = dist(space, combine(space, x, tx, mp.alpha),
                            combine(space, y, uy, mp.beta));
    return detail::LhsRhs{lhs, rhs};
  };
  const auto witness = [&](std::size_t i) {
    const auto [x, y, mp] = draw(i);
    return std::vector<std::pair<std::string, std::string>>{
        {"x", format_point(x)},
        {"y", format_point(y)},
        {"delta", format_double(mp.delta)},
        {"alpha", format_double(mp.alpha)},
        {"beta", format_double(mp.beta)},
        {"Tx", format_point(T(x))},
        {"Uy", format_point(U(y))}};
  };
  return detail::reduce_check("mutual_fne", cfg.count, tol, eval, witness);
}

// ---------------------------------------------------------------------------
// Mutual (P2):  <TxUy, yUy>/mu <= <TxUy, xTx>/lambda
// ---------------------------------------------------------------------------

inline ViolationReport check_mutual_p2(const Space& space, const SelfMap& T,
                                       const SelfMap& U, double lambda, double mu,
                                       const SampleConfig& cfg, double tol) {
  if (!(lambda > 0.0) || !(mu > 0.0))
    throw invalid_input("check_mutual_p2: lambda and mu must be > 0");
  validate_config(space, cfg);
  const auto draw = [&](std::size_t i) {
    SplitMix64 rng(substream_seed(cfg.seed, i));
    Point x = sample_in_ball(space, cfg.base, cfg.radius, rng);
    Point y = sample_in_ball(space, cfg.base, cfg.radius, rng);
    return std::pair<Point, Point>(std::move(x), std::move(y));
  };
  const auto eval = [&](std::size_t i) -> std::optional<detail::LhsRhs> {
    const auto [x, y] = draw(i);
    const Point tx = T(x), uy = U(y);
    const double lhs = quasi_inner(space, tx, uy, y, uy) / mu;
    const double rhs = quasi_inner(space, tx, uy, x, tx) / lambda;
    return detail::LhsRhs{lhs, rhs};
  };
  const auto witness = [&](std::size_t i) {
    const auto [x, y] = draw(i);
    return std::vector<std::pair<std::string, std::string>>{
        {"x", format_point(x)},
        {"y", format_point(y)},
        {"Tx", format_point(T(x))},
        {"Uy", format_point(U(y))}};
  };
  return detail::reduce_check("mutual_p2", cfg.count, tol, eval, witness);
}

// ---------------------------------------------------------------------------
// Resolvent identity:  T_{(1-t)gamma}((1-t)x (+) t T_gamma x) = T_gamma x
// ---------------------------------------------------------------------------

/// t is sampled from [0, 1 - 1e-6]; the family is indexed by gamma > 0, so
/// the t = 1 endpoint (which would invoke T_0) stays out of range.
inline ViolationReport check_resolvent_identity(const Space& space,
                                                const ResolventFamily& family,
                                                double gamma, const SampleConfig& cfg,
                                                double tol) {
  if (!(gamma > 0.0)) throw invalid_input("check_resolvent_identity: gamma must be > 0");
  validate_config(space, cfg);
  const auto draw = [&](std::size_t i) {
    SplitMix64 rng(substream_seed(cfg.seed, i));
    Point x = sample_in_ball(space, cfg.base, cfg.radius, rng);
    const double t = (1.0 - 1e-6) * rng.next_unit();
    return std::pair<Point, double>(std::move(x), t);
  };
  const auto eval = [&](std::size_t i) -> std::optional<detail::LhsRhs> {
    const auto [x, t] = draw(i);
    const Point z = apply(space, family, gamma, x);
    const Point w = combine(space, x, z, t);
    const Point z2 = apply(space, family, (1.0 - t) * gamma, w);
    return detail::LhsRhs{dist(space, z2, z), 0.0};
  };
  const auto witness = [&](std::size_t i) {
    const auto [x, t] = draw(i);
    const Point z = apply(space, family, gamma, x);
    const Point z2 = apply(space, family, (1.0 - t) * gamma, combine(space, x, z, t));
    return std::vector<std::pair<std::string, std::string>>{
        {"x", format_point(x)},
        {"t", format_double(t)},
        {"T_gamma x", format_point(z)},
        {"T_(1-t)gamma w", format_point(z2)}};
  };
  return detail::reduce_check("resolvent_identity", cfg.count, tol, eval, witness);
}

// ---------------------------------------------------------------------------
// Nonexpansiveness:  d(Tx, Ty) <= d(x, y)
// ---------------------------------------------------------------------------

inline ViolationReport check_nonexpansive(const Space& space, const SelfMap& T,
                                          const SampleConfig& cfg, double tol) {
  validate_config(space, cfg);
  const auto draw = [&](std::size_t i) {
    SplitMix64 rng(substream_seed(cfg.seed, i));
    Point x = sample_in_ball(space, cfg.base, cfg.radius, rng);
    Point y = sample_in_ball(space, cfg.base, cfg.radius, rng);
    return std::pair<Point, Point>(std::move(x), std::move(y));
  };
  const auto eval = [&](std::size_t i) -> std::optional<detail::LhsRhs> {
    const auto [x, y] = draw(i);
    return detail::LhsRhs{dist(space, T(x), T(y)), dist(space, x, y)};
  };
  const auto witness = [&](std::size_t i) {
    const auto [x, y] = draw(i);
    return std::vector<std::pair<std::string, std::string>>{
        {"x", format_point(x)},
        {"y", format_point(y)},
        {"Tx", format_point(T(x))},
        {"Ty", format_point(T(y))}};
  };
  return detail::reduce_check("nonexpansive", cfg.count, tol, eval, witness);
}

// ---------------------------------------------------------------------------
// Uniform (P2) with modulus scale * phi on the ball B(center, b):
//   d(Tx,Ty) >= eps  =>  <TxTy, yTy> <= <TxTy, xTx> - scale * phi(eps)
// ---------------------------------------------------------------------------

/// The sampling ball is B(center, b), the set the modulus is claimed on;
/// cfg contributes only its seed and count here.
inline std::vector<std::pair<double, ViolationReport>> check_uniform_p2(
    const Space& space, const SelfMap& T, const Point& center, double b,
    const Modulus& phi, double scale, const SampleConfig& cfg, double tol,
    const std::vector<double>& eps_list) {
  if (!(b > 0.0)) throw invalid_input("check_uniform_p2: b must be > 0");
  validate_point(space, center);
  if (cfg.count < 1) throw invalid_input("check_uniform_p2: count must be >= 1");
  for (double eps : eps_list)
    if (!(eps > 0.0)) throw invalid_input("check_uniform_p2: eps must be > 0");
  const auto draw = [&](std::size_t i) {
    SplitMix64 rng(substream_seed(cfg.seed, i));
    Point x = sample_in_ball(space, center, b, rng);
    Point y = sample_in_ball(space, center, b, rng);
    return std::pair<Point, Point>(std::move(x), std::move(y));
  };
  std::vector<std::pair<double, ViolationReport>> out;
  out.reserve(eps_list.size());
  for (double eps : eps_list) {
    const double slack = scale * phi(eps);
    const auto eval = [&](std::size_t i) -> std::optional<detail::LhsRhs> {
      const auto [x, y] = draw(i);
      const Point tx = T(x), ty = T(y);
      if (dist(space, tx, ty) < eps) return std::nullopt;
      const double lhs = quasi_inner(space, tx, ty, y, ty) + slack;
      const double rhs = quasi_inner(space, tx, ty, x, tx);
      return detail::LhsRhs{lhs, rhs};
    };
    const auto witness = [&](std::size_t i) {
      const auto [x, y] = draw(i);
      return std::vector<std::pair<std::string, std::string>>{
          {"x", format_point(x)},
          {"y", format_point(y)},
          {"Tx", format_point(T(x))},
          {"Ty", format_point(T(y))},
          {"eps", format_double(eps)},
          {"scale*phi(eps)", format_double(slack)}};
    };
    out.emplace_back(eps, detail::reduce_check("uniform_p2", cfg.count, tol, eval, witness));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Squared-distance growth along a mutually-(P2) pair with lambda <= mu:
//   d^2(x, Ux) >= d^2(x, Tx) + d^2(Tx, Ux)
// ---------------------------------------------------------------------------

inline ViolationReport check_pythagoras(const Space& space, const SelfMap& T,
                                        const SelfMap& U, const SampleConfig& cfg,
                                        double tol) {
  validate_config(space, cfg);
  const auto draw = [&](std::size_t i) {
    SplitMix64 rng(substream_seed(cfg.seed, i));
    return sample_in_ball(space, cfg.base, cfg.radius, rng);
  };
  const auto eval = [&](std::size_t i) -> std::optional<detail::LhsRhs> {
    const Point x = draw(i);
    const Point tx = T(x), ux = U(x);
    const double a = dist(space, x, tx);
    const double c = dist(space, tx, ux);
    const double h = dist(space, x, ux);
    return detail::LhsRhs{a * a + c * c, h * h};
  };
  const auto witness = [&](std::size_t i) {
    const Point x = draw(i);
    return std::vector<std::pair<std::string, std::string>>{
        {"x", format_point(x)},
        {"Tx", format_point(T(x))},
        {"Ux", format_point(U(x))}};
  };
  return detail::reduce_check("pythagoras", cfg.count, tol, eval, witness);
}

// ---------------------------------------------------------------------------
// Modulus lower bound at a fixed point z of T:
//   d(Tx, z) >= eps  =>  scale * phi(eps) <= <Txz, xTx>
// ---------------------------------------------------------------------------

inline std::vector<std::pair<double, ViolationReport>> check_uniqueness_modulus(
    const Space& space, const SelfMap& T, const Point& z, const SampleConfig& cfg,
    const Modulus& phi, double scale, const std::vector<double>& eps_list,
    double tol = 1e-8) {
  validate_config(space, cfg);
  if (dist(space, T(z), z) > 1e-8)
    throw invalid_input("check_uniqueness_modulus: z is not a fixed point of T");
  for (double eps : eps_list)
    if (!(eps > 0.0)) throw invalid_input("check_uniqueness_modulus: eps must be > 0");
  const auto draw = [&](std::size_t i) {
    SplitMix64 rng(substream_seed(cfg.seed, i));
    return sample_in_ball(space, cfg.base, cfg.radius, rng);
  };
  std::vector<std::pair<double, ViolationReport>> out;
  out.reserve(eps_list.size());
  for (double eps : eps_list) {
    const double slack = scale * phi(eps);
    const auto eval = [&](std::size_t i) -> std::optional<detail::LhsRhs> {
      const Point x = draw(i);
      const Point tx = T(x);
      if (dist(space, tx, z) < eps) return std::nullopt;
      return detail::LhsRhs{slack, quasi_inner(space, tx, z, x, tx)};
    };
    const auto witness = [&](std::size_t i) {
      const Point x = draw(i);
      return std::vector<std::pair<std::string, std::string>>{
          {"x", format_point(x)},
          {"Tx", format_point(T(x))},
          {"z", format_point(z)},
          {"eps", format_double(eps)}};
    };
    out.emplace_back(eps,
                     detail::reduce_check("uniqueness_modulus", cfg.count, tol, eval, witness));
  }
  return out;
}

}  // namespace proxcat
