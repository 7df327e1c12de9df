#include <doctest.h>

#include <cmath>
#include <vector>

#include "proxcat/engine.hpp"

using namespace proxcat;

namespace {

Point eu(std::initializer_list<double> c) { return euclidean_point(std::vector<double>(c)); }

}  // namespace

TEST_CASE("ppa trace closed forms") {
  const auto e1 = Space::euclidean(1);

  SUBCASE("halving under the scaled-norm prox") {
    const auto trace = run_ppa(e1, ProxScaledSquaredNorm{1.0}, StepSchedule::constant(1.0),
                               eu({1}), 10, eu({0}));
    REQUIRE(trace.dist_to_p.size() == 11);
    for (std::size_t n = 0; n <= 10; ++n)
      CHECK(trace.dist_to_p[n] == doctest::Approx(std::pow(2.0, -double(n))).epsilon(1e-15));
    CHECK(trace.gammas == std::vector<double>(10, 1.0));
  }

  SUBCASE("distance prox walks unit steps then parks") {
    const auto trace = run_ppa(e1, ProxDistanceToPoint{eu({0})}, StepSchedule::constant(1.0),
                               eu({5}), 7, eu({0}));
    const std::vector<double> expect{5, 4, 3, 2, 1, 0, 0, 0};
    for (std::size_t n = 0; n < expect.size(); ++n)
      CHECK(trace.dist_to_p[n] == doctest::Approx(expect[n]));
  }

  SUBCASE("fixed starting point gives a constant trace") {
    const auto trace = run_ppa(e1, ProxQuadraticToPoint{eu({2})}, StepSchedule::harmonic(),
                               eu({2}), 5, eu({2}));
    for (double d : trace.dist_to_p) CHECK(d == 0.0);
    for (double s : trace.step_sizes) CHECK(s == 0.0);
  }

  SUBCASE("points can be left unrecorded") {
    RunPpaOptions opt;
    opt.record_points = false;
    const auto trace = run_ppa(e1, ProxScaledSquaredNorm{1.0}, StepSchedule::constant(1.0),
                               eu({1}), 4, eu({0}), opt);
    CHECK(trace.points.empty());
    CHECK(dist(e1, trace.final_point, eu({0.0625})) <= 1e-15);
  }
}

TEST_CASE("divergence moduli for the schedule catalog") {
  SUBCASE("constant") {
    const auto theta = theta_for_schedule(StepSchedule::constant(1.0));
    CHECK(theta(4.0) == 3);
    CHECK(theta(0.5) == 0);
    const auto theta_half = theta_for_schedule(StepSchedule::constant(0.5));
    CHECK(theta_half(4.0) == 7);
  }

  SUBCASE("harmonic: theta(x) = ceil(e^x), checked against partial sums") {
    const auto theta = theta_for_schedule(StepSchedule::harmonic());
    CHECK(theta(1.0) == 3);
    const auto sched = StepSchedule::harmonic();
    for (double x : {0.5, 1.0, 2.0, 3.0}) {
      const std::uint64_t n = theta(x);
      double sum = 0.0;
      for (std::uint64_t k = 0; k <= n; ++k) sum += sched.gamma(k);
      CHECK(sum >= x);
    }
  }

  SUBCASE("explicit: scan of the prefix sums") {
    const auto sched = StepSchedule::explicit_list({0.5, 0.25, 1.0, 0.25});
    const auto theta = theta_for_schedule(sched);
    CHECK(theta(0.5) == 0);
    CHECK(theta(0.76) == 2);
    CHECK(theta(2.0) == 3);
    try {
      theta(2.1);
      FAIL("expected insufficient_schedule");
    } catch (const insufficient_schedule& e) {
      CHECK(e.max_reachable == doctest::Approx(2.0));
    }
  }

  SUBCASE("every catalog theta witnesses divergence on a grid") {
    for (const auto& sched :
         {StepSchedule::constant(0.7), StepSchedule::explicit_list({1, 1, 1, 1, 1, 1, 1, 1})}) {
      const auto theta = theta_for_schedule(sched);
      for (double x : {0.1, 0.9, 1.7, 3.3, 5.0}) {
        const std::uint64_t n = theta(x);
        double sum = 0.0;
        for (std::uint64_t k = 0; k <= n; ++k) sum += sched.gamma(k);
        CHECK(sum >= x);
      }
    }
  }
}

TEST_CASE("curve samples") {
  const auto e1 = Space::euclidean(1);

  SUBCASE("resolvent of the negation: x/(1+2 gamma)") {
    const auto samples = sample_curve(e1, ResolventOfNonexpansive{NegationMap{}, 1e-12},
                                      eu({1}), {1.0, 2.0, 4.0});
    const std::vector<double> expect_pos{1.0 / 3.0, 1.0 / 5.0, 1.0 / 9.0};
    const std::vector<double> expect_d{2.0 / 3.0, 4.0 / 5.0, 8.0 / 9.0};
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(dist(e1, samples[i].point, eu({expect_pos[i]})) <= 1e-10);
      CHECK(samples[i].d_from_base == doctest::Approx(expect_d[i]).epsilon(1e-9));
    }
  }

  SUBCASE("base point in the fixed set keeps the curve constant") {
    const auto samples = sample_curve(e1, ProxQuadraticToPoint{eu({3})}, eu({3}),
                                      geometric_gammas(0.5, 2.0, 8));
    for (const auto& s : samples) CHECK(s.d_from_base == 0.0);
  }

  SUBCASE("displacement grows with gamma and satisfies the squared chain") {
    const auto h = Space::half_plane();
    const ResolventFamily fam = ProxQuadraticToPoint{half_plane_point(1.0, 2.0)};
    const Point x = half_plane_point(-0.5, 0.8);
    const auto samples = sample_curve(h, fam, x, geometric_gammas(0.25, 1.6, 16));
    for (std::size_t i = 1; i < samples.size(); ++i) {
      CHECK(samples[i].d_from_base >= samples[i - 1].d_from_base - 1e-8);
      const double a = samples[i - 1].d_from_base;
      const double c = dist(h, samples[i - 1].point, samples[i].point);
      const double b2 = samples[i].d_from_base * samples[i].d_from_base;
      CHECK(b2 + 1e-8 >= a * a + c * c);
    }
  }

  SUBCASE("grid must be strictly increasing") {
    CHECK_THROWS_AS(sample_curve(e1, ProxQuadraticToPoint{eu({0})}, eu({1}), {1.0, 1.0}),
                    invalid_input);
    CHECK_THROWS_AS(sample_curve(e1, ProxQuadraticToPoint{eu({0})}, eu({1}), {}), invalid_input);
  }
}

TEST_CASE("projection onto fixed-point sets") {
  const auto e2 = Space::euclidean(2);
  CHECK(dist(e2, project_fixed_set(e2, FixedSetDescriptor{ConvexSetDescriptor{SingletonSet{eu({2, 1})}}},
                                   eu({0, 0})),
             eu({2, 1})) == 0.0);
  CHECK(dist(e2,
             project_fixed_set(
                 e2, FixedSetDescriptor{ConvexSetDescriptor{EuclideanLineSet{{0, 0}, {1, 0}}}},
                 eu({1, 1})),
             eu({1, 0})) <= 1e-12);
  const auto sp = Space::spider(3);
  CHECK(dist(sp,
             project_fixed_set(
                 sp, FixedSetDescriptor{ConvexSetDescriptor{SpiderRaySegmentSet{1, 0.0, 2.0}}},
                 spider_point(2, 3.0)),
             spider_point(0, 0)) <= 1e-12);
  CHECK_THROWS_AS(project_fixed_set(e2, FixedSetDescriptor{UnknownSet{}}, eu({0, 0})),
                  unsupported_set);
  CHECK_THROWS_AS(project_fixed_set(e2, FixedSetDescriptor{EmptySet{}}, eu({0, 0})),
                  unsupported_set);
}

TEST_CASE("rate verification on the closed-form trace") {
  const auto e1 = Space::euclidean(1);
  const auto trace = run_ppa(e1, ProxScaledSquaredNorm{1.0}, StepSchedule::constant(1.0),
                             eu({1}), 40, eu({0}));
  const auto theta = theta_for_schedule(StepSchedule::constant(1.0));
  const Modulus phi = Modulus::quadratic(1.0);

  const auto checks = verify_ppa_rate(trace, theta, 1.0, phi, {1.0, 0.5});
  REQUIRE(checks.size() == 2);
  CHECK(checks[0].bound == 4);
  CHECK(checks[0].pass);
  CHECK(checks[0].margin > 0.9);  // 1 - 2^-4
  CHECK(checks[1].bound == 16);
  CHECK(checks[1].pass);
  CHECK_FALSE(checks[0].first_violation.has_value());

  // eps above the starting distance passes from n = 0
  const auto loose = verify_ppa_rate(trace, theta, 1.0, phi, {2.0});
  CHECK(loose[0].pass);
  CHECK(loose[0].bound == 1);

  // too-short traces are rejected with the required length
  try {
    verify_ppa_rate(trace, theta, 1.0, phi, {0.1});
    FAIL("expected insufficient_sequence");
  } catch (const insufficient_sequence& e) {
    CHECK(e.required_length == 401);
  }

  // x0 outside the stated ball is rejected
  CHECK_THROWS_AS(verify_ppa_rate(trace, theta, 0.5, phi, {1.0}), invalid_input);
}

TEST_CASE("curve limit checks") {
  const auto e2 = Space::euclidean(2);
  const ResolventFamily fam = ProxQuadraticToSet{EuclideanLineSet{{0, 0}, {1, 0}}};
  const Point x = eu({1, 1});
  const auto samples = sample_curve(e2, fam, x, geometric_gammas(1.0, 2.0, 11));
  const Point limit = project_fixed_set(e2, fixed_set(e2, fam), x);
  CHECK(dist(e2, limit, eu({1, 0})) <= 1e-12);
  const auto lc = verify_curve_limit(e2, samples, limit, 1e-3);
  CHECK(lc.pass);
  CHECK(lc.distance == doctest::Approx(1.0 / 1025.0).epsilon(1e-9));

  const auto toward_point = sample_curve(e2, ProxQuadraticToPoint{eu({2, 0})}, x,
                                         geometric_gammas(1.0, 2.0, 14));
  const Point a_limit = project_fixed_set(
      e2, fixed_set(e2, ResolventFamily{ProxQuadraticToPoint{eu({2, 0})}}), x);
  CHECK(verify_curve_limit(e2, toward_point, a_limit, 1e-3).pass);

  // base point already in the fixed set: limit reached immediately
  const auto settled = sample_curve(e2, fam, eu({3, 0}), {1.0, 2.0});
  CHECK(verify_curve_limit(e2, settled, eu({3, 0}), 1e-12).pass);
}

TEST_CASE("limit point beats every other fixed point by the squared chain") {
  const auto e2 = Space::euclidean(2);
  const ResolventFamily fam = ProxQuadraticToSet{EuclideanLineSet{{0, 0}, {1, 0}}};
  const Point x = eu({1, 1});
  const Point p = project_fixed_set(e2, fixed_set(e2, fam), x);
  const double dxp = dist(e2, x, p);
  SplitMix64 rng(77);
  for (int i = 0; i < 200; ++i) {
    // q ranges over the fixed line
    const Point q = eu({rng.next_in(-10.0, 10.0), 0.0});
    const double dxq = dist(e2, x, q), dpq = dist(e2, p, q);
    CHECK(dxq * dxq + 1e-9 >= dxp * dxp + dpq * dpq);
  }
}

TEST_CASE("rate verification is schedule independent and covers the linear catalog") {
  const auto e2 = Space::euclidean(2);
  // smallest eigenvalue of [[2,1],[1,1]] is (3-sqrt(5))/2 ~ 0.3819, so the
  // family admits the quadratic modulus with any smaller coefficient
  const ResolventFamily fam = ResolventOfMonotoneLinear{{{2.0, 1.0}, {1.0, 1.0}}};
  const Modulus phi = Modulus::quadratic(0.38);
  const Point x0 = eu({0.6, -0.8});
  for (const auto& schedule :
       {StepSchedule::constant(1.0), StepSchedule::explicit_list(std::vector<double>(1200, 0.5))}) {
    const auto trace = run_ppa(e2, fam, schedule, x0, 1100, eu({0, 0}));
    const auto theta = theta_for_schedule(schedule);
    for (const auto& rc : verify_ppa_rate(trace, theta, 1.0, phi, {1.0, 0.5, 0.25})) {
      CAPTURE(rc.eps);
      CHECK(rc.pass);
    }
  }
}

TEST_CASE("curve continuity against the delta bound") {
  const auto e2 = Space::euclidean(2);
  const ResolventFamily fam = ProxQuadraticToSet{EuclideanLineSet{{0, 0}, {1, 0}}};
  const Point x = eu({1, 1});
  const auto samples = sample_curve(e2, fam, x, geometric_gammas(1.0, 2.0, 11));
  double b = 0.0;
  for (const auto& s : samples) b = std::max(b, s.d_from_base);
  SplitMix64 rng(99);
  for (double eps : {0.1, 0.01}) {
    const double delta = curve_continuity_delta(1.0, b, eps);
    for (int i = 0; i < 400; ++i) {
      const double lambda = rng.next_in(1.0, 64.0);
      const double mu = lambda + delta * rng.next_unit();
      const double d =
          dist(e2, apply(e2, fam, lambda, x), apply(e2, fam, mu, x));
      CHECK(d <= eps + 1e-8);
    }
  }
}

TEST_CASE("curve metastability witnesses respect the bound") {
  const auto sp = Space::spider(3);
  const ResolventFamily fam = ProxQuadraticToPoint{spider_point(1, 1.0)};
  SplitMix64 rng(123);
  const auto gammas = geometric_gammas(0.25, 1.1, 200);
  for (int trial = 0; trial < 20; ++trial) {
    const Point x = sample_in_ball(sp, spider_point(0, 1.0), 2.0, rng);
    const auto samples = sample_curve(sp, fam, x, gammas);
    double b = 0.0;
    for (const auto& s : samples) b = std::max(b, s.d_from_base);
    if (b == 0.0) continue;  // x was the anchor
    const auto pair_dist = [&](std::size_t i, std::size_t j) {
      return dist(sp, samples[i].point, samples[j].point);
    };
    for (double eps : {0.5, 0.25}) {
      const auto g = Counterfunction::constant(1);
      const auto witness =
          find_metastable_witness_pairwise(samples.size(), pair_dist, eps, g);
      REQUIRE(witness.has_value());
      CHECK(*witness <= curve_metastability_bound(b, eps, g));
    }
  }
}

TEST_CASE("ball invariance check") {
  const auto e2 = Space::euclidean(2);
  SampleConfig cfg;
  cfg.seed = 7;
  cfg.count = 200;
  cfg.radius = 1.0;
  cfg.base = eu({0, 0});
  const auto ok = check_ball_invariance(e2, ResolventFamily{ProxScaledSquaredNorm{1.0}},
                                        {0.5, 1.0, 2.0}, eu({0, 0}), 1.0, cfg, 1e-9);
  CHECK(ok.pass);
  const auto bad = check_ball_invariance(e2, ResolventFamily{ExpansiveCounterexample{}},
                                         {1.0}, eu({0, 0}), 1.0, cfg, 1e-9);
  CHECK_FALSE(bad.pass);
}

TEST_CASE("engine input validation") {
  const auto e1 = Space::euclidean(1);
  CHECK_THROWS_AS(run_ppa(e1, ProxScaledSquaredNorm{1.0}, StepSchedule::constant(1.0), eu({1}), 0),
                  invalid_input);
  CHECK_THROWS_AS(StepSchedule::constant(0.0), invalid_input);
  CHECK_THROWS_AS(StepSchedule::explicit_list({}), invalid_input);
  CHECK_THROWS_AS(StepSchedule::explicit_list({1.0, -1.0}), invalid_input);
  // explicit schedule exhausted mid-run
  CHECK_THROWS_AS(run_ppa(e1, ProxScaledSquaredNorm{1.0}, StepSchedule::explicit_list({1.0}),
                          eu({1}), 5),
                  insufficient_schedule);
  CHECK_THROWS_AS(geometric_gammas(1.0, 1.0, 4), invalid_input);
}
