#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <vector>

#include "proxcat/rates.hpp"
#include "proxcat/rng.hpp"

using namespace proxcat;

TEST_CASE("window-end iterates") {
  CHECK(window_end_iterate(Counterfunction::constant(0), 10) == 0);
  CHECK(window_end_iterate(Counterfunction::constant(2), 3) == 6);
  // g(n) = n + 1: 0 -> 1 -> 3 -> 7 -> 15 by direct iteration
  std::uint64_t v = 0;
  for (int i = 0; i < 4; ++i) v = v + (v + 1);
  CHECK(v == 15);
  CHECK(window_end_iterate(Counterfunction::linear(1, 1), 4) == v);
  // doubling overflows a word after 64 rounds
  CHECK_THROWS_AS(window_end_iterate(Counterfunction::linear(1, 1), 100), numeric_failure);
}

TEST_CASE("window-end iterates are nondecreasing in the iteration count") {
  const std::vector<Counterfunction> catalog{
      Counterfunction::constant(0), Counterfunction::constant(2),
      Counterfunction::linear(1, 1), Counterfunction::linear(2, 3)};
  for (const auto& g : catalog) {
    BigNat prev;
    for (std::uint64_t k = 1; k <= 1000; ++k) {
      const BigNat cur = window_end_iterate_exact(g, k);
      CHECK(prev <= cur);
      prev = cur;
    }
  }
}

TEST_CASE("monotone metastability bound formula") {
  CHECK(monotone_metastability_bound(1.0, 1.0, Counterfunction::constant(0)) == 0);
  // ceil(1/0.4) = 3 rounds of +2
  CHECK(monotone_metastability_bound(1.0, 0.4, Counterfunction::constant(2)) == 6);
  CHECK(monotone_metastability_bound(1.0, 0.25, Counterfunction::linear(1, 1)) == 15);
  CHECK(monotone_metastability_bound(1.0, 0.25, Counterfunction::linear(1, 1)) ==
        window_end_iterate(Counterfunction::linear(1, 1), 4));
}

TEST_CASE("metastability witness search") {
  const Counterfunction g1 = Counterfunction::constant(1);

  SUBCASE("constant sequences settle immediately") {
    const std::vector<double> values(20, 3.25);
    CHECK(find_metastable_witness(values, 0.5, g1) == 0);
  }

  SUBCASE("a_n = 1 - 1/(n+1) needs consecutive gaps below eps") {
    std::vector<double> values;
    for (int n = 0; n < 32; ++n) values.push_back(1.0 - 1.0 / (n + 1.0));
    // |a_{N+1} - a_N| = 1/((N+1)(N+2)) <= 0.1 first holds at N = 2
    CHECK(find_metastable_witness(values, 0.1, g1) == 2);
  }

  SUBCASE("oscillation never settles: not found") {
    std::vector<double> values;
    for (int n = 0; n < 64; ++n) values.push_back(n % 2 ? 1.0 : 0.0);
    CHECK_FALSE(find_metastable_witness(values, 0.5, g1).has_value());
  }

  SUBCASE("short sequences are rejected when a search limit is requested") {
    const std::vector<double> values(5, 0.0);
    try {
      find_metastable_witness(values, 0.5, g1, 16);
      FAIL("expected insufficient_sequence");
    } catch (const insufficient_sequence& e) {
      CHECK(e.required_length == 18);  // window at N=16 ends at 17
    }
  }

  SUBCASE("pairwise form agrees with the real form") {
    std::vector<double> values;
    SplitMix64 rng(3);
    double acc = 0.0;
    for (int n = 0; n < 200; ++n) {
      acc += rng.next_unit() * 0.05;
      values.push_back(acc);
    }
    const auto direct = find_metastable_witness(values, 0.3, Counterfunction::constant(4));
    const auto pairwise = find_metastable_witness_pairwise(
        values.size(),
        [&](std::size_t i, std::size_t j) { return std::abs(values[i] - values[j]); }, 0.3,
        Counterfunction::constant(4));
    CHECK(direct == pairwise);
  }
}

TEST_CASE("monotone bounded sequences respect the metastability bound") {
  const std::vector<Counterfunction> catalog{
      Counterfunction::constant(0), Counterfunction::constant(2),
      Counterfunction::linear(1, 1)};
  for (double b : {1.0, 10.0}) {
    for (std::size_t gi = 0; gi < catalog.size(); ++gi) {
      const auto& g = catalog[gi];
      for (std::uint64_t trial = 0; trial < 300; ++trial) {
        SplitMix64 rng(substream_seed(1000 + gi, trial));
        const double eps = b * (0.125 + 0.875 * rng.next_unit());
        const std::uint64_t bound = monotone_metastability_bound(b, eps, g);
        std::uint64_t length = 0;
        for (std::uint64_t n = 0; n <= bound; ++n)
          length = std::max(length, g.window_end(n) + 1);
        std::vector<double> values(length);
        double acc = 0.0;
        for (auto& v : values) {
          acc += rng.next_unit();
          v = acc;
        }
        const double scale = b * rng.next_unit() / acc;
        for (auto& v : values) v *= scale;
        const auto witness = find_metastable_witness(values, eps, g, bound);
        REQUIRE(witness.has_value());
        CHECK(*witness <= bound);
      }
    }
  }
}

TEST_CASE("descent rate bound formula and synthetic sequences") {
  const auto theta = DivergenceModulus::ceil_modulus();
  CHECK(descent_rate_bound(theta, 1.0, Modulus::linear(1.0), 1.0) == 3);
  CHECK(descent_rate_bound(theta, 1.0, Modulus::quadratic(1.0), 0.5) == 9);

  // sequences built to satisfy the hypotheses exactly:
  // w_{n+1} = max(0, w_n - gamma_n phi(w_n)) with phi nondecreasing
  for (std::uint64_t trial = 0; trial < 200; ++trial) {
    SplitMix64 rng(substream_seed(77, trial));
    const double b = 0.5 + 2.0 * rng.next_unit();
    const Modulus phi = Modulus::quadratic(0.5 + rng.next_unit());
    std::vector<double> gammas, prefix;
    double acc = 0.0;
    std::vector<double> w{b * rng.next_unit_pos()};
    for (int n = 0; n < 4000; ++n) {
      const double gamma = 0.05 + rng.next_unit();
      gammas.push_back(gamma);
      acc += gamma;
      prefix.push_back(acc);
      const double wn = w.back();
      w.push_back(wn > 0.0 ? std::max(0.0, wn - gamma * phi(wn)) : 0.0);
    }
    const auto theta_fn = DivergenceModulus::from_function(
        [prefix](double x) -> std::uint64_t {
          for (std::size_t i = 0; i < prefix.size(); ++i)
            if (prefix[i] >= x) return i;
          throw numeric_failure("synthetic theta exhausted");
        },
        "synthetic");
    for (double eps : {0.25, 0.5, 1.0}) {
      const std::uint64_t bound = descent_rate_bound(theta_fn, b, phi, eps);
      REQUIRE(bound < w.size());
      for (std::size_t n = bound; n < w.size(); ++n) CHECK(w[n] <= eps + 1e-12);
    }
  }
}

TEST_CASE("ppa rate bound formula") {
  const auto theta = DivergenceModulus::ceil_modulus();
  CHECK(ppa_rate_bound(theta, 1.0, Modulus::quadratic(1.0), 0.5) == 17);
  CHECK(ppa_rate_bound(theta, 1.0, Modulus::quadratic(1.0), 1.0) == 5);
}

TEST_CASE("curve metastability bound formula") {
  CHECK(curve_metastability_bound(2.0, 1.0, Counterfunction::linear(1, 1)) == 15);
  CHECK(curve_metastability_bound(1.0, 1.0, Counterfunction::constant(0)) == 0);
}

TEST_CASE("curve continuity delta formula") {
  CHECK(curve_continuity_delta(1.0, 1.0, 1.0) == doctest::Approx(0.5));
  CHECK(curve_continuity_delta(2.0, 1.0, 0.1) == doctest::Approx(0.01));
}

TEST_CASE("bounds are monotone in b and antitone in eps") {
  const auto theta = DivergenceModulus::ceil_modulus();
  const auto g = Counterfunction::constant(2);
  const Modulus phi = Modulus::quadratic(1.0);
  std::uint64_t prev = 0;
  for (double b : {0.5, 1.0, 2.0, 4.0}) {
    const auto cur = ppa_rate_bound(theta, b, phi, 0.5);
    CHECK(cur >= prev);
    prev = cur;
  }
  prev = std::numeric_limits<std::uint64_t>::max();
  for (double eps : {0.1, 0.2, 0.5, 1.0}) {
    const auto cur = monotone_metastability_bound(2.0, eps, g);
    CHECK(cur <= prev);
    prev = cur;
  }
}

TEST_CASE("modulus and counterfunction validation") {
  CHECK_THROWS_AS(Modulus::quadratic(0.0), invalid_input);
  CHECK_THROWS_AS(Modulus::quadratic(1.0)(0.0), invalid_input);
  CHECK(Modulus::table({{0.5, 0.25}})(0.5) == 0.25);
  CHECK_THROWS_AS(Modulus::table({{0.5, 0.25}})(0.4), invalid_input);
  CHECK_THROWS_AS(Counterfunction::table({})(0), invalid_input);
  CHECK(Counterfunction::table({4, 5})(1) == 5);
  CHECK_THROWS_AS(Counterfunction::table({4, 5})(2), invalid_input);
  CHECK_THROWS_AS(monotone_metastability_bound(0.0, 1.0, Counterfunction::constant(0)),
                  invalid_input);
}

TEST_CASE("big naturals behave") {
  BigNat a(5);
  a.mul_u64(1000000000000ull);
  BigNat b = a;
  b += a;
  CHECK(a < b);
  CHECK(b.to_u64() == 10000000000000ull);
  BigNat big(1);
  for (int i = 0; i < 200; ++i) big.mul_u64(2);  // 2^200
  CHECK_FALSE(big.fits_u64());
  CHECK_THROWS_AS(big.to_u64(), numeric_failure);
  CHECK(BigNat(0) < BigNat(1));
  CHECK(BigNat(0) == BigNat());
}
