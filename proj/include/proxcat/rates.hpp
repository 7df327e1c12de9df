#pragma once

#include <cmath>
#include <compare>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "proxcat/errors.hpp"

namespace proxcat {

// ---------------------------------------------------------------------------
// Arbitrary-width naturals (just enough for window-iterate arithmetic)
// ---------------------------------------------------------------------------

/// Unsigned big integer with the handful of operations the bound formulas
/// need: add, multiply by a word, compare. Little-endian 64-bit limbs.
class BigNat {
 public:
  BigNat() = default;
  explicit BigNat(std::uint64_t v) {
    if (v) limbs_.push_back(v);
  }

  BigNat& operator+=(const BigNat& o) {
    limbs_.resize(std::max(limbs_.size(), o.limbs_.size()), 0);
    unsigned __int128 carry = 0;
    for (std::size_t i = 0; i < limbs_.size(); ++i) {
      carry += limbs_[i];
      if (i < o.limbs_.size()) carry += o.limbs_[i];
      limbs_[i] = static_cast<std::uint64_t>(carry);
      carry >>= 64;
    }
    if (carry) limbs_.push_back(static_cast<std::uint64_t>(carry));
    return *this;
  }

  BigNat& operator+=(std::uint64_t v) {
    BigNat t(v);
    return *this += t;
  }

  BigNat& mul_u64(std::uint64_t v) {
    if (v == 0) {
      limbs_.clear();
      return *this;
    }
    unsigned __int128 carry = 0;
    for (auto& limb : limbs_) {
      carry += static_cast<unsigned __int128>(limb) * v;
      limb = static_cast<std::uint64_t>(carry);
      carry >>= 64;
    }
    if (carry) limbs_.push_back(static_cast<std::uint64_t>(carry));
    return *this;
  }

  friend BigNat operator+(BigNat a, const BigNat& b) { return a += b; }

  bool operator==(const BigNat& o) const { return limbs_ == o.limbs_; }

  std::strong_ordering operator<=>(const BigNat& o) const {
    if (limbs_.size() != o.limbs_.size())
      return limbs_.size() <=> o.limbs_.size();
    for (std::size_t i = limbs_.size(); i-- > 0;) {
      if (limbs_[i] != o.limbs_[i]) return limbs_[i] <=> o.limbs_[i];
    }
    return std::strong_ordering::equal;
  }

  bool fits_u64() const { return limbs_.size() <= 1; }

  std::uint64_t to_u64() const {
    if (!fits_u64()) throw numeric_failure("BigNat: value exceeds 64 bits");
    return limbs_.empty() ? 0 : limbs_[0];
  }

 private:
  std::vector<std::uint64_t> limbs_;
};

// ---------------------------------------------------------------------------
// Counterfunctions g and the window-end map n -> n + g(n)
// ---------------------------------------------------------------------------

/// Window-length function g of a metastability statement. Catalog kinds:
/// constant k, linear a*n + b, user table.
class Counterfunction {
 public:
  enum class Kind { constant, linear, table };

  static Counterfunction constant(std::uint64_t k) {
    Counterfunction g;
    g.kind_ = Kind::constant;
    g.b_ = k;
    g.label_ = "const " + std::to_string(k);
    return g;
  }

  static Counterfunction linear(std::uint64_t a, std::uint64_t b) {
    Counterfunction g;
    g.kind_ = Kind::linear;
    g.a_ = a;
    g.b_ = b;
    g.label_ = "n -> " + std::to_string(a) + "*n + " + std::to_string(b);
    return g;
  }

  static Counterfunction table(std::vector<std::uint64_t> values) {
    if (values.empty()) throw invalid_input("Counterfunction::table: empty table");
    Counterfunction g;
    g.kind_ = Kind::table;
    g.table_ = std::move(values);
    g.label_ = "table[" + std::to_string(g.table_.size()) + "]";
    return g;
  }

  std::uint64_t operator()(std::uint64_t n) const {
    switch (kind_) {
      case Kind::constant:
        return b_;
      case Kind::linear: {
        if (a_ != 0 && n > (std::numeric_limits<std::uint64_t>::max() - b_) / a_)
          throw numeric_failure("Counterfunction: value overflows 64 bits");
        return a_ * n + b_;
      }
      case Kind::table:
        if (n >= table_.size())
          throw invalid_input("Counterfunction: index beyond table length");
        return table_[n];
    }
    throw invalid_input("Counterfunction: bad kind");
  }

  /// g(n) in exact arithmetic; tables require n to fit a word.
  BigNat apply_big(const BigNat& n) const {
    switch (kind_) {
      case Kind::constant:
        return BigNat(b_);
      case Kind::linear: {
        BigNat out = n;
        out.mul_u64(a_);
        out += b_;
        return out;
      }
      case Kind::table:
        return BigNat((*this)(n.to_u64()));
    }
    throw invalid_input("Counterfunction: bad kind");
  }

  /// End of the window opened at n: n + g(n).
  std::uint64_t window_end(std::uint64_t n) const {
    const std::uint64_t g = (*this)(n);
    if (n > std::numeric_limits<std::uint64_t>::max() - g)
      throw numeric_failure("Counterfunction: window end overflows 64 bits");
    return n + g;
  }

  Kind kind() const { return kind_; }
  const std::string& label() const { return label_; }

 private:
  Counterfunction() = default;
  Kind kind_ = Kind::constant;
  std::uint64_t a_ = 0;
  std::uint64_t b_ = 0;
  std::vector<std::uint64_t> table_;
  std::string label_;
};

/// k-fold iterate of the window-end map n -> n + g(n), started at 0, in
/// exact arithmetic. These iterates grow fast (doubling for g(n) = n + 1),
/// so the word-sized variant below reports overflow instead of wrapping.
inline BigNat window_end_iterate_exact(const Counterfunction& g, std::uint64_t k) {
  BigNat v;
  for (std::uint64_t i = 0; i < k; ++i) v += g.apply_big(v);
  return v;
}

inline std::uint64_t window_end_iterate(const Counterfunction& g, std::uint64_t k) {
  BigNat v;
  for (std::uint64_t i = 0; i < k; ++i) {
    v += g.apply_big(v);
    // the iterates are nondecreasing, so once over a word they stay over
    if (!v.fits_u64())
      throw numeric_failure("window_end_iterate: iterate exceeds 64 bits");
  }
  return v.to_u64();
}

// ---------------------------------------------------------------------------
// Moduli
// ---------------------------------------------------------------------------

/// Modulus phi : (0,inf) -> (0,inf). Catalog kinds: c*eps^2, c*eps, user
/// table (exact-match lookup).
class Modulus {
 public:
  static Modulus quadratic(double c) {
    if (!(c > 0.0)) throw invalid_input("Modulus::quadratic: c must be > 0");
    Modulus m;
    m.fn_ = [c](double eps) { return c * eps * eps; };
    m.label_ = format_coeff(c) + "*eps^2";
    return m;
  }

  static Modulus linear(double c) {
    if (!(c > 0.0)) throw invalid_input("Modulus::linear: c must be > 0");
    Modulus m;
    m.fn_ = [c](double eps) { return c * eps; };
    m.label_ = format_coeff(c) + "*eps";
    return m;
  }

  static Modulus table(std::vector<std::pair<double, double>> entries) {
    if (entries.empty()) throw invalid_input("Modulus::table: empty table");
    std::map<double, double> lookup;
    for (const auto& [eps, val] : entries) {
      if (!(eps > 0.0) || !(val > 0.0))
        throw invalid_input("Modulus::table: entries must be positive");
      lookup[eps] = val;
    }
    Modulus m;
    m.fn_ = [lookup = std::move(lookup)](double eps) {
      auto it = lookup.find(eps);
      if (it == lookup.end())
        throw invalid_input("Modulus::table: eps not tabulated");
      return it->second;
    };
    m.label_ = "table";
    return m;
  }

  double operator()(double eps) const {
    if (!(eps > 0.0)) throw invalid_input("Modulus: eps must be > 0");
    const double v = fn_(eps);
    if (!(v > 0.0)) throw invalid_input("Modulus: value must be > 0");
    return v;
  }

  const std::string& label() const { return label_; }

 private:
  Modulus() = default;
  static std::string format_coeff(double c) {
    if (c == static_cast<double>(static_cast<long long>(c)))
      return std::to_string(static_cast<long long>(c));
    return std::to_string(c);
  }
  std::function<double(double)> fn_;
  std::string label_;
};

/// Divergence witness theta for a step-size series: sum_{n<=theta(x)}
/// gamma_n >= x.
class DivergenceModulus {
 public:
  static DivergenceModulus from_function(std::function<std::uint64_t(double)> fn,
                                         std::string label) {
    if (!fn) throw invalid_input("DivergenceModulus: empty callable");
    DivergenceModulus t;
    t.fn_ = std::move(fn);
    t.label_ = std::move(label);
    return t;
  }

  /// theta(x) = ceil(x), the modulus used by the worked examples.
  static DivergenceModulus ceil_modulus();

  std::uint64_t operator()(double x) const { return fn_(x); }
  const std::string& label() const { return label_; }

 private:
  DivergenceModulus() = default;
  std::function<std::uint64_t(double)> fn_;
  std::string label_;
};

namespace detail {

/// ceil of a positive double as an index; exact integers map to themselves.
inline std::uint64_t ceil_index(double x) {
  if (!(x > 0.0)) return 0;
  if (!(x < 9.2e18)) throw numeric_failure("ceil_index: value exceeds 64 bits");
  return static_cast<std::uint64_t>(std::ceil(x));
}

}  // namespace detail

inline DivergenceModulus DivergenceModulus::ceil_modulus() {
  return from_function([](double x) { return detail::ceil_index(x); }, "ceil(x)");
}

// ---------------------------------------------------------------------------
// Bound formulas
// ---------------------------------------------------------------------------

/// Metastability rate for nondecreasing sequences in [0,b]: some window
/// [N, N+g(N)] with oscillation <= eps opens at an N no larger than the
/// ceil(b/eps)-fold window-end iterate of 0.
inline std::uint64_t monotone_metastability_bound(double b, double eps,
                                                  const Counterfunction& g) {
  if (!(b > 0.0) || !(eps > 0.0))
    throw invalid_input("monotone_metastability_bound: b and eps must be > 0");
  return window_end_iterate(g, detail::ceil_index(b / eps));
}

/// Index past which w_n <= eps for any sequence in [0,b] that, whenever it
/// still exceeds eps, decreases by at least gamma_n * phi(eps) per step:
/// theta((b+1)/phi(eps)) + 1.
inline std::uint64_t descent_rate_bound(const DivergenceModulus& theta, double b,
                                        const Modulus& phi, double eps) {
  if (!(b > 0.0)) throw invalid_input("descent_rate_bound: b must be > 0");
  const std::uint64_t n = theta((b + 1.0) / phi(eps));
  if (n == std::numeric_limits<std::uint64_t>::max())
    throw numeric_failure("descent_rate_bound: overflow");
  return n + 1;
}

/// Convergence rate of the proximal iteration toward its common fixed
/// point under a uniform modulus: theta((b+1)^2/phi(eps)) + 1.
inline std::uint64_t ppa_rate_bound(const DivergenceModulus& theta, double b,
                                    const Modulus& phi, double eps) {
  if (!(b > 0.0)) throw invalid_input("ppa_rate_bound: b must be > 0");
  const std::uint64_t n = theta((b + 1.0) * (b + 1.0) / phi(eps));
  if (n == std::numeric_limits<std::uint64_t>::max())
    throw numeric_failure("ppa_rate_bound: overflow");
  return n + 1;
}

/// Metastability rate for the resolvent curve sampled along a nondecreasing
/// parameter grid: window-end iterate of 0, ceil(b^2/eps^2) times.
inline std::uint64_t curve_metastability_bound(double b, double eps,
                                               const Counterfunction& g) {
  if (!(b > 0.0) || !(eps > 0.0))
    throw invalid_input("curve_metastability_bound: b and eps must be > 0");
  return window_end_iterate(g, detail::ceil_index((b * b) / (eps * eps)));
}

/// Parameter gap delta = Gamma * eps^2 / (2 b^2) such that lambda, mu >=
/// Gamma and mu - lambda <= delta force d(T_lambda x, T_mu x) <= eps, via
/// the uniform-continuity estimate sqrt(mu - lambda) * b * sqrt(2/Gamma).
inline double curve_continuity_delta(double gamma_low, double b, double eps) {
  if (!(gamma_low > 0.0) || !(b > 0.0) || !(eps > 0.0))
    throw invalid_input("curve_continuity_delta: arguments must be > 0");
  return gamma_low * eps * eps / (2.0 * b * b);
}

// ---------------------------------------------------------------------------
// Brute-force metastability witnesses
// ---------------------------------------------------------------------------

namespace detail {

template <class G>
std::size_t required_length_for(const G& g, std::size_t limit) {
  std::uint64_t required = 0;
  for (std::uint64_t n = 0; n <= limit; ++n)
    required = std::max(required, g.window_end(n) + 1);
  return static_cast<std::size_t>(required);
}

}  // namespace detail

/// Smallest N whose window [N, N+g(N)] has pairwise oscillation <= eps,
/// where the caller supplies pairwise distances. With `search_limit` set,
/// every window opening at N <= limit must fit inside the sequence
/// (otherwise insufficient_sequence reports the needed length); without
/// it, the scan stops at the first window that no longer fits.
template <class PairDist>
std::optional<std::size_t> find_metastable_witness_pairwise(
    std::size_t n_values, PairDist&& pair_dist, double eps, const Counterfunction& g,
    std::optional<std::size_t> search_limit = std::nullopt) {
  if (!(eps > 0.0)) throw invalid_input("find_metastable_witness: eps must be > 0");
  if (search_limit) {
    const std::size_t required = detail::required_length_for(g, *search_limit);
    if (n_values < required)
      throw insufficient_sequence(
          "find_metastable_witness: sequence of length " + std::to_string(n_values) +
              " cannot cover windows up to N = " + std::to_string(*search_limit) +
              "; need length >= " + std::to_string(required),
          required);
  }
  const std::size_t last = search_limit ? *search_limit
                                        : (n_values == 0 ? 0 : n_values - 1);
  for (std::size_t N = 0; n_values > 0 && N <= last; ++N) {
    const std::uint64_t end = g.window_end(N);
    if (end >= n_values) break;  // cannot certify a smallest N past this point
    bool ok = true;
    for (std::size_t i = N; i <= end && ok; ++i)
      for (std::size_t j = i + 1; j <= end; ++j)
        if (pair_dist(i, j) > eps) {
          ok = false;
          break;
        }
    if (ok) return N;
  }
  return std::nullopt;
}

/// Real-sequence specialization: oscillation of a window is max - min,
/// which avoids the quadratic pair scan.
inline std::optional<std::size_t> find_metastable_witness(
    const std::vector<double>& values, double eps, const Counterfunction& g,
    std::optional<std::size_t> search_limit = std::nullopt) {
  if (!(eps > 0.0)) throw invalid_input("find_metastable_witness: eps must be > 0");
  if (search_limit) {
    const std::size_t required = detail::required_length_for(g, *search_limit);
    if (values.size() < required)
      throw insufficient_sequence(
          "find_metastable_witness: sequence of length " + std::to_string(values.size()) +
              " cannot cover windows up to N = " + std::to_string(*search_limit) +
              "; need length >= " + std::to_string(required),
          required);
  }
  const std::size_t last = search_limit ? *search_limit
                                        : (values.empty() ? 0 : values.size() - 1);
  for (std::size_t N = 0; !values.empty() && N <= last; ++N) {
    const std::uint64_t end = g.window_end(N);
    if (end >= values.size()) break;
    double lo = values[N], hi = values[N];
    for (std::size_t i = N + 1; i <= end; ++i) {
      lo = std::min(lo, values[i]);
      hi = std::max(hi, values[i]);
    }
    if (hi - lo <= eps) return N;
  }
  return std::nullopt;
}

}  // namespace proxcat
