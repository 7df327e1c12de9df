#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "proxcat/checkers.hpp"
#include "proxcat/engine.hpp"
#include "proxcat/errors.hpp"
#include "proxcat/geometry.hpp"
#include "proxcat/log.hpp"
#include "proxcat/rates.hpp"
#include "proxcat/resolvents.hpp"

namespace proxcat {

/// Configuration problem: unreadable file, schema violation, unknown
/// catalog kind. The CLI maps this to exit code 2.
struct config_error : error {
  using error::error;
};

using Json = nlohmann::json;
using OrderedJson = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Config parsing
// ---------------------------------------------------------------------------

namespace cfg {

inline const Json& require_field(const Json& j, const char* name) {
  auto it = j.find(name);
  if (it == j.end()) throw config_error(std::string("config: missing field '") + name + "'");
  return *it;
}

inline std::string require_string(const Json& j, const char* name) {
  const Json& f = require_field(j, name);
  if (!f.is_string()) throw config_error(std::string("config: field '") + name + "' must be a string");
  return f.get<std::string>();
}

inline double require_number(const Json& j, const char* name) {
  const Json& f = require_field(j, name);
  if (!f.is_number()) throw config_error(std::string("config: field '") + name + "' must be a number");
  return f.get<double>();
}

inline double number_or(const Json& j, const char* name, double fallback) {
  auto it = j.find(name);
  if (it == j.end()) return fallback;
  if (!it->is_number()) throw config_error(std::string("config: field '") + name + "' must be a number");
  return it->get<double>();
}

inline std::uint64_t require_uint(const Json& j, const char* name) {
  const Json& f = require_field(j, name);
  if (!f.is_number_unsigned())
    throw config_error(std::string("config: field '") + name + "' must be a nonnegative integer");
  return f.get<std::uint64_t>();
}

inline Space parse_space(const Json& j) {
  const std::string kind = require_string(j, "kind");
  if (kind == "euclidean") return Space::euclidean(require_uint(j, "dim"));
  if (kind == "half_plane") return Space::half_plane();
  if (kind == "spider") return Space::spider(static_cast<int>(require_uint(j, "rays")));
  throw config_error("config: unknown space kind '" + kind + "'");
}

inline Point parse_point(const Space& space, const Json& j) {
  try {
    switch (space.kind()) {
      case Space::Kind::euclidean: {
        if (!j.is_array()) throw config_error("config: Euclidean point must be an array");
        return euclidean_point(j.get<std::vector<double>>());
      }
      case Space::Kind::half_plane:
        return half_plane_point(require_number(j, "x"), require_number(j, "y"));
      case Space::Kind::spider:
        return spider_point(static_cast<int>(require_uint(j, "ray")), require_number(j, "r"));
      default:
        throw config_error("config: cannot parse points for custom spaces");
    }
  } catch (const domain_error& e) {
    throw config_error(std::string("config: bad point: ") + e.what());
  } catch (const invalid_input& e) {
    throw config_error(std::string("config: bad point: ") + e.what());
  }
}

inline ConvexSetDescriptor parse_set(const Space& space, const Json& j) {
  const std::string kind = require_string(j, "kind");
  if (kind == "singleton") return SingletonSet{parse_point(space, require_field(j, "a"))};
  if (kind == "segment")
    return SegmentSet{parse_point(space, require_field(j, "a")),
                      parse_point(space, require_field(j, "b"))};
  if (kind == "euclidean_line") {
    const Json& p = require_field(j, "point");
    const Json& d = require_field(j, "direction");
    if (!p.is_array() || !d.is_array())
      throw config_error("config: euclidean_line needs 'point' and 'direction' arrays");
    return EuclideanLineSet{p.get<std::vector<double>>(), d.get<std::vector<double>>()};
  }
  if (kind == "spider_ray_segment")
    return SpiderRaySegmentSet{static_cast<int>(require_uint(j, "ray")),
                               require_number(j, "r_min"), require_number(j, "r_max")};
  throw config_error("config: unknown set kind '" + kind + "'");
}

inline NonexpansiveMap parse_map(const Space& space, const Json& j) {
  const std::string kind = require_string(j, "kind");
  if (kind == "identity") return IdentityMap{};
  if (kind == "negation") return NegationMap{};
  if (kind == "constant") return ConstantMap{parse_point(space, require_field(j, "a"))};
  if (kind == "rotation") return RotationMap{require_number(j, "angle")};
  if (kind == "projection") return ProjectionMap{parse_set(space, require_field(j, "set"))};
  throw config_error("config: unknown map kind '" + kind + "'");
}

inline ResolventFamily parse_family(const Space& space, const Json& j) {
  const std::string kind = require_string(j, "kind");
  ResolventFamily family = ExpansiveCounterexample{};
  if (kind == "prox_quadratic_to_point")
    family = ProxQuadraticToPoint{parse_point(space, require_field(j, "a"))};
  else if (kind == "prox_distance_to_point")
    family = ProxDistanceToPoint{parse_point(space, require_field(j, "a"))};
  else if (kind == "prox_quadratic_to_set")
    family = ProxQuadraticToSet{parse_set(space, require_field(j, "set"))};
  else if (kind == "prox_scaled_squared_norm")
    family = ProxScaledSquaredNorm{require_number(j, "c")};
  else if (kind == "resolvent_of_nonexpansive")
    family = ResolventOfNonexpansive{parse_map(space, require_field(j, "map")),
                                     number_or(j, "tol", 1e-10)};
  else if (kind == "resolvent_of_monotone_linear") {
    const Json& m = require_field(j, "matrix");
    if (!m.is_array()) throw config_error("config: 'matrix' must be an array of rows");
    family = ResolventOfMonotoneLinear{m.get<std::vector<std::vector<double>>>()};
  } else if (kind != "expansive_counterexample") {
    throw config_error("config: unknown family kind '" + kind + "'");
  }
  try {
    validate_family(space, family);
  } catch (const invalid_input& e) {
    throw config_error(std::string("config: bad family: ") + e.what());
  }
  return family;
}

inline StepSchedule parse_schedule(const Json& j) {
  const std::string kind = require_string(j, "kind");
  try {
    if (kind == "constant") return StepSchedule::constant(require_number(j, "value"));
    if (kind == "harmonic") return StepSchedule::harmonic();
    if (kind == "explicit") {
      const Json& v = require_field(j, "values");
      if (!v.is_array()) throw config_error("config: schedule 'values' must be an array");
      return StepSchedule::explicit_list(v.get<std::vector<double>>());
    }
  } catch (const invalid_input& e) {
    throw config_error(std::string("config: bad schedule: ") + e.what());
  }
  throw config_error("config: unknown schedule kind '" + kind + "'");
}

inline Counterfunction parse_counterfunction(const Json& j) {
  const std::string kind = require_string(j, "kind");
  try {
    if (kind == "constant") return Counterfunction::constant(require_uint(j, "value"));
    if (kind == "linear") return Counterfunction::linear(require_uint(j, "a"), require_uint(j, "b"));
    if (kind == "table") {
      const Json& v = require_field(j, "values");
      if (!v.is_array()) throw config_error("config: counterfunction 'values' must be an array");
      return Counterfunction::table(v.get<std::vector<std::uint64_t>>());
    }
  } catch (const invalid_input& e) {
    throw config_error(std::string("config: bad counterfunction: ") + e.what());
  }
  throw config_error("config: unknown counterfunction kind '" + kind + "'");
}

inline Modulus parse_modulus(const Json& j) {
  const std::string kind = require_string(j, "kind");
  try {
    if (kind == "quadratic") return Modulus::quadratic(require_number(j, "c"));
    if (kind == "linear") return Modulus::linear(require_number(j, "c"));
    if (kind == "table") {
      const Json& v = require_field(j, "entries");
      if (!v.is_array()) throw config_error("config: modulus 'entries' must be an array");
      std::vector<std::pair<double, double>> entries;
      for (const auto& e : v) {
        if (!e.is_array() || e.size() != 2)
          throw config_error("config: modulus entries must be [eps, value] pairs");
        entries.emplace_back(e[0].get<double>(), e[1].get<double>());
      }
      return Modulus::table(std::move(entries));
    }
  } catch (const invalid_input& e) {
    throw config_error(std::string("config: bad modulus: ") + e.what());
  }
  throw config_error("config: unknown modulus kind '" + kind + "'");
}

inline SampleConfig parse_sampling(const Space& space, const Json& j) {
  SampleConfig cfg;
  cfg.seed = require_uint(j, "seed");
  cfg.count = static_cast<std::size_t>(require_uint(j, "count"));
  cfg.radius = require_number(j, "radius");
  cfg.base = parse_point(space, require_field(j, "base"));
  try {
    validate_config(space, cfg);
  } catch (const invalid_input& e) {
    throw config_error(std::string("config: bad sampling: ") + e.what());
  }
  return cfg;
}

/// Epsilon lists must be nonempty wherever they appear.
inline std::vector<double> parse_epsilons(const Json& j, const char* name = "epsilons") {
  const Json& f = require_field(j, name);
  if (!f.is_array()) throw config_error("config: 'epsilons' must be an array");
  auto eps = f.get<std::vector<double>>();
  if (eps.empty()) throw config_error("config: 'epsilons' must be nonempty");
  for (double e : eps)
    if (!(e > 0.0)) throw config_error("config: epsilons must be > 0");
  return eps;
}

inline std::vector<double> parse_positive_list(const Json& j, const char* name) {
  const Json& f = require_field(j, name);
  if (!f.is_array()) throw config_error(std::string("config: '") + name + "' must be an array");
  auto v = f.get<std::vector<double>>();
  if (v.empty()) throw config_error(std::string("config: '") + name + "' must be nonempty");
  for (double x : v)
    if (!(x > 0.0)) throw config_error(std::string("config: '") + name + "' entries must be > 0");
  return v;
}

}  // namespace cfg

// ---------------------------------------------------------------------------
// Report assembly
// ---------------------------------------------------------------------------

struct RunReport {
  std::string name;
  std::string command;
  bool overall_pass = true;
  OrderedJson document;
  std::vector<std::string> files;  // relative to the output directory
};

namespace detail {

inline OrderedJson violation_row(const std::string& label, const ViolationReport& r) {
  OrderedJson row;
  row["check_name"] = label;
  if (r.checked == 0)
    row["max_violation"] = nullptr;  // vacuous: no applicable samples
  else
    row["max_violation"] = r.max_violation;
  row["tolerance"] = r.tolerance;
  row["checked"] = r.checked;
  row["pass"] = r.pass;
  if (r.checked == 0) {
    row["witness"] = nullptr;
  } else {
    OrderedJson w;
    w["sample_index"] = r.worst.sample_index;
    w["lhs"] = r.worst.lhs;
    w["rhs"] = r.worst.rhs;
    OrderedJson fields;
    for (const auto& [k, v] : r.worst.fields) fields[k] = v;
    w["fields"] = std::move(fields);
    row["witness"] = std::move(w);
  }
  return row;
}

inline std::string csv_bool(bool b) { return b ? "true" : "false"; }

inline std::string csv_violation(const ViolationReport& r) {
  return r.checked == 0 ? "nan" : format_double(r.max_violation);
}

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::string& header) {
    out_.open(path, std::ios::binary);
    if (!out_) throw error("cannot open output file " + path.string());
    out_ << header << "\n";
  }
  void row(const std::string& line) { out_ << line << "\n"; }

 private:
  std::ofstream out_;
};

inline void echo_line(std::ostream* echo, bool pass, const std::string& label,
                      const std::string& detail) {
  if (!echo) return;
  (*echo) << (pass ? "PASS " : "FAIL ") << label;
  if (!detail.empty()) (*echo) << "  " << detail;
  (*echo) << "\n";
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Scenario execution
// ---------------------------------------------------------------------------

namespace detail {

struct ScenarioState {
  std::string name;
  std::filesystem::path out_dir;
  std::optional<std::uint64_t> seed_override;
  std::ostream* echo = nullptr;
  OrderedJson checks = OrderedJson::array();
  OrderedJson bounds = OrderedJson::array();
  std::vector<std::string> files;
  bool overall_pass = true;

  std::uint64_t seed(std::uint64_t from_config) const {
    return seed_override ? *seed_override : from_config;
  }

  void add_check_row(const std::string& label, const ViolationReport& r, CsvWriter* csv) {
    checks.push_back(violation_row(label, r));
    if (csv)
      csv->row(label + "," + csv_violation(r) + "," + format_double(r.tolerance) + "," +
               csv_bool(r.pass));
    overall_pass = overall_pass && r.pass;
    echo_line(echo, r.pass, label,
              r.checked == 0 ? "vacuous (0 applicable samples)"
                             : "max_violation=" + csv_violation(r));
  }

  void add_bound(const std::string& bound_name, std::optional<double> eps, double value) {
    OrderedJson row;
    row["name"] = bound_name;
    if (eps)
      row["epsilon"] = *eps;
    else
      row["epsilon"] = nullptr;
    row["value"] = value;
    bounds.push_back(std::move(row));
  }
};

inline std::vector<std::pair<double, double>> parse_pairs(const Json& entry) {
  const Json& pj = cfg::require_field(entry, "pairs");
  if (!pj.is_array() || pj.empty())
    throw config_error("config: 'pairs' must be a nonempty array of [lambda, mu]");
  std::vector<std::pair<double, double>> pairs;
  for (const auto& p : pj) {
    if (!p.is_array() || p.size() != 2)
      throw config_error("config: each pair must be [lambda, mu]");
    const double l = p[0].get<double>(), m = p[1].get<double>();
    if (!(l > 0.0) || !(m > 0.0)) throw config_error("config: pair entries must be > 0");
    pairs.emplace_back(l, m);
  }
  return pairs;
}

inline void run_check_entry(ScenarioState& st, const Space& space,
                            const ResolventFamily& family, const std::string& prefix,
                            const SampleConfig& sampling, double tol, const Json& entry,
                            CsvWriter& csv) {
  const std::string type = cfg::require_string(entry, "type");
  if (type == "nonexpansive") {
    for (double g : cfg::parse_positive_list(entry, "gammas")) {
      const auto r = check_nonexpansive(space, family_member(space, family, g), sampling, tol);
      st.add_check_row(prefix + "nonexpansive(gamma=" + format_compact(g) + ")", r, &csv);
    }
    return;
  }
  if (type == "resolvent_identity") {
    for (double g : cfg::parse_positive_list(entry, "gammas")) {
      const auto r = check_resolvent_identity(space, family, g, sampling, tol);
      st.add_check_row(prefix + "resolvent_identity(gamma=" + format_compact(g) + ")", r, &csv);
    }
    return;
  }
  if (type == "mutual_fne" || type == "mutual_p2") {
    for (const auto& [l, m] : parse_pairs(entry)) {
      const auto T = family_member(space, family, l);
      const auto U = family_member(space, family, m);
      const auto r = type == "mutual_fne"
                         ? check_mutual_fne(space, T, U, l, m, sampling, tol)
                         : check_mutual_p2(space, T, U, l, m, sampling, tol);
      st.add_check_row(prefix + type + "(lambda=" + format_compact(l) +
                           ",mu=" + format_compact(m) + ")",
                       r, &csv);
    }
    return;
  }
  if (type == "pythagoras") {
    for (const auto& [l, m] : parse_pairs(entry)) {
      if (l > m) throw config_error("config: pythagoras pairs need lambda <= mu");
      const auto r = check_pythagoras(space, family_member(space, family, l),
                                      family_member(space, family, m), sampling, tol);
      st.add_check_row(prefix + "pythagoras(lambda=" + format_compact(l) +
                           ",mu=" + format_compact(m) + ")",
                       r, &csv);
    }
    return;
  }
  if (type == "uniform_p2") {
    const Point center = cfg::parse_point(space, cfg::require_field(entry, "center"));
    const double b = cfg::require_number(entry, "b");
    const Modulus phi = cfg::parse_modulus(cfg::require_field(entry, "modulus"));
    const auto eps = cfg::parse_epsilons(entry);
    for (double g : cfg::parse_positive_list(entry, "gammas")) {
      const auto per_eps = check_uniform_p2(space, family_member(space, family, g), center,
                                            b, phi, g, sampling, tol, eps);
      for (const auto& [e, r] : per_eps)
        st.add_check_row(prefix + "uniform_p2(gamma=" + format_compact(g) +
                             ",eps=" + format_compact(e) + ")",
                         r, &csv);
    }
    return;
  }
  if (type == "uniqueness_modulus") {
    const Point z = cfg::parse_point(space, cfg::require_field(entry, "z"));
    const Modulus phi = cfg::parse_modulus(cfg::require_field(entry, "modulus"));
    const auto eps = cfg::parse_epsilons(entry);
    for (double g : cfg::parse_positive_list(entry, "gammas")) {
      const auto per_eps = check_uniqueness_modulus(
          space, family_member(space, family, g), z, sampling, phi, g, eps, tol);
      for (const auto& [e, r] : per_eps)
        st.add_check_row(prefix + "uniqueness_modulus(gamma=" + format_compact(g) +
                             ",eps=" + format_compact(e) + ")",
                         r, &csv);
    }
    return;
  }
  throw config_error("config: unknown check type '" + type + "'");
}

inline void run_check_command(ScenarioState& st, const Json& doc) {
  const Space space = cfg::parse_space(cfg::require_field(doc, "space"));
  std::vector<ResolventFamily> families;
  if (doc.contains("families")) {
    const Json& fj = doc["families"];
    if (!fj.is_array() || fj.empty())
      throw config_error("config: 'families' must be a nonempty array");
    for (const auto& f : fj) families.push_back(cfg::parse_family(space, f));
  } else {
    families.push_back(cfg::parse_family(space, cfg::require_field(doc, "family")));
  }
  SampleConfig sampling = cfg::parse_sampling(space, cfg::require_field(doc, "sampling"));
  sampling.seed = st.seed(sampling.seed);
  const double tol = cfg::require_number(doc, "tolerance");
  const Json& checks = cfg::require_field(doc, "checks");
  if (!checks.is_array() || checks.empty())
    throw config_error("config: 'checks' must be a nonempty array");

  const std::string csv_name = st.name + ".check.csv";
  CsvWriter csv(st.out_dir / csv_name, "check_name,max_violation,tolerance,pass");
  st.files.push_back(csv_name);
  for (std::size_t fi = 0; fi < families.size(); ++fi) {
    const std::string prefix =
        families.size() > 1
            ? "f" + std::to_string(fi) + "." + family_kind_name(families[fi]) + ":"
            : "";
    for (const auto& entry : checks)
      run_check_entry(st, space, families[fi], prefix, sampling, tol, entry, csv);
  }
}

inline void run_ppa_command(ScenarioState& st, const Json& doc) {
  const Space space = cfg::parse_space(cfg::require_field(doc, "space"));
  const ResolventFamily family = cfg::parse_family(space, cfg::require_field(doc, "family"));
  const StepSchedule schedule = cfg::parse_schedule(cfg::require_field(doc, "schedule"));
  const Point x0 = cfg::parse_point(space, cfg::require_field(doc, "x0"));
  const std::size_t steps = static_cast<std::size_t>(cfg::require_uint(doc, "steps"));
  if (steps < 1) throw config_error("config: 'steps' must be >= 1");
  std::optional<Point> p;
  if (doc.contains("p")) p = cfg::parse_point(space, doc["p"]);
  const std::uint64_t stride = doc.contains("csv_stride") ? cfg::require_uint(doc, "csv_stride") : 1;
  if (stride < 1) throw config_error("config: 'csv_stride' must be >= 1");

  RunPpaOptions options;
  options.record_points = steps <= 100000;
  log_info("ppa: running " + std::to_string(steps) + " steps");
  const PpaTrace trace = run_ppa(space, family, schedule, x0, steps, p, options);

  const std::string csv_name = st.name + ".trace.csv";
  detail::CsvWriter csv(st.out_dir / csv_name, "n,gamma_n,d_to_p,step");
  st.files.push_back(csv_name);
  for (std::size_t n = 0; n < trace.steps; n += stride) {
    csv.row(std::to_string(n) + "," + format_double(trace.gammas[n]) + "," +
            (p ? format_double(trace.dist_to_p[n]) : std::string("nan")) + "," +
            format_double(trace.step_sizes[n]));
  }

  if (doc.contains("verify")) {
    const Json& verify = doc["verify"];
    if (!p) throw config_error("config: 'verify' requires a reference point 'p'");
    const auto eps = cfg::parse_epsilons(verify);
    const Modulus phi = cfg::parse_modulus(cfg::require_field(verify, "modulus"));
    const DivergenceModulus theta = theta_for_schedule(schedule);
    const double b = cfg::number_or(verify, "b", trace.max_dist_to_p());
    st.add_bound("ball_radius_b", std::nullopt, b);

    if (verify.contains("ball_check")) {
      SampleConfig ball_cfg;
      ball_cfg.seed = st.seed(cfg::require_uint(verify["ball_check"], "seed"));
      ball_cfg.count = static_cast<std::size_t>(cfg::require_uint(verify["ball_check"], "count"));
      ball_cfg.radius = b;
      ball_cfg.base = *p;
      std::vector<double> gammas{trace.gammas.front()};
      const auto [lo, hi] = std::minmax_element(trace.gammas.begin(), trace.gammas.end());
      if (*lo != gammas.front()) gammas.push_back(*lo);
      if (*hi != gammas.front() && *hi != *lo) gammas.push_back(*hi);
      const auto r = check_ball_invariance(space, family, gammas, *p, b, ball_cfg, 1e-9);
      st.add_check_row("ball_invariance", r, nullptr);
    }

    for (const auto& rc : verify_ppa_rate(trace, theta, b, phi, eps)) {
      OrderedJson row;
      row["check_name"] = "ppa_rate";
      row["epsilon"] = rc.eps;
      row["bound"] = rc.bound;
      row["pass"] = rc.pass;
      row["margin"] = rc.margin;
      if (rc.first_violation)
        row["first_violation"] = *rc.first_violation;
      else
        row["first_violation"] = nullptr;
      st.checks.push_back(std::move(row));
      st.overall_pass = st.overall_pass && rc.pass;
      st.add_bound("ppa_rate_bound", rc.eps, static_cast<double>(rc.bound));
      detail::echo_line(st.echo, rc.pass, "ppa_rate(eps=" + format_compact(rc.eps) + ")",
                        "bound=" + std::to_string(rc.bound) +
                            " margin=" + format_double(rc.margin));
    }
  }
}

inline void run_curve_command(ScenarioState& st, const Json& doc) {
  const Space space = cfg::parse_space(cfg::require_field(doc, "space"));
  const ResolventFamily family = cfg::parse_family(space, cfg::require_field(doc, "family"));
  const Point x = cfg::parse_point(space, cfg::require_field(doc, "x"));

  const Json& gj = cfg::require_field(doc, "gammas");
  std::vector<double> gammas;
  const std::string gkind = cfg::require_string(gj, "kind");
  if (gkind == "geometric") {
    gammas = geometric_gammas(cfg::require_number(gj, "start"), cfg::require_number(gj, "factor"),
                              static_cast<std::size_t>(cfg::require_uint(gj, "count")));
  } else if (gkind == "explicit") {
    gammas = cfg::parse_positive_list(gj, "values");
  } else {
    throw config_error("config: unknown gamma grid kind '" + gkind + "'");
  }

  log_info("curve: sampling " + std::to_string(gammas.size()) + " parameters");
  const auto samples = sample_curve(space, family, x, gammas);
  double b = 0.0;
  for (const auto& s : samples) b = std::max(b, s.d_from_base);
  st.add_bound("curve_radius_b", std::nullopt, b);

  // distance-to-limit column: the analytic projection when one exists,
  // otherwise the final curve point stands in
  std::optional<Point> limit;
  const FixedSetDescriptor fixed = fixed_set(space, family);
  if (std::holds_alternative<ConvexSetDescriptor>(fixed))
    limit = project_fixed_set(space, fixed, x);

  const std::string csv_name = st.name + ".curve.csv";
  detail::CsvWriter csv(st.out_dir / csv_name, "gamma,d_from_base,d_to_limit");
  st.files.push_back(csv_name);
  for (const auto& s : samples) {
    const double dl = limit ? dist(space, s.point, *limit)
                            : dist(space, s.point, samples.back().point);
    csv.row(format_double(s.gamma) + "," + format_double(s.d_from_base) + "," +
            format_double(dl));
  }

  if (doc.contains("limit")) {
    if (!limit)
      throw config_error("config: 'limit' check requires a family with an analytic fixed-point set");
    const double eps = cfg::require_number(doc["limit"], "epsilon");
    const auto lc = verify_curve_limit(space, samples, *limit, eps);
    OrderedJson row;
    row["check_name"] = "curve_limit";
    row["epsilon"] = eps;
    row["distance"] = lc.distance;
    row["pass"] = lc.pass;
    st.checks.push_back(std::move(row));
    st.overall_pass = st.overall_pass && lc.pass;
    detail::echo_line(st.echo, lc.pass, "curve_limit(eps=" + format_compact(eps) + ")",
                      "distance=" + format_double(lc.distance));
  }

  if (doc.contains("metastability")) {
    const Json& meta = doc["metastability"];
    const auto eps_list = cfg::parse_epsilons(meta);
    const Json& gfns = cfg::require_field(meta, "counterfunctions");
    if (!gfns.is_array() || gfns.empty())
      throw config_error("config: 'counterfunctions' must be a nonempty array");
    const auto pair_dist = [&](std::size_t i, std::size_t j) {
      return dist(space, samples[i].point, samples[j].point);
    };
    for (const auto& gj2 : gfns) {
      const Counterfunction g = cfg::parse_counterfunction(gj2);
      for (double eps : eps_list) {
        const std::uint64_t bound = curve_metastability_bound(b, eps, g);
        const auto witness =
            find_metastable_witness_pairwise(samples.size(), pair_dist, eps, g);
        const bool pass = witness.has_value() && *witness <= bound;
        OrderedJson row;
        row["check_name"] = "curve_metastability";
        row["epsilon"] = eps;
        row["counterfunction"] = g.label();
        row["bound"] = bound;
        if (witness)
          row["witness_index"] = *witness;
        else
          row["witness_index"] = nullptr;
        row["pass"] = pass;
        st.checks.push_back(std::move(row));
        st.overall_pass = st.overall_pass && pass;
        st.add_bound("curve_metastability_bound", eps, static_cast<double>(bound));
        detail::echo_line(st.echo, pass,
                          "curve_metastability(eps=" + format_compact(eps) + ",g=" + g.label() + ")",
                          witness ? "witness=" + std::to_string(*witness) +
                                        " bound=" + std::to_string(bound)
                                  : "no witness in sampled range");
      }
    }
  }

  if (doc.contains("continuity")) {
    const Json& cont = doc["continuity"];
    const double gamma_min = cfg::require_number(cont, "gamma_min");
    const auto eps_list = cfg::parse_epsilons(cont);
    const std::uint64_t pairs = cfg::require_uint(cont, "pairs");
    const std::uint64_t seed = st.seed(cfg::require_uint(cont, "seed"));
    const double lambda_max = cfg::number_or(cont, "lambda_max", gammas.back());
    if (!(gamma_min > 0.0) || !(lambda_max > gamma_min))
      throw config_error("config: continuity needs 0 < gamma_min < lambda_max");
    for (double eps : eps_list) {
      const double delta = curve_continuity_delta(gamma_min, b, eps);
      st.add_bound("curve_continuity_delta", eps, delta);
      double worst = 0.0;
      double worst_lambda = gamma_min, worst_mu = gamma_min;
      for (std::uint64_t i = 0; i < pairs; ++i) {
        SplitMix64 rng(substream_seed(seed, i));
        const double lambda = rng.next_in(gamma_min, lambda_max);
        const double mu = lambda + delta * rng.next_unit();
        const double d = dist(space, apply(space, family, lambda, x),
                              apply(space, family, mu, x));
        if (d > worst) {
          worst = d;
          worst_lambda = lambda;
          worst_mu = mu;
        }
      }
      const bool pass = worst <= eps + 1e-8;
      OrderedJson row;
      row["check_name"] = "curve_continuity";
      row["epsilon"] = eps;
      row["delta"] = delta;
      row["pairs"] = pairs;
      row["max_distance"] = worst;
      row["worst_lambda"] = worst_lambda;
      row["worst_mu"] = worst_mu;
      row["pass"] = pass;
      st.checks.push_back(std::move(row));
      st.overall_pass = st.overall_pass && pass;
      detail::echo_line(st.echo, pass, "curve_continuity(eps=" + format_compact(eps) + ")",
                        "max_distance=" + format_double(worst) +
                            " delta=" + format_double(delta));
    }
  }
}

inline void run_rates_command(ScenarioState& st, const Json& doc) {
  const double b = cfg::require_number(doc, "b");
  if (!(b > 0.0)) throw config_error("config: 'b' must be > 0");
  const auto eps_list = cfg::parse_epsilons(doc);
  const Counterfunction g = cfg::parse_counterfunction(cfg::require_field(doc, "counterfunction"));
  const Modulus phi = cfg::parse_modulus(cfg::require_field(doc, "modulus"));

  const Json& tj = cfg::require_field(doc, "theta");
  const std::string tkind = cfg::require_string(tj, "kind");
  DivergenceModulus theta = DivergenceModulus::ceil_modulus();
  if (tkind == "schedule")
    theta = theta_for_schedule(cfg::parse_schedule(cfg::require_field(tj, "schedule")));
  else if (tkind != "ceil")
    throw config_error("config: unknown theta kind '" + tkind + "'");

  const std::string csv_name = st.name + ".rates.csv";
  detail::CsvWriter csv(st.out_dir / csv_name, "name,epsilon,value");
  st.files.push_back(csv_name);
  const auto emit = [&](const std::string& bound_name, double eps, double value) {
    st.add_bound(bound_name, eps, value);
    csv.row(bound_name + "," + format_double(eps) + "," + format_double(value));
  };
  for (double eps : eps_list) {
    emit("monotone_metastability_bound", eps,
         static_cast<double>(monotone_metastability_bound(b, eps, g)));
    emit("descent_rate_bound", eps, static_cast<double>(descent_rate_bound(theta, b, phi, eps)));
    emit("ppa_rate_bound", eps, static_cast<double>(ppa_rate_bound(theta, b, phi, eps)));
    emit("curve_metastability_bound", eps,
         static_cast<double>(curve_metastability_bound(b, eps, g)));
    if (doc.contains("gamma_min"))
      emit("curve_continuity_delta", eps,
           curve_continuity_delta(cfg::require_number(doc, "gamma_min"), b, eps));
  }

  if (doc.contains("qmcp_trials")) {
    // empirical sweep: brute-force witnesses on random nondecreasing
    // sequences must respect the bound in every trial
    const std::uint64_t trials = cfg::require_uint(doc, "qmcp_trials");
    const std::uint64_t seed = st.seed(doc.contains("sampling")
                                           ? cfg::require_uint(doc["sampling"], "seed")
                                           : cfg::require_uint(doc, "seed"));
    std::uint64_t failures = 0;
    for (std::uint64_t i = 0; i < trials; ++i) {
      SplitMix64 rng(substream_seed(seed, i));
      const double eps = b * (0.125 + 0.875 * rng.next_unit());
      const std::uint64_t bound = monotone_metastability_bound(b, eps, g);
      const std::size_t length = detail::required_length_for(g, bound);
      std::vector<double> values(length);
      double acc = 0.0;
      for (auto& v : values) {
        acc += rng.next_unit();
        v = acc;
      }
      const double scale = acc > 0.0 ? b * rng.next_unit() / acc : 0.0;
      for (auto& v : values) v *= scale;
      const auto witness = find_metastable_witness(values, eps, g, bound);
      if (!witness || *witness > bound) ++failures;
    }
    const bool pass = failures == 0;
    OrderedJson row;
    row["check_name"] = "monotone_metastability_sweep";
    row["trials"] = trials;
    row["failures"] = failures;
    row["pass"] = pass;
    st.checks.push_back(std::move(row));
    st.overall_pass = st.overall_pass && pass;
    detail::echo_line(st.echo, pass, "monotone_metastability_sweep",
                      std::to_string(trials - failures) + "/" + std::to_string(trials) +
                          " witnesses within bound");
  }
}

}  // namespace detail

inline RunReport run_scenario(const Json& doc, const std::filesystem::path& out_dir,
                              std::optional<std::uint64_t> seed_override = std::nullopt,
                              std::ostream* echo = nullptr) {
  if (!doc.is_object()) throw config_error("config: document must be a JSON object");
  const auto version = cfg::require_uint(doc, "schema_version");
  if (version != 1) throw config_error("config: unsupported schema_version");
  const std::string name = cfg::require_string(doc, "name");
  if (name.empty() || name.find_first_not_of(
                          "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789-_") !=
                          std::string::npos)
    throw config_error("config: 'name' must be nonempty and filename-safe");
  const std::string command = cfg::require_string(doc, "command");
  if (doc.contains("epsilons") && doc["epsilons"].is_array() && doc["epsilons"].empty())
    throw config_error("config: 'epsilons' must be nonempty");

  std::filesystem::create_directories(out_dir);
  detail::ScenarioState st;
  st.name = name;
  st.out_dir = out_dir;
  st.seed_override = seed_override;
  st.echo = echo;

  log_info("scenario '" + name + "' command '" + command + "'");
  if (command == "check")
    detail::run_check_command(st, doc);
  else if (command == "ppa")
    detail::run_ppa_command(st, doc);
  else if (command == "curve")
    detail::run_curve_command(st, doc);
  else if (command == "rates")
    detail::run_rates_command(st, doc);
  else
    throw config_error("config: unknown command '" + command + "'");

  RunReport report;
  report.name = name;
  report.command = command;
  report.overall_pass = st.overall_pass;

  OrderedJson out;
  out["schema_version"] = 1;
  out["name"] = name;
  out["command"] = command;
  out["overall_pass"] = st.overall_pass;
  out["checks"] = std::move(st.checks);
  out["bounds"] = std::move(st.bounds);
  const std::string report_name = name + ".report.json";
  st.files.push_back(report_name);
  OrderedJson files = OrderedJson::array();
  for (const auto& f : st.files) files.push_back(f);
  out["files"] = std::move(files);

  {
    std::ofstream rf(out_dir / report_name, std::ios::binary);
    if (!rf) throw error("cannot open output file " + (out_dir / report_name).string());
    rf << out.dump(2) << "\n";
  }
  report.document = std::move(out);
  report.files = std::move(st.files);
  detail::echo_line(echo, report.overall_pass, "scenario " + name, "");
  return report;
}

inline Json load_scenario(const std::filesystem::path& config_path) {
  std::ifstream in(config_path, std::ios::binary);
  if (!in) throw config_error("config: cannot open " + config_path.string());
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw config_error("config: " + std::string(e.what()));
  }
}

inline RunReport run_scenario(const std::filesystem::path& config_path,
                              const std::filesystem::path& out_dir,
                              std::optional<std::uint64_t> seed_override = std::nullopt,
                              std::ostream* echo = nullptr) {
  return run_scenario(load_scenario(config_path), out_dir, seed_override, echo);
}

}  // namespace proxcat
