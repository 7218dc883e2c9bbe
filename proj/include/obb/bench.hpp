#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "obb/csv.hpp"
#include "obb/errors.hpp"
#include "obb/geometry.hpp"
#include "obb/learner.hpp"
#include "obb/losses.hpp"
#include "obb/regret.hpp"
#include "obb/steppers.hpp"

namespace obb::bench {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Configuration model. Every field is materialized after parsing, so
// serialize(parse(text)) spells out all defaults.

struct ScenarioConfig {
  std::string name = "custom";
  std::string generator = "stationary";  // stationary | drifting | random_rotation
  int dimension = 2;
  /// Explicit curvature rows. When absent, curvature is drawn with eigenvalues in eigen_range.
  std::optional<std::vector<std::vector<double>>> curvature;
  std::array<double, 2> eigen_range{1.0, 10.0};
  /// Explicit center. When absent, drawn uniformly from center_range per coordinate.
  std::optional<std::vector<double>> center;
  std::array<double, 2> center_range{-1.0, 1.0};
  double offset = 0.0;
  std::vector<double> drift;
  double decay = 1.0;
  std::uint64_t seed = 0;

  friend bool operator==(const ScenarioConfig&, const ScenarioConfig&) = default;
};

struct SetConfig {
  std::string type = "ball";  // ball | box
  std::vector<double> center;
  double radius = 1.0;
  std::vector<double> lower;
  std::vector<double> upper;

  friend bool operator==(const SetConfig&, const SetConfig&) = default;
};

struct PolicyConfig {
  std::string name;
  std::string policy;  // bb1 | bb2 | alt_bb | constant | diminishing
  /// Constant step, or the c of c/sqrt(k). Absent for diminishing means c = D / gmax.
  std::optional<double> alpha0;
  int period = 10;
  double alpha_min = 1e-6;
  double alpha_max = 1e3;
  double fallback = 0.1;

  friend bool operator==(const PolicyConfig&, const PolicyConfig&) = default;
};

struct StartConfig {
  enum class Kind { Zero, Random, Explicit };
  Kind kind = Kind::Zero;
  std::uint64_t seed = 0;
  std::vector<double> point;

  friend bool operator==(const StartConfig&, const StartConfig&) = default;
};

struct RunConfig {
  ScenarioConfig scenario;
  SetConfig set;
  std::vector<PolicyConfig> policies;
  StartConfig x0;
  int K = 10'000;
  std::string out = "runs";
  std::vector<int> checkpoints;
  /// Number of log-spaced rounds per policy in plot_data.csv.
  int plot_points = 100;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

// ---------------------------------------------------------------------------
// Bundled scenarios

inline std::vector<std::vector<double>> scaled_identity(int n, double scale) {
  std::vector<std::vector<double>> rows(static_cast<std::size_t>(n), std::vector<double>(static_cast<std::size_t>(n), 0.0));
  for (int i = 0; i < n; ++i) rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(i)] = scale;
  return rows;
}

inline const std::vector<std::string>& bundled_scenario_names() {
  static const std::vector<std::string> names{"stationary-iso", "stationary-aniso", "drifting"};
  return names;
}

/// Scenario, set and horizon of a bundled scenario. Returns nullopt for unknown names.
inline std::optional<std::pair<ScenarioConfig, SetConfig>> bundled_scenario(const std::string& name) {
  constexpr int n = 10;
  SetConfig ball{"ball", std::vector<double>(n, 0.0), 5.0, {}, {}};
  ScenarioConfig s;
  s.name = name;
  s.dimension = n;
  if (name == "stationary-iso") {
    s.generator = "stationary";
    s.curvature = scaled_identity(n, 2.0);
    s.center = std::vector<double>(n, 1.0);
  } else if (name == "stationary-aniso") {
    s.generator = "stationary";
    s.eigen_range = {1.0, 10.0};
    s.seed = 7;
  } else if (name == "drifting") {
    s.generator = "drifting";
    s.eigen_range = {1.0, 10.0};
    s.seed = 11;
    s.drift = std::vector<double>(n, 0.0);
    s.drift[0] = 0.01;
  } else {
    return std::nullopt;
  }
  return std::make_pair(s, ball);
}

// ---------------------------------------------------------------------------
// Parsing

namespace detail {

inline void reject_unknown(const json& obj, const std::string& path, std::initializer_list<const char*> known) {
  for (const auto& [key, _] : obj.items()) {
    if (std::none_of(known.begin(), known.end(), [&](const char* k) { return key == k; })) {
      throw ValidationError(path.empty() ? key : path + "." + key, "unknown key");
    }
  }
}

inline std::string join(const std::string& path, const char* key) { return path.empty() ? key : path + "." + key; }

inline double get_number(const json& v, const std::string& path) {
  if (!v.is_number()) throw ValidationError(path, "expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw ValidationError(path, "expected a finite number");
  return d;
}

inline int get_int(const json& v, const std::string& path) {
  if (!v.is_number_integer()) throw ValidationError(path, "expected an integer");
  const auto i = v.get<long long>();
  if (i < std::numeric_limits<int>::min() || i > std::numeric_limits<int>::max()) throw ValidationError(path, "integer out of range");
  return static_cast<int>(i);
}

inline std::uint64_t get_seed(const json& v, const std::string& path) {
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
    throw ValidationError(path, "expected a non-negative integer");
  }
  return v.get<std::uint64_t>();
}

inline std::string get_string(const json& v, const std::string& path) {
  if (!v.is_string()) throw ValidationError(path, "expected a string");
  return v.get<std::string>();
}

inline std::vector<double> get_vector(const json& v, const std::string& path) {
  if (!v.is_array()) throw ValidationError(path, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(get_number(v[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

inline std::array<double, 2> get_range(const json& v, const std::string& path) {
  const auto r = get_vector(v, path);
  if (r.size() != 2) throw ValidationError(path, "expected [lo, hi]");
  if (r[0] > r[1]) throw ValidationError(path, "lo exceeds hi");
  return {r[0], r[1]};
}

inline Vector to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

inline Matrix to_matrix(const std::vector<std::vector<double>>& rows) {
  const auto n = static_cast<Eigen::Index>(rows.size());
  Matrix m(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  }
  return m;
}

inline ScenarioConfig parse_scenario(const json& v, const std::string& path) {
  if (!v.is_object()) throw ValidationError(path, "expected an object or a bundled scenario name");
  reject_unknown(v, path, {"name", "generator", "dimension", "curvature", "eigen_range", "center", "center_range", "offset",
                           "drift", "decay", "seed"});
  ScenarioConfig s;
  if (v.contains("name")) s.name = get_string(v["name"], join(path, "name"));
  if (v.contains("generator")) s.generator = get_string(v["generator"], join(path, "generator"));
  if (s.generator != "stationary" && s.generator != "drifting" && s.generator != "random_rotation") {
    throw ValidationError(join(path, "generator"), "expected stationary, drifting or random_rotation");
  }
  if (!v.contains("dimension")) throw ValidationError(join(path, "dimension"), "required");
  s.dimension = get_int(v["dimension"], join(path, "dimension"));
  if (s.dimension < 1) throw ValidationError(join(path, "dimension"), "must be positive");
  const auto n = static_cast<std::size_t>(s.dimension);
  if (v.contains("curvature")) {
    const auto& c = v["curvature"];
    const auto cp = join(path, "curvature");
    if (!c.is_array() || c.size() != n) throw ValidationError(cp, "expected " + std::to_string(n) + " rows");
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < n; ++i) {
      rows.push_back(get_vector(c[i], cp + "[" + std::to_string(i) + "]"));
      if (rows.back().size() != n) throw ValidationError(cp + "[" + std::to_string(i) + "]", "row length mismatch");
    }
    s.curvature = std::move(rows);
  }
  if (v.contains("eigen_range")) s.eigen_range = get_range(v["eigen_range"], join(path, "eigen_range"));
  if (s.eigen_range[0] < 0.0) throw ValidationError(join(path, "eigen_range"), "eigenvalues must be non-negative");
  if (v.contains("center")) {
    s.center = get_vector(v["center"], join(path, "center"));
    if (s.center->size() != n) throw ValidationError(join(path, "center"), "dimension mismatch");
  }
  if (v.contains("center_range")) s.center_range = get_range(v["center_range"], join(path, "center_range"));
  if (v.contains("offset")) s.offset = get_number(v["offset"], join(path, "offset"));
  if (v.contains("drift")) {
    s.drift = get_vector(v["drift"], join(path, "drift"));
    if (s.drift.size() != n) throw ValidationError(join(path, "drift"), "dimension mismatch");
  }
  if (s.generator == "drifting" && s.drift.empty()) throw ValidationError(join(path, "drift"), "required for drifting");
  if (v.contains("decay")) s.decay = get_number(v["decay"], join(path, "decay"));
  if (s.decay < 0.0) throw ValidationError(join(path, "decay"), "must be non-negative");
  if (v.contains("seed")) s.seed = get_seed(v["seed"], join(path, "seed"));
  return s;
}

inline SetConfig parse_set(const json& v, const std::string& path) {
  if (!v.is_object()) throw ValidationError(path, "expected an object");
  reject_unknown(v, path, {"type", "center", "radius", "lower", "upper"});
  SetConfig s;
  if (!v.contains("type")) throw ValidationError(join(path, "type"), "required");
  s.type = get_string(v["type"], join(path, "type"));
  if (s.type == "ball") {
    for (const char* k : {"lower", "upper"}) {
      if (v.contains(k)) throw ValidationError(join(path, k), "not valid for a ball");
    }
    if (!v.contains("center")) throw ValidationError(join(path, "center"), "required");
    if (!v.contains("radius")) throw ValidationError(join(path, "radius"), "required");
    s.center = get_vector(v["center"], join(path, "center"));
    s.radius = get_number(v["radius"], join(path, "radius"));
    if (!(s.radius > 0.0)) throw ValidationError(join(path, "radius"), "must be positive");
  } else if (s.type == "box") {
    for (const char* k : {"center", "radius"}) {
      if (v.contains(k)) throw ValidationError(join(path, k), "not valid for a box");
    }
    if (!v.contains("lower")) throw ValidationError(join(path, "lower"), "required");
    if (!v.contains("upper")) throw ValidationError(join(path, "upper"), "required");
    s.lower = get_vector(v["lower"], join(path, "lower"));
    s.upper = get_vector(v["upper"], join(path, "upper"));
    if (s.lower.size() != s.upper.size()) throw ValidationError(join(path, "upper"), "dimension mismatch with lower");
    for (std::size_t i = 0; i < s.lower.size(); ++i) {
      if (s.lower[i] > s.upper[i]) throw ValidationError(join(path, "lower") + "[" + std::to_string(i) + "]", "exceeds upper");
    }
  } else {
    throw ValidationError(join(path, "type"), "expected ball or box");
  }
  return s;
}

inline bool valid_name(const std::string& s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char ch) {
    return std::isalnum(static_cast<unsigned char>(ch)) || ch == '_' || ch == '-' || ch == '.';
  });
}

inline PolicyConfig parse_policy(const json& v, const std::string& path) {
  PolicyConfig p;
  if (v.is_string()) {
    p.policy = v.get<std::string>();
  } else {
    if (!v.is_object()) throw ValidationError(path, "expected an object or a policy name");
    reject_unknown(v, path, {"name", "policy", "alpha0", "period", "alpha_min", "alpha_max", "fallback"});
    if (!v.contains("policy")) throw ValidationError(join(path, "policy"), "required");
    p.policy = get_string(v["policy"], join(path, "policy"));
    if (v.contains("name")) p.name = get_string(v["name"], join(path, "name"));
    if (v.contains("alpha0")) {
      const auto& a = v["alpha0"];
      if (a.is_string() && a.get<std::string>() == "auto") {
        p.alpha0.reset();
      } else {
        p.alpha0 = get_number(a, join(path, "alpha0"));
      }
    }
    if (v.contains("period")) p.period = get_int(v["period"], join(path, "period"));
    if (v.contains("alpha_min")) p.alpha_min = get_number(v["alpha_min"], join(path, "alpha_min"));
    if (v.contains("alpha_max")) p.alpha_max = get_number(v["alpha_max"], join(path, "alpha_max"));
    if (v.contains("fallback")) p.fallback = get_number(v["fallback"], join(path, "fallback"));
  }
  static const std::set<std::string> kinds{"bb1", "bb2", "alt_bb", "constant", "diminishing"};
  if (!kinds.count(p.policy)) throw ValidationError(join(path, "policy"), "unknown policy '" + p.policy + "'");
  if (p.name.empty()) p.name = p.policy;
  if (!valid_name(p.name)) throw ValidationError(join(path, "name"), "use letters, digits, '_', '-' or '.'");
  if (p.policy == "constant" && !p.alpha0) p.alpha0 = 0.1;
  if (p.alpha0 && !(*p.alpha0 > 0.0)) throw ValidationError(join(path, "alpha0"), "must be positive");
  if (p.period < 1) throw ValidationError(join(path, "period"), "must be >= 1");
  if (!(p.alpha_min > 0.0)) throw ValidationError(join(path, "alpha_min"), "must be positive");
  if (!(p.alpha_min <= p.fallback)) throw ValidationError(join(path, "fallback"), "must be >= alpha_min");
  if (!(p.fallback <= p.alpha_max)) throw ValidationError(join(path, "alpha_max"), "must be >= fallback");
  return p;
}

inline StartConfig parse_start(const json& v, const std::string& path) {
  StartConfig s;
  if (v.is_string()) {
    const auto text = v.get<std::string>();
    if (text == "zero") return s;
    if (text.rfind("random(", 0) == 0 && text.size() > 8 && text.back() == ')') {
      const auto digits = text.substr(7, text.size() - 8);
      if (digits.empty() || !std::all_of(digits.begin(), digits.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
        throw ValidationError(path, "expected random(<non-negative integer>)");
      }
      s.kind = StartConfig::Kind::Random;
      try {
        s.seed = std::stoull(digits);
      } catch (const std::exception&) {
        throw ValidationError(path, "seed out of range");
      }
      return s;
    }
    throw ValidationError(path, "expected \"zero\", \"random(seed)\" or a vector");
  }
  s.kind = StartConfig::Kind::Explicit;
  s.point = get_vector(v, path);
  return s;
}

}  // namespace detail

inline LossSequence build_sequence(const ScenarioConfig& s, int horizon);
inline FeasibleSet build_set(const SetConfig& s);

/// Parses and validates a JSON run configuration; errors carry the offending field path.
inline RunConfig parse_config(const json& doc) {
  using namespace detail;
  if (!doc.is_object()) throw ValidationError("", "config must be a JSON object");
  reject_unknown(doc, "", {"scenario", "set", "policies", "x0", "K", "out", "checkpoints", "plot_points"});
  RunConfig cfg;

  if (!doc.contains("scenario")) throw ValidationError("scenario", "required");
  std::optional<SetConfig> bundled_set;
  const auto& sc = doc["scenario"];
  if (sc.is_string()) {
    auto b = bundled_scenario(sc.get<std::string>());
    if (!b) throw ValidationError("scenario", "unknown bundled scenario '" + sc.get<std::string>() + "'");
    cfg.scenario = b->first;
    bundled_set = b->second;
  } else {
    cfg.scenario = parse_scenario(sc, "scenario");
  }

  if (doc.contains("set")) {
    cfg.set = parse_set(doc["set"], "set");
  } else if (bundled_set) {
    cfg.set = *bundled_set;
  } else {
    throw ValidationError("set", "required");
  }
  const std::size_t set_dim = cfg.set.type == "ball" ? cfg.set.center.size() : cfg.set.lower.size();
  if (set_dim != static_cast<std::size_t>(cfg.scenario.dimension)) {
    throw ValidationError("set", "dimension " + std::to_string(set_dim) + " does not match scenario dimension " +
                                     std::to_string(cfg.scenario.dimension));
  }

  if (!doc.contains("policies")) throw ValidationError("policies", "required");
  const auto& pol = doc["policies"];
  if (!pol.is_array() || pol.empty()) throw ValidationError("policies", "expected a non-empty array");
  std::set<std::string> names;
  for (std::size_t i = 0; i < pol.size(); ++i) {
    const auto path = "policies[" + std::to_string(i) + "]";
    cfg.policies.push_back(parse_policy(pol[i], path));
    if (!names.insert(cfg.policies.back().name).second) {
      throw ValidationError(path + ".name", "duplicate policy name '" + cfg.policies.back().name + "'");
    }
  }

  if (doc.contains("x0")) cfg.x0 = parse_start(doc["x0"], "x0");
  if (cfg.x0.kind == StartConfig::Kind::Explicit && cfg.x0.point.size() != static_cast<std::size_t>(cfg.scenario.dimension)) {
    throw ValidationError("x0", "dimension mismatch");
  }
  if (doc.contains("K")) cfg.K = get_int(doc["K"], "K");
  if (cfg.K < 1) throw ValidationError("K", "must be positive");
  if (doc.contains("out")) cfg.out = get_string(doc["out"], "out");
  if (doc.contains("checkpoints")) {
    const auto& cp = doc["checkpoints"];
    if (!cp.is_array()) throw ValidationError("checkpoints", "expected an array of round indices");
    for (std::size_t i = 0; i < cp.size(); ++i) {
      const auto path = "checkpoints[" + std::to_string(i) + "]";
      const int k = get_int(cp[i], path);
      if (k < 1) throw ValidationError(path, "must be >= 1");
      if (k > cfg.K) throw ValidationError(path, "checkpoint " + std::to_string(k) + " exceeds K = " + std::to_string(cfg.K));
      cfg.checkpoints.push_back(k);
    }
  } else {
    for (int k : {100, 1000, 10000}) {
      if (k <= cfg.K) cfg.checkpoints.push_back(k);
    }
  }
  if (doc.contains("plot_points")) cfg.plot_points = get_int(doc["plot_points"], "plot_points");
  if (cfg.plot_points < 1) throw ValidationError("plot_points", "must be positive");

  // Semantic checks that need the built objects (PSD curvature, generator parameters).
  try {
    (void)build_sequence(cfg.scenario, 1);
  } catch (const std::invalid_argument& e) {
    throw ValidationError("scenario", e.what());
  }
  try {
    (void)build_set(cfg.set);
  } catch (const std::invalid_argument& e) {
    throw ValidationError("set", e.what());
  }
  return cfg;
}

inline RunConfig parse_config(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError("", std::string("malformed JSON: ") + e.what());
  }
  return parse_config(doc);
}

inline json serialize(const RunConfig& cfg) {
  json sc = {{"name", cfg.scenario.name},
             {"generator", cfg.scenario.generator},
             {"dimension", cfg.scenario.dimension},
             {"eigen_range", cfg.scenario.eigen_range},
             {"center_range", cfg.scenario.center_range},
             {"offset", cfg.scenario.offset},
             {"decay", cfg.scenario.decay},
             {"seed", cfg.scenario.seed}};
  if (cfg.scenario.curvature) sc["curvature"] = *cfg.scenario.curvature;
  if (cfg.scenario.center) sc["center"] = *cfg.scenario.center;
  if (!cfg.scenario.drift.empty()) sc["drift"] = cfg.scenario.drift;

  json set = {{"type", cfg.set.type}};
  if (cfg.set.type == "ball") {
    set["center"] = cfg.set.center;
    set["radius"] = cfg.set.radius;
  } else {
    set["lower"] = cfg.set.lower;
    set["upper"] = cfg.set.upper;
  }

  json policies = json::array();
  for (const auto& p : cfg.policies) {
    json j = {{"name", p.name}, {"policy", p.policy}, {"period", p.period}, {"alpha_min", p.alpha_min},
              {"alpha_max", p.alpha_max}, {"fallback", p.fallback}};
    j["alpha0"] = p.alpha0 ? json(*p.alpha0) : json("auto");
    policies.push_back(std::move(j));
  }

  json x0;
  switch (cfg.x0.kind) {
    case StartConfig::Kind::Zero: x0 = "zero"; break;
    case StartConfig::Kind::Random: x0 = "random(" + std::to_string(cfg.x0.seed) + ")"; break;
    case StartConfig::Kind::Explicit: x0 = cfg.x0.point; break;
  }
  return {{"scenario", sc}, {"set", set},         {"policies", policies},       {"x0", x0},
          {"K", cfg.K},     {"out", cfg.out},     {"checkpoints", cfg.checkpoints}, {"plot_points", cfg.plot_points}};
}

// ---------------------------------------------------------------------------
// Building library objects from a config

inline LossSequence build_sequence(const ScenarioConfig& s, int horizon) {
  const auto n = static_cast<Eigen::Index>(s.dimension);
  if (s.generator == "random_rotation") {
    RandomRotation r{n, s.eigen_range[0], s.eigen_range[1], s.center_range[0], s.center_range[1]};
    return LossSequence(r, horizon, s.seed);
  }
  // Stationary and drifting share one base loss; unspecified parts come from the seed.
  Rng rng(s.seed);
  QuadraticLoss drawn = random_quadratic(n, s.eigen_range[0], s.eigen_range[1], s.center_range[0], s.center_range[1], rng);
  Matrix a = s.curvature ? detail::to_matrix(*s.curvature) : drawn.curvature();
  Vector c = s.center ? detail::to_vector(*s.center) : drawn.center();
  QuadraticLoss base(std::move(a), std::move(c), s.offset);
  if (s.generator == "drifting") {
    return LossSequence(DriftingCenter{std::move(base), detail::to_vector(s.drift), s.decay}, horizon, s.seed);
  }
  return LossSequence(Stationary{std::move(base)}, horizon, s.seed);
}

inline FeasibleSet build_set(const SetConfig& s) {
  if (s.type == "ball") return FeasibleSet::ball(detail::to_vector(s.center), s.radius);
  return FeasibleSet::box(detail::to_vector(s.lower), detail::to_vector(s.upper));
}

/// Uniform draw from the set's bounding box, projected onto the set.
inline Vector build_start(const StartConfig& s, const FeasibleSet& set) {
  const auto n = set.dimension();
  switch (s.kind) {
    case StartConfig::Kind::Zero: return Vector::Zero(n);
    case StartConfig::Kind::Explicit: return detail::to_vector(s.point);
    case StartConfig::Kind::Random: break;
  }
  Vector lo(n), hi(n);
  if (set.is_ball()) {
    lo = set.as_ball().center.array() - set.as_ball().radius;
    hi = set.as_ball().center.array() + set.as_ball().radius;
  } else {
    lo = set.as_box().lower;
    hi = set.as_box().upper;
  }
  Rng rng(s.seed);
  Vector x(n);
  for (Eigen::Index i = 0; i < n; ++i) x[i] = rng.uniform(lo[i], hi[i]);
  return project(set, x);
}

inline StepPolicy build_policy(const PolicyConfig& p, double auto_scale) {
  const Safeguard g{p.alpha_min, p.alpha_max, p.fallback};
  if (p.policy == "bb1") return StepPolicy::bb1(g);
  if (p.policy == "bb2") return StepPolicy::bb2(g);
  if (p.policy == "alt_bb") return StepPolicy::alternating(p.period, g);
  if (p.policy == "constant") return StepPolicy::constant(p.alpha0.value_or(0.1));
  return StepPolicy::diminishing(p.alpha0.value_or(auto_scale));
}

// ---------------------------------------------------------------------------
// Running

struct SummaryRow {
  std::string policy;
  double R_K = 0.0;
  double avg_R_K = 0.0;
  double slope = 0.0;
  double zinkevich_bound = 0.0;
  double psi = 0.0;
  double zeta = 0.0;
  Condition cond_t1 = Condition::Indeterminate;
  bool flag_P = false;
  int degenerate_rounds = 0;
  double wall_ms = 0.0;
};

struct PolicyRun {
  PolicyConfig config;
  std::optional<TrajectoryRecord> trajectory;
  std::optional<RegretReport> report;
  std::optional<SummaryRow> summary;
  std::string error;  // set when the run hit a numerical failure
};

struct MatrixResult {
  std::vector<PolicyRun> runs;
  bool ok() const {
    return std::all_of(runs.begin(), runs.end(), [](const PolicyRun& r) { return r.error.empty(); });
  }
};

inline PolicyRun execute_policy(const RunConfig& cfg, const PolicyConfig& pc) {
  PolicyRun out;
  out.config = pc;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    const LossSequence seq = build_sequence(cfg.scenario, cfg.K);
    const FeasibleSet set = build_set(cfg.set);
    const Vector x0 = build_start(cfg.x0, set);
    double auto_scale = 1.0;
    if (pc.policy == "diminishing" && !pc.alpha0) {
      const double gmax = max_gradient_norm(seq, set);
      auto_scale = gmax > 0.0 ? diameter(set) / gmax : 1.0;
    }
    StepPolicy policy = build_policy(pc, auto_scale);
    TrajectoryRecord traj = run(seq, policy, set, x0, cfg.K);
    traj.meta.policy = pc.name;
    RegretReport rep = make_report(traj, seq, set);
    const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    out.summary = SummaryRow{pc.name,        rep.final_regret(), rep.final_average(),      rep.slope.slope,
                             rep.zinkevich,  rep.bb1.psi,        rep.bb2.zeta,             rep.bb1.condition,
                             rep.bb1.flag_P, traj.degenerate_rounds(), ms};
    out.trajectory = std::move(traj);
    out.report = std::move(rep);
  } catch (const NumericalFailure& e) {
    out.error = e.what();
  }
  return out;
}

/// Runs every policy of the config. `jobs` > 1 runs policies concurrently; results keep config order.
inline MatrixResult execute_matrix(const RunConfig& cfg, int jobs = 1) {
  MatrixResult result;
  result.runs.resize(cfg.policies.size());
  const int workers = std::clamp(jobs, 1, static_cast<int>(cfg.policies.size()));
  if (workers == 1) {
    for (std::size_t i = 0; i < cfg.policies.size(); ++i) result.runs[i] = execute_policy(cfg, cfg.policies[i]);
    return result;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < cfg.policies.size(); i = next++) result.runs[i] = execute_policy(cfg, cfg.policies[i]);
    });
  }
  for (auto& t : pool) t.join();
  return result;
}

inline std::string summary_csv(const MatrixResult& result) {
  std::string out = "policy,R_K,avg_R_K,slope,zinkevich_bound,psi,zeta,cond_t1,flag_P,degenerate_rounds,wall_ms\n";
  for (const auto& r : result.runs) {
    if (!r.summary) continue;
    const auto& s = *r.summary;
    out += s.policy + "," + csv::num(s.R_K) + "," + csv::num(s.avg_R_K) + "," + csv::num(s.slope) + "," +
           csv::num(s.zinkevich_bound) + "," + csv::num(s.psi) + "," + csv::num(s.zeta) + "," + to_string(s.cond_t1) + "," +
           csv::flag(s.flag_P) + "," + std::to_string(s.degenerate_rounds) + "," + csv::num(s.wall_ms) + "\n";
  }
  return out;
}

inline std::string checkpoints_csv(const MatrixResult& result, const std::vector<int>& checkpoints) {
  std::string out = "policy,k,regret,avg_regret,lin_regret\n";
  for (const auto& r : result.runs) {
    if (!r.report) continue;
    for (int k : checkpoints) {
      if (k > r.report->rounds()) continue;
      const auto i = static_cast<std::size_t>(k - 1);
      out += r.config.name + "," + std::to_string(k) + "," + csv::num(r.report->regret[i]) + "," +
             csv::num(r.report->average[i]) + "," + csv::num(r.report->linearized[i]) + "\n";
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Plot data

/// Either `points` log-spaced rounds per policy, or every `stride`-th round.
struct Decimation {
  enum class Mode { Log, Stride };
  Mode mode = Mode::Log;
  int value = 100;

  static Decimation log(int points) { return {Mode::Log, points}; }
  static Decimation stride(int every) { return {Mode::Stride, every}; }
};

/// Rounds kept for a curve of length K.
inline std::vector<int> decimated_rounds(int horizon, Decimation dec) {
  if (dec.value < 1) throw std::invalid_argument("decimation must be positive");
  std::vector<int> ks;
  if (dec.mode == Decimation::Mode::Stride) {
    for (int k = dec.value; k <= horizon; k += dec.value) ks.push_back(k);
    return ks;
  }
  const int n = std::min(dec.value, horizon);
  if (n == 1) return {horizon};
  // n distinct rounds from 1 to K, as close to geometric spacing as integers allow.
  int prev = 0;
  for (int i = 0; i < n; ++i) {
    const double target = std::exp(std::log(static_cast<double>(horizon)) * i / (n - 1));
    int k = std::max(prev + 1, static_cast<int>(std::llround(target)));
    k = std::min(k, horizon - (n - 1 - i));
    ks.push_back(k);
    prev = k;
  }
  return ks;
}

/// Long-format `policy,k,regret,avg_regret` for external plotting.
inline void emit_plot_data(const std::vector<RegretReport>& reports, const std::filesystem::path& path,
                           Decimation dec = {}) {
  if (reports.empty()) throw std::invalid_argument("emit_plot_data: no reports");
  std::string out = "policy,k,regret,avg_regret\n";
  for (const auto& r : reports) {
    for (int k : decimated_rounds(r.rounds(), dec)) {
      const auto i = static_cast<std::size_t>(k - 1);
      out += r.policy + "," + std::to_string(k) + "," + csv::num(r.regret[i]) + "," + csv::num(r.average[i]) + "\n";
    }
  }
  csv::write_file(path, out);
}

/// Rebuilds the regret curves of a finished run directory (summary.csv + regret_<policy>.csv).
inline std::vector<RegretReport> load_reports(const std::filesystem::path& dir) {
  const std::string summary = csv::read_file(dir / "summary.csv");
  std::vector<RegretReport> reports;
  std::size_t pos = summary.find('\n');
  while (pos != std::string::npos && pos + 1 < summary.size()) {
    const auto end = summary.find('\n', pos + 1);
    const auto line = summary.substr(pos + 1, end == std::string::npos ? std::string::npos : end - pos - 1);
    pos = end;
    if (line.empty()) continue;
    RegretReport r;
    r.policy = csv::split(line).front();
    const std::string body = csv::read_file(dir / ("regret_" + r.policy + ".csv"));
    std::size_t p = body.find('\n');
    while (p != std::string::npos && p + 1 < body.size()) {
      const auto e = body.find('\n', p + 1);
      const auto row = body.substr(p + 1, e == std::string::npos ? std::string::npos : e - p - 1);
      p = e;
      if (row.empty()) break;  // summary block follows
      const auto cells = csv::split(row);
      if (cells.size() != 4) throw IoError("malformed row in regret_" + r.policy + ".csv");
      r.regret.push_back(std::stod(cells[1]));
      r.average.push_back(std::stod(cells[2]));
      r.linearized.push_back(std::stod(cells[3]));
    }
    if (r.regret.empty()) throw IoError("regret_" + r.policy + ".csv has no rows");
    reports.push_back(std::move(r));
  }
  if (reports.empty()) throw IoError("no runs listed in " + (dir / "summary.csv").string());
  return reports;
}

/**
 * Writes trajectory_<policy>.csv and regret_<policy>.csv per successful run,
 * then summary.csv, checkpoints.csv and plot_data.csv. Failed runs leave the
 * other runs' outputs in place.
 */
inline void write_outputs(const RunConfig& cfg, const MatrixResult& result, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory '" + dir.string() + "': " + ec.message());
  std::vector<RegretReport> reports;
  for (const auto& r : result.runs) {
    if (!r.report) continue;
    csv::write_file(dir / ("trajectory_" + r.config.name + ".csv"), trajectory_csv(*r.trajectory));
    csv::write_file(dir / ("regret_" + r.config.name + ".csv"), regret_csv(*r.report));
    reports.push_back(*r.report);
  }
  csv::write_file(dir / "summary.csv", summary_csv(result));
  csv::write_file(dir / "checkpoints.csv", checkpoints_csv(result, cfg.checkpoints));
  if (!reports.empty()) emit_plot_data(reports, dir / "plot_data.csv", Decimation::log(cfg.plot_points));
}

struct MatrixOptions {
  int jobs = 1;
  std::optional<std::filesystem::path> out;
};

/// Executes the config and writes all outputs; the returned result lists per-policy failures.
inline MatrixResult run_matrix(const RunConfig& cfg, MatrixOptions opts = {}) {
  MatrixResult result = execute_matrix(cfg, opts.jobs);
  write_outputs(cfg, result, opts.out.value_or(std::filesystem::path(cfg.out)));
  return result;
}

}  // namespace obb::bench
