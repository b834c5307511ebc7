#include "marital/scenario.hpp"

#include <cmath>
#include <cstdio>
#include <initializer_list>
#include <set>
#include <sstream>

#include <json.hpp>

namespace marital {

namespace {

using nlohmann::json;

struct KindName {
  ExperimentKind kind;
  const char* name;
};

constexpr KindName kKinds[] = {
    {ExperimentKind::Solve, "solve"},           {ExperimentKind::SweepEpsilon, "sweep_epsilon"},
    {ExperimentKind::SweepAlpha, "sweep_alpha"}, {ExperimentKind::Perturb, "perturb"},
    {ExperimentKind::Classify, "classify"},     {ExperimentKind::Robustness, "robustness"},
    {ExperimentKind::Oracle, "oracle"},
};

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void reject_unknown(const json& obj, const std::string& where,
                    std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw ScenarioError(where, "must be an object");
  const std::set<std::string> keys(allowed.begin(), allowed.end());
  for (const auto& [k, _] : obj.items()) {
    if (!keys.count(k)) {
      throw ScenarioError(where.empty() ? k : where + "." + k, "unknown key");
    }
  }
}

std::string path(const std::string& where, const char* key) {
  return where.empty() ? key : where + "." + key;
}

void read_double(const json& obj, const std::string& where, const char* key, double& out) {
  if (!obj.contains(key)) return;
  const json& v = obj.at(key);
  if (!v.is_number()) throw ScenarioError(path(where, key), "must be a number");
  out = v.get<double>();
  if (!std::isfinite(out)) throw ScenarioError(path(where, key), "must be finite");
}

template <class Int>
void read_count(const json& obj, const std::string& where, const char* key, Int& out) {
  if (!obj.contains(key)) return;
  const json& v = obj.at(key);
  if (!v.is_number_integer() || v.get<long long>() < 0) {
    throw ScenarioError(path(where, key), "must be a non-negative integer");
  }
  out = static_cast<Int>(v.get<unsigned long long>());
}

void read_bool(const json& obj, const std::string& where, const char* key, bool& out) {
  if (!obj.contains(key)) return;
  if (!obj.at(key).is_boolean()) throw ScenarioError(path(where, key), "must be true or false");
  out = obj.at(key).get<bool>();
}

void read_list(const json& obj, const std::string& where, const char* key,
               std::vector<double>& out) {
  if (!obj.contains(key)) return;
  const json& v = obj.at(key);
  if (!v.is_array()) throw ScenarioError(path(where, key), "must be an array of numbers");
  out.clear();
  for (const auto& e : v) {
    if (!e.is_number()) throw ScenarioError(path(where, key), "must be an array of numbers");
    out.push_back(e.get<double>());
  }
}

void read_optional_double(const json& obj, const std::string& where, const char* key,
                          std::optional<double>& out) {
  if (!obj.contains(key)) return;
  if (obj.at(key).is_null()) {
    out.reset();
    return;
  }
  double v = 0.0;
  read_double(obj, where, key, v);
  out = v;
}

// Writes a JSON object with keys in insertion order and pre-formatted values.
class ObjectWriter {
 public:
  explicit ObjectWriter(int indent) : indent_(indent) {}

  ObjectWriter& raw(const std::string& key, const std::string& value) {
    entries_.emplace_back(key, value);
    return *this;
  }
  ObjectWriter& num(const std::string& key, double v) { return raw(key, fmt_double(v)); }
  ObjectWriter& count(const std::string& key, unsigned long long v) {
    return raw(key, std::to_string(v));
  }
  ObjectWriter& boolean(const std::string& key, bool v) { return raw(key, v ? "true" : "false"); }
  ObjectWriter& str(const std::string& key, const std::string& v) {
    return raw(key, json(v).dump());
  }
  ObjectWriter& list(const std::string& key, const std::vector<double>& v) {
    std::string s = "[";
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + fmt_double(v[i]);
    return raw(key, s + "]");
  }

  std::string str() const {
    if (entries_.empty()) return "{}";
    const std::string pad(static_cast<std::size_t>(indent_ + 2), ' ');
    std::string out = "{\n";
    for (std::size_t i = 0; i < entries_.size(); ++i) {
      out += pad + json(entries_[i].first).dump() + ": " + entries_[i].second;
      out += i + 1 < entries_.size() ? ",\n" : "\n";
    }
    return out + std::string(static_cast<std::size_t>(indent_), ' ') + "}";
  }

 private:
  int indent_;
  std::vector<std::pair<std::string, std::string>> entries_;
};

OracleMode parse_mode(const std::string& s) {
  if (s == "auto") return OracleMode::Auto;
  if (s == "exhaustive") return OracleMode::Exhaustive;
  if (s == "coordinate_descent") return OracleMode::CoordinateDescent;
  throw ScenarioError("experiment.mode", "must be one of auto, exhaustive, coordinate_descent");
}

void parse_params(const json& j, ModelParams& p) {
  const std::string w = "params";
  reject_unknown(j, w,
                 {"r1", "r2", "xbar1", "xbar2", "alpha", "epsilon", "u0", "u1max", "u2max", "T",
                  "x1_0", "x2_0"});
  read_double(j, w, "r1", p.r1);
  read_double(j, w, "r2", p.r2);
  read_double(j, w, "xbar1", p.xbar1);
  read_double(j, w, "xbar2", p.xbar2);
  read_double(j, w, "alpha", p.alpha);
  if (j.contains("epsilon")) {
    const json& e = j.at("epsilon");
    if (e.is_string() && e.get<std::string>() == "Infinite") {
      p.epsilon = CostScale::infinite();
    } else if (e.is_number()) {
      p.epsilon = CostScale::finite(e.get<double>());
    } else {
      throw ScenarioError("params.epsilon", "must be a positive number or \"Infinite\"");
    }
  }
  read_double(j, w, "u0", p.u0);
  read_double(j, w, "u1max", p.u1max);
  read_double(j, w, "u2max", p.u2max);
  read_double(j, w, "T", p.T);
  read_double(j, w, "x1_0", p.x1_0);
  read_double(j, w, "x2_0", p.x2_0);
}

void parse_solver(const json& j, SolverConfig& c) {
  const std::string w = "solver";
  reject_unknown(j, w,
                 {"n_steps", "tolerance", "relaxation", "max_iters", "initial_u1", "initial_u2"});
  read_count(j, w, "n_steps", c.n_steps);
  read_double(j, w, "tolerance", c.tolerance);
  read_double(j, w, "relaxation", c.relaxation);
  if (j.contains("max_iters")) {
    if (!j.at("max_iters").is_number_integer())
      throw ScenarioError("solver.max_iters", "must be an integer");
    c.max_iters = j.at("max_iters").get<int>();
  }
  read_optional_double(j, w, "initial_u1", c.initial_u1);
  read_optional_double(j, w, "initial_u2", c.initial_u2);
}

void parse_styles(const json& j, StyleThresholds& s) {
  const std::string w = "styles";
  reject_unknown(j, w, {"low", "high", "flat", "horizon_fraction"});
  read_double(j, w, "low", s.low);
  read_double(j, w, "high", s.high);
  read_double(j, w, "flat", s.flat);
  read_double(j, w, "horizon_fraction", s.horizon_fraction);
}

void parse_experiment(const json& j, ExperimentKind kind, ExperimentSpec& e) {
  const std::string w = "experiment";
  switch (kind) {
    case ExperimentKind::Solve:
      reject_unknown(j, w, {});
      break;
    case ExperimentKind::SweepEpsilon:
    case ExperimentKind::SweepAlpha:
      reject_unknown(j, w, {"values"});
      read_list(j, w, "values", e.values);
      break;
    case ExperimentKind::Perturb:
      reject_unknown(j, w, {"order"});
      read_count(j, w, "order", e.order);
      break;
    case ExperimentKind::Classify:
      reject_unknown(j, w, {"u1", "u2", "lambda_min", "lambda_max", "field_points"});
      read_double(j, w, "u1", e.u1);
      read_double(j, w, "u2", e.u2);
      read_double(j, w, "lambda_min", e.lambda_min);
      read_double(j, w, "lambda_max", e.lambda_max);
      read_count(j, w, "field_points", e.field_points);
      break;
    case ExperimentKind::Robustness:
      reject_unknown(j, w, {"seed", "samples", "terminal_times", "window", "ic_min", "ic_max"});
      if (j.contains("seed")) {
        if (!j.at("seed").is_number_unsigned())
          throw ScenarioError("experiment.seed", "must be an unsigned 64-bit integer");
        e.seed = j.at("seed").get<std::uint64_t>();
      }
      read_count(j, w, "samples", e.samples);
      read_list(j, w, "terminal_times", e.terminal_times);
      read_double(j, w, "window", e.window);
      read_double(j, w, "ic_min", e.ic_min);
      read_double(j, w, "ic_max", e.ic_max);
      break;
    case ExperimentKind::Oracle:
      reject_unknown(j, w, {"segments", "levels", "n_steps", "mode"});
      read_count(j, w, "segments", e.segments);
      read_count(j, w, "levels", e.levels);
      read_count(j, w, "n_steps", e.oracle_steps);
      if (j.contains("mode")) {
        if (!j.at("mode").is_string()) throw ScenarioError("experiment.mode", "must be a string");
        e.mode = parse_mode(j.at("mode").get<std::string>());
      }
      break;
  }
}

}  // namespace

std::string to_string(ExperimentKind k) {
  for (const auto& kn : kKinds) {
    if (kn.kind == k) return kn.name;
  }
  return "solve";
}

std::string to_string(OracleMode m) {
  switch (m) {
    case OracleMode::Auto: return "auto";
    case OracleMode::Exhaustive: return "exhaustive";
    case OracleMode::CoordinateDescent: return "coordinate_descent";
  }
  return "auto";
}

void Scenario::validate() const {
  try {
    params.validate();
  } catch (const InvalidParams& e) {
    throw ScenarioError("params." + e.key(), e.constraint());
  }
  try {
    solver.validate();
  } catch (const InvalidParams& e) {
    throw ScenarioError("solver." + e.key(), e.constraint());
  }
  if (!(styles.low >= 0.0 && styles.low <= 1.0))
    throw ScenarioError("styles.low", "must lie in [0, 1]");
  if (!(styles.high >= 0.0 && styles.high <= 1.0))
    throw ScenarioError("styles.high", "must lie in [0, 1]");
  if (!(styles.flat > 0.0)) throw ScenarioError("styles.flat", "must be > 0");
  if (!(styles.horizon_fraction > 0.0 && styles.horizon_fraction <= 1.0))
    throw ScenarioError("styles.horizon_fraction", "must lie in (0, 1]");

  const ExperimentSpec& e = experiment;
  switch (kind) {
    case ExperimentKind::Solve:
      break;
    case ExperimentKind::SweepEpsilon:
      if (e.values.empty()) throw ScenarioError("experiment.values", "must not be empty");
      for (double v : e.values) {
        if (!(std::isfinite(v) && v > 0.0))
          throw ScenarioError("experiment.values", "every epsilon must be finite and > 0");
      }
      break;
    case ExperimentKind::SweepAlpha:
      if (e.values.empty()) throw ScenarioError("experiment.values", "must not be empty");
      for (double v : e.values) {
        if (!(v >= 0.0 && v <= 1.0))
          throw ScenarioError("experiment.values", "every alpha must lie in [0, 1]");
      }
      break;
    case ExperimentKind::Perturb:
      if (e.order != 0 && e.order != 1) throw ScenarioError("experiment.order", "must be 0 or 1");
      if (params.epsilon.is_infinite())
        throw ScenarioError("params.epsilon", "perturb needs a finite epsilon");
      if (!(params.alpha > 0.0 && params.alpha < 1.0))
        throw ScenarioError("params.alpha", "perturb needs 0 < alpha < 1");
      break;
    case ExperimentKind::Classify:
      if (!(e.lambda_min < e.lambda_max))
        throw ScenarioError("experiment.lambda_max", "must exceed lambda_min");
      if (e.field_points < 2) throw ScenarioError("experiment.field_points", "must be >= 2");
      break;
    case ExperimentKind::Robustness: {
      if (!e.seed) throw ScenarioError("experiment.seed", "required for randomized experiments");
      if (e.samples < 2) throw ScenarioError("experiment.samples", "must be >= 2");
      if (e.terminal_times.empty())
        throw ScenarioError("experiment.terminal_times", "must not be empty");
      if (!(e.window > 0.0)) throw ScenarioError("experiment.window", "must be > 0");
      for (double T : e.terminal_times) {
        if (!(std::isfinite(T) && T > 0.0))
          throw ScenarioError("experiment.terminal_times", "every T must be finite and > 0");
        const double ratio = T / e.window;
        if (std::abs(ratio - std::round(ratio)) > 1e-9 * ratio || std::round(ratio) < 1.0)
          throw ScenarioError("experiment.window", "must divide every terminal time");
      }
      if (!(e.ic_min < e.ic_max)) throw ScenarioError("experiment.ic_max", "must exceed ic_min");
      break;
    }
    case ExperimentKind::Oracle:
      if (e.segments < 1) throw ScenarioError("experiment.segments", "must be >= 1");
      if (e.levels < 2) throw ScenarioError("experiment.levels", "must be >= 2");
      if (e.oracle_steps < 2) throw ScenarioError("experiment.n_steps", "must be >= 2");
      break;
  }
}

Scenario parse_scenario(const std::string& text, std::optional<std::uint64_t> seed_override) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ScenarioError("<document>", std::string("malformed JSON: ") + e.what());
  }
  reject_unknown(j, "", {"kind", "params", "solver", "styles", "allow_nonconverged", "experiment"});

  Scenario s;
  if (!j.contains("kind") || !j.at("kind").is_string()) {
    throw ScenarioError("kind", "required string");
  }
  const std::string kind = j.at("kind").get<std::string>();
  bool found = false;
  for (const auto& kn : kKinds) {
    if (kind == kn.name) {
      s.kind = kn.kind;
      found = true;
    }
  }
  if (!found) {
    throw ScenarioError("kind", "must be one of solve, sweep_epsilon, sweep_alpha, perturb, "
                                "classify, robustness, oracle");
  }

  if (j.contains("params")) parse_params(j.at("params"), s.params);
  if (j.contains("solver")) parse_solver(j.at("solver"), s.solver);
  if (j.contains("styles")) parse_styles(j.at("styles"), s.styles);
  read_bool(j, "", "allow_nonconverged", s.allow_nonconverged);
  if (j.contains("experiment")) parse_experiment(j.at("experiment"), s.kind, s.experiment);
  if (seed_override && s.kind == ExperimentKind::Robustness) s.experiment.seed = seed_override;

  s.validate();
  return s;
}

std::string serialize_scenario(const Scenario& s) {
  const ModelParams& p = s.params;
  ObjectWriter params(2);
  params.num("r1", p.r1).num("r2", p.r2).num("xbar1", p.xbar1).num("xbar2", p.xbar2);
  params.num("alpha", p.alpha);
  if (p.epsilon.is_infinite()) {
    params.str("epsilon", "Infinite");
  } else {
    params.num("epsilon", p.epsilon.value());
  }
  params.num("u0", p.u0).num("u1max", p.u1max).num("u2max", p.u2max).num("T", p.T);
  params.num("x1_0", p.x1_0).num("x2_0", p.x2_0);

  ObjectWriter solver(2);
  solver.count("n_steps", s.solver.n_steps)
      .num("tolerance", s.solver.tolerance)
      .num("relaxation", s.solver.relaxation)
      .raw("max_iters", std::to_string(s.solver.max_iters));
  if (s.solver.initial_u1) solver.num("initial_u1", *s.solver.initial_u1);
  if (s.solver.initial_u2) solver.num("initial_u2", *s.solver.initial_u2);

  ObjectWriter styles(2);
  styles.num("low", s.styles.low)
      .num("high", s.styles.high)
      .num("flat", s.styles.flat)
      .num("horizon_fraction", s.styles.horizon_fraction);

  const ExperimentSpec& e = s.experiment;
  ObjectWriter exp(2);
  switch (s.kind) {
    case ExperimentKind::Solve:
      break;
    case ExperimentKind::SweepEpsilon:
    case ExperimentKind::SweepAlpha:
      exp.list("values", e.values);
      break;
    case ExperimentKind::Perturb:
      exp.count("order", static_cast<unsigned long long>(e.order));
      break;
    case ExperimentKind::Classify:
      exp.num("u1", e.u1).num("u2", e.u2).num("lambda_min", e.lambda_min);
      exp.num("lambda_max", e.lambda_max).count("field_points", e.field_points);
      break;
    case ExperimentKind::Robustness:
      if (e.seed) exp.count("seed", *e.seed);
      exp.count("samples", e.samples).list("terminal_times", e.terminal_times);
      exp.num("window", e.window).num("ic_min", e.ic_min).num("ic_max", e.ic_max);
      break;
    case ExperimentKind::Oracle:
      exp.count("segments", e.segments).count("levels", e.levels);
      exp.count("n_steps", e.oracle_steps).str("mode", to_string(e.mode));
      break;
  }

  ObjectWriter top(0);
  top.str("kind", to_string(s.kind))
      .raw("params", params.str())
      .raw("solver", solver.str())
      .raw("styles", styles.str())
      .boolean("allow_nonconverged", s.allow_nonconverged)
      .raw("experiment", exp.str());
  return top.str() + "\n";
}

std::string scenario_format_help() {
  return R"(Scenario file format (JSON; unknown keys are rejected, missing keys take defaults)

  kind                 solve | sweep_epsilon | sweep_alpha | perturb | classify |
                       robustness | oracle                                  (required)
  params.r1, r2        return rates, > 0                              default 0.82
  params.xbar1, xbar2  natural dispositions                           default 0.2, 0.4
  params.alpha         weight of spouse 1 in the payoff, [0, 1]        default 1
  params.epsilon       emotional-cost scale, > 0 or "Infinite"        default "Infinite"
  params.u0            ideal interaction level, 0 <= u0 <= min(u1max, u2max)  default 0
  params.u1max, u2max  control upper bounds, > 0                      default 0.5
  params.T             horizon, > 0                                   default 10
  params.x1_0, x2_0    initial positivities                           default -0.2, -0.4
  solver.n_steps       RK4 steps, >= 2                                default 1000
  solver.tolerance     relative convergence tolerance, > 0            default 0.001
  solver.relaxation    control update weight, (0, 1]                  default 0.5
  solver.max_iters     sweep iteration cap, >= 1                      default 500
  solver.initial_u1/2  constant initial control guess                 default clamp(u0)
  styles.low, high     conflict-avoiding thresholds (fractions of u_max)  default 0.15, 0.7
  styles.flat          validating threshold (fraction of u_max)       default 0.1
  styles.horizon_fraction  validating check covers t <= fraction*T    default 0.8
  allow_nonconverged   record non-convergence instead of failing      default false

  experiment (keys allowed depend on kind):
    sweep_epsilon, sweep_alpha: values            list of epsilon (> 0) or alpha ([0, 1])
    perturb:    order                             0 or 1 (default 1)
    classify:   u1, u2                            frozen controls (default 0.5, 0.5)
                lambda_min, lambda_max            adjoint-plane box (default -2, 10)
                field_points                      points per axis (default 25)
    robustness: seed                              required unless --seed is given
                samples                           initial conditions per T (default 50)
                terminal_times                    list of T (default [5, 10])
                window                            slope window width, divides each T (default 1)
                ic_min, ic_max                    uniform initial-condition range (default -1, 1)
    oracle:     segments, levels                  piecewise-constant grid (default 8, 2)
                n_steps                           RK4 steps for candidates (default 200)
                mode                              auto | exhaustive | coordinate_descent
)";
}

UniformStream::UniformStream(std::uint64_t seed) : engine_(seed) {}

double UniformStream::next(double lo, double hi) {
  const double unit = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  return lo + (hi - lo) * unit;
}

}  // namespace marital
