#include <doctest.h>

#include <random>
#include <set>

#include "marital/runner.hpp"
#include "marital/scenario.hpp"

using namespace marital;

namespace {

const std::string kDir = MARITAL_SCENARIO_DIR;

std::string error_key(const std::string& text) {
  try {
    parse_scenario(text);
  } catch (const ScenarioError& e) {
    return e.key();
  }
  return "";
}

Scenario random_scenario(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> U(0.0, 1.0);
  const auto in = [&](double lo, double hi) { return lo + (hi - lo) * U(rng); };
  Scenario s;
  s.kind = static_cast<ExperimentKind>(rng() % 7);
  ModelParams& p = s.params;
  p.r1 = in(0.05, 2.0);
  p.r2 = in(0.05, 2.0);
  p.xbar1 = in(-1, 1);
  p.xbar2 = in(-1, 1);
  p.alpha = in(0.01, 0.99);
  p.epsilon = rng() % 2 ? CostScale::infinite() : CostScale::finite(in(1e-3, 10));
  p.u1max = in(0.1, 2.0);
  p.u2max = in(0.1, 2.0);
  p.u0 = in(0.0, std::min(p.u1max, p.u2max));
  p.T = in(0.5, 20);
  p.x1_0 = in(-1, 1);
  p.x2_0 = in(-1, 1);
  s.solver.n_steps = 2 + rng() % 5000;
  s.solver.tolerance = in(1e-12, 1e-1);
  s.solver.relaxation = in(0.01, 1.0);
  s.solver.max_iters = 1 + static_cast<int>(rng() % 1000);
  if (rng() % 2) s.solver.initial_u1 = in(0, 1);
  if (rng() % 2) s.solver.initial_u2 = in(0, 1);
  s.styles.low = in(0, 0.5);
  s.styles.high = in(0.5, 1);
  s.styles.flat = in(0.01, 0.5);
  s.styles.horizon_fraction = in(0.1, 1);
  s.allow_nonconverged = rng() % 2;

  ExperimentSpec& e = s.experiment;
  switch (s.kind) {
    case ExperimentKind::SweepEpsilon:
    case ExperimentKind::SweepAlpha:
      for (std::size_t i = 0, n = 1 + rng() % 6; i < n; ++i) e.values.push_back(in(0.01, 0.99));
      break;
    case ExperimentKind::Perturb:
      p.epsilon = CostScale::finite(in(1e-3, 0.1));
      e.order = static_cast<int>(rng() % 2);
      break;
    case ExperimentKind::Classify:
      e.u1 = in(-2, 2);
      e.u2 = in(-2, 2);
      e.lambda_min = in(-5, 0);
      e.lambda_max = in(1, 10);
      e.field_points = 2 + rng() % 50;
      break;
    case ExperimentKind::Robustness:
      e.seed = rng();
      e.samples = 2 + rng() % 100;
      e.window = 0.5 * (1 + rng() % 3);
      e.terminal_times = {e.window * (1 + rng() % 10), e.window * (1 + rng() % 10)};
      e.ic_min = in(-2, 0);
      e.ic_max = in(0.1, 2);
      break;
    case ExperimentKind::Oracle:
      e.segments = 1 + rng() % 10;
      e.levels = 2 + rng() % 3;
      e.oracle_steps = 2 + rng() % 500;
      e.mode = static_cast<OracleMode>(rng() % 3);
      break;
    case ExperimentKind::Solve: break;
  }
  return s;
}

}  // namespace

TEST_CASE("shipped example 1 scenario") {
  const Scenario s = parse_scenario(read_text_file(kDir + "/example1.json"));
  CHECK(s.kind == ExperimentKind::Solve);
  CHECK(s.params.u1max == 0.5);
  CHECK(s.params.u2max == 0.5);
  CHECK(s.params.r1 == 0.82);
  CHECK(s.params.r2 == 0.82);
  CHECK(s.params.alpha == 1.0);
  CHECK(s.params.T == 10.0);
  CHECK(s.params.epsilon.is_infinite());
}

TEST_CASE("every shipped scenario parses") {
  for (const char* name :
       {"example1.json", "example2.json", "example2_perturb.json", "example3_alpha0.json",
        "example3_alpha1.json", "example1_oracle.json", "figures/adjoint_plane.json",
        "figures/example1_switching.json", "figures/epsilon_sweep.json",
        "figures/alpha_sweep.json", "figures/slope_robustness.json"}) {
    CAPTURE(name);
    CHECK_NOTHROW(parse_scenario(read_text_file(kDir + "/" + name)));
  }
}

TEST_CASE("invalid scenarios name the offending key") {
  CHECK(error_key(R"({"kind": "solve", "params": {"alpha": 1.5}})") == "params.alpha");
  CHECK(error_key(R"({"kind": "solve", "params": {"colour": 1}})") == "params.colour");
  CHECK(error_key(R"({"kind": "solve", "extra": 1})") == "extra");
  CHECK(error_key(R"({"kind": "bake"})") == "kind");
  CHECK(error_key(R"({"params": {}})") == "kind");
  CHECK(error_key(R"({"kind": "solve", "solver": {"n_steps": 1}})") == "solver.n_steps");
  CHECK(error_key(R"({"kind": "solve", "params": {"epsilon": "big"}})") == "params.epsilon");
  CHECK(error_key(R"({"kind": "solve", "experiment": {"values": [1]}})") == "experiment.values");
  CHECK(error_key(R"({"kind": "robustness"})") == "experiment.seed");
  CHECK(error_key(R"({"kind": "perturb"})") == "params.epsilon");
  CHECK(error_key(R"({"kind": "solve", )") == "<document>");
  CHECK(error_key(R"({"kind": "robustness", "experiment": {"seed": 1, "window": 3}})") ==
        "experiment.window");
}

TEST_CASE("alpha out of range mentions the range") {
  try {
    parse_scenario(R"({"kind": "solve", "params": {"alpha": 1.5}})");
    FAIL("accepted");
  } catch (const ScenarioError& e) {
    CHECK(std::string(e.what()).find("[0, 1]") != std::string::npos);
  }
}

TEST_CASE("seed override") {
  const std::string text = R"({"kind": "robustness", "experiment": {"seed": 5}})";
  CHECK(*parse_scenario(text).experiment.seed == 5);
  CHECK(*parse_scenario(text, 77).experiment.seed == 77);
  CHECK(*parse_scenario(R"({"kind": "robustness"})", 9).experiment.seed == 9);
  CHECK_FALSE(parse_scenario(R"({"kind": "solve"})", 9).experiment.seed);
}

TEST_CASE("epsilon accepts Infinite or a number") {
  CHECK(parse_scenario(R"({"kind": "solve", "params": {"epsilon": "Infinite"}})")
            .params.epsilon.is_infinite());
  CHECK(parse_scenario(R"({"kind": "solve", "params": {"epsilon": 0.25}})")
            .params.epsilon.value() == 0.25);
}

TEST_CASE("canonical serialization round trip") {
  std::mt19937_64 rng(31337);
  std::set<ExperimentKind> kinds;
  for (int i = 0; i < 100; ++i) {
    const Scenario s = random_scenario(rng);
    kinds.insert(s.kind);
    const std::string a = serialize_scenario(s);
    const Scenario back = parse_scenario(a);
    CHECK(back == s);
    CHECK(serialize_scenario(back) == a);
  }
  CHECK(kinds.size() == 7);
}

TEST_CASE("canonical form is stable text") {
  const Scenario s = parse_scenario(R"({"kind": "solve"})");
  const std::string text = serialize_scenario(s);
  CHECK(text.rfind("{\n  \"kind\": \"solve\",\n  \"params\": {\n    \"r1\": 0.81999999999999995,",
                   0) == 0);
  CHECK(text.back() == '\n');
  CHECK(text.find("\"epsilon\": \"Infinite\"") != std::string::npos);
  CHECK(text.find("initial_u1") == std::string::npos);
}

TEST_CASE("uniform stream is seeded and in range") {
  UniformStream a(42), b(42), c(43);
  bool differs = false;
  for (int i = 0; i < 1000; ++i) {
    const double x = a.next(-1.0, 1.0);
    CHECK(x == b.next(-1.0, 1.0));
    if (x != c.next(-1.0, 1.0)) differs = true;
    CHECK(x >= -1.0);
    CHECK(x < 1.0);
  }
  CHECK(differs);
  // First value of mt19937_64(0) is 2947667278772165694.
  UniformStream z(0);
  CHECK(z.next(0.0, 1.0) == (2947667278772165694ULL >> 11) * 0x1.0p-53);
}
