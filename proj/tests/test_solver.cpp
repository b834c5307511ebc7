#include <doctest.h>

#include <cmath>

#include "marital/errors.hpp"
#include "marital/solver.hpp"

using namespace marital;

namespace {

ModelParams example2(double eps) {
  ModelParams p;
  p.xbar1 = p.xbar2 = 0.26;
  p.x1_0 = p.x2_0 = -0.26;
  p.alpha = 0.5;
  p.epsilon = CostScale::finite(eps);
  p.u0 = 0.3;
  p.T = 3.0;
  return p;
}

ControlArrays constant(const Grid& g, double u1, double u2) {
  return {std::vector<double>(g.size(), u1), std::vector<double>(g.size(), u2)};
}

double max_err(const std::vector<double>& a, const std::vector<double>& fine, std::size_t stride) {
  double e = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) e = std::max(e, std::abs(a[k] - fine[k * stride]));
  return e;
}

}  // namespace

TEST_CASE("RK4 sweeps are fourth order") {
  ModelParams p;
  p.x1_0 = 0.7;
  const Grid fine(6400, p.T);
  const StateArrays xf = forward_sweep(p, fine, constant(fine, 0.3, 0.45));
  const AdjointArrays lf = backward_sweep(p, fine, constant(fine, 0.3, 0.45));

  const Grid g1(50, p.T), g2(100, p.T);
  const StateArrays x1 = forward_sweep(p, g1, constant(g1, 0.3, 0.45));
  const StateArrays x2 = forward_sweep(p, g2, constant(g2, 0.3, 0.45));
  const double rs = max_err(x1.x1, xf.x1, 128) / max_err(x2.x1, xf.x1, 64);
  CHECK(rs >= 12.0);
  CHECK(rs <= 20.0);

  const AdjointArrays l1 = backward_sweep(p, g1, constant(g1, 0.3, 0.45));
  const AdjointArrays l2 = backward_sweep(p, g2, constant(g2, 0.3, 0.45));
  const double ra = max_err(l1.lam1, lf.lam1, 128) / max_err(l2.lam1, lf.lam1, 64);
  CHECK(ra >= 12.0);
  CHECK(ra <= 20.0);
}

TEST_CASE("sweeps report divergence") {
  ModelParams p;
  p.u1max = p.u2max = 500.0;
  p.x1_0 = p.x2_0 = 1.0;
  const Grid g(100, p.T);
  CHECK_THROWS_AS(forward_sweep(p, g, constant(g, 500.0, 500.0)), DivergenceError);
}

TEST_CASE("relative convergence test") {
  CHECK(relative_converged({1.0, 1.0}, {1.0, 1.0}, 1e-3));
  CHECK(relative_converged({1.0, 1.0}, {1.0, 1.0015}, 1e-3));
  CHECK_FALSE(relative_converged({1.0, 1.0}, {1.0, 1.003}, 1e-3));
  CHECK(relative_converged({0.0, 0.0}, {0.0, 0.0}, 1e-3));
  CHECK_FALSE(relative_converged({0.0, 0.0}, {0.0, 1e-9}, 1e-3));
}

TEST_CASE("control update blends and clamps") {
  const ModelParams p;
  const Grid g(2, 1.0);
  const StateArrays x{{1.0, 1.0, 1.0}, {1.0, 1.0, 1.0}};
  const AdjointArrays lam{{1.0, 1.0, 0.0}, {1.0, 1.0, 0.0}};
  const ControlArrays old = constant(g, 0.0, 0.0);
  const ControlArrays full = update_controls(p, x, lam, old, 1.0);
  CHECK(full.u1[0] == 0.5);
  CHECK(full.u1[2] == 0.0);
  const ControlArrays half = update_controls(p, x, lam, old, 0.5);
  CHECK(half.u1[0] == doctest::Approx(0.25));
  CHECK(half.u2[1] == doctest::Approx(0.25));
}

TEST_CASE("solver config validation") {
  SolverConfig c;
  CHECK_NOTHROW(c.validate());
  c.relaxation = 0.0;
  CHECK_THROWS_AS(c.validate(), InvalidParams);
  c = SolverConfig{};
  c.n_steps = 1;
  CHECK_THROWS_AS(c.validate(), InvalidParams);
  c = SolverConfig{};
  c.tolerance = -1.0;
  CHECK_THROWS_AS(c.validate(), InvalidParams);
}

TEST_CASE("example 1 solution is bang-bang") {
  const ModelParams p;
  const SolveResult r = fbs_solve(p, SolverConfig{});
  REQUIRE(r.converged);
  CHECK(r.iterations <= 500);
  CHECK(r.history.size() == static_cast<std::size_t>(r.iterations));
  std::size_t bang = 0;
  for (std::size_t k = 0; k < r.trajectory.grid.size(); ++k) {
    for (double u : {r.trajectory.u1[k], r.trajectory.u2[k]}) {
      if (std::abs(u) < 1e-3 || std::abs(u - 0.5) < 1e-3) ++bang;
    }
  }
  CHECK(bang >= 0.99 * 2 * r.trajectory.grid.size());
  CHECK(r.objective_value == doctest::Approx(objective(p, r.trajectory)));
}

TEST_CASE("non-convergence returns a consistent iterate") {
  SolverConfig c;
  c.max_iters = 1;
  c.tolerance = 1e-14;
  const ModelParams p;
  const SolveResult r = fbs_solve(p, c);
  CHECK_FALSE(r.converged);
  CHECK(r.iterations == 1);
  CHECK_NOTHROW(r.trajectory.check_shape());
  const Grid& g = r.trajectory.grid;
  const StateArrays x = forward_sweep(p, g, {r.trajectory.u1, r.trajectory.u2});
  CHECK(max_err(x.x1, r.trajectory.x1, 1) < 1e-14);
}

// At an interior optimum the first variation of J vanishes; compare the
// directional derivative with the one at the non-optimal constant u0.
TEST_CASE("finite-difference stationarity of the interior optimum") {
  const ModelParams p = example2(0.05);
  SolverConfig c;
  c.tolerance = 1e-12;
  c.max_iters = 5000;
  const SolveResult r = fbs_solve(p, c);
  REQUIRE(r.converged);
  const Grid& g = r.trajectory.grid;

  const auto derivative = [&](const ControlArrays& base) {
    const double d = 1e-4;
    ControlArrays plus = base, minus = base;
    for (std::size_t k = 0; k < g.size(); ++k) {
      const double bump = std::sin(M_PI * g.node(k) / p.T);
      plus.u1[k] += d * bump;
      minus.u1[k] -= d * bump;
      plus.u2[k] += d * bump;
      minus.u2[k] -= d * bump;
    }
    return (evaluate_controls(p, g, plus) - evaluate_controls(p, g, minus)) / (2 * d);
  };
  const double at_opt = derivative({r.trajectory.u1, r.trajectory.u2});
  const double at_u0 = derivative(constant(g, p.u0, p.u0));
  CHECK(std::abs(at_u0) > 1e-3);
  CHECK(std::abs(at_opt) < 1e-3 * std::abs(at_u0));
}

TEST_CASE("piecewise controls map nodes to segments") {
  const Grid g(8, 4.0);
  const ControlArrays u = piecewise_controls(g, {0.1, 0.2}, {0.3, 0.4});
  CHECK(u.u1[0] == 0.1);
  CHECK(u.u1[3] == 0.1);
  CHECK(u.u1[4] == 0.2);
  CHECK(u.u1[8] == 0.2);
  CHECK(u.u2[8] == 0.4);
  CHECK_THROWS_AS(piecewise_controls(g, {0.1}, {0.3, 0.4}), InvalidParams);
}

TEST_CASE("oracle search") {
  const ModelParams p;
  OracleConfig c;
  c.segments = 3;
  c.levels = 2;
  c.n_steps = 120;
  const OracleResult ex = oracle_search(p, c);
  CHECK(ex.candidates_evaluated == 64);
  CHECK(ex.mode_used == OracleMode::Exhaustive);
  const Grid g(c.n_steps, p.T);
  CHECK(ex.objective_value == doctest::Approx(
                                  evaluate_controls(p, g, piecewise_controls(g, ex.u1, ex.u2))));
  // Exhaustive is a true maximum over the candidate set.
  for (double a : {0.0, 0.5}) {
    for (double b : {0.0, 0.5}) {
      const std::vector<double> u1{a, a, a}, u2{b, b, b};
      CHECK(evaluate_controls(p, g, piecewise_controls(g, u1, u2)) <= ex.objective_value + 1e-15);
    }
  }

  c.mode = OracleMode::CoordinateDescent;
  const OracleResult cd = oracle_search(p, c);
  CHECK(cd.mode_used == OracleMode::CoordinateDescent);
  CHECK(cd.objective_value <= ex.objective_value + 1e-15);

  c.mode = OracleMode::Exhaustive;
  c.segments = 20;
  c.budget = 1000;
  CHECK_THROWS_AS(oracle_search(p, c), BudgetExceeded);
  c.mode = OracleMode::Auto;
  c.segments = 6;
  CHECK(oracle_search(p, c).mode_used == OracleMode::CoordinateDescent);
}
