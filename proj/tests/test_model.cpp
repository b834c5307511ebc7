#include <doctest.h>

#include <cmath>
#include <random>

#include "marital/errors.hpp"
#include "marital/model.hpp"
#include "marital/solver.hpp"

using namespace marital;

namespace {

ModelParams example1() { return ModelParams{}; }

ModelParams interior_params() {
  ModelParams p;
  p.xbar1 = p.xbar2 = 0.26;
  p.x1_0 = p.x2_0 = -0.26;
  p.alpha = 0.5;
  p.epsilon = CostScale::finite(0.05);
  p.u0 = 0.3;
  p.T = 3.0;
  return p;
}

}  // namespace

TEST_CASE("grid endpoints") {
  const Grid g(7, 3.3);
  CHECK(g.size() == 8);
  CHECK(g.node(0) == 0.0);
  CHECK(g.node(7) == 3.3);
  CHECK(g.step() == doctest::Approx(3.3 / 7));
  CHECK_THROWS_AS(Grid(1, 1.0), InvalidParams);
  CHECK_THROWS_AS(Grid(10, 0.0), InvalidParams);
}

TEST_CASE("parameter validation names the key") {
  ModelParams p = example1();
  CHECK_NOTHROW(p.validate());
  p.alpha = 1.5;
  try {
    p.validate();
    FAIL("alpha = 1.5 accepted");
  } catch (const InvalidParams& e) {
    CHECK(e.key() == "alpha");
  }
  p = example1();
  p.u0 = 0.6;
  CHECK_THROWS_AS(p.validate(), InvalidParams);
  p = example1();
  p.epsilon = CostScale::finite(-1.0);
  CHECK_THROWS_AS(p.validate(), InvalidParams);
}

TEST_CASE("right-hand sides by hand") {
  ModelParams p = example1();
  p.alpha = 0.25;
  const StateVec dx = state_rhs(p, {0.1, -0.3}, {0.5, 0.2});
  CHECK(dx.x1 == doctest::Approx(0.82 * (0.2 - 0.1) + 0.5 * -0.3));
  CHECK(dx.x2 == doctest::Approx(0.82 * (0.4 + 0.3) + 0.2 * 0.1));
  const AdjointVec dl = adjoint_rhs(p, {2.0, 3.0}, {0.5, 0.2});
  CHECK(dl.lam1 == doctest::Approx(-0.25 + 2.0 * 0.82 - 3.0 * 0.2));
  CHECK(dl.lam2 == doctest::Approx(-0.75 - 2.0 * 0.5 + 3.0 * 0.82));
}

TEST_CASE("bang-bang control law and ties") {
  const ModelParams p = example1();
  ControlVec u = control_law(p, {0.3, 0.4}, {1.0, 1.0});
  CHECK(u.u1 == 0.5);
  CHECK(u.u2 == 0.5);
  u = control_law(p, {-0.3, -0.4}, {1.0, 1.0});
  CHECK(u.u1 == 0.0);
  CHECK(u.u2 == 0.0);
  // Psi = 0 exactly.
  u = control_law(p, {0.3, 0.4}, {0.0, 0.0});
  CHECK(u.u1 == 0.0);
  CHECK(u.u2 == 0.0);
}

TEST_CASE("interior control law") {
  ModelParams p = interior_params();
  const StateVec s{0.1, 0.2};
  const AdjointVec lam{1.0, 0.5};
  const ControlVec u = control_law(p, s, lam);
  CHECK(u.u1 == doctest::Approx(0.05 / 0.5 * (1.0 * 0.2) + 0.3));
  CHECK(u.u2 == doctest::Approx(0.05 / 0.5 * (0.5 * 0.1) + 0.3));

  p.epsilon = CostScale::finite(100.0);
  const ControlVec hi = control_law(p, s, lam);
  CHECK(hi.u1 == 0.5);
  const ControlVec lo = control_law(p, {-1.0, -1.0}, lam);
  CHECK(lo.u1 == 0.0);
  CHECK(lo.u2 == 0.0);

  // alpha = 1: spouse 2's payoff weight is zero, so u2 is bang-bang.
  p = interior_params();
  p.alpha = 1.0;
  const ControlVec a1 = control_law(p, s, lam);
  CHECK(a1.u2 == 0.5);
  CHECK(a1.u1 == doctest::Approx(0.05 * 0.2 + 0.3));
  p.alpha = 0.0;
  const ControlVec a0 = control_law(p, s, lam);
  CHECK(a0.u1 == 0.5);
  CHECK(a0.u2 == doctest::Approx(0.05 * 0.5 * 0.1 + 0.3));
}

TEST_CASE("control law is always admissible") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> U(-3.0, 3.0);
  std::uniform_real_distribution<double> P(0.05, 2.0);
  ModelParams p;
  long bad = 0;
  for (int i = 0; i < 1'000'000; ++i) {
    if (i % 1000 == 0) {
      p.r1 = P(rng);
      p.r2 = P(rng);
      p.u1max = P(rng);
      p.u2max = P(rng);
      p.u0 = std::min(p.u1max, p.u2max) * (U(rng) + 3.0) / 6.0;
      p.alpha = (U(rng) + 3.0) / 6.0;
      if (i % 3000 == 0) p.alpha = (i / 3000) % 2;
      p.epsilon = i % 2000 == 0 ? CostScale::infinite() : CostScale::finite(P(rng));
    }
    const ControlVec u = control_law(p, {U(rng), U(rng)}, {U(rng), U(rng)});
    if (!admissible(p, u)) ++bad;
  }
  CHECK(bad == 0);
}

TEST_CASE("control law maximizes the Hamiltonian over a grid") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> U(-2.0, 2.0);
  for (const ModelParams& base : {example1(), interior_params()}) {
    for (int trial = 0; trial < 20; ++trial) {
      const StateVec s{U(rng), U(rng)};
      const AdjointVec lam{U(rng), U(rng)};
      const ControlVec best = control_law(base, s, lam);
      const double h_best = hamiltonian(base, s, best, lam);
      double h_grid = -1e300;
      for (int i = 0; i <= 100; ++i) {
        for (int j = 0; j <= 100; ++j) {
          const ControlVec u{base.u1max * i / 100.0, base.u2max * j / 100.0};
          h_grid = std::max(h_grid, hamiltonian(base, s, u, lam));
        }
      }
      CHECK(h_best >= h_grid - 1e-12);
    }
  }
}

TEST_CASE("Hamiltonian and payoff by hand") {
  ModelParams p = interior_params();
  const StateVec s{0.1, -0.2};
  const ControlVec u{0.4, 0.1};
  const AdjointVec lam{1.5, 0.5};
  const double F = 0.5 * (0.1 - 0.01 / 0.1) + 0.5 * (-0.2 - 0.04 / 0.1);
  CHECK(running_payoff(p, s, u) == doctest::Approx(F));
  const StateVec dx = state_rhs(p, s, u);
  CHECK(hamiltonian(p, s, u, lam) == doctest::Approx(F + 1.5 * dx.x1 + 0.5 * dx.x2));
  p.epsilon = CostScale::infinite();
  CHECK(running_payoff(p, s, u) == doctest::Approx(0.5 * 0.1 - 0.5 * 0.2));
}

TEST_CASE("objective rejects misaligned arrays") {
  const Grid g(4, 1.0);
  Trajectory t(g, {std::vector<double>(5), std::vector<double>(5)},
               {std::vector<double>(5), std::vector<double>(5)},
               {std::vector<double>(5), std::vector<double>(4)});
  CHECK_THROWS_AS(objective(example1(), t), InvalidTrajectory);
}

// With zero controls each spouse relaxes to the natural disposition:
// x_i(t) = xbar_i + (x_i0 - xbar_i) e^{-r_i t}.
TEST_CASE("uncontrolled state matches the closed form") {
  ModelParams p = example1();
  p.r2 = 0.5;
  const Grid g(1000, p.T);
  const ControlArrays u{std::vector<double>(g.size(), 0.0), std::vector<double>(g.size(), 0.0)};
  const StateArrays x = forward_sweep(p, g, u);
  double err = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k) {
    const double t = g.node(k);
    err = std::max(err, std::abs(x.x1[k] - (p.xbar1 + (p.x1_0 - p.xbar1) * std::exp(-p.r1 * t))));
    err = std::max(err, std::abs(x.x2[k] - (p.xbar2 + (p.x2_0 - p.xbar2) * std::exp(-p.r2 * t))));
  }
  CHECK(err < 1e-10);
}

// alpha = 1, u = 0: lambda1 = (1 - e^{r(t - T)}) / r and lambda2 = 0.
TEST_CASE("uncontrolled adjoint matches the closed form") {
  const ModelParams p = example1();
  const Grid g(1000, p.T);
  const ControlArrays u{std::vector<double>(g.size(), 0.0), std::vector<double>(g.size(), 0.0)};
  const AdjointArrays lam = backward_sweep(p, g, u);
  double err = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k) {
    const double exact = (1.0 - std::exp(p.r1 * (g.node(k) - p.T))) / p.r1;
    err = std::max(err, std::abs(lam.lam1[k] - exact));
    err = std::max(err, std::abs(lam.lam2[k]));
  }
  CHECK(err < 1e-10);
  CHECK(lam.lam1.back() == 0.0);
}

namespace {

double natural_objective(const ModelParams& p) {
  // alpha = 1, eps infinite, u = 0: J = int_0^T x1.
  return p.xbar1 * p.T + (p.x1_0 - p.xbar1) * (1.0 - std::exp(-p.r1 * p.T)) / p.r1;
}

Trajectory natural_trajectory(const ModelParams& p, std::size_t n) {
  const Grid g(n, p.T);
  StateArrays x{std::vector<double>(g.size()), std::vector<double>(g.size())};
  for (std::size_t k = 0; k < g.size(); ++k) {
    x.x1[k] = p.xbar1 + (p.x1_0 - p.xbar1) * std::exp(-p.r1 * g.node(k));
    x.x2[k] = p.xbar2 + (p.x2_0 - p.xbar2) * std::exp(-p.r2 * g.node(k));
  }
  const std::vector<double> z(g.size(), 0.0);
  return Trajectory(g, x, {z, z}, {z, z});
}

}  // namespace

TEST_CASE("trapezoid objective is second order") {
  const ModelParams p = example1();
  const double exact = natural_objective(p);
  const double e1 = std::abs(objective(p, natural_trajectory(p, 50)) - exact);
  const double e2 = std::abs(objective(p, natural_trajectory(p, 100)) - exact);
  CHECK(e1 / e2 == doctest::Approx(4.0).epsilon(0.02));
}

TEST_CASE("natural-disposition objective with a fine grid") {
  const ModelParams p = example1();
  const Grid g(20000, p.T);
  const ControlArrays u{std::vector<double>(g.size(), 0.0), std::vector<double>(g.size(), 0.0)};
  const Trajectory t(g, forward_sweep(p, g, u), backward_sweep(p, g, u), u);
  CHECK(objective(p, t) == doctest::Approx(natural_objective(p)).epsilon(1e-8));
}
