#pragma once

#include <cstddef>
#include <vector>

namespace marital {

// Uniform time grid 0 = t_0 < ... < t_N = T.
class Grid {
 public:
  // Throws InvalidParams unless n_steps >= 2 and T > 0.
  Grid(std::size_t n_steps, double T);

  std::size_t n_steps() const { return n_steps_; }
  std::size_t size() const { return n_steps_ + 1; }
  double horizon() const { return T_; }
  double step() const { return h_; }
  // t_N is exactly T.
  double node(std::size_t k) const;
  std::vector<double> nodes() const;

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  std::size_t n_steps_;
  double T_;
  double h_;
};

struct ControlArrays {
  std::vector<double> u1;
  std::vector<double> u2;
};

struct StateArrays {
  std::vector<double> x1;
  std::vector<double> x2;
};

struct AdjointArrays {
  std::vector<double> lam1;
  std::vector<double> lam2;
};

// Nodal state, adjoint and control values on a grid.
struct Trajectory {
  Grid grid;
  std::vector<double> x1, x2, lam1, lam2, u1, u2;

  Trajectory(Grid g, StateArrays s, AdjointArrays a, ControlArrays u);

  // Throws InvalidTrajectory if any array length differs from grid.size().
  void check_shape() const;
};

}  // namespace marital
