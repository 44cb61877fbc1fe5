#pragma once

#include <functional>
#include <span>
#include <vector>

#include "pencil/grid.hpp"

namespace pencil {

// Overdetermined first-order system in which unknown u is prescribed on the
// coordinate line through the minimal corner along free_axis[u], and its
// derivatives along every other axis are given by rhs. The solution is the
// fixed point of Gauss-Seidel sweeps; in each sweep every unknown is
// re-integrated from its line by RK4 marches (step = grid spacing) along the
// remaining axes in axis_order, with the other unknowns frozen at their
// current values and interpolated at half steps.
struct GoursatProblem {
  int unknowns = 0;
  std::vector<int> free_axis;
  std::vector<int> axis_order;  // empty means 0, 1, ..., n-1
  // d u / d x^axis at x. vals holds every unknown, then every aux field.
  std::function<double(int u, int axis, std::span<const double> x, std::span<const double> vals)> rhs;
  // Value of u on its free line; x lies on that line.
  std::function<double(int u, std::span<const double> x)> line_value;
  // Known grid fields passed to rhs after the unknowns.
  std::vector<const Field*> aux;
  double blowup = 1e6;
  double tolerance = 1e-13;  // relative change that ends the sweeps
  int max_sweeps = 500;
};

struct GoursatSolution {
  std::vector<Field> fields;
  int sweeps = 0;
  double last_change = 0.0;
};

// Throws NumericalFailure on blow-up, non-finite values or no convergence.
GoursatSolution solve_goursat(const GoursatProblem& problem, const Chart& chart);

}  // namespace pencil
