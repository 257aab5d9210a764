#pragma once

#include <cstddef>

#include "condcap/geometry.hpp"
#include "condcap/result.hpp"

namespace condcap {

struct FdOptions {
  double h = 0.0;                // grid step; 0 picks the coarsest step that fits every coordinate
  int min_cells = 24;            // automatic step is refined until the box spans this many cells
  bool richardson = true;        // extrapolate from h and h/2
  std::size_t max_nodes = 6000000;
  double cg_tol = 1e-10;
  double box_factor = 20.0;      // truncation box half-width / condenser size, unbounded case
};

// Grid values of one solve, for inspection and tests.
struct FdGrid {
  int nx = 0, ny = 0;
  double x0 = 0, y0 = 0, h = 0;
  std::vector<double> u;          // row-major, nx * ny
  std::vector<signed char> kind;  // 0 interior, 1 plate at 0, 2 plate at 1, 3 exterior
};

// Five-point energy capacity of a contour set on a single grid.
double fd_energy_capacity(const ContourSet& set, double h, const FdOptions& opt = {},
                          FdGrid* grid = nullptr, int* cg_iterations = nullptr);

// The coarsest step dividing every coordinate of the contour set.
double fd_auto_step(const ContourSet& set, int min_cells = 24);

CapacityResult capacity_fd(const ContourSet& set, const FdOptions& opt = {});
CapacityResult capacity_fd(const CondenserSpec& spec, double h = 0.0);

}  // namespace condcap
