#pragma once

#include <array>
#include <complex>
#include <optional>

#include "condcap/result.hpp"

namespace condcap {

// Two vertical slots {0} x [-h1, h1] and {l} x [-h2, h2].
struct SlotPairGeometry {
  double l = 1.0;
  double h1 = 1.0;
  double h2 = 1.0;
};

// Unknowns of the genus-one map on the torus C / (Z + tau Z).  tau and p are
// purely imaginary, c1 is real and c2 = Re c2 + tau / 2.
struct TorusParams {
  std::complex<double> tau{0.0, 1.0};
  std::complex<double> p{0.0, 0.25};
  double c1 = 0.25;
  std::complex<double> c2{0.25, 0.5};
};

// Map onto the slot exterior: w(u) = -(l / 2 pi i) [Z(u - p) + Z(u + p)],
// Z = theta_1' / theta_1.
std::complex<double> sc_map_w(std::complex<double> u, const TorusParams& params, double l);
// dw/du.
std::complex<double> sc_map_dw(std::complex<double> u, const TorusParams& params, double l);

// [Im dw(c1), Im dw(c2), Im w(c1) - h1, Im w(c2) - h2].
std::array<double, 4> residual_E(const TorusParams& params, const SlotPairGeometry& geom);

struct ThetaSolveInfo {
  int iterations = 0;
  int continuation_steps = 0;
  double residual = 0.0;
};

TorusParams solve_E(const SlotPairGeometry& geom, const std::optional<TorusParams>& init = {},
                    ThetaSolveInfo* info = nullptr);

CapacityResult capacity_E(const SlotPairGeometry& geom);

}  // namespace condcap
