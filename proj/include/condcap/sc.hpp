#pragma once

#include <array>
#include <complex>
#include <optional>
#include <vector>

#include "condcap/geometry.hpp"
#include "condcap/result.hpp"

namespace condcap {

// Schwarz-Christoffel parameters of a half-domain polygon with K vertices.
// Vertex 0 maps from infinity; prevertices of vertices 1..K-1 are
// zeta[0] = 0 < zeta[1] = 1 < ... .  log_gaps[i] = log(zeta[i+1] - zeta[i])
// is the exact representation; zeta is formed from it for reporting.
struct SCParams {
  std::vector<double> zeta;
  std::vector<double> log_gaps;
  std::vector<double> exponents;  // alpha_j - 1 for vertices 0..K-1
  std::complex<double> C0;
  double residual = 0.0;
  int iterations = 0;
  int homotopy_steps = 0;
};

struct EllipticModulus {
  std::array<double, 4> endpoints{};
  double kappa = 0.0;
  double k = 0.0;
  double kprime = 1.0;
};

SCParams solve_parameter_problem(const HalfDomainPolygon& poly,
                                 const std::optional<std::vector<double>>& init = {});

// Prevertices of the four label transitions F0|N, N|F1, F1|N, N|F0.
std::array<double, 4> n_endpoint_preimages(const SCParams& params, const HalfDomainPolygon& poly);

// Modulus of the Moebius map sending (z1, z2, z3, z4), in cyclic order on
// the extended real line, to (-1, 1, 1/k, -1/k).
EllipticModulus moebius_modulus(const std::array<double, 4>& endpoints);
// Same from the three consecutive gaps between increasing endpoints; keeps
// full relative precision of k and k' when the gaps are badly scaled.
EllipticModulus moebius_modulus_from_gaps(double a, double b, double c);

CapacityResult capacity_sc(const CondenserSpec& spec);

}  // namespace condcap
