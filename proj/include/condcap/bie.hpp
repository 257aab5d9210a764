#pragma once

#include <array>
#include <ostream>
#include <vector>

#include <Eigen/Dense>

#include "condcap/geometry.hpp"
#include "condcap/result.hpp"

namespace condcap {

enum class SingularKind { Corner, CuspTip };

// Leading terms of the density near a corner (r^(k pi/omega - 1), k = 1, 2)
// or near a slot tip (r^(-1/2), log(1/r), constant).
struct SingularTerm {
  SingularKind kind = SingularKind::Corner;
  int contour = 0;
  int vertex = 0;
  Point location{};
  double anchor_arclength = 0.0;
  double omega = 0.0;  // interior angle on the domain side
  std::vector<double> exponents;
  bool log_term = false;  // tips carry an extra log(1/r) term
  double support_radius = 0.0;
  int coefficient_index = -1;  // first enrichment column, -1 when not enriched

  int functions() const { return static_cast<int>(exponents.size()) + (log_term ? 1 : 0); }
};

struct BieOptions {
  int grading = 6;          // order q of the corner clustering u^q / (u^q + (1-u)^q)
  bool enrich = false;      // add singular-term columns
  bool use_fft = true;      // FFT or GEMM for the smooth-remainder block
  double cgls_tol = 1e-12;  // relative normal-equation residual
  double rank_tol = 1e-4;   // pivoted-QR truncation in the block preconditioner
  int max_iter = 200;
  int threads = 0;          // 0: CONDCAP_THREADS or hardware concurrency
};

// One boundary component, parametrized over [0, 2 pi).  Polygon edges get
// whole numbers of collocation points; two-sided edges are paired with the
// reverse edge and share its point count.
struct ContourDiscretization {
  bool circle = false;
  Point center{};
  double radius = 0.0;
  int sense = 1;  // circle traversal direction
  std::vector<Point> vertices;
  std::vector<int> points_per_edge;
  std::vector<double> breakpoints;  // size edges + 1, from 0 to 2 pi
  std::vector<int> twin;            // reverse edge or -1
  int M = 0;                        // collocation points
  int N = 0;                        // trig order; basis 1, cos mt, sin mt for m < N
  int q = 6;
  double potential = 0.0;
  Terminal terminal = Terminal::Outer;

  int edges() const { return static_cast<int>(vertices.size()); }
  int basis_size() const { return 2 * N - 1; }
};

struct BoundaryDiscretization {
  ContourSet set;
  std::vector<ContourDiscretization> contours;
  std::vector<SingularTerm> singular;
  int level = 0;
  bool bounded = true;
  bool enrich = false;

  int enrichment_columns() const;
};

// Points on a contour stored as anchor vertex plus offset so that distances
// between nearby points near a vertex keep full relative precision.
struct NodeSet {
  std::vector<Point> anchor, offset;
  std::vector<double> t, speed;
  std::vector<int> edge;
  std::vector<double> mirror_t;  // parameter of the same point on the twin edge, or NaN

  std::size_t size() const { return t.size(); }
  Point point(std::size_t i) const { return anchor[i] + offset[i]; }
};

BoundaryDiscretization discretize(const ContourSet& contours, int level, const BieOptions& opt = {});
NodeSet collocation_nodes(const ContourDiscretization& c);
NodeSet quadrature_nodes(const ContourDiscretization& c);

struct LinearSystem {
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
  std::vector<int> row_offset;  // per contour, plus total
  std::vector<int> col_offset;  // per contour, then enrichment columns, then the constant
  int constant_col = 0;
};

// Collocation system for the single-layer Green formula with Dirichlet data
// potentials[0] on the outer terminal and potentials[1] on the inner one.
LinearSystem assemble(const BoundaryDiscretization& disc, std::array<double, 2> potentials = {0.0, 1.0},
                      const BieOptions& opt = {});
Eigen::VectorXd assemble_rhs(const BoundaryDiscretization& disc, std::array<double, 2> potentials);

// Double-layer potential of the unit density on a contour at x, principal
// value on the contour itself (edges through x contribute nothing).
double double_layer_of_constant(const Contour& c, Point x);
// Domain-side limit of the double layer of the piecewise-constant Dirichlet
// data at the point anchor + offset lying on edge `edge` of contour `on`
// (edge is ignored for circles).
double gauss_value(const ContourSet& set, std::array<double, 2> potentials, int on, int edge, Point anchor,
                   Point offset);

struct DensitySolution {
  Eigen::VectorXd coeffs;
  int iterations = 0;
  double residual = 0.0;      // relative normal-equation residual
  double ls_residual = 0.0;   // |A x - b| / |b|
  bool converged = false;
  bool fallback = false;      // dense complete orthogonal decomposition used
};

struct Preconditioner {
  std::vector<Eigen::MatrixXd> blocks;  // column transform per contour
  std::vector<int> col_offset;
  std::vector<double> extra_scale;  // enrichment columns and the constant
  // Every x = P y satisfies constraint . x = 0 (total charge); coordinate
  // pivot absorbs the correction.
  Eigen::RowVectorXd constraint;
  int pivot = -1;
  Eigen::VectorXd apply(const Eigen::VectorXd& y) const;
  Eigen::VectorXd apply_transpose(const Eigen::VectorXd& v) const;
};
Preconditioner block_preconditioner(const LinearSystem& sys, double rank_tol = 1e-4);

DensitySolution solve_density(const LinearSystem& sys, const BieOptions& opt = {});
DensitySolution solve_density(const LinearSystem& sys, const Eigen::VectorXd& b, const Preconditioner& P,
                              const BieOptions& opt = {});

// Charge 2 pi a0 per contour.
std::vector<double> contour_charges(const BoundaryDiscretization& disc, const LinearSystem& sys,
                                    const Eigen::VectorXd& coeffs);

struct CapacityMatrix {
  Eigen::Matrix2d m = Eigen::Matrix2d::Zero();  // m(k, j): charge on terminal j when terminal k is at 1
  int iterations = 0;
  double residual = 0.0;
  double symmetry_dev = 0.0;
  double nullspace_dev = 0.0;
  int unknowns = 0;
  int equations = 0;
  double constant = 0.0;  // potential at infinity for unbounded condensers (inner at 1)
};

CapacityMatrix capacity_matrix(const ContourSet& set, int level, const BieOptions& opt = {});
CapacityMatrix capacity_matrix(const CondenserSpec& spec, int level, const BieOptions& opt = {});

CapacityResult capacity_bie(const ContourSet& set, double target_rel_err = 5e-4, int max_level = 6,
                            const BieOptions& opt = {});
CapacityResult capacity_bie(const CondenserSpec& spec, double target_rel_err = 5e-4, int max_level = 6,
                            const BieOptions& opt = {});
// Single fixed level.
CapacityResult capacity_bie_at_level(const ContourSet& set, int level, const BieOptions& opt = {});

// Writes "contour,t,x,y,density" rows for the inner-at-one problem.
void write_density_csv(std::ostream& os, const ContourSet& set, int level, const BieOptions& opt = {});

// 2-norm condition number of the unpreconditioned matrix and of A^T A.
struct ConditionReport {
  int rows = 0;
  int cols = 0;
  double cond_A = 0.0;
  double cond_normal = 0.0;
  double cond_preconditioned = 0.0;
};
ConditionReport condition_numbers(const ContourSet& set, int level, const BieOptions& opt = {});

// Piecewise-polynomial Nystrom fallback: Gauss-Legendre panels graded
// towards every vertex, exact log moments on nearby panels.
struct PanelOptions {
  int order = 12;
  double max_panel = 0.0;  // 0: a quarter of the characteristic length
  int grading_levels = 14;
  double ratio = 0.15;
  bool estimate = true;    // repeat with halved panels for an error estimate
};
CapacityResult capacity_panel(const ContourSet& set, const PanelOptions& opt = {});

}  // namespace condcap
