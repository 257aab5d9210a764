#include "condcap/fd.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/Sparse>

#include "condcap/error.hpp"

namespace condcap {

namespace {

struct TensorGrid {
  std::vector<double> xs, ys;
};

std::vector<double> uniform(double a, double b, double h) {
  const int n = static_cast<int>(std::lround((b - a) / h));
  std::vector<double> v(n + 1);
  for (int i = 0; i <= n; ++i) v[i] = a + i * h;
  return v;
}

// Uniform core [a, b] padded on both sides by cells growing geometrically
// until the far ends reach lo and hi.
std::vector<double> stretched(double a, double b, double h, double lo, double hi, double growth) {
  std::vector<double> v = uniform(a, b, h);
  std::vector<double> left;
  double step = h, x = a;
  while (x > lo) {
    step *= growth;
    x -= step;
    left.push_back(x);
  }
  std::vector<double> out(left.rbegin(), left.rend());
  out.insert(out.end(), v.begin(), v.end());
  step = h;
  x = b;
  while (x < hi) {
    step *= growth;
    x += step;
    out.push_back(x);
  }
  return out;
}

int nearest(const std::vector<double>& g, double x) {
  auto it = std::lower_bound(g.begin(), g.end(), x);
  if (it == g.end()) return static_cast<int>(g.size()) - 1;
  if (it == g.begin()) return 0;
  const int i = static_cast<int>(it - g.begin());
  return (x - g[i - 1] <= g[i] - x) ? i - 1 : i;
}

bool has_area(const Contour& c) {
  if (c.kind == ContourKind::Circle) return true;
  if (c.vertices.size() < 3) return false;
  const BoundingBox b = bounding_box(ContourSet{{c}, true});
  const double s = std::max(b.xmax - b.xmin, b.ymax - b.ymin);
  return std::abs(signed_area(c.vertices)) > 1e-12 * s * s;
}

struct Classified {
  std::vector<signed char> kind;  // 0 free, 1 plate value 0, 2 plate value 1
  std::vector<int> circle;        // circle contour that fixed the node, or -1
};

void set_plate(std::vector<signed char>& kind, std::size_t idx, double value) {
  const signed char k = value > 0.5 ? 2 : 1;
  if (kind[idx] != 0 && kind[idx] != k)
    throw Error(ErrorCode::Degenerate, "grid too coarse: a node touches both terminals");
  kind[idx] = k;
}

Classified classify(const ContourSet& set, const TensorGrid& g) {
  const int nx = static_cast<int>(g.xs.size()), ny = static_cast<int>(g.ys.size());
  Classified c;
  c.kind.assign(static_cast<std::size_t>(nx) * ny, 0);
  c.circle.assign(c.kind.size(), -1);
  auto at = [&](int i, int j) { return static_cast<std::size_t>(j) * nx + i; };

  for (std::size_t ci = 0; ci < set.contours.size(); ++ci) {
    const Contour& ct = set.contours[ci];
    const double val = ct.potential();
    const bool enclosing = set.bounded && ct.terminal == Terminal::Outer && has_area(ct);
    if (ct.kind == ContourKind::Circle) {
      for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
          const double r = std::abs(Point(g.xs[i], g.ys[j]) - ct.center);
          if (enclosing ? r >= ct.radius : r <= ct.radius) {
            set_plate(c.kind, at(i, j), val);
            c.circle[at(i, j)] = static_cast<int>(ci);
          }
        }
      continue;
    }
    const auto& v = ct.vertices;
    const std::size_t m = v.size();
    if (has_area(ct)) {
      // Even-odd scanline fill; two-sided slits cancel in pairs.
      for (int j = 0; j < ny; ++j) {
        const double y = g.ys[j];
        std::vector<double> xc;
        for (std::size_t e = 0; e < m; ++e) {
          const Point a = v[e], b = v[(e + 1) % m];
          if ((a.imag() <= y && y < b.imag()) || (b.imag() <= y && y < a.imag()))
            xc.push_back(a.real() + (y - a.imag()) * (b.real() - a.real()) / (b.imag() - a.imag()));
        }
        std::sort(xc.begin(), xc.end());
        for (int i = 0; i < nx; ++i) {
          const double x = g.xs[i];
          const auto cnt = std::lower_bound(xc.begin(), xc.end(), x) - xc.begin();
          const bool inside = cnt % 2 == 1;
          if (enclosing ? !inside : inside) set_plate(c.kind, at(i, j), val);
        }
      }
    }
    // Rasterize the edges themselves.
    const std::size_t ne = m == 2 ? 1 : m;
    for (std::size_t e = 0; e < ne; ++e) {
      const Point a = v[e], b = v[(e + 1) % m];
      const int ia = nearest(g.xs, std::min(a.real(), b.real())), ib = nearest(g.xs, std::max(a.real(), b.real()));
      const int ja = nearest(g.ys, std::min(a.imag(), b.imag())), jb = nearest(g.ys, std::max(a.imag(), b.imag()));
      double hloc = std::numeric_limits<double>::infinity();
      for (int i = std::max(ia, 1); i <= std::min(ib + 1, nx - 1); ++i) hloc = std::min(hloc, g.xs[i] - g.xs[i - 1]);
      for (int j = std::max(ja, 1); j <= std::min(jb + 1, ny - 1); ++j) hloc = std::min(hloc, g.ys[j] - g.ys[j - 1]);
      const int ns = std::max(1, static_cast<int>(std::ceil(4 * std::abs(b - a) / hloc)));
      for (int s = 0; s <= ns; ++s) {
        const Point p = a + (b - a) * (static_cast<double>(s) / ns);
        set_plate(c.kind, at(nearest(g.xs, p.real()), nearest(g.ys, p.imag())), val);
      }
    }
  }
  return c;
}

struct SolveOut {
  double energy = 0.0;
  int iterations = 0;
  double umin = 0.0, umax = 1.0;
  std::size_t nodes = 0;
};

SolveOut solve_grid(const ContourSet& set, const TensorGrid& g, const FdOptions& opt, FdGrid* dump) {
  const int nx = static_cast<int>(g.xs.size()), ny = static_cast<int>(g.ys.size());
  const std::size_t N = static_cast<std::size_t>(nx) * ny;
  if (N > opt.max_nodes) throw Error(ErrorCode::OomGuard, "grid exceeds the node limit");
  const Classified cl = classify(set, g);
  auto at = [&](int i, int j) { return static_cast<std::size_t>(j) * nx + i; };
  std::vector<int> unk(N, -1);
  int nfree = 0;
  for (std::size_t k = 0; k < N; ++k)
    if (cl.kind[k] == 0) unk[k] = nfree++;
  auto fixed_value = [&](std::size_t k) { return cl.kind[k] == 2 ? 1.0 : 0.0; };

  // Dual cell widths.
  auto dual = [](const std::vector<double>& c, int i) {
    const int n = static_cast<int>(c.size());
    double w = 0.0;
    if (i > 0) w += (c[i] - c[i - 1]) / 2;
    if (i + 1 < n) w += (c[i + 1] - c[i]) / 2;
    return w;
  };
  struct Edge {
    std::size_t a, b;
    double w;
  };
  std::vector<Edge> edges;
  edges.reserve(2 * N);
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i + 1 < nx; ++i) edges.push_back({at(i, j), at(i + 1, j), dual(g.ys, j) / (g.xs[i + 1] - g.xs[i])});
  for (int j = 0; j + 1 < ny; ++j)
    for (int i = 0; i < nx; ++i) edges.push_back({at(i, j), at(i, j + 1), dual(g.xs, i) / (g.ys[j + 1] - g.ys[j])});

  // A link from a free node into a circle plate ends at the circle, not at
  // the plate node: shorten it to the crossing so smooth boundaries converge
  // at second order.
  auto node = [&](std::size_t k) { return Point(g.xs[k % nx], g.ys[k / nx]); };
  for (Edge& e : edges) {
    const bool fa = unk[e.a] >= 0, fb = unk[e.b] >= 0;
    if (fa == fb) continue;
    const std::size_t free_node = fa ? e.a : e.b, plate = fa ? e.b : e.a;
    if (cl.circle[plate] < 0) continue;
    const Contour& ct = set.contours[cl.circle[plate]];
    const Point p = node(free_node) - ct.center, d = node(plate) - node(free_node);
    // |p + theta d| = radius, root in (0, 1].
    const double A = std::norm(d), B = 2 * (p.real() * d.real() + p.imag() * d.imag()), Cc = std::norm(p) - ct.radius * ct.radius;
    const double disc = std::sqrt(std::max(0.0, B * B - 4 * A * Cc));
    double theta = 1.0;
    for (double t : {(-B - disc) / (2 * A), (-B + disc) / (2 * A)})
      if (t > 0 && t <= 1 + 1e-12) theta = std::min(theta, t);
    e.w /= std::max(theta, 1e-2);
  }

  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(5 * static_cast<std::size_t>(nfree));
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(nfree);
  for (const Edge& e : edges) {
    const int ua = unk[e.a], ub = unk[e.b];
    if (ua < 0 && ub < 0) continue;
    if (ua >= 0) trip.emplace_back(ua, ua, e.w);
    if (ub >= 0) trip.emplace_back(ub, ub, e.w);
    if (ua >= 0 && ub >= 0) {
      trip.emplace_back(ua, ub, -e.w);
      trip.emplace_back(ub, ua, -e.w);
    } else if (ua >= 0) {
      rhs(ua) += e.w * fixed_value(e.b);
    } else {
      rhs(ub) += e.w * fixed_value(e.a);
    }
  }
  Eigen::SparseMatrix<double> A(nfree, nfree);
  A.setFromTriplets(trip.begin(), trip.end());

  Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper,
                           Eigen::IncompleteCholesky<double>>
      cg;
  cg.setTolerance(opt.cg_tol);
  cg.setMaxIterations(20000);
  cg.compute(A);
  const Eigen::VectorXd x = cg.solve(rhs);
  if (cg.info() != Eigen::Success) throw Error(ErrorCode::NotConverged, "grid CG did not converge");

  SolveOut out;
  out.iterations = static_cast<int>(cg.iterations());
  out.nodes = N;
  std::vector<double> u(N);
  for (std::size_t k = 0; k < N; ++k) u[k] = unk[k] >= 0 ? x(unk[k]) : fixed_value(k);
  for (const Edge& e : edges) {
    const double d = u[e.a] - u[e.b];
    out.energy += e.w * d * d;
  }
  auto [mn, mx] = std::minmax_element(u.begin(), u.end());
  out.umin = *mn;
  out.umax = *mx;
  if (dump) {
    dump->nx = nx;
    dump->ny = ny;
    dump->x0 = g.xs.front();
    dump->y0 = g.ys.front();
    dump->h = g.xs.size() > 1 ? g.xs[1] - g.xs[0] : 0.0;
    dump->u = std::move(u);
    dump->kind.resize(N);
    for (std::size_t k = 0; k < N; ++k) dump->kind[k] = cl.kind[k];
  }
  return out;
}

TensorGrid make_grid(const ContourSet& set, double h, double box_factor) {
  const BoundingBox b = bounding_box(set);
  TensorGrid g;
  if (set.bounded) {
    g.xs = uniform(b.xmin, b.xmax, h);
    g.ys = uniform(b.ymin, b.ymax, h);
    return g;
  }
  const double D = std::max(b.xmax - b.xmin, b.ymax - b.ymin);
  const double margin = std::ceil(D / h) * h;
  const double cx = (b.xmin + b.xmax) / 2, cy = (b.ymin + b.ymax) / 2;
  const double R = box_factor * D;
  g.xs = stretched(b.xmin - margin, b.xmax + margin, h, cx - R, cx + R, 1.15);
  g.ys = stretched(b.ymin - margin, b.ymax + margin, h, cy - R, cy + R, 1.15);
  return g;
}

}  // namespace

double fd_auto_step(const ContourSet& set, int min_cells) {
  const BoundingBox b = bounding_box(set);
  const double span = std::min(b.xmax - b.xmin, b.ymax - b.ymin) > 0 ? std::min(b.xmax - b.xmin, b.ymax - b.ymin)
                                                                       : std::max(b.xmax - b.xmin, b.ymax - b.ymin);
  long long g = 0;
  bool rational = true;
  for (const Contour& c : set.contours) {
    if (c.kind == ContourKind::Circle) {
      rational = false;
      break;
    }
    for (Point p : c.vertices)
      for (double v : {p.real() - b.xmin, p.imag() - b.ymin}) {
        const double s = v * 1000.0;
        const long long q = std::llround(s);
        if (std::abs(s - static_cast<double>(q)) > 1e-6) rational = false;
        g = std::gcd(g, std::llabs(q));
      }
  }
  if (!rational || g == 0) return span / min_cells;
  const double h0 = static_cast<double>(g) / 1000.0;
  const double m = std::ceil(min_cells * h0 / span - 1e-9);
  return h0 / std::max(1.0, m);
}

double fd_energy_capacity(const ContourSet& set, double h, const FdOptions& opt, FdGrid* grid, int* cg_iterations) {
  const SolveOut s = solve_grid(set, make_grid(set, h, opt.box_factor), opt, grid);
  if (cg_iterations) *cg_iterations = s.iterations;
  return s.energy;
}

CapacityResult capacity_fd(const ContourSet& set, const FdOptions& opt) {
  const auto t0 = std::chrono::steady_clock::now();
  const double h = opt.h > 0 ? opt.h : fd_auto_step(set, opt.min_cells);
  CapacityResult res;
  res.method = Method::FD;
  const SolveOut s1 = solve_grid(set, make_grid(set, h, opt.box_factor), opt, nullptr);
  double value = s1.energy, err = 0.0;
  double umin = s1.umin, umax = s1.umax;
  long long iters = s1.iterations;
  std::size_t nodes = s1.nodes;
  if (opt.richardson) {
    const SolveOut s2 = solve_grid(set, make_grid(set, h / 2, opt.box_factor), opt, nullptr);
    // Slot tips and reentrant corners limit the grid energy to O(h); with
    // only circles the cut links make it O(h^2).
    const bool smooth = std::all_of(set.contours.begin(), set.contours.end(),
                                    [](const Contour& c) { return c.kind == ContourKind::Circle; });
    value = smooth ? (4 * s2.energy - s1.energy) / 3 : 2 * s2.energy - s1.energy;
    err = std::abs(s2.energy - s1.energy) / value;
    umin = std::min(umin, s2.umin);
    umax = std::max(umax, s2.umax);
    iters += s2.iterations;
    nodes = s2.nodes;
    res.note("capacity_h", s1.energy);
    res.note("capacity_h2", s2.energy);
  }
  if (!set.bounded) {
    // Truncation estimate from a box twice as large at the coarse step.
    const SolveOut big = solve_grid(set, make_grid(set, h, 2 * opt.box_factor), opt, nullptr);
    const double trunc = std::abs(big.energy - s1.energy) / s1.energy;
    res.note("truncation_estimate", trunc);
    err += trunc;
  }
  if (umin < -1e-8 || umax > 1 + 1e-8) throw Error(ErrorCode::CheckFail, "discrete maximum principle violated");
  res.value = value;
  res.rel_err_estimate = err;
  res.note("h", h);
  res.note("nodes", static_cast<long long>(nodes));
  res.note("cg_iterations", iters);
  res.note("u_min", umin);
  res.note("u_max", umax);
  res.note("seconds", std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  return res;
}

CapacityResult capacity_fd(const CondenserSpec& spec, double h) {
  FdOptions opt;
  opt.h = h;
  return capacity_fd(build_contours(spec), opt);
}

}  // namespace condcap
