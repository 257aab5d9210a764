#include "condcap/bie.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>

#include <unsupported/Eigen/FFT>

#include "condcap/error.hpp"
#include "condcap/parallel.hpp"
#include "condcap/specfun.hpp"

namespace condcap {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2 * std::numbers::pi;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
// Dense systems above this many bytes are refused.
constexpr double kMaxMatrixBytes = 2.0e9;

double cross(Point a, Point b) { return a.real() * b.imag() - a.imag() * b.real(); }
double dot(Point a, Point b) { return a.real() * b.real() + a.imag() * b.imag(); }

double loop_scale(const std::vector<Point>& v) {
  double s = 0.0;
  for (Point p : v) s = std::max(s, std::abs(p));
  return std::max(s, 1.0);
}

std::vector<int> twin_edges(const std::vector<Point>& v) {
  const int n = static_cast<int>(v.size());
  const double tol = 1e-12 * loop_scale(v);
  std::vector<int> tw(n, -1);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j && std::abs(v[i] - v[(j + 1) % n]) <= tol && std::abs(v[(i + 1) % n] - v[j]) <= tol) tw[i] = j;
  return tw;
}

// Interior angle on the left of the traversal at v[k], divided by pi.
double vertex_alpha(const std::vector<Point>& v, int k) {
  const int n = static_cast<int>(v.size());
  const Point din = v[k] - v[(k + n - 1) % n], dout = v[(k + 1) % n] - v[k];
  const double c = cross(din, dout), d = dot(din, dout);
  if (std::abs(c) <= 1e-12 * std::abs(din) * std::abs(dout) && d < 0) return 2.0;
  return 1.0 - std::atan2(c, d) / kPi;
}

// Corner clustering w(u) = u^q / (u^q + (1-u)^q) and its derivative, with
// u and 1 - u passed separately so that both ends keep full precision.
double grade(double u, double uc, int q) {
  const double a = std::pow(u, q), b = std::pow(uc, q);
  return a / (a + b);
}

double grade_deriv(double u, double uc, int q) {
  const double a = std::pow(u, q), b = std::pow(uc, q);
  return q * std::pow(u, q - 1) * std::pow(uc, q - 1) / ((a + b) * (a + b));
}

double symm(double theta) { return std::log(std::abs(2 * std::sin(theta / 2))); }

NodeSet make_nodes(const ContourDiscretization& c, int factor) {
  NodeSet s;
  const int Mx = factor * c.M;
  s.anchor.reserve(Mx);
  s.offset.reserve(Mx);
  s.t.reserve(Mx);
  s.speed.reserve(Mx);
  s.edge.reserve(Mx);
  s.mirror_t.reserve(Mx);
  if (c.circle) {
    for (int i = 0; i < Mx; ++i) {
      const double t = kTwoPi * (i + 0.5) / Mx;
      s.anchor.push_back(c.center);
      s.offset.push_back(std::polar(c.radius, c.sense * t));
      s.t.push_back(t);
      s.speed.push_back(c.radius);
      s.edge.push_back(0);
      s.mirror_t.push_back(kNaN);
    }
    return s;
  }
  const int K = c.edges();
  std::vector<int> cum(K + 1, 0);
  for (int k = 0; k < K; ++k) cum[k + 1] = cum[k] + factor * c.points_per_edge[k];
  for (int k = 0; k < K; ++k) {
    const int n = factor * c.points_per_edge[k];
    const Point a = c.vertices[k], b = c.vertices[(k + 1) % K];
    const Point d = b - a;
    const double L = std::abs(d);
    const double dt = kTwoPi * c.points_per_edge[k] / c.M;
    const int l = c.twin[k];
    for (int i = 0; i < n; ++i) {
      const double num = i + 0.5;
      const double u = num / n, uc = (n - num) / n;
      if (2 * i + 1 < n) {
        s.anchor.push_back(a);
        s.offset.push_back(d * grade(u, uc, c.q));
      } else {
        s.anchor.push_back(b);
        s.offset.push_back(-d * grade(uc, u, c.q));
      }
      s.t.push_back(kTwoPi * (cum[k] + num) / Mx);
      s.speed.push_back(L * grade_deriv(u, uc, c.q) / dt);
      s.edge.push_back(k);
      s.mirror_t.push_back(l >= 0 ? kTwoPi * (cum[l] + (n - num)) / Mx : kNaN);
    }
  }
  return s;
}

// Difference of two anchored points.
Point anchored_diff(Point a1, Point o1, Point a2, Point o2) {
  return a1 == a2 ? o1 - o2 : (a1 - a2) + (o1 - o2);
}

// Double layer of the unit density on a polygon at anchor + offset with the
// listed edges left out.
double polygon_double_layer(const std::vector<Point>& v, Point anchor, Point offset, int skip1, int skip2) {
  const int n = static_cast<int>(v.size());
  double s = 0.0;
  for (int e = 0; e < n; ++e) {
    if (e == skip1 || e == skip2) continue;
    const Point pa = anchored_diff(v[e], 0.0, anchor, offset);
    const Point pb = anchored_diff(v[(e + 1) % n], 0.0, anchor, offset);
    s += std::arg(pb / pa);
  }
  return s / kTwoPi;
}

struct EnrichmentFunction {
  int term = 0;
  double exponent = 0.0;
  bool log_fn = false;
};

std::vector<EnrichmentFunction> enrichment_functions(const BoundaryDiscretization& d) {
  std::vector<EnrichmentFunction> out;
  if (!d.enrich) return out;
  for (std::size_t t = 0; t < d.singular.size(); ++t) {
    for (double e : d.singular[t].exponents) out.push_back({static_cast<int>(t), e, false});
    if (d.singular[t].log_term) out.push_back({static_cast<int>(t), 0.0, true});
  }
  return out;
}

// int_0^rho log|p - dir r| g(r) dr with g(r) = r^e (1 - r/rho)^3, or
// log(rho/r) (1 - r/rho)^3 for the log function.  dir has unit length.
double enrichment_moment(Point p, Point dir, double rho, const EnrichmentFunction& fn) {
  const Point loc = p / dir / rho;
  const double a = loc.real(), b = std::abs(loc.imag());
  const double lr = std::log(rho);
  const double e = fn.log_fn ? 0.0 : fn.exponent;
  const double pre = fn.log_fn ? rho : std::pow(rho, 1 + e);
  // Kernel in terms of dx = a - x, which callers form without cancellation.
  auto kern = [&](double dx) { return lr + 0.5 * std::log(dx * dx + b * b); };
  auto extra = [&](double x) { return fn.log_fn ? -std::log(x) : 1.0; };
  constexpr double tiny = 1e-15;
  constexpr int n = 24;
  constexpr double ratio = 0.15;
  double I;
  if (a > 0 && a < 1) {
    const double xs = a;
    auto f1 = [&](double y, double ym) {
      const double x = xs * y;
      const double w = 1 - x;
      return w * w * w * kern(xs * ym) * extra(x);
    };
    const double dl1 = fn.log_fn ? tiny : 1.0;
    I = std::pow(xs, 1 + e) * graded_jacobi_fixed(f1, e, 0.0, dl1, std::max(b / xs, tiny), n, ratio);
    auto f2 = [&](double y, double) {
      const double x = xs + (1 - xs) * y;
      return std::pow(x, e) * kern(-(1 - xs) * y) * extra(x);
    };
    const double dl2 = std::max(std::min(b, fn.log_fn || e < 0 ? xs : 1.0) / (1 - xs), tiny);
    I += std::pow(1 - xs, 4) * graded_jacobi_fixed(f2, 0.0, 3.0, dl2, 1.0, n, ratio);
  } else {
    auto f = [&](double x, double xm) { return kern(a >= 1 ? (a - 1) + xm : a - x) * extra(x); };
    const double dl = fn.log_fn ? tiny : (a <= 0 ? std::max(std::hypot(a, b), tiny) : 1.0);
    const double dr = a >= 1 ? std::max(std::hypot(a - 1, b), tiny) : 1.0;
    I = graded_jacobi_fixed(f, e, 3.0, dl, dr, n, ratio);
  }
  return pre * I;
}

// Charge carried by one enrichment function (both adjacent sides).
double enrichment_charge(double rho, const EnrichmentFunction& fn) {
  if (fn.log_fn) return 2 * rho * 25.0 / 48.0;
  const double e = fn.exponent;
  return 2 * std::pow(rho, 1 + e) * std::exp(std::lgamma(e + 1) + std::lgamma(4.0) - std::lgamma(e + 5));
}

}  // namespace

int BoundaryDiscretization::enrichment_columns() const {
  if (!enrich) return 0;
  int n = 0;
  for (const auto& s : singular) n += s.functions();
  return n;
}

BoundaryDiscretization discretize(const ContourSet& set, int level, const BieOptions& opt) {
  if (level < 0) throw Error(ErrorCode::Domain, "level must be nonnegative");
  if (opt.grading < 1) throw Error(ErrorCode::Domain, "grading order must be positive");
  BoundaryDiscretization d;
  d.set = set;
  d.level = level;
  d.bounded = set.bounded;
  d.enrich = opt.enrich;
  const int scale = 1 << level;
  int next_coef = 0;
  for (std::size_t ci = 0; ci < set.contours.size(); ++ci) {
    const Contour& c = set.contours[ci];
    ContourDiscretization cd;
    cd.potential = c.potential();
    cd.terminal = c.terminal;
    cd.q = opt.grading;
    if (c.kind == ContourKind::Circle) {
      cd.circle = true;
      cd.center = c.center;
      cd.radius = c.radius;
      cd.sense = c.orientation != 0 ? c.orientation : (c.terminal == Terminal::Outer ? 1 : -1);
      cd.N = 24 * scale;
      cd.M = 64 * scale;
      cd.points_per_edge = {cd.M};
      cd.breakpoints = {0.0, kTwoPi};
      cd.twin = {-1};
      d.contours.push_back(std::move(cd));
      continue;
    }
    const auto& v = c.vertices;
    const int K = static_cast<int>(v.size());
    cd.vertices = v;
    cd.twin = twin_edges(v);
    std::vector<double> len(K), w(K);
    double wsum = 0.0;
    for (int k = 0; k < K; ++k) {
      len[k] = std::abs(v[(k + 1) % K] - v[k]);
      if (!(len[k] > 0)) throw Error(ErrorCode::NonpositiveLength, "zero-length edge");
      w[k] = std::sqrt(len[k]);
      wsum += w[k];
    }
    // Allocate at level 0 and scale, so every edge count doubles per level.
    const double target = 16.0 * K;
    cd.points_per_edge.resize(K);
    for (int k = 0; k < K; ++k)
      cd.points_per_edge[k] = std::max(2, static_cast<int>(std::lround(w[k] / wsum * target)));
    for (int k = 0; k < K; ++k)
      if (cd.twin[k] >= 0) {
        const int m = std::max(cd.points_per_edge[k], cd.points_per_edge[cd.twin[k]]);
        cd.points_per_edge[k] = cd.points_per_edge[cd.twin[k]] = m;
      }
    int M = 0;
    for (int n : cd.points_per_edge) M += n;
    if (M % 2) {
      // Paired edges contribute an even count, so an unpaired edge exists.
      int best = -1;
      for (int k = 0; k < K; ++k)
        if (cd.twin[k] < 0 && (best < 0 || cd.points_per_edge[k] > cd.points_per_edge[best])) best = k;
      ++cd.points_per_edge[best];
      ++M;
    }
    for (int& n : cd.points_per_edge) n *= scale;
    M *= scale;
    cd.M = M;
    cd.N = M / 2;
    cd.breakpoints.assign(K + 1, 0.0);
    int cum = 0;
    for (int k = 0; k < K; ++k) {
      cum += cd.points_per_edge[k];
      cd.breakpoints[k + 1] = kTwoPi * cum / M;
    }

    double arclength = 0.0;
    for (int k = 0; k < K; ++k) {
      const double alpha = vertex_alpha(v, k);
      const double lin = len[(k + K - 1) % K], lout = len[k];
      if (std::abs(alpha - 1.0) > 1e-9) {
        SingularTerm s;
        s.contour = static_cast<int>(ci);
        s.vertex = k;
        s.location = v[k];
        s.anchor_arclength = arclength;
        s.omega = kPi * alpha;
        s.support_radius = std::min(lin, lout) / 8;
        if (alpha == 2.0) {
          s.kind = SingularKind::CuspTip;
          s.exponents = {-0.5, 0.0};
          s.log_term = true;
        } else {
          const double a = 1.0 / alpha;  // pi / omega
          s.kind = SingularKind::Corner;
          s.exponents = {a - 1, 2 * a - 1};
        }
        if (opt.enrich) {
          s.coefficient_index = next_coef;
          next_coef += s.functions();
        }
        d.singular.push_back(std::move(s));
      }
      arclength += lout;
    }
    d.contours.push_back(std::move(cd));
  }
  return d;
}

NodeSet collocation_nodes(const ContourDiscretization& c) { return make_nodes(c, 1); }
NodeSet quadrature_nodes(const ContourDiscretization& c) { return make_nodes(c, 2); }

double double_layer_of_constant(const Contour& c, Point x) {
  if (c.kind == ContourKind::Circle) {
    const int sense = c.orientation != 0 ? c.orientation : 1;
    const double r = std::abs(x - c.center);
    if (std::abs(r - c.radius) <= 1e-14 * c.radius) return 0.5 * sense;
    return r < c.radius ? sense : 0.0;
  }
  const auto& v = c.vertices;
  const int n = static_cast<int>(v.size());
  const double tol = 1e-14 * loop_scale(v);
  int skip[2] = {-1, -1};
  int ns = 0;
  for (int e = 0; e < n && ns < 2; ++e) {
    const Point a = v[e], b = v[(e + 1) % n];
    const Point ab = b - a;
    const double L = std::abs(ab);
    if (std::abs(cross(ab, x - a)) <= tol * L && dot(x - a, ab) >= 0 && dot(x - a, ab) <= L * L) skip[ns++] = e;
  }
  return polygon_double_layer(v, x, 0.0, skip[0], skip[1]);
}

double gauss_value(const ContourSet& set, std::array<double, 2> potentials, int on, int edge, Point anchor,
                   Point offset) {
  double g = 0.0;
  for (int j = 0; j < static_cast<int>(set.contours.size()); ++j) {
    const Contour& c = set.contours[j];
    const double pot = potentials[c.terminal == Terminal::Inner ? 1 : 0];
    double w;
    if (c.kind == ContourKind::Circle) {
      const int sense = c.orientation != 0 ? c.orientation : 1;
      if (j == on) {
        w = 0.5 * sense + 0.5;
      } else {
        w = std::abs(anchored_diff(anchor, offset, c.center, 0.0)) < c.radius ? sense : 0.0;
      }
    } else if (j == on) {
      const int tw = twin_edges(c.vertices)[edge];
      w = polygon_double_layer(c.vertices, anchor, offset, edge, tw);
      if (tw < 0) w += 0.5;
    } else {
      w = polygon_double_layer(c.vertices, anchor, offset, -1, -1);
    }
    g += pot * w;
  }
  return g;
}

Eigen::VectorXd assemble_rhs(const BoundaryDiscretization& disc, std::array<double, 2> potentials) {
  int rows = 0;
  for (const auto& c : disc.contours) rows += c.M;
  Eigen::VectorXd b = Eigen::VectorXd::Zero(rows + 1);
  int r = 0;
  for (int j = 0; j < static_cast<int>(disc.contours.size()); ++j) {
    const auto& c = disc.contours[j];
    const NodeSet x = collocation_nodes(c);
    const double cj = potentials[c.terminal == Terminal::Inner ? 1 : 0];
    for (std::size_t i = 0; i < x.size(); ++i)
      b(r++) = -(cj - gauss_value(disc.set, potentials, j, x.edge[i], x.anchor[i], x.offset[i]));
  }
  return b;
}

LinearSystem assemble(const BoundaryDiscretization& disc, std::array<double, 2> potentials,
                      const BieOptions& opt) {
  const int nc = static_cast<int>(disc.contours.size());
  const auto efun = enrichment_functions(disc);
  LinearSystem sys;
  sys.row_offset.assign(nc + 1, 0);
  sys.col_offset.assign(nc + 1, 0);
  for (int j = 0; j < nc; ++j) {
    sys.row_offset[j + 1] = sys.row_offset[j] + disc.contours[j].M;
    sys.col_offset[j + 1] = sys.col_offset[j] + disc.contours[j].basis_size();
  }
  const int rows = sys.row_offset[nc] + 1;
  const int enrich0 = sys.col_offset[nc];
  sys.constant_col = enrich0 + static_cast<int>(efun.size());
  const int cols = sys.constant_col + 1;
  if (8.0 * rows * cols > kMaxMatrixBytes)
    throw Error(ErrorCode::OomGuard, "BIE matrix of " + std::to_string(rows) + " x " + std::to_string(cols) +
                                         " exceeds the memory guard");
  if (!efun.empty()) {
    for (const auto& c : disc.contours) {
      if (c.circle) continue;
      const int K = c.edges();
      for (int k = 0; k < K; ++k) {
        double used = 0.0;
        for (const auto& s : disc.singular)
          if (&disc.contours[s.contour] == &c && (s.vertex == k || s.vertex == (k + 1) % K)) used += s.support_radius;
        if (used > std::abs(c.vertices[(k + 1) % K] - c.vertices[k]))
          throw Error(ErrorCode::SingularOverlap, "singular supports overlap on an edge");
      }
    }
  }
  sys.A = Eigen::MatrixXd::Zero(rows, cols);

  std::vector<NodeSet> col(nc), quad(nc);
  for (int j = 0; j < nc; ++j) {
    col[j] = collocation_nodes(disc.contours[j]);
    quad[j] = quadrature_nodes(disc.contours[j]);
  }
  std::vector<int> row_contour(rows - 1);
  for (int j = 0; j < nc; ++j)
    for (int r = sys.row_offset[j]; r < sys.row_offset[j + 1]; ++r) row_contour[r] = j;

  auto fill_row = [&](int r) {
    thread_local Eigen::FFT<double> fft;
    thread_local std::vector<double> R;
    thread_local std::vector<std::complex<double>> F;
    const int ci = row_contour[r];
    const int i = r - sys.row_offset[ci];
    const NodeSet& X = col[ci];
    const Point xa = X.anchor[i], xo = X.offset[i];
    const double ti = X.t[i], tm = X.mirror_t[i];
    const bool mirrored = !std::isnan(tm);
    for (int cj = 0; cj < nc; ++cj) {
      const NodeSet& Y = quad[cj];
      const int Mq = static_cast<int>(Y.size());
      const int N = disc.contours[cj].N;
      R.resize(Mq);
      for (int q = 0; q < Mq; ++q) {
        double v = std::log(std::abs(anchored_diff(xa, xo, Y.anchor[q], Y.offset[q])));
        if (cj == ci) {
          v -= symm(ti - Y.t[q]);
          if (mirrored) v -= symm(tm - Y.t[q]);
        }
        R[q] = v;
      }
      const int c0 = sys.col_offset[cj];
      // Entry = (1/2pi) (2pi/Mq) sum_q R_q B(s_q), s_q = 2pi (q + 1/2) / Mq.
      if (opt.use_fft) {
        fft.fwd(F, R);
        sys.A(r, c0) = std::real(F[0]) / Mq;
        for (int m = 1; m < N; ++m) {
          const std::complex<double> z = std::polar(1.0, kPi * m / Mq) * std::conj(F[m]);
          sys.A(r, c0 + m) = z.real() / Mq;
          sys.A(r, c0 + N - 1 + m) = z.imag() / Mq;
        }
      } else {
        double s0 = 0.0;
        for (int q = 0; q < Mq; ++q) s0 += R[q];
        sys.A(r, c0) = s0 / Mq;
        for (int m = 1; m < N; ++m) {
          double sc = 0.0, ss = 0.0;
          for (int q = 0; q < Mq; ++q) {
            sc += R[q] * std::cos(m * Y.t[q]);
            ss += R[q] * std::sin(m * Y.t[q]);
          }
          sys.A(r, c0 + m) = sc / Mq;
          sys.A(r, c0 + N - 1 + m) = ss / Mq;
        }
      }
      if (cj == ci) {
        // Symm part: int log|2 sin((t-s)/2)| e^{ims} ds = -(pi/m) e^{imt}.
        for (int m = 1; m < N; ++m) {
          double cs = std::cos(m * ti), sn = std::sin(m * ti);
          if (mirrored) {
            cs += std::cos(m * tm);
            sn += std::sin(m * tm);
          }
          sys.A(r, c0 + m) -= cs / (2.0 * m);
          sys.A(r, c0 + N - 1 + m) -= sn / (2.0 * m);
        }
      }
    }
    for (std::size_t f = 0; f < efun.size(); ++f) {
      const SingularTerm& s = disc.singular[efun[f].term];
      const auto& v = disc.contours[s.contour].vertices;
      const int K = static_cast<int>(v.size());
      const Point V = v[s.vertex];
      const Point p = anchored_diff(xa, xo, V, 0.0);
      const Point dout = v[(s.vertex + 1) % K] - V, din = v[(s.vertex + K - 1) % K] - V;
      double val = 0.0;
      for (Point dir : {dout / std::abs(dout), din / std::abs(din)})
        val += enrichment_moment(p, dir, s.support_radius, efun[f]);
      sys.A(r, enrich0 + static_cast<int>(f)) = val / kTwoPi;
    }
    sys.A(r, sys.constant_col) = -1.0;
  };
  parallel_for(rows - 1, worker_count(opt.threads), fill_row);

  const int last = rows - 1;
  for (int j = 0; j < nc; ++j) sys.A(last, sys.col_offset[j]) = kTwoPi;
  for (std::size_t f = 0; f < efun.size(); ++f)
    sys.A(last, enrich0 + static_cast<int>(f)) = enrichment_charge(disc.singular[efun[f].term].support_radius, efun[f]);
  sys.b = assemble_rhs(disc, potentials);
  return sys;
}

Eigen::VectorXd Preconditioner::apply(const Eigen::VectorXd& y) const {
  Eigen::VectorXd x(y.size());
  const int nc = static_cast<int>(blocks.size());
  for (int j = 0; j < nc; ++j) {
    const int n = col_offset[j + 1] - col_offset[j];
    x.segment(col_offset[j], n).noalias() = blocks[j] * y.segment(col_offset[j], n);
  }
  for (std::size_t k = 0; k < extra_scale.size(); ++k) x(col_offset[nc] + k) = extra_scale[k] * y(col_offset[nc] + k);
  if (pivot >= 0) x(pivot) -= constraint.dot(x) / constraint(pivot);
  return x;
}

Eigen::VectorXd Preconditioner::apply_transpose(const Eigen::VectorXd& v_in) const {
  Eigen::VectorXd v = v_in;
  if (pivot >= 0) v -= constraint.transpose() * (v_in(pivot) / constraint(pivot));
  Eigen::VectorXd y(v.size());
  const int nc = static_cast<int>(blocks.size());
  for (int j = 0; j < nc; ++j) {
    const int n = col_offset[j + 1] - col_offset[j];
    y.segment(col_offset[j], n).noalias() = blocks[j].transpose() * v.segment(col_offset[j], n);
  }
  for (std::size_t k = 0; k < extra_scale.size(); ++k) y(col_offset[nc] + k) = extra_scale[k] * v(col_offset[nc] + k);
  return y;
}

Preconditioner block_preconditioner(const LinearSystem& sys, double rank_tol) {
  Preconditioner P;
  P.col_offset = sys.col_offset;
  const int nc = static_cast<int>(sys.col_offset.size()) - 1;
  for (int j = 0; j < nc; ++j) {
    const int r0 = sys.row_offset[j], m = sys.row_offset[j + 1] - r0;
    const int c0 = sys.col_offset[j], n = sys.col_offset[j + 1] - c0;
    // The charge row keeps the constant mode of a contour with unit
    // logarithmic capacity, whose self block has a zero first column.
    Eigen::MatrixXd S(m + 1, n);
    S.topRows(m) = sys.A.block(r0, c0, m, n);
    S.bottomRows(1) = sys.A.block(sys.A.rows() - 1, c0, 1, n);
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(S);
    const Eigen::MatrixXd& QR = qr.matrixQR();
    const double d0 = std::abs(QR(0, 0));
    int rank = 0;
    while (rank < std::min(m + 1, n) && std::abs(QR(rank, rank)) > rank_tol * d0) ++rank;
    Eigen::MatrixXd Z = Eigen::MatrixXd::Zero(n, n);
    Z.topLeftCorner(rank, rank) = QR.topLeftCorner(rank, rank).triangularView<Eigen::Upper>().solve(
        Eigen::MatrixXd::Identity(rank, rank));
    P.blocks.push_back(qr.colsPermutation() * Z);
  }
  for (int c = sys.col_offset[nc]; c < sys.A.cols(); ++c) {
    const double nrm = sys.A.col(c).norm();
    P.extra_scale.push_back(nrm > 0 ? 1.0 / nrm : 1.0);
  }
  P.constraint = sys.A.bottomRows(1);
  P.pivot = sys.col_offset[0];
  return P;
}

DensitySolution solve_density(const LinearSystem& sys, const Eigen::VectorXd& b, const Preconditioner& P,
                              const BieOptions& opt) {
  DensitySolution sol;
  const Eigen::MatrixXd& A = sys.A;
  const int n = static_cast<int>(A.cols());
  const double bnorm = b.norm();
  if (bnorm == 0.0) {
    sol.coeffs = Eigen::VectorXd::Zero(n);
    sol.converged = true;
    return sol;
  }
  // CGLS on A P y = b, x = P y.
  Eigen::VectorXd y = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd r = b;
  Eigen::VectorXd s = P.apply_transpose(A.transpose() * r);
  Eigen::VectorXd p = s;
  double g = s.squaredNorm();
  const double g0 = g;
  for (int it = 0; it < opt.max_iter; ++it) {
    const Eigen::VectorXd q = A * P.apply(p);
    const double qq = q.squaredNorm();
    if (qq == 0.0) break;
    const double alpha = g / qq;
    y += alpha * p;
    r -= alpha * q;
    s = P.apply_transpose(A.transpose() * r);
    const double gn = s.squaredNorm();
    sol.iterations = it + 1;
    sol.residual = std::sqrt(gn / g0);
    if (sol.residual <= opt.cgls_tol) {
      sol.converged = true;
      break;
    }
    p = s + (gn / g) * p;
    g = gn;
  }
  sol.coeffs = P.apply(y);
  if (!sol.converged) {
    // Dense fallback on the preconditioned matrix.
    Eigen::MatrixXd AP(A.rows(), n);
    for (int c = 0; c < n; ++c) AP.col(c) = A * P.apply(Eigen::VectorXd::Unit(n, c));
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(AP);
    cod.setThreshold(1e-13);
    const Eigen::VectorXd yd = cod.solve(b);
    const Eigen::VectorXd rd = b - AP * yd;
    const double res = (AP.transpose() * rd).norm() / std::sqrt(g0);
    if (!yd.allFinite())
      throw Error(ErrorCode::IterationLimit, "CGLS stopped at relative residual " + std::to_string(sol.residual));
    sol.coeffs = P.apply(yd);
    sol.residual = res;
    sol.fallback = true;
    sol.converged = true;
  }
  sol.ls_residual = (A * sol.coeffs - b).norm() / bnorm;
  return sol;
}

DensitySolution solve_density(const LinearSystem& sys, const BieOptions& opt) {
  return solve_density(sys, sys.b, block_preconditioner(sys, opt.rank_tol), opt);
}

std::vector<double> contour_charges(const BoundaryDiscretization& disc, const LinearSystem& sys,
                                    const Eigen::VectorXd& coeffs) {
  const int nc = static_cast<int>(disc.contours.size());
  std::vector<double> q(nc, 0.0);
  for (int j = 0; j < nc; ++j) q[j] = kTwoPi * coeffs(sys.col_offset[j]);
  const auto efun = enrichment_functions(disc);
  for (std::size_t f = 0; f < efun.size(); ++f) {
    const SingularTerm& s = disc.singular[efun[f].term];
    q[s.contour] += coeffs(sys.col_offset[nc] + static_cast<int>(f)) * enrichment_charge(s.support_radius, efun[f]);
  }
  return q;
}

CapacityMatrix capacity_matrix(const ContourSet& set, int level, const BieOptions& opt) {
  bool have[2] = {false, false};
  for (const auto& c : set.contours) have[c.terminal == Terminal::Inner ? 1 : 0] = true;
  if (!have[0] || !have[1]) throw Error(ErrorCode::BadArity, "capacity matrix needs both terminals");
  const BoundaryDiscretization disc = discretize(set, level, opt);
  LinearSystem sys = assemble(disc, {0.0, 1.0}, opt);
  const Preconditioner P = block_preconditioner(sys, opt.rank_tol);
  CapacityMatrix cm;
  cm.unknowns = static_cast<int>(sys.A.cols());
  cm.equations = static_cast<int>(sys.A.rows());
  for (int k = 0; k < 2; ++k) {
    const std::array<double, 2> pots = k == 0 ? std::array<double, 2>{1.0, 0.0} : std::array<double, 2>{0.0, 1.0};
    const Eigen::VectorXd b = k == 1 ? sys.b : assemble_rhs(disc, pots);
    const DensitySolution sol = solve_density(sys, b, P, opt);
    cm.iterations = std::max(cm.iterations, sol.iterations);
    cm.residual = std::max(cm.residual, sol.residual);
    const auto q = contour_charges(disc, sys, sol.coeffs);
    for (std::size_t j = 0; j < q.size(); ++j) cm.m(k, disc.contours[j].terminal == Terminal::Inner ? 1 : 0) += q[j];
    if (k == 1) cm.constant = sol.coeffs(sys.constant_col);
  }
  const double scale = cm.m.cwiseAbs().maxCoeff();
  if (!(scale > 0) || !std::isfinite(scale)) throw Error(ErrorCode::CheckFail, "capacity matrix vanishes");
  cm.symmetry_dev = std::abs(cm.m(0, 1) - cm.m(1, 0)) / scale;
  cm.nullspace_dev = (cm.m * Eigen::Vector2d(1.0, 1.0)).cwiseAbs().maxCoeff() / scale;
  const double bound = 1e3 * std::max(cm.residual, opt.cgls_tol);
  if (cm.symmetry_dev > bound || cm.nullspace_dev > bound)
    throw Error(ErrorCode::CheckFail, "capacity matrix symmetry " + std::to_string(cm.symmetry_dev) +
                                          ", nullspace " + std::to_string(cm.nullspace_dev));
  return cm;
}

CapacityMatrix capacity_matrix(const CondenserSpec& spec, int level, const BieOptions& opt) {
  return capacity_matrix(build_contours(spec), level, opt);
}

CapacityResult capacity_bie_at_level(const ContourSet& set, int level, const BieOptions& opt) {
  const auto t0 = std::chrono::steady_clock::now();
  const CapacityMatrix cm = capacity_matrix(set, level, opt);
  CapacityResult res;
  res.method = Method::BIE;
  res.value = std::abs(cm.m(1, 1));
  res.note("level", static_cast<long long>(level));
  res.note("unknowns", static_cast<long long>(cm.unknowns));
  res.note("equations", static_cast<long long>(cm.equations));
  res.note("iterations", static_cast<long long>(cm.iterations));
  res.note("residual", cm.residual);
  res.note("symmetry_dev", cm.symmetry_dev);
  res.note("nullspace_dev", cm.nullspace_dev);
  if (!set.bounded) res.note("potential_at_infinity", cm.constant);
  res.note("seconds", std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  return res;
}

CapacityResult capacity_bie(const ContourSet& set, double target_rel_err, int max_level, const BieOptions& opt) {
  const auto t0 = std::chrono::steady_clock::now();
  CapacityResult best;
  bool have = false;
  double prev = 0.0, diff = std::numeric_limits<double>::infinity();
  int level = 0;
  std::string stop;
  for (; level <= max_level; ++level) {
    CapacityResult cur;
    try {
      cur = capacity_bie_at_level(set, level, opt);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::OomGuard && e.code() != ErrorCode::CheckFail &&
          e.code() != ErrorCode::IterationLimit)
        throw;
      stop = to_string(e.code());
      break;
    }
    if (have) diff = std::abs(cur.value - prev) / cur.value;
    prev = cur.value;
    best = cur;
    have = true;
    if (diff <= target_rel_err) break;
  }
  if (!have || (!std::isfinite(diff) && !stop.empty())) {
    // The spectral scheme failed before two levels were available.
    CapacityResult res = capacity_panel(set);
    res.note("fallback", std::string("panel"));
    if (!stop.empty()) res.note("spectral_stop", stop);
    return res;
  }
  best.rel_err_estimate = diff;
  best.converged = diff <= target_rel_err;
  if (!best.converged) best.note("status", std::string(to_string(ErrorCode::NotConverged)));
  if (!stop.empty()) best.note("spectral_stop", stop);
  best.note("level_difference", diff);
  best.note("total_seconds", std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  return best;
}

CapacityResult capacity_bie(const CondenserSpec& spec, double target_rel_err, int max_level, const BieOptions& opt) {
  return capacity_bie(build_contours(spec), target_rel_err, max_level, opt);
}

void write_density_csv(std::ostream& os, const ContourSet& set, int level, const BieOptions& opt) {
  const BoundaryDiscretization disc = discretize(set, level, opt);
  const LinearSystem sys = assemble(disc, {0.0, 1.0}, opt);
  const DensitySolution sol = solve_density(sys, opt);
  const auto efun = enrichment_functions(disc);
  os << "contour,t,x,y,density\n";
  char buf[256];
  for (int j = 0; j < static_cast<int>(disc.contours.size()); ++j) {
    const auto& c = disc.contours[j];
    const NodeSet X = collocation_nodes(c);
    const int c0 = sys.col_offset[j], N = c.N;
    for (std::size_t i = 0; i < X.size(); ++i) {
      const double t = X.t[i];
      double psi = sol.coeffs(c0);
      for (int m = 1; m < N; ++m)
        psi += sol.coeffs(c0 + m) * std::cos(m * t) + sol.coeffs(c0 + N - 1 + m) * std::sin(m * t);
      double sigma = psi / X.speed[i];
      const Point x = X.point(i);
      for (std::size_t f = 0; f < efun.size(); ++f) {
        const SingularTerm& s = disc.singular[efun[f].term];
        if (s.contour != j) continue;
        const double r = std::abs(anchored_diff(X.anchor[i], X.offset[i], s.location, 0.0));
        if (r >= s.support_radius) continue;
        const double u = r / s.support_radius, chi = (1 - u) * (1 - u) * (1 - u);
        const double g = efun[f].log_fn ? std::log(s.support_radius / r) : std::pow(r, efun[f].exponent);
        sigma += sol.coeffs(sys.col_offset.back() + static_cast<int>(f)) * g * chi;
      }
      std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g,%.17g\n", j, t, x.real(), x.imag(), sigma);
      os << buf;
    }
  }
}

ConditionReport condition_numbers(const ContourSet& set, int level, const BieOptions& opt) {
  const BoundaryDiscretization disc = discretize(set, level, opt);
  const LinearSystem sys = assemble(disc, {0.0, 1.0}, opt);
  ConditionReport rep;
  rep.rows = static_cast<int>(sys.A.rows());
  rep.cols = static_cast<int>(sys.A.cols());
  const Eigen::VectorXd sv = Eigen::BDCSVD<Eigen::MatrixXd>(sys.A).singularValues();
  rep.cond_A = sv(0) / sv(sv.size() - 1);
  rep.cond_normal = rep.cond_A * rep.cond_A;
  const Preconditioner P = block_preconditioner(sys, opt.rank_tol);
  const int n = rep.cols;
  Eigen::MatrixXd AP(sys.A.rows(), n);
  for (int c = 0; c < n; ++c) AP.col(c) = sys.A * P.apply(Eigen::VectorXd::Unit(n, c));
  const Eigen::VectorXd sp = Eigen::BDCSVD<Eigen::MatrixXd>(AP).singularValues();
  int k = static_cast<int>(sp.size()) - 1;
  while (k > 0 && sp(k) <= 1e-10 * sp(0)) --k;
  rep.cond_preconditioned = sp(0) / sp(k);
  return rep;
}

}  // namespace condcap
