#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>

#include "condcap/bie.hpp"
#include "condcap/error.hpp"
#include "condcap/specfun.hpp"

namespace condcap {

namespace {

constexpr double kTwoPi = 2 * std::numbers::pi;

struct Segment {
  Point a, b;
  int contour, edge;
  Terminal terminal;
};

struct Panel {
  Point anchor, center, half;  // y = anchor + center + half * xi, xi in [-1, 1]
  int segment;
};

Point anchored_diff(Point a1, Point o1, Point a2, Point o2) {
  return a1 == a2 ? o1 - o2 : (a1 - a2) + (o1 - o2);
}

// int_{-1}^{1} log|tau - s| s^k ds for k < n.
Eigen::VectorXd log_moments(std::complex<double> tau, int n) {
  std::vector<std::complex<double>> p(n + 1);
  const bool on_line = std::abs(tau.imag()) <= 1e-14 && std::abs(tau.real()) <= 1;
  p[0] = on_line ? std::complex<double>(std::log(std::abs((1.0 - tau) / (1.0 + tau))), 0.0)
                 : std::log((1.0 - tau) / (-1.0 - tau));
  for (int k = 0; k < n; ++k) p[k + 1] = tau * p[k] + (k % 2 == 0 ? 2.0 / (k + 1) : 0.0);
  const double l1 = std::log(std::abs(1.0 - tau)), l2 = std::log(std::abs(1.0 + tau));
  Eigen::VectorXd q(n);
  for (int k = 0; k < n; ++k) {
    const double sgn = (k + 1) % 2 == 0 ? 1.0 : -1.0;  // (-1)^(k+1)
    q(k) = (l1 - sgn * l2 - p[k + 1].real()) / (k + 1);
  }
  return q;
}

// Breakpoint at fraction u of a segment, with uc = 1 - u kept exactly
// for points graded towards the far end.
struct Break {
  double u, uc;
};

std::vector<Break> breakpoints(double L, double hmax, int levels, double ratio) {
  const int n0 = std::max(2, static_cast<int>(std::ceil(L / hmax)));
  std::vector<Break> br;
  for (int i = 0; i <= n0; ++i) br.push_back({static_cast<double>(i) / n0, static_cast<double>(n0 - i) / n0});
  double s = 1.0 / n0;
  for (int i = 0; i < levels; ++i) {
    s *= ratio;
    br.push_back({s, 1 - s});
    br.push_back({1 - s, s});
  }
  std::sort(br.begin(), br.end(), [](const Break& x, const Break& y) { return x.u < y.u; });
  return br;
}

struct PanelSolve {
  double capacity;
  int unknowns;
};

PanelSolve panel_solve(const ContourSet& set, const std::vector<Segment>& segs, double hmax, const PanelOptions& opt) {
  const int P = opt.order;
  const QuadRule& gl = gauss_legendre(P);
  Eigen::MatrixXd V(P, P);
  for (int i = 0; i < P; ++i)
    for (int k = 0; k < P; ++k) V(i, k) = std::pow(gl.x[i], k);
  const Eigen::MatrixXd Vinv = V.inverse();

  std::vector<Panel> panels;
  for (int s = 0; s < static_cast<int>(segs.size()); ++s) {
    const auto br = breakpoints(std::abs(segs[s].b - segs[s].a), hmax, opt.grading_levels, opt.ratio);
    const Point d = segs[s].b - segs[s].a;
    for (std::size_t i = 0; i + 1 < br.size(); ++i) {
      const Break p = br[i], q = br[i + 1];
      if (p.u + q.u <= 1.0)
        panels.push_back({segs[s].a, d * ((p.u + q.u) / 2), d * ((q.u - p.u) / 2), s});
      else
        panels.push_back({segs[s].b, -d * ((p.uc + q.uc) / 2), d * ((p.uc - q.uc) / 2), s});
    }
  }
  const int np = static_cast<int>(panels.size());
  const int n = np * P;
  std::vector<Point> XA(n), XO(n);
  std::vector<double> W(n);
  for (int j = 0; j < np; ++j)
    for (int i = 0; i < P; ++i) {
      XA[j * P + i] = panels[j].anchor;
      XO[j * P + i] = panels[j].center + panels[j].half * gl.x[i];
      W[j * P + i] = std::abs(panels[j].half) * gl.w[i];
    }
  Eigen::MatrixXd A(n + 1, n + 1);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n + 1);
  for (int j = 0; j < np; ++j) {
    const Panel& pj = panels[j];
    const double hl = std::abs(pj.half), lh = std::log(hl);
    for (int i = 0; i < n; ++i) {
      const std::complex<double> tau = anchored_diff(XA[i], XO[i], pj.anchor, pj.center) / pj.half;
      if (std::abs(tau) < 2.5) {
        Eigen::VectorXd q = log_moments(tau, P);
        for (int k = 0; k < P; k += 2) q(k) += lh * 2.0 / (k + 1);
        const Eigen::RowVectorXd w = hl * (q.transpose() * Vinv);
        for (int m = 0; m < P; ++m) A(i, j * P + m) = w(m) / kTwoPi;
      } else {
        for (int m = 0; m < P; ++m) A(i, j * P + m) = std::log(std::abs(anchored_diff(XA[i], XO[i], XA[j * P + m], XO[j * P + m]))) * W[j * P + m] / kTwoPi;
      }
    }
  }
  for (int i = 0; i < n; ++i) {
    A(i, n) = -1.0;
    const Segment& s = segs[panels[i / P].segment];
    const double c = s.terminal == Terminal::Inner ? 1.0 : 0.0;
    b(i) = -(c - gauss_value(set, {0.0, 1.0}, s.contour, s.edge, XA[i], XO[i]));
  }
  for (int i = 0; i < n; ++i) A(n, i) = W[i];
  A(n, n) = 0.0;
  const Eigen::VectorXd sol = A.partialPivLu().solve(b);
  double q = 0.0;
  for (int i = 0; i < n; ++i)
    if (segs[panels[i / P].segment].terminal == Terminal::Inner) q += W[i] * sol(i);
  return {std::abs(q), n + 1};
}

}  // namespace

CapacityResult capacity_panel(const ContourSet& set, const PanelOptions& opt) {
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<Segment> segs;
  for (int j = 0; j < static_cast<int>(set.contours.size()); ++j) {
    const Contour& c = set.contours[j];
    if (c.kind == ContourKind::Circle) throw Error(ErrorCode::MethodScope, "panel scheme handles polygons only");
    const auto& v = c.vertices;
    const int K = static_cast<int>(v.size());
    for (int k = 0; k < K; ++k) {
      bool dup = false;
      for (int l = 0; l < k && !dup; ++l) dup = v[l] == v[(k + 1) % K] && v[(l + 1) % K] == v[k];
      if (!dup) segs.push_back({v[k], v[(k + 1) % K], j, k, c.terminal});
    }
  }
  const double hmax = opt.max_panel > 0 ? opt.max_panel : characteristic_length(set) / 4;
  const PanelSolve coarse = panel_solve(set, segs, hmax, opt);
  CapacityResult res;
  res.method = Method::BIE;
  res.value = coarse.capacity;
  res.note("scheme", std::string("panel"));
  res.note("unknowns", static_cast<long long>(coarse.unknowns));
  if (opt.estimate) {
    const PanelSolve fine = panel_solve(set, segs, hmax / 2, opt);
    res.rel_err_estimate = std::abs(fine.capacity - coarse.capacity) / fine.capacity;
    res.value = fine.capacity;
    res.note("unknowns_fine", static_cast<long long>(fine.unknowns));
  }
  res.note("seconds", std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  return res;
}

}  // namespace condcap
