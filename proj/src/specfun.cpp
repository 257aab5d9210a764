#include "condcap/specfun.hpp"

#include <algorithm>
#include <map>
#include <memory>
#include <mutex>
#include <tuple>

#include <Eigen/Eigenvalues>

namespace condcap {

double hyp_half(double m) {
  if (!(m >= 0.0 && m < 1.0)) throw Error(ErrorCode::Domain, "hyp_half needs 0 <= m < 1");
  return 1.0 / agm(1.0, std::sqrt(1.0 - m));
}

double hyp_half_complement(double k) {
  if (!(k > 0.0 && k <= 1.0)) throw Error(ErrorCode::Domain, "hyp_half_complement needs 0 < k <= 1");
  return 1.0 / agm(1.0, k);
}

namespace {

// Jacobi polynomial P_n^{(a,b)}(x) and P_{n-1} by the three-term recurrence.
// Evaluated in long double so that polished nodes and weights are good to
// the last bit of a double.
using LD = long double;

std::pair<LD, LD> jacobi_pair(int n, LD a, LD b, LD x) {
  LD p0 = 1.0L;
  if (n == 0) return {p0, 0.0L};
  LD p1 = (a + 1) + (a + b + 2) * (x - 1) / 2;
  for (int k = 2; k <= n; ++k) {
    const LD s = 2 * k + a + b;
    const LD c1 = 2 * k * (k + a + b) * (s - 2);
    const LD c2 = (s - 1) * (s * (s - 2) * x + a * a - b * b);
    const LD c3 = 2 * (k + a - 1) * (k + b - 1) * s;
    const LD p2 = (c2 * p1 - c3 * p0) / c1;
    p0 = p1;
    p1 = p2;
  }
  return {p1, p0};
}

// (1 - x^2) P_n'(x) from P_n and P_{n-1}.
LD jacobi_deriv_times(int n, LD a, LD b, LD x, LD pn, LD pn1) {
  const LD s = 2 * n + a + b;
  return (n * ((a - b) - s * x) * pn + 2 * (n + a) * (n + b) * pn1) / s;
}

QuadRule build_gauss_jacobi(int n, double a, double b) {
  // Golub-Welsch for a starting guess.
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  for (int k = 0; k < n; ++k) {
    const double s = 2 * k + a + b;
    J(k, k) = k == 0 ? (b - a) / (a + b + 2) : (b * b - a * a) / (s * (s + 2));
    if (k + 1 < n) {
      const int m = k + 1;
      const double sm = 2 * m + a + b;
      double b2;
      if (m == 1)
        b2 = 4 * (1 + a) * (1 + b) / ((2 + a + b) * (2 + a + b) * (3 + a + b));
      else
        b2 = 4 * m * (m + a) * (m + b) * (m + a + b) / (sm * sm * (sm + 1) * (sm - 1));
      J(k, k + 1) = J(k + 1, k) = std::sqrt(b2);
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  QuadRule r;
  r.x.resize(n);
  r.w.resize(n);
  const LD A = a, B = b;
  const LD logc = (A + B + 1) * std::log(2.0L) + std::lgamma(n + A + 1) + std::lgamma(n + B + 1) -
                  std::lgamma(n + A + B + 1) - std::lgamma(n + 1.0L);
  for (int i = 0; i < n; ++i) {
    LD x = es.eigenvalues()(i);
    // Newton polish on P_n.
    for (int it = 0; it < 3; ++it) {
      auto [pn, pn1] = jacobi_pair(n, A, B, x);
      const LD dp = jacobi_deriv_times(n, A, B, x, pn, pn1) / ((1 - x) * (1 + x));
      x -= pn / dp;
    }
    auto [pn, pn1] = jacobi_pair(n, A, B, x);
    const LD t = jacobi_deriv_times(n, A, B, x, pn, pn1);
    const LD omx2 = (1 - x) * (1 + x);
    r.x[i] = static_cast<double>(x);
    r.w[i] = static_cast<double>(std::exp(logc) * omx2 / (t * t));
  }
  return r;
}

std::mutex g_rule_mutex;
std::map<std::tuple<int, double, double>, std::unique_ptr<QuadRule>> g_rules;

}  // namespace

const QuadRule& gauss_jacobi(int n, double a, double b) {
  if (!(a > -1) || !(b > -1)) throw Error(ErrorCode::NonintegrableEndpoint, "Jacobi exponent must exceed -1");
  std::lock_guard<std::mutex> lock(g_rule_mutex);
  auto& slot = g_rules[{n, a, b}];
  if (!slot) slot = std::make_unique<QuadRule>(build_gauss_jacobi(n, a, b));
  return *slot;
}

const QuadRule& gauss_legendre(int n) { return gauss_jacobi(n, 0.0, 0.0); }

double sc_log_side_integral(double g, double beta_left, double beta_right,
                            const std::vector<NodeDistance>& left, const std::vector<NodeDistance>& right,
                            double* err) {
  if (!(g > 0)) throw Error(ErrorCode::Degenerate, "side integral over an empty interval");
  double logpre = (1 + beta_left + beta_right) * std::log(g);
  double dl = std::numeric_limits<double>::infinity(), dr = dl;
  for (const auto& n : left) {
    logpre += n.beta * std::log(n.dist);
    dl = std::min(dl, n.dist / g);
  }
  for (const auto& n : right) {
    logpre += n.beta * std::log(n.dist);
    dr = std::min(dr, n.dist / g);
  }
  auto f = [&](double x, double xc) {
    double s = 0.0;
    for (const auto& n : left) s += n.beta * std::log1p(g * x / n.dist);
    for (const auto& n : right) s += n.beta * std::log1p(g * xc / n.dist);
    return std::exp(s);
  };
  const double I = graded_jacobi(f, beta_left, beta_right, dl, dr, err);
  return logpre + std::log(I);
}

std::complex<double> sc_side_integral(const JacobiExponents& exps, double from, double to,
                                      std::complex<double> scale, double* err) {
  if (exps.nodes.size() != exps.exponents.size())
    throw Error(ErrorCode::BadArity, "nodes and exponents differ in length");
  if (from == to) return 0.0;
  if (from > to) return -sc_side_integral(exps, to, from, scale, err);
  const double len = to - from;
  const double tol = 1e-15 * std::max({1.0, std::abs(from), std::abs(to)});
  double a = 0.0, b = 0.0, phase = 0.0;
  std::vector<NodeDistance> left, right;
  for (std::size_t j = 0; j < exps.nodes.size(); ++j) {
    const double t = exps.nodes[j], beta = exps.exponents[j];
    if (std::abs(t - from) <= tol) {
      a += beta;
    } else if (std::abs(t - to) <= tol) {
      b += beta;
      phase += beta;
    } else if (t < from) {
      left.push_back({from - t, beta});
    } else if (t > to) {
      right.push_back({t - to, beta});
      phase += beta;
    } else {
      throw Error(ErrorCode::NodeInsideInterval, "a node lies strictly inside the interval");
    }
  }
  if (!(a > -1) || !(b > -1))
    throw Error(ErrorCode::NonintegrableEndpoint, "endpoint exponent must exceed -1");
  const double mag = std::exp(sc_log_side_integral(len, a, b, left, right, err));
  return scale * std::polar(mag, std::numbers::pi * phase);
}

double lauricella_fd(const std::vector<double>& a, double b, double c, const std::vector<double>& x,
                     double* err) {
  if (a.size() != x.size()) throw Error(ErrorCode::ParamDomain, "a and x differ in length");
  if (!(b > 0 && c > b)) throw Error(ErrorCode::ParamDomain, "Euler integral needs 0 < b < c");
  double dl = std::numeric_limits<double>::infinity(), dr = dl;
  for (double xj : x) {
    if (!(xj < 1)) throw Error(ErrorCode::ParamDomain, "Euler integral needs x_j < 1");
    if (xj > 0) dr = std::min(dr, (1 - xj) / xj);
    if (xj < 0) dl = std::min(dl, -1 / xj);
  }
  auto f = [&](double t, double tc) {
    double s = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
      if (a[j] == 0.0 || x[j] == 0.0) continue;
      const double lg = x[j] > 0.5 ? std::log((1 - x[j]) + x[j] * tc) : std::log1p(-x[j] * t);
      s -= a[j] * lg;
    }
    return std::exp(s);
  };
  const double pre = std::exp(std::lgamma(c) - std::lgamma(b) - std::lgamma(c - b));
  double prev = pre * graded_jacobi_fixed(f, b - 1, c - b - 1, dl, dr, 20, 0.15);
  for (int n = 40; n <= 160; n *= 2) {
    const double cur = pre * graded_jacobi_fixed(f, b - 1, c - b - 1, dl, dr, n, 0.15);
    const double e = std::abs(cur - prev) / std::abs(cur);
    if (e <= 1e-13) {
      if (err) *err = e;
      return cur;
    }
    prev = cur;
  }
  throw Error(ErrorCode::QuadratureStall, "Euler integral refinement did not settle");
}

}  // namespace condcap
