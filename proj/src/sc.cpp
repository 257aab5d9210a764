#include "condcap/sc.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>

#include <Eigen/Dense>

#include "condcap/error.hpp"
#include "condcap/fd.hpp"
#include "condcap/specfun.hpp"

namespace condcap {

namespace {

using Vec = Eigen::VectorXd;

constexpr double kTol = 1e-12;
const double kLogCrowd = std::log(1e-290);

// Side-length equations of the parameter problem.  Unknowns are the log
// gaps after the fixed unit gap, then log C0.
struct ParameterProblem {
  int K = 0;
  std::vector<double> beta;   // alpha - 1, vertices 0..K-1
  std::vector<double> log_len;  // log |z_{i+1} - z_i|, i = 0..K-1

  explicit ParameterProblem(const HalfDomainPolygon& poly) : K(static_cast<int>(poly.z.size())) {
    for (int i = 0; i < K; ++i) {
      beta.push_back(poly.alpha[i] - 1);
      log_len.push_back(std::log(std::abs(poly.z[(i + 1) % K] - poly.z[i])));
    }
  }

  int unknowns() const { return K - 2; }

  // gaps[i] = prevertex(i+1) - prevertex(i) for vertices 1..K-2.
  std::vector<double> gaps(const Vec& x) const {
    std::vector<double> g(K - 1, 0.0);
    g[1] = 1.0;
    for (int i = 2; i <= K - 2; ++i) {
      if (x(i - 2) < kLogCrowd) throw Error(ErrorCode::Crowding, "prevertex gap below 1e-290");
      g[i] = std::exp(x(i - 2));
    }
    return g;
  }

  double log_side(const std::vector<double>& g, int i, double* err = nullptr) const {
    std::vector<NodeDistance> left, right;
    double d = 0.0;
    for (int j = i - 1; j >= 1; --j) {
      d += g[j];
      left.push_back({d, beta[j]});
    }
    d = 0.0;
    for (int j = i + 2; j <= K - 1; ++j) {
      d += g[j - 1];
      right.push_back({d, beta[j]});
    }
    return sc_log_side_integral(g[i], beta[i], beta[i + 1], left, right, err);
  }

  Vec residual(const Vec& x) const {
    const auto g = gaps(x);
    const double logc = x(K - 3);
    Vec r(K - 2);
    for (int i = 1; i <= K - 2; ++i) r(i - 1) = log_side(g, i) + logc - log_len[i];
    return r;
  }

  Eigen::MatrixXd jacobian(const Vec& x) const {
    const int n = unknowns();
    Eigen::MatrixXd J(n, n);
    for (int c = 0; c < n; ++c) {
      const double h = 1e-6;
      Vec xp = x, xm = x;
      xp(c) += h;
      xm(c) -= h;
      J.col(c) = (residual(xp) - residual(xm)) / (2 * h);
    }
    return J;
  }
};

// Damped Newton on F(x) - shift = 0.
bool newton(const ParameterProblem& P, Vec& x, const Vec& shift, int& iterations, int max_iter = 80) {
  Vec r;
  try {
    r = P.residual(x) - shift;
  } catch (const Error& e) {
    if (e.code() == ErrorCode::Crowding) throw;
    return false;
  }
  for (int it = 0; it < max_iter; ++it) {
    const double nr = r.norm();
    if (r.lpNorm<Eigen::Infinity>() <= kTol) return true;
    ++iterations;
    const Vec step = -P.jacobian(x).colPivHouseholderQr().solve(r);
    if (!step.allFinite()) return false;
    double lambda = 1.0;
    bool accepted = false;
    for (int halving = 0; halving <= 30 && !accepted; ++halving, lambda /= 2) {
      const Vec xn = x + lambda * step;
      try {
        const Vec rn = P.residual(xn) - shift;
        if (rn.norm() < nr) {
          x = xn;
          r = rn;
          accepted = true;
        }
      } catch (const Error& e) {
        if (e.code() == ErrorCode::Crowding && halving == 30) throw;
      }
    }
    if (!accepted) return r.lpNorm<Eigen::Infinity>() <= 10 * kTol;
  }
  return r.lpNorm<Eigen::Infinity>() <= kTol;
}

// Prevertex guess: boundary arclength spread over (0, pi), pushed to the
// line by -cot, then normalized so the first two prevertices are 0 and 1.
Vec initial_guess(const ParameterProblem& P) {
  const int K = P.K;
  std::vector<double> s(K, 0.0);
  for (int i = 1; i < K; ++i) s[i] = s[i - 1] + std::exp(P.log_len[i - 1]);
  const double perim = s[K - 1] + std::exp(P.log_len[K - 1]);
  std::vector<double> zeta(K);
  for (int i = 1; i < K; ++i) zeta[i] = -1.0 / std::tan(std::numbers::pi * s[i] / perim);
  const double scale = zeta[2] - zeta[1];
  Vec x(K - 2);
  for (int i = 2; i <= K - 2; ++i) x(i - 2) = std::log((zeta[i + 1] - zeta[i]) / scale);
  x(K - 3) = 0.0;
  // Pick log C0 to balance the side equations.
  const Vec r = P.residual(x);
  x(K - 3) = -r.mean();
  return x;
}

}  // namespace

SCParams solve_parameter_problem(const HalfDomainPolygon& poly, const std::optional<std::vector<double>>& init) {
  if (!poly.bounded) throw Error(ErrorCode::WrongArcCount, "SC parameter problem needs a bounded polygon");
  const int K = static_cast<int>(poly.z.size());
  if (K < 4) throw Error(ErrorCode::Degenerate, "polygon needs at least four vertices");
  double asum = 0.0;
  for (double a : poly.alpha) asum += a;
  if (std::abs(asum - (K - 2)) > 1e-9) throw Error(ErrorCode::NotSimplyConnected, "angle sum is not K - 2");

  const ParameterProblem P(poly);
  Vec x0;
  if (init) {
    // Given prevertices of vertices 1..K-1, normalized here.
    const auto& z = *init;
    if (static_cast<int>(z.size()) != K - 1) throw Error(ErrorCode::BadArity, "need K - 1 prevertices");
    x0.resize(K - 2);
    const double scale = z[1] - z[0];
    for (int i = 2; i <= K - 2; ++i) {
      const double gap = (z[i] - z[i - 1]) / scale;
      if (!(gap > 0)) throw Error(ErrorCode::Degenerate, "prevertices must increase");
      x0(i - 2) = std::log(gap);
    }
    x0(K - 3) = 0.0;
    x0(K - 3) = -P.residual(x0).mean();
  } else {
    x0 = initial_guess(P);
  }

  SCParams out;
  Vec x = x0;
  if (!newton(P, x, Vec::Zero(K - 2), out.iterations)) {
    // Newton homotopy: F(x) - (1 - s) F(x0) = 0 for s from 0 to 1.
    x = x0;
    const Vec F0 = P.residual(x0);
    constexpr int steps = 32;
    for (int s = 1; s <= steps; ++s) {
      ++out.homotopy_steps;
      const double lam = static_cast<double>(s) / steps;
      if (!newton(P, x, (1 - lam) * F0, out.iterations))
        throw Error(ErrorCode::NoConvergence, "SC parameter homotopy failed");
    }
  }
  const Vec r = P.residual(x);
  out.residual = r.lpNorm<Eigen::Infinity>();
  if (out.residual > 1e-10) throw Error(ErrorCode::NoConvergence, "SC parameter problem residual too large");

  out.log_gaps.push_back(0.0);
  for (int i = 0; i < K - 3; ++i) out.log_gaps.push_back(x(i));
  out.zeta.push_back(0.0);
  for (double lg : out.log_gaps) out.zeta.push_back(out.zeta.back() + std::exp(lg));
  out.exponents = P.beta;
  // Direction of the first finite side fixes arg C0: on (0, 1) every
  // factor (t - zeta_j) with zeta_j > t contributes exp(i pi beta_j).
  double phase = 0.0;
  for (int j = 2; j < K; ++j) phase += P.beta[j];
  const std::complex<double> dir = (poly.z[2] - poly.z[1]) / std::abs(poly.z[2] - poly.z[1]);
  out.C0 = std::exp(x(K - 3)) * dir * std::polar(1.0, -std::numbers::pi * phase);
  return out;
}

namespace {

std::array<int, 4> transition_vertices(const HalfDomainPolygon& poly) {
  const int K = static_cast<int>(poly.z.size());
  int n_arcs = 0;
  for (const Arc& a : poly.arcs) n_arcs += a.label == ArcLabel::N;
  if (n_arcs != 2 || poly.arcs.size() != 4)
    throw Error(ErrorCode::WrongArcCount, "doubly connected scope needs exactly two N arcs");
  std::vector<int> idx;
  for (int k = 1; k <= K; ++k) {
    const int v = k % K;
    if (poly.edge_label[v] != poly.edge_label[(v + K - 1) % K]) idx.push_back(v);
  }
  // Vertex 1 is F0 | N0 by construction of the half-domain.
  if (idx.size() != 4 || idx[0] != 1 || poly.edge_label[0] != ArcLabel::F0 || poly.edge_label[1] != ArcLabel::N)
    throw Error(ErrorCode::WrongArcCount, "unexpected label sequence");
  return {idx[0], idx[1], idx[2], idx[3]};
}

}  // namespace

std::array<double, 4> n_endpoint_preimages(const SCParams& params, const HalfDomainPolygon& poly) {
  const auto v = transition_vertices(poly);
  // zeta[i] is the prevertex of vertex i + 1.
  return {params.zeta[v[0] - 1], params.zeta[v[1] - 1], params.zeta[v[2] - 1], params.zeta[v[3] - 1]};
}

EllipticModulus moebius_modulus_from_gaps(double a, double b, double c) {
  if (!(a > 0 && b > 0 && c > 0)) throw Error(ErrorCode::Degenerate, "coincident endpoints");
  EllipticModulus m;
  const double km1 = a * c / (b * (a + b + c));
  m.kappa = 1 + km1;
  const double sk = std::sqrt(m.kappa);
  m.k = km1 / ((sk + 1) * (sk + 1));
  m.kprime = 2 * std::sqrt(sk) / (sk + 1);
  return m;
}

EllipticModulus moebius_modulus(const std::array<double, 4>& z) {
  for (int i = 0; i < 4; ++i)
    for (int j = i + 1; j < 4; ++j)
      if (z[i] == z[j]) throw Error(ErrorCode::Degenerate, "coincident endpoints");
  EllipticModulus m;
  bool increasing = z[0] < z[1] && z[1] < z[2] && z[2] < z[3];
  if (increasing) {
    m = moebius_modulus_from_gaps(z[1] - z[0], z[2] - z[1], z[3] - z[2]);
  } else {
    m.kappa = (z[3] - z[1]) * (z[2] - z[0]) / ((z[3] - z[0]) * (z[2] - z[1]));
    if (!(m.kappa > 1)) throw Error(ErrorCode::Degenerate, "endpoints are not in cyclic order");
    const double sk = std::sqrt(m.kappa);
    m.k = (sk - 1) / (sk + 1);
    m.kprime = 2 * std::sqrt(sk) / (sk + 1);
  }
  m.endpoints = z;
  return m;
}

CapacityResult capacity_sc(const CondenserSpec& spec) {
  const auto t0 = std::chrono::steady_clock::now();
  const ContourSet set = build_contours(spec);
  int n_inner = 0;
  for (const Contour& c : set.contours) n_inner += c.terminal == Terminal::Inner;
  if (!set.bounded || n_inner != 1 || set.contours.size() != 2)
    throw Error(ErrorCode::WrongArcCount, "SC method covers doubly connected bounded condensers");
  const HalfDomainPolygon poly = half_domain(set);
  const auto v = transition_vertices(poly);
  const SCParams par = solve_parameter_problem(poly);

  // Endpoint gaps straight from the log gaps.  Gap i of the solver joins
  // vertices i + 1 and i + 2.
  auto span = [&](int from_vertex, int to_vertex) {
    double s = 0.0;
    for (int i = from_vertex; i < to_vertex; ++i) s += std::exp(par.log_gaps[i - 1]);
    return s;
  };
  EllipticModulus m = moebius_modulus_from_gaps(span(v[0], v[1]), span(v[1], v[2]), span(v[2], v[3]));
  m.endpoints = n_endpoint_preimages(par, poly);
  const double cap = agm(1.0, m.kprime) / agm(1.0, m.k);

  // Orientation guard against a coarse grid estimate.
  FdOptions fo;
  fo.richardson = false;
  fo.max_nodes = 400000;
  const double h = fd_auto_step(set, 48);
  const double fd = fd_energy_capacity(set, h, fo);
  const double flipped = 1.0 / cap;
  if (std::abs(std::log(flipped / fd)) < std::abs(std::log(cap / fd)))
    throw Error(ErrorCode::OrientationFlip, "reciprocal modulus matches the grid estimate better");

  CapacityResult res;
  res.method = Method::SC;
  res.value = cap;
  // Residuals are relative side errors; k responds linearly to them.
  res.rel_err_estimate = std::max(par.residual, 1e-15) * static_cast<double>(poly.z.size());
  res.note("K", static_cast<long long>(poly.z.size()));
  res.note("iterations", static_cast<long long>(par.iterations));
  res.note("homotopy_steps", static_cast<long long>(par.homotopy_steps));
  res.note("residual", par.residual);
  res.note("k", m.k);
  res.note("kprime", m.kprime);
  res.note("kappa_minus_1", m.kappa - 1);
  res.note("fd_guard", fd);
  res.note("seconds", std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  return res;
}

}  // namespace condcap
