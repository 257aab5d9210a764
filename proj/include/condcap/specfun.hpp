#pragma once

#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <vector>

#include "condcap/error.hpp"

namespace condcap {

// Series for theta_1(u|tau) and its first three u-derivatives.
template <class T>
struct ThetaSeries {
  std::complex<T> th, d1, d2, d3;
  int terms = 0;
};

template <class T>
ThetaSeries<T> theta1_series(std::complex<T> u, std::complex<T> tau, int nderiv = 0) {
  using C = std::complex<T>;
  const T pi = std::numbers::pi_v<T>;
  const T t = tau.imag();
  if (!(t > 0)) throw Error(ErrorCode::Nonconvergent, "theta series needs Im tau > 0");
  const T yu = std::abs(u.imag());
  const C ipt = C(0, 1) * pi * tau;
  ThetaSeries<T> s;
  T scale = 0;
  for (int k = 0;; ++k) {
    const T kh = k + T(0.5);
    const C c = T(2) * std::exp(ipt * kh * kh) * T(k % 2 == 0 ? 1 : -1);
    const T a = pi * (2 * k + 1);
    const C sn = std::sin(a * u), cs = std::cos(a * u);
    s.th += c * sn;
    if (nderiv >= 1) s.d1 += c * a * cs;
    if (nderiv >= 2) s.d2 -= c * a * a * sn;
    if (nderiv >= 3) s.d3 -= c * a * a * a * cs;
    s.terms = k + 1;
    scale = std::max({scale, std::abs(s.th), std::abs(s.d1), std::abs(s.d2), std::abs(s.d3)});
    // Bound on the next term of the highest derivative in use.
    const T kn = kh + 1;
    const T bound =
        2 * std::exp(-pi * t * kn * kn + 2 * pi * kn * yu) * std::pow(pi * 2 * kn, T(nderiv));
    if (kn > yu / t && bound < T(1e-18) * (scale > 0 ? scale : T(1))) break;
    if (k > 4000) throw Error(ErrorCode::Nonconvergent, "theta series did not terminate");
  }
  return s;
}

template <class T>
std::complex<T> theta1(std::complex<T> u, std::complex<T> tau) {
  return theta1_series(u, tau, 0).th;
}

// True when u lies within tol of a point of the lattice Z + tau Z.
template <class T>
bool near_lattice_point(std::complex<T> u, std::complex<T> tau, T tol) {
  const T n = std::round(u.imag() / tau.imag());
  const std::complex<T> v = u - n * tau;
  const T m = std::round(v.real());
  return std::abs(v - m) <= tol * (1 + std::abs(u));
}

// order 1: theta_1'/theta_1; order 2: its u-derivative.
template <class T>
std::complex<T> theta1_logderiv(std::complex<T> u, std::complex<T> tau, int order = 1) {
  if (near_lattice_point(u, tau, T(64) * std::numeric_limits<T>::epsilon()))
    throw Error(ErrorCode::PoleAtLatticePoint, "log-derivative of theta_1 at a zero");
  const ThetaSeries<T> s = theta1_series(u, tau, order);
  const std::complex<T> f = s.d1 / s.th;
  if (order == 1) return f;
  return s.d2 / s.th - f * f;
}

template <class T>
T agm(T a, T b) {
  const T tol = std::max(T(1e-16), 4 * std::numeric_limits<T>::epsilon());
  for (int it = 0; it < 80 && std::abs(a - b) > tol * a; ++it) {
    const T an = (a + b) / 2;
    b = std::sqrt(a * b);
    a = an;
  }
  return (a + b) / 2;
}

// Complete elliptic integral of the first kind, modulus k.
template <class T>
T ellipk(T k) {
  if (!(std::abs(k) < 1)) throw Error(ErrorCode::Domain, "ellipk needs |k| < 1");
  return std::numbers::pi_v<T> / (2 * agm(T(1), std::sqrt((1 - k) * (1 + k))));
}

// 2F1(1/2, 1/2; 1; m) = 2 K(sqrt m) / pi.
double hyp_half(double m);
// 2F1(1/2, 1/2; 1; 1 - k^2) from k itself, accurate when k is tiny.
double hyp_half_complement(double k);

// Gauss-Jacobi rule for the weight (1-x)^a (1+x)^b on [-1, 1].
struct QuadRule {
  std::vector<double> x, w;
};
const QuadRule& gauss_jacobi(int n, double a, double b);
const QuadRule& gauss_legendre(int n);

// Integral over [0,1] of x^a (1-x)^b f(x, 1-x).  f is smooth on [0,1] but
// may have singularities at distance dl to the left of 0 and dr to the
// right of 1 (relative to the unit interval).  Pieces are graded
// geometrically towards each end so that every piece sits at least a fixed
// fraction of its length away from the nearby singularity.
struct GradedOptions {
  int n = 20;
  double ratio = 0.15;
};

template <class F>
double graded_jacobi_fixed(F&& f, double a, double b, double dl, double dr, int n, double ratio) {
  double total = 0.0;
  // Left half in the variable x, right half in y = 1 - x.
  for (int side = 0; side < 2; ++side) {
    const double e_near = side == 0 ? a : b;  // exponent at the graded end
    const double e_far = side == 0 ? b : a;
    const double dist = side == 0 ? dl : dr;
    std::vector<double> cuts{0.5};
    while (cuts.back() > dist && cuts.size() < 200) cuts.push_back(cuts.back() * ratio);
    // Innermost piece [0, cuts.back()] carries the Jacobi weight.
    const double s0 = cuts.back();
    {
      // Map s = s0 (1+xi)/2; weight s^e = (s0/2)^e (1+xi)^e.
      const QuadRule& r = gauss_jacobi(n, 0.0, e_near);
      const double fac = std::pow(s0 / 2, e_near) * (s0 / 2);
      double acc = 0.0;
      for (std::size_t i = 0; i < r.x.size(); ++i) {
        const double s = s0 * (1 + r.x[i]) / 2;
        const double other = std::pow(1 - s, e_far);
        acc += r.w[i] * other * (side == 0 ? f(s, 1 - s) : f(1 - s, s));
      }
      total += fac * acc;
    }
    const QuadRule& g = gauss_legendre(n);
    for (std::size_t p = cuts.size() - 1; p >= 1; --p) {
      const double lo = cuts[p], hi = cuts[p - 1];
      const double h = (hi - lo) / 2, mid = (hi + lo) / 2;
      double acc = 0.0;
      for (std::size_t i = 0; i < g.x.size(); ++i) {
        const double s = mid + h * g.x[i];
        const double wgt = std::pow(s, e_near) * std::pow(1 - s, e_far);
        acc += g.w[i] * wgt * (side == 0 ? f(s, 1 - s) : f(1 - s, s));
      }
      total += h * acc;
    }
  }
  return total;
}

// Same integral with an order-doubling error estimate; returns the higher
// order value.
template <class F>
double graded_jacobi(F&& f, double a, double b, double dl, double dr, double* err = nullptr,
                     GradedOptions opt = {}) {
  if (!(a > -1) || !(b > -1))
    throw Error(ErrorCode::NonintegrableEndpoint, "endpoint exponent must exceed -1");
  const double i1 = graded_jacobi_fixed(f, a, b, dl, dr, opt.n, opt.ratio);
  const double i2 = graded_jacobi_fixed(f, a, b, dl, dr, 2 * opt.n, opt.ratio);
  if (err) *err = std::abs(i2 - i1) / std::max(std::abs(i2), std::numeric_limits<double>::min());
  return i2;
}

// Nodes t_j with exponents beta_j for the integrand prod_j (t - t_j)^beta_j.
struct JacobiExponents {
  std::vector<double> nodes;
  std::vector<double> exponents;
};

// scale * integral from `from` to `to` of prod_j (t - t_j)^beta_j dt, with
// principal branches (nodes to the right of t contribute exp(i pi beta_j)).
std::complex<double> sc_side_integral(const JacobiExponents& exps, double from, double to,
                                      std::complex<double> scale, double* err = nullptr);

// Logarithm of the modulus of a side integral between adjacent prevertices
// separated by gap g.  `left` holds (distance to the left end, exponent) for
// nodes before the interval, `right` holds (distance to the right end,
// exponent) for nodes after it.  Works entirely with gaps so that crowded
// prevertices keep their relative precision.
struct NodeDistance {
  double dist;
  double beta;
};
double sc_log_side_integral(double g, double beta_left, double beta_right,
                            const std::vector<NodeDistance>& left,
                            const std::vector<NodeDistance>& right, double* err = nullptr);

// Lauricella F_D^(N)(a; b, c; x) from its Euler integral.
double lauricella_fd(const std::vector<double>& a, double b, double c, const std::vector<double>& x,
                     double* err = nullptr);

}  // namespace condcap
