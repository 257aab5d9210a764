#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <tuple>

#include "condcap/error.hpp"
#include "condcap/specfun.hpp"

using namespace condcap;
using C = std::complex<double>;
using std::numbers::pi;

namespace {

// Defining series of theta_1 summed in long double with a fixed number of terms.
std::complex<long double> theta1_direct(std::complex<long double> u, std::complex<long double> tau, int terms = 60) {
  const long double p = std::numbers::pi_v<long double>;
  std::complex<long double> s = 0;
  for (int k = 0; k < terms; ++k) {
    const long double kh = k + 0.5L;
    s += (k % 2 ? -2.0L : 2.0L) * std::exp(std::complex<long double>(0, 1) * p * tau * kh * kh) *
         std::sin(p * (2 * k + 1) * u);
  }
  return s;
}

double agm_loop(double a, double b) {
  for (int i = 0; i < 60; ++i) {
    const double an = 0.5 * (a + b);
    b = std::sqrt(a * b);
    a = an;
  }
  return a;
}

double K_of(double k) { return pi / (2 * agm_loop(1.0, std::sqrt(1 - k * k))); }

// Gauss hypergeometric series, direct summation.
double hyp2f1_series(double a, double b, double c, double x) {
  double term = 1.0, sum = 1.0;
  for (int n = 0; n < 20000; ++n) {
    term *= (a + n) * (b + n) / ((c + n) * (n + 1)) * x;
    sum += term;
    if (std::abs(term) < 1e-19 * std::abs(sum)) break;
  }
  return sum;
}

double rel(C a, C b) { return std::abs(a - b) / std::abs(b); }

}  // namespace

TEST_CASE("theta1 against the defining series") {
  CHECK(std::abs(theta1(C(0, 0), C(0, 1))) == 0.0);
  const C v = theta1(C(0.3, 0), C(0, 1));
  const auto ref = theta1_direct(0.3L, std::complex<long double>(0, 1));
  CHECK(std::abs(v.real() - static_cast<double>(ref.real())) < 1e-15);
  CHECK(std::abs(v.imag()) < 1e-16);
  CHECK(v.real() == doctest::Approx(0.73722).epsilon(1e-4));

  std::mt19937 gen(7);
  std::uniform_real_distribution<double> ur(-1, 1), ut(0.4, 2.5);
  for (int i = 0; i < 40; ++i) {
    const C u(ur(gen), 0.3 * ur(gen)), tau(0, ut(gen));
    const auto ref2 = theta1_direct({u.real(), u.imag()}, {0, tau.imag()});
    const C r2(static_cast<double>(ref2.real()), static_cast<double>(ref2.imag()));
    CHECK(rel(theta1(u, tau), r2) < 1e-13);
  }
}

TEST_CASE("theta1 quasi-periodicity") {
  for (double t : {0.5, 1.0, 1.3, 2.0})
    for (double x : {-0.37, 0.1, 0.3, 0.77})
      for (double y : {-0.2, 0.0, 0.15}) {
        const C tau(0, t), u(x, y * t);
        const C th = theta1(u, tau);
        CHECK(rel(theta1(u + 1.0, tau), -th) < 1e-12);
        const C factor = -std::exp(C(0, -1) * pi * tau - C(0, 2) * pi * u);
        CHECK(rel(theta1(u + tau, tau), factor * th) < 1e-12);
      }
}

TEST_CASE("logarithmic period of theta1 quotients") {
  const C tau(0, 1.2), p(0.2, 0.3), q(-0.1, 0.45);
  for (C u : {C(0.31, 0.05), C(-0.2, 0.7), C(0.6, -0.2)}) {
    const C lhs = std::log(theta1(u + tau - p, tau) / theta1(u + tau - q, tau)) -
                  std::log(theta1(u - p, tau) / theta1(u - q, tau));
    const C d = lhs - C(0, 2) * pi * (p - q);
    // Equal modulo 2 pi i Z.
    CHECK(std::abs(d.real()) < 1e-12);
    const double k = d.imag() / (2 * pi);
    CHECK(std::abs(k - std::round(k)) < 1e-12);
  }
}

TEST_CASE("log-derivatives of theta1") {
  CHECK(std::abs(theta1_logderiv(C(0.5, 0), C(0, 1), 1)) < 1e-15);
  const C tau(0, 1.3);
  CHECK(std::abs(theta1_logderiv(C(-0.2, 0), tau, 1) + theta1_logderiv(C(0.2, 0), tau, 1)) < 1e-14);
  const double h = 1e-4;
  const C u(0.3, 0);
  auto d1 = [&](double s) { return theta1_logderiv(u + s, C(0, 1), 1); };
  const C fd = (-d1(2 * h) + 8.0 * d1(h) - 8.0 * d1(-h) + d1(-2 * h)) / (12 * h);
  CHECK(std::abs(theta1_logderiv(u, C(0, 1), 2) - fd) < 1e-9);
  // 40-digit value of (log theta_1)'' at u = 0.3, tau = i from an
  // arbitrary-precision library.
  CHECK(theta1_logderiv(u, C(0, 1), 2).real() == doctest::Approx(-15.125506969435321261).epsilon(1e-14));
  CHECK_THROWS_AS(theta1_logderiv(C(1, 0), C(0, 1), 1), Error);
  CHECK_THROWS_AS(theta1(C(0.2, 0), C(0, -1)), Error);
}

TEST_CASE("AGM") {
  CHECK(agm(1.0, 1.0) == 1.0);
  CHECK(agm(1.0, 0.8660254038) == doctest::Approx(0.9318083917).epsilon(1e-10));
  CHECK(pi / (2 * agm(1.0, std::sqrt(0.75))) == doctest::Approx(1.6857503548125961).epsilon(1e-15));
  CHECK(agm(3.7, 3.7 * 0.2) == doctest::Approx(3.7 * agm(1.0, 0.2)).epsilon(1e-15));
  CHECK(ellipk(0.5) == doctest::Approx(K_of(0.5)).epsilon(1e-15));
}

TEST_CASE("hyp_half") {
  CHECK(hyp_half(0.0) == 1.0);
  const double K = std::pow(std::tgamma(0.25), 2) / (4 * std::sqrt(pi));
  CHECK(hyp_half(0.5) == doctest::Approx(2 * K / pi).epsilon(1e-15));
  CHECK(hyp_half(0.5) / hyp_half(0.5) == 1.0);
  double prev = 0.0;
  for (int i = 1; i < 100; ++i) {
    const double m = i / 100.0;
    const double r = hyp_half(m) / hyp_half(1 - m);
    CHECK(r > prev);
    prev = r;
    CHECK(hyp_half(m) == doctest::Approx(2 * K_of(std::sqrt(m)) / pi).epsilon(1e-14));
  }
  // Small-k expansion K'(k) = L + k^2 (L - 1) / 4 + O(k^4 L), L = log(4/k).
  for (double k : {1e-3, 1e-8, 1e-15}) {
    const double L = std::log(4 / k);
    CHECK(hyp_half_complement(k) == doctest::Approx(2 * (L + k * k * (L - 1) / 4) / pi).epsilon(1e-11));
  }
  CHECK(hyp_half_complement(0.6) == doctest::Approx(hyp_half(0.64)).epsilon(1e-14));
}

TEST_CASE("Lauricella F_D") {
  CHECK(lauricella_fd({0.3, -0.7, 1.2}, 0.4, 1.9, {0, 0, 0}) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(lauricella_fd({0.5}, 0.5, 1.0, {0.5}) == doctest::Approx(hyp_half(0.5)).epsilon(1e-12));
  CHECK(lauricella_fd({0, 0}, 0.6, 1.5, {0.9, -3.0}) == doctest::Approx(1.0).epsilon(1e-14));
  for (double x : {-0.5, 0.0, 0.3, 0.7})
    for (auto [a, b, c] : {std::tuple{0.3, 0.6, 1.7}, std::tuple{-0.5, 0.5, 2.0}, std::tuple{0.5, 0.25, 1.5}}) {
      CAPTURE(x);
      CHECK(lauricella_fd({a}, b, c, {x}) == doctest::Approx(hyp2f1_series(a, b, c, x)).epsilon(1e-12));
    }
  CHECK_THROWS_AS(lauricella_fd({0.5}, 1.0, 0.5, {0.2}), Error);
  CHECK_THROWS_AS(lauricella_fd({0.5}, 0.5, 1.0, {1.5}), Error);
}

TEST_CASE("Gauss-Jacobi rules") {
  for (auto [a, b] : {std::pair{0.0, 0.0}, std::pair{-0.5, -0.5}, std::pair{0.5, -0.3}, std::pair{2.0, 1.0}}) {
    const QuadRule& r = gauss_jacobi(12, a, b);
    double s = 0.0, m3 = 0.0;
    for (std::size_t i = 0; i < r.x.size(); ++i) {
      s += r.w[i];
      m3 += r.w[i] * std::pow(1 + r.x[i], 3);
    }
    const double beta = std::tgamma(a + 1) * std::tgamma(b + 1) / std::tgamma(a + b + 2);
    CHECK(s == doctest::Approx(std::pow(2.0, a + b + 1) * beta).epsilon(1e-13));
    // int (1-x)^a (1+x)^(b+3) = 2^(a+b+4) B(a+1, b+4)
    const double beta3 = std::tgamma(a + 1) * std::tgamma(b + 4) / std::tgamma(a + b + 5);
    CHECK(m3 == doctest::Approx(std::pow(2.0, a + b + 4) * beta3).epsilon(1e-13));
  }
}

TEST_CASE("SC side integrals") {
  const C i1 = sc_side_integral({{0.0, 1.0}, {-0.5, -0.5}}, 0.0, 1.0, 1.0);
  CHECK(std::abs(i1) == doctest::Approx(pi).epsilon(1e-13));
  CHECK(std::abs(i1 - C(0, -pi)) < 1e-12);
  CHECK(std::abs(sc_side_integral({{-1.0, 1.0}, {-0.5, -0.5}}, -1.0, 1.0, 1.0)) == doctest::Approx(pi).epsilon(1e-13));

  const double k = 0.5;
  const JacobiExponents four{{-1 / k, -1.0, 1.0, 1 / k}, {-0.5, -0.5, -0.5, -0.5}};
  const C i4 = sc_side_integral(four, -1.0, 1.0, 1.0);
  CHECK(std::abs(i4) == doctest::Approx(2 * k * K_of(k)).epsilon(1e-12));

  const JacobiExponents e{{0.0, 1.0, 2.5, -3.0}, {-0.5, 0.5, -0.25, -0.5}};
  const C s(0.3, -1.7);
  CHECK(rel(sc_side_integral(e, 0.0, 1.0, s), s * sc_side_integral(e, 0.0, 1.0, 1.0)) < 1e-14);
  const C whole = sc_side_integral(e, 0.0, 1.0, 1.0);
  const C split = sc_side_integral(e, 0.0, 0.37, 1.0) + sc_side_integral(e, 0.37, 1.0, 1.0);
  CHECK(rel(split, whole) < 1e-13);
}

TEST_CASE("side integrals agree with the Lauricella representation") {
  // int over [t_k, t_k + g] of |t - t_k|^bk |t - t_k1|^bk1 prod |t - t_j|^bj
  //  = g^(1 + bk + bk1) prod |d_j|^bj B(bk + 1, bk1 + 1) F_D(-b; bk + 1; bk + bk1 + 2; -g / d)
  std::mt19937 gen(2024);
  std::uniform_real_distribution<double> ub(-0.9, 0.8), ug(0.05, 3.0);
  for (int trial = 0; trial < 12; ++trial) {
    std::vector<double> nodes{0.0};
    for (int j = 0; j < 5; ++j) nodes.push_back(nodes.back() + ug(gen));
    std::vector<double> beta;
    for (std::size_t j = 0; j < nodes.size(); ++j) beta.push_back(ub(gen));
    const int k = trial % 5;
    const double g = nodes[k + 1] - nodes[k];
    const C side = sc_side_integral({nodes, beta}, nodes[k], nodes[k + 1], 1.0);

    std::vector<double> a, x;
    double pref = std::pow(g, 1 + beta[k] + beta[k + 1]);
    for (std::size_t j = 0; j < nodes.size(); ++j) {
      if (static_cast<int>(j) == k || static_cast<int>(j) == k + 1) continue;
      const double d = nodes[k] - nodes[j];
      pref *= std::pow(std::abs(d), beta[j]);
      a.push_back(-beta[j]);
      x.push_back(-g / d);
    }
    const double bk = beta[k] + 1, bk1 = beta[k + 1] + 1;
    const double B = std::exp(std::lgamma(bk) + std::lgamma(bk1) - std::lgamma(bk + bk1));
    const double fd = pref * B * lauricella_fd(a, bk, bk + bk1, x);
    CAPTURE(trial);
    CHECK(std::abs(std::abs(side) - fd) / fd < 1e-10);
  }
}
