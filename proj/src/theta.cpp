#include "condcap/theta.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>

#include <Eigen/Dense>

#include "condcap/error.hpp"
#include "condcap/specfun.hpp"

namespace condcap {

namespace {

using C = std::complex<double>;
using Vec4 = Eigen::Vector4d;

constexpr double kTol = 1e-12;

C prefactor(double l) { return -l / (C(0, 2) * std::numbers::pi); }

void check_pole(C u, const TorusParams& q) {
  for (C v : {u - q.p, u + q.p})
    if (near_lattice_point(v, q.tau, 1e-13)) throw Error(ErrorCode::PoleAtP, "w evaluated at a pole");
}

TorusParams unpack(const Vec4& x) {
  TorusParams q;
  q.tau = C(0, x(0));
  q.p = C(0, x(1));
  q.c1 = x(2);
  q.c2 = C(x(3), x(0) / 2);
  return q;
}

Vec4 pack(const TorusParams& q) { return {q.tau.imag(), q.p.imag(), q.c1, q.c2.real()}; }

bool inside_box(const Vec4& x) {
  return x(0) > 0 && x(1) > 0 && x(1) < x(0) / 2 && x(2) > 0 && x(2) < 0.5 && x(3) > 0 && x(3) < 0.5;
}

Vec4 residual(const Vec4& x, const SlotPairGeometry& g) {
  const auto r = residual_E(unpack(x), g);
  return {r[0], r[1], r[2], r[3]};
}

Eigen::Matrix4d jacobian(const Vec4& x, const SlotPairGeometry& g) {
  Eigen::Matrix4d J;
  for (int i = 0; i < 4; ++i) {
    const double h = 1e-7 * std::max(std::abs(x(i)), 1e-3);
    Vec4 xp = x, xm = x;
    xp(i) += h;
    xm(i) -= h;
    J.col(i) = (residual(xp, g) - residual(xm, g)) / (2 * h);
  }
  return J;
}

// Damped Newton inside the box.  Returns true on convergence.
bool newton(Vec4& x, const SlotPairGeometry& g, int& iterations, int max_iter = 60) {
  Vec4 r;
  try {
    r = residual(x, g);
  } catch (const Error&) {
    return false;
  }
  for (int it = 0; it < max_iter; ++it) {
    const double nr = r.lpNorm<Eigen::Infinity>();
    if (nr <= kTol) return true;
    ++iterations;
    const Vec4 step = -jacobian(x, g).fullPivLu().solve(r);
    if (!step.allFinite()) return false;
    double lambda = 1.0;
    bool accepted = false;
    for (int halving = 0; halving <= 40 && !accepted; ++halving, lambda /= 2) {
      const Vec4 xn = x + lambda * step;
      if (!inside_box(xn)) continue;
      try {
        const Vec4 rn = residual(xn, g);
        if (rn.lpNorm<Eigen::Infinity>() < nr) {
          x = xn;
          r = rn;
          accepted = true;
        }
      } catch (const Error&) {
      }
    }
    if (!accepted) return r.lpNorm<Eigen::Infinity>() <= kTol;
  }
  return r.lpNorm<Eigen::Infinity>() <= kTol;
}

}  // namespace

C sc_map_w(C u, const TorusParams& q, double l) {
  check_pole(u, q);
  return prefactor(l) * (theta1_logderiv(u - q.p, q.tau, 1) + theta1_logderiv(u + q.p, q.tau, 1));
}

C sc_map_dw(C u, const TorusParams& q, double l) {
  check_pole(u, q);
  return prefactor(l) * (theta1_logderiv(u - q.p, q.tau, 2) + theta1_logderiv(u + q.p, q.tau, 2));
}

std::array<double, 4> residual_E(const TorusParams& q, const SlotPairGeometry& g) {
  // Re dw vanishes identically on both zero segments; Im dw is the
  // equation that carries information.
  const C c1(q.c1, 0.0);
  return {sc_map_dw(c1, q, g.l).imag(), sc_map_dw(q.c2, q, g.l).imag(), sc_map_w(c1, q, g.l).imag() - g.h1,
          sc_map_w(q.c2, q, g.l).imag() - g.h2};
}

TorusParams solve_E(const SlotPairGeometry& geom, const std::optional<TorusParams>& init,
                    ThetaSolveInfo* info) {
  if (!(geom.l > 0 && geom.h1 > 0 && geom.h2 > 0))
    throw Error(ErrorCode::NonpositiveLength, "slot geometry must be positive");
  // Capacity is scale free; solve with unit distance.
  const SlotPairGeometry g{1.0, geom.h1 / geom.l, geom.h2 / geom.l};
  ThetaSolveInfo local;
  ThetaSolveInfo& st = info ? *info : local;
  st = {};

  const TorusParams start = init.value_or(TorusParams{});
  Vec4 x = pack(start);
  if (!inside_box(x)) throw Error(ErrorCode::LeftDomain, "initial guess outside the parameter box");
  if (!newton(x, g, st.iterations)) {
    // Continuation from the symmetric condenser with the mean half-height.
    const double hm = (g.h1 + g.h2) / 2;
    x = pack(start);
    if (!newton(x, {1.0, hm, hm}, st.iterations))
      throw Error(ErrorCode::NoConvergence, "no convergence for the symmetric starting problem");
    constexpr int steps = 32;
    for (int s = 1; s <= steps; ++s) {
      const double lam = static_cast<double>(s) / steps;
      const SlotPairGeometry gs{1.0, hm + lam * (g.h1 - hm), hm + lam * (g.h2 - hm)};
      ++st.continuation_steps;
      if (!newton(x, gs, st.iterations))
        throw Error(ErrorCode::NoConvergence, "continuation step failed");
    }
  }
  st.residual = residual(x, g).lpNorm<Eigen::Infinity>();
  if (!inside_box(x)) throw Error(ErrorCode::LeftDomain, "solution left the parameter box");
  return unpack(x);
}

CapacityResult capacity_E(const SlotPairGeometry& geom) {
  const auto t0 = std::chrono::steady_clock::now();
  ThetaSolveInfo info;
  const TorusParams q = solve_E(geom, std::nullopt, &info);
  const SlotPairGeometry g{1.0, geom.h1 / geom.l, geom.h2 / geom.l};
  // Backward bound: size of one more Newton correction to |tau|.
  const Vec4 x = pack(q);
  const Vec4 dx = jacobian(x, g).fullPivLu().solve(residual(x, g));
  CapacityResult res;
  res.method = Method::Theta;
  res.value = 2.0 / q.tau.imag();
  res.rel_err_estimate = std::abs(dx(0)) / x(0) + 4 * std::numeric_limits<double>::epsilon();
  res.note("iterations", static_cast<long long>(info.iterations));
  res.note("continuation_steps", static_cast<long long>(info.continuation_steps));
  res.note("residual", info.residual);
  res.note("tau_im", q.tau.imag());
  res.note("p_im", q.p.imag());
  res.note("c1", q.c1);
  res.note("c2_re", q.c2.real());
  res.note("seconds", std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  return res;
}

}  // namespace condcap
