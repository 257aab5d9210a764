// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <numbers>
#include <string>

#include "condcap/bie.hpp"
#include "condcap/error.hpp"
#include "condcap/fd.hpp"
#include "condcap/harness.hpp"
#include "condcap/registry.hpp"
#include "condcap/sc.hpp"
#include "condcap/specfun.hpp"
#include "condcap/theta.hpp"

using namespace condcap;
using C = std::complex<double>;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

struct Timed {
  CapacityResult r;
  double seconds = 0.0;
  std::string error;
};

Timed timed(const std::function<CapacityResult()>& f) {
  Timed t;
  const auto t0 = Clock::now();
  try {
    t.r = f();
  } catch (const std::exception& e) {
    t.error = e.what();
  }
  t.seconds = seconds_since(t0);
  return t;
}

int failures = 0;

void report(int n, bool ok, const std::string& what) {
  std::printf("criterion %d: %s  %s\n", n, ok ? "PASS" : "FAIL", what.c_str());
  std::fflush(stdout);
  failures += !ok;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

ContourSet annulus() {
  CondenserSpec s;
  ContourSet set;
  // Radii 1 and e, so the capacity is exactly 2 pi.
  Contour outer, inner;
  outer.kind = inner.kind = ContourKind::Circle;
  outer.radius = std::exp(1.0);
  inner.radius = 1.0;
  outer.terminal = Terminal::Outer;
  inner.terminal = Terminal::Inner;
  set.contours = {outer, inner};
  s.contours = set;
  return build_contours(s);
}

}  // namespace

int main() {
  std::map<std::string, Timed> theta, sc, bie;

  {
    double worst = 0.0, slowest = 0.0;
    bool ok = true;
    for (const auto& row : family_rows("E")) {
      const Timed t = timed([&] { return compute(row.spec, Method::Theta); });
      theta[row.id] = t;
      if (!t.error.empty()) {
        ok = false;
        std::printf("  %s theta: %s\n", row.id.c_str(), t.error.c_str());
        continue;
      }
      worst = std::max(worst, rel(t.r.value, row.expected));
      slowest = std::max(slowest, t.seconds);
    }
    ok = ok && worst <= 1e-10 && slowest <= 1.0;
    report(1, ok, fmt("theta on E1-E6: max rel err %.2e (limit 1e-10), slowest row %.3f s (limit 1 s)", worst, slowest));
  }

  {
    double worst = 0.0, slowest = 0.0;
    bool ok = true;
    for (const auto& row : family_rows("FG")) {
      const Timed t = timed([&] { return compute(row.spec, Method::SC); });
      sc[row.id] = t;
      if (!t.error.empty()) {
        ok = false;
        std::printf("  %s sc: %s\n", row.id.c_str(), t.error.c_str());
        continue;
      }
      worst = std::max(worst, rel(t.r.value, row.expected));
      slowest = std::max(slowest, t.seconds);
    }
    ok = ok && worst <= 1e-6 && slowest <= 10.0;
    report(2, ok,
           fmt("SC on F1-F6, G1-G6: max rel err %.2e (limit 1e-6, target 1e-8), slowest row %.2f s (limit 10 s)", worst,
               slowest));
  }

  {
    double worst = 0.0, slowest = 0.0;
    std::string worst_id;
    int passed = 0;
    for (const auto& row : reference_rows()) {
      const Timed t = timed([&] { return compute(row.spec, Method::BIE); });
      bie[row.id] = t;
      if (!t.error.empty()) {
        std::printf("  %s bie: %s\n", row.id.c_str(), t.error.c_str());
        continue;
      }
      const double e = rel(t.r.value, row.expected);
      if (e > worst) {
        worst = e;
        worst_id = row.id;
      }
      slowest = std::max(slowest, t.seconds);
      passed += e <= 5e-4 && t.seconds <= 60.0;
    }
    report(3, passed == 42,
           fmt("BIE on all rows: %d/42 pass, max rel err %.2e at %s (limit 5e-4), slowest row %.1f s (limit 60 s)",
               passed, worst, worst_id.c_str(), slowest));
  }

  {
    double worst = 0.0;
    bool ok = true;
    auto pair_check = [&](const std::string& id, const Timed& a, const Timed& b, double tol_a) {
      if (!a.error.empty() || !b.error.empty()) {
        ok = false;
        return;
      }
      const double expected = reference_row(id).expected;
      worst = std::max(worst, rel(a.r.value, b.r.value));
      const double ea = (a.r.value - expected) / expected, eb = (b.r.value - expected) / expected;
      if (std::abs(ea) > tol_a && std::abs(eb) > 5e-4 && (ea > 0) == (eb > 0)) {
        std::printf("  %s: both methods miss the table on the same side\n", id.c_str());
        ok = false;
      }
    };
    for (const auto& [id, t] : theta) pair_check(id, t, bie[id], 1e-10);
    for (const auto& [id, t] : sc) pair_check(id, t, bie[id], 1e-6);
    ok = ok && worst <= 5e-4;
    report(4, ok, fmt("theta vs BIE on E, SC vs BIE on F/G: max rel diff %.2e (limit 5e-4), no same-side table misses",
                      worst));
  }

  {
    const ContourSet set = annulus();
    const double exact = 2 * std::numbers::pi;
    double worst_bie = 0.0;
    bool ok = true;
    for (int L = 3; L <= 4; ++L) {
      try {
        worst_bie = std::max(worst_bie, rel(capacity_bie_at_level(set, L).value, exact));
      } catch (const std::exception& e) {
        ok = false;
        std::printf("  annulus bie level %d: %s\n", L, e.what());
      }
    }
    double fd_err = 1.0;
    try {
      fd_err = rel(capacity_fd(set).value, exact);
    } catch (const std::exception& e) {
      std::printf("  annulus fd: %s\n", e.what());
    }
    ok = ok && worst_bie <= 1e-4 && fd_err <= 0.02;
    report(5, ok, fmt("annulus r=1, R=e: BIE levels 3-4 rel err %.2e (limit 1e-4), FD rel err %.2e (limit 2e-2)",
                      worst_bie, fd_err));
  }

  {
    std::vector<std::string> bad;
    // Quasi-periodicity of theta_1.
    double qp = 0.0;
    for (double t : {0.5, 1.0, 1.7})
      for (double x : {-0.3, 0.15, 0.45})
        for (double y : {-0.2, 0.0, 0.3}) {
          const C tau(0, t), u(x, y * t);
          const C th = theta1(u, tau);
          qp = std::max(qp, std::abs(theta1(u + 1.0, tau) + th) / std::abs(th));
          const C f = -std::exp(C(0, -1) * std::numbers::pi * tau - C(0, 2) * std::numbers::pi * u);
          qp = std::max(qp, std::abs(theta1(u + tau, tau) - f * th) / std::abs(f * th));
        }
    if (qp > 1e-12) bad.push_back(fmt("quasi-periodicity %.1e", qp));

    // Symm eigenrelations.
    ContourSet circ;
    Contour c;
    c.kind = ContourKind::Circle;
    c.radius = 1.0;
    c.terminal = Terminal::Inner;
    circ.contours = {c};
    const BoundaryDiscretization d = discretize(circ, 0);
    const LinearSystem sys = assemble(d);
    const NodeSet X = collocation_nodes(d.contours[0]);
    const int N = d.contours[0].N, c0 = sys.col_offset[0];
    double symm = 0.0;
    for (std::size_t i = 0; i < X.size(); ++i) {
      symm = std::max(symm, std::abs(sys.A(i, c0)));
      for (int m = 1; m < N; ++m) {
        symm = std::max(symm, std::abs(sys.A(i, c0 + m) + std::cos(m * X.t[i]) / (2 * m)));
        symm = std::max(symm, std::abs(sys.A(i, c0 + N - 1 + m) + std::sin(m * X.t[i]) / (2 * m)));
      }
    }
    if (symm > 1e-12) bad.push_back(fmt("Symm spectrum %.1e", symm));

    // Gauss formula: the double layer of piecewise-constant data equals the
    // winding-number extension just inside the domain.
    double gauss = 0.0;
    for (const auto& row : reference_rows()) {
      const ContourSet set = build_contours(row.spec);
      const BoundaryDiscretization dd = discretize(set, 1);
      for (int j = 0; j < static_cast<int>(dd.contours.size()); ++j) {
        const ContourDiscretization& cd = dd.contours[j];
        const NodeSet Y = collocation_nodes(cd);
        for (std::size_t i = 0; i < Y.size(); ++i) {
          Point n;
          if (cd.circle) {
            const Point radial = (Y.point(i) - cd.center) / cd.radius;
            n = cd.terminal == Terminal::Outer ? -radial : radial;
          } else {
            const int e = Y.edge[i];
            const Point t = cd.vertices[(e + 1) % cd.edges()] - cd.vertices[e];
            n = Point(0, 1) * t / std::abs(t);
          }
          const Point inside = Y.point(i) + 1e-9 * n;
          double expected = 0.0;
          for (const Contour& k : set.contours) expected += k.potential() * std::round(winding_number(k, inside));
          gauss = std::max(gauss, std::abs(gauss_value(set, {0.0, 1.0}, j, Y.edge[i], Y.anchor[i], Y.offset[i]) - expected));
          if (set.bounded)
            gauss = std::max(gauss, std::abs(gauss_value(set, {1.0, 1.0}, j, Y.edge[i], Y.anchor[i], Y.offset[i]) - 1.0));
        }
      }
    }
    if (gauss > 1e-14) bad.push_back(fmt("Gauss formula %.1e", gauss));

    // Scale invariance within each method's tolerance.
    double sc_theta = 0.0, sc_sc = 0.0, sc_bie = 0.0;
    for (double s : {0.5, 2.0, 13.0}) {
      sc_theta = std::max(sc_theta, rel(compute(scaled(reference_row("E3").spec, s), Method::Theta).value,
                                        theta["E3"].r.value));
      sc_sc = std::max(sc_sc, rel(compute(scaled(reference_row("G4").spec, s), Method::SC).value, sc["G4"].r.value));
      sc_bie = std::max(sc_bie, rel(compute(scaled(reference_row("C2").spec, s), Method::BIE).value, bie["C2"].r.value));
    }
    if (sc_theta > 1e-10 || sc_sc > 1e-6 || sc_bie > 5e-4)
      bad.push_back(fmt("scale invariance %.1e %.1e %.1e", sc_theta, sc_sc, sc_bie));

    // Swap symmetry and monotonicity of table 3.
    double swap = 0.0;
    for (const auto& row : family_rows("E")) {
      CondenserSpec t = row.spec;
      std::swap(t.y[0], t.y[1]);
      swap = std::max(swap, rel(compute(t, Method::Theta).value, theta[row.id].r.value));
    }
    if (swap > 1e-12) bad.push_back(fmt("E swap %.1e", swap));
    bool mono = true;
    for (int i = 1; i < 5; ++i) {
      const std::string a = "E" + std::to_string(i), b = "E" + std::to_string(i + 1);
      mono = mono && theta[a].r.value < theta[b].r.value;
    }
    if (!mono) bad.push_back("E1<E2<E3<E4<E5 violated");

    std::string detail = fmt(
        "quasi-periodicity %.1e, Symm %.1e, Gauss %.1e, scale theta/SC/BIE %.1e/%.1e/%.1e, E swap %.1e, E1<...<E5 %s",
        qp, symm, gauss, sc_theta, sc_sc, sc_bie, swap, mono ? "holds" : "fails");
    report(6, bad.empty(), detail);
  }

  {
    // Side integrals of the solved SC problems against the Lauricella form
    //   g^(1+bk+bk1) prod |d_j|^bj B(bk+1, bk1+1) F_D(-b; bk+1; bk+bk1+2; -g/d).
    int samples = 0;
    double worst = 0.0;
    for (const auto& row : family_rows("FG")) {
      const HalfDomainPolygon poly = half_domain(build_contours(row.spec));
      const SCParams par = solve_parameter_problem(poly);
      const std::vector<double>& z = par.zeta;
      const std::vector<double> beta(par.exponents.begin() + 1, par.exponents.end());
      for (std::size_t k = 0; k + 1 < z.size(); ++k) {
        const double g = z[k + 1] - z[k];
        // Crowded prevertices (F4) do not survive as absolute reals.
        if (!(g > 1e-12 * std::abs(z.back()))) continue;
        bool separated = true;
        for (std::size_t j = 0; j + 1 < z.size(); ++j) separated = separated && z[j + 1] - z[j] > 1e-12 * std::abs(z.back());
        if (!separated) continue;
        const C side = sc_side_integral({z, beta}, z[k], z[k + 1], 1.0);
        std::vector<double> a, x;
        double pref = std::pow(g, 1 + beta[k] + beta[k + 1]);
        for (std::size_t j = 0; j < z.size(); ++j) {
          if (j == k || j == k + 1) continue;
          const double dj = z[k] - z[j];
          pref *= std::pow(std::abs(dj), beta[j]);
          a.push_back(-beta[j]);
          x.push_back(-g / dj);
        }
        const double bk = beta[k] + 1, bk1 = beta[k + 1] + 1;
        const double B = std::exp(std::lgamma(bk) + std::lgamma(bk1) - std::lgamma(bk + bk1));
        const double lf = pref * B * lauricella_fd(a, bk, bk + bk1, x);
        worst = std::max(worst, std::abs(std::abs(side) - lf) / lf);
        ++samples;
      }
    }
    report(7, samples >= 10 && worst <= 1e-10,
           fmt("sc_side_integral vs lauricella_fd: %d sides of the F/G problems, max rel diff %.2e (limit 1e-10)",
               samples, worst));
  }

  {
    int lo = 1 << 30, hi = 0, systems = 0, largest = 0;
    for (const auto& row : reference_rows()) {
      const ContourSet set = build_contours(row.spec);
      for (int L = 0; L <= 3; ++L) {
        const BoundaryDiscretization d = discretize(set, L);
        int unknowns = 0;
        for (const auto& c : d.contours) unknowns += c.basis_size();
        if (unknowns > 10000) break;
        const CapacityMatrix m = capacity_matrix(set, L);
        lo = std::min(lo, m.iterations);
        hi = std::max(hi, m.iterations);
        largest = std::max(largest, m.unknowns);
        ++systems;
      }
    }
    const ContourSet set = annulus();
    double first_m = 0, first_c = 0, last_m = 0, last_c = 0, pmin = 1e9, pmax = 0;
    for (int L = 0; L <= 3; ++L) {
      const ConditionReport c = condition_numbers(set, L);
      const double lm = std::log(static_cast<double>(c.rows)), lc = std::log(c.cond_normal);
      if (L == 0) {
        first_m = lm;
        first_c = lc;
      } else {
        const double p = (lc - last_c) / (lm - last_m);
        pmin = std::min(pmin, p);
        pmax = std::max(pmax, p);
      }
      last_m = lm;
      last_c = lc;
    }
    const double p = (last_c - first_c) / (last_m - first_m);
    const bool ok = lo >= 5 && hi <= 50 && std::abs(p - 2) <= 0.3 && pmin >= 1.7 && pmax <= 2.3;
    report(8, ok,
           fmt("CGLS iterations %d..%d over %d systems up to %d unknowns (band 5..50); condition growth exponent %.2f "
               "(per doubling %.2f..%.2f, band 2 +- 0.3)",
               lo, hi, systems, largest, p, pmin, pmax));
  }

  std::printf("%d of 8 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
