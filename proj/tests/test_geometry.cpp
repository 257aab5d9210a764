#include <doctest.h>

#include <cmath>

#include "condcap/error.hpp"
#include "condcap/geometry.hpp"
#include "condcap/registry.hpp"

using namespace condcap;

namespace {

ErrorCode code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error raised");
  return ErrorCode::ParseError;
}

bool same_points(const std::vector<Point>& a, const std::vector<Point>& b, double tol) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (std::abs(a[i] - b[i]) > tol) return false;
  return true;
}

}  // namespace

TEST_CASE("parse_spec accepts the tabulated encodings") {
  const CondenserSpec e = parse_spec(R"({"family": "E", "x": [0, 5], "y": [1, 2]})");
  CHECK(e.family == Family::E);
  CHECK(e.x == std::vector<double>{0, 5});
  CHECK(e.y == std::vector<double>{1, 2});
  CHECK_NOTHROW(validate(e));

  const CondenserSpec f = parse_spec(R"({"family": "F", "l1": [3, 4], "l2": [1, 1]})");
  CHECK(f.family == Family::F);
  CHECK_NOTHROW(validate(f));
}

TEST_CASE("parse_spec rejects malformed input") {
  CHECK(code_of([] { validate(parse_spec(R"({"family": "A", "x": [0, 3, 1, 4, 5, 6, 9, 11], "l": [2]})")); }) ==
        ErrorCode::NonMonotoneX);
  CHECK(code_of([] { validate(parse_spec(R"({"family": "A", "x": [1, 2, 3, 4, 5, 6, 7, 8], "l": [2]})")); }) ==
        ErrorCode::NonMonotoneX);
  CHECK(code_of([] { validate(parse_spec(R"({"family": "E", "x": [0, 5], "y": [1]})")); }) == ErrorCode::BadArity);
  CHECK(code_of([] { validate(parse_spec(R"({"family": "E", "x": [0, 5], "y": [1, -2]})")); }) ==
        ErrorCode::NonpositiveLength);
  CHECK(code_of([] { parse_spec("{not json"); }) == ErrorCode::ParseError);
  CHECK(code_of([] { parse_spec(R"({"family": "Q"})"); }) == ErrorCode::ParseError);
}

TEST_CASE("spec JSON round trip") {
  for (const auto& row : reference_rows()) {
    const CondenserSpec back = parse_spec(to_json(row.spec));
    CHECK(back.family == row.spec.family);
    CHECK(back.x == row.spec.x);
    CHECK(back.y == row.spec.y);
    CHECK(back.l == row.spec.l);
    CHECK(back.l1 == row.spec.l1);
    CHECK(back.l2 == row.spec.l2);
  }
}

TEST_CASE("family F decodes to concentric rectangles") {
  const ContourSet set = build_contours(parse_spec(R"({"family": "F", "l1": [3, 4], "l2": [1, 1]})"));
  REQUIRE(set.contours.size() == 2);
  CHECK(set.bounded);
  const BoundingBox outer = bounding_box({{set.contours[0]}, true});
  CHECK(outer.xmax - outer.xmin == doctest::Approx(8.0));
  CHECK(outer.ymax - outer.ymin == doctest::Approx(6.0));
  CHECK((outer.xmax + outer.xmin) == doctest::Approx(0.0));
  CHECK(std::abs(signed_area(set.contours[1].vertices)) == doctest::Approx(4.0));
  CHECK(set.contours[0].terminal == Terminal::Outer);
  CHECK(set.contours[1].terminal == Terminal::Inner);
}

TEST_CASE("family E decodes to two vertical slots") {
  const ContourSet set = build_contours(parse_spec(R"({"family": "E", "x": [0, 5], "y": [1, 2]})"));
  REQUIRE(set.contours.size() == 2);
  CHECK_FALSE(set.bounded);
  for (const Contour& c : set.contours) CHECK(c.kind == ContourKind::Slot);
  auto ends = [](const Contour& c) {
    Point a = c.vertices[0], b = c.vertices[1];
    if (a.imag() > b.imag()) std::swap(a, b);
    return std::pair{a, b};
  };
  CHECK(ends(set.contours[0]) == std::pair{Point{0, -1}, Point{0, 1}});
  CHECK(ends(set.contours[1]) == std::pair{Point{5, -2}, Point{5, 2}});
}

TEST_CASE("family G decodes to a cross inside a rectangle") {
  const ContourSet set = build_contours(reference_row("G1").spec);
  const BoundingBox outer = bounding_box({{set.contours[0]}, true});
  CHECK(outer.xmax - outer.xmin == doctest::Approx(10.0));
  CHECK(outer.ymax - outer.ymin == doctest::Approx(8.0));
  // A 6 x 2 bar with 2 x 1 stubs above and below: 12 corners, area 16.
  CHECK(set.contours[1].vertices.size() == 12);
  CHECK(std::abs(signed_area(set.contours[1].vertices)) == doctest::Approx(16.0));
}

TEST_CASE("half-domain of F1") {
  const HalfDomainPolygon p = half_domain(build_contours(reference_row("F1").spec));
  REQUIRE(p.z.size() == 8);
  double sum = 0.0;
  int half = 0, three_half = 0;
  for (double a : p.alpha) {
    sum += a;
    half += a == 0.5;
    three_half += a == 1.5;
  }
  CHECK(sum == 6.0);
  CHECK(half == 6);
  CHECK(three_half == 2);
  int axis_vertices = 0;
  for (Point z : p.z) axis_vertices += z.imag() == 0.0;
  CHECK(axis_vertices == 4);
  CHECK(p.arcs.size() == 4);
}

TEST_CASE("half-domain of E1 joins the axis rays through infinity") {
  const HalfDomainPolygon p = half_domain(build_contours(reference_row("E1").spec));
  CHECK_FALSE(p.bounded);
  int f0 = 0, f1 = 0, n = 0;
  for (const Arc& a : p.arcs) {
    f0 += a.label == ArcLabel::F0;
    f1 += a.label == ArcLabel::F1;
    n += a.label == ArcLabel::N;
  }
  CHECK(f0 == 1);
  CHECK(f1 == 1);
  // The segment between the slots and the two rays, the rays joined at infinity.
  CHECK(n == 2);
  // Each half-slot is traversed on both sides with the tip as a vertex of angle 2.
  int tips = 0;
  for (double a : p.alpha) tips += a == 2.0;
  CHECK(tips == 2);
}

TEST_CASE("half-domain of A1 has three collinear slot arcs") {
  const HalfDomainPolygon p = half_domain(build_contours(reference_row("A1").spec));
  int f1 = 0;
  for (const Arc& a : p.arcs) {
    if (a.label != ArcLabel::F1) continue;
    ++f1;
    for (int e = a.first_edge;; e = (e + 1) % static_cast<int>(p.z.size())) {
      CHECK(p.z[e].imag() == 0.0);
      CHECK(p.z[(e + 1) % p.z.size()].imag() == 0.0);
      if (e == a.last_edge) break;
    }
  }
  CHECK(f1 == 3);
}

TEST_CASE("half-domain invariants over the registry") {
  for (const auto& row : reference_rows()) {
    CAPTURE(row.id);
    const ContourSet set = build_contours(row.spec);
    const HalfDomainPolygon p = half_domain(set);
    REQUIRE(p.edge_label.size() == p.z.size());
    for (double a : p.alpha) {
      CHECK(a > 0.0);
      CHECK(a <= 2.0);
      CHECK(a * 2 == std::round(a * 2));  // axis-parallel edges give multiples of 1/2
    }
    if (p.bounded) {
      double sum = 0.0;
      for (double a : p.alpha) sum += a;
      CHECK(sum == static_cast<double>(p.z.size()) - 2);
    }
    // Arcs cover every edge once and alternate Dirichlet / Neumann.
    std::vector<int> covered(p.z.size(), 0);
    for (const Arc& a : p.arcs)
      for (int e = a.first_edge;; e = (e + 1) % static_cast<int>(p.z.size())) {
        ++covered[e];
        CHECK(p.edge_label[e] == a.label);
        if (e == a.last_edge) break;
      }
    for (int c : covered) CHECK(c == 1);
    for (std::size_t i = 0; i < p.arcs.size(); ++i) {
      const bool n1 = p.arcs[i].label == ArcLabel::N;
      const bool n2 = p.arcs[(i + 1) % p.arcs.size()].label == ArcLabel::N;
      CHECK(n1 != n2);
    }
  }
}

TEST_CASE("reflecting the half-domain reproduces the contours") {
  for (const auto& row : reference_rows()) {
    CAPTURE(row.id);
    const ContourSet set = build_contours(row.spec);
    const ContourSet back = reflect(half_domain(set));
    REQUIRE(back.contours.size() == set.contours.size());
    for (const Contour& c : set.contours) {
      bool found = false;
      for (const Contour& d : back.contours)
        found = found || (c.terminal == d.terminal && same_loop(c.vertices, d.vertices, 1e-14));
      CHECK(found);
    }
  }
}

TEST_CASE("scaling a spec scales every vertex") {
  for (double s : {0.5, 2.0, 13.0})
    for (const char* id : {"A1", "B1", "C3", "D2", "E4", "F1", "G6"}) {
      CAPTURE(id);
      const ContourSet a = build_contours(reference_row(id).spec);
      const ContourSet b = build_contours(scaled(reference_row(id).spec, s));
      REQUIRE(a.contours.size() == b.contours.size());
      for (std::size_t j = 0; j < a.contours.size(); ++j) {
        std::vector<Point> sv;
        for (Point v : a.contours[j].vertices) sv.push_back(s * v);
        CHECK(same_points(sv, b.contours[j].vertices, 1e-13 * s));
      }
      const HalfDomainPolygon pa = half_domain(a), pb = half_domain(b);
      CHECK(pa.alpha == pb.alpha);
    }
}

TEST_CASE("family E swap is a reflection") {
  CondenserSpec s = reference_row("E1").spec;
  CondenserSpec t = s;
  std::swap(t.y[0], t.y[1]);
  const ContourSet a = build_contours(s), b = build_contours(t);
  const double w = s.x[1] + s.x[0];
  // Mirror b across x = w / 2; slot j of a lands on slot 1 - j of b.
  for (int j = 0; j < 2; ++j) {
    std::vector<Point> m;
    for (Point v : b.contours[1 - j].vertices) m.emplace_back(w - v.real(), v.imag());
    CHECK(same_loop(a.contours[j].vertices, m, 1e-14));
  }
}

TEST_CASE("contour validation") {
  Contour inner;
  inner.vertices = {{1, 0}, {2, 0}};
  inner.terminal = Terminal::Inner;

  ContourSet bad;
  Contour bow;
  bow.vertices = {{0, -2}, {4, 2}, {4, -2}, {0, 2}};
  bow.terminal = Terminal::Outer;
  bad.contours = {bow, inner};
  CHECK(code_of([&] { validate(bad); }) == ErrorCode::SelfIntersection);

  // A needle traversed out and back is weakly simple and allowed.
  Contour needle;
  needle.vertices = {{0, -2}, {4, -2}, {4, 0}, {3, 0}, {4, 0}, {4, 2}, {0, 2}};
  needle.terminal = Terminal::Outer;
  ContourSet ok;
  ok.contours = {needle, inner};
  CHECK_NOTHROW(validate(ok));

  // The slot must not touch the plate.
  ContourSet touching = ok;
  touching.contours[1].vertices = {{1, 0}, {3, 0}};
  CHECK(code_of([&] { validate(touching); }) == ErrorCode::SelfIntersection);
}

TEST_CASE("explicit contours match the codec") {
  const ContourSet coded = build_contours(reference_row("B1").spec);
  CondenserSpec spec;
  spec.family = Family::Explicit;
  spec.contours = coded;
  const ContourSet again = build_contours(parse_spec(to_json(spec)));
  REQUIRE(again.contours.size() == coded.contours.size());
  for (std::size_t j = 0; j < coded.contours.size(); ++j)
    CHECK(same_loop(again.contours[j].vertices, coded.contours[j].vertices, 0.0));
}

TEST_CASE("circle helpers") {
  Contour c;
  c.kind = ContourKind::Circle;
  c.center = {1, -2};
  c.radius = 3;
  const auto v = polygonize(c);
  CHECK(v.size() == 512);
  for (Point p : v) CHECK(std::abs(std::abs(p - c.center) - 3.0) < 1e-14);
  CHECK(std::abs(winding_number(c, {1, -2})) == doctest::Approx(1.0));
  CHECK(winding_number(c, {5, -2}) == doctest::Approx(0.0));
}
