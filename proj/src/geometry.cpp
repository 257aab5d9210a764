#include "condcap/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "condcap/error.hpp"

namespace condcap {

namespace {

constexpr double kPi = std::numbers::pi;

bool near(Point a, Point b, double tol) { return std::abs(a - b) <= tol; }

double cross(Point a, Point b) { return a.real() * b.imag() - a.imag() * b.real(); }
double dot(Point a, Point b) { return a.real() * b.real() + a.imag() * b.imag(); }

double length_scale(const std::vector<Point>& v) {
  double s = 0.0;
  for (const Point& p : v) s = std::max(s, std::abs(p));
  return std::max(s, 1.0);
}

// Turning angle from direction a to direction b, in (-pi, pi].
double turn(Point a, Point b) { return std::atan2(cross(a, b), dot(a, b)); }

bool is_reversal(Point a, Point b) {
  return dot(a, b) < 0 && std::abs(cross(a, b)) <= 1e-12 * std::abs(a) * std::abs(b);
}

double snap_half(double a) {
  const double r = std::round(2.0 * a) / 2.0;
  return std::abs(a - r) <= 1e-12 ? r : a;
}

// ---------------------------------------------------------------- codec --

std::vector<Point> outer_loop(const std::vector<Point>& up, std::optional<double> needle_left,
                              std::optional<double> needle_right) {
  const Point x0 = up.front(), x1 = up.back();
  std::vector<Point> pts{x0};
  if (needle_left) {
    pts.emplace_back(*needle_left, 0.0);
    pts.push_back(x0);
  }
  for (std::size_t i = 1; i + 1 < up.size(); ++i) pts.push_back(std::conj(up[i]));
  pts.push_back(x1);
  if (needle_right) {
    pts.emplace_back(*needle_right, 0.0);
    pts.push_back(x1);
  }
  for (std::size_t i = up.size() - 2; i >= 1; --i) pts.push_back(up[i]);
  return pts;
}

std::vector<Point> rect_up(double x0, double x1, double h) {
  return {{x0, 0}, {x0, h}, {x1, h}, {x1, 0}};
}

// Upper chain from (x0,0): vertical segments take the given signs in turn,
// horizontal segments go right; closed by a horizontal run to x1 and a drop
// to the axis.
std::vector<Point> chain_up(double x0, double x1, const std::vector<double>& L,
                            const std::vector<int>& signs) {
  std::vector<Point> up{{x0, 0}};
  double x = x0, y = 0;
  for (std::size_t i = 0; i < L.size(); ++i) {
    if (i % 2 == 0)
      y += signs[i / 2] * L[i];
    else
      x += L[i];
    if (y <= 0) throw Error(ErrorCode::DecodeAmbiguous, "outer chain reaches the symmetry axis");
    up.emplace_back(x, y);
  }
  if (x >= x1) throw Error(ErrorCode::DecodeAmbiguous, "outer chain passes the last axis point");
  up.emplace_back(x1, y);
  up.emplace_back(x1, 0);
  return up;
}

// North-West quarter chain: alternate up/right from the axis, ending on the
// vertical symmetry line x = 0, then mirrored to the North-East.
std::vector<Point> quarter_up(const std::vector<double>& L) {
  if (L.size() % 2 != 0)
    throw Error(ErrorCode::DecodeAmbiguous, "quarter chain must end with a horizontal segment");
  double x = 0;
  for (std::size_t i = 1; i < L.size(); i += 2) x -= L[i];
  double y = 0;
  std::vector<Point> q{{x, y}};
  for (std::size_t i = 0; i < L.size(); ++i) {
    if (i % 2 == 0)
      y += L[i];
    else
      x += L[i];
    q.emplace_back(x, y);
  }
  std::vector<Point> up = q;
  for (auto it = q.rbegin() + 1; it != q.rend(); ++it) up.emplace_back(-it->real(), it->imag());
  return up;
}

std::vector<Point> closed_from_up(const std::vector<Point>& up) {
  std::vector<Point> pts;
  for (const Point& p : up) pts.push_back(std::conj(p));
  for (std::size_t i = up.size() - 2; i >= 1; --i) pts.push_back(up[i]);
  return canonical_loop(pts);
}

std::vector<Point> cross_slot(double a, double c, double b, double y) {
  return {{a, 0}, {c, 0}, {c, -y}, {c, 0}, {b, 0}, {c, 0}, {c, y}, {c, 0}};
}

std::vector<Point> tee_slot(double c, double b, double y) {
  return {{b, 0}, {c, 0}, {c, -y}, {c, 0}, {c, y}, {c, 0}};
}

Contour polyline(std::vector<Point> v, Terminal t) {
  Contour c;
  c.kind = v.size() == 2 ? ContourKind::Slot : ContourKind::PolylineClosed;
  c.vertices = std::move(v);
  c.terminal = t;
  return c;
}

Contour axis_slot(double a, double b, Terminal t) { return polyline({{a, 0}, {b, 0}}, t); }

double top_side_check(const std::vector<double>& l, double width) {
  if (l.size() >= 2 && std::abs(l[1] - width) > 1e-12 * std::max(1.0, width))
    throw Error(ErrorCode::DecodeAmbiguous, "second L entry must equal the outer width");
  if (l.size() > 2) throw Error(ErrorCode::DecodeAmbiguous, "rectangular outer contour takes at most two lengths");
  return l[0];
}

// -------------------------------------------------------- intersections --

void check_edge_pair(Point p, Point q, Point r, Point s, bool same_contour, double tol) {
  const bool rev = near(p, s, tol) && near(q, r, tol);
  const bool same = near(p, r, tol) && near(q, s, tol);
  if (same) throw Error(ErrorCode::SelfIntersection, "edge traversed twice in the same direction");
  if (rev) {
    if (!same_contour) throw Error(ErrorCode::SelfIntersection, "contours share an edge");
    return;
  }
  const Point d1 = q - p, d2 = s - r;
  const double den = cross(d1, d2);
  const double l1 = std::abs(d1), l2 = std::abs(d2);
  auto on_segment = [&](Point a, Point b, Point x) {
    const Point d = b - a;
    const double t = dot(x - a, d) / dot(d, d);
    return t > tol / std::abs(d) && t < 1 - tol / std::abs(d) &&
           std::abs(cross(d, x - a)) <= tol * std::abs(d);
  };
  // An endpoint of one edge inside the other edge is a touching without a
  // shared vertex.
  if (on_segment(p, q, r) || on_segment(p, q, s) || on_segment(r, s, p) || on_segment(r, s, q)) {
    std::ostringstream os;
    os << "edges " << p << q << " and " << r << s << " overlap or touch away from a vertex";
    throw Error(ErrorCode::SelfIntersection, os.str());
  }
  if (std::abs(den) > 1e-14 * l1 * l2) {
    const double t = cross(r - p, d2) / den;
    const double u = cross(r - p, d1) / den;
    const double et = tol / l1, eu = tol / l2;
    if (t > et && t < 1 - et && u > eu && u < 1 - eu)
      throw Error(ErrorCode::SelfIntersection, "edges cross");
  }
  if (!same_contour) {
    for (Point a : {p, q})
      for (Point b : {r, s})
        if (near(a, b, tol)) throw Error(ErrorCode::SelfIntersection, "contours touch");
  }
}

std::vector<std::pair<Point, Point>> edges_of(const Contour& c) {
  std::vector<std::pair<Point, Point>> e;
  const auto& v = c.vertices;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const Point a = v[i], b = v[(i + 1) % v.size()];
    if (v.size() == 2 && i == 1) {
      e.emplace_back(a, b);
      break;
    }
    e.emplace_back(a, b);
  }
  return e;
}

bool has_area(const Contour& c) {
  if (c.kind == ContourKind::Circle) return true;
  return std::abs(signed_area(c.vertices)) > 1e-12 * length_scale(c.vertices) * length_scale(c.vertices);
}

Point sample_point(const Contour& c) {
  if (c.kind == ContourKind::Circle) return c.center + c.radius;
  return c.vertices.front();
}

// ----------------------------------------------------------- half domain --

std::vector<Point> insert_axis_crossings(const std::vector<Point>& loop, double tol) {
  std::vector<Point> out;
  const std::size_t n = loop.size();
  for (std::size_t i = 0; i < n; ++i) {
    Point a = loop[i];
    if (std::abs(a.imag()) <= tol) a = {a.real(), 0.0};
    out.push_back(a);
    Point b = loop[(i + 1) % n];
    if (a.imag() * b.imag() < 0 && std::abs(b.imag()) > tol) {
      const double t = -a.imag() / (b.imag() - a.imag());
      const double x = a.real() == b.real() ? a.real() : a.real() + t * (b.real() - a.real());
      out.emplace_back(x, 0.0);
    }
  }
  return out;
}

struct Trace {
  std::vector<Point> pts;
  Terminal terminal;
  bool is_outer_closed = false;
};

Trace upper_trace(const Contour& c, double tol) {
  Trace tr;
  tr.terminal = c.terminal;
  tr.is_outer_closed = c.terminal == Terminal::Outer && has_area(c);
  std::vector<Point> v = c.kind == ContourKind::Circle ? polygonize(c) : c.vertices;
  if (c.kind == ContourKind::Circle && c.terminal == Terminal::Inner) std::reverse(v.begin(), v.end());
  v = insert_axis_crossings(v, tol);
  const std::size_t n = v.size();
  const bool all_axis = std::all_of(v.begin(), v.end(), [](Point p) { return p.imag() == 0.0; });
  if (all_axis) {
    auto [lo, hi] = std::minmax_element(v.begin(), v.end(),
                                        [](Point a, Point b) { return a.real() < b.real(); });
    tr.pts = {*lo, *hi};
    return tr;
  }
  std::size_t i0 = n;
  for (std::size_t i = 0; i < n; ++i)
    if (v[i].imag() > 0) {
      i0 = i;
      break;
    }
  if (i0 == n) throw Error(ErrorCode::NotSymmetric, "contour has no upper part");
  std::size_t lo = i0, hi = i0, count = 1;
  while (v[(lo + n - 1) % n].imag() >= 0 && count < n) {
    lo = (lo + n - 1) % n;
    ++count;
  }
  while (v[(hi + 1) % n].imag() >= 0 && count < n) {
    hi = (hi + 1) % n;
    ++count;
  }
  if (count == n) throw Error(ErrorCode::NotSymmetric, "contour lies in the upper half-plane");
  std::vector<Point> run;
  for (std::size_t k = 0, i = lo; k < count; ++k, i = (i + 1) % n) run.push_back(v[i]);
  std::size_t upper = 0;
  for (Point p : v) upper += p.imag() > 0;
  std::size_t upper_run = 0;
  for (Point p : run) upper_run += p.imag() > 0;
  if (upper != upper_run) throw Error(ErrorCode::NotSimplyConnected, "contour crosses the axis more than twice");
  // Drop the lower side of needles lying on the axis at either end.
  while (run.size() >= 3 && run[0].imag() == 0 && run[1].imag() == 0 && near(run[2], run[0], tol))
    run.erase(run.begin());
  while (run.size() >= 3) {
    const std::size_t m = run.size() - 1;
    if (run[m].imag() == 0 && run[m - 1].imag() == 0 && near(run[m - 2], run[m], tol))
      run.pop_back();
    else
      break;
  }
  tr.pts = run;
  return tr;
}

double trace_left(const Trace& t) { return std::min(t.pts.front().real(), t.pts.back().real()); }
double trace_right(const Trace& t) { return std::max(t.pts.front().real(), t.pts.back().real()); }

ArcLabel label_of(Terminal t) { return t == Terminal::Outer ? ArcLabel::F0 : ArcLabel::F1; }

std::vector<Arc> group_arcs(const std::vector<ArcLabel>& lab, bool cyclic) {
  const int K = static_cast<int>(lab.size());
  std::vector<Arc> arcs;
  if (K == 0) return arcs;
  int start = 0;
  if (cyclic) {
    // Start at an edge whose predecessor has a different label.
    start = -1;
    for (int k = 0; k < K; ++k)
      if (lab[k] != lab[(k + K - 1) % K]) {
        start = k;
        break;
      }
    if (start < 0) return {Arc{0, K - 1, lab[0]}};
  }
  Arc cur{start, start, lab[start]};
  for (int s = 1; s < K; ++s) {
    const int k = (start + s) % K;
    if (lab[k] == cur.label) {
      cur.last_edge = k;
    } else {
      arcs.push_back(cur);
      cur = Arc{k, k, lab[k]};
    }
  }
  arcs.push_back(cur);
  return arcs;
}

}  // namespace

// ------------------------------------------------------------- strings --

Family family_from_string(const std::string& s) {
  std::string u;
  for (char ch : s) u += static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
  if (u.size() == 1 && u[0] >= 'A' && u[0] <= 'G') return static_cast<Family>(u[0] - 'A');
  if (u == "EXPLICIT") return Family::Explicit;
  throw Error(ErrorCode::ParseError, "unknown family '" + s + "'");
}

std::string to_string(Family f) {
  if (f == Family::Explicit) return "explicit";
  return std::string(1, static_cast<char>('A' + static_cast<int>(f)));
}

std::string to_string(ArcLabel a) {
  switch (a) {
    case ArcLabel::F0: return "F0";
    case ArcLabel::F1: return "F1";
    case ArcLabel::N: return "N";
  }
  return "?";
}

// --------------------------------------------------------------- parsing --

CondenserSpec parse_spec(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const std::exception& e) {
    throw Error(ErrorCode::ParseError, e.what());
  }
  if (!j.is_object()) throw Error(ErrorCode::ParseError, "spec must be an object");
  CondenserSpec spec;
  try {
    spec.family = family_from_string(j.value("family", std::string("explicit")));
    for (auto [key, dst] : {std::pair{"x", &spec.x}, {"y", &spec.y}, {"l", &spec.l}, {"l1", &spec.l1},
                            {"l2", &spec.l2}})
      if (j.contains(key)) *dst = j.at(key).get<std::vector<double>>();
    if (j.contains("contours")) {
      ContourSet set;
      for (const auto& jc : j.at("contours")) {
        Contour c;
        const std::string kind = jc.value("kind", std::string("polyline"));
        const std::string term = jc.value("terminal", std::string("inner"));
        if (term == "outer")
          c.terminal = Terminal::Outer;
        else if (term == "inner")
          c.terminal = Terminal::Inner;
        else
          throw Error(ErrorCode::ParseError, "terminal must be 'outer' or 'inner'");
        if (kind == "circle") {
          c.kind = ContourKind::Circle;
          const auto ctr = jc.at("center").get<std::vector<double>>();
          if (ctr.size() != 2) throw Error(ErrorCode::ParseError, "center needs two coordinates");
          c.center = {ctr[0], ctr[1]};
          c.radius = jc.at("radius").get<double>();
        } else if (kind == "polyline" || kind == "slot") {
          for (const auto& p : jc.at("vertices")) {
            const auto xy = p.get<std::vector<double>>();
            if (xy.size() != 2) throw Error(ErrorCode::ParseError, "vertex needs two coordinates");
            c.vertices.emplace_back(xy[0], xy[1]);
          }
          c.kind = c.vertices.size() == 2 ? ContourKind::Slot : ContourKind::PolylineClosed;
        } else {
          throw Error(ErrorCode::ParseError, "unknown contour kind '" + kind + "'");
        }
        set.contours.push_back(std::move(c));
      }
      spec.contours = std::move(set);
    }
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    throw Error(ErrorCode::ParseError, e.what());
  }
  validate(spec);
  return spec;
}

std::string to_json(const CondenserSpec& spec) {
  nlohmann::json j;
  j["family"] = to_string(spec.family);
  if (!spec.x.empty()) j["x"] = spec.x;
  if (!spec.y.empty()) j["y"] = spec.y;
  if (!spec.l.empty()) j["l"] = spec.l;
  if (!spec.l1.empty()) j["l1"] = spec.l1;
  if (!spec.l2.empty()) j["l2"] = spec.l2;
  if (spec.contours) {
    nlohmann::json arr = nlohmann::json::array();
    for (const Contour& c : spec.contours->contours) {
      nlohmann::json jc;
      jc["terminal"] = c.terminal == Terminal::Outer ? "outer" : "inner";
      if (c.kind == ContourKind::Circle) {
        jc["kind"] = "circle";
        jc["center"] = {c.center.real(), c.center.imag()};
        jc["radius"] = c.radius;
      } else {
        jc["kind"] = c.kind == ContourKind::Slot ? "slot" : "polyline";
        nlohmann::json vs = nlohmann::json::array();
        for (Point p : c.vertices) vs.push_back({p.real(), p.imag()});
        jc["vertices"] = vs;
      }
      arr.push_back(jc);
    }
    j["contours"] = arr;
  }
  return j.dump();
}

void validate(const CondenserSpec& spec) {
  if (spec.contours) {
    validate(build_contours(spec));
    return;
  }
  if (spec.family == Family::Explicit)
    throw Error(ErrorCode::BadArity, "explicit spec needs a contour list");
  auto need = [](bool ok, const std::string& what) {
    if (!ok) throw Error(ErrorCode::BadArity, what);
  };
  const std::size_t nx = spec.x.size(), ny = spec.y.size(), nl = spec.l.size();
  switch (spec.family) {
    case Family::A:
      need(nx == 8 && ny == 0 && nl >= 1, "family A takes |x|=8, |y|=0, |l|>=1");
      break;
    case Family::B:
      need(nx == 8 && ny == 2 && nl >= 1, "family B takes |x|=8, |y|=2, |l|>=1");
      break;
    case Family::C:
      need(nx == 8 && ny == 1 && nl >= 1, "family C takes |x|=8, |y|=1, |l|>=1");
      break;
    case Family::D:
      need(nx == 6 && ny == 0 && nl >= 1, "family D takes |x|=6, |y|=0, |l|>=1");
      break;
    case Family::E:
      need(nx == 2 && ny == 2 && nl == 0, "family E takes |x|=2, |y|=2, |l|=0");
      break;
    case Family::F:
    case Family::G:
      need(!spec.l1.empty() && !spec.l2.empty() && nx == 0 && ny == 0,
           "families F,G take non-empty l1, l2 and no x, y");
      break;
    case Family::Explicit:
      break;
  }
  if (nx > 0) {
    if (spec.x[0] != 0.0) throw Error(ErrorCode::NonMonotoneX, "x must start at 0");
    for (std::size_t i = 1; i < nx; ++i)
      if (!(spec.x[i] > spec.x[i - 1]))
        throw Error(ErrorCode::NonMonotoneX, "x must be strictly increasing");
  }
  for (const auto* arr : {&spec.y, &spec.l, &spec.l1, &spec.l2})
    for (double v : *arr)
      if (!(v > 0.0)) throw Error(ErrorCode::NonpositiveLength, "lengths and half-heights must be positive");
}

// --------------------------------------------------------------- decoding --

ContourSet build_contours(const CondenserSpec& spec) {
  ContourSet set;
  if (spec.contours) {
    set = *spec.contours;
  } else {
    validate(spec);
    const auto& X = spec.x;
    const auto& Y = spec.y;
    const auto& L = spec.l;
    switch (spec.family) {
      case Family::A: {
        const double h = top_side_check(L, X[7] - X[0]);
        set.contours.push_back(polyline(outer_loop(rect_up(X[0], X[7], h), {}, {}), Terminal::Outer));
        for (int i : {1, 3, 5}) set.contours.push_back(axis_slot(X[i], X[i + 1], Terminal::Inner));
        break;
      }
      case Family::B: {
        const double h = top_side_check(L, X[7] - X[0]);
        set.contours.push_back(polyline(outer_loop(rect_up(X[0], X[7], h), {}, X[6]), Terminal::Outer));
        set.contours.push_back(polyline(cross_slot(X[1], X[2], X[3], Y[0]), Terminal::Inner));
        set.contours.push_back(polyline(tee_slot(X[4], X[5], Y[1]), Terminal::Inner));
        break;
      }
      case Family::C: {
        if (L.size() != 3) throw Error(ErrorCode::DecodeAmbiguous, "family C needs three chain lengths");
        set.contours.push_back(
            polyline(outer_loop(chain_up(X[0], X[7], L, {1, -1}), X[1], X[6]), Terminal::Outer));
        set.contours.push_back(polyline(tee_slot(X[2], X[3], Y[0]), Terminal::Inner));
        set.contours.push_back(axis_slot(X[4], X[5], Terminal::Inner));
        break;
      }
      case Family::D: {
        if (L.size() != 5) throw Error(ErrorCode::DecodeAmbiguous, "family D needs five chain lengths");
        set.contours.push_back(
            polyline(outer_loop(chain_up(X[0], X[5], L, {1, 1, -1}), {}, {}), Terminal::Outer));
        set.contours.push_back(axis_slot(X[1], X[2], Terminal::Inner));
        set.contours.push_back(axis_slot(X[3], X[4], Terminal::Inner));
        break;
      }
      case Family::E: {
        set.contours.push_back(polyline({{X[0], -Y[0]}, {X[0], Y[0]}}, Terminal::Outer));
        set.contours.push_back(polyline({{X[1], -Y[1]}, {X[1], Y[1]}}, Terminal::Inner));
        break;
      }
      case Family::F:
      case Family::G: {
        set.contours.push_back(polyline(closed_from_up(quarter_up(spec.l1)), Terminal::Outer));
        set.contours.push_back(polyline(closed_from_up(quarter_up(spec.l2)), Terminal::Inner));
        break;
      }
      case Family::Explicit:
        break;
    }
  }
  // Canonical form: no repeated or pass-through vertices, domain on the left.
  bool have_outer_area = false;
  for (Contour& c : set.contours) {
    if (c.kind == ContourKind::Circle) {
      have_outer_area |= c.terminal == Terminal::Outer;
      c.orientation = c.terminal == Terminal::Outer ? 1 : -1;
      continue;
    }
    c.vertices = canonical_loop(c.vertices);
    c.kind = c.vertices.size() == 2 ? ContourKind::Slot : ContourKind::PolylineClosed;
    if (c.kind == ContourKind::Slot) {
      c.orientation = 0;
      continue;
    }
    const int o = traversal_orientation(c.vertices);
    const bool outer_area = c.terminal == Terminal::Outer && has_area(c);
    have_outer_area |= outer_area;
    const int want = outer_area ? 1 : -1;
    if (o != 0 && o != want) {
      std::reverse(c.vertices.begin(), c.vertices.end());
      std::rotate(c.vertices.begin(), c.vertices.end() - 1, c.vertices.end());
    }
    c.orientation = o == 0 ? 0 : want;
  }
  set.bounded = have_outer_area;
  validate(set);
  return set;
}

void validate(const ContourSet& set) {
  const auto& cs = set.contours;
  if (cs.empty()) throw Error(ErrorCode::BadArity, "empty contour set");
  bool any_outer = false, any_inner = false;
  double scale = 1.0;
  for (const Contour& c : cs) {
    any_outer |= c.terminal == Terminal::Outer;
    any_inner |= c.terminal == Terminal::Inner;
    if (c.kind == ContourKind::Circle) {
      if (!(c.radius > 0)) throw Error(ErrorCode::NonpositiveLength, "circle radius must be positive");
      scale = std::max(scale, std::abs(c.center) + c.radius);
    } else {
      if (c.vertices.size() < 2) throw Error(ErrorCode::BadArity, "contour needs at least two vertices");
      scale = std::max(scale, length_scale(c.vertices));
    }
  }
  if (!any_outer || !any_inner)
    throw Error(ErrorCode::BadArity, "a condenser needs an outer and an inner terminal");
  const double tol = 1e-12 * scale;

  // Mirror symmetry, contour by contour.
  for (const Contour& c : cs) {
    if (c.kind == ContourKind::Circle) {
      if (std::abs(c.center.imag()) > tol) throw Error(ErrorCode::NotSymmetric, "circle off the axis");
      continue;
    }
    for (Point p : c.vertices) {
      const bool ok = std::any_of(c.vertices.begin(), c.vertices.end(),
                                  [&](Point q) { return near(q, std::conj(p), tol); });
      if (!ok) throw Error(ErrorCode::NotSymmetric, "contour is not mirror symmetric");
    }
    for (auto [a, b] : edges_of(c))
      if (near(a, b, tol)) throw Error(ErrorCode::NonpositiveLength, "zero-length edge");
  }

  // Edge intersections among polylines.
  std::vector<std::vector<std::pair<Point, Point>>> E;
  for (const Contour& c : cs)
    E.push_back(c.kind == ContourKind::Circle ? std::vector<std::pair<Point, Point>>{} : edges_of(c));
  for (std::size_t i = 0; i < cs.size(); ++i)
    for (std::size_t j = i; j < cs.size(); ++j)
      for (std::size_t a = 0; a < E[i].size(); ++a)
        for (std::size_t b = (i == j ? a + 1 : 0); b < E[j].size(); ++b)
          check_edge_pair(E[i][a].first, E[i][a].second, E[j][b].first, E[j][b].second, i == j, tol);

  // Circles against everything else.
  for (std::size_t i = 0; i < cs.size(); ++i) {
    if (cs[i].kind != ContourKind::Circle) continue;
    for (std::size_t j = 0; j < cs.size(); ++j) {
      if (i == j) continue;
      if (cs[j].kind == ContourKind::Circle) {
        const double d = std::abs(cs[i].center - cs[j].center);
        const double r1 = cs[i].radius, r2 = cs[j].radius;
        if (std::abs(d - std::abs(r1 - r2)) <= tol || std::abs(d - (r1 + r2)) <= tol ||
            (d < r1 + r2 && d > std::abs(r1 - r2)))
          throw Error(ErrorCode::SelfIntersection, "circles intersect");
      } else {
        const auto& v = cs[j].vertices;
        const bool inside0 = std::abs(v[0] - cs[i].center) < cs[i].radius;
        for (Point p : v)
          if ((std::abs(p - cs[i].center) < cs[i].radius) != inside0 ||
              std::abs(std::abs(p - cs[i].center) - cs[i].radius) <= tol)
            throw Error(ErrorCode::SelfIntersection, "polyline crosses a circle");
      }
    }
  }

  // Nesting: inner terminals inside the outer contour, not inside each other.
  const Contour* outer = nullptr;
  int n_outer_area = 0;
  for (const Contour& c : cs)
    if (c.terminal == Terminal::Outer && has_area(c)) {
      outer = &c;
      ++n_outer_area;
    }
  if (n_outer_area > 1) throw Error(ErrorCode::NotSimplyConnected, "more than one enclosing outer contour");
  if (outer) {
    for (const Contour& c : cs) {
      if (&c == outer) continue;
      if (c.terminal == Terminal::Outer && c.kind == ContourKind::Slot)
        throw Error(ErrorCode::NotSimplyConnected, "bounded condenser with a second outer component");
      if (std::abs(winding_number(*outer, sample_point(c))) < 0.5)
        throw Error(ErrorCode::SelfIntersection, "inner contour outside the outer contour");
    }
  }
  for (std::size_t i = 0; i < cs.size(); ++i) {
    if (&cs[i] == outer || !has_area(cs[i])) continue;
    for (std::size_t j = 0; j < cs.size(); ++j)
      if (j != i && &cs[j] != outer && std::abs(winding_number(cs[i], sample_point(cs[j]))) > 0.5)
        throw Error(ErrorCode::SelfIntersection, "nested inner contours");
  }
}

HalfDomainPolygon half_domain(const ContourSet& set) {
  double scale = 1.0;
  for (const Contour& c : set.contours)
    scale = std::max(scale, c.kind == ContourKind::Circle ? std::abs(c.center) + c.radius
                                                            : length_scale(c.vertices));
  const double tol = 1e-12 * scale;

  std::vector<Trace> inner;
  std::optional<Trace> outer;
  for (const Contour& c0 : set.contours) {
    Contour c = c0;
    if (c.kind == ContourKind::PolylineClosed) {
      const int o = traversal_orientation(c.vertices);
      const int want = (c.terminal == Terminal::Outer && has_area(c)) ? 1 : -1;
      if (o != 0 && o != want) std::reverse(c.vertices.begin(), c.vertices.end());
    }
    Trace t = upper_trace(c, tol);
    if (t.is_outer_closed) {
      if (outer) throw Error(ErrorCode::NotSimplyConnected, "two enclosing contours");
      outer = t;
    } else {
      inner.push_back(t);
    }
  }
  std::sort(inner.begin(), inner.end(),
            [](const Trace& a, const Trace& b) { return trace_left(a) < trace_left(b); });
  for (std::size_t i = 1; i < inner.size(); ++i)
    if (trace_left(inner[i]) <= trace_right(inner[i - 1]) + tol)
      throw Error(ErrorCode::NotSimplyConnected, "axis intervals of two contours overlap");

  std::vector<Point> z;
  std::vector<ArcLabel> lab;
  auto push_trace = [&](const Trace& t) {
    for (std::size_t i = 0; i < t.pts.size(); ++i) {
      z.push_back(t.pts[i]);
      lab.push_back(i + 1 < t.pts.size() ? label_of(t.terminal) : ArcLabel::N);
    }
  };
  if (outer) {
    const Point left = outer->pts.back(), right = outer->pts.front();
    if (!inner.empty() &&
        (trace_left(inner.front()) <= left.real() + tol || trace_right(inner.back()) >= right.real() - tol))
      throw Error(ErrorCode::NotSimplyConnected, "inner contour touches the outer axis points");
    z.push_back(left);
    lab.push_back(ArcLabel::N);
    for (const Trace& t : inner) push_trace(t);
    for (std::size_t i = 0; i + 1 < outer->pts.size(); ++i) {
      z.push_back(outer->pts[i]);
      lab.push_back(label_of(Terminal::Outer));
    }
  } else {
    for (const Trace& t : inner) push_trace(t);
  }

  const bool bounded = outer.has_value();
  auto angles = [&](const std::vector<Point>& zz) {
    const std::size_t K = zz.size();
    std::vector<double> a(K);
    for (std::size_t k = 0; k < K; ++k) {
      Point din = (!bounded && k == 0) ? Point(1, 0) : zz[k] - zz[(k + K - 1) % K];
      Point dout = (!bounded && k + 1 == K) ? Point(1, 0) : zz[(k + 1) % K] - zz[k];
      a[k] = is_reversal(din, dout) ? 2.0 : snap_half(1.0 - turn(din, dout) / kPi);
    }
    return a;
  };

  // Remove pass-through vertices inside an arc.
  for (bool changed = true; changed;) {
    changed = false;
    std::vector<double> a = angles(z);
    const std::size_t K = z.size();
    for (std::size_t k = 0; k < K; ++k) {
      if (!bounded && (k == 0 || k + 1 == K)) continue;
      if (a[k] == 1.0 && lab[k] == lab[(k + K - 1) % K]) {
        z.erase(z.begin() + static_cast<long>(k));
        lab.erase(lab.begin() + static_cast<long>(k));
        changed = true;
        break;
      }
    }
  }

  HalfDomainPolygon poly;
  poly.bounded = bounded;
  if (bounded) {
    // z[0] is the left axis point of the outer contour; start one vertex
    // earlier so that the first vertex is interior to F0.
    std::rotate(z.rbegin(), z.rbegin() + 1, z.rend());
    std::rotate(lab.rbegin(), lab.rbegin() + 1, lab.rend());
  }
  poly.z = z;
  poly.edge_label = lab;
  poly.alpha = angles(z);
  poly.arcs = group_arcs(lab, bounded);
  return poly;
}

ContourSet reflect(const HalfDomainPolygon& poly) {
  ContourSet set;
  set.bounded = poly.bounded;
  const int K = static_cast<int>(poly.z.size());
  for (const Arc& arc : poly.arcs) {
    if (arc.label == ArcLabel::N) continue;
    std::vector<Point> tr;
    for (int e = arc.first_edge;; e = (e + 1) % K) {
      tr.push_back(poly.z[e]);
      if (e == arc.last_edge) {
        tr.push_back(poly.z[(e + 1) % K]);
        break;
      }
    }
    std::vector<Point> loop = tr;
    for (std::size_t i = tr.size() - 2; i >= 1; --i) loop.push_back(std::conj(tr[i]));
    Contour c = polyline(canonical_loop(loop), arc.label == ArcLabel::F0 ? Terminal::Outer : Terminal::Inner);
    c.orientation = c.kind == ContourKind::Slot ? 0 : traversal_orientation(c.vertices);
    set.contours.push_back(std::move(c));
  }
  return set;
}

// ------------------------------------------------------------- utilities --

CondenserSpec scaled(const CondenserSpec& spec, double s) {
  CondenserSpec out = spec;
  for (auto* arr : {&out.x, &out.y, &out.l, &out.l1, &out.l2})
    for (double& v : *arr) v *= s;
  if (out.contours) *out.contours = scaled(*out.contours, s);
  return out;
}

ContourSet scaled(const ContourSet& set, double s) {
  ContourSet out = set;
  for (Contour& c : out.contours) {
    for (Point& p : c.vertices) p *= s;
    c.center *= s;
    c.radius *= s;
  }
  return out;
}

std::vector<Point> polygonize(const Contour& circle, int n) {
  std::vector<Point> v;
  v.reserve(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) v.push_back(circle.center + std::polar(circle.radius, 2 * kPi * k / n));
  return v;
}

std::vector<Point> canonical_loop(const std::vector<Point>& loop, double tol) {
  std::vector<Point> v = loop;
  const double t = tol * length_scale(v);
  for (bool changed = true; changed && v.size() > 2;) {
    changed = false;
    const std::size_t n = v.size();
    for (std::size_t i = 0; i < n && v.size() > 2; ++i) {
      const Point cur = v[i], next = v[(i + 1) % n];
      const bool dup = near(cur, next, t);
      auto straight_at = [&](std::size_t k) {
        const Point d1 = v[k] - v[(k + n - 1) % n], d2 = v[(k + 1) % n] - v[k];
        return std::abs(cross(d1, d2)) <= tol * std::abs(d1) * std::abs(d2) * 1e3 && dot(d1, d2) > 0;
      };
      // A vertex the traversal also turns at (a junction) stays; one that
      // every visit passes straight through, like the axis point of a
      // reflected slot, goes.
      bool straight = straight_at(i);
      for (std::size_t k = 0; k < n && straight; ++k)
        if (k != i && near(v[k], cur, t)) straight = straight_at(k);
      if (dup || straight) {
        v.erase(v.begin() + static_cast<long>(i));
        changed = true;
        break;
      }
    }
  }
  return v;
}

bool same_loop(const std::vector<Point>& a, const std::vector<Point>& b, double tol) {
  if (a.size() != b.size()) return false;
  const std::size_t n = a.size();
  const double t = tol * std::max(length_scale(a), length_scale(b));
  for (int dir : {1, -1})
    for (std::size_t shift = 0; shift < n; ++shift) {
      bool ok = true;
      for (std::size_t i = 0; i < n && ok; ++i) {
        const std::size_t j = dir > 0 ? (shift + i) % n : (shift + n - i) % n;
        ok = near(a[i], b[j], t);
      }
      if (ok) return true;
    }
  return false;
}

double signed_area(const std::vector<Point>& loop) {
  double s = 0.0;
  for (std::size_t i = 0; i < loop.size(); ++i) s += cross(loop[i], loop[(i + 1) % loop.size()]);
  return 0.5 * s;
}

int traversal_orientation(const std::vector<Point>& loop) {
  const std::size_t n = loop.size();
  if (n < 3) return 0;
  const double scale = length_scale(loop);
  const double area = signed_area(loop);
  if (std::abs(area) > 1e-12 * scale * scale) return area > 0 ? 1 : -1;
  // Slit trees have no area: count turns, with each tip taken as a U-turn
  // of the same sense as the whole traversal.
  double s = 0.0;
  int reversals = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const Point din = loop[i] - loop[(i + n - 1) % n], dout = loop[(i + 1) % n] - loop[i];
    if (is_reversal(din, dout))
      ++reversals;
    else
      s += turn(din, dout);
  }
  const bool ccw = std::abs(s + reversals * kPi - 2 * kPi) < 1e-9;
  const bool cw = std::abs(s - reversals * kPi + 2 * kPi) < 1e-9;
  if (ccw && !cw) return 1;
  if (cw && !ccw) return -1;
  return 0;
}

double winding_number(const Contour& c, Point p) {
  if (c.kind == ContourKind::Circle) return std::abs(p - c.center) < c.radius ? 1.0 : 0.0;
  double s = 0.0;
  const auto& v = c.vertices;
  for (std::size_t i = 0; i < v.size(); ++i) s += std::arg((v[(i + 1) % v.size()] - p) / (v[i] - p));
  return s / (2 * kPi);
}

BoundingBox bounding_box(const ContourSet& set) {
  BoundingBox b{1e300, -1e300, 1e300, -1e300};
  auto add = [&](Point p) {
    b.xmin = std::min(b.xmin, p.real());
    b.xmax = std::max(b.xmax, p.real());
    b.ymin = std::min(b.ymin, p.imag());
    b.ymax = std::max(b.ymax, p.imag());
  };
  for (const Contour& c : set.contours) {
    if (c.kind == ContourKind::Circle) {
      add(c.center + Point(c.radius, c.radius));
      add(c.center - Point(c.radius, c.radius));
    } else {
      for (Point p : c.vertices) add(p);
    }
  }
  return b;
}

double characteristic_length(const ContourSet& set) {
  const BoundingBox b = bounding_box(set);
  return std::max(b.xmax - b.xmin, b.ymax - b.ymin);
}

}  // namespace condcap
