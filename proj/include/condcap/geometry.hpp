#pragma once

#include <complex>
#include <optional>
#include <string>
#include <vector>

namespace condcap {

using Point = std::complex<double>;

enum class Family { A, B, C, D, E, F, G, Explicit };
enum class Terminal { Outer, Inner };
enum class ContourKind { PolylineClosed, Slot, Circle };

// A boundary component.  Polylines are closed traversals: the last vertex
// joins the first.  Two-sided pieces (needles, tees, crosses) appear as an
// edge followed later by its exact reverse.
struct Contour {
  ContourKind kind = ContourKind::PolylineClosed;
  std::vector<Point> vertices;
  Point center{};
  double radius = 0.0;
  Terminal terminal = Terminal::Outer;
  // +1 counterclockwise, -1 clockwise, 0 when the traversal has no sense
  // (a bare slot).  After build_contours the domain lies to the left.
  int orientation = 0;

  double potential() const { return terminal == Terminal::Inner ? 1.0 : 0.0; }
};

struct ContourSet {
  std::vector<Contour> contours;
  bool bounded = true;
};

struct CondenserSpec {
  Family family = Family::Explicit;
  std::vector<double> x, y, l, l1, l2;
  std::optional<ContourSet> contours;
};

enum class ArcLabel { F0, F1, N };

// Edges first_edge..last_edge (cyclic, inclusive) of a half-domain polygon.
struct Arc {
  int first_edge = 0;
  int last_edge = 0;
  ArcLabel label = ArcLabel::N;
};

// Upper half of a symmetric condenser.  Edge k joins z[k] to z[(k+1) % K].
// The boundary is traversed with the domain on the left.  For an unbounded
// domain the closing edge is the axis arc that passes through infinity.
struct HalfDomainPolygon {
  std::vector<Point> z;
  std::vector<double> alpha;  // interior angle divided by pi
  std::vector<ArcLabel> edge_label;
  std::vector<Arc> arcs;
  bool bounded = true;
};

struct BoundingBox {
  double xmin = 0, xmax = 0, ymin = 0, ymax = 0;
};

Family family_from_string(const std::string& s);
std::string to_string(Family f);
std::string to_string(ArcLabel a);

CondenserSpec parse_spec(const std::string& json_text);
std::string to_json(const CondenserSpec& spec);
void validate(const CondenserSpec& spec);

ContourSet build_contours(const CondenserSpec& spec);
void validate(const ContourSet& set);
HalfDomainPolygon half_domain(const ContourSet& set);
ContourSet reflect(const HalfDomainPolygon& poly);

CondenserSpec scaled(const CondenserSpec& spec, double s);
ContourSet scaled(const ContourSet& set, double s);

std::vector<Point> polygonize(const Contour& circle, int n = 512);
std::vector<Point> canonical_loop(const std::vector<Point>& loop, double tol = 1e-12);
bool same_loop(const std::vector<Point>& a, const std::vector<Point>& b, double tol = 1e-14);
int traversal_orientation(const std::vector<Point>& loop);
double signed_area(const std::vector<Point>& loop);
double winding_number(const Contour& c, Point p);
BoundingBox bounding_box(const ContourSet& set);
double characteristic_length(const ContourSet& set);

}  // namespace condcap
