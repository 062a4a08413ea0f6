#pragma once

#include <span>
#include <vector>

#include "crackscat/types.hpp"

namespace crackscat {

/// Open polyline P_0..P_N, parametrized over [0, 2pi] with each segment
/// occupying an interval of length 2pi/N and x(2 l pi / N) = P_l.
class PiecewiseLinearCrack {
 public:
  /// Throws GeometryError for fewer than two corners, repeated consecutive
  /// corners, or self-intersection.
  explicit PiecewiseLinearCrack(std::vector<Point> corners);

  [[nodiscard]] const std::vector<Point>& corners() const { return corners_; }
  [[nodiscard]] int segments() const { return static_cast<int>(corners_.size()) - 1; }
  [[nodiscard]] double length() const;

  struct Sample {
    Point x;
    Vector dx;  // dx/dt, constant on each segment
  };
  /// t in [0, 2pi); t = 2pi is mapped to the last corner.
  [[nodiscard]] Sample parametrize(double t) const;
  [[nodiscard]] int segment_of(double t) const;

  [[nodiscard]] PiecewiseLinearCrack translated(const Vector& a) const;
  /// Euclidean distance from p to the polyline.
  [[nodiscard]] double distance_to(const Point& p) const;

 private:
  std::vector<Point> corners_;
};

/// True if closed segments [a,b] and [c,d] share a point.
bool segments_intersect(const Point& a, const Point& b, const Point& c, const Point& d);

struct GradingParams {
  double p = 3.0;
  int n = 64;  // the mesh has 2n knots
};

struct Grading {
  double w;
  double dw;
};
/// Substitution w~ on [0, 2pi] clustering nodes at both ends; derivative vanishes to order p-1.
Grading grading_function(double p, double s);

/// Graded Nystrom mesh on a crack. All per-knot arrays have length 2n.
struct GradedMesh {
  int n = 0;
  int segments = 0;
  double p = 0.0;
  std::vector<double> s;       // s_j = pi/(2n) + j pi/n
  std::vector<double> t;       // t_j = w(s_j)
  std::vector<double> wprime;  // w'(s_j)
  std::vector<Point> knots;    // x(t_j)
  std::vector<Vector> tangent; // x'(t_j)
  std::vector<double> speed;   // |x'(t_j)|
  std::vector<Vector> normal;  // (x2', -x1') / |x'|
  std::vector<int> segment;    // segment index of each knot
  std::vector<double> local;   // affine coordinate of the knot inside its segment, in (0,1)

  [[nodiscard]] int size() const { return 2 * n; }
  [[nodiscard]] int knots_per_segment() const { return 2 * n / segments; }
  /// Largest distance between consecutive knots.
  [[nodiscard]] double max_spacing() const;
};

/// Throws GeometryError if 2n is not a multiple of the segment count or p < 2.
GradedMesh build_mesh(const PiecewiseLinearCrack& crack, const GradingParams& params);

/// Grading with a fixed even number of knots per segment: n = knots_per_segment * N / 2.
GradingParams grading_for(const PiecewiseLinearCrack& crack, int knots_per_segment, double p = 3.0);

/// Hausdorff distance between two polylines, from dense sampling of both.
double hausdorff_distance(const PiecewiseLinearCrack& a, const PiecewiseLinearCrack& b, int samples_per_segment = 200);

}  // namespace crackscat
