#include "crackscat/crack_geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace crackscat {

namespace {

double cross(const Vector& a, const Vector& b) { return a.x() * b.y() - a.y() * b.x(); }

// Orientation of (a, b, c) with a relative tolerance on the cross product.
int orientation(const Point& a, const Point& b, const Point& c) {
  const double v = cross(b - a, c - a);
  const double scale = (b - a).norm() * (c - a).norm();
  if (std::abs(v) <= 1e-14 * scale) return 0;
  return v > 0 ? 1 : -1;
}

bool on_segment(const Point& a, const Point& b, const Point& c) {
  return c.x() <= std::max(a.x(), b.x()) + 1e-14 && c.x() >= std::min(a.x(), b.x()) - 1e-14 &&
         c.y() <= std::max(a.y(), b.y()) + 1e-14 && c.y() >= std::min(a.y(), b.y()) - 1e-14;
}

double v_grading(double p, double s) {
  const double r = (kPi - s) / kPi;
  return (1.0 / p - 0.5) * r * r * r + (s - kPi) / (p * kPi) + 0.5;
}

double dv_grading(double p, double s) {
  const double r = (kPi - s) / kPi;
  return -3.0 / kPi * (1.0 / p - 0.5) * r * r + 1.0 / (p * kPi);
}

double point_segment_distance(const Point& p, const Point& a, const Point& b) {
  const Vector ab = b - a;
  const double u = std::clamp((p - a).dot(ab) / ab.squaredNorm(), 0.0, 1.0);
  return (p - (a + u * ab)).norm();
}

}  // namespace

bool segments_intersect(const Point& a, const Point& b, const Point& c, const Point& d) {
  const int o1 = orientation(a, b, c);
  const int o2 = orientation(a, b, d);
  const int o3 = orientation(c, d, a);
  const int o4 = orientation(c, d, b);
  if (o1 != o2 && o3 != o4) return true;
  if (o1 == 0 && on_segment(a, b, c)) return true;
  if (o2 == 0 && on_segment(a, b, d)) return true;
  if (o3 == 0 && on_segment(c, d, a)) return true;
  if (o4 == 0 && on_segment(c, d, b)) return true;
  return false;
}

PiecewiseLinearCrack::PiecewiseLinearCrack(std::vector<Point> corners) : corners_(std::move(corners)) {
  if (corners_.size() < 2) throw GeometryError("crack needs at least two corners");
  for (const auto& c : corners_) {
    if (!c.allFinite()) throw GeometryError("crack corner is not finite");
  }
  const int nseg = segments();
  for (int l = 0; l < nseg; ++l) {
    if ((corners_[l + 1] - corners_[l]).norm() == 0.0) {
      throw GeometryError("degenerate segment " + std::to_string(l));
    }
  }
  for (int a = 0; a < nseg; ++a) {
    // Adjacent segments share a corner; they intersect improperly only when folding back.
    if (a + 1 < nseg) {
      const Vector u = corners_[a + 1] - corners_[a];
      const Vector v = corners_[a + 2] - corners_[a + 1];
      if (std::abs(cross(u, v)) <= 1e-14 * u.norm() * v.norm() && u.dot(v) < 0.0) {
        throw GeometryError("segments " + std::to_string(a) + " and " + std::to_string(a + 1) + " overlap");
      }
    }
    for (int b = a + 2; b < nseg; ++b) {
      if (segments_intersect(corners_[a], corners_[a + 1], corners_[b], corners_[b + 1])) {
        throw GeometryError("segments " + std::to_string(a) + " and " + std::to_string(b) + " intersect");
      }
    }
  }
}

double PiecewiseLinearCrack::length() const {
  double len = 0.0;
  for (int l = 0; l < segments(); ++l) len += (corners_[l + 1] - corners_[l]).norm();
  return len;
}

int PiecewiseLinearCrack::segment_of(double t) const {
  const int nseg = segments();
  const int l = static_cast<int>(std::floor(t * nseg / (2.0 * kPi)));
  return std::clamp(l, 0, nseg - 1);
}

PiecewiseLinearCrack::Sample PiecewiseLinearCrack::parametrize(double t) const {
  const int nseg = segments();
  const int l = segment_of(t);
  const double scale = nseg / (2.0 * kPi);
  const double lambda = t * scale - l;
  const Vector edge = corners_[l + 1] - corners_[l];
  return {corners_[l] + lambda * edge, scale * edge};
}

PiecewiseLinearCrack PiecewiseLinearCrack::translated(const Vector& a) const {
  std::vector<Point> moved = corners_;
  for (auto& c : moved) c += a;
  return PiecewiseLinearCrack(std::move(moved));
}

double PiecewiseLinearCrack::distance_to(const Point& p) const {
  double best = std::numeric_limits<double>::infinity();
  for (int l = 0; l < segments(); ++l) {
    best = std::min(best, point_segment_distance(p, corners_[l], corners_[l + 1]));
  }
  return best;
}

Grading grading_function(double p, double s) {
  const double v = v_grading(p, s);
  const double u = v_grading(p, 2.0 * kPi - s);
  if (v <= 0.0) return {0.0, 0.0};
  if (u <= 0.0) return {2.0 * kPi, 0.0};
  const double vp = std::pow(v, p);
  const double up = std::pow(u, p);
  const double den = vp + up;
  const double dvp = p * std::pow(v, p - 1.0) * dv_grading(p, s);
  const double dup = -p * std::pow(u, p - 1.0) * dv_grading(p, 2.0 * kPi - s);
  return {2.0 * kPi * vp / den, 2.0 * kPi * (dvp * up - vp * dup) / (den * den)};
}

double GradedMesh::max_spacing() const {
  double h = 0.0;
  for (std::size_t j = 0; j + 1 < knots.size(); ++j) h = std::max(h, (knots[j + 1] - knots[j]).norm());
  return h;
}

GradedMesh build_mesh(const PiecewiseLinearCrack& crack, const GradingParams& params) {
  const int nseg = crack.segments();
  if (!(params.p >= 2.0)) throw GeometryError("grading exponent p must be >= 2");
  if (params.n < 1) throw GeometryError("mesh parameter n must be positive");
  if ((2 * params.n) % nseg != 0) {
    throw GeometryError("2n = " + std::to_string(2 * params.n) + " is not divisible by the segment count " +
                        std::to_string(nseg));
  }
  GradedMesh mesh;
  mesh.n = params.n;
  mesh.segments = nseg;
  mesh.p = params.p;
  const int m = 2 * params.n;
  const int per_segment = m / nseg;
  const double scale = nseg / (2.0 * kPi);
  for (int j = 0; j < m; ++j) {
    const double s = kPi / (2.0 * params.n) + j * kPi / params.n;
    const int l = j / per_segment;
    const auto g = grading_function(params.p, nseg * s - 2.0 * l * kPi);
    const double t = (2.0 * l * kPi + g.w) / nseg;
    const double lambda = g.w / (2.0 * kPi);
    const Vector edge = crack.corners()[l + 1] - crack.corners()[l];
    const Vector dx = scale * edge;
    mesh.s.push_back(s);
    mesh.t.push_back(t);
    mesh.wprime.push_back(g.dw);
    mesh.knots.push_back(crack.corners()[l] + lambda * edge);
    mesh.tangent.push_back(dx);
    mesh.speed.push_back(dx.norm());
    mesh.normal.push_back(Vector{dx.y(), -dx.x()} / dx.norm());
    mesh.segment.push_back(l);
    mesh.local.push_back(lambda);
  }
  return mesh;
}

GradingParams grading_for(const PiecewiseLinearCrack& crack, int knots_per_segment, double p) {
  if (knots_per_segment < 2 || knots_per_segment % 2 != 0) {
    throw GeometryError("knots per segment must be a positive even number");
  }
  return {p, knots_per_segment * crack.segments() / 2};
}

double hausdorff_distance(const PiecewiseLinearCrack& a, const PiecewiseLinearCrack& b, int samples_per_segment) {
  auto one_sided = [samples_per_segment](const PiecewiseLinearCrack& from, const PiecewiseLinearCrack& to) {
    double worst = 0.0;
    const auto& c = from.corners();
    for (int l = 0; l < from.segments(); ++l) {
      for (int i = 0; i <= samples_per_segment; ++i) {
        const double u = static_cast<double>(i) / samples_per_segment;
        worst = std::max(worst, to.distance_to(c[l] + u * (c[l + 1] - c[l])));
      }
    }
    return worst;
  };
  return std::max(one_sided(a, b), one_sided(b, a));
}

}  // namespace crackscat
