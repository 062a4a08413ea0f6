#pragma once

// Sampling indicators: contrast sampling against shifted cracks, point sources
// and disks, and the one-wave factorization indicator with its radius scan and
// support accumulation.

#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "crackscat/crack_geometry.hpp"
#include "crackscat/forward_solver.hpp"
#include "crackscat/test_scatterers.hpp"
#include "crackscat/types.hpp"

namespace crackscat {

/// Stand-in for +infinity when a misfit vanishes. Never serialized as inf.
inline constexpr double kIndicatorInfinity = std::numeric_limits<double>::max();
inline bool is_infinite_sentinel(double v) { return v == kIndicatorInfinity; }

/// sum_p w_p |u_p - v_p|^2
double weighted_misfit(const CVector& u, const CVector& v, const RVector& weights);
/// 1 / misfit, or the sentinel for a zero misfit.
double inverse_misfit(double misfit);

struct ShiftSample {
  Vector a;
};
struct PointSample {
  Point p;
};
struct DiskSample {
  Point p;
  double r;
};
using SampleDescriptor = std::variant<ShiftSample, PointSample, DiskSample>;

struct IndicatorGrid {
  std::vector<SampleDescriptor> samples;
  std::vector<double> values;  // >= 0; kIndicatorInfinity marks a zero misfit
  double k = 0.0;
  std::string incidence;
  std::string aperture;
};

struct RegularizationParams {
  RegularizationParams(double alpha = 1e-8, std::optional<double> epsilon = std::nullopt);
  double alpha;
  std::optional<double> epsilon;
};

/// Contrast against the same crack shifted by each a. a = 0 is skipped.
IndicatorGrid contrast_crack(const FarFieldPattern& data, const PiecewiseLinearCrack& crack,
                             const IncidentField& incident, std::span<const Vector> shifts,
                             const GradingParams& grading, const RVector& weights);

double contrast_point_source(const FarFieldPattern& data, const Point& p, Complex tau, const RVector& weights);
IndicatorGrid contrast_point_source_grid(const FarFieldPattern& data, std::span<const Point> points, Complex tau,
                                         const RVector& weights);

/// Contrast against disks of radius R centered at each point, excited by the plane wave `incident`.
IndicatorGrid contrast_disk(const FarFieldPattern& data, std::span<const Point> centers, double radius,
                            const BoundaryKind& kind, const IncidentField& incident, const RVector& weights);

/// {sum_n w(lambda_n) |(U, f_n)|^2}^{-1} with w = 1/lambda (raw, lambda < 1e-14 lambda_0 dropped)
/// or w = lambda/(alpha + lambda)^2 when alpha is given.
double factorization_indicator(const CVector& data, const Eigensystem& eig, std::optional<double> alpha);
/// Same sum on an aperture grid; data and eigensystem must share that grid.
double factorization_indicator_la(const CVector& data, const Eigensystem& eig, std::optional<double> alpha);

/// Test disks of one boundary kind around a fixed center.
struct DiskScanSetup {
  DirectionGrid grid;
  double k = 1.0;
  BoundaryKind kind = Dirichlet{};
  double alpha = 1e-8;
  /// Analytic eigensystems need a full-circle grid; otherwise F_# is computed numerically.
  bool analytic = true;
};

/// Regularized indicator of disks B_r(center) for each radius.
std::vector<double> disk_indicator_curve(const CVector& data, const Point& center, std::span<const double> radii,
                                         const DiskScanSetup& setup);

struct RadiusScan {
  double r = 0.0;
  bool none_below = false;  // no radius fell below epsilon; r is 0
  double epsilon = 0.0;
  std::vector<double> radii;
  std::vector<double> values;
};

/// Largest radius with indicator < epsilon. epsilon defaults to sqrt(min * max) of the curve.
RadiusScan radius_scan(std::span<const double> radii, std::span<const double> values,
                       std::optional<double> epsilon);
RadiusScan radius_scan(const CVector& data, const Point& center, std::span<const double> radii,
                       const DiskScanSetup& setup, std::optional<double> epsilon);

struct SupportField {
  std::vector<Point> points;
  std::vector<int> counts;
  int max_count = 0;
  /// Points attaining max_count.
  [[nodiscard]] std::vector<Point> maximum_region() const;
};

/// Count of disks |x - P_j| <= r_j covering each evaluation point.
SupportField support_accumulate(std::span<const Point> centers, std::span<const double> radii,
                                std::span<const Point> points);

/// Uniform nx-by-ny lattice over [x0, x1] x [y0, y1], row-major in y.
std::vector<Point> lattice(double x0, double x1, int nx, double y0, double y1, int ny);

}  // namespace crackscat
