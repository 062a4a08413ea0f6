#include "crackscat/indicators.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "crackscat/numfmt.hpp"
#include "crackscat/specfun.hpp"

namespace crackscat {

namespace {

std::string describe(const IncidentField& inc) {
  if (const auto* pw = std::get_if<PlaneWave>(&inc.kind())) {
    return "plane wave d=(" + format_double(pw->d.x()) + "," + format_double(pw->d.y()) + ")";
  }
  const auto& y0 = std::get<PointSource>(inc.kind()).y0;
  return "point source y0=(" + format_double(y0.x()) + "," + format_double(y0.y()) + ")";
}

std::string describe(const std::vector<double>& angles) {
  if (angles.empty()) return "empty";
  return "[" + format_double(angles.front()) + "," + format_double(angles.back()) + "] (" +
         std::to_string(angles.size()) + " directions)";
}

void check_weights(const FarFieldPattern& data, const RVector& weights) {
  if (weights.size() != data.size()) throw std::invalid_argument("weights do not match the data directions");
}

}  // namespace

double weighted_misfit(const CVector& u, const CVector& v, const RVector& weights) {
  if (u.size() != v.size() || u.size() != weights.size()) throw std::invalid_argument("misfit size mismatch");
  return (weights.array() * (u - v).array().abs2()).sum();
}

double inverse_misfit(double misfit) { return misfit > 0.0 ? 1.0 / misfit : kIndicatorInfinity; }

RegularizationParams::RegularizationParams(double a, std::optional<double> eps) : alpha(a), epsilon(eps) {
  if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be positive");
  if (epsilon && !(*epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
}

IndicatorGrid contrast_crack(const FarFieldPattern& data, const PiecewiseLinearCrack& crack,
                             const IncidentField& incident, std::span<const Vector> shifts,
                             const GradingParams& grading, const RVector& weights) {
  check_weights(data, weights);
  IndicatorGrid grid{{}, {}, data.k, describe(incident), describe(data.angles)};
  const auto mesh = std::make_shared<const GradedMesh>(build_mesh(crack, grading));
  for (const auto& a : shifts) {
    if (a.norm() == 0.0) continue;
    const auto moved = crack.translated(a);
    // A rigid shift moves every knot by a; the graded mesh is otherwise unchanged.
    auto shifted_mesh = std::make_shared<GradedMesh>(*mesh);
    for (auto& x : shifted_mesh->knots) x += a;
    const auto sol = solve_density(shifted_mesh, moved, incident);
    const auto ff = farfield(sol, data.angles);
    grid.samples.emplace_back(ShiftSample{a});
    grid.values.push_back(inverse_misfit(weighted_misfit(data.values, ff.values, weights)));
  }
  return grid;
}

double contrast_point_source(const FarFieldPattern& data, const Point& p, Complex tau, const RVector& weights) {
  check_weights(data, weights);
  if (tau == Complex{0.0, 0.0}) throw std::invalid_argument("scattering strength tau must be nonzero");
  const WaveNumber k(data.k);
  CVector model(data.size());
  for (int q = 0; q < data.size(); ++q) model(q) = tau * specfun::point_source_farfield(k, data.direction_at(q), p);
  return inverse_misfit(weighted_misfit(data.values, model, weights));
}

IndicatorGrid contrast_point_source_grid(const FarFieldPattern& data, std::span<const Point> points, Complex tau,
                                         const RVector& weights) {
  IndicatorGrid grid{{}, std::vector<double>(points.size()), data.k, "", describe(data.angles)};
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < points.size(); ++i) {
    grid.values[i] = contrast_point_source(data, points[i], tau, weights);
  }
  for (const auto& p : points) grid.samples.emplace_back(PointSample{p});
  return grid;
}

IndicatorGrid contrast_disk(const FarFieldPattern& data, std::span<const Point> centers, double radius,
                            const BoundaryKind& kind, const IncidentField& incident, const RVector& weights) {
  check_weights(data, weights);
  const auto* pw = std::get_if<PlaneWave>(&incident.kind());
  if (pw == nullptr) throw std::invalid_argument("disk contrast needs plane-wave incidence");
  const WaveNumber k = incident.k();
  IndicatorGrid grid{{}, std::vector<double>(centers.size()), data.k, describe(incident), describe(data.angles)};
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < centers.size(); ++i) {
    const DiskScatterer disk(centers[i], radius, kind);
    const CVector model = incident.amplitude() * disk_farfield_pattern(disk, pw->d, data.angles, k);
    grid.values[i] = inverse_misfit(weighted_misfit(data.values, model, weights));
  }
  for (const auto& c : centers) grid.samples.emplace_back(DiskSample{c, radius});
  return grid;
}

double factorization_indicator(const CVector& data, const Eigensystem& eig, std::optional<double> alpha) {
  if (data.size() != eig.vectors.rows()) throw std::invalid_argument("data and eigensystem grids differ");
  if (alpha && !(*alpha > 0.0)) throw std::invalid_argument("alpha must be positive");
  if (eig.size() == 0) return kIndicatorInfinity;
  const CVector wd = eig.weights.cwiseProduct(data);
  // (U, f_n) = sum_p w_p U_p conj(f_n,p)
  const CVector coeff = eig.vectors.adjoint() * wd;
  const double floor = 1e-14 * eig.lambdas.maxCoeff();
  double sum = 0.0;
  for (int n = 0; n < eig.size(); ++n) {
    const double lam = eig.lambdas(n);
    const double c2 = std::norm(coeff(n));
    if (alpha) {
      sum += lam / ((*alpha + lam) * (*alpha + lam)) * c2;
    } else if (lam > floor && lam > 0.0) {
      sum += c2 / lam;
    }
  }
  return inverse_misfit(sum);
}

double factorization_indicator_la(const CVector& data, const Eigensystem& eig, std::optional<double> alpha) {
  return factorization_indicator(data, eig, alpha);
}

std::vector<double> disk_indicator_curve(const CVector& data, const Point& center, std::span<const double> radii,
                                         const DiskScanSetup& setup) {
  if (data.size() != setup.grid.size()) throw std::invalid_argument("data does not match the scan grid");
  const WaveNumber k(setup.k);
  std::vector<double> out(radii.size());
  if (setup.analytic && !radii.empty()) {
    // The analytic eigenvectors depend on the center only, so the data coefficients are shared
    // by every radius; the largest disk carries the most orders.
    const double rmax = *std::max_element(radii.begin(), radii.end());
    const auto eig = disk_eigensystem(DiskScatterer(center, rmax, setup.kind), setup.grid, k);
    const CVector coeff = eig.vectors.adjoint() * eig.weights.cwiseProduct(data);
    const int nmax = (eig.size() - 1) / 2;
    std::vector<double> c2(static_cast<std::size_t>(2 * nmax + 1));
    for (int j = 0; j < eig.size(); ++j) {
      c2[static_cast<std::size_t>(eig.orders[static_cast<std::size_t>(j)] + nmax)] = std::norm(coeff(j));
    }
    const double scale = std::sqrt(8.0 * kPi / setup.k);
    const double alpha = setup.alpha;
#pragma omp parallel for schedule(dynamic)
    for (std::size_t i = 0; i < radii.size(); ++i) {
      const DiskScatterer disk(center, radii[i], setup.kind);
      const int nn = std::min(disk_series_order(disk, k), (setup.grid.size() - 1) / 2);
      const auto c = disk_coefficients(disk, k, nn);
      double sum = 0.0;
      for (int n = -nn; n <= nn; ++n) {
        const double lam = scale * std::abs(c[static_cast<std::size_t>(std::abs(n))]);
        sum += lam / ((alpha + lam) * (alpha + lam)) * c2[static_cast<std::size_t>(n + nmax)];
      }
      out[i] = inverse_misfit(sum);
    }
    return out;
  }
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < radii.size(); ++i) {
    const DiskScatterer disk(center, radii[i], setup.kind);
    const auto eig = setup.analytic ? disk_eigensystem(disk, setup.grid, k)
                                    : disk_fsharp_eigensystem(disk, setup.grid, k);
    out[i] = factorization_indicator(data, eig, setup.alpha);
  }
  return out;
}

RadiusScan radius_scan(std::span<const double> radii, std::span<const double> values,
                       std::optional<double> epsilon) {
  if (radii.size() != values.size() || radii.empty()) throw std::invalid_argument("radius scan needs matching data");
  for (std::size_t i = 1; i < radii.size(); ++i) {
    if (!(radii[i] > radii[i - 1])) throw std::invalid_argument("radii must be increasing");
  }
  RadiusScan scan;
  scan.radii.assign(radii.begin(), radii.end());
  scan.values.assign(values.begin(), values.end());
  if (epsilon) {
    if (!(*epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
    scan.epsilon = *epsilon;
  } else {
    double lo = kIndicatorInfinity;
    double hi = 0.0;
    for (double v : values) {
      if (is_infinite_sentinel(v)) continue;
      if (v > 0.0) lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    scan.epsilon = hi > 0.0 ? std::sqrt(lo * hi) : 1.0;
  }
  scan.none_below = true;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i] < scan.epsilon) {
      scan.r = radii[i];
      scan.none_below = false;
    }
  }
  return scan;
}

RadiusScan radius_scan(const CVector& data, const Point& center, std::span<const double> radii,
                       const DiskScanSetup& setup, std::optional<double> epsilon) {
  const auto values = disk_indicator_curve(data, center, radii, setup);
  return radius_scan(radii, values, epsilon);
}

std::vector<Point> SupportField::maximum_region() const {
  std::vector<Point> out;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (counts[i] == max_count) out.push_back(points[i]);
  }
  return out;
}

SupportField support_accumulate(std::span<const Point> centers, std::span<const double> radii,
                                std::span<const Point> points) {
  if (centers.size() != radii.size()) throw std::invalid_argument("one radius per center required");
  SupportField f;
  f.points.assign(points.begin(), points.end());
  f.counts.assign(points.size(), 0);
  for (std::size_t i = 0; i < points.size(); ++i) {
    for (std::size_t j = 0; j < centers.size(); ++j) {
      if ((points[i] - centers[j]).norm() <= radii[j]) ++f.counts[i];
    }
    f.max_count = std::max(f.max_count, f.counts[i]);
  }
  return f;
}

std::vector<Point> lattice(double x0, double x1, int nx, double y0, double y1, int ny) {
  if (nx < 1 || ny < 1) throw std::invalid_argument("lattice needs at least one point per axis");
  std::vector<Point> pts;
  pts.reserve(static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny));
  for (int j = 0; j < ny; ++j) {
    const double y = ny == 1 ? y0 : y0 + (y1 - y0) * j / (ny - 1);
    for (int i = 0; i < nx; ++i) pts.emplace_back(nx == 1 ? x0 : x0 + (x1 - x0) * i / (nx - 1), y);
  }
  return pts;
}

}  // namespace crackscat
