#include "crackscat/forward_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "crackscat/specfun.hpp"

namespace crackscat {

IncidentField IncidentField::plane_wave(WaveNumber k, const Vector& d, Complex amplitude) {
  if (std::abs(d.norm() - 1.0) > 1e-12) throw std::invalid_argument("plane wave direction must be a unit vector");
  return IncidentField(k, PlaneWave{d}, amplitude);
}

IncidentField IncidentField::point_source(WaveNumber k, const Point& y0, Complex amplitude) {
  if (!y0.allFinite()) throw std::invalid_argument("point source location must be finite");
  return IncidentField(k, PointSource{y0}, amplitude);
}

Complex IncidentField::value(const Point& x) const {
  const double k = k_.value();
  if (const auto* pw = std::get_if<PlaneWave>(&kind_)) {
    return amplitude_ * std::exp(kI * (k * x.dot(pw->d)));
  }
  const auto& ps = std::get<PointSource>(kind_);
  return amplitude_ * specfun::fundamental_solution(k_, x, ps.y0);
}

Complex IncidentField::normal_derivative(const Point& x, const Vector& nu) const {
  const double k = k_.value();
  if (const auto* pw = std::get_if<PlaneWave>(&kind_)) {
    return amplitude_ * kI * k * pw->d.dot(nu) * std::exp(kI * (k * x.dot(pw->d)));
  }
  const auto& ps = std::get<PointSource>(kind_);
  const Vector diff = x - ps.y0;
  const double r = diff.norm();
  const auto b = specfun::bessel_jy01(k * r);
  // d/dnu (i/4) H0(k r) = -(i k / 4) H1(k r) (x - y0).nu / r
  return amplitude_ * (-0.25 * kI * k) * Complex{b.j1, b.y1} * diff.dot(nu) / r;
}

IncidentField IncidentField::translated(const Vector& a) const {
  if (const auto* pw = std::get_if<PlaneWave>(&kind_)) {
    return IncidentField(k_, *pw, amplitude_ * std::exp(-kI * (k_.value() * a.dot(pw->d))));
  }
  return IncidentField(k_, PointSource{std::get<PointSource>(kind_).y0 + a}, amplitude_);
}

std::vector<double> log_quadrature_weights(int n) {
  const int m = 2 * n;
  std::vector<double> r(static_cast<std::size_t>(m));
  for (int d = 0; d < m; ++d) {
    const double delta = d * kPi / n;
    double sum = 0.0;
    for (int mm = 1; mm < n; ++mm) sum += std::cos(mm * delta) / mm;
    r[static_cast<std::size_t>(d)] = -(2.0 * kPi / n) * sum - (kPi / (static_cast<double>(n) * n)) * std::cos(n * delta);
  }
  return r;
}

CMatrix assemble_single_layer(const GradedMesh& mesh, WaveNumber k) {
  const int m = mesh.size();
  const int n = mesh.n;
  const double kk = k.value();
  const auto rw = log_quadrature_weights(n);
  const double h = kPi / n;
  CMatrix a(m, m);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < m; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    for (int j = 0; j < m; ++j) {
      const auto uj = static_cast<std::size_t>(j);
      const double speed = mesh.speed[uj];
      const double rij = rw[static_cast<std::size_t>(((i - j) % m + m) % m)];
      if (i == j) {
        const double m1 = -speed / (2.0 * kPi);
        const Complex m2 = (0.5 * kI - specfun::kEulerGamma / kPi - std::log(0.5 * kk * speed) / kPi) * speed +
                           2.0 * m1 * std::log(mesh.wprime[ui]);
        a(i, j) = rij * m1 + h * m2;
        continue;
      }
      const double r = (mesh.knots[ui] - mesh.knots[uj]).norm();
      const auto b = specfun::bessel_jy01(kk * r);
      const double m1 = -b.j0 * speed / (2.0 * kPi);
      const Complex full = 0.5 * kI * Complex{b.j0, b.y0} * speed;
      const double sn = std::sin(0.5 * (mesh.s[ui] - mesh.s[uj]));
      const Complex m2 = full - m1 * std::log(4.0 * sn * sn);
      a(i, j) = rij * m1 + h * m2;
    }
  }
  return a;
}

DensitySolution solve_density(const PiecewiseLinearCrack& crack, const GradingParams& grading,
                              const IncidentField& incident, const SolverOptions& options) {
  auto mesh = std::make_shared<const GradedMesh>(build_mesh(crack, grading));
  return solve_density(std::move(mesh), crack, incident, options);
}

DensitySolution solve_density(std::shared_ptr<const GradedMesh> mesh, const PiecewiseLinearCrack& crack,
                              const IncidentField& incident, const SolverOptions& options) {
  if (const auto* ps = std::get_if<PointSource>(&incident.kind())) {
    if (crack.distance_to(ps->y0) <= 0.0) throw DomainError("point source lies on the crack");
  }
  auto system = std::make_shared<const CMatrix>(assemble_single_layer(*mesh, incident.k()));
  const int m = mesh->size();
  CVector rhs(m);
  for (int j = 0; j < m; ++j) rhs(j) = -2.0 * incident.value(mesh->knots[static_cast<std::size_t>(j)]);

  Eigen::PartialPivLU<CMatrix> lu(*system);
  const double rcond = lu.rcond();
  if (!(rcond >= options.min_rcond)) {
    throw SingularSystemError("single-layer system is numerically singular", rcond);
  }
  DensitySolution sol{mesh, incident, lu.solve(rhs), system, rcond, 0.0};
  const double fn = rhs.norm();
  sol.residual = fn > 0.0 ? (*system * sol.wpsi - rhs).norm() / fn : sol.wpsi.norm();
  return sol;
}

FieldSample scattered_field(const DensitySolution& sol, const Point& x) {
  const auto& mesh = *sol.mesh;
  const double k = sol.incident.k().value();
  const double h = kPi / mesh.n;
  Complex acc{0.0, 0.0};
  double nearest = std::numeric_limits<double>::infinity();
  for (int j = 0; j < mesh.size(); ++j) {
    const auto uj = static_cast<std::size_t>(j);
    const double r = (x - mesh.knots[uj]).norm();
    if (r == 0.0) throw DomainError("scattered_field: evaluation point on a quadrature knot");
    nearest = std::min(nearest, r);
    const auto b = specfun::bessel_jy01(k * r);
    acc += 0.25 * kI * Complex{b.j0, b.y0} * mesh.speed[uj] * sol.wpsi(j);
  }
  return {h * acc, nearest < 2.0 * mesh.max_spacing()};
}

FarFieldPattern farfield(const DensitySolution& sol, std::span<const double> angles) {
  const auto& mesh = *sol.mesh;
  const WaveNumber k = sol.incident.k();
  const Complex pref = (kPi / mesh.n) * specfun::farfield_gamma(k);
  FarFieldPattern out;
  out.angles.assign(angles.begin(), angles.end());
  out.k = k.value();
  out.values.resize(static_cast<Eigen::Index>(angles.size()));
  for (std::size_t p = 0; p < angles.size(); ++p) {
    const Point xhat = direction(angles[p]);
    Complex acc{0.0, 0.0};
    for (int j = 0; j < mesh.size(); ++j) {
      const auto uj = static_cast<std::size_t>(j);
      acc += std::exp(-kI * (k.value() * xhat.dot(mesh.knots[uj]))) * mesh.speed[uj] * sol.wpsi(j);
    }
    out.values(static_cast<Eigen::Index>(p)) = pref * acc;
  }
  return out;
}

std::vector<double> angle_grid(double start, double step, int count) {
  std::vector<double> a(static_cast<std::size_t>(count));
  for (int p = 0; p < count; ++p) a[static_cast<std::size_t>(p)] = start + p * step;
  return a;
}

std::vector<double> full_circle(int L) { return angle_grid(0.0, 2.0 * kPi / L, L); }

FarFieldPattern simulate_farfield(const PiecewiseLinearCrack& crack, const IncidentField& incident,
                                  const GradingParams& grading, std::span<const double> angles) {
  return farfield(solve_density(crack, grading, incident), angles);
}

}  // namespace crackscat
