#pragma once

// Nystrom solver for sound-soft scattering by a piecewise-linear crack.
//
// The scattered field is the single-layer potential u^s = S phi. On the graded
// mesh the unknown is the product w'(s_j) phi(x(t_j)) (the "W Psi" vector),
// which stays bounded where phi is singular at tips and corners.

#include <memory>
#include <span>
#include <variant>
#include <vector>

#include "crackscat/crack_geometry.hpp"
#include "crackscat/types.hpp"

namespace crackscat {

struct PlaneWave {
  Vector d;
};
struct PointSource {
  Point y0;
};

class IncidentField {
 public:
  static IncidentField plane_wave(WaveNumber k, const Vector& d, Complex amplitude = 1.0);
  static IncidentField point_source(WaveNumber k, const Point& y0, Complex amplitude = 1.0);

  [[nodiscard]] WaveNumber k() const { return k_; }
  [[nodiscard]] const std::variant<PlaneWave, PointSource>& kind() const { return kind_; }
  [[nodiscard]] Complex amplitude() const { return amplitude_; }
  [[nodiscard]] bool is_plane_wave() const { return std::holds_alternative<PlaneWave>(kind_); }

  [[nodiscard]] Complex value(const Point& x) const;
  /// d/dnu of the incident field at x for unit normal nu.
  [[nodiscard]] Complex normal_derivative(const Point& x, const Vector& nu) const;
  /// The field x -> u(x - a).
  [[nodiscard]] IncidentField translated(const Vector& a) const;

 private:
  IncidentField(WaveNumber k, std::variant<PlaneWave, PointSource> kind, Complex amplitude)
      : k_(k), kind_(kind), amplitude_(amplitude) {}
  WaveNumber k_;
  std::variant<PlaneWave, PointSource> kind_;
  Complex amplitude_;
};

/// R_j(s_i) depends only on (i - j) mod 2n; entry m is R at s_i - s_j = m pi / n.
std::vector<double> log_quadrature_weights(int n);

/// M_corner = R_j(s_i) M1 + (pi/n) M2~, discretizing 2 S on the crack.
CMatrix assemble_single_layer(const GradedMesh& mesh, WaveNumber k);

struct DensitySolution {
  std::shared_ptr<const GradedMesh> mesh;
  IncidentField incident;
  CVector wpsi;   // w'(s_j) phi(x(t_j))
  std::shared_ptr<const CMatrix> system;  // M_corner
  double rcond = 0.0;
  double residual = 0.0;  // ||M wpsi - F|| / ||F||
};

struct SolverOptions {
  double min_rcond = 1e-13;
};

/// Throws SingularSystemError when the reciprocal condition estimate is below options.min_rcond
/// and DomainError when a point source sits on the crack.
DensitySolution solve_density(const PiecewiseLinearCrack& crack, const GradingParams& grading,
                              const IncidentField& incident, const SolverOptions& options = {});
DensitySolution solve_density(std::shared_ptr<const GradedMesh> mesh, const PiecewiseLinearCrack& crack,
                              const IncidentField& incident, const SolverOptions& options = {});

struct FieldSample {
  Complex value;
  bool near_boundary = false;  // quadrature is unreliable this close to the crack
};

/// Single-layer potential at x off the crack.
FieldSample scattered_field(const DensitySolution& sol, const Point& x);

/// Samples of u^infty on unit directions at the given polar angles.
struct FarFieldPattern {
  std::vector<double> angles;  // strictly increasing
  CVector values;
  double k = 0.0;

  [[nodiscard]] int size() const { return static_cast<int>(angles.size()); }
  [[nodiscard]] Point direction_at(int p) const { return direction(angles[static_cast<std::size_t>(p)]); }
};

FarFieldPattern farfield(const DensitySolution& sol, std::span<const double> angles);

/// Angles theta_p = start + p * step for p = 0..count-1.
std::vector<double> angle_grid(double start, double step, int count);
/// Full circle: theta_p = 2 pi p / L, p = 0..L-1.
std::vector<double> full_circle(int L);

/// Convenience: mesh, solve and far field in one call.
FarFieldPattern simulate_farfield(const PiecewiseLinearCrack& crack, const IncidentField& incident,
                                  const GradingParams& grading, std::span<const double> angles);

}  // namespace crackscat
