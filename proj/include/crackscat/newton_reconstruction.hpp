#pragma once

// Regularized Newton iteration on the corners of a piecewise-linear crack.
//
// The Frechet derivative of corners -> far field is the far field of a
// radiating v with v_+- = -(nu.q) d_nu U_+- on the crack. It is represented as a
// double layer with density [v] minus a single layer with density [d_nu v];
// both are carried in w'-scaled form on the graded mesh.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "crackscat/crack_geometry.hpp"
#include "crackscat/forward_solver.hpp"
#include "crackscat/types.hpp"

namespace crackscat {

/// One displacement per corner P_0..P_N.
struct Perturbation {
  std::vector<Vector> deltas;

  [[nodiscard]] static Perturbation zero(int corners);
  /// Unit displacement of corner `corner` along coordinate `axis` (0 or 1).
  [[nodiscard]] static Perturbation unit(int corners, int corner, int axis);
  /// (1/(N+1)) sum |dP_j|^2, square-rooted.
  [[nodiscard]] double rms() const;
};

/// 2 d_nu(x) of the single layer, log-split on the graded mesh. Includes |x'(tau)|, excludes 1/|x'(t)|.
CMatrix assemble_normal_derivative_operator(const GradedMesh& mesh, WaveNumber k);
/// 2 d_nu(y) of Phi times |x'(tau)|: the double-layer operator.
CMatrix assemble_double_layer(const GradedMesh& mesh, WaveNumber k);

struct NormalTrace {
  CVector wv_plus;   // w'(s_j) * 2 d_nu U_+(x_j)
  CVector wv_minus;  // w'(s_j) * 2 d_nu U_-(x_j)
};

/// WV_+- = D^{-1}[(W H -+ D)(W Psi) + W D Y]; never divides by w'.
NormalTrace normal_derivative_trace(const DensitySolution& sol);

/// (nu.q)(x_j) at every knot for the piecewise-affine field q interpolating the corner displacements.
CVector normal_component(const GradedMesh& mesh, const Perturbation& q);

/// Linearized far-field map at a fixed crack; reuses the traces and the regularized
/// second-kind system across perturbations.
class FrechetOperator {
 public:
  FrechetOperator(const DensitySolution& sol, double alpha0);

  [[nodiscard]] CVector apply(const Perturbation& q, std::span<const double> angles) const;
  /// Columns ordered (P_0 x, P_0 y, P_1 x, ...).
  [[nodiscard]] CMatrix jacobian(std::span<const double> angles) const;
  [[nodiscard]] const NormalTrace& trace() const { return trace_; }

 private:
  std::shared_ptr<const GradedMesh> mesh_;
  WaveNumber k_;
  NormalTrace trace_;
  CMatrix wl_plus_i_;  // W L + I
  CMatrix wm_adj_;     // (W M)^*
  Eigen::LLT<CMatrix> normal_;  // alpha0 I + (W M)^*(W M)
};

FarFieldPattern frechet_farfield(const DensitySolution& sol, const Perturbation& q, std::span<const double> angles,
                                 double alpha0);
CMatrix assemble_jacobian(const DensitySolution& sol, std::span<const double> angles, double alpha0);

struct NewtonStep {
  Perturbation delta;
  double normal_residual = 0.0;  // relative residual of the regularized normal equations
};

/// Real Tikhonov step (alpha I + A^T W A)^{-1} A^T W b with A = [Re J; Im J], b = [Re r; Im r].
/// `weights` (the aperture quadrature) is optional; omitted means the plain Euclidean norm.
NewtonStep newton_step(const CVector& residual, const CMatrix& jacobian, double alpha,
                       const RVector* weights = nullptr);

struct TangentialChoice {
  PiecewiseLinearCrack crack;
  std::string tag;  // "++", "+-", "-+", "--"
  double residual = 0.0;
  int discarded = 0;  // degenerate candidates skipped
};

struct FarFieldData {
  FarFieldPattern pattern;
  RVector weights;
};

/// L2 misfit sqrt(sum w |U_model - U_data|^2).
double farfield_residual(const CVector& model, const FarFieldData& data);

/// Shift the two tips by +-l along the end-segment tangents and keep the candidate with the
/// smallest residual; ties go to the earlier of (+,+), (+,-), (-,+), (-,-).
TangentialChoice tangential_update(const PiecewiseLinearCrack& crack, double l, const FarFieldData& data,
                                   const IncidentField& incident, int knots_per_segment, double p);

struct NewtonConfig {
  double alpha = 10.0;
  double alpha0 = 1e-2;
  int max_iters = 10;
  int knots_per_segment = 32;
  double grading_p = 3.0;
  bool weighted = false;  // include quadrature weights in the Tikhonov normal equations
  int max_halvings = 8;
  void validate() const;
};

struct IterateRecord {
  int step = 0;
  std::vector<Point> corners;
  double residual = 0.0;
  std::string candidate;  // tangential choice, "initial" for step 0
  int halvings = 0;       // times the corner update was halved to keep the crack simple
};

struct IterateTrace {
  std::vector<IterateRecord> steps;
  bool aborted = false;
  std::string abort_reason;
};

IterateTrace reconstruct(const PiecewiseLinearCrack& initial, const FarFieldData& data,
                         const IncidentField& incident, const NewtonConfig& config);

}  // namespace crackscat
