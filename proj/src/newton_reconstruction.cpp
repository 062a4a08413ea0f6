#include "crackscat/newton_reconstruction.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

#include "crackscat/specfun.hpp"

namespace crackscat {

namespace {

// (y - x) . (v_2, -v_1)
double cross_normal(const Point& x, const Point& y, const Vector& v) {
  const Vector d = y - x;
  return d.x() * v.y() - d.y() * v.x();
}

// Shared log-split assembly: kernel(i, j) returns {full, log-part coefficient}.
template <class Kernel>
CMatrix assemble_split(const GradedMesh& mesh, Kernel kernel) {
  const int m = mesh.size();
  const auto rw = log_quadrature_weights(mesh.n);
  const double h = kPi / mesh.n;
  CMatrix a = CMatrix::Zero(m, m);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) {
      if (i == j) continue;  // both parts vanish on the diagonal of a straight segment
      const auto [full, part1] = kernel(i, j);
      const double sn = std::sin(0.5 * (mesh.s[static_cast<std::size_t>(i)] - mesh.s[static_cast<std::size_t>(j)]));
      const Complex part2 = full - part1 * std::log(4.0 * sn * sn);
      a(i, j) = rw[static_cast<std::size_t>(((i - j) % m + m) % m)] * part1 + h * part2;
    }
  }
  return a;
}

bool same_polyline(const PiecewiseLinearCrack& a, const PiecewiseLinearCrack& b) {
  return a.corners() == b.corners();
}

}  // namespace

Perturbation Perturbation::zero(int corners) {
  return {std::vector<Vector>(static_cast<std::size_t>(corners), Vector::Zero())};
}

Perturbation Perturbation::unit(int corners, int corner, int axis) {
  auto q = zero(corners);
  q.deltas.at(static_cast<std::size_t>(corner))(axis) = 1.0;
  return q;
}

double Perturbation::rms() const {
  if (deltas.empty()) return 0.0;
  double s = 0.0;
  for (const auto& d : deltas) s += d.squaredNorm();
  return std::sqrt(s / static_cast<double>(deltas.size()));
}

CMatrix assemble_normal_derivative_operator(const GradedMesh& mesh, WaveNumber k) {
  const double kk = k.value();
  return assemble_split(mesh, [&](int i, int j) {
    const auto ui = static_cast<std::size_t>(i);
    const auto uj = static_cast<std::size_t>(j);
    const double r = (mesh.knots[ui] - mesh.knots[uj]).norm();
    const auto b = specfun::bessel_jy01(kk * r);
    const double c = cross_normal(mesh.knots[ui], mesh.knots[uj], mesh.tangent[ui]) / r * mesh.speed[uj];
    const Complex full = 0.5 * kI * kk * c * Complex{b.j1, b.y1};
    const double part1 = -kk / (2.0 * kPi) * c * b.j1;
    return std::pair<Complex, double>{full, part1};
  });
}

CMatrix assemble_double_layer(const GradedMesh& mesh, WaveNumber k) {
  const double kk = k.value();
  return assemble_split(mesh, [&](int i, int j) {
    const auto ui = static_cast<std::size_t>(i);
    const auto uj = static_cast<std::size_t>(j);
    const double r = (mesh.knots[ui] - mesh.knots[uj]).norm();
    const auto b = specfun::bessel_jy01(kk * r);
    const double c = cross_normal(mesh.knots[ui], mesh.knots[uj], mesh.tangent[uj]) / r;
    const Complex full = -0.5 * kI * kk * c * Complex{b.j1, b.y1};
    const double part1 = kk / (2.0 * kPi) * c * b.j1;
    return std::pair<Complex, double>{full, part1};
  });
}

NormalTrace normal_derivative_trace(const DensitySolution& sol) {
  const auto& mesh = *sol.mesh;
  const int m = mesh.size();
  const CVector hw = assemble_normal_derivative_operator(mesh, sol.incident.k()) * sol.wpsi;
  NormalTrace t{CVector(m), CVector(m)};
  for (int j = 0; j < m; ++j) {
    const auto uj = static_cast<std::size_t>(j);
    const double wp = mesh.wprime[uj];
    const Complex y = 2.0 * sol.incident.normal_derivative(mesh.knots[uj], mesh.normal[uj]);
    const Complex common = wp * hw(j) / mesh.speed[uj] + wp * y;
    t.wv_plus(j) = common - sol.wpsi(j);
    t.wv_minus(j) = common + sol.wpsi(j);
  }
  return t;
}

CVector normal_component(const GradedMesh& mesh, const Perturbation& q) {
  if (static_cast<int>(q.deltas.size()) != mesh.segments + 1) {
    throw std::invalid_argument("perturbation needs one displacement per corner");
  }
  CVector out(mesh.size());
  for (int j = 0; j < mesh.size(); ++j) {
    const auto uj = static_cast<std::size_t>(j);
    const auto l = static_cast<std::size_t>(mesh.segment[uj]);
    const double lam = mesh.local[uj];
    const Vector qj = (1.0 - lam) * q.deltas[l] + lam * q.deltas[l + 1];
    out(j) = qj.dot(mesh.normal[uj]);
  }
  return out;
}

FrechetOperator::FrechetOperator(const DensitySolution& sol, double alpha0) : mesh_(sol.mesh), k_(sol.incident.k()) {
  if (!(alpha0 > 0.0)) throw std::invalid_argument("alpha0 must be positive");
  const auto& mesh = *mesh_;
  const int m = mesh.size();
  trace_ = normal_derivative_trace(sol);
  const RVector w = Eigen::Map<const RVector>(mesh.wprime.data(), m);
  wl_plus_i_ = w.asDiagonal() * assemble_double_layer(mesh, k_);
  wl_plus_i_.diagonal().array() += 1.0;
  const CMatrix wm = w.asDiagonal() * (*sol.system);
  wm_adj_ = wm.adjoint();
  CMatrix normal = wm_adj_ * wm;
  normal.diagonal().array() += alpha0;
  normal_.compute(normal);
  if (normal_.info() != Eigen::Success) throw SingularSystemError("regularized jump system is not positive definite", 0.0);
}

CVector FrechetOperator::apply(const Perturbation& q, std::span<const double> angles) const {
  const auto& mesh = *mesh_;
  const int m = mesh.size();
  const CVector nq = normal_component(mesh, q);
  const CVector wx1 = nq.cwiseProduct(trace_.wv_minus - trace_.wv_plus) / 2.0;
  const CVector rhs = wl_plus_i_ * wx1 + nq.cwiseProduct(trace_.wv_plus);
  const CVector wx2 = normal_.solve(wm_adj_ * rhs);

  const double kk = k_.value();
  const double h = kPi / mesh.n;
  const Complex gamma = specfun::farfield_gamma(k_);
  const Complex dl = std::exp(-0.25 * kI * kPi) * kk / std::sqrt(8.0 * kk * kPi);
  CVector out(static_cast<Eigen::Index>(angles.size()));
  for (std::size_t p = 0; p < angles.size(); ++p) {
    const Point xhat = direction(angles[p]);
    Complex acc{0.0, 0.0};
    for (int j = 0; j < m; ++j) {
      const auto uj = static_cast<std::size_t>(j);
      const Complex e = std::exp(-kI * (kk * xhat.dot(mesh.knots[uj]))) * mesh.speed[uj];
      acc += e * (dl * xhat.dot(mesh.normal[uj]) * wx1(j) - gamma * wx2(j));
    }
    out(static_cast<Eigen::Index>(p)) = h * acc;
  }
  return out;
}

CMatrix FrechetOperator::jacobian(std::span<const double> angles) const {
  const int corners = mesh_->segments + 1;
  CMatrix jac(static_cast<Eigen::Index>(angles.size()), 2 * corners);
  for (int c = 0; c < corners; ++c) {
    for (int axis = 0; axis < 2; ++axis) jac.col(2 * c + axis) = apply(Perturbation::unit(corners, c, axis), angles);
  }
  return jac;
}

FarFieldPattern frechet_farfield(const DensitySolution& sol, const Perturbation& q, std::span<const double> angles,
                                 double alpha0) {
  FarFieldPattern out;
  out.angles.assign(angles.begin(), angles.end());
  out.k = sol.incident.k().value();
  out.values = FrechetOperator(sol, alpha0).apply(q, angles);
  return out;
}

CMatrix assemble_jacobian(const DensitySolution& sol, std::span<const double> angles, double alpha0) {
  return FrechetOperator(sol, alpha0).jacobian(angles);
}

NewtonStep newton_step(const CVector& residual, const CMatrix& jacobian, double alpha, const RVector* weights) {
  if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be positive");
  if (residual.size() != jacobian.rows()) throw std::invalid_argument("residual and Jacobian sizes differ");
  if (weights && weights->size() != residual.size()) throw std::invalid_argument("weights do not match residual");
  const Eigen::Index rows = jacobian.rows();
  const Eigen::Index cols = jacobian.cols();
  RMatrix a(2 * rows, cols);
  a.topRows(rows) = jacobian.real();
  a.bottomRows(rows) = jacobian.imag();
  RVector b(2 * rows);
  b.head(rows) = residual.real();
  b.tail(rows) = residual.imag();
  RVector w2 = RVector::Ones(2 * rows);
  if (weights) w2 << *weights, *weights;

  RMatrix lhs = a.transpose() * w2.asDiagonal() * a;
  lhs.diagonal().array() += alpha;
  const RVector rhs = a.transpose() * w2.asDiagonal() * b;
  const Eigen::LLT<RMatrix> llt(lhs);
  const RVector x = llt.solve(rhs);

  NewtonStep step;
  const double scale = std::max(rhs.norm(), std::numeric_limits<double>::min());
  step.normal_residual = rhs.norm() > 0.0 ? (lhs * x - rhs).norm() / scale : (lhs * x).norm();
  step.delta = Perturbation::zero(static_cast<int>(cols / 2));
  for (Eigen::Index c = 0; c < cols / 2; ++c) {
    step.delta.deltas[static_cast<std::size_t>(c)] = Vector{x(2 * c), x(2 * c + 1)};
  }
  return step;
}

double farfield_residual(const CVector& model, const FarFieldData& data) {
  if (model.size() != data.pattern.values.size() || data.weights.size() != model.size()) {
    throw std::invalid_argument("model and data sizes differ");
  }
  return std::sqrt((data.weights.array() * (model - data.pattern.values).array().abs2()).sum());
}

namespace {

CVector forward(const PiecewiseLinearCrack& crack, const FarFieldData& data, const IncidentField& incident,
                int knots_per_segment, double p) {
  return simulate_farfield(crack, incident, grading_for(crack, knots_per_segment, p), data.pattern.angles).values;
}

}  // namespace

TangentialChoice tangential_update(const PiecewiseLinearCrack& crack, double l, const FarFieldData& data,
                                   const IncidentField& incident, int knots_per_segment, double p) {
  if (!(l >= 0.0)) throw std::invalid_argument("tangential step must be nonnegative");
  const auto& c = crack.corners();
  const std::size_t nn = c.size() - 1;
  const Vector t0 = (c[1] - c[0]).normalized();
  const Vector tn = (c[nn] - c[nn - 1]).normalized();
  static constexpr std::array<std::pair<int, int>, 4> kSigns{{{1, 1}, {1, -1}, {-1, 1}, {-1, -1}}};
  static constexpr std::array<const char*, 4> kTags{"++", "+-", "-+", "--"};

  std::optional<TangentialChoice> best;
  int discarded = 0;
  std::vector<std::optional<PiecewiseLinearCrack>> candidates;
  for (const auto& [s0, sn] : kSigns) {
    auto moved = c;
    moved[0] += s0 * l * t0;
    moved[nn] += sn * l * tn;
    // A tip pushed past its neighbor folds the end segment back onto itself.
    if ((moved[1] - moved[0]).dot(c[1] - c[0]) <= 0.0 || (moved[nn] - moved[nn - 1]).dot(c[nn] - c[nn - 1]) <= 0.0) {
      candidates.emplace_back();
      continue;
    }
    try {
      candidates.emplace_back(PiecewiseLinearCrack(std::move(moved)));
    } catch (const GeometryError&) {
      candidates.emplace_back();
    }
  }
  std::vector<double> residuals(candidates.size(), std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (!candidates[i]) {
      ++discarded;
      continue;
    }
    // Identical candidates (l = 0) share one forward solve.
    bool reused = false;
    for (std::size_t j = 0; j < i; ++j) {
      if (candidates[j] && same_polyline(*candidates[j], *candidates[i])) {
        residuals[i] = residuals[j];
        reused = true;
        break;
      }
    }
    if (!reused) residuals[i] = farfield_residual(forward(*candidates[i], data, incident, knots_per_segment, p), data);
    if (!best || residuals[i] < best->residual) best = TangentialChoice{*candidates[i], kTags[i], residuals[i], 0};
  }
  if (!best) throw GeometryError("every tangential candidate is degenerate");
  best->discarded = discarded;
  return *best;
}

void NewtonConfig::validate() const {
  if (!(alpha > 0.0)) throw std::invalid_argument("newton.alpha must be positive");
  if (!(alpha0 > 0.0)) throw std::invalid_argument("newton.alpha0 must be positive");
  if (max_iters < 1) throw std::invalid_argument("newton.max_iters must be at least 1");
  if (knots_per_segment < 2 || knots_per_segment % 2 != 0) {
    throw std::invalid_argument("newton.knots_per_segment must be a positive even number");
  }
  if (!(grading_p >= 2.0)) throw std::invalid_argument("newton.grading_p must be >= 2");
  if (max_halvings < 0) throw std::invalid_argument("newton.max_halvings must be nonnegative");
}

IterateTrace reconstruct(const PiecewiseLinearCrack& initial, const FarFieldData& data,
                         const IncidentField& incident, const NewtonConfig& config) {
  config.validate();
  IterateTrace trace;
  PiecewiseLinearCrack current = initial;
  const auto& angles = data.pattern.angles;
  const int corners = static_cast<int>(initial.corners().size());

  auto solve = [&](const PiecewiseLinearCrack& crack) {
    return solve_density(crack, grading_for(crack, config.knots_per_segment, config.grading_p), incident);
  };

  try {
    auto sol = solve(current);
    CVector model = farfield(sol, angles).values;
    trace.steps.push_back({0, current.corners(), farfield_residual(model, data), "initial", 0});

    for (int it = 1; it <= config.max_iters; ++it) {
      const CVector r = data.pattern.values - model;
      const CMatrix jac = FrechetOperator(sol, config.alpha0).jacobian(angles);
      const auto step = newton_step(r, jac, config.alpha, config.weighted ? &data.weights : nullptr);

      // Corner update, halved while it would produce a degenerate polyline.
      std::optional<PiecewiseLinearCrack> updated;
      Perturbation delta = step.delta;
      int halvings = 0;
      for (;; ++halvings) {
        std::vector<Point> moved = current.corners();
        for (int c = 0; c < corners; ++c) moved[static_cast<std::size_t>(c)] += delta.deltas[static_cast<std::size_t>(c)];
        try {
          updated.emplace(std::move(moved));
          break;
        } catch (const GeometryError&) {
          if (halvings >= config.max_halvings) throw;
          for (auto& d : delta.deltas) d *= 0.5;
        }
      }

      const auto choice = tangential_update(*updated, delta.rms(), data, incident, config.knots_per_segment,
                                            config.grading_p);
      current = choice.crack;
      sol = solve(current);
      model = farfield(sol, angles).values;
      trace.steps.push_back({it, current.corners(), farfield_residual(model, data), choice.tag, halvings});
    }
  } catch (const std::exception& e) {
    trace.aborted = true;
    trace.abort_reason = e.what();
  }
  return trace;
}

}  // namespace crackscat
