#include <doctest.h>

#include <cmath>

#include "crackscat/newton_reconstruction.hpp"
#include "crackscat/test_scatterers.hpp"

using namespace crackscat;

namespace {

const std::vector<Point> kCorners63{{0, 2}, {-1, 1}, {1, -1}, {0, -2}};

double max_corner_error(const std::vector<Point>& a, const std::vector<Point>& b) {
  double e = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) e = std::max(e, (a[i] - b[i]).norm());
  return e;
}

}  // namespace

TEST_CASE("perturbation helpers") {
  const auto z = Perturbation::zero(3);
  CHECK(z.deltas.size() == 3);
  CHECK(z.rms() == 0.0);
  const auto u = Perturbation::unit(3, 1, 1);
  CHECK(u.deltas[1] == Vector(0, 1));
  CHECK(u.deltas[0] == Vector(0, 0));
  // step length for dP = ((3,0),(0,4)) on one segment
  Perturbation p{{Vector(3, 0), Vector(0, 4)}};
  CHECK(p.rms() == doctest::Approx(std::sqrt(12.5)));
}

TEST_CASE("normal component of a rigid translation") {
  const PiecewiseLinearCrack c(kCorners63);
  const auto mesh = build_mesh(c, grading_for(c, 8));
  const Vector shift{0.3, -0.8};
  Perturbation q{std::vector<Vector>(4, shift)};
  const CVector nq = normal_component(mesh, q);
  for (int j = 0; j < mesh.size(); ++j) CHECK(nq(j).real() == doctest::Approx(mesh.normal[j].dot(shift)).epsilon(1e-14));
}

TEST_CASE("normal-derivative traces jump by the density") {
  const PiecewiseLinearCrack c(kCorners63);
  const auto sol = solve_density(c, grading_for(c, 16), IncidentField::plane_wave(WaveNumber(2.0), {1, 0}));
  const auto tr = normal_derivative_trace(sol);
  // [d_nu u] = phi, scaled by 2 w'
  CHECK((tr.wv_minus - tr.wv_plus - 2.0 * sol.wpsi).norm() < 1e-12 * sol.wpsi.norm());
}

TEST_CASE("Frechet derivative is linear and matches finite differences at interior corners") {
  const PiecewiseLinearCrack c(kCorners63);
  const WaveNumber k(2.0);
  const auto inc = IncidentField::plane_wave(k, {1, 0});
  const auto g = grading_for(c, 16);
  const auto angles = full_circle(32);
  const auto sol = solve_density(c, g, inc);
  const FrechetOperator F(sol, 1e-8);
  const CMatrix J = F.jacobian(angles);
  REQUIRE(J.cols() == 8);
  Perturbation q1 = Perturbation::unit(4, 1, 0), q2 = Perturbation::unit(4, 2, 1);
  Perturbation sum{{q1.deltas[0], q1.deltas[1], Vector(0, 1), q1.deltas[3]}};
  CHECK((F.apply(sum, angles) - J.col(2) - J.col(5)).norm() < 1e-10 * J.norm());
  CHECK((F.apply(q2, angles) - J.col(5)).norm() < 1e-13 * J.norm());
  CHECK((frechet_farfield(sol, q1, angles, 1e-8).values - J.col(2)).norm() < 1e-12 * J.norm());

  const double t = 1e-3;
  for (int corner : {1, 2}) {
    for (int axis : {0, 1}) {
      auto pp = kCorners63, pm = kCorners63;
      pp[corner][axis] += t;
      pm[corner][axis] -= t;
      const CVector fd = (simulate_farfield(PiecewiseLinearCrack(pp), inc, g, angles).values -
                          simulate_farfield(PiecewiseLinearCrack(pm), inc, g, angles).values) /
                         (2 * t);
      CAPTURE(corner);
      CAPTURE(axis);
      CHECK((fd - J.col(2 * corner + axis)).norm() <= 5e-2 * fd.norm());
    }
  }
}

TEST_CASE("straight crack Jacobian is blind to tangential tip motion") {
  const PiecewiseLinearCrack c({{-1, 0}, {1, 0}});
  const auto sol = solve_density(c, grading_for(c, 32), IncidentField::plane_wave(WaveNumber(3.0), direction(0.7)));
  const CMatrix J = assemble_jacobian(sol, full_circle(32), 1e-2);
  CHECK(J.col(0).norm() == 0.0);
  CHECK(J.col(2).norm() == 0.0);
  Eigen::JacobiSVD<CMatrix> svd(J);
  const auto s = svd.singularValues();
  CHECK(s(1) > 1e-3);
  CHECK(s(2) < 1e-12 * s(0));
}

TEST_CASE("Tikhonov step solves the regularized normal equations") {
  CMatrix J = CMatrix::Random(30, 6);
  CVector r = CVector::Random(30);
  RVector w = RVector::LinSpaced(30, 0.5, 1.5);
  for (const RVector* wp : std::initializer_list<const RVector*>{nullptr, &w}) {
    const auto step = newton_step(r, J, 0.7, wp);
    CHECK(step.normal_residual <= 1e-10);
    // independent check: complex form Re(J^* W J) + alpha I and Re(J^* W r)
    const RVector ww = wp ? *wp : RVector::Ones(30);
    RMatrix lhs(6, 6);
    RVector rhs(6);
    for (int i = 0; i < 6; ++i) {
      for (int j = 0; j < 6; ++j) lhs(i, j) = (J.col(i).adjoint() * ww.asDiagonal() * J.col(j))(0, 0).real();
      rhs(i) = (J.col(i).adjoint() * ww.asDiagonal() * r)(0, 0).real();
    }
    lhs.diagonal().array() += 0.7;
    const RVector x = lhs.ldlt().solve(rhs);
    for (int c = 0; c < 3; ++c) {
      CHECK(step.delta.deltas[c].x() == doctest::Approx(x(2 * c)).epsilon(1e-10));
      CHECK(step.delta.deltas[c].y() == doctest::Approx(x(2 * c + 1)).epsilon(1e-10));
    }
  }
  CHECK_THROWS(newton_step(r, J, 0.0));
  CHECK_THROWS(newton_step(CVector::Zero(3), J, 1.0));
}

TEST_CASE("tangential update picks the extension that fits the data") {
  const PiecewiseLinearCrack c({{-1, 1}, {1, -1}, {0, -2}});
  const auto inc = IncidentField::plane_wave(WaveNumber(5.0), {-1, 0});
  const auto g = aperture_grid(5 * kPi / 4, 1.5 * kPi, 40);
  const double l = 0.15;
  const auto& p = c.corners();
  const Vector t0 = (p[1] - p[0]).normalized(), t2 = (p[2] - p[1]).normalized();
  // P0 moved against t0 and P2 along t2 lengthens both ends: the (-,+) candidate
  const PiecewiseLinearCrack truth({p[0] - l * t0, p[1], p[2] + l * t2});
  const FarFieldData data{simulate_farfield(truth, inc, grading_for(truth, 16), g.angles), g.weights};
  const auto choice = tangential_update(c, l, data, inc, 16, 3.0);
  CHECK(choice.tag == "-+");
  CHECK(choice.residual < 1e-10);
  CHECK(choice.discarded == 0);

  const auto same = tangential_update(c, 0.0, data, inc, 16, 3.0);
  CHECK(same.tag == "++");
  CHECK(same.crack.corners() == c.corners());

  // a step longer than the short end segment folds it back
  const auto folded = tangential_update(c, 1.6, data, inc, 16, 3.0);
  CHECK(folded.discarded == 2);
  CHECK(folded.tag.back() == '+');  // only the last tip can fold
}

TEST_CASE("Newton iteration on the limited-aperture example") {
  const std::vector<Point> truth{{-1, 1}, {1, -1}, {0, -2}};
  const PiecewiseLinearCrack crack(truth);
  const auto inc = IncidentField::plane_wave(WaveNumber(5.0), {-1, 0});
  const auto g = aperture_grid(5 * kPi / 4, 1.5 * kPi, 40);
  const FarFieldData data{simulate_farfield(crack, inc, grading_for(crack, 64), g.angles), g.weights};
  NewtonConfig cfg;
  const auto trace = reconstruct(PiecewiseLinearCrack({{-0.8, 1.2}, {0.5, -1.2}, {-0.2, -1.9}}), data, inc, cfg);
  REQUIRE_FALSE(trace.aborted);
  REQUIRE(trace.steps.size() == 11);
  CHECK(trace.steps.front().candidate == "initial");
  int non_increasing = 0;
  for (std::size_t i = 1; i < trace.steps.size(); ++i) {
    if (trace.steps[i].residual <= trace.steps[i - 1].residual) ++non_increasing;
  }
  CHECK(non_increasing >= 8);
  CHECK(max_corner_error(trace.steps.back().corners, truth) < 0.05);
}

TEST_CASE("Newton iterates translate with the configuration") {
  const std::vector<Point> truth{{-1, 1}, {1, -1}, {0, -2}};
  const std::vector<Point> init{{-0.8, 1.2}, {0.5, -1.2}, {-0.2, -1.9}};
  const Vector b{0.6, -0.35};
  const auto g = aperture_grid(5 * kPi / 4, 1.5 * kPi, 40);
  NewtonConfig cfg;
  cfg.max_iters = 3;
  cfg.knots_per_segment = 16;
  auto run = [&](const Vector& shift) {
    std::vector<Point> t = truth, i0 = init;
    for (auto& p : t) p += shift;
    for (auto& p : i0) p += shift;
    const auto inc = IncidentField::point_source(WaveNumber(5.0), Point(4, 1) + shift);
    const PiecewiseLinearCrack crack(t);
    const FarFieldData data{simulate_farfield(crack, inc, grading_for(crack, 32), g.angles), g.weights};
    return reconstruct(PiecewiseLinearCrack(i0), data, inc, cfg);
  };
  const auto a = run({0, 0});
  const auto c = run(b);
  REQUIRE(a.steps.size() == c.steps.size());
  for (std::size_t s = 0; s < a.steps.size(); ++s) {
    CHECK(a.steps[s].candidate == c.steps[s].candidate);
    for (std::size_t j = 0; j < truth.size(); ++j) CHECK((c.steps[s].corners[j] - a.steps[s].corners[j] - b).norm() < 1e-8);
  }
}

TEST_CASE("configuration validation and aborted runs") {
  NewtonConfig cfg;
  cfg.alpha = 0.0;
  CHECK_THROWS(cfg.validate());
  cfg = NewtonConfig{};
  cfg.knots_per_segment = 7;
  CHECK_THROWS(cfg.validate());
  cfg = NewtonConfig{};
  const PiecewiseLinearCrack c({{-1, 1}, {1, -1}, {0, -2}});
  const auto inc = IncidentField::plane_wave(WaveNumber(5.0), {-1, 0});
  FarFieldData bad{FarFieldPattern{{0.0, 1.0}, CVector::Zero(2), 5.0}, RVector::Ones(3)};
  const auto trace = reconstruct(c, bad, inc, cfg);
  CHECK(trace.aborted);
  CHECK_FALSE(trace.abort_reason.empty());
}
