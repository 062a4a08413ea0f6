#pragma once

// Bessel and Hankel functions of integer order and real argument, plus the
// elementary wave fields of the 2D Helmholtz equation.
//
// J_n uses the ascending series for x < 1 and Miller's backward recurrence
// normalized by J_0 + 2 sum J_2k = 1 otherwise. Y_0 and Y_1 come from the
// Neumann series over the same Miller values for x < 25 and from the Hankel
// asymptotic expansion beyond; higher Y orders use forward recurrence.

#include <span>
#include <vector>

#include "crackscat/types.hpp"

namespace crackscat::specfun {

inline constexpr double kEulerGamma = 0.5772156649015329;

/// Series truncation used for disk expansions: ceil(kR) + 20.
int series_order(double kr);

double bessel_j(int n, double x);
double bessel_y(int n, double x);

/// J_0..J_nmax at x >= 0.
std::vector<double> bessel_j_array(int nmax, double x);
/// Y_0..Y_nmax at x > 0. Entries overflow to -inf for n >> x.
std::vector<double> bessel_y_array(int nmax, double x);

struct BesselJY01 {
  double j0, j1, y0, y1;
};
/// Orders 0 and 1 together; the kernel fast path.
BesselJY01 bessel_jy01(double x);

Complex hankel1(int n, double x);
/// d/dx H_n^(1)(x) = H_{n-1}^(1)(x) - (n/x) H_n^(1)(x).
Complex hankel1_deriv(int n, double x);

/// Phi_k(x, y) = (i/4) H_0^(1)(k|x-y|). Throws DomainError when x == y.
Complex fundamental_solution(WaveNumber k, const Point& x, const Point& y);

/// gamma * exp(-i k xhat.p) with gamma = e^{i pi/4} / sqrt(8 pi k).
Complex point_source_farfield(WaveNumber k, const Point& xhat, const Point& p);

/// e^{i pi/4} / sqrt(8 pi k), the far-field coefficient of Phi_k.
Complex farfield_gamma(WaveNumber k);

/// Logarithmic derivatives J_n'(z)/J_n(z), n = 0..nmax, complex z != 0.
/// Built from the backward continued-fraction recurrence for J_n/J_{n-1}.
std::vector<Complex> bessel_j_logderiv(int nmax, Complex z);

}  // namespace crackscat::specfun
