#include "crackscat/specfun.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace crackscat::specfun {

namespace {

constexpr double kAsymptoticThreshold = 25.0;
constexpr double kSeriesThreshold = 1.0;
constexpr double kRescaleBig = 1e250;

// Start order for Miller's recurrence, even.
int miller_start(int nmax, double x) {
  const int base = std::max(nmax, static_cast<int>(x)) + 1;
  const int m = base + 20 + static_cast<int>(std::sqrt(160.0 * base));
  return 2 * ((m + 1) / 2);
}

// J_n(x) by the ascending series; used for x < 1 where no cancellation occurs.
double j_series(int n, double x) {
  const double half = 0.5 * x;
  double lead = 1.0;
  for (int i = 1; i <= n; ++i) {
    lead *= half / i;
    if (lead == 0.0) return 0.0;
  }
  const double q = -half * half;
  double term = lead;
  double sum = lead;
  for (int m = 1; m < 200; ++m) {
    term *= q / (static_cast<double>(m) * (m + n));
    sum += term;
    if (std::abs(term) <= 1e-17 * std::abs(sum)) break;
  }
  return sum;
}

// Unnormalized backward recurrence storing J_0..J_top; returns normalized values.
std::vector<double> j_miller(int top, double x) {
  const int m = miller_start(top, x);
  std::vector<double> vals(static_cast<std::size_t>(m) + 2, 0.0);
  double jp1 = 0.0;
  double j = 1e-300;
  double norm = 0.0;
  vals[static_cast<std::size_t>(m)] = j;
  for (int k = m; k > 0; --k) {
    const double jm1 = (2.0 * k / x) * j - jp1;
    jp1 = j;
    j = jm1;
    vals[static_cast<std::size_t>(k - 1)] = j;
    if ((k - 1) % 2 == 0 && k - 1 > 0) norm += 2.0 * j;
    if (std::abs(j) > kRescaleBig) {
      const double s = 1.0 / kRescaleBig;
      j *= s;
      jp1 *= s;
      norm *= s;
      for (int i = k - 1; i <= m; ++i) vals[static_cast<std::size_t>(i)] *= s;
    }
  }
  norm += vals[0];
  for (auto& v : vals) v /= norm;
  vals.resize(static_cast<std::size_t>(std::max(top, 0)) + 1);
  return vals;
}

struct HankelAsymptotic {
  double j, y;
};

// Hankel's expansion J/Y = sqrt(2/(pi x)) (P cos chi -/+ Q sin chi), orders 0 and 1.
HankelAsymptotic hankel_asymptotic(int nu, double x) {
  const double mu = 4.0 * nu * nu;
  const double e8x = 8.0 * x;
  double p = 1.0;
  double q = 0.0;
  double term = 1.0;
  // term_k = prod_{i=1..k} (mu - (2i-1)^2) / (k! (8x)^k)
  double prev = std::numeric_limits<double>::infinity();
  for (int k = 1; k < 60; ++k) {
    const double odd = 2.0 * k - 1.0;
    term *= (mu - odd * odd) / (k * e8x);
    if (std::abs(term) > prev) break;  // asymptotic series: stop at smallest term
    prev = std::abs(term);
    // sign pattern: k=1 -> +Q, k=2 -> -P, k=3 -> -Q, k=4 -> +P, ...
    switch (k % 4) {
      case 1: q += term; break;
      case 2: p -= term; break;
      case 3: q -= term; break;
      case 0: p += term; break;
    }
    if (std::abs(term) < 1e-17) break;
  }
  const double chi = x - (0.5 * nu + 0.25) * kPi;
  const double amp = std::sqrt(2.0 / (kPi * x));
  return {amp * (p * std::cos(chi) - q * std::sin(chi)),
          amp * (p * std::sin(chi) + q * std::cos(chi))};
}

}  // namespace

int series_order(double kr) { return static_cast<int>(std::ceil(kr)) + 20; }

std::vector<double> bessel_j_array(int nmax, double x) {
  if (nmax < 0) nmax = 0;
  if (!std::isfinite(x) || x < 0.0) throw DomainError("bessel_j: argument must be finite and >= 0");
  std::vector<double> out(static_cast<std::size_t>(nmax) + 1, 0.0);
  if (x == 0.0) {
    out[0] = 1.0;
    return out;
  }
  if (x < kSeriesThreshold) {
    for (int n = 0; n <= nmax; ++n) out[static_cast<std::size_t>(n)] = j_series(n, x);
    return out;
  }
  return j_miller(nmax, x);
}

double bessel_j(int n, double x) {
  const int an = std::abs(n);
  const double sign = (n < 0 && an % 2 == 1) ? -1.0 : 1.0;
  if (x < 0.0 || !std::isfinite(x)) throw DomainError("bessel_j: argument must be finite and >= 0");
  if (x >= kAsymptoticThreshold && an <= 1) {
    return sign * hankel_asymptotic(an, x).j;
  }
  if (x > 0.0 && x < kSeriesThreshold) return sign * j_series(an, x);
  return sign * bessel_j_array(an, x)[static_cast<std::size_t>(an)];
}

BesselJY01 bessel_jy01(double x) {
  if (!(x > 0.0) || !std::isfinite(x)) throw DomainError("bessel_jy01: argument must be > 0");
  if (x >= kAsymptoticThreshold) {
    const auto h0 = hankel_asymptotic(0, x);
    const auto h1 = hankel_asymptotic(1, x);
    return {h0.j, h1.j, h0.y, h1.y};
  }
  // Neumann series over Miller values; J_k for k up to the start order are all available.
  const int top = miller_start(1, x);
  std::vector<double> j;
  if (x < kSeriesThreshold) {
    j.resize(static_cast<std::size_t>(top) + 2);
    for (int n = 0; n <= top + 1; ++n) j[static_cast<std::size_t>(n)] = j_series(n, x);
  } else {
    j = j_miller(top + 1, x);
  }
  const double lg = std::log(0.5 * x) + kEulerGamma;
  double s0 = 0.0;
  double s1 = 0.0;
  for (int k = 1; 2 * k + 1 <= top + 1; ++k) {
    const double sgn = (k % 2 == 0) ? 1.0 : -1.0;
    const auto kk = static_cast<std::size_t>(k);
    s0 += sgn * j[2 * kk] / k;
    s1 += sgn * (j[2 * kk - 1] - j[2 * kk + 1]) / k;
  }
  const double y0 = (2.0 / kPi) * (lg * j[0] - 2.0 * s0);
  const double y1 = (2.0 / kPi) * (-j[0] / x + lg * j[1] + s1);
  return {j[0], j[1], y0, y1};
}

std::vector<double> bessel_y_array(int nmax, double x) {
  if (!(x > 0.0) || !std::isfinite(x)) throw DomainError("bessel_y: argument must be > 0");
  if (nmax < 0) nmax = 0;
  std::vector<double> out(static_cast<std::size_t>(std::max(nmax, 1)) + 1);
  const auto b = bessel_jy01(x);
  out[0] = b.y0;
  out[1] = b.y1;
  for (int n = 1; n < nmax; ++n) {
    const auto i = static_cast<std::size_t>(n);
    out[i + 1] = std::isfinite(out[i]) ? (2.0 * n / x) * out[i] - out[i - 1]
                                       : -std::numeric_limits<double>::infinity();
  }
  out.resize(static_cast<std::size_t>(nmax) + 1);
  return out;
}

double bessel_y(int n, double x) {
  const int an = std::abs(n);
  const double sign = (n < 0 && an % 2 == 1) ? -1.0 : 1.0;
  return sign * bessel_y_array(an, x)[static_cast<std::size_t>(an)];
}

Complex hankel1(int n, double x) {
  if (!(x > 0.0)) throw DomainError("hankel1: argument must be > 0");
  return {bessel_j(n, x), bessel_y(n, x)};
}

Complex hankel1_deriv(int n, double x) {
  return hankel1(n - 1, x) - (static_cast<double>(n) / x) * hankel1(n, x);
}

Complex fundamental_solution(WaveNumber k, const Point& x, const Point& y) {
  const double r = (x - y).norm();
  if (r == 0.0) throw DomainError("fundamental_solution: source and target coincide");
  const auto b = bessel_jy01(k.value() * r);
  return 0.25 * kI * Complex{b.j0, b.y0};
}

Complex farfield_gamma(WaveNumber k) {
  return std::exp(kI * (kPi / 4.0)) / std::sqrt(8.0 * kPi * k.value());
}

Complex point_source_farfield(WaveNumber k, const Point& xhat, const Point& p) {
  return farfield_gamma(k) * std::exp(-kI * (k.value() * xhat.dot(p)));
}

std::vector<Complex> bessel_j_logderiv(int nmax, Complex z) {
  if (std::abs(z) == 0.0) throw DomainError("bessel_j_logderiv: z must be nonzero");
  const int m = miller_start(nmax + 1, std::abs(z));
  // ratio r_n = J_n / J_{n-1} = 1 / (2n/z - r_{n+1})
  std::vector<Complex> ratio(static_cast<std::size_t>(m) + 2, Complex{0.0, 0.0});
  for (int n = m; n >= 1; --n) {
    ratio[static_cast<std::size_t>(n)] =
        1.0 / (2.0 * static_cast<double>(n) / z - ratio[static_cast<std::size_t>(n) + 1]);
  }
  std::vector<Complex> out(static_cast<std::size_t>(nmax) + 1);
  out[0] = -ratio[1];
  for (int n = 1; n <= nmax; ++n) {
    out[static_cast<std::size_t>(n)] = 1.0 / ratio[static_cast<std::size_t>(n)] - static_cast<double>(n) / z;
  }
  return out;
}

}  // namespace crackscat::specfun
