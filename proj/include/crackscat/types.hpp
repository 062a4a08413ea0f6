#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace crackscat {

using Complex = std::complex<double>;
using Point = Eigen::Vector2d;
using Vector = Eigen::Vector2d;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;
using RVector = Eigen::VectorXd;
using RMatrix = Eigen::MatrixXd;

inline constexpr double kPi = std::numbers::pi;
inline constexpr Complex kI{0.0, 1.0};

/// Wave number k > 0.
class WaveNumber {
 public:
  explicit WaveNumber(double k) : k_(k) {
    if (!(k > 0.0) || !std::isfinite(k)) {
      throw std::invalid_argument("wave number must be positive and finite");
    }
  }
  [[nodiscard]] double value() const { return k_; }

 private:
  double k_;
};

/// Argument outside the domain of a special function or kernel.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Invalid crack or mesh construction.
class GeometryError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Dense system is numerically singular; carries the reciprocal condition estimate.
class SingularSystemError : public std::runtime_error {
 public:
  SingularSystemError(const std::string& what, double rcond)
      : std::runtime_error(what), rcond_(rcond) {}
  [[nodiscard]] double rcond() const { return rcond_; }

 private:
  double rcond_;
};

/// Unit vector at polar angle theta.
inline Point direction(double theta) { return {std::cos(theta), std::sin(theta)}; }

}  // namespace crackscat
