#pragma once

// Experiment configuration, synthetic data with noise, artifact serialization
// and the experiment runner behind the command-line tool.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "crackscat/crack_geometry.hpp"
#include "crackscat/forward_solver.hpp"
#include "crackscat/indicators.hpp"
#include "crackscat/newton_reconstruction.hpp"
#include "crackscat/test_scatterers.hpp"

namespace crackscat {

/// Invalid configuration; `path` names the offending field, e.g. "incident.k".
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& path, const std::string& message)
      : std::runtime_error(path + ": " + message), path_(path) {}
  [[nodiscard]] const std::string& path() const { return path_; }

 private:
  std::string path_;
};

// ---------------------------------------------------------------- noise

struct NoisyFarField {
  FarFieldPattern base;
  double delta = 0.0;
  std::uint64_t seed = 0;
  CVector values;
};

/// U + delta (z1 + i z2) |U| with z1, z2 uniform on [-1, 1], drawn per sample from
/// std::mt19937_64(seed) in the order z1, z2. The uniform variate is
/// 2 ((x >> 11) * 2^-53) - 1 for each 64-bit output x.
NoisyFarField add_noise(const FarFieldPattern& u, double delta, std::uint64_t seed);

/// Uniform [-1, 1] from one 64-bit draw via 53-bit mantissa scaling.
double uniform_pm1(std::uint64_t bits);

// ---------------------------------------------------------------- plot values

struct PlotValues {
  std::vector<double> v;  // in [-1, 1]
  bool constant = false;  // all inputs equal; v is all zeros
};

/// Affine map of values onto [-1, 1]; the infinity sentinel maps to +1 and is excluded from the range.
PlotValues plot_values(const std::vector<double>& values);
/// Iteration colour coordinate 2m/total - 1.
double iteration_plot_value(int m, int total);

// ---------------------------------------------------------------- config

struct ObservationConfig {
  int L = 64;
  bool full_circle = true;
  double start = 0.0;  // aperture: theta_p = start + arc p / L, p = 0..L
  double arc = 2.0 * kPi;
  [[nodiscard]] DirectionGrid grid() const;
};

struct IncidentConfig {
  bool plane_wave = true;
  double k = 1.0;
  Vector direction{1.0, 0.0};
  Point source{0.0, 0.0};
  [[nodiscard]] IncidentField field() const;
};

struct ContrastConfig {
  enum class Kind { CrackShift, PointSource, Disk } kind = Kind::PointSource;
  std::vector<Vector> samples;  // shifts a, or points P, or disk centers
  Complex tau{1.0, 0.0};
  double radius = 0.2;
  BoundaryKind boundary = Dirichlet{};
};

struct FactorizationConfig {
  std::vector<Point> centers;
  std::vector<double> radii;
  BoundaryKind boundary = Dirichlet{};
  double alpha = 1e-8;
  bool raw = false;  // unregularized Picard sum (diagnostic)
  bool analytic = true;
  std::optional<std::filesystem::path> external_matrix;  // F_# from a far-field matrix file instead of disks
};

struct ScanHullConfig {
  std::vector<Point> centers;
  std::vector<double> radii;
  BoundaryKind boundary = Dirichlet{};
  double alpha = 1e-8;
  bool analytic = true;
  std::optional<double> epsilon;
  int margin_steps = 0;  // widen every r_P by this many radius steps
  double x0 = -3, x1 = 3, y0 = -3, y1 = 3;
  int nx = 121, ny = 121;
};

struct NewtonRunConfig {
  NewtonConfig newton;
  std::vector<Point> initial;
};

struct ExperimentConfig {
  std::string name = "experiment";
  std::vector<Point> crack;
  IncidentConfig incident;
  ObservationConfig observation;
  int knots_per_segment = 32;
  double grading_p = 3.0;
  double noise_delta = 0.0;
  std::uint64_t seed = 0;
  std::optional<std::filesystem::path> data_file;  // measured far field instead of a forward solve
  std::optional<ContrastConfig> contrast;
  std::optional<FactorizationConfig> factorization;
  std::optional<ScanHullConfig> scan_hull;
  std::optional<NewtonRunConfig> newton;
};

/// Throws ConfigError with the JSON path of the first invalid field.
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);

// ---------------------------------------------------------------- serialization

void write_farfield_csv(const FarFieldPattern& f, const std::filesystem::path& path);
FarFieldPattern read_farfield_csv(const std::filesystem::path& path, double k);
nlohmann::json farfield_to_json(const FarFieldPattern& f, const std::string& incidence);
FarFieldPattern farfield_from_json(const nlohmann::json& j);

nlohmann::json indicator_grid_to_json(const IndicatorGrid& g);
IndicatorGrid indicator_grid_from_json(const nlohmann::json& j);
void write_indicator_csv(const IndicatorGrid& g, const std::filesystem::path& path);

nlohmann::json trace_to_json(const IterateTrace& t);
IterateTrace trace_from_json(const nlohmann::json& j);
void write_trace_csv(const IterateTrace& t, const std::filesystem::path& path);

/// Pretty JSON with a trailing newline.
void write_json(const nlohmann::json& j, const std::filesystem::path& path);

// ---------------------------------------------------------------- runner

enum class Command { Forward, MakeData, Contrast, Factorize, ScanHull, Newton };
std::optional<Command> parse_command(const std::string& name);

struct RunResult {
  std::vector<std::filesystem::path> artifacts;
  bool partial = false;  // a solver failure cut the run short
  std::string message;
};

/// Far-field data for a config: loaded from data_file or simulated, then noise-polluted.
FarFieldPattern measured_data(const ExperimentConfig& cfg);

/// Runs one command and writes its artifacts under out_dir. Deterministic for a fixed config.
RunResult run_experiment(const ExperimentConfig& cfg, Command command, const std::filesystem::path& out_dir);

/// Caps the OpenMP thread count; 0 leaves the runtime default.
void set_thread_count(int threads);

}  // namespace crackscat
