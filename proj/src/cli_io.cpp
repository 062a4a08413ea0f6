#include "crackscat/cli_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <set>
#include <sstream>

#include <omp.h>

#include "crackscat/numfmt.hpp"

namespace crackscat {

using nlohmann::json;

// ---------------------------------------------------------------- noise

double uniform_pm1(std::uint64_t bits) {
  const double u = static_cast<double>(bits >> 11) * 0x1.0p-53;
  return 2.0 * u - 1.0;
}

NoisyFarField add_noise(const FarFieldPattern& u, double delta, std::uint64_t seed) {
  if (!(delta >= 0.0)) throw std::invalid_argument("noise level must be nonnegative");
  NoisyFarField out{u, delta, seed, u.values};
  if (delta == 0.0) return out;
  std::mt19937_64 gen(seed);
  for (Eigen::Index p = 0; p < u.values.size(); ++p) {
    const double z1 = uniform_pm1(gen());
    const double z2 = uniform_pm1(gen());
    out.values(p) = u.values(p) + delta * Complex{z1, z2} * std::abs(u.values(p));
  }
  return out;
}

// ---------------------------------------------------------------- plot values

PlotValues plot_values(const std::vector<double>& values) {
  PlotValues out;
  out.v.assign(values.size(), 0.0);
  double lo = kIndicatorInfinity;
  double hi = -kIndicatorInfinity;
  for (double x : values) {
    if (is_infinite_sentinel(x)) continue;
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  const bool any_finite = lo <= hi;
  const bool any_inf = std::any_of(values.begin(), values.end(), is_infinite_sentinel);
  if (!any_finite || (hi == lo && !any_inf)) {
    out.constant = true;
    return out;
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (is_infinite_sentinel(values[i])) {
      out.v[i] = 1.0;
    } else if (hi > lo) {
      out.v[i] = 2.0 * (values[i] - lo) / (hi - lo) - 1.0;
    } else {
      out.v[i] = -1.0;  // every finite value sits below the sentinel
    }
  }
  return out;
}

double iteration_plot_value(int m, int total) {
  if (total <= 0) throw std::invalid_argument("iteration total must be positive");
  return 2.0 * m / total - 1.0;
}

// ---------------------------------------------------------------- config

DirectionGrid ObservationConfig::grid() const {
  return full_circle ? full_circle_grid(L) : aperture_grid(start, arc, L);
}

IncidentField IncidentConfig::field() const {
  const WaveNumber wk(k);
  return plane_wave ? IncidentField::plane_wave(wk, direction) : IncidentField::point_source(wk, source);
}

namespace {

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }
std::string index(const std::string& path, std::size_t i) { return path + "[" + std::to_string(i) + "]"; }

void check_keys(const json& j, const std::string& path, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ConfigError(path.empty() ? "<root>" : path, "must be an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, value] : j.items()) {
    if (!ok.contains(key)) throw ConfigError(join(path, key), "unknown field");
  }
}

const json& require(const json& j, const std::string& key, const std::string& path) {
  if (!j.contains(key)) throw ConfigError(join(path, key), "missing required field");
  return j.at(key);
}

double number(const json& j, const std::string& path) {
  if (!j.is_number()) throw ConfigError(path, "must be a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw ConfigError(path, "must be finite");
  return v;
}

double positive(const json& j, const std::string& path) {
  const double v = number(j, path);
  if (!(v > 0.0)) throw ConfigError(path, "must be positive");
  return v;
}

int integer(const json& j, const std::string& path) {
  if (!j.is_number_integer()) throw ConfigError(path, "must be an integer");
  return j.get<int>();
}

Point point(const json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 2) throw ConfigError(path, "must be a pair [x, y]");
  return {number(j[0], index(path, 0)), number(j[1], index(path, 1))};
}

Complex complex_value(const json& j, const std::string& path) {
  if (j.is_number()) return {number(j, path), 0.0};
  if (!j.is_array() || j.size() != 2) throw ConfigError(path, "must be a number or a pair [re, im]");
  return {number(j[0], index(path, 0)), number(j[1], index(path, 1))};
}

std::vector<Point> point_list(const json& j, const std::string& path) {
  if (!j.is_array()) throw ConfigError(path, "must be a list of [x, y] pairs");
  std::vector<Point> pts;
  for (std::size_t i = 0; i < j.size(); ++i) pts.push_back(point(j[i], index(path, i)));
  return pts;
}

// A list of points, a lattice {x0, x1, nx, y0, y1, ny}, or a circle {radius, count, phase, center}.
std::vector<Point> point_set(const json& j, const std::string& path) {
  if (j.is_array()) return point_list(j, path);
  if (j.contains("circle")) {
    check_keys(j, path, {"circle"});
    const auto& c = j["circle"];
    const std::string cp = join(path, "circle");
    check_keys(c, cp, {"radius", "count", "phase", "center"});
    const double r = positive(require(c, "radius", cp), join(cp, "radius"));
    const int count = integer(require(c, "count", cp), join(cp, "count"));
    if (count < 1) throw ConfigError(join(cp, "count"), "must be at least 1");
    const double phase = c.contains("phase") ? number(c["phase"], join(cp, "phase")) : 0.0;
    const Point center = c.contains("center") ? point(c["center"], join(cp, "center")) : Point{0.0, 0.0};
    std::vector<Point> pts;
    for (int i = 0; i < count; ++i) pts.push_back(center + r * direction(phase + 2.0 * kPi * i / count));
    return pts;
  }
  if (j.contains("lattice")) {
    check_keys(j, path, {"lattice"});
    const auto& l = j["lattice"];
    const std::string lp = join(path, "lattice");
    check_keys(l, lp, {"x0", "x1", "nx", "y0", "y1", "ny"});
    const int nx = integer(require(l, "nx", lp), join(lp, "nx"));
    const int ny = integer(require(l, "ny", lp), join(lp, "ny"));
    if (nx < 1 || ny < 1) throw ConfigError(lp, "nx and ny must be at least 1");
    return lattice(number(require(l, "x0", lp), join(lp, "x0")), number(require(l, "x1", lp), join(lp, "x1")), nx,
                   number(require(l, "y0", lp), join(lp, "y0")), number(require(l, "y1", lp), join(lp, "y1")), ny);
  }
  throw ConfigError(path, "must be a point list, {\"circle\": ...} or {\"lattice\": ...}");
}

// A list of increasing radii or {step, from, to}: r_m = m * step for m = from..to.
std::vector<double> radius_list(const json& j, const std::string& path) {
  std::vector<double> r;
  if (j.is_array()) {
    for (std::size_t i = 0; i < j.size(); ++i) r.push_back(positive(j[i], index(path, i)));
  } else {
    check_keys(j, path, {"step", "from", "to"});
    const double step = positive(require(j, "step", path), join(path, "step"));
    const int from = integer(require(j, "from", path), join(path, "from"));
    const int to = integer(require(j, "to", path), join(path, "to"));
    if (from < 1 || to < from) throw ConfigError(path, "need 1 <= from <= to");
    for (int m = from; m <= to; ++m) r.push_back(m * step);
  }
  if (r.empty()) throw ConfigError(path, "must not be empty");
  for (std::size_t i = 1; i < r.size(); ++i) {
    if (!(r[i] > r[i - 1])) throw ConfigError(index(path, i), "radii must be increasing");
  }
  return r;
}

// {"kind": "dirichlet" | "impedance" | "penetrable", "eta": ..., "index": ...}; eta defaults to i k.
BoundaryKind boundary(const json& j, const std::string& path, double k) {
  check_keys(j, path, {"kind", "eta", "index"});
  const auto& kind = require(j, "kind", path);
  if (!kind.is_string()) throw ConfigError(join(path, "kind"), "must be a string");
  const auto name = kind.get<std::string>();
  if (name == "dirichlet") return Dirichlet{};
  if (name == "impedance") {
    const Complex eta = j.contains("eta") ? complex_value(j["eta"], join(path, "eta")) : Complex{0.0, k};
    if (eta.imag() < 0.0) throw ConfigError(join(path, "eta"), "imaginary part must be nonnegative");
    return Impedance{eta};
  }
  if (name == "penetrable") return Penetrable{complex_value(require(j, "index", path), join(path, "index"))};
  throw ConfigError(join(path, "kind"), "expected dirichlet, impedance or penetrable");
}

bool flag(const json& j, const std::string& path) {
  if (!j.is_boolean()) throw ConfigError(path, "must be true or false");
  return j.get<bool>();
}

}  // namespace

ExperimentConfig parse_config(const json& j) {
  check_keys(j, "", {"name", "crack", "incident", "observation", "mesh", "noise", "data_file", "contrast",
                     "factorization", "scan_hull", "newton", "notes"});
  ExperimentConfig cfg;
  if (j.contains("name")) {
    if (!j["name"].is_string()) throw ConfigError("name", "must be a string");
    cfg.name = j["name"].get<std::string>();
  }
  cfg.crack = point_list(require(j, "crack", ""), "crack");
  try {
    PiecewiseLinearCrack check(cfg.crack);
  } catch (const GeometryError& e) {
    throw ConfigError("crack", e.what());
  }

  {
    const auto& inc = require(j, "incident", "");
    check_keys(inc, "incident", {"kind", "k", "direction", "source"});
    cfg.incident.k = positive(require(inc, "k", "incident"), "incident.k");
    const auto& kind = require(inc, "kind", "incident");
    if (kind == "plane_wave") {
      cfg.incident.plane_wave = true;
      const Point d = point(require(inc, "direction", "incident"), "incident.direction");
      if (!(d.norm() > 0.0)) throw ConfigError("incident.direction", "must be nonzero");
      cfg.incident.direction = d.normalized();
    } else if (kind == "point_source") {
      cfg.incident.plane_wave = false;
      cfg.incident.source = point(require(inc, "source", "incident"), "incident.source");
      if (PiecewiseLinearCrack(cfg.crack).distance_to(cfg.incident.source) <= 0.0) {
        throw ConfigError("incident.source", "lies on the crack");
      }
    } else {
      throw ConfigError("incident.kind", "expected plane_wave or point_source");
    }
  }

  {
    const auto& obs = require(j, "observation", "");
    check_keys(obs, "observation", {"L", "aperture"});
    cfg.observation.L = integer(require(obs, "L", "observation"), "observation.L");
    if (cfg.observation.L < 8) throw ConfigError("observation.L", "must be at least 8");
    if (obs.contains("aperture") && !(obs["aperture"].is_string() && obs["aperture"] == "full")) {
      const auto& ap = obs["aperture"];
      check_keys(ap, "observation.aperture", {"start", "arc"});
      cfg.observation.full_circle = false;
      cfg.observation.start = number(require(ap, "start", "observation.aperture"), "observation.aperture.start");
      cfg.observation.arc = positive(require(ap, "arc", "observation.aperture"), "observation.aperture.arc");
      if (cfg.observation.arc > 2.0 * kPi) throw ConfigError("observation.aperture.arc", "must not exceed 2 pi");
    }
  }

  if (j.contains("mesh")) {
    const auto& m = j["mesh"];
    check_keys(m, "mesh", {"knots_per_segment", "p"});
    if (m.contains("knots_per_segment")) {
      cfg.knots_per_segment = integer(m["knots_per_segment"], "mesh.knots_per_segment");
      if (cfg.knots_per_segment < 2 || cfg.knots_per_segment % 2 != 0) {
        throw ConfigError("mesh.knots_per_segment", "must be a positive even number");
      }
    }
    if (m.contains("p")) {
      cfg.grading_p = number(m["p"], "mesh.p");
      if (cfg.grading_p < 2.0) throw ConfigError("mesh.p", "must be >= 2");
    }
  }

  if (j.contains("noise")) {
    const auto& n = j["noise"];
    check_keys(n, "noise", {"delta", "seed"});
    if (n.contains("delta")) {
      cfg.noise_delta = number(n["delta"], "noise.delta");
      if (cfg.noise_delta < 0.0) throw ConfigError("noise.delta", "must be nonnegative");
    }
    if (n.contains("seed")) {
      const auto& sd = n["seed"];
      if (!sd.is_number_integer() || (!sd.is_number_unsigned() && sd.get<std::int64_t>() < 0)) throw ConfigError("noise.seed", "must be a nonnegative integer");
      cfg.seed = n["seed"].get<std::uint64_t>();
    }
  }

  if (j.contains("data_file")) {
    if (!j["data_file"].is_string()) throw ConfigError("data_file", "must be a path string");
    cfg.data_file = j["data_file"].get<std::string>();
  }

  const double k = cfg.incident.k;
  if (j.contains("contrast")) {
    const auto& c = j["contrast"];
    check_keys(c, "contrast", {"kind", "samples", "tau", "radius", "boundary"});
    ContrastConfig cc;
    const auto& kind = require(c, "kind", "contrast");
    if (kind == "crack_shift") {
      cc.kind = ContrastConfig::Kind::CrackShift;
    } else if (kind == "point_source") {
      cc.kind = ContrastConfig::Kind::PointSource;
    } else if (kind == "disk") {
      cc.kind = ContrastConfig::Kind::Disk;
      if (!cfg.incident.plane_wave) throw ConfigError("contrast.kind", "disk contrast needs plane-wave incidence");
    } else {
      throw ConfigError("contrast.kind", "expected crack_shift, point_source or disk");
    }
    cc.samples = point_set(require(c, "samples", "contrast"), "contrast.samples");
    if (c.contains("tau")) {
      cc.tau = complex_value(c["tau"], "contrast.tau");
      if (cc.tau == Complex{0.0, 0.0}) throw ConfigError("contrast.tau", "must be nonzero");
    }
    if (c.contains("radius")) cc.radius = positive(c["radius"], "contrast.radius");
    if (c.contains("boundary")) cc.boundary = boundary(c["boundary"], "contrast.boundary", k);
    cfg.contrast = cc;
  }

  if (j.contains("factorization")) {
    const auto& f = j["factorization"];
    check_keys(f, "factorization", {"centers", "radii", "boundary", "alpha", "raw", "analytic", "external_matrix"});
    FactorizationConfig fc;
    if (f.contains("external_matrix")) {
      if (!f["external_matrix"].is_string()) throw ConfigError("factorization.external_matrix", "must be a path");
      fc.external_matrix = f["external_matrix"].get<std::string>();
    } else {
      fc.centers = point_set(require(f, "centers", "factorization"), "factorization.centers");
      fc.radii = radius_list(require(f, "radii", "factorization"), "factorization.radii");
    }
    if (f.contains("boundary")) fc.boundary = boundary(f["boundary"], "factorization.boundary", k);
    if (f.contains("alpha")) fc.alpha = positive(f["alpha"], "factorization.alpha");
    if (f.contains("raw")) fc.raw = flag(f["raw"], "factorization.raw");
    fc.analytic = cfg.observation.full_circle;
    if (f.contains("analytic")) fc.analytic = flag(f["analytic"], "factorization.analytic");
    if (fc.analytic && !cfg.observation.full_circle) {
      throw ConfigError("factorization.analytic", "analytic eigensystems need full-aperture observations");
    }
    cfg.factorization = fc;
  }

  if (j.contains("scan_hull")) {
    const auto& s = j["scan_hull"];
    check_keys(s, "scan_hull", {"centers", "radii", "boundary", "alpha", "analytic", "epsilon", "margin_steps",
                                "support_grid"});
    ScanHullConfig sc;
    sc.centers = point_set(require(s, "centers", "scan_hull"), "scan_hull.centers");
    if (sc.centers.size() < 3) throw ConfigError("scan_hull.centers", "need at least three centers");
    sc.radii = radius_list(require(s, "radii", "scan_hull"), "scan_hull.radii");
    if (s.contains("boundary")) sc.boundary = boundary(s["boundary"], "scan_hull.boundary", k);
    if (s.contains("alpha")) sc.alpha = positive(s["alpha"], "scan_hull.alpha");
    sc.analytic = cfg.observation.full_circle;
    if (s.contains("analytic")) sc.analytic = flag(s["analytic"], "scan_hull.analytic");
    if (sc.analytic && !cfg.observation.full_circle) {
      throw ConfigError("scan_hull.analytic", "analytic eigensystems need full-aperture observations");
    }
    if (s.contains("epsilon")) sc.epsilon = positive(s["epsilon"], "scan_hull.epsilon");
    if (s.contains("margin_steps")) {
      sc.margin_steps = integer(s["margin_steps"], "scan_hull.margin_steps");
      if (sc.margin_steps < 0) throw ConfigError("scan_hull.margin_steps", "must be nonnegative");
    }
    if (s.contains("support_grid")) {
      const auto& g = s["support_grid"];
      const std::string gp = "scan_hull.support_grid";
      check_keys(g, gp, {"x0", "x1", "nx", "y0", "y1", "ny"});
      sc.x0 = number(require(g, "x0", gp), gp + ".x0");
      sc.x1 = number(require(g, "x1", gp), gp + ".x1");
      sc.y0 = number(require(g, "y0", gp), gp + ".y0");
      sc.y1 = number(require(g, "y1", gp), gp + ".y1");
      sc.nx = integer(require(g, "nx", gp), gp + ".nx");
      sc.ny = integer(require(g, "ny", gp), gp + ".ny");
      if (sc.nx < 1 || sc.ny < 1) throw ConfigError(gp, "nx and ny must be at least 1");
    }
    cfg.scan_hull = sc;
  }

  if (j.contains("newton")) {
    const auto& n = j["newton"];
    check_keys(n, "newton", {"initial", "alpha", "alpha0", "iterations", "weighted", "max_halvings"});
    NewtonRunConfig nc;
    nc.initial = point_list(require(n, "initial", "newton"), "newton.initial");
    try {
      PiecewiseLinearCrack check(nc.initial);
    } catch (const GeometryError& e) {
      throw ConfigError("newton.initial", e.what());
    }
    nc.newton.knots_per_segment = cfg.knots_per_segment;
    nc.newton.grading_p = cfg.grading_p;
    if (n.contains("alpha")) nc.newton.alpha = positive(n["alpha"], "newton.alpha");
    if (n.contains("alpha0")) nc.newton.alpha0 = positive(n["alpha0"], "newton.alpha0");
    if (n.contains("iterations")) {
      nc.newton.max_iters = integer(n["iterations"], "newton.iterations");
      if (nc.newton.max_iters < 1) throw ConfigError("newton.iterations", "must be at least 1");
    }
    if (n.contains("weighted")) nc.newton.weighted = flag(n["weighted"], "newton.weighted");
    if (n.contains("max_halvings")) {
      nc.newton.max_halvings = integer(n["max_halvings"], "newton.max_halvings");
      if (nc.newton.max_halvings < 0) throw ConfigError("newton.max_halvings", "must be nonnegative");
    }
    cfg.newton = nc;
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("<file>", "cannot open " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("<file>", std::string("malformed JSON: ") + e.what());
  }
  auto cfg = parse_config(j);
  // Relative data paths are resolved against the config file's directory.
  const auto base = path.parent_path();
  if (cfg.data_file && cfg.data_file->is_relative()) cfg.data_file = base / *cfg.data_file;
  if (cfg.factorization && cfg.factorization->external_matrix && cfg.factorization->external_matrix->is_relative()) {
    cfg.factorization->external_matrix = base / *cfg.factorization->external_matrix;
  }
  return cfg;
}

// ---------------------------------------------------------------- serialization

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  return out;
}

json point_json(const Point& p) { return json::array({p.x(), p.y()}); }

Point point_from(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>()}; }

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(field);
  return out;
}

}  // namespace

void write_farfield_csv(const FarFieldPattern& f, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "angle_rad,re,im\n";
  for (int p = 0; p < f.size(); ++p) {
    out << format_double(f.angles[static_cast<std::size_t>(p)]) << ',' << format_double(f.values(p).real()) << ','
        << format_double(f.values(p).imag()) << '\n';
  }
}

FarFieldPattern read_farfield_csv(const std::filesystem::path& path, double k) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line.rfind("angle_rad,re,im", 0) != 0) {
    throw std::runtime_error(path.string() + ": expected header angle_rad,re,im");
  }
  FarFieldPattern f;
  f.k = k;
  std::vector<Complex> vals;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto fields = split_csv(line);
    if (fields.size() != 3) throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": need 3 columns");
    try {
      f.angles.push_back(parse_double(fields[0]));
      vals.emplace_back(parse_double(fields[1]), parse_double(fields[2]));
    } catch (const std::invalid_argument& e) {
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  f.values = Eigen::Map<const CVector>(vals.data(), static_cast<Eigen::Index>(vals.size()));
  return f;
}

json farfield_to_json(const FarFieldPattern& f, const std::string& incidence) {
  json values = json::array();
  for (int p = 0; p < f.size(); ++p) {
    values.push_back({{"angle_rad", f.angles[static_cast<std::size_t>(p)]},
                      {"re", f.values(p).real()},
                      {"im", f.values(p).imag()}});
  }
  return {{"k", f.k}, {"incidence", incidence}, {"values", values}};
}

FarFieldPattern farfield_from_json(const json& j) {
  FarFieldPattern f;
  f.k = j.at("k").get<double>();
  const auto& v = j.at("values");
  f.values.resize(static_cast<Eigen::Index>(v.size()));
  for (std::size_t p = 0; p < v.size(); ++p) {
    f.angles.push_back(v[p].at("angle_rad").get<double>());
    f.values(static_cast<Eigen::Index>(p)) = {v[p].at("re").get<double>(), v[p].at("im").get<double>()};
  }
  return f;
}

json indicator_grid_to_json(const IndicatorGrid& g) {
  json samples = json::array();
  for (std::size_t i = 0; i < g.samples.size(); ++i) {
    json s;
    if (const auto* sh = std::get_if<ShiftSample>(&g.samples[i])) {
      s = {{"type", "shift"}, {"a", point_json(sh->a)}};
    } else if (const auto* ps = std::get_if<PointSample>(&g.samples[i])) {
      s = {{"type", "point"}, {"p", point_json(ps->p)}};
    } else {
      const auto& d = std::get<DiskSample>(g.samples[i]);
      s = {{"type", "disk"}, {"p", point_json(d.p)}, {"r", d.r}};
    }
    s["value"] = g.values[i];
    s["infinite"] = is_infinite_sentinel(g.values[i]);
    samples.push_back(std::move(s));
  }
  return {{"metadata", {{"k", g.k}, {"incidence", g.incidence}, {"aperture", g.aperture}}}, {"samples", samples}};
}

IndicatorGrid indicator_grid_from_json(const json& j) {
  IndicatorGrid g;
  const auto& meta = j.at("metadata");
  g.k = meta.at("k").get<double>();
  g.incidence = meta.at("incidence").get<std::string>();
  g.aperture = meta.at("aperture").get<std::string>();
  for (const auto& s : j.at("samples")) {
    const auto type = s.at("type").get<std::string>();
    if (type == "shift") {
      g.samples.emplace_back(ShiftSample{point_from(s.at("a"))});
    } else if (type == "point") {
      g.samples.emplace_back(PointSample{point_from(s.at("p"))});
    } else if (type == "disk") {
      g.samples.emplace_back(DiskSample{point_from(s.at("p")), s.at("r").get<double>()});
    } else {
      throw std::runtime_error("unknown sample type " + type);
    }
    g.values.push_back(s.at("infinite").get<bool>() ? kIndicatorInfinity : s.at("value").get<double>());
  }
  return g;
}

void write_indicator_csv(const IndicatorGrid& g, const std::filesystem::path& path) {
  auto out = open_out(path);
  const auto pv = plot_values(g.values);
  out << "type,x,y,r,value,infinite,plot_value\n";
  for (std::size_t i = 0; i < g.samples.size(); ++i) {
    Point p;
    double r = 0.0;
    std::string type;
    if (const auto* sh = std::get_if<ShiftSample>(&g.samples[i])) {
      type = "shift";
      p = sh->a;
    } else if (const auto* ps = std::get_if<PointSample>(&g.samples[i])) {
      type = "point";
      p = ps->p;
    } else {
      const auto& d = std::get<DiskSample>(g.samples[i]);
      type = "disk";
      p = d.p;
      r = d.r;
    }
    out << type << ',' << format_double(p.x()) << ',' << format_double(p.y()) << ',' << format_double(r) << ','
        << format_double(g.values[i]) << ',' << (is_infinite_sentinel(g.values[i]) ? 1 : 0) << ','
        << format_double(pv.v[i]) << '\n';
  }
}

json trace_to_json(const IterateTrace& t) {
  json steps = json::array();
  for (const auto& s : t.steps) {
    json corners = json::array();
    for (const auto& c : s.corners) corners.push_back(point_json(c));
    steps.push_back({{"step", s.step},
                     {"corners", corners},
                     {"residual", s.residual},
                     {"candidate", s.candidate},
                     {"halvings", s.halvings}});
  }
  return {{"steps", steps}, {"aborted", t.aborted}, {"abort_reason", t.abort_reason}};
}

IterateTrace trace_from_json(const json& j) {
  IterateTrace t;
  t.aborted = j.at("aborted").get<bool>();
  t.abort_reason = j.at("abort_reason").get<std::string>();
  for (const auto& s : j.at("steps")) {
    IterateRecord r;
    r.step = s.at("step").get<int>();
    for (const auto& c : s.at("corners")) r.corners.push_back(point_from(c));
    // NaN residuals are written as null
    const auto& res = s.at("residual");
    r.residual = res.is_null() ? std::numeric_limits<double>::quiet_NaN() : res.get<double>();
    r.candidate = s.at("candidate").get<std::string>();
    r.halvings = s.at("halvings").get<int>();
    t.steps.push_back(std::move(r));
  }
  return t;
}

void write_trace_csv(const IterateTrace& t, const std::filesystem::path& path) {
  auto out = open_out(path);
  const int total = t.steps.empty() ? 1 : std::max(1, t.steps.back().step);
  out << "step,corner,x,y,residual,candidate,plot_value\n";
  for (const auto& s : t.steps) {
    for (std::size_t c = 0; c < s.corners.size(); ++c) {
      out << s.step << ',' << c << ',' << format_double(s.corners[c].x()) << ',' << format_double(s.corners[c].y())
          << ',' << format_double(s.residual) << ',' << s.candidate << ','
          << format_double(iteration_plot_value(s.step, total)) << '\n';
    }
  }
}

void write_json(const json& j, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << j.dump(2) << '\n';
}

// ---------------------------------------------------------------- runner

std::optional<Command> parse_command(const std::string& name) {
  if (name == "forward") return Command::Forward;
  if (name == "make-data") return Command::MakeData;
  if (name == "contrast") return Command::Contrast;
  if (name == "factorize") return Command::Factorize;
  if (name == "scan-hull") return Command::ScanHull;
  if (name == "newton") return Command::Newton;
  return std::nullopt;
}

void set_thread_count(int threads) {
  if (threads > 0) omp_set_num_threads(threads);
}

namespace {

std::string incidence_text(const IncidentConfig& inc) {
  if (inc.plane_wave) {
    return "plane_wave d=(" + format_double(inc.direction.x()) + "," + format_double(inc.direction.y()) + ")";
  }
  return "point_source y0=(" + format_double(inc.source.x()) + "," + format_double(inc.source.y()) + ")";
}

GradingParams grading_of(const ExperimentConfig& cfg, const PiecewiseLinearCrack& crack) {
  return grading_for(crack, cfg.knots_per_segment, cfg.grading_p);
}

FarFieldPattern clean_farfield(const ExperimentConfig& cfg) {
  const PiecewiseLinearCrack crack(cfg.crack);
  return simulate_farfield(crack, cfg.incident.field(), grading_of(cfg, crack), cfg.observation.grid().angles);
}

json data_json(const ExperimentConfig& cfg, const FarFieldPattern& f) {
  auto j = farfield_to_json(f, incidence_text(cfg.incident));
  j["noise"] = {{"delta", cfg.noise_delta}, {"seed", cfg.seed}};
  return j;
}

}  // namespace

FarFieldPattern measured_data(const ExperimentConfig& cfg) {
  const auto grid = cfg.observation.grid();
  FarFieldPattern base;
  if (cfg.data_file) {
    try {
      base = read_farfield_csv(*cfg.data_file, cfg.incident.k);
    } catch (const std::runtime_error& e) {
      throw ConfigError("data_file", e.what());
    }
    if (base.size() != grid.size()) {
      throw ConfigError("data_file", "has " + std::to_string(base.size()) + " directions, the observation grid has " +
                                         std::to_string(grid.size()));
    }
  } else {
    base = clean_farfield(cfg);
  }
  auto noisy = add_noise(base, cfg.noise_delta, cfg.seed);
  base.values = noisy.values;
  return base;
}

RunResult run_experiment(const ExperimentConfig& cfg, Command command, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  RunResult result;
  auto emit = [&](const std::string& name) {
    const auto p = out_dir / name;
    result.artifacts.push_back(p);
    return p;
  };
  const PiecewiseLinearCrack crack(cfg.crack);
  const IncidentField incident = cfg.incident.field();
  const DirectionGrid grid = cfg.observation.grid();

  switch (command) {
    case Command::Forward: {
      const auto sol = solve_density(crack, grading_of(cfg, crack), incident);
      FarFieldPattern ff = farfield(sol, grid.angles);
      write_farfield_csv(ff, emit("forward_farfield.csv"));
      auto j = farfield_to_json(ff, incidence_text(cfg.incident));
      j["solver"] = {{"knots", sol.mesh->size()}, {"rcond", sol.rcond}, {"residual", sol.residual}};
      write_json(j, emit("forward_farfield.json"));
      auto out = std::ofstream(emit("density.csv"));
      out << "j,s,t,x,y,wprime,re,im\n";
      const auto& m = *sol.mesh;
      for (int i = 0; i < m.size(); ++i) {
        const auto ui = static_cast<std::size_t>(i);
        out << i << ',' << format_double(m.s[ui]) << ',' << format_double(m.t[ui]) << ','
            << format_double(m.knots[ui].x()) << ',' << format_double(m.knots[ui].y()) << ','
            << format_double(m.wprime[ui]) << ',' << format_double(sol.wpsi(i).real()) << ','
            << format_double(sol.wpsi(i).imag()) << '\n';
      }
      break;
    }
    case Command::MakeData: {
      const auto data = measured_data(cfg);
      write_farfield_csv(data, emit("data.csv"));
      write_json(data_json(cfg, data), emit("data.json"));
      break;
    }
    case Command::Contrast: {
      if (!cfg.contrast) throw ConfigError("contrast", "missing block for the contrast command");
      const auto& cc = *cfg.contrast;
      const auto data = measured_data(cfg);
      IndicatorGrid g;
      switch (cc.kind) {
        case ContrastConfig::Kind::CrackShift:
          g = contrast_crack(data, crack, incident, cc.samples, grading_of(cfg, crack), grid.weights);
          break;
        case ContrastConfig::Kind::PointSource:
          g = contrast_point_source_grid(data, cc.samples, cc.tau, grid.weights);
          g.incidence = incidence_text(cfg.incident);
          break;
        case ContrastConfig::Kind::Disk:
          g = contrast_disk(data, cc.samples, cc.radius, cc.boundary, incident, grid.weights);
          break;
      }
      write_indicator_csv(g, emit("contrast.csv"));
      write_json(indicator_grid_to_json(g), emit("contrast.json"));
      break;
    }
    case Command::Factorize: {
      if (!cfg.factorization) throw ConfigError("factorization", "missing block for the factorize command");
      const auto& fc = *cfg.factorization;
      const auto data = measured_data(cfg);
      const std::optional<double> alpha = fc.raw ? std::nullopt : std::optional<double>(fc.alpha);
      if (fc.external_matrix) {
        FarFieldMatrix m;
        try {
          m = read_farfield_matrix(*fc.external_matrix);
        } catch (const std::runtime_error& e) {
          throw ConfigError("factorization.external_matrix", e.what());
        }
        if (m.grid.size() != data.size()) {
          throw ConfigError("factorization.external_matrix", "grid size differs from the observation grid");
        }
        const auto eig = fsharp_eigensystem(m);
        const double v = factorization_indicator(data.values, eig, alpha);
        write_json({{"value", v},
                    {"infinite", is_infinite_sentinel(v)},
                    {"alpha", fc.raw ? json(nullptr) : json(fc.alpha)},
                    {"matrix", fc.external_matrix->string()},
                    {"lambda_max", eig.lambdas.size() ? eig.lambdas(0) : 0.0}},
                   emit("factorize_external.json"));
        break;
      }
      DiskScanSetup setup{grid, cfg.incident.k, fc.boundary, fc.alpha, fc.analytic};
      IndicatorGrid g{{}, {}, cfg.incident.k, incidence_text(cfg.incident),
                      grid.full_circle ? "full" : "aperture"};
      for (const auto& c : fc.centers) {
        std::vector<double> values;
        if (fc.raw) {
          for (double r : fc.radii) {
            const DiskScatterer disk(c, r, fc.boundary);
            const WaveNumber wk(cfg.incident.k);
            const auto eig = fc.analytic ? disk_eigensystem(disk, grid, wk) : disk_fsharp_eigensystem(disk, grid, wk);
            values.push_back(factorization_indicator(data.values, eig, std::nullopt));
          }
        } else {
          values = disk_indicator_curve(data.values, c, fc.radii, setup);
        }
        for (std::size_t i = 0; i < fc.radii.size(); ++i) {
          g.samples.emplace_back(DiskSample{c, fc.radii[i]});
          g.values.push_back(values[i]);
        }
      }
      write_indicator_csv(g, emit("factorize.csv"));
      auto j = indicator_grid_to_json(g);
      j["metadata"]["alpha"] = fc.raw ? json(nullptr) : json(fc.alpha);
      write_json(j, emit("factorize.json"));
      break;
    }
    case Command::ScanHull: {
      if (!cfg.scan_hull) throw ConfigError("scan_hull", "missing block for the scan-hull command");
      const auto& sc = *cfg.scan_hull;
      const auto data = measured_data(cfg);
      DiskScanSetup setup{grid, cfg.incident.k, sc.boundary, sc.alpha, sc.analytic};
      std::vector<std::vector<double>> curves;
      for (const auto& c : sc.centers) curves.push_back(disk_indicator_curve(data.values, c, sc.radii, setup));
      // Epsilon is read off the first center's curve unless configured.
      const double eps = sc.epsilon ? *sc.epsilon : radius_scan(sc.radii, curves.front(), std::nullopt).epsilon;
      const double step = sc.radii.size() > 1 ? sc.radii[1] - sc.radii[0] : sc.radii[0];
      std::vector<double> rp;
      std::vector<bool> none;
      for (const auto& curve : curves) {
        const auto scan = radius_scan(sc.radii, curve, eps);
        rp.push_back(scan.none_below ? 0.0 : scan.r + sc.margin_steps * step);
        none.push_back(scan.none_below);
      }
      const auto support = support_accumulate(sc.centers, rp, lattice(sc.x0, sc.x1, sc.nx, sc.y0, sc.y1, sc.ny));

      {
        auto out = std::ofstream(emit("scan_radii.csv"));
        out << "index,cx,cy,r,none_below\n";
        for (std::size_t i = 0; i < sc.centers.size(); ++i) {
          out << i << ',' << format_double(sc.centers[i].x()) << ',' << format_double(sc.centers[i].y()) << ','
              << format_double(rp[i]) << ',' << (none[i] ? 1 : 0) << '\n';
        }
      }
      {
        auto out = std::ofstream(emit("scan_curves.csv"));
        out << "index,radius,value\n";
        for (std::size_t i = 0; i < curves.size(); ++i) {
          for (std::size_t m = 0; m < sc.radii.size(); ++m) {
            out << i << ',' << format_double(sc.radii[m]) << ',' << format_double(curves[i][m]) << '\n';
          }
        }
      }
      {
        auto out = std::ofstream(emit("support.csv"));
        out << "x,y,count\n";
        for (std::size_t i = 0; i < support.points.size(); ++i) {
          out << format_double(support.points[i].x()) << ',' << format_double(support.points[i].y()) << ','
              << support.counts[i] << '\n';
        }
      }
      json centers = json::array();
      for (std::size_t i = 0; i < sc.centers.size(); ++i) {
        centers.push_back({{"center", point_json(sc.centers[i])}, {"r", rp[i]}, {"none_below", bool(none[i])}});
      }
      write_json({{"epsilon", eps},
                  {"epsilon_configured", sc.epsilon.has_value()},
                  {"alpha", sc.alpha},
                  {"margin_steps", sc.margin_steps},
                  {"max_count", support.max_count},
                  {"centers", centers}},
                 emit("scan_hull.json"));
      break;
    }
    case Command::Newton: {
      if (!cfg.newton) throw ConfigError("newton", "missing block for the newton command");
      const auto data = measured_data(cfg);
      const FarFieldData fd{data, grid.weights};
      const auto trace = reconstruct(PiecewiseLinearCrack(cfg.newton->initial), fd, incident, cfg.newton->newton);
      write_json(trace_to_json(trace), emit("trace.json"));
      write_trace_csv(trace, emit("trace.csv"));
      if (trace.aborted) {
        result.partial = true;
        result.message = trace.abort_reason;
      }
      break;
    }
  }
  return result;
}

}  // namespace crackscat
