#pragma once

// Versioned JSON run configuration. Every object is read through StrictObject, which
// rejects keys it was not asked about.

#include <fstream>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "lipvar/lipvar.hpp"

namespace lipvar::cli {

using json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

/// Raised for anything wrong with the configuration; maps to exit code 2.
class ConfigError : public Error {
 public:
  using Error::Error;
};

class StrictObject {
 public:
  StrictObject(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_ + ": expected an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  template <class T>
  T get(const std::string& key, T fallback) {
    used_.insert(key);
    if (!j_.contains(key)) return fallback;
    return convert<T>(key);
  }

  template <class T>
  T require(const std::string& key) {
    used_.insert(key);
    if (!j_.contains(key)) throw ConfigError(path_ + "." + key + ": missing required field");
    return convert<T>(key);
  }

  StrictObject child(const std::string& key) {
    used_.insert(key);
    return StrictObject(j_.at(key), path_ + "." + key);
  }

  const json& raw(const std::string& key) {
    used_.insert(key);
    return j_.at(key);
  }

  void finish() const {
    for (const auto& [k, v] : j_.items()) {
      if (!used_.count(k)) throw ConfigError(path_ + "." + k + ": unknown key");
    }
  }

  const std::string& path() const { return path_; }

 private:
  template <class T>
  T convert(const std::string& key) const {
    try {
      return j_.at(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError(path_ + "." + key + ": wrong type");
    }
  }

  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

inline const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names{"transform", "variation", "coeffs",   "packing",
                                              "martingale", "sweep",    "endpoints"};
  return names;
}

struct CoeffSection {
  geometry::VCube root{{0.5}, 1.0};
  int max_depth = 2;
  coefficients::AlphaOptions alpha;
  double beta_window = 0.0;
};

struct MartingaleSection {
  martingale::MartingaleConfig config;
  geometry::VCube lepingle_cube{{0.5}, 1.0};
};

struct RunConfig {
  int schema_version = kSchemaVersion;
  std::string experiment;
  harness::ExperimentConfig exp;
  std::vector<harness::TestKind> test_functions{harness::TestKind::indicator};
  CoeffSection coeffs;
  MartingaleSection mart;
  json snapshot;  // the parsed document, echoed into the manifest
};

inline geometry::VCube parse_cube(StrictObject o) {
  const auto center = o.require<std::vector<double>>("center");
  const double side = o.require<double>("side");
  o.finish();
  if (center.empty()) throw ConfigError(o.path() + ".center: must not be empty");
  if (!(side > 0.0)) throw ConfigError(o.path() + ".side: must be positive");
  return geometry::VCube(center, side);
}

inline geometry::FamilyKind parse_family(const std::string& s, const std::string& path) {
  using geometry::FamilyKind;
  if (s == "flat") return FamilyKind::flat;
  if (s == "sawtooth") return FamilyKind::sawtooth;
  if (s == "corner") return FamilyKind::corner;
  if (s == "multiscale") return FamilyKind::multiscale;
  if (s == "from_samples") return FamilyKind::from_samples;
  throw ConfigError(path + ": unknown graph family '" + s + "'");
}

/// `samples` paths are resolved relative to base_dir.
inline geometry::FamilySpec parse_graph(StrictObject o, const std::string& base_dir) {
  geometry::FamilySpec g;
  g.kind = parse_family(o.require<std::string>("family"), o.path() + ".family");
  g.n = o.get<int>("n", 1);
  g.d = o.get<int>("d", 2);
  g.slope = o.get<double>("slope", g.slope);
  g.period = o.get<double>("period", g.period);
  g.corner_at = o.get<double>("corner_at", g.corner_at);
  g.lip = o.get<double>("lip", g.lip);
  g.seed = o.get<std::uint64_t>("seed", g.seed);
  g.levels = o.get<int>("levels", g.levels);
  if (o.has("support_box")) g.support_box = parse_cube(o.child("support_box"));
  if (o.has("declared_lip")) g.declared_lip = o.get<double>("declared_lip", 0.0);
  if (o.has("samples")) {
    std::string file = o.get<std::string>("samples", "");
    if (!file.empty() && file.front() != '/' && !base_dir.empty()) file = base_dir + "/" + file;
    std::ifstream in(file);
    if (!in) throw ConfigError(o.path() + ".samples: cannot open '" + file + "'");
    try {
      g.table = io::read_graph_csv(in);
    } catch (const InvalidArgument& e) {
      throw ConfigError(o.path() + ".samples: " + e.what());
    }
  }
  o.finish();
  if (g.kind == geometry::FamilyKind::from_samples && g.table.rows.empty()) {
    throw ConfigError(o.path() + ": from_samples needs a 'samples' file");
  }
  return g;
}

inline RunConfig parse_config(const json& doc, const std::string& base_dir) {
  RunConfig rc;
  rc.snapshot = doc;
  StrictObject top(doc, "config");
  rc.schema_version = top.require<int>("schema_version");
  if (rc.schema_version != kSchemaVersion) {
    throw ConfigError("config.schema_version: unsupported version " + std::to_string(rc.schema_version) +
                      " (this build reads " + std::to_string(kSchemaVersion) + ")");
  }
  rc.experiment = top.require<std::string>("experiment");
  const auto& names = experiment_names();
  if (std::find(names.begin(), names.end(), rc.experiment) == names.end()) {
    throw ConfigError("config.experiment: unknown experiment '" + rc.experiment + "'");
  }
  auto& e = rc.exp;
  e.graph = parse_graph(top.child("graph"), base_dir);
  e.kernel = top.get<std::string>("kernel", e.kernel);
  e.rho = top.get<double>("rho", e.rho);
  e.p = top.get<double>("p", e.p);
  if (top.has("eps_grid")) {
    auto g = top.child("eps_grid");
    e.eps.eps_max = g.get<double>("eps_max", e.eps.eps_max);
    e.eps.eps_min = g.get<double>("eps_min", e.eps.eps_min);
    e.eps.per_octave = g.get<int>("per_octave", e.eps.per_octave);
    g.finish();
  }
  e.eval_points = top.get<int>("eval_points", e.eval_points);
  e.resolutions = top.get<std::vector<double>>("resolutions", e.resolutions);
  e.seed = top.get<std::uint64_t>("seed", e.seed);
  e.diagnostic = top.get<bool>("diagnostic", false);
  if (top.has("sample_window")) e.sample_window = parse_cube(top.child("sample_window"));
  if (top.has("eval_window")) e.eval_window = parse_cube(top.child("eval_window"));
  if (top.has("test_cube")) e.test_cube = parse_cube(top.child("test_cube"));
  if (top.has("tail_radius")) e.tail_radius = top.get<double>("tail_radius", 0.0);
  e.window_boundaries = top.get<std::vector<double>>("window_boundaries", {});
  if (top.has("test_functions")) {
    rc.test_functions.clear();
    for (const auto& s : top.get<std::vector<std::string>>("test_functions", {})) {
      try {
        rc.test_functions.push_back(harness::parse_test_kind(s));
      } catch (const InvalidArgument& ex) {
        throw ConfigError(std::string("config.test_functions: ") + ex.what());
      }
    }
    if (rc.test_functions.empty()) throw ConfigError("config.test_functions: must not be empty");
  }
  if (top.has("coefficients")) {
    auto c = top.child("coefficients");
    if (c.has("root")) rc.coeffs.root = parse_cube(c.child("root"));
    rc.coeffs.max_depth = c.get<int>("max_depth", rc.coeffs.max_depth);
    rc.coeffs.beta_window = c.get<double>("beta_window", rc.coeffs.beta_window);
    auto& a = rc.coeffs.alpha;
    a.window_const = c.get<double>("window_const", a.window_const);
    a.resolution_divisor = c.get<int>("resolution_divisor", a.resolution_divisor);
    a.max_plane_evaluations = c.get<int>("max_plane_evaluations", a.max_plane_evaluations);
    c.finish();
    if (rc.coeffs.max_depth < 0) throw ConfigError("config.coefficients.max_depth: must be >= 0");
  }
  rc.coeffs.alpha.lip_hint = harness::graph_lip(e.graph);
  if (top.has("martingale")) {
    auto m = top.child("martingale");
    auto& mc = rc.mart.config;
    mc.grid_points = m.get<int>("grid_points", mc.grid_points);
    mc.m_min = m.get<int>("m_min", mc.m_min);
    mc.m_max = m.get<int>("m_max", mc.m_max);
    if (m.has("lepingle_cube")) rc.mart.lepingle_cube = parse_cube(m.child("lepingle_cube"));
    m.finish();
  }
  top.finish();
  return rc;
}

/// Applies command-line overrides, then validates everything that depends on them.
inline void finalize_config(RunConfig& rc, std::optional<std::uint64_t> seed, bool diagnostic) {
  if (seed) rc.exp.seed = *seed;
  if (diagnostic) rc.exp.diagnostic = true;
  try {
    rc.exp.validate();
    (void)harness::make_kernel(rc.exp.kernel, rc.exp.graph.n, rc.exp.graph.d);
    if (!rc.exp.window_boundaries.empty()) variation::WindowSpec w(rc.exp.window_boundaries);
    if (rc.experiment == "martingale") {
      for (double h : rc.exp.resolutions) rc.mart.config.validate(h);
    }
    if (rc.experiment == "sweep") {
      require(rc.exp.resolutions.size() >= 2, "config.resolutions: the sweep needs at least two resolutions");
    }
  } catch (const InvalidArgument& ex) {
    throw ConfigError(ex.what());
  }
}

inline RunConfig load_config(const std::string& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot open config file '" + file + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& ex) {
    throw ConfigError(std::string("config: JSON parse error: ") + ex.what());
  }
  const auto slash = file.find_last_of('/');
  return parse_config(doc, slash == std::string::npos ? std::string(".") : file.substr(0, slash));
}

}  // namespace lipvar::cli
