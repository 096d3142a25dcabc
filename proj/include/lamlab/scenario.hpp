#pragma once

// Declarative scenarios: a TOML-subset file names a manifold, a potential
// from the built-in catalog, solver settings and one task. `load_scenario`
// validates everything up front (InvalidArgument on any problem) and
// resolves defaults; `run_scenario` executes the task and writes
// report.json plus CSV traces into the output directory.

#include "lamlab/ccdiag.hpp"
#include "lamlab/core.hpp"
#include "lamlab/detail/toml_lite.hpp"
#include "lamlab/entropy.hpp"
#include "lamlab/forms.hpp"
#include "lamlab/geometry.hpp"
#include "lamlab/spectral.hpp"
#include "lamlab/verify.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace lamlab::scenario {

using json = nlohmann::json;
namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Logging: LAMLAB_LOG = quiet | info | debug (default info), to stderr.

enum class LogLevel { Quiet = 0, Info = 1, Debug = 2 };

inline LogLevel log_level() {
  static const LogLevel level = [] {
    const char* env = std::getenv("LAMLAB_LOG");
    if (!env) return LogLevel::Info;
    const std::string v(env);
    if (v == "quiet" || v == "0") return LogLevel::Quiet;
    if (v == "debug" || v == "2") return LogLevel::Debug;
    return LogLevel::Info;
  }();
  return level;
}

inline void log(LogLevel at, const std::string& msg) {
  if (static_cast<int>(log_level()) >= static_cast<int>(at)) std::cerr << "[lamlab] " << msg << '\n';
}

// ---------------------------------------------------------------------------
// Table reader. Every key read is echoed (with its default when absent) into
// `resolved`; keys nobody read are rejected by done().

class Table {
 public:
  Table(json src, std::string path) : src_(std::move(src)), path_(std::move(path)) {
    if (src_.is_null()) src_ = json::object();
    if (!src_.is_object()) fail_at(path_, "must be a table");
  }

  bool has(const std::string& key) const { return src_.contains(key); }

  double number(const std::string& key, std::optional<double> def = std::nullopt) {
    const json* v = get(key);
    double x;
    if (!v) {
      if (!def) missing(key);
      x = *def;
    } else {
      if (!v->is_number()) fail(key, "must be a number");
      x = v->get<double>();
    }
    if (!std::isfinite(x)) fail(key, "must be finite");
    resolved[key] = x;
    return x;
  }

  double positive(const std::string& key, std::optional<double> def = std::nullopt) {
    const double x = number(key, def);
    if (!(x > 0.0)) fail(key, "must be > 0");
    return x;
  }

  std::int64_t integer(const std::string& key, std::optional<std::int64_t> def = std::nullopt) {
    const json* v = get(key);
    std::int64_t x;
    if (!v) {
      if (!def) missing(key);
      x = *def;
    } else {
      if (!v->is_number_integer()) fail(key, "must be an integer");
      x = v->get<std::int64_t>();
    }
    resolved[key] = x;
    return x;
  }

  std::uint64_t seed(const std::string& key, std::uint64_t def) {
    const json* v = get(key);
    std::uint64_t x = def;
    if (v) {
      if (!v->is_number_integer() || v->get<std::int64_t>() < 0) fail(key, "must be a nonnegative integer");
      x = v->get<std::uint64_t>();
    }
    resolved[key] = x;
    return x;
  }

  bool boolean(const std::string& key, bool def) {
    const json* v = get(key);
    bool x = def;
    if (v) {
      if (!v->is_boolean()) fail(key, "must be true or false");
      x = v->get<bool>();
    }
    resolved[key] = x;
    return x;
  }

  std::string string(const std::string& key, std::optional<std::string> def = std::nullopt) {
    const json* v = get(key);
    std::string x;
    if (!v) {
      if (!def) missing(key);
      x = *def;
    } else {
      if (!v->is_string()) fail(key, "must be a string");
      x = v->get<std::string>();
    }
    resolved[key] = x;
    return x;
  }

  std::string choice(const std::string& key, const std::vector<std::string>& allowed,
                     std::optional<std::string> def = std::nullopt) {
    const std::string x = string(key, def);
    if (std::find(allowed.begin(), allowed.end(), x) == allowed.end()) {
      std::string list;
      for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
      fail(key, "unknown value '" + x + "' (expected one of: " + list + ")");
    }
    return x;
  }

  std::vector<double> numbers(const std::string& key,
                              std::optional<std::vector<double>> def = std::nullopt) {
    const json* v = get(key);
    std::vector<double> x;
    if (!v) {
      if (!def) missing(key);
      x = *def;
    } else {
      if (!v->is_array()) fail(key, "must be an array of numbers");
      for (const json& e : *v) {
        if (!e.is_number()) fail(key, "must be an array of numbers");
        x.push_back(e.get<double>());
      }
    }
    for (double d : x)
      if (!std::isfinite(d)) fail(key, "entries must be finite");
    resolved[key] = x;
    return x;
  }

  std::vector<std::vector<double>> rows(const std::string& key, std::size_t width,
                                        std::optional<std::vector<std::vector<double>>> def =
                                            std::nullopt) {
    const json* v = get(key);
    std::vector<std::vector<double>> x;
    if (!v) {
      if (!def) missing(key);
      x = *def;
    } else {
      if (!v->is_array()) fail(key, "must be an array of rows");
      for (const json& row : *v) {
        if (!row.is_array() || row.size() != width)
          fail(key, "every row must have " + std::to_string(width) + " numbers");
        std::vector<double> r;
        for (const json& e : row) {
          if (!e.is_number()) fail(key, "rows must contain numbers");
          r.push_back(e.get<double>());
        }
        x.push_back(std::move(r));
      }
    }
    resolved[key] = x;
    return x;
  }

  Table sub(const std::string& key) {
    const json* v = get(key);
    return Table(v ? *v : json::object(), path_.empty() ? key : path_ + "." + key);
  }

  void put(const std::string& key, json value) { resolved[key] = std::move(value); }

  json done() const {
    for (const auto& [k, v] : src_.items())
      if (!seen_.count(k)) fail_at(qualified(k), "unknown field");
    return resolved;
  }

  [[noreturn]] void fail(const std::string& key, const std::string& what) const {
    fail_at(qualified(key), what);
  }

  const std::string& path() const { return path_; }

  json resolved = json::object();

 private:
  const json* get(const std::string& key) {
    seen_.insert(key);
    return src_.contains(key) ? &src_[key] : nullptr;
  }
  std::string qualified(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  [[noreturn]] void missing(const std::string& key) const { fail(key, "is required"); }
  [[noreturn]] static void fail_at(const std::string& field, const std::string& what) {
    throw InvalidArgument("scenario field '" + field + "' " + what);
  }

  json src_;
  std::string path_;
  std::set<std::string> seen_;
};

// ---------------------------------------------------------------------------
// Catalogs

inline const std::vector<std::string>& manifold_kinds() {
  static const std::vector<std::string> k{"radial", "circle", "torus", "grid", "path", "single", "graph"};
  return k;
}
inline const std::vector<std::string>& warp_names() {
  static const std::vector<std::string> k{"power", "sinh", "constant", "tabulated"};
  return k;
}
inline const std::vector<std::string>& potential_names() {
  static const std::vector<std::string> k{"constant", "harmonic", "gaussian_well", "power",
                                          "tabulated", "divergence_form"};
  return k;
}
inline const std::vector<std::string>& task_names() {
  static const std::vector<std::string> k{"lambda", "exhaustion", "lambda-inf", "mu", "d", "prop6",
                                          "groundstate", "growth", "trichotomy", "verify"};
  return k;
}

inline Warp read_warp(Table& t) {
  const std::string name = t.choice("name", warp_names(), "power");
  if (name == "power") return Warp::power(t.positive("scale", 1.0), t.number("exponent", 1.0));
  if (name == "sinh") return Warp::sinh(t.positive("k", 1.0));
  if (name == "constant") return Warp::constant(t.positive("a", 1.0));
  const std::vector<double> r = t.numbers("r");
  const std::vector<double> phi = t.numbers("phi");
  if (r.size() != phi.size() || r.size() < 2) t.fail("phi", "needs one value per r sample (>= 2)");
  for (std::size_t k = 1; k < r.size(); ++k)
    if (!(r[k] > r[k - 1])) t.fail("r", "must be increasing");
  return Warp::tabulated(r, phi);
}

inline DiscreteManifold read_manifold(Table& t) {
  const std::string kind = t.choice("kind", manifold_kinds());
  if (kind == "radial") {
    RadialSpec spec;
    spec.dimension = static_cast<int>(t.integer("dimension", 2));
    if (spec.dimension < 2) t.fail("dimension", "must be >= 2 for radial grids");
    spec.r_max = t.positive("r_max");
    spec.h = t.positive("h");
    Table w = t.sub("warp");
    spec.warp = read_warp(w);
    t.put("warp", w.done());
    return build_radial(spec);
  }
  if (kind == "circle") {
    const auto n = t.integer("nodes");
    if (n < 3) t.fail("nodes", "must be >= 3");
    return build_circle(n, t.positive("circumference", 2.0 * std::numbers::pi));
  }
  if (kind == "torus" || kind == "grid") {
    const auto nx = t.integer("nx");
    const auto ny = t.integer("ny");
    const Index lo = kind == "torus" ? 3 : 2;
    if (nx < lo || ny < lo) t.fail("nx", "grid sizes are too small");
    const double s = t.positive("spacing", 1.0);
    return kind == "torus" ? build_torus(nx, ny, s) : build_grid(nx, ny, s);
  }
  if (kind == "path") {
    const auto n = t.integer("nodes");
    if (n < 2) t.fail("nodes", "must be >= 2");
    const double h = t.positive("h");
    const double a = t.positive("cross_section", 1.0);
    const bool left = t.boolean("dirichlet_left", true);
    const bool right = t.boolean("dirichlet_right", true);
    return build_path(n, h, a, left, right);
  }
  if (kind == "single") return build_single_node(t.positive("volume", 1.0));

  const std::vector<double> volumes = t.numbers("volumes");
  if (volumes.empty()) t.fail("volumes", "must not be empty");
  std::vector<Edge> edges;
  for (const auto& r : t.rows("edges", 4, std::vector<std::vector<double>>{}))
    edges.push_back({static_cast<Index>(r[0]), static_cast<Index>(r[1]), r[2], r[3]});
  std::vector<Ghost> ghosts;
  for (const auto& r : t.rows("ghosts", 3, std::vector<std::vector<double>>{}))
    ghosts.push_back({static_cast<Index>(r[0]), r[1], r[2]});
  const auto dim = t.integer("dimension", 1);
  const auto base = t.integer("base", 0);
  return DiscreteManifold(volumes, std::move(edges), static_cast<int>(dim), base, std::move(ghosts));
}

struct PotentialInfo {
  NodeField values;
  std::optional<double> v_infinity;
  std::optional<double> profile_gradient_sup;  // divergence_form only
  std::string family;
};

inline double interpolate(const std::vector<double>& x, const std::vector<double>& y, double at) {
  if (at <= x.front()) return y.front();
  if (at >= x.back()) return y.back();
  const auto it = std::upper_bound(x.begin(), x.end(), at);
  const auto k = static_cast<std::size_t>(it - x.begin());
  const double t = (at - x[k - 1]) / (x[k] - x[k - 1]);
  return (1.0 - t) * y[k - 1] + t * y[k];
}

/// Potentials are functions of the distance r from the base point.
inline PotentialInfo read_potential(Table& t, const std::shared_ptr<const DiscreteManifold>& m) {
  PotentialInfo info;
  info.family = t.choice("name", potential_names(), "constant");
  const auto& r = m->node_distances();
  const Index n = m->size();
  info.values.resize(n);
  auto fill = [&](auto f) {
    for (Index i = 0; i < n; ++i) info.values[i] = f(r[static_cast<std::size_t>(i)]);
  };
  if (info.family == "constant") {
    const double c = t.number("value", 0.0);
    fill([c](double) { return c; });
  } else if (info.family == "harmonic") {
    const double s = t.number("scale", 1.0);
    fill([s](double x) { return s * x * x; });
  } else if (info.family == "gaussian_well") {
    const double base = t.number("base", 1.0);
    const double depth = t.number("depth");
    const double width = t.positive("width", 1.0);
    fill([=](double x) { return base - depth * std::exp(-(x * x) / (width * width)); });
  } else if (info.family == "power") {
    const double s = t.number("scale", 1.0);
    const double p = t.number("exponent", 1.0);
    const double off = t.number("offset", 0.0);
    fill([=](double x) { return off + s * std::pow(x, p); });
  } else if (info.family == "tabulated") {
    const std::vector<double> rs = t.numbers("r");
    const std::vector<double> vs = t.numbers("v");
    if (rs.size() != vs.size() || rs.size() < 2) t.fail("v", "needs one value per r sample (>= 2)");
    for (std::size_t k = 1; k < rs.size(); ++k)
      if (!(rs[k] > rs[k - 1])) t.fail("r", "must be increasing");
    fill([&](double x) { return interpolate(rs, vs, x); });
  } else {
    const std::string profile = t.choice("profile", {"log1p", "linear", "gaussian"}, "log1p");
    const double s = t.number("scale", 1.0);
    NodeField u(n);
    for (Index i = 0; i < n; ++i) {
      const double x = r[static_cast<std::size_t>(i)];
      u[i] = profile == "log1p" ? s * std::log1p(x) : profile == "linear" ? s * x : s * std::exp(-x * x);
    }
    const OperatorPair bare = assemble(m, NodeField::Zero(n));
    const DivergencePotential dp = divergence_form_potential(bare, u);
    info.values = dp.potential;
    info.profile_gradient_sup = dp.gradient_sup;
  }
  if (t.has("v_infinity")) info.v_infinity = t.number("v_infinity");
  for (Index i = 0; i < n; ++i)
    if (!std::isfinite(info.values[i])) t.fail("name", "produces a non-finite value at node " + std::to_string(i));
  return info;
}

// ---------------------------------------------------------------------------
// Scenario

struct RegionSpec {
  RegionKind kind = RegionKind::Whole;
  std::vector<double> params;
};

struct Scenario {
  json resolved;
  std::string task;
  std::uint64_t seed = 0;
  std::string out_dir = "out";
  std::shared_ptr<const DiscreteManifold> manifold;
  OperatorPair ops;
  PotentialInfo potential;
  SpectralOptions spectral;
  EntropyOptions entropy;
  double delta = 1e-4;
  json params;  // resolved [params] table of the task
};

inline RegionSpec read_region(Table& t) {
  static const std::vector<std::string> kinds{"whole", "ball", "exterior", "annulus"};
  const std::string k = t.choice("region", kinds, "whole");
  RegionSpec r;
  r.params = t.numbers("region_params", std::vector<double>{});
  r.kind = k == "whole" ? RegionKind::Whole
           : k == "ball" ? RegionKind::Ball
           : k == "exterior" ? RegionKind::Exterior
                             : RegionKind::Annulus;
  return r;
}

inline RegionSpec region_from_json(const json& p) {
  RegionSpec r;
  const std::string k = p.at("region").get<std::string>();
  r.kind = k == "whole" ? RegionKind::Whole
           : k == "ball" ? RegionKind::Ball
           : k == "exterior" ? RegionKind::Exterior
                             : RegionKind::Annulus;
  r.params = p.at("region_params").get<std::vector<double>>();
  return r;
}

inline void check_increasing(Table& t, const std::string& key, const std::vector<double>& v,
                             std::size_t min_size) {
  if (v.size() < min_size) t.fail(key, "needs at least " + std::to_string(min_size) + " entries");
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (!(v[k] >= 0.0)) t.fail(key, "entries must be >= 0");
    if (k > 0 && !(v[k] > v[k - 1])) t.fail(key, "must be increasing");
  }
}

inline json read_params(Table& t, const std::string& task, const DiscreteManifold& m) {
  if (task == "lambda" || task == "mu" || task == "d" || task == "prop6" || task == "groundstate") {
    const RegionSpec r = read_region(t);
    make_region(m, r.kind, r.params);  // validates now rather than mid-run
    if (task == "groundstate") t.choice("solve", {"lambda", "mu", "d"}, "lambda");
  } else if (task == "exhaustion") {
    check_increasing(t, "radii", t.numbers("radii"), 1);
  } else if (task == "lambda-inf") {
    check_increasing(t, "radii", t.numbers("radii"), 1);
    t.boolean("entropy", false);
  } else if (task == "growth") {
    const double lo = t.positive("r_min");
    const double hi = t.positive("r_max");
    if (!(hi > lo)) t.fail("r_max", "must exceed r_min");
    if (t.integer("samples", 16) < 4) t.fail("samples", "must be >= 4");
  } else if (task == "trichotomy") {
    check_increasing(t, "radii", t.numbers("radii"), 2);
    t.positive("r_probe");
    t.numbers("exterior_radii", std::vector<double>{});
    const TrichotomyThresholds d;
    const double ev = t.positive("eps_vanishing", d.eps_vanishing);
    const double ed = t.positive("eps_dichotomy", d.eps_dichotomy);
    const double ec = t.positive("eps_compact", d.eps_compact);
    if (ev + ed > 1.0 || ec + ed >= 1.0) t.fail("eps_dichotomy", "thresholds overlap");
    t.positive("drift_fraction", d.drift_fraction);
    t.positive("separation_fraction", d.separation_fraction);
  } else if (task == "verify") {
    if (t.integer("samples", 5) < 1) t.fail("samples", "must be >= 1");
    t.boolean("entropy", false);
  }
  return t.done();
}

/// Parses and validates a scenario; throws InvalidArgument naming the field.
inline Scenario parse_scenario(std::string_view text, std::optional<std::uint64_t> seed_override = {},
                               std::optional<std::string> task_override = {}) {
  Table root(detail::parse_toml_lite(text), "");
  Scenario sc;
  root.string("name", "");
  sc.task = root.choice("task", task_names());
  if (task_override) {
    sc.task = *task_override;
    root.put("task", sc.task);
  }
  sc.seed = root.seed("seed", 0);
  if (seed_override) {
    sc.seed = *seed_override;
    root.put("seed", sc.seed);
  }

  Table mt = root.sub("manifold");
  sc.manifold = std::make_shared<const DiscreteManifold>(read_manifold(mt));
  root.put("manifold", mt.done());

  Table pt = root.sub("potential");
  sc.potential = read_potential(pt, sc.manifold);
  root.put("potential", pt.done());
  sc.ops = assemble(sc.manifold, sc.potential.values);

  Table st = root.sub("solver");
  sc.spectral.tolerance = st.positive("tolerance", 1e-8);
  sc.spectral.krylov_dim = static_cast<int>(st.integer("krylov_dim", 40));
  sc.spectral.max_restarts = static_cast<int>(st.integer("max_restarts", 200));
  if (sc.spectral.krylov_dim < 2) st.fail("krylov_dim", "must be >= 2");
  if (sc.spectral.max_restarts < 1) st.fail("max_restarts", "must be >= 1");
  sc.entropy.spectral = sc.spectral;
  sc.entropy.descent.tolerance = st.positive("descent_tolerance", 1e-6);
  sc.entropy.descent.max_iterations = static_cast<int>(st.integer("max_iterations", 2000));
  if (sc.entropy.descent.max_iterations < 1) st.fail("max_iterations", "must be >= 1");
  sc.entropy.descent.objective_floor = st.number("objective_floor", -700.0);
  sc.delta = st.number("delta", 1e-4);
  if (!(sc.delta >= 0.0)) st.fail("delta", "must be >= 0");
  root.put("solver", st.done());

  Table pa = root.sub("params");
  sc.params = read_params(pa, sc.task, *sc.manifold);
  root.put("params", sc.params);

  Table ot = root.sub("output");
  sc.out_dir = ot.string("dir", "out");
  root.put("output", ot.done());

  sc.resolved = root.done();
  return sc;
}

inline std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot read scenario file '" + path.string() + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

inline Scenario load_scenario(const fs::path& path, std::optional<std::uint64_t> seed_override = {},
                              std::optional<std::string> task_override = {}) {
  return parse_scenario(read_file(path), seed_override, std::move(task_override));
}

// ---------------------------------------------------------------------------
// JSON views of results

inline json to_json(const Region& r) {
  return {{"kind", to_string(r.kind())},
          {"size", r.size()},
          {"center", r.center()},
          {"inner_radius", r.inner_radius()},
          {"outer_radius", r.outer_radius()},
          {"cut_edges", r.cut_edges()}};
}

inline json to_json(const std::vector<TraceEntry>& t) {
  json a = json::array();
  for (const TraceEntry& e : t)
    a.push_back({{"R_or_r", e.radius}, {"lambda", e.lambda}, {"residual", e.residual}, {"iterations", e.iterations}});
  return a;
}

inline json to_json(const EntropyResult& r, bool with_trace = false) {
  json starts = json::array();
  for (const StartRecord& s : r.starts)
    starts.push_back({{"label", s.label},
                      {"initial_objective", s.initial_objective},
                      {"final_objective", s.final_objective},
                      {"residual", s.residual},
                      {"iterations", s.iterations},
                      {"converged", s.converged}});
  json j{{"value", r.value},
         {"el_residual", r.el_residual},
         {"restarts_used", r.restarts_used},
         {"iterations", r.descent_trace.empty() ? 0 : r.descent_trace.back().iteration},
         {"starts", starts}};
  if (r.region) j["region"] = to_json(*r.region);
  if (with_trace) {
    json tr = json::array();
    for (const DescentStep& s : r.descent_trace)
      tr.push_back({{"iteration", s.iteration}, {"objective", s.objective}, {"grad_norm", s.grad_norm}, {"step", s.step}});
    j["descent_trace"] = tr;
  }
  return j;
}

inline json to_json(const Trichotomy& t) {
  json fields = json::array();
  for (const FieldEvidence& f : t.fields) {
    json e{{"norm", f.norm},
           {"profile", f.profile},
           {"q_probe", f.q_probe},
           {"center", f.center},
           {"center_distance", f.center_distance},
           {"probe_center", f.probe_center},
           {"split_alpha", f.split_alpha},
           {"split_beta", f.split_beta},
           {"second_center", f.second_center},
           {"split_distance", f.split_distance}};
    if (f.objective) e["objective"] = *f.objective;
    if (f.rho_mass) e["rho_mass"] = *f.rho_mass;
    fields.push_back(std::move(e));
  }
  return {{"verdict", to_string(t.verdict)},
          {"reason", t.reason},
          {"r_probe", t.r_probe},
          {"truncation_radius", t.truncation_radius},
          {"thresholds",
           {{"eps_vanishing", t.thresholds.eps_vanishing},
            {"eps_dichotomy", t.thresholds.eps_dichotomy},
            {"eps_compact", t.thresholds.eps_compact},
            {"drift_fraction", t.thresholds.drift_fraction},
            {"separation_fraction", t.thresholds.separation_fraction}}},
          {"profile_radii", t.profile_radii},
          {"center_drift", t.center_drift},
          {"fields", fields}};
}

// ---------------------------------------------------------------------------
// Task execution

class OutputDir {
 public:
  explicit OutputDir(fs::path dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }

  template <class Writer>
  void csv(const std::string& name, Writer&& w) {
    std::ofstream os(dir_ / name);
    if (!os) throw std::runtime_error("cannot write " + (dir_ / name).string());
    w(os);
    files_.push_back(name);
  }
  const std::vector<std::string>& files() const { return files_; }
  const fs::path& path() const { return dir_; }

 private:
  fs::path dir_;
  std::vector<std::string> files_;
};

inline void write_field_csv(std::ostream& os, const DiscreteManifold& m, const NodeField& u) {
  os.precision(17);
  os << "node,r_or_id,u\n";
  for (Index i = 0; i < m.size(); ++i)
    os << i << ',' << m.coordinates()[static_cast<std::size_t>(i)] << ',' << u[i] << '\n';
}

inline double region_inf_potential(const OperatorPair& ops, const Region& r) {
  double v = std::numeric_limits<double>::infinity();
  for (Index i : r.nodes()) v = std::min(v, ops.potential[i]);
  return v;
}

/// A solver-level failure that still has partial results worth reporting.
class TaskFailure : public SolverError {
 public:
  TaskFailure(const std::string& what, json partial)
      : SolverError(what, std::numeric_limits<double>::quiet_NaN()), partial_(std::move(partial)) {}
  const json& partial() const { return partial_; }

 private:
  json partial_;
};

namespace tasks {

inline json lambda(const Scenario& sc, OutputDir& out) {
  const RegionSpec rs = region_from_json(sc.params);
  const Region region = make_region(*sc.manifold, rs.kind, rs.params);
  const SpectralResult s = lambda_constant(sc.ops, region, sc.spectral);
  const double inf_v = region_inf_potential(sc.ops, region);
  out.csv("trace_lambda.csv", [&](std::ostream& os) {
    write_trace_csv(os, {{region.outer_radius(), s.lambda, s.residual, s.iterations}});
  });
  return {{"lambda", s.lambda},
          {"residual", s.residual},
          {"iterations", s.iterations},
          {"inf_v", inf_v},
          {"lower_bound_holds", s.lambda >= inf_v - 1e-8},
          {"region", to_json(region)}};
}

inline json exhaustion(const Scenario& sc, OutputDir& out) {
  const auto radii = sc.params.at("radii").get<std::vector<double>>();
  const ExhaustionTrace t = exhaustion_lambda(sc.ops, radii, sc.spectral);
  bool mono = true;
  for (std::size_t k = 1; k < t.entries.size(); ++k)
    if (t.entries[k].lambda > t.entries[k - 1].lambda) mono = false;
  out.csv("trace_exhaustion.csv", [&](std::ostream& os) { write_trace_csv(os, t.entries); });
  return {{"trace", to_json(t.entries)}, {"final_lambda", t.entries.back().lambda}, {"nonincreasing", mono}};
}

inline json lambda_inf(const Scenario& sc, OutputDir& out) {
  const auto radii = sc.params.at("radii").get<std::vector<double>>();
  const InfinityTrace ext = lambda_infinity_exterior(sc.ops, radii, sc.spectral);
  out.csv("trace_lambda_inf.csv", [&](std::ostream& os) { write_trace_csv(os, ext.entries); });
  const SpectralResult whole = lambda_constant(sc.ops, make_whole(*sc.manifold), sc.spectral);
  json j{{"exterior", {{"trace", to_json(ext.entries)}, {"value", ext.value}}},
         {"lambda", whole.lambda},
         {"lambda_residual", whole.residual}};
  double lambda_inf = ext.value;
  std::string definition = "exterior";
  if (sc.potential.v_infinity) {
    const SpectralResult c = lambda_infinity_const(sc.ops, *sc.potential.v_infinity, sc.spectral);
    j["constant"] = {{"v_infinity", *sc.potential.v_infinity}, {"value", c.lambda}, {"residual", c.residual}};
    j["definitions_gap"] = std::abs(c.lambda - ext.value);
    lambda_inf = c.lambda;
    definition = "constant";
  }
  j["prediction"] = {{"lambda", whole.lambda},
                     {"lambda_inf", lambda_inf},
                     {"definition", definition},
                     {"delta", sc.delta},
                     {"verdict", to_string(existence_predictor(whole.lambda, lambda_inf, sc.delta))}};
  if (sc.params.at("entropy").get<bool>()) {
    const EntropyTrace mu = mu_infinity(sc.ops, radii, sc.entropy);
    const EntropyTrace d = d_infinity(sc.ops, radii, sc.entropy);
    auto dump = [](const EntropyTrace& t) {
      json a = json::array();
      for (const auto& e : t.entries)
        a.push_back({{"R_or_r", e.radius}, {"value", e.value}, {"el_residual", e.el_residual}});
      return json{{"trace", a}, {"value", t.value}};
    };
    auto csv = [](const EntropyTrace& t) {
      return [&t](std::ostream& os) {
        os.precision(17);
        os << "R_or_r,value,el_residual,restarts\n";
        for (const auto& e : t.entries) os << e.radius << ',' << e.value << ',' << e.el_residual << ',' << e.restarts << '\n';
      };
    };
    out.csv("trace_mu_inf.csv", csv(mu));
    out.csv("trace_d_inf.csv", csv(d));
    j["mu_inf"] = dump(mu);
    j["d_inf"] = dump(d);
  }
  return j;
}

inline json entropy_task(const Scenario& sc, OutputDir& out, bool is_mu) {
  const RegionSpec rs = region_from_json(sc.params);
  const Region region = make_region(*sc.manifold, rs.kind, rs.params);
  const EntropyResult r = is_mu ? mu_constant(sc.ops, region, sc.entropy) : d_constant(sc.ops, region, sc.entropy);
  out.csv("trace_descent.csv", [&](std::ostream& os) { write_descent_csv(os, r.descent_trace); });
  out.csv("trace_field.csv", [&](std::ostream& os) { write_field_csv(os, *sc.manifold, r.minimizer); });
  json j = to_json(r);
  const NodeField& u = r.minimizer;
  if (is_mu) {
    j["norm_defect"] = std::abs(sc.ops.mass.dot(u.cwiseProduct(u)) - 1.0);
  } else {
    j["nehari_defect"] = n_functional(sc.ops, u);
    j["scale_invariance_defect"] = r.scale_invariance_defect;
  }
  return j;
}

inline json prop6(const Scenario& sc, OutputDir& out) {
  const RegionSpec rs = region_from_json(sc.params);
  const Region region = make_region(*sc.manifold, rs.kind, rs.params);
  const Prop6Report rep = proposition6_report(sc.ops, region, sc.entropy);
  json j = json::object();
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  j["mu"] = rep.mu ? json(rep.mu->value) : json(nullptr);
  j["d"] = rep.d ? json(rep.d->value) : json(nullptr);
  j["log_2d"] = opt(rep.log_2d);
  j["log_2sqrt_d"] = opt(rep.log_2sqrt_d);
  j["gap_a"] = opt(rep.gap_a);
  j["gap_b"] = opt(rep.gap_b);
  j["residuals"] = {{"mu", rep.mu ? json(rep.mu->el_residual) : json(nullptr)},
                    {"d", rep.d ? json(rep.d->el_residual) : json(nullptr)}};
  if (rep.mu) {
    j["mu_solve"] = to_json(*rep.mu);
    out.csv("trace_mu_descent.csv", [&](std::ostream& os) { write_descent_csv(os, rep.mu->descent_trace); });
  }
  if (rep.d) {
    j["d_solve"] = to_json(*rep.d);
    out.csv("trace_d_descent.csv", [&](std::ostream& os) { write_descent_csv(os, rep.d->descent_trace); });
  }
  if (!rep.ok()) throw TaskFailure(rep.error, std::move(j));
  return j;
}

inline json groundstate(const Scenario& sc, OutputDir& out) {
  const RegionSpec rs = region_from_json(sc.params);
  const Region region = make_region(*sc.manifold, rs.kind, rs.params);
  const std::string which = sc.params.at("solve").get<std::string>();
  NodeField u;
  json j{{"solve", which}};
  if (which == "lambda") {
    const SpectralResult s = lambda_constant(sc.ops, region, sc.spectral);
    u = s.eigenfunction;
    j["value"] = s.lambda;
    j["residual"] = s.residual;
  } else {
    const EntropyResult r = which == "mu" ? mu_constant(sc.ops, region, sc.entropy) : d_constant(sc.ops, region, sc.entropy);
    u = r.minimizer;
    j["value"] = r.value;
    j["residual"] = r.el_residual;
    out.csv("trace_descent.csv", [&](std::ostream& os) { write_descent_csv(os, r.descent_trace); });
  }
  out.csv("trace_field.csv", [&](std::ostream& os) { write_field_csv(os, *sc.manifold, u); });
  j["min_value"] = u.minCoeff();
  j["max_value"] = u.maxCoeff();
  j["region"] = to_json(region);
  return j;
}

inline json growth(const Scenario& sc, OutputDir& out) {
  const GrowthFit fit = fit_growth_exponent(*sc.manifold, sc.params.at("r_min").get<double>(),
                                            sc.params.at("r_max").get<double>(),
                                            sc.params.at("samples").get<int>());
  out.csv("trace_growth.csv", [&](std::ostream& os) {
    os.precision(17);
    os << "R,volume\n";
    for (std::size_t k = 0; k < fit.radii.size(); ++k) os << fit.radii[k] << ',' << fit.volumes[k] << '\n';
  });
  return {{"exponent", fit.exponent}, {"constant", fit.constant}, {"radii", fit.radii}, {"volumes", fit.volumes}};
}

inline json trichotomy(const Scenario& sc, OutputDir& out) {
  const auto radii = sc.params.at("radii").get<std::vector<double>>();
  const ExhaustionTrace ex = exhaustion_lambda(sc.ops, radii, sc.spectral);
  std::vector<NodeField> fields;
  std::vector<double> objectives;
  for (const SpectralResult& s : ex.solves) {
    fields.push_back(s.eigenfunction);
    objectives.push_back(s.lambda);
  }
  if (fields.size() < 3)
    throw InvalidArgument("trichotomy needs at least 3 exhaustion fields; add radii inside the truncation");
  const SequenceSnapshot snap = make_snapshot(sc.manifold, fields, objectives, sc.ops.potential);
  TrichotomyThresholds th;
  th.eps_vanishing = sc.params.at("eps_vanishing").get<double>();
  th.eps_dichotomy = sc.params.at("eps_dichotomy").get<double>();
  th.eps_compact = sc.params.at("eps_compact").get<double>();
  th.drift_fraction = sc.params.at("drift_fraction").get<double>();
  th.separation_fraction = sc.params.at("separation_fraction").get<double>();
  const double r_probe = sc.params.at("r_probe").get<double>();
  const Trichotomy t = trichotomy_classify(snap, r_probe, th);

  out.csv("trace_exhaustion.csv", [&](std::ostream& os) { write_trace_csv(os, ex.entries); });
  out.csv("trace_trichotomy.csv", [&](std::ostream& os) {
    os.precision(17);
    os << "field,R,lambda,q_probe,center,center_distance,split_alpha,split_beta,split_distance\n";
    for (std::size_t k = 0; k < t.fields.size(); ++k) {
      const FieldEvidence& f = t.fields[k];
      os << k << ',' << ex.entries[k].radius << ',' << ex.entries[k].lambda << ',' << f.q_probe << ','
         << f.center << ',' << f.center_distance << ',' << f.split_alpha << ',' << f.split_beta << ','
         << f.split_distance << '\n';
    }
  });

  json j{{"classification", to_json(t)}, {"exhaustion", to_json(ex.entries)}};
  const Region probe_ball = make_ball(*sc.manifold, std::min(r_probe, sc.manifold->truncation_radius()));
  j["mass_ratio_probe_ball"] = mass_ratio(*sc.manifold, fields, probe_ball);

  const double lam = ex.entries.back().lambda;
  std::optional<double> lam_inf;
  std::string definition;
  const auto ext_radii = sc.params.at("exterior_radii").get<std::vector<double>>();
  if (!ext_radii.empty()) {
    const InfinityTrace ext = lambda_infinity_exterior(sc.ops, ext_radii, sc.spectral);
    j["lambda_inf_exterior"] = {{"trace", to_json(ext.entries)}, {"value", ext.value}};
    lam_inf = ext.value;
    definition = "exterior";
  }
  if (sc.potential.v_infinity) {
    const SpectralResult c = lambda_infinity_const(sc.ops, *sc.potential.v_infinity, sc.spectral);
    j["lambda_inf_constant"] = c.lambda;
    lam_inf = c.lambda;
    definition = "constant";
  }
  if (lam_inf)
    j["prediction"] = {{"lambda", lam},
                       {"lambda_inf", *lam_inf},
                       {"definition", definition},
                       {"delta", sc.delta},
                       {"verdict", to_string(existence_predictor(lam, *lam_inf, sc.delta))}};
  return j;
}

inline json verify(const Scenario& sc, OutputDir& out, bool& all_passed) {
  VerifyOptions vo;
  vo.seed = sc.seed;
  vo.samples = sc.params.at("samples").get<int>();
  vo.entropy_solves = sc.params.at("entropy").get<bool>();
  vo.spectral = sc.spectral;
  vo.entropy = sc.entropy;
  const std::vector<PropertyCheck> checks = verify_instance(sc.ops, vo);
  all_passed = true;
  json props = json::array();
  for (const PropertyCheck& c : checks) {
    all_passed = all_passed && c.passed;
    json p{{"name", c.name}, {"passed", c.passed}, {"worst_defect", c.worst}, {"tolerance", c.tolerance}};
    if (!c.detail.empty()) p["detail"] = c.detail;
    props.push_back(std::move(p));
    log(LogLevel::Info, std::string(c.passed ? "PASS " : "FAIL ") + c.name);
  }
  out.csv("trace_verify.csv", [&](std::ostream& os) {
    os.precision(17);
    os << "property,passed,worst_defect,tolerance\n";
    for (const PropertyCheck& c : checks)
      os << c.name << ',' << (c.passed ? 1 : 0) << ',' << c.worst << ',' << c.tolerance << '\n';
  });
  return {{"properties", props}, {"all_passed", all_passed}};
}

}  // namespace tasks

struct RunOutcome {
  int exit_code = 0;  // 0 ok, 3 solver failure or failed property
  json report;
};

/// Executes the scenario's task, writing report.json, manifold CSVs and the
/// task's traces into `out_dir`. Validation problems surface as
/// InvalidArgument before anything is written.
inline RunOutcome run_scenario(const Scenario& sc, const fs::path& out_dir) {
  const auto t0 = std::chrono::steady_clock::now();
  OutputDir out(out_dir);
  out.csv("manifold.csv", [&](std::ostream& os) { write_nodes_csv(os, *sc.manifold); });
  out.csv("manifold_edges.csv", [&](std::ostream& os) { write_edges_csv(os, *sc.manifold); });

  RunOutcome res;
  json results;
  std::optional<std::string> error;
  log(LogLevel::Info, "task " + sc.task + " on " + sc.manifold->kind() + " manifold with " +
                          std::to_string(sc.manifold->size()) + " nodes");
  try {
    const std::string& t = sc.task;
    if (t == "lambda") results = tasks::lambda(sc, out);
    else if (t == "exhaustion") results = tasks::exhaustion(sc, out);
    else if (t == "lambda-inf") results = tasks::lambda_inf(sc, out);
    else if (t == "mu") results = tasks::entropy_task(sc, out, true);
    else if (t == "d") results = tasks::entropy_task(sc, out, false);
    else if (t == "prop6") results = tasks::prop6(sc, out);
    else if (t == "groundstate") results = tasks::groundstate(sc, out);
    else if (t == "growth") results = tasks::growth(sc, out);
    else if (t == "trichotomy") results = tasks::trichotomy(sc, out);
    else {
      bool ok = true;
      results = tasks::verify(sc, out, ok);
      if (!ok) {
        res.exit_code = 3;
        error = "one or more properties failed";
      }
    }
  } catch (const TaskFailure& e) {
    results = e.partial();
    error = e.what();
    res.exit_code = 3;
  } catch (const EntropySolverError& e) {
    results = {{"best_candidate", to_json(e.candidate(), true)}};
    error = e.what();
    res.exit_code = 3;
  } catch (const SolverError& e) {
    results = {{"best_residual", e.best_residual()}};
    error = e.what();
    res.exit_code = 3;
  }

  json& rep = res.report;
  rep["scenario"] = sc.resolved;
  rep["seed"] = sc.seed;
  rep["task"] = sc.task;
  rep["manifold_summary"] = {{"kind", sc.manifold->kind()},
                             {"nodes", sc.manifold->size()},
                             {"edges", sc.manifold->edges().size()},
                             {"dimension", sc.manifold->dimension()},
                             {"truncation_radius", sc.manifold->truncation_radius()},
                             {"total_volume", sc.manifold->total_volume()},
                             {"closed", sc.manifold->closed()}};
  if (sc.potential.profile_gradient_sup) rep["potential_profile_gradient_sup"] = *sc.potential.profile_gradient_sup;
  rep["status"] = res.exit_code == 0 ? "ok" : "failed";
  rep["results"] = results;
  if (error) rep["error"] = *error;
  std::vector<std::string> files = out.files();
  files.push_back("report.json");
  rep["files"] = files;
  rep["wall_time_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::ofstream os(out.path() / "report.json");
  os << rep.dump(2) << '\n';
  if (error) log(LogLevel::Info, "failed: " + *error);
  return res;
}

}  // namespace lamlab::scenario
