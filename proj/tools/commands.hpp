#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <future>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "json.hpp"

#include <routhkit/routhkit.hpp>

namespace routhkit::cli {

using json = nlohmann::json;

enum ExitCode : int { kOk = 0, kTolerance = 1, kUsage = 2, kNumerical = 3 };

inline int exit_code_for(ErrorKind k)
{
  switch (k) {
  case ErrorKind::Argument:
  case ErrorKind::Spec:
  case ErrorKind::Config: return kUsage;
  case ErrorKind::Tolerance: return kTolerance;
  default: return kNumerical;
  }
}

struct Tolerances
{
  double discrepancy{1e-6};
  double momentum{1e-8};
  double residual{1e-6};
};

/// Fully resolved run configuration: config file first, command-line flags on top.
struct RunConfig
{
  std::string command;
  std::string system{"se2"};
  std::map<std::string, double> params;
  std::map<std::string, std::vector<double>> arrays;  ///< matrices and vectors of a config-defined system
  double t0{0.0};
  double tf{10.0};
  double dt{1e-3};
  LevelConnectionKind connection{LevelConnectionKind::Mechanical};
  std::string out;
  std::string group_out;
  std::string reduced_in;
  std::string format{"csv"};
  std::string config_path;
  std::uint64_t seed{0};
  Tolerances tol;

  json to_json() const
  {
    return {{"command", command}, {"system", system}, {"params", params}, {"arrays", arrays}, {"t0", t0}, {"tf", tf},
      {"dt", dt}, {"connection", to_string(connection)}, {"format", format}, {"seed", seed},
      {"config", config_path}, {"reduced", reduced_in},
      {"tolerances", {{"discrepancy", tol.discrepancy}, {"momentum", tol.momentum}, {"residual", tol.residual}}}};
  }
};

// ---------------------------------------------------------------------------
// config files

/// "[1, 2.5, -3]" or a bare number.
inline std::vector<double> parse_array(const std::string & text)
{
  std::string s = text;
  const auto first = s.find_first_not_of(" \t");
  const auto last  = s.find_last_not_of(" \t");
  if (first == std::string::npos) { throw Error(ErrorKind::Config, "empty value"); }
  s = s.substr(first, last - first + 1);
  if (s.front() == '[') {
    if (s.back() != ']') { throw Error(ErrorKind::Config, "unterminated array: " + text); }
    s = s.substr(1, s.size() - 2);
  }
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (item.find_first_not_of(" \t", used) != std::string::npos) { throw std::invalid_argument(item); }
    } catch (const std::exception &) {
      throw Error(ErrorKind::Config, "not a number: '" + item + "'");
    }
  }
  return out;
}

inline double parse_number(const std::string & text, const std::string & key)
{
  const auto v = parse_array(text);
  if (v.size() != 1) { throw Error(ErrorKind::Config, "expected a single number for " + key); }
  return v[0];
}

inline LevelConnectionKind parse_connection(const std::string & s)
{
  if (s == "mechanical") { return LevelConnectionKind::Mechanical; }
  if (s == "vertical-lift") { return LevelConnectionKind::VerticalLift; }
  throw Error(ErrorKind::Config, "unknown connection kind '" + s + "' (mechanical | vertical-lift)");
}

/// Reads the INI sections [system], [params], [connection], [run], [tolerances].
inline void load_config_file(const std::string & path, RunConfig & cfg)
{
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::read_ini(path, tree);
  } catch (const pt::ini_parser_error & e) {
    throw Error(ErrorKind::Config, std::string("cannot read config: ") + e.what());
  }
  cfg.config_path = path;
  static const std::vector<std::string> sections{"system", "params", "connection", "run", "tolerances"};
  for (const auto & [name, _] : tree) {
    if (std::find(sections.begin(), sections.end(), name) == sections.end()) {
      throw Error(ErrorKind::Config, "unknown config section [" + name + "]");
    }
  }
  if (auto sys = tree.get_child_optional("system")) {
    for (const auto & [key, node] : *sys) {
      const std::string v = node.get_value<std::string>();
      if (key == "name") {
        cfg.system = v;
      } else if (key == "bundle_connection") {
        if (v != "mechanical" && v != "trivial") { throw Error(ErrorKind::Config, "bundle_connection: mechanical | trivial"); }
        cfg.params["trivial_connection"] = v == "trivial" ? 1.0 : 0.0;
      } else {
        static const std::vector<std::string> known{
          "n", "m", "quartic", "k_base", "k_mixed", "k_group", "potential", "mu", "x0", "xdot0", "theta0"};
        if (std::find(known.begin(), known.end(), key) == known.end()) {
          throw Error(ErrorKind::Config, "unknown key [system] " + key);
        }
        const auto arr = parse_array(v);
        if (arr.size() == 1 && (key == "n" || key == "m" || key == "quartic")) {
          cfg.params[key] = arr[0];
        } else {
          cfg.arrays[key] = arr;
        }
      }
    }
  }
  if (auto p = tree.get_child_optional("params")) {
    for (const auto & [key, node] : *p) { cfg.params[key] = parse_number(node.get_value<std::string>(), key); }
  }
  if (auto c = tree.get_child_optional("connection")) {
    for (const auto & [key, node] : *c) {
      if (key != "kind") { throw Error(ErrorKind::Config, "unknown key [connection] " + key); }
      cfg.connection = parse_connection(node.get_value<std::string>());
    }
  }
  if (auto r = tree.get_child_optional("run")) {
    for (const auto & [key, node] : *r) {
      const std::string v = node.get_value<std::string>();
      if (key == "t0") { cfg.t0 = parse_number(v, key); }
      else if (key == "tf") { cfg.tf = parse_number(v, key); }
      else if (key == "dt") { cfg.dt = parse_number(v, key); }
      else if (key == "format") { cfg.format = v; }
      else if (key == "out") { cfg.out = v; }
      else if (key == "group_out") { cfg.group_out = v; }
      else if (key == "reduced") { cfg.reduced_in = v; }
      else if (key == "seed") { cfg.seed = static_cast<std::uint64_t>(parse_number(v, key)); }
      else { throw Error(ErrorKind::Config, "unknown key [run] " + key); }
    }
  }
  if (auto t = tree.get_child_optional("tolerances")) {
    for (const auto & [key, node] : *t) {
      const double v = parse_number(node.get_value<std::string>(), key);
      if (key == "discrepancy") { cfg.tol.discrepancy = v; }
      else if (key == "momentum") { cfg.tol.momentum = v; }
      else if (key == "residual") { cfg.tol.residual = v; }
      else { throw Error(ErrorKind::Config, "unknown key [tolerances] " + key); }
    }
  }
}

inline void validate(const RunConfig & cfg)
{
  require(cfg.dt > 0.0 && std::isfinite(cfg.dt), ErrorKind::Config, "dt must be positive");
  require(cfg.tf > cfg.t0, ErrorKind::Config, "tf must exceed t0");
  require(cfg.format == "csv" || cfg.format == "json", ErrorKind::Config, "format must be csv or json");
}

// ---------------------------------------------------------------------------
// systems

/// A system together with its momentum level and initial state.
struct Problem
{
  LagrangianSystem sys;
  MomentumLevel level;
  FullState s0;
  std::optional<Se2Model> se2;
};

namespace detail {

class ParamReader
{
public:
  ParamReader(const RunConfig & cfg, std::string system) : cfg_(cfg), system_(std::move(system)) {}

  double get(const std::string & key, double fallback)
  {
    used_.push_back(key);
    const auto it = cfg_.params.find(key);
    return it == cfg_.params.end() ? fallback : it->second;
  }
  std::optional<double> maybe(const std::string & key)
  {
    used_.push_back(key);
    const auto it = cfg_.params.find(key);
    return it == cfg_.params.end() ? std::nullopt : std::optional<double>(it->second);
  }
  void finish() const
  {
    for (const auto & [key, _] : cfg_.params) {
      if (key == "random_ic") { continue; }
      if (std::find(used_.begin(), used_.end(), key) == used_.end()) {
        throw Error(ErrorKind::Config, "unknown parameter '" + key + "' for system " + system_);
      }
    }
  }

private:
  const RunConfig & cfg_;
  std::string system_;
  std::vector<std::string> used_;
};

inline MatrixXd matrix_from(const RunConfig & cfg, const std::string & key, int rows, int cols)
{
  const auto it = cfg.arrays.find(key);
  if (it == cfg.arrays.end()) { throw Error(ErrorKind::Config, "config system needs '" + key + "'"); }
  if (static_cast<int>(it->second.size()) != rows * cols) {
    throw Error(ErrorKind::Config, key + ": expected " + std::to_string(rows * cols) + " entries");
  }
  MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) { m(i, j) = it->second[static_cast<std::size_t>(i * cols + j)]; }
  }
  return m;
}

inline VectorXd vector_from(const RunConfig & cfg, const std::string & key, int n, const VectorXd & fallback)
{
  const auto it = cfg.arrays.find(key);
  if (it == cfg.arrays.end()) { return fallback; }
  return matrix_from(cfg, key, n, 1).col(0);
}

}  // namespace detail

inline const std::vector<std::string> & packaged_systems()
{
  static const std::vector<std::string> names{"se2", "classical-demo", "wong-demo", "wong", "classical"};
  return names;
}

inline Problem build_problem(const RunConfig & cfg)
{
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> jitter(-0.5, 0.5);
  const bool random_ic = cfg.params.count("random_ic") && cfg.params.at("random_ic") != 0.0;
  auto perturb         = [&](VectorXd v) {
    if (random_ic) {
      for (Eigen::Index k = 0; k < v.size(); ++k) { v[k] += jitter(rng); }
    }
    return v;
  };
  detail::ParamReader P(cfg, cfg.system);
  Problem pb;

  if (cfg.system == "se2") {
    Se2Params p;
    p.A         = P.get("A", p.A);
    p.mu        = P.get("mu", p.mu);
    p.thetadot0 = P.get("thetadot0", p.thetadot0);
    p.x0        = P.get("x0", p.x0);
    p.y0        = P.get("y0", p.y0);
    p.xdot0     = P.get("xdot0", p.xdot0);
    if (random_ic) {
      p.x0 += jitter(rng);
      p.y0 += jitter(rng);
    }
    const auto ydot = P.maybe("ydot0"), zdot = P.maybe("zdot0"), z = P.maybe("z0");
    P.finish();
    Se2Model m = make_se2(p);
    pb.sys     = m.system;
    pb.level   = m.level;
    pb.s0 = m.state_from_original(p.x0, p.y0, z.value_or(p.z0()), 0.0, p.xdot0, ydot.value_or(p.ydot0()),
      zdot.value_or(p.zdot0()), p.thetadot0);
    pb.se2 = m;
  } else if (cfg.system == "classical-demo" || cfg.system == "classical") {
    ClassicalSpec spec;
    VectorXd x0, v0, th0, mu;
    if (cfg.system == "classical-demo") {
      spec = classical_demo_spec();
      mu   = VectorXd{{P.get("mu", 0.7)}};
      x0   = VectorXd{{P.get("x1", 1.0), P.get("x2", 0.2)}};
      v0   = VectorXd{{P.get("v1", 0.1), P.get("v2", 0.5)}};
      th0  = VectorXd{{P.get("theta", 0.0)}};
    } else {
      const int n = static_cast<int>(P.get("n", 0)), m = static_cast<int>(P.get("m", 0));
      require(n > 0 && m > 0, ErrorKind::Config, "config system needs positive n and m");
      spec.n         = n;
      spec.m         = m;
      spec.k_base    = PolyMatrix::constant(detail::matrix_from(cfg, "k_base", n, n), n);
      spec.k_mixed   = PolyMatrix::constant(detail::matrix_from(cfg, "k_mixed", n, m), n);
      spec.k_group   = PolyMatrix::constant(detail::matrix_from(cfg, "k_group", m, m), n);
      spec.potential = PolyMatrix(1, 1, n);
      if (cfg.arrays.count("potential")) {
        const MatrixXd Q = detail::matrix_from(cfg, "potential", n, n);  // V = ½ xᵀ Q x
        for (int l = 0; l < n; ++l) {
          for (int r = 0; r < n; ++r) { spec.potential.c2[static_cast<std::size_t>(l * n + r)](0, 0) = Q(l, r); }
        }
      }
      spec.quartic            = P.get("quartic", 0.0);
      spec.trivial_connection = P.get("trivial_connection", 0.0) != 0.0;
      mu  = detail::vector_from(cfg, "mu", m, VectorXd::Zero(m));
      x0  = detail::vector_from(cfg, "x0", n, VectorXd::Zero(n));
      v0  = detail::vector_from(cfg, "xdot0", n, VectorXd::Zero(n));
      th0 = detail::vector_from(cfg, "theta0", m, VectorXd::Zero(m));
    }
    const auto thetadot = P.maybe("thetadot");
    P.finish();
    pb.sys   = make_classical(spec);
    pb.level = make_level(pb.sys, mu);
    pb.s0    = level_state(pb.sys, pb.level, perturb(x0), th0, perturb(v0));
    if (thetadot) { pb.s0.v_group[0] = *thetadot; }
  } else if (cfg.system == "wong-demo" || cfg.system == "wong") {
    const double mu1 = P.get("mu", 0.8);
    const VectorXd x0{{P.get("x1", 0.3), P.get("x2", -0.2)}};
    const VectorXd v0{{P.get("v1", 0.2), P.get("v2", 0.1)}};
    const auto w1 = P.maybe("w1"), w2 = P.maybe("w2"), w3 = P.maybe("w3");
    P.finish();
    pb.sys   = make_wong(wong_demo_spec());
    pb.level = make_level(pb.sys, VectorXd{{mu1, 0.0, 0.0}});
    pb.s0    = level_state(pb.sys, pb.level, perturb(x0), pb.sys.connection.group.identity, perturb(v0));
    if (w1) { pb.s0.v_group[0] = *w1; }
    if (w2) { pb.s0.v_group[1] = *w2; }
    if (w3) { pb.s0.v_group[2] = *w3; }
  } else {
    throw Error(ErrorKind::Config, "unknown system '" + cfg.system + "'");
  }
  return pb;
}

/// |p(s0) − μ| must be within the momentum tolerance for the reduction pipelines.
inline void check_initial_momentum(const Problem & pb, const Tolerances & tol)
{
  const double err = (momentum(pb.sys, pb.s0) - pb.level.mu).lpNorm<Eigen::Infinity>();
  if (!(err <= tol.momentum * std::max(1.0, pb.level.mu.lpNorm<Eigen::Infinity>()))) {
    throw Error(ErrorKind::Tolerance, fmt::format("initial momentum mismatch: |p - mu| = {:.3e}", err));
  }
}

// ---------------------------------------------------------------------------
// tables

struct Table
{
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

inline std::vector<std::string> numbered(const std::string & stem, int from, int to)
{
  std::vector<std::string> out;
  for (int k = from; k <= to; ++k) { out.push_back(stem + std::to_string(k)); }
  return out;
}

inline std::vector<std::string> full_columns(int n, int m)
{
  std::vector<std::string> c{"t"};
  for (const auto & parts : {numbered("x", 1, n), numbered("theta", 1, m), numbered("v", 1, n), numbered("u", 1, m)}) {
    c.insert(c.end(), parts.begin(), parts.end());
  }
  return c;
}

inline std::vector<std::string> reduced_columns(int n, int m, int k)
{
  std::vector<std::string> c{"t"};
  for (const auto & parts : {numbered("x", 1, n), numbered("theta", k + 1, m), numbered("v", 1, n)}) {
    c.insert(c.end(), parts.begin(), parts.end());
  }
  return c;
}

inline Table table_from(const Trajectory & tr, std::vector<std::string> columns)
{
  Table t{std::move(columns), {}};
  for (std::size_t k = 0; k < tr.size(); ++k) {
    std::vector<double> row{tr.times[k]};
    row.insert(row.end(), tr.states[k].data(), tr.states[k].data() + tr.states[k].size());
    t.rows.push_back(std::move(row));
  }
  return t;
}

inline void write_table(std::ostream & os, const Table & t, const json & meta, const std::string & format)
{
  if (format == "json") {
    json cols = json::object();
    for (std::size_t c = 0; c < t.columns.size(); ++c) {
      std::vector<double> col;
      col.reserve(t.rows.size());
      for (const auto & r : t.rows) { col.push_back(r[c]); }
      cols[t.columns[c]] = col;
    }
    os << json{{"metadata", meta}, {"columns", cols}, {"order", t.columns}}.dump() << '\n';
    return;
  }
  os << "# " << meta.dump() << '\n';
  for (std::size_t c = 0; c < t.columns.size(); ++c) { os << (c ? "," : "") << t.columns[c]; }
  os << '\n';
  std::string line;
  for (const auto & r : t.rows) {
    line.clear();
    for (std::size_t c = 0; c < r.size(); ++c) {
      if (c) { line += ','; }
      line += fmt::format("{:.17g}", r[c]);
    }
    os << line << '\n';
  }
}

inline void emit(const std::string & path, const Table & t, const json & meta, const std::string & format)
{
  if (path.empty() || path == "-") {
    write_table(std::cout, t, meta, format);
    return;
  }
  std::ofstream f(path);
  if (!f) { throw Error(ErrorKind::Config, "cannot open output file " + path); }
  write_table(f, t, meta, format);
}

/// Reads a CSV written by write_table.
inline Table read_csv(const std::string & path)
{
  std::ifstream f(path);
  if (!f) { throw Error(ErrorKind::Config, "cannot open " + path); }
  Table t;
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty() || line[0] == '#') { continue; }
    std::stringstream ss(line);
    std::string cell;
    if (t.columns.empty()) {
      while (std::getline(ss, cell, ',')) { t.columns.push_back(cell); }
      continue;
    }
    std::vector<double> row;
    while (std::getline(ss, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception &) {
        throw Error(ErrorKind::Config, path + ": not a number '" + cell + "'");
      }
    }
    if (row.size() != t.columns.size()) { throw Error(ErrorKind::Config, path + ": ragged row"); }
    t.rows.push_back(std::move(row));
  }
  if (t.columns.empty()) { throw Error(ErrorKind::Config, path + ": no header"); }
  return t;
}

// ---------------------------------------------------------------------------
// pipelines

inline Trajectory run_full(const Problem & pb, const RunConfig & cfg)
{
  return rk4(el_vector_field(pb.sys), pb.s0.packed(), cfg.t0, cfg.tf, cfg.dt);
}

inline Trajectory run_reduced(const Problem & pb, const RunConfig & cfg)
{
  return rk4(reduced_vector_field(pb.sys, pb.level), reduce_state(pb.level, pb.s0).packed(), cfg.t0, cfg.tf, cfg.dt);
}

inline Reconstruction run_reconstruct(const Problem & pb, const RunConfig & cfg, const Trajectory & red)
{
  const int k         = pb.level.k;
  const VectorXd g0   = pb.sys.connection.group.identity.head(k);
  const VectorXd seed = pb.s0.theta.head(k);
  return reconstruct(pb.sys, pb.level, red, cfg.connection, g0, seed);
}

inline double momentum_drift(const Problem & pb, const Trajectory & tr, const VectorXd & mu)
{
  double d = 0.0;
  for (const auto & z : tr.states) {
    d = std::max(d, (momentum(pb.sys, FullState::unpack(z, pb.sys.n(), pb.sys.m())) - mu).lpNorm<Eigen::Infinity>());
  }
  return d;
}

/// Max over interior samples of |ż − F(z)|, ż by finite differences of the samples.
inline double el_residual(const Problem & pb, const Trajectory & tr)
{
  double r = 0.0;
  for (std::size_t j = 1; j + 1 < tr.size(); ++j) {
    const VectorXd zdot = routhkit::detail::time_derivative(tr.times, tr.states, j);
    const VectorXd f    = el_field(pb.sys, FullState::unpack(tr.states[j], pb.sys.n(), pb.sys.m())).packed();
    r                   = std::max(r, (zdot - f).lpNorm<Eigen::Infinity>());
  }
  return r;
}

inline void warn_unwrapped_angle(const Problem & pb, const Trajectory & tr)
{
  if (!pb.se2 || tr.empty()) { return; }
  const double th = tr.states.back()[pb.sys.n() + 2];
  if (std::abs(th) > M_PI) {
    spdlog::warn("theta reaches {:.3f}: angles are written unwrapped, not reduced to (-pi, pi]", th);
  }
}

/// Result of a command: exit status plus a summary object for stdout.
struct Outcome
{
  int code{kOk};
  json summary;
};

inline json base_meta(const RunConfig & cfg, const Problem & pb)
{
  json m        = cfg.to_json();
  m["mu"]       = std::vector<double>(pb.level.mu.data(), pb.level.mu.data() + pb.level.mu.size());
  m["n"]        = pb.sys.n();
  m["m"]        = pb.sys.m();
  m["isotropy"] = pb.level.k;
  return m;
}

inline Outcome cmd_simulate(const RunConfig & cfg)
{
  const Problem pb    = build_problem(cfg);
  const Trajectory tr = run_full(pb, cfg);
  const int n = pb.sys.n(), m = pb.sys.m();
  const VectorXd mu = momentum(pb.sys, pb.s0);
  const double e0   = energy(pb.sys, pb.s0);
  Table t           = table_from(tr, full_columns(n, m));
  for (const auto & c : numbered("dp", 1, m)) { t.columns.push_back(c); }
  t.columns.push_back("energy");
  double dp = 0.0, de = 0.0;
  for (std::size_t k = 0; k < tr.size(); ++k) {
    const FullState s = FullState::unpack(tr.states[k], n, m);
    const VectorXd d  = momentum(pb.sys, s) - mu;
    const double e    = energy(pb.sys, s);
    dp                = std::max(dp, d.lpNorm<Eigen::Infinity>());
    de                = std::max(de, std::abs(e - e0));
    t.rows[k].insert(t.rows[k].end(), d.data(), d.data() + m);
    t.rows[k].push_back(e);
  }
  warn_unwrapped_angle(pb, tr);
  json meta = base_meta(cfg, pb);
  meta["initial_momentum"]  = std::vector<double>(mu.data(), mu.data() + m);
  meta["max_momentum_error"] = dp;
  meta["max_energy_error"]   = de;
  emit(cfg.out, t, meta, cfg.format);
  return {kOk, {{"command", "simulate"}, {"samples", tr.size()}, {"max_momentum_error", dp}, {"max_energy_error", de}}};
}

inline Outcome cmd_reduce(const RunConfig & cfg)
{
  const Problem pb = build_problem(cfg);
  check_initial_momentum(pb, cfg.tol);
  const Trajectory red = run_reduced(pb, cfg);
  const Table t        = table_from(red, reduced_columns(pb.sys.n(), pb.sys.m(), pb.level.k));
  emit(cfg.out, t, base_meta(cfg, pb), cfg.format);
  json summary{{"command", "reduce"}, {"samples", red.size()}, {"isotropy", pb.level.k}};
  if (pb.se2) {
    double err = 0.0;
    for (std::size_t k = 0; k < red.size(); ++k) {
      if (cfg.t0 != 0.0) { break; }
      const Eigen::Vector2d z{red.states[k][1], red.states[k][2]};
      err = std::max(err, (z - pb.se2->reduced_closed_form(red.times[k])).lpNorm<Eigen::Infinity>());
    }
    summary["max_closed_form_error"] = err;
  }
  return {kOk, summary};
}

inline Trajectory reduced_from_file(const Problem & pb, const std::string & path)
{
  const Table t    = read_csv(path);
  const auto want  = reduced_columns(pb.sys.n(), pb.sys.m(), pb.level.k);
  if (t.columns != want) { throw Error(ErrorKind::Config, path + ": columns do not match the reduced state of this system"); }
  Trajectory tr;
  for (const auto & r : t.rows) { tr.push(r[0], Eigen::Map<const VectorXd>(r.data() + 1, static_cast<Eigen::Index>(r.size() - 1))); }
  return tr;
}

inline Outcome cmd_reconstruct(const RunConfig & cfg)
{
  const Problem pb = build_problem(cfg);
  check_initial_momentum(pb, cfg.tol);
  const Trajectory red     = cfg.reduced_in.empty() ? run_reduced(pb, cfg) : reduced_from_file(pb, cfg.reduced_in);
  const Reconstruction rec = run_reconstruct(pb, cfg, red);
  const int n = pb.sys.n(), m = pb.sys.m();
  json meta = base_meta(cfg, pb);
  emit(cfg.out, table_from(rec.full, full_columns(n, m)), meta, cfg.format);
  if (!cfg.group_out.empty()) {
    std::vector<std::string> gc{"t"};
    for (const auto & c : numbered("g", 1, m)) { gc.push_back(c); }
    emit(cfg.group_out, table_from(rec.group, gc), meta, cfg.format);
  }
  warn_unwrapped_angle(pb, rec.full);
  json summary{{"command", "reconstruct"}, {"samples", rec.full.size()}, {"connection", to_string(cfg.connection)},
    {"max_momentum_error", momentum_drift(pb, rec.full, pb.level.mu)}};
  if (pb.se2 && cfg.t0 == 0.0) {
    double ey = 0.0;
    for (std::size_t k = 0; k < rec.full.size(); ++k) {
      ey = std::max(ey, std::abs(rec.full.states[k][1] - pb.se2->reconstructed_y(rec.full.times[k])));
    }
    summary["max_y_closed_form_error"] = ey;
  }
  return {kOk, summary};
}

inline Outcome cmd_compare(const RunConfig & cfg)
{
  const Problem pb = build_problem(cfg);
  check_initial_momentum(pb, cfg.tol);
  // both pipelines only read the shared system definition
  auto full_job  = std::async(std::launch::async, [&] { return run_full(pb, cfg); });
  auto recon_job = std::async(std::launch::async, [&] { return run_reconstruct(pb, cfg, run_reduced(pb, cfg)).full; });
  const Trajectory full  = full_job.get();
  const Trajectory recon = recon_job.get();

  double disc = 0.0;
  for (std::size_t k = 0; k < std::min(full.size(), recon.size()); ++k) {
    disc = std::max(disc, (full.states[k] - recon.states[k]).lpNorm<Eigen::Infinity>());
  }
  const double drift = momentum_drift(pb, recon, pb.level.mu);
  const double resid = el_residual(pb, recon);
  const bool pass    = disc <= cfg.tol.discrepancy && drift <= cfg.tol.momentum && resid <= cfg.tol.residual;
  json report{{"command", "compare"}, {"system", cfg.system}, {"connection", to_string(cfg.connection)},
    {"discrepancy", disc}, {"momentum_drift", drift}, {"el_residual", resid}, {"pass", pass},
    {"tolerances", {{"discrepancy", cfg.tol.discrepancy}, {"momentum", cfg.tol.momentum}, {"residual", cfg.tol.residual}}},
    {"config", cfg.to_json()}};
  if (!cfg.out.empty() && cfg.out != "-") {
    std::ofstream f(cfg.out);
    if (!f) { throw Error(ErrorKind::Config, "cannot open output file " + cfg.out); }
    f << report.dump(2) << '\n';
  }
  if (!pass) { report["message"] = "tolerance exceeded"; }
  return {pass ? kOk : kTolerance, report};
}

inline Outcome run_command(const RunConfig & cfg)
{
  validate(cfg);
  if (cfg.command == "simulate") { return cmd_simulate(cfg); }
  if (cfg.command == "reduce") { return cmd_reduce(cfg); }
  if (cfg.command == "reconstruct") { return cmd_reconstruct(cfg); }
  if (cfg.command == "compare") { return cmd_compare(cfg); }
  throw Error(ErrorKind::Config, "unknown command '" + cfg.command + "'");
}

/// Machine-readable error object for stderr.
inline json error_json(const std::exception & e, int & code)
{
  json j{{"error", "internal"}, {"message", e.what()}};
  code = kNumerical;
  if (const auto * ie = dynamic_cast<const IntegrationError *>(&e)) {
    code        = exit_code_for(ie->cause());
    j["error"]  = to_string(ie->cause());
    j["t_fail"] = ie->time();
    j["samples_before_failure"] = ie->partial().size();
  } else if (const auto * re = dynamic_cast<const Error *>(&e)) {
    code       = exit_code_for(re->kind());
    j["error"] = to_string(re->kind());
  }
  j["exit_code"] = code;
  return j;
}

inline void configure_logging()
{
  auto logger = spdlog::stderr_color_mt("routhkit");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::warn);
  if (const char * lvl = std::getenv("ROUTHKIT_LOG")) { spdlog::set_level(spdlog::level::from_str(lvl)); }
}

}  // namespace routhkit::cli
