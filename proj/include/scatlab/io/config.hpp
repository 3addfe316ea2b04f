#pragma once

#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "json.hpp"

#include "scatlab/classical/flow.hpp"
#include "scatlab/core/errors.hpp"
#include "scatlab/core/potential.hpp"
#include "scatlab/io/digest.hpp"
#include "scatlab/io/report.hpp"
#include "scatlab/quantum/lippmann_schwinger.hpp"
#include "scatlab/quantum/partial_wave.hpp"
#include "scatlab/quantum/smatrix.hpp"

namespace scatlab {

using ojson = nlohmann::ordered_json;

struct ExperimentConfig {
  std::string scenario = "custom";
  int dimension = 2;
  PotentialSpec<2> potential = PotentialSpec<2>::zero();

  std::vector<double> h_grid{0.1, 0.05, 0.02, 0.01};

  TruncationPolicy truncation{};
  /// Truncation margin for the statistics spectra (counting, pairings, traces).
  double count_margin = 3.0;

  FlowSettings flow{};
  /// η-radius of the Monte Carlo sampling box; 0 selects R₀ + 0.5.
  double sampling_radius = 0.0;

  std::string backend = "auto";
  RadialSolverSettings radial{};
  LsGridPolicy ls{};
  double radial_unitarity_tolerance = 1e-10;

  std::vector<std::pair<double, double>> arcs{{0.5 * std::numbers::pi, 1.5 * std::numbers::pi},
                                              {0.25 * std::numbers::pi, 1.75 * std::numbers::pi}};
  std::vector<int> powers{1, 2, 3};
  std::vector<double> thresholds{1.0, 2.0, 4.0};
  double alpha = 3.0;
  std::vector<std::string> log_functions{"unit", "odd", "phase"};
  int holder_base_points = 4096;
  bool doubling_check = true;

  std::vector<double> transport_h{0.2, 0.1, 0.05};
  double transport_theta = 0.0;
  double transport_eta = 0.3;
  double off_eta = 2.0;
  double off_h = 0.05;

  std::size_t volume_samples = 1000000;
  std::size_t trapped_samples = 20000;
  std::vector<double> horizons{50.0, 100.0, 200.0};
  std::vector<int> periods{1, 2};
  std::vector<double> epsilons{0.1, 0.03, 0.01};
  std::size_t fixed_point_samples = 20000;

  std::size_t classical_samples = 100;
  double symplectic_delta = 1e-4;
  std::vector<std::pair<double, double>> classical_points;

  double nondegeneracy_step = 0.01;
  double nondegeneracy_tolerance = 1e-3;

  double stage_seconds = 1800.0;

  std::uint64_t seed = 1;
  /// Not part of the digest: results do not depend on it.
  unsigned workers = 1;

  double resolved_sampling_radius() const {
    if (sampling_radius > 0.0) return sampling_radius;
    return potential.is_zero() ? 1.0 : potential.support_radius() + 0.5;
  }
  TruncationPolicy statistics_truncation() const {
    TruncationPolicy t = truncation;
    t.margin = std::max(truncation.margin, count_margin);
    return t;
  }
};

namespace detail {

inline double parse_double(const std::string& s, const std::string& where) {
  const char* b = s.c_str();
  while (*b == ' ' || *b == '\t') ++b;
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(b, &end);
  while (end && (*end == ' ' || *end == '\t')) ++end;
  if (end == b || *end != '\0' || errno == ERANGE) throw config_error("BadValue", where + ": not a number: '" + s + "'");
  return v;
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) {
    const auto a = cur.find_first_not_of(" \t"), b = cur.find_last_not_of(" \t");
    out.push_back(a == std::string::npos ? "" : cur.substr(a, b - a + 1));
  }
  return out;
}

/// Typed access to one section with unknown-key detection.
class Section {
 public:
  Section(const ojson* node, std::string name) : node_(node), name_(std::move(name)) {
    if (node_ && !node_->is_object()) throw config_error("BadSection", "section [" + name_ + "] must be a table");
  }

  bool has(const std::string& key) const { return node_ && node_->contains(key); }

  double num(const std::string& key, double def) {
    if (!take(key)) return def;
    return to_double(node_->at(key), where(key));
  }
  long integer(const std::string& key, long def) {
    if (!take(key)) return def;
    const double v = to_double(node_->at(key), where(key));
    if (v != std::floor(v) || std::abs(v) > 9e15) throw config_error("BadValue", where(key) + ": expected an integer");
    return static_cast<long>(v);
  }
  std::string str(const std::string& key, const std::string& def) {
    if (!take(key)) return def;
    const auto& v = node_->at(key);
    if (!v.is_string()) throw config_error("BadValue", where(key) + ": expected text");
    return v.get<std::string>();
  }
  bool boolean(const std::string& key, bool def) {
    if (!take(key)) return def;
    const auto& v = node_->at(key);
    if (v.is_boolean()) return v.get<bool>();
    const std::string s = v.is_string() ? v.get<std::string>() : "";
    if (s == "true" || s == "yes" || s == "1") return true;
    if (s == "false" || s == "no" || s == "0") return false;
    throw config_error("BadValue", where(key) + ": expected true or false");
  }
  std::vector<double> nums(const std::string& key, std::vector<double> def) {
    if (!take(key)) return def;
    std::vector<double> out;
    const auto& v = node_->at(key);
    if (v.is_array()) {
      for (const auto& e : v) out.push_back(to_double(e, where(key)));
    } else if (v.is_number()) {
      out.push_back(v.get<double>());
    } else if (v.is_string()) {
      for (const auto& t : split(v.get<std::string>(), ','))
        if (!t.empty()) out.push_back(parse_double(t, where(key)));
    } else {
      throw config_error("BadValue", where(key) + ": expected a list of numbers");
    }
    return out;
  }
  std::vector<int> ints(const std::string& key, std::vector<int> def) {
    if (!has(key)) {
      take(key);
      return def;
    }
    std::vector<int> out;
    for (double d : nums(key, {})) {
      if (d != std::floor(d) || std::abs(d) > 1e9) throw config_error("BadValue", where(key) + ": expected integers");
      out.push_back(static_cast<int>(d));
    }
    return out;
  }
  std::vector<std::string> strs(const std::string& key, std::vector<std::string> def) {
    if (!take(key)) return def;
    std::vector<std::string> out;
    const auto& v = node_->at(key);
    if (v.is_array()) {
      for (const auto& e : v) {
        if (!e.is_string()) throw config_error("BadValue", where(key) + ": expected names");
        out.push_back(e.get<std::string>());
      }
    } else if (v.is_string()) {
      for (const auto& t : split(v.get<std::string>(), ','))
        if (!t.empty()) out.push_back(t);
    } else {
      throw config_error("BadValue", where(key) + ": expected names");
    }
    return out;
  }
  /// Pairs as [[a, b], ...] or "a b; c d".
  std::vector<std::pair<double, double>> pairs(const std::string& key, std::vector<std::pair<double, double>> def) {
    if (!take(key)) return def;
    std::vector<std::pair<double, double>> out;
    const auto& v = node_->at(key);
    if (v.is_array()) {
      for (const auto& e : v) {
        if (!e.is_array() || e.size() != 2) throw config_error("BadValue", where(key) + ": expected pairs");
        out.emplace_back(to_double(e[0], where(key)), to_double(e[1], where(key)));
      }
    } else if (v.is_string()) {
      for (const auto& item : split(v.get<std::string>(), ';')) {
        if (item.empty()) continue;
        std::istringstream in(item);
        std::string a, b, extra;
        if (!(in >> a >> b) || (in >> extra)) throw config_error("BadValue", where(key) + ": expected 'a b; c d'");
        out.emplace_back(parse_double(a, where(key)), parse_double(b, where(key)));
      }
    } else {
      throw config_error("BadValue", where(key) + ": expected pairs");
    }
    return out;
  }

  void finish() const {
    if (!node_) return;
    for (auto it = node_->begin(); it != node_->end(); ++it)
      if (!used_.count(it.key()))
        throw config_error("UnknownKey", "unknown key '" + it.key() + "' in section [" + name_ + "]");
  }

 private:
  bool take(const std::string& key) {
    used_.insert(key);
    return has(key);
  }
  std::string where(const std::string& key) const { return "[" + name_ + "] " + key; }
  static double to_double(const ojson& v, const std::string& where) {
    if (v.is_number()) return v.get<double>();
    if (v.is_string()) return parse_double(v.get<std::string>(), where);
    throw config_error("BadValue", where + ": expected a number");
  }

  const ojson* node_;
  std::string name_;
  std::set<std::string> used_;
};

inline ojson ini_to_tree(const std::string& text) {
  boost::property_tree::ptree pt;
  std::istringstream in(text);
  try {
    boost::property_tree::ini_parser::read_ini(in, pt);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw config_error("ConfigParse", e.what());
  }
  ojson root = ojson::object();
  std::map<long, ojson> bumps;
  for (const auto& [section, body] : pt) {
    if (body.empty() && !body.data().empty())
      throw config_error("ConfigParse", "key '" + section + "' outside any section");
    ojson sec = ojson::object();
    for (const auto& [k, v] : body) sec[k] = v.data();
    if (section.rfind("potential.", 0) == 0) {
      const std::string idx = section.substr(10);
      if (idx.empty() || idx.find_first_not_of("0123456789") != std::string::npos)
        throw config_error("ConfigParse", "bump sections are named [potential.N]");
      if (sec.contains("center")) {
        ojson c = ojson::array();
        for (const auto& t : split(sec["center"].get<std::string>(), ',')) c.push_back(t);
        sec["center"] = c;
      }
      bumps[std::stol(idx)] = sec;
      continue;
    }
    root[section] = sec;
  }
  if (!bumps.empty()) {
    ojson arr = ojson::array();
    for (auto& [i, b] : bumps) arr.push_back(b);
    root["potential"]["bumps"] = arr;
  }
  return root;
}

inline void check(bool ok, const std::string& code, const std::string& what) {
  if (!ok) throw config_error(code, what);
}

}  // namespace detail

inline ExperimentConfig config_from_tree(const ojson& root) {
  if (!root.is_object()) throw config_error("ConfigParse", "config root must be a table");
  static const std::set<std::string> known{"scenario", "potential", "grid",  "truncation", "flow",
                                           "sampling", "quantum",   "statistics", "transport", "volumes",
                                           "classical", "nondegeneracy", "budget", "run"};
  for (auto it = root.begin(); it != root.end(); ++it)
    if (!known.count(it.key())) throw config_error("UnknownSection", "unknown section [" + it.key() + "]");
  auto sec = [&](const char* name) { return detail::Section(root.contains(name) ? &root.at(name) : nullptr, name); };

  ExperimentConfig c;
  {
    auto s = sec("scenario");
    c.scenario = s.str("id", c.scenario);
    c.dimension = static_cast<int>(s.integer("dimension", 2));
    s.finish();
    detail::check(c.dimension == 2, "UnsupportedDimension", "only d = 2 is supported by the quantum side");
  }
  {
    const ojson* node = root.contains("potential") ? &root.at("potential") : nullptr;
    ojson trimmed = node ? *node : ojson::object();
    ojson bumps = trimmed.contains("bumps") ? trimmed["bumps"] : ojson::array();
    if (trimmed.is_object()) trimmed.erase("bumps");
    detail::Section s(&trimmed, "potential");
    const std::string kind = s.str("kind", "zero");
    if (kind == "zero") {
      c.potential = PotentialSpec<2>::zero();
    } else if (kind == "radial-bump") {
      c.potential = PotentialSpec<2>::radial_bump(s.num("amplitude", 0.5), s.num("radius", 1.0));
    } else if (kind == "bumps") {
      detail::check(bumps.is_array() && !bumps.empty(), "InvalidPotential", "kind = bumps needs [potential.N] sections");
      std::vector<Bump<2>> list;
      for (std::size_t i = 0; i < bumps.size(); ++i) {
        detail::Section b(&bumps[i], "potential." + std::to_string(i));
        const auto ctr = b.nums("center", {0.0, 0.0});
        detail::check(ctr.size() == 2, "InvalidPotential", "bump center needs two coordinates");
        Bump<2> bp;
        bp.center = Vec<2>{{ctr[0], ctr[1]}};
        bp.amplitude = b.num("amplitude", 0.0);
        bp.radius = b.num("radius", 1.0);
        b.finish();
        list.push_back(bp);
      }
      c.potential = PotentialSpec<2>::bump_sum(std::move(list));
    } else {
      throw config_error("InvalidPotential", "potential kind must be zero, radial-bump or bumps");
    }
    detail::check(kind == "bumps" || bumps.empty(), "InvalidPotential", "[potential.N] sections need kind = bumps");
    s.finish();
  }
  {
    auto s = sec("grid");
    c.h_grid = s.nums("h", c.h_grid);
    s.finish();
  }
  {
    auto s = sec("truncation");
    c.truncation.margin = s.num("margin", c.truncation.margin);
    c.truncation.pad_coefficient = s.num("pad_coefficient", c.truncation.pad_coefficient);
    c.truncation.pad_constant = static_cast<int>(s.integer("pad_constant", c.truncation.pad_constant));
    c.count_margin = s.num("count_margin", c.count_margin);
    s.finish();
  }
  {
    auto s = sec("flow");
    c.flow.rtol = s.num("rtol", c.flow.rtol);
    c.flow.atol = s.num("atol", c.flow.atol);
    c.flow.max_step = s.num("max_step", c.flow.max_step);
    c.flow.escape_radius = s.num("escape_radius", c.flow.escape_radius);
    c.flow.max_time = s.num("max_time", c.flow.max_time);
    c.flow.energy_tolerance = s.num("energy_tolerance", c.flow.energy_tolerance);
    s.finish();
  }
  {
    auto s = sec("sampling");
    c.sampling_radius = s.num("radius", c.sampling_radius);
    s.finish();
  }
  {
    auto s = sec("quantum");
    c.backend = s.str("backend", c.backend);
    c.radial.rtol = s.num("radial_rtol", c.radial.rtol);
    c.radial.r_start = s.num("radial_r_start", c.radial.r_start);
    c.radial.match_margin = s.num("match_margin", c.radial.match_margin);
    c.radial_unitarity_tolerance = s.num("radial_unitarity_tolerance", c.radial_unitarity_tolerance);
    c.ls.points_per_wavelength = s.num("ls_points_per_wavelength", c.ls.points_per_wavelength);
    c.ls.points_per_radius = s.num("ls_points_per_radius", c.ls.points_per_radius);
    c.ls.box_margin = s.num("ls_box_margin", c.ls.box_margin);
    c.ls.extra_directions = static_cast<int>(s.integer("ls_extra_directions", c.ls.extra_directions));
    c.ls.unitarity_tolerance = s.num("ls_unitarity_tolerance", c.ls.unitarity_tolerance);
    c.ls.gmres.tolerance = s.num("gmres_tolerance", c.ls.gmres.tolerance);
    c.ls.gmres.restart = static_cast<int>(s.integer("gmres_restart", c.ls.gmres.restart));
    c.ls.gmres.max_iterations = static_cast<int>(s.integer("gmres_max_iterations", c.ls.gmres.max_iterations));
    s.finish();
  }
  {
    auto s = sec("statistics");
    c.arcs = s.pairs("arcs", c.arcs);
    c.powers = s.ints("powers", c.powers);
    c.thresholds = s.nums("thresholds", c.thresholds);
    c.alpha = s.num("alpha", c.alpha);
    c.log_functions = s.strs("log_functions", c.log_functions);
    c.holder_base_points = static_cast<int>(s.integer("holder_base_points", c.holder_base_points));
    c.doubling_check = s.boolean("doubling_check", c.doubling_check);
    s.finish();
  }
  {
    auto s = sec("transport");
    c.transport_h = s.nums("h", c.transport_h);
    c.transport_theta = s.num("theta", c.transport_theta);
    c.transport_eta = s.num("eta", c.transport_eta);
    c.off_eta = s.num("off_eta", c.off_eta);
    c.off_h = s.num("off_h", c.off_h);
    s.finish();
  }
  {
    auto s = sec("volumes");
    c.volume_samples = static_cast<std::size_t>(s.integer("samples", static_cast<long>(c.volume_samples)));
    c.trapped_samples = static_cast<std::size_t>(s.integer("trapped_samples", static_cast<long>(c.trapped_samples)));
    c.horizons = s.nums("horizons", c.horizons);
    c.periods = s.ints("periods", c.periods);
    c.epsilons = s.nums("epsilons", c.epsilons);
    c.fixed_point_samples =
        static_cast<std::size_t>(s.integer("fixed_point_samples", static_cast<long>(c.fixed_point_samples)));
    s.finish();
  }
  {
    auto s = sec("classical");
    c.classical_samples = static_cast<std::size_t>(s.integer("samples", static_cast<long>(c.classical_samples)));
    c.symplectic_delta = s.num("delta", c.symplectic_delta);
    c.classical_points = s.pairs("points", c.classical_points);
    s.finish();
  }
  {
    auto s = sec("nondegeneracy");
    c.nondegeneracy_step = s.num("grid_step", c.nondegeneracy_step);
    c.nondegeneracy_tolerance = s.num("tolerance", c.nondegeneracy_tolerance);
    s.finish();
  }
  {
    auto s = sec("budget");
    c.stage_seconds = s.num("stage_seconds", c.stage_seconds);
    c.ls.max_unknowns = static_cast<std::size_t>(s.integer("ls_max_unknowns", static_cast<long>(c.ls.max_unknowns)));
    c.ls.memory_cap_mb = s.num("ls_memory_mb", c.ls.memory_cap_mb);
    s.finish();
  }
  {
    auto s = sec("run");
    const long seed = s.integer("seed", static_cast<long>(c.seed));
    detail::check(seed >= 0, "BadValue", "[run] seed must be nonnegative");
    c.seed = static_cast<std::uint64_t>(seed);
    const long w = s.integer("workers", c.workers);
    detail::check(w >= 1 && w <= 1024, "BadValue", "[run] workers must be in [1, 1024]");
    c.workers = static_cast<unsigned>(w);
    s.finish();
  }
  return c;
}

/// Invariants that span several fields.
inline void validate(const ExperimentConfig& c) {
  using detail::check;
  check(!c.h_grid.empty(), "InvalidHGrid", "h grid must not be empty");
  for (std::size_t i = 0; i < c.h_grid.size(); ++i) {
    check(c.h_grid[i] > 0.0 && std::isfinite(c.h_grid[i]), "InvalidHGrid", "h values must be positive");
    if (i) check(c.h_grid[i] < c.h_grid[i - 1], "InvalidHGrid", "h grid must be strictly decreasing");
  }
  for (std::size_t i = 0; i < c.transport_h.size(); ++i) {
    check(c.transport_h[i] > 0.0, "InvalidHGrid", "transport h values must be positive");
    if (i) check(c.transport_h[i] < c.transport_h[i - 1], "InvalidHGrid", "transport h grid must be strictly decreasing");
  }
  check(c.off_h > 0.0, "InvalidHGrid", "off_h must be positive");
  const double r0 = c.potential.support_radius();
  check(c.flow.escape_radius == 0.0 || c.flow.escape_radius > r0 + 1.0, "InvalidEscapeRadius",
        "escape radius must exceed R0 + 1");
  check(c.flow.max_time > 0.0, "InvalidHorizon", "max_time must be positive");
  check(c.flow.rtol > 0.0 && c.flow.atol > 0.0, "InvalidTolerance", "flow tolerances must be positive");
  check(c.sampling_radius == 0.0 || c.sampling_radius >= r0, "InvalidSamplingRadius", "sampling radius must be >= R0");
  check(c.backend == "auto" || c.backend == "radial" || c.backend == "ls", "InvalidBackend",
        "backend must be auto, radial or ls");
  check(c.backend != "radial" || c.potential.is_radial(), "NotRadial", "radial backend requires a radial potential");
  check(c.count_margin >= 0.0, "InvalidTruncation", "count_margin must be nonnegative");
  for (const auto& [a, b] : c.arcs)
    check(0.0 < a && a < b && b < 2.0 * std::numbers::pi, "BadArc", "arcs must satisfy 0 < phi1 < phi2 < 2*pi");
  for (int k : c.powers) check(k != 0, "InvalidPower", "trace powers must be nonzero");
  for (double L : c.thresholds) check(L >= 1.0, "InvalidThreshold", "thresholds L must be >= 1");
  check(c.alpha > 0.0, "InvalidTestFunction", "alpha must be positive");
  static const std::set<std::string> fns{"unit", "odd", "phase"};
  for (const auto& f : c.log_functions)
    check(fns.count(f) > 0, "InvalidTestFunction", "log-weighted functions are unit, odd or phase");
  check(c.holder_base_points >= 16, "BadValue", "holder_base_points must be >= 16");
  for (double T : c.horizons) check(T > 0.0, "InvalidHorizon", "horizons must be positive");
  for (int l : c.periods) check(l != 0, "InvalidIterate", "periods must be nonzero");
  for (double e : c.epsilons) check(e > 0.0, "InvalidEpsilon", "epsilons must be positive");
  check(c.symplectic_delta > 0.0, "InvalidStep", "symplectic delta must be positive");
  check(c.nondegeneracy_step > 0.0, "InvalidGrid", "nondegeneracy grid_step must be positive");
  check(c.stage_seconds > 0.0, "BadValue", "stage_seconds must be positive");
}

/// Nested canonical form: every field, in a fixed order. The digest drops run.workers.
inline ojson config_to_tree(const ExperimentConfig& c) {
  ojson j;
  j["scenario"] = {{"id", c.scenario}, {"dimension", c.dimension}};
  ojson pot;
  const auto& p = c.potential;
  if (p.is_zero()) {
    pot["kind"] = "zero";
  } else if (p.kind() == PotentialSpec<2>::Kind::RadialBump) {
    pot["kind"] = "radial-bump";
    pot["amplitude"] = p.bumps()[0].amplitude;
    pot["radius"] = p.bumps()[0].radius;
  } else {
    pot["kind"] = "bumps";
    ojson arr = ojson::array();
    for (const auto& b : p.bumps())
      arr.push_back({{"center", {b.center[0], b.center[1]}}, {"amplitude", b.amplitude}, {"radius", b.radius}});
    pot["bumps"] = arr;
  }
  j["potential"] = pot;
  j["grid"] = {{"h", c.h_grid}};
  j["truncation"] = {{"margin", c.truncation.margin},
                     {"pad_coefficient", c.truncation.pad_coefficient},
                     {"pad_constant", c.truncation.pad_constant},
                     {"count_margin", c.count_margin}};
  j["flow"] = {{"rtol", c.flow.rtol},         {"atol", c.flow.atol},         {"max_step", c.flow.max_step},
               {"escape_radius", c.flow.escape_radius}, {"max_time", c.flow.max_time},
               {"energy_tolerance", c.flow.energy_tolerance}};
  j["sampling"] = {{"radius", c.sampling_radius}};
  j["quantum"] = {{"backend", c.backend},
                  {"radial_rtol", c.radial.rtol},
                  {"radial_r_start", c.radial.r_start},
                  {"match_margin", c.radial.match_margin},
                  {"radial_unitarity_tolerance", c.radial_unitarity_tolerance},
                  {"ls_points_per_wavelength", c.ls.points_per_wavelength},
                  {"ls_points_per_radius", c.ls.points_per_radius},
                  {"ls_box_margin", c.ls.box_margin},
                  {"ls_extra_directions", c.ls.extra_directions},
                  {"ls_unitarity_tolerance", c.ls.unitarity_tolerance},
                  {"gmres_tolerance", c.ls.gmres.tolerance},
                  {"gmres_restart", c.ls.gmres.restart},
                  {"gmres_max_iterations", c.ls.gmres.max_iterations}};
  ojson arcs = ojson::array();
  for (const auto& [a, b] : c.arcs) arcs.push_back({a, b});
  j["statistics"] = {{"arcs", arcs},
                     {"powers", c.powers},
                     {"thresholds", c.thresholds},
                     {"alpha", c.alpha},
                     {"log_functions", c.log_functions},
                     {"holder_base_points", c.holder_base_points},
                     {"doubling_check", c.doubling_check}};
  j["transport"] = {{"h", c.transport_h},
                    {"theta", c.transport_theta},
                    {"eta", c.transport_eta},
                    {"off_eta", c.off_eta},
                    {"off_h", c.off_h}};
  j["volumes"] = {{"samples", c.volume_samples},
                  {"trapped_samples", c.trapped_samples},
                  {"horizons", c.horizons},
                  {"periods", c.periods},
                  {"epsilons", c.epsilons},
                  {"fixed_point_samples", c.fixed_point_samples}};
  ojson pts = ojson::array();
  for (const auto& [a, b] : c.classical_points) pts.push_back({a, b});
  j["classical"] = {{"samples", c.classical_samples}, {"delta", c.symplectic_delta}, {"points", pts}};
  j["nondegeneracy"] = {{"grid_step", c.nondegeneracy_step}, {"tolerance", c.nondegeneracy_tolerance}};
  j["budget"] = {{"stage_seconds", c.stage_seconds},
                 {"ls_max_unknowns", c.ls.max_unknowns},
                 {"ls_memory_mb", c.ls.memory_cap_mb}};
  j["run"] = {{"seed", c.seed}, {"workers", c.workers}};
  return j;
}

inline std::string config_digest(const ExperimentConfig& c) {
  ojson j = config_to_tree(c);
  j["run"].erase("workers");
  return sha256_hex(j.dump());
}

namespace detail {

inline std::string ini_scalar(const ojson& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_number_integer() || v.is_number_unsigned()) return v.dump();
  return format_double(v.get<double>());
}

inline std::string ini_value(const ojson& v) {
  if (!v.is_array()) return ini_scalar(v);
  std::string s;
  const bool nested = !v.empty() && v[0].is_array();
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += nested ? "; " : ", ";
    if (nested) s += ini_scalar(v[i][0]) + " " + ini_scalar(v[i][1]);
    else s += ini_scalar(v[i]);
  }
  return s;
}

}  // namespace detail

/// INI rendering of the canonical form; parses back to the same config.
inline std::string config_to_ini(const ExperimentConfig& c) {
  const ojson j = config_to_tree(c);
  std::ostringstream out;
  out << "# scatlab experiment config (scenario " << c.scenario << ")\n";
  for (auto it = j.begin(); it != j.end(); ++it) {
    out << "\n[" << it.key() << "]\n";
    ojson bumps;
    for (auto kv = it.value().begin(); kv != it.value().end(); ++kv) {
      if (it.key() == "potential" && kv.key() == "bumps") {
        bumps = kv.value();
        continue;
      }
      if (kv.value().is_array() && kv.value().empty()) continue;
      out << kv.key() << " = " << detail::ini_value(kv.value()) << "\n";
    }
    if (bumps.is_array())
      for (std::size_t i = 0; i < bumps.size(); ++i) {
        out << "\n[potential." << i << "]\n";
        for (auto kv = bumps[i].begin(); kv != bumps[i].end(); ++kv)
          out << kv.key() << " = " << detail::ini_value(kv.value()) << "\n";
      }
  }
  return out.str();
}

/// INI by default; a file whose first non-blank character is '{' is read as JSON.
inline ExperimentConfig parse_config_text(const std::string& text) {
  const auto first = text.find_first_not_of(" \t\r\n");
  ExperimentConfig c;
  if (first != std::string::npos && text[first] == '{') {
    ojson j;
    try {
      j = ojson::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
      throw config_error("ConfigParse", e.what());
    }
    c = config_from_tree(j);
  } else {
    c = config_from_tree(detail::ini_to_tree(text));
  }
  validate(c);
  return c;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw config_error("ConfigNotFound", "cannot read " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return parse_config_text(s.str());
}

inline const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> n{"free", "radial-bump", "radial-well", "two-bump-trapping", "degenerate-bump"};
  return n;
}

inline ExperimentConfig preset(const std::string& name) {
  ExperimentConfig c;
  c.scenario = name;
  if (name == "free") {
    c.potential = PotentialSpec<2>::zero();
  } else if (name == "radial-bump") {
    c.potential = PotentialSpec<2>::radial_bump(0.5, 1.0);
  } else if (name == "radial-well") {
    c.potential = PotentialSpec<2>::radial_bump(-0.5, 1.0);
  } else if (name == "two-bump-trapping") {
    c.potential = PotentialSpec<2>::bump_sum({{Vec<2>{{1.25, 0.0}}, 2.0, 0.5}, {Vec<2>{{-1.25, 0.0}}, 2.0, 0.5}});
    // General-backend solves are the expensive stage: keep the grid coarse.
    c.h_grid = {0.2, 0.1};
    c.transport_h = {0.2, 0.1};
    c.count_margin = c.truncation.margin;
  } else if (name == "degenerate-bump") {
    c.potential = PotentialSpec<2>::radial_bump(1.0, 1.0);
  } else {
    throw config_error("UnknownPreset", "unknown preset '" + name + "'");
  }
  validate(c);
  return c;
}

}  // namespace scatlab
