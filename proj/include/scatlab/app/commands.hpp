#pragma once

#include <chrono>
#include <cmath>
#include <complex>
#include <ctime>
#include <filesystem>
#include <functional>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <boost/math/quadrature/tanh_sinh.hpp>

#include "json.hpp"

#include "scatlab/classical/deflection.hpp"
#include "scatlab/classical/measures.hpp"
#include "scatlab/classical/scattering_map.hpp"
#include "scatlab/core/errors.hpp"
#include "scatlab/core/version.hpp"
#include "scatlab/io/cache.hpp"
#include "scatlab/io/config.hpp"
#include "scatlab/io/report.hpp"
#include "scatlab/quantum/eigenphases.hpp"
#include "scatlab/quantum/lippmann_schwinger.hpp"
#include "scatlab/quantum/partial_wave.hpp"
#include "scatlab/quantum/transport.hpp"
#include "scatlab/stats/spectral.hpp"

namespace scatlab {

inline const std::vector<std::string>& command_names() {
  static const std::vector<std::string> n{"classical-map", "volumes",   "smatrix",       "phases",
                                          "equidist",      "trace-check", "nondegeneracy", "transport"};
  return n;
}

struct CacheCounter {
  long hits = 0;
  long misses = 0;
};

struct RunContext {
  std::filesystem::path out_dir = ".";
  bool use_cache = true;
  std::map<std::string, CacheCounter> cache;
  /// Extra artifacts (file name, contents), e.g. histogram SVGs.
  std::vector<std::pair<std::string, std::string>> files;
};

struct CommandOutput {
  Report report;
  std::vector<std::pair<std::string, std::string>> files;
};

namespace app {

class StageClock {
 public:
  StageClock(std::string stage, double limit_seconds)
      : stage_(std::move(stage)), limit_(limit_seconds), start_(std::chrono::steady_clock::now()) {}
  void check() const {
    const double t = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    if (t > limit_)
      throw budget_error("StageTimeExceeded", "stage '" + stage_ + "' exceeded " + format_double(limit_) + " s");
  }

 private:
  std::string stage_;
  double limit_;
  std::chrono::steady_clock::time_point start_;
};

inline Backend resolve_backend(const ExperimentConfig& c) {
  if (c.backend == "radial") return Backend::Radial;
  if (c.backend == "ls") return Backend::LippmannSchwinger;
  return c.potential.is_radial() ? Backend::Radial : Backend::LippmannSchwinger;
}

inline std::string solver_params(const ExperimentConfig& c, Backend b) {
  ojson j;
  if (b == Backend::Radial) {
    j = {{"rtol", c.radial.rtol}, {"atol", c.radial.atol}, {"r_start", c.radial.r_start},
         {"match_margin", c.radial.match_margin}, {"unitarity", c.radial_unitarity_tolerance}};
  } else {
    j = {{"ppw", c.ls.points_per_wavelength}, {"ppr", c.ls.points_per_radius}, {"box_margin", c.ls.box_margin},
         {"gmres_tol", c.ls.gmres.tolerance}, {"gmres_restart", c.ls.gmres.restart},
         {"gmres_max_it", c.ls.gmres.max_iterations}, {"extra_directions", c.ls.extra_directions},
         {"unitarity", c.ls.unitarity_tolerance}};
  }
  return j.dump();
}

inline ScatteringMatrix obtain_smatrix(const ExperimentConfig& c, double h, const TruncationPolicy& trunc,
                                       RunContext& ctx) {
  const Backend b = resolve_backend(c);
  const int M = trunc.modes(c.potential.support_radius(), h);
  const SmatrixKey key{c.potential.canonical(), h, M, b, solver_params(c, b)};
  const SmatrixCache cache(ctx.out_dir);
  auto& counter = ctx.cache["smatrix"];
  if (ctx.use_cache)
    if (auto hit = cache.load(key)) {
      ++counter.hits;
      return std::move(*hit);
    }
  TruncationPolicy fixed = trunc;
  fixed.fixed_modes = M;
  ScatteringMatrix s = [&] {
    if (b == Backend::Radial) {
      auto r = assemble_radial_smatrix(c.potential, h, fixed, c.radial, c.workers);
      if (!(r.unitarity_defect() <= c.radial_unitarity_tolerance))
        throw numeric_error("UnitarityFailure", "radial S defect " + format_double(r.unitarity_defect()));
      return r;
    }
    return assemble_general_smatrix(c.potential, h, fixed, c.ls, c.workers);
  }();
  ++counter.misses;
  if (ctx.use_cache) cache.store(key, s);
  return s;
}

/// The base policy, widened when needed so a coherent state at |η| (width √h) fits.
inline TruncationPolicy covering(const TruncationPolicy& t, double r0, double h, double eta) {
  TruncationPolicy w = t;
  const int need = static_cast<int>(std::ceil((std::abs(eta) + 6.0 * std::sqrt(h)) / h));
  w.fixed_modes = std::max(t.modes(r0, h), need);
  return w;
}

inline TruncationPolicy doubled(const TruncationPolicy& t, double r0, double h) {
  TruncationPolicy d = t;
  d.fixed_modes = 2 * t.modes(r0, h);
  return d;
}

/// Named bases for the log-weighted test functions, as functions of the phase β.
inline LogWeighted log_function(const std::string& name, double alpha) {
  if (name == "unit") return {name, [](double) { return cplx{1.0, 0.0}; }, alpha};
  if (name == "odd") return {name, [](double b) { return cplx{b, 0.0}; }, alpha};
  if (name == "phase") return {name, [](double b) { return std::polar(1.0, 2.0 * b); }, alpha};
  throw config_error("InvalidTestFunction", "unknown log-weighted function '" + name + "'");
}

/// ∫_{−π}^{π} f(e^{iβ}) dβ. The log-weighted functions vanish for |e^{iβ} − 1| ≥ 0.5.
inline cplx circle_integral(const LogWeighted& f) {
  const double edge = 2.0 * std::asin(0.25) + 1e-12;
  boost::math::quadrature::tanh_sinh<double> q;
  const TestFunction tf{f};
  auto part = [&](auto proj) {
    auto g = [&](double b) { return proj(evaluate(tf, b)); };
    return q.integrate(g, -edge, 0.0) + q.integrate(g, 0.0, edge);
  };
  return {part([](cplx z) { return z.real(); }), part([](cplx z) { return z.imag(); })};
}

inline std::string h_label(double h) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%g", h);
  return buf;
}

inline double rel_or_abs(double abs_error, double limit) { return limit != 0.0 ? abs_error / std::abs(limit) : abs_error; }

inline std::string yes_no(bool b) { return b ? "yes" : "no"; }

inline bool single_centered_bump(const PotentialSpec<2>& p) { return p.is_radial() && !p.is_zero(); }

inline MeasureEstimate interaction_volume(const ExperimentConfig& c) {
  return estimate_interaction_volume(c.potential, c.resolved_sampling_radius(), c.volume_samples, c.seed, c.workers);
}

inline void add_volume_meta(Report& r, const MeasureEstimate& v) {
  r.meta.emplace_back("interaction_volume", format_double(v.mean));
  r.meta.emplace_back("interaction_volume_stderr", format_double(v.standard_error));
  r.meta.emplace_back("interaction_volume_samples", std::to_string(v.sample_count));
}

inline void add_common_meta(Report& r, const ExperimentConfig& c) {
  r.meta.emplace_back("scenario", c.scenario);
  r.meta.emplace_back("config_digest", config_digest(c));
  r.meta.emplace_back("seed", std::to_string(c.seed));
  r.meta.emplace_back("potential", c.potential.canonical());
}

// ---------------------------------------------------------------------------------------

inline CommandOutput cmd_classical_map(const ExperimentConfig& c, RunContext&) {
  CommandOutput out;
  auto& r = out.report;
  const StageClock clock("classical-map", c.stage_seconds);
  const double R = c.resolved_sampling_radius();
  std::vector<CotangentPoint<2>> pts;
  for (const auto& [t, e] : c.classical_points) pts.push_back(CotangentPoint<2>::from_chart(t, e));
  for (std::size_t i = 0; i < c.classical_samples; ++i) pts.push_back(sample_cotangent<2>(c.seed, i, R));
  const bool radial = single_centered_bump(c.potential);
  struct Row {
    std::string outcome;
    double theta_out = NAN, eta_out = NAN, delay = NAN, energy = 0.0, angmom = NAN, det = NAN, oracle = NAN;
  };
  std::vector<Row> rows(pts.size());
  parallel_for(pts.size(), c.workers, [&](std::size_t i) {
    const auto& q = pts[i];
    Row row;
    FlowResult<2> diag;
    const auto o = scattering_map(q, c.potential, c.flow, &diag);
    if (std::holds_alternative<NonInteracting>(o)) {
      row.outcome = "non-interacting";
      row.theta_out = q.theta();
      row.eta_out = q.eta_signed();
      row.delay = 0.0;
      if (radial) row.angmom = 0.0;
    } else if (const auto* t = std::get_if<Trapped>(&o)) {
      row.outcome = "trapped";
      row.delay = t->elapsed;
      row.energy = diag.max_energy_drift;
    } else {
      const auto& e = std::get<Escaped<2>>(o);
      row.outcome = "escaped";
      row.theta_out = e.out.theta();
      row.eta_out = e.out.eta_signed();
      row.delay = e.time_delay;
      row.energy = diag.max_energy_drift;
      if (radial) {
        row.angmom = diag.max_angular_momentum_drift;
        row.oracle = std::abs(wrap_angle(e.out.theta() - (q.theta() + deflection_angle_radial(c.potential, q.eta_signed()))));
      }
    }
    if (row.outcome != "trapped") {
      try {
        row.det = symplectic_check(q, c.symplectic_delta, c.potential, c.flow);
      } catch (const Error& err) {
        if (err.code() != "NeighborhoodTrapped") throw;
      }
    }
    rows[i] = row;
  }, 1);
  clock.check();
  auto& t = r.table("classical_map", {"index", "theta", "eta", "outcome", "theta_out", "eta_out", "time_delay",
                                      "energy_drift", "angular_momentum_drift", "jacobian_det", "oracle_angle_error"});
  double max_e = 0.0, max_l = 0.0, max_det = 0.0, max_or = 0.0;
  long trapped = 0, checked = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const auto& w = rows[i];
    t.add({static_cast<long>(i), pts[i].theta(), pts[i].eta_signed(), w.outcome, w.theta_out, w.eta_out, w.delay,
           w.energy, w.angmom, w.det, w.oracle});
    max_e = std::max(max_e, w.energy);
    if (std::isfinite(w.angmom)) max_l = std::max(max_l, w.angmom);
    if (std::isfinite(w.det)) {
      max_det = std::max(max_det, std::abs(w.det - 1.0));
      ++checked;
    }
    if (std::isfinite(w.oracle)) max_or = std::max(max_or, w.oracle);
    trapped += w.outcome == "trapped";
  }
  auto& s = r.table("classical_summary", {"quantity", "value"});
  s.add({std::string("points"), static_cast<long>(pts.size())});
  s.add({std::string("trapped"), trapped});
  s.add({std::string("max_energy_drift"), max_e});
  s.add({std::string("max_angular_momentum_drift"), radial ? max_l : NAN});
  s.add({std::string("jacobian_points"), checked});
  s.add({std::string("max_jacobian_defect"), max_det});
  s.add({std::string("max_oracle_angle_error"), radial ? max_or : NAN});
  return out;
}

inline CommandOutput cmd_volumes(const ExperimentConfig& c, RunContext&) {
  CommandOutput out;
  auto& r = out.report;
  const StageClock clock("volumes", c.stage_seconds);
  const double R = c.resolved_sampling_radius();
  auto& t = r.table("volumes", {"quantity", "period", "parameter", "mean", "standard_error", "samples", "reference_volume"});
  auto add = [&](const std::string& q, long l, double param, const MeasureEstimate& m) {
    t.add({q, l, param, m.mean, m.standard_error, static_cast<long>(m.sample_count), m.reference_volume});
  };
  const auto vol = interaction_volume(c);
  add("interaction", 0, R, vol);
  clock.check();
  const auto pushed = estimate_pushed_interaction_volume(c.potential, R, c.trapped_samples, c.flow, c.seed, c.workers);
  add("interaction_pushed", 0, R, pushed);
  clock.check();
  const auto trapped = estimate_trapped_measure_ladder(c.potential, R, c.trapped_samples, c.flow, c.horizons, c.seed, c.workers);
  for (std::size_t i = 0; i < trapped.size(); ++i) add("trapped", 0, c.horizons[i], trapped[i]);
  clock.check();
  std::vector<std::vector<MeasureEstimate>> fixed;
  for (int l : c.periods) {
    fixed.push_back(
        estimate_fixed_point_measure_ladder(c.potential, l, c.epsilons, R, c.fixed_point_samples, c.flow, c.seed, c.workers));
    for (std::size_t i = 0; i < c.epsilons.size(); ++i) add("fixed_point", l, c.epsilons[i], fixed.back()[i]);
    clock.check();
  }

  auto& v = r.table("volume_verdicts", {"check", "value", "pass"});
  if (single_centered_bump(c.potential)) {
    const double exact = 4.0 * std::numbers::pi * c.potential.bumps()[0].radius;
    v.add({std::string("interaction_within_3_sigma_of_closed_form"), exact,
           yes_no(std::abs(vol.mean - exact) <= 3.0 * vol.standard_error)});
  }
  v.add({std::string("pushed_within_3_sigma"), pushed.mean,
         yes_no(std::abs(pushed.mean - vol.mean) <= 3.0 * std::hypot(pushed.standard_error, vol.standard_error) + 1e-12)});
  // Horizons are listed in config order; the ladder is judged in increasing T.
  std::vector<std::pair<double, double>> by_t;
  for (std::size_t i = 0; i < trapped.size(); ++i) by_t.emplace_back(c.horizons[i], trapped[i].mean);
  std::sort(by_t.begin(), by_t.end());
  bool nonincreasing = true;
  for (std::size_t i = 1; i < by_t.size(); ++i) nonincreasing &= by_t[i].second <= by_t[i - 1].second;
  v.add({std::string("trapped_nonincreasing_in_horizon"), by_t.empty() ? 0.0 : by_t.back().second, yes_no(nonincreasing)});
  if (!trapped.empty()) {
    const double ref = trapped.front().reference_volume;
    v.add({std::string("trapped_at_longest_horizon_below_1e-3_reference"), by_t.back().second / ref,
           yes_no(by_t.back().second <= 1e-3 * ref)});
  }
  for (std::size_t j = 0; j < c.periods.size(); ++j) {
    std::vector<std::pair<double, double>> by_e;
    for (std::size_t i = 0; i < c.epsilons.size(); ++i) by_e.emplace_back(-c.epsilons[i], fixed[j][i].mean);
    std::sort(by_e.begin(), by_e.end());
    bool dec = true;
    for (std::size_t i = 1; i < by_e.size(); ++i) dec &= by_e[i].second <= by_e[i - 1].second;
    v.add({"fixed_point_nonincreasing_as_epsilon_shrinks_l" + std::to_string(c.periods[j]),
           by_e.empty() ? 0.0 : by_e.back().second, yes_no(dec)});
  }
  return out;
}

inline CommandOutput cmd_smatrix(const ExperimentConfig& c, RunContext& ctx) {
  CommandOutput out;
  auto& r = out.report;
  const StageClock clock("smatrix", c.stage_seconds);
  const Backend b = resolve_backend(c);
  r.meta.emplace_back("backend", backend_name(b));
  auto& t = r.table("smatrix", {"h", "M", "size", "backend", "unitarity_defect", "off_diagonal_mass", "trace_re",
                                "trace_im", "cache_key"});
  for (double h : c.h_grid) {
    const auto S = obtain_smatrix(c, h, c.truncation, ctx);
    const cplx tr = trace_powers(S, 1);
    const SmatrixKey key{c.potential.canonical(), h, S.M(), b, solver_params(c, b)};
    t.add({h, static_cast<long>(S.M()), static_cast<long>(S.size()), std::string(backend_name(b)), S.unitarity_defect(),
           S.off_diagonal_mass(), tr.real(), tr.imag(), key.digest()});
    clock.check();
  }
  return out;
}

inline void add_histogram(CommandOutput& out, Table& hist, const ExperimentConfig& c, const PhaseSpectrum& spec) {
  const auto counts = phase_histogram(spec.phases);
  const double w = 2.0 * std::numbers::pi / 64.0;
  for (int i = 0; i < 64; ++i)
    hist.add({spec.h, static_cast<long>(i), -std::numbers::pi + i * w, -std::numbers::pi + (i + 1) * w, counts[i]});
  out.files.emplace_back("phases_h" + h_label(spec.h) + ".svg",
                         histogram_svg(spec.phases, c.scenario + ", h = " + h_label(spec.h) + ", M = " + std::to_string(spec.M)));
}

inline CommandOutput cmd_phases(const ExperimentConfig& c, RunContext& ctx) {
  CommandOutput out;
  auto& r = out.report;
  const StageClock clock("phases", c.stage_seconds);
  r.meta.emplace_back("backend", backend_name(resolve_backend(c)));
  auto& t = r.table("phases", {"h", "n", "beta", "chord", "log_chord"});
  Table hist{"histogram", {"h", "bin", "lower", "upper", "count"}, {}};
  for (double h : c.h_grid) {
    const auto spec = eigenphases(obtain_smatrix(c, h, c.statistics_truncation(), ctx));
    for (std::size_t n = 0; n < spec.size(); ++n) {
      const double ch = chord_from_one(spec.phases[n]);
      t.add({h, static_cast<long>(n), spec.phases[n], ch, ch > 0.0 ? std::log(ch) : -INFINITY});
    }
    add_histogram(out, hist, c, spec);
    clock.check();
  }
  r.tables.push_back(std::move(hist));
  return out;
}

struct SpectrumPair {
  ScatteringMatrix S;
  PhaseSpectrum spec;
  std::optional<ScatteringMatrix> S2;
  std::optional<PhaseSpectrum> spec2;
};

inline SpectrumPair statistics_spectra(const ExperimentConfig& c, double h, RunContext& ctx) {
  const auto trunc = c.statistics_truncation();
  auto S = obtain_smatrix(c, h, trunc, ctx);
  auto spec = eigenphases(S);
  SpectrumPair p{std::move(S), std::move(spec), std::nullopt, std::nullopt};
  if (c.doubling_check) {
    p.S2 = obtain_smatrix(c, h, doubled(trunc, c.potential.support_radius(), h), ctx);
    p.spec2 = eigenphases(*p.S2);
  }
  return p;
}

/// Verdict along the h-grid (coarse to fine) for one test's errors.
inline void add_verdict(Table& v, const std::string& test, const std::vector<double>& rel) {
  v.add({test, rel.front(), rel.back(), yes_no(decreasing_along_grid(rel))});
}

inline CommandOutput cmd_equidist(const ExperimentConfig& c, RunContext& ctx) {
  CommandOutput out;
  auto& r = out.report;
  const StageClock clock("equidist", c.stage_seconds);
  r.meta.emplace_back("backend", backend_name(resolve_backend(c)));
  const auto vol = interaction_volume(c);
  add_volume_meta(r, vol);
  const double V = vol.mean, Vse = vol.standard_error;

  std::vector<LogWeighted> logs;
  std::vector<cplx> log_integrals;
  std::vector<HolderNorm> norms;
  for (const auto& name : c.log_functions) {
    logs.push_back(log_function(name, c.alpha));
    log_integrals.push_back(circle_integral(logs.back()));
    norms.push_back(holder_log_norm(logs.back(), c.holder_base_points));
  }

  auto& t = r.table("equidist", {"h", "M", "test", "empirical_re", "empirical_im", "limit", "limit_stderr", "abs_error",
                                 "rel_error", "doubling_change"});
  auto& cnt = r.table("counting", {"h", "M", "L", "count", "C", "doubling_count"});
  auto& pair = r.table("pairing", {"h", "function", "abs_pairing", "holder_norm", "holder_level", "ratio"});
  Table hist{"histogram", {"h", "bin", "lower", "upper", "count"}, {}};

  std::map<std::string, std::vector<double>> errs;
  std::vector<std::string> order;
  auto record = [&](const std::string& test, double rel) {
    if (!errs.count(test)) order.push_back(test);
    errs[test].push_back(rel);
  };
  std::map<double, std::vector<double>> c_by_L;
  std::map<std::string, std::vector<double>> ratios;

  for (double h : c.h_grid) {
    const auto sp = statistics_spectra(c, h, ctx);
    const auto& spec = sp.spec;
    const double scale = 2.0 * std::numbers::pi * h;
    auto change = [&](const TestFunction& f) -> double {
      if (!sp.spec2) return NAN;
      return std::abs(mu_pairing(*sp.spec2, f) - mu_pairing(spec, f));
    };
    for (const auto& [a, b] : c.arcs) {
      const std::string name = "arc(" + format_double(a) + ".." + format_double(b) + ")";
      const double emp = scale * static_cast<double>(count_in_arc(spec, a, b));
      const double frac = (b - a) / (2.0 * std::numbers::pi);
      const double lim = V * frac, err = std::abs(emp - lim);
      t.add({h, static_cast<long>(spec.M), name, emp, 0.0, lim, Vse * frac, err, rel_or_abs(err, lim),
             change(IndicatorArc{a, b})});
      record(name, rel_or_abs(err, lim));
    }
    for (int k : c.powers) {
      const std::string name = "power(" + std::to_string(k) + ")";
      const auto f = TrigPoly::power_minus_one(k);
      const cplx emp = mu_pairing(spec, f);
      const double lim = 0.0 - V, err = std::abs(emp - lim);
      t.add({h, static_cast<long>(spec.M), name, emp.real(), emp.imag(), lim, Vse, err, rel_or_abs(err, lim), change(f)});
      record(name, rel_or_abs(err, lim));
    }
    for (std::size_t i = 0; i < logs.size(); ++i) {
      const std::string name = "log(" + logs[i].name + ")";
      const cplx emp = mu_pairing(spec, logs[i]);
      const cplx lim = V / (2.0 * std::numbers::pi) * log_integrals[i];
      const double err = std::abs(emp - lim);
      // The limit of a complex-valued function is reported through its modulus.
      const double lim_mod = std::abs(lim);
      t.add({h, static_cast<long>(spec.M), name, emp.real(), emp.imag(), lim_mod,
             V > 0.0 ? Vse / V * lim_mod : 0.0, err, rel_or_abs(err, lim_mod), change(logs[i])});
      record(name, rel_or_abs(err, lim_mod));
      const double ratio = norms[i].value > 0.0 ? std::abs(emp) / norms[i].value : 0.0;
      pair.add({h, logs[i].name, std::abs(emp), norms[i].value, static_cast<long>(norms[i].level), ratio});
      ratios[logs[i].name].push_back(ratio);
    }
    for (double L : c.thresholds) {
      const long n = count_above_threshold(spec, L);
      const double C = static_cast<double>(n) * h / L;
      const long n2 = sp.spec2 ? count_above_threshold(*sp.spec2, L) : -1;
      cnt.add({h, static_cast<long>(spec.M), L, n, C, n2});
      c_by_L[L].push_back(C);
    }
    add_histogram(out, hist, c, spec);
    clock.check();
  }

  auto& v = r.table("verdicts", {"test", "first_error", "last_error", "decreasing"});
  for (const auto& name : order) add_verdict(v, name, errs[name]);

  auto spread = [](const std::vector<double>& x) {
    const double mx = *std::max_element(x.begin(), x.end()), mn = *std::min_element(x.begin(), x.end());
    if (mx == 0.0) return 1.0;
    return mn > 0.0 ? mx / mn : INFINITY;
  };
  auto& cf = r.table("counting_fit", {"L", "C0", "C_min", "spread"});
  std::vector<double> all_c;
  for (const auto& [L, cs] : c_by_L) {
    cf.add({L, *std::max_element(cs.begin(), cs.end()), *std::min_element(cs.begin(), cs.end()), spread(cs)});
    all_c.insert(all_c.end(), cs.begin(), cs.end());
  }
  if (!all_c.empty())
    cf.add({NAN, *std::max_element(all_c.begin(), all_c.end()), *std::min_element(all_c.begin(), all_c.end()),
            spread(all_c)});
  // bounded: the largest ratio on the finer half of the grid stays within twice the largest
  // ratio on the coarser half, i.e. the constant fitted at coarse h still bounds fine h.
  auto& pf = r.table("pairing_fit",
                     {"function", "ratio_max", "ratio_min", "spread", "coarse_max", "fine_max", "bounded"});
  for (const auto& lw : logs) {
    const auto& x = ratios[lw.name];
    const auto half = x.begin() + static_cast<std::ptrdiff_t>((x.size() + 1) / 2);
    const double coarse = *std::max_element(x.begin(), half);
    const double fine = half == x.end() ? coarse : *std::max_element(half, x.end());
    pf.add({lw.name, *std::max_element(x.begin(), x.end()), *std::min_element(x.begin(), x.end()), spread(x), coarse,
            fine, yes_no(fine <= 2.0 * coarse)});
  }
  r.tables.push_back(std::move(hist));
  return out;
}

inline CommandOutput cmd_trace_check(const ExperimentConfig& c, RunContext& ctx) {
  CommandOutput out;
  auto& r = out.report;
  const StageClock clock("trace-check", c.stage_seconds);
  r.meta.emplace_back("backend", backend_name(resolve_backend(c)));
  const auto vol = interaction_volume(c);
  add_volume_meta(r, vol);
  auto& t = r.table("trace", {"h", "M", "k", "scaled_trace_re", "scaled_trace_im", "limit", "abs_error", "rel_error",
                              "pairing_identity_error", "doubling_change"});
  std::map<int, std::vector<double>> errs;
  for (double h : c.h_grid) {
    const auto sp = statistics_spectra(c, h, ctx);
    const double scale = 2.0 * std::numbers::pi * h;
    for (int k : c.powers) {
      const cplx v = scale * trace_powers(sp.S, k);
      const double lim = 0.0 - vol.mean, err = std::abs(v - lim);
      const double ident = std::abs(mu_pairing(sp.spec, TrigPoly::power_minus_one(k)) - v);
      const double dchg = sp.S2 ? std::abs(scale * trace_powers(*sp.S2, k) - v) : NAN;
      t.add({h, static_cast<long>(sp.S.M()), static_cast<long>(k), v.real(), v.imag(), lim, err, rel_or_abs(err, lim),
             ident, dchg});
      errs[k].push_back(rel_or_abs(err, lim));
    }
    clock.check();
  }
  auto& v = r.table("verdicts", {"test", "first_error", "last_error", "decreasing"});
  for (int k : c.powers) add_verdict(v, "power(" + std::to_string(k) + ")", errs[k]);
  return out;
}

inline CommandOutput cmd_nondegeneracy(const ExperimentConfig& c, RunContext&) {
  CommandOutput out;
  auto& r = out.report;
  const auto hits = nondegeneracy_scan(c.potential, c.nondegeneracy_step, c.nondegeneracy_tolerance);
  auto& t = r.table("degenerate_points", {"x", "y", "value", "gradient_norm"});
  for (const auto& x : hits) {
    const auto s = c.potential.evaluate(x);
    t.add({x[0], x[1], s.value, norm(s.gradient)});
  }
  auto& s = r.table("nondegeneracy_summary", {"grid_step", "tolerance", "hits", "certified"});
  s.add({c.nondegeneracy_step, c.nondegeneracy_tolerance, static_cast<long>(hits.size()), yes_no(hits.empty())});
  return out;
}

inline CommandOutput cmd_transport(const ExperimentConfig& c, RunContext& ctx) {
  CommandOutput out;
  auto& r = out.report;
  const StageClock clock("transport", c.stage_seconds);
  r.meta.emplace_back("backend", backend_name(resolve_backend(c)));
  const auto q = CotangentPoint<2>::from_chart(c.transport_theta, c.transport_eta);
  auto& t = r.table("transport", {"h", "M", "theta_in", "eta_in", "theta_out", "eta_out", "theta_classical",
                                  "eta_classical", "center_error", "C", "mass_defect", "truncated_mass"});
  std::vector<double> cs;
  for (double h : c.transport_h) {
    const auto S = obtain_smatrix(c, h, covering(c.truncation, c.potential.support_radius(), h, c.transport_eta), ctx);
    const auto res = wavepacket_transport_check(S, q, c.potential, c.flow);
    const double C = res.center_error / std::sqrt(h);
    cs.push_back(C);
    t.add({h, static_cast<long>(S.M()), q.theta(), q.eta_signed(), res.center_out.theta(), res.center_out.eta_signed(),
           res.classical_out.theta(), res.classical_out.eta_signed(), res.center_error, C, res.mass_defect,
           res.truncated_mass});
    clock.check();
  }
  auto& off = r.table("off_interaction", {"h", "theta", "eta", "identity_defect", "pass"});
  if (std::abs(c.off_eta) > c.potential.support_radius()) {
    const auto S = obtain_smatrix(c, c.off_h, covering(c.truncation, c.potential.support_radius(), c.off_h, c.off_eta), ctx);
    for (double e : {c.off_eta, -c.off_eta}) {
      const auto res = wavepacket_transport_check(S, CotangentPoint<2>::from_chart(c.transport_theta, e), c.potential, c.flow);
      off.add({c.off_h, c.transport_theta, e, res.identity_defect, yes_no(res.identity_defect <= 1e-4)});
    }
  }
  auto& f = r.table("transport_fit", {"C_max", "C_min", "spread", "nonincreasing"});
  if (!cs.empty()) {
    const double mx = *std::max_element(cs.begin(), cs.end()), mn = *std::min_element(cs.begin(), cs.end());
    bool nonincreasing = true;
    for (std::size_t i = 1; i < cs.size(); ++i) nonincreasing &= cs[i] <= cs[i - 1];
    f.add({mx, mn, mx == 0.0 ? 1.0 : (mn > 0.0 ? mx / mn : INFINITY), yes_no(nonincreasing)});
  }
  return out;
}

}  // namespace app

/// Runs one subcommand and returns its report and extra artifacts; nothing is written
/// except cache entries.
inline CommandOutput run_command(const std::string& name, const ExperimentConfig& c, RunContext& ctx) {
  CommandOutput out;
  if (name == "classical-map") out = app::cmd_classical_map(c, ctx);
  else if (name == "volumes") out = app::cmd_volumes(c, ctx);
  else if (name == "smatrix") out = app::cmd_smatrix(c, ctx);
  else if (name == "phases") out = app::cmd_phases(c, ctx);
  else if (name == "equidist") out = app::cmd_equidist(c, ctx);
  else if (name == "trace-check") out = app::cmd_trace_check(c, ctx);
  else if (name == "nondegeneracy") out = app::cmd_nondegeneracy(c, ctx);
  else if (name == "transport") out = app::cmd_transport(c, ctx);
  else throw config_error("UnknownCommand", "unknown subcommand '" + name + "'");
  out.report.command = name;
  std::vector<std::pair<std::string, std::string>> meta;
  Report tmp;
  app::add_common_meta(tmp, c);
  meta = tmp.meta;
  meta.insert(meta.end(), out.report.meta.begin(), out.report.meta.end());
  out.report.meta = std::move(meta);
  return out;
}

inline std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// Runs a subcommand and writes report.csv, report.json, config.json, any SVGs and
/// manifest.json into ctx.out_dir. Errors are recorded in the manifest and rethrown.
inline void run_to_directory(const std::string& name, const ExperimentConfig& c, RunContext& ctx) {
  std::filesystem::create_directories(ctx.out_dir);
  ojson manifest;
  manifest["tool_version"] = kToolVersion;
  manifest["report_schema_version"] = kReportSchemaVersion;
  manifest["command"] = name;
  manifest["scenario"] = c.scenario;
  manifest["config_digest"] = config_digest(c);
  manifest["seed"] = c.seed;
  manifest["workers"] = c.workers;
  manifest["started_at"] = utc_timestamp();
  std::vector<std::string> files;
  auto finish = [&](const std::string& status) {
    manifest["finished_at"] = utc_timestamp();
    manifest["status"] = status;
    ojson cache = ojson::object();
    long hits = 0, misses = 0;
    for (const auto& [stage, cc] : ctx.cache) {
      cache[stage] = {{"hits", cc.hits}, {"misses", cc.misses}};
      hits += cc.hits;
      misses += cc.misses;
    }
    manifest["cache"] = cache;
    manifest["full_cache_hit"] = hits > 0 && misses == 0;
    manifest["outputs"] = files;
    write_text(ctx.out_dir / "manifest.json", manifest.dump(2) + "\n");
  };
  try {
    const auto out = run_command(name, c, ctx);
    write_text(ctx.out_dir / "report.csv", to_csv(out.report));
    files.push_back("report.csv");
    write_text(ctx.out_dir / "report.json", to_json(out.report).dump(2) + "\n");
    files.push_back("report.json");
    ojson resolved = config_to_tree(c);
    resolved["run"].erase("workers");
    write_text(ctx.out_dir / "config.json", resolved.dump(2) + "\n");
    files.push_back("config.json");
    for (const auto& [fname, text] : out.files) {
      write_text(ctx.out_dir / fname, text);
      files.push_back(fname);
    }
  } catch (const Error& e) {
    manifest["error"] = {{"code", e.code()}, {"message", e.what()}, {"exit_code", exit_code_for(e.kind())}};
    finish("error");
    throw;
  }
  finish("ok");
}

}  // namespace scatlab
