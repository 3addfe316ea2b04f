// Acceptance harness: one PASS/FAIL line per criterion.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "scatlab/app/commands.hpp"

using namespace scatlab;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

class Timer {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", x);
  return buf;
}

const Table& table(const Report& r, const std::string& name) {
  const auto* t = r.find(name);
  if (!t) throw std::runtime_error("report has no table " + name);
  return *t;
}

std::size_t column(const Table& t, const std::string& name) {
  const auto it = std::find(t.columns.begin(), t.columns.end(), name);
  if (it == t.columns.end()) throw std::runtime_error("table " + t.name + " has no column " + name);
  return static_cast<std::size_t>(it - t.columns.begin());
}

double as_double(const Cell& c) {
  if (const auto* d = std::get_if<double>(&c)) return *d;
  if (const auto* l = std::get_if<long>(&c)) return static_cast<double>(*l);
  throw std::runtime_error("cell is not numeric");
}

std::string as_string(const Cell& c) {
  if (const auto* s = std::get_if<std::string>(&c)) return *s;
  return format_cell(c);
}

/// Value in column `col` of the row whose first cell equals `key`.
const Cell& lookup(const Table& t, const std::string& key, const std::string& col) {
  for (const auto& row : t.rows)
    if (as_string(row[0]) == key) return row[column(t, col)];
  throw std::runtime_error("table " + t.name + " has no row " + key);
}

struct Harness {
  fs::path work;

  RunContext context(const std::string& sub, bool cache = true) const {
    RunContext ctx;
    ctx.out_dir = work / sub;
    ctx.use_cache = cache;
    return ctx;
  }

  /// A cache directory emptied first, so runtime limits are measured from scratch.
  std::string cold(const std::string& sub) const {
    fs::remove_all(work / sub);
    return sub;
  }

  Report run(const std::string& cmd, const ExperimentConfig& c, const std::string& sub = "shared") const {
    auto ctx = context(sub);
    return run_command(cmd, c, ctx).report;
  }
};

Outcome free_exactness(const Harness& hx) {
  const Timer clock;
  auto c = preset("free");
  auto ctx = hx.context(hx.cold("cold_free"));
  double radial_defect = 0.0, ls_error = 0.0, phase_max = 0.0, stat_max = 0.0;
  for (double h : c.h_grid) {
    const auto s = app::obtain_smatrix(c, h, c.statistics_truncation(), ctx);
    const Eigen::MatrixXcd d = s.to_dense() - Eigen::MatrixXcd::Identity(s.size(), s.size());
    radial_defect = std::max({radial_defect, s.unitarity_defect(), d.cwiseAbs().maxCoeff()});
    for (double b : eigenphases(s).phases) phase_max = std::max(phase_max, std::abs(b));
  }
  auto ls = c;
  ls.backend = "ls";
  for (double h : {0.2, 0.1}) {
    const auto s = app::obtain_smatrix(ls, h, ls.truncation, ctx);
    const Eigen::MatrixXcd d = s.to_dense() - Eigen::MatrixXcd::Identity(s.size(), s.size());
    ls_error = std::max({ls_error, s.unitarity_defect(), d.cwiseAbs().maxCoeff()});
    for (double b : eigenphases(s).phases) phase_max = std::max(phase_max, std::abs(b));
  }
  // The zero preset short-circuits to I; a zero-amplitude bump drives the full grid and GMRES path.
  auto ls_grid = ls;
  ls_grid.potential = PotentialSpec<2>::radial_bump(0.0, 1.0);
  for (double h : {0.2, 0.1}) {
    const auto s = app::obtain_smatrix(ls_grid, h, ls_grid.truncation, ctx);
    const Eigen::MatrixXcd d = s.to_dense() - Eigen::MatrixXcd::Identity(s.size(), s.size());
    ls_error = std::max({ls_error, s.unitarity_defect(), d.cwiseAbs().maxCoeff()});
  }
  const auto eq = hx.run("equidist", c, "cold_free");
  for (const auto& row : table(eq, "equidist").rows)
    stat_max = std::max(stat_max, std::abs(as_double(row[column(table(eq, "equidist"), "abs_error")])));
  const auto tr = hx.run("trace-check", c, "cold_free");
  for (const auto& row : table(tr, "trace").rows) {
    const auto& t = table(tr, "trace");
    stat_max = std::max({stat_max, std::abs(as_double(row[column(t, "scaled_trace_re")])),
                         std::abs(as_double(row[column(t, "scaled_trace_im")]))});
  }
  const double secs = clock.seconds();
  const bool pass = radial_defect == 0.0 && ls_error <= 1e-8 && phase_max == 0.0 && stat_max == 0.0 && secs < 60.0;
  return {pass, "radial |S-I| " + num(radial_defect) + ", LS |S-I| " + num(ls_error) + " (tol 1e-8), max |phase| " +
                    num(phase_max) + ", max statistic " + num(stat_max) + ", " + num(secs) + " s (limit 60)"};
}

Outcome unitarity(const Harness& hx) {
  auto ctx = hx.context("shared");
  double radial = 0.0, ls = 0.0;
  int count = 0;
  const auto rb = preset("radial-bump");
  for (double h : rb.h_grid) {
    radial = std::max(radial, app::obtain_smatrix(rb, h, rb.statistics_truncation(), ctx).unitarity_defect());
    ++count;
  }
  for (double h : rb.transport_h) {
    radial = std::max(radial, app::obtain_smatrix(rb, h, rb.truncation, ctx).unitarity_defect());
    ++count;
  }
  auto rb_ls = rb;
  rb_ls.backend = "ls";
  for (double h : {0.2, 0.1}) {
    ls = std::max(ls, app::obtain_smatrix(rb_ls, h, rb_ls.truncation, ctx).unitarity_defect());
    ++count;
  }
  const auto tb = preset("two-bump-trapping");
  for (double h : tb.h_grid) {
    ls = std::max(ls, app::obtain_smatrix(tb, h, tb.statistics_truncation(), ctx).unitarity_defect());
    ++count;
  }
  return {radial <= 1e-10 && ls <= 1e-6, std::to_string(count) + " matrices; max radial defect " + num(radial) +
                                             " (tol 1e-10), max LS defect " + num(ls) + " (tol 1e-6)"};
}

Outcome cross_validation(const Harness& hx) {
  const Timer clock;
  auto ctx = hx.context(hx.cold("cold_cross"));
  auto radial = preset("radial-bump");
  radial.backend = "radial";
  auto ls = radial;
  ls.backend = "ls";
  double worst = 0.0;
  std::string per_h;
  for (double h : {0.2, 0.1}) {
    const auto a = eigenphases(app::obtain_smatrix(radial, h, radial.truncation, ctx));
    const auto b = eigenphases(app::obtain_smatrix(ls, h, ls.truncation, ctx));
    const double d = match_phase_multisets(a.phases, b.phases);
    worst = std::max(worst, d);
    per_h += " h=" + num(h) + ": " + num(d) + " (" + std::to_string(a.size()) + " phases);";
  }
  const double secs = clock.seconds();
  return {worst <= 1e-3 && secs < 600.0,
          "max matched phase gap" + per_h + " tol 1e-3, " + num(secs) + " s (limit 600)"};
}

Outcome equidistribution(const Harness& hx) {
  const Timer clock;
  auto c = preset("radial-bump");
  c.backend = "radial";
  const auto r = hx.run("equidist", c, hx.cold("cold_equidist"));
  const auto& v = table(r, "verdicts");
  bool pass = true;
  std::string detail;
  for (const auto& [a, b] : c.arcs) {
    const std::string name = "arc(" + format_double(a) + ".." + format_double(b) + ")";
    const double first = as_double(lookup(v, name, "first_error")), last = as_double(lookup(v, name, "last_error"));
    const bool dec = as_string(lookup(v, name, "decreasing")) == "yes";
    pass = pass && last <= 0.10 && dec;
    detail += name + " rel error " + num(first) + " -> " + num(last) + " (tol 0.10), decreasing " + (dec ? "yes" : "no") +
              "; ";
  }
  const double secs = clock.seconds();
  return {pass && secs < 600.0, detail + num(secs) + " s (limit 600)"};
}

Outcome trace_formula(const Harness& hx) {
  auto c = preset("radial-bump");
  c.backend = "radial";
  const auto r = hx.run("trace-check", c);
  const auto& v = table(r, "verdicts");
  bool pass = true;
  std::string detail;
  for (int k : c.powers) {
    const std::string name = "power(" + std::to_string(k) + ")";
    const double first = as_double(lookup(v, name, "first_error")), last = as_double(lookup(v, name, "last_error"));
    const bool dec = as_string(lookup(v, name, "decreasing")) == "yes";
    pass = pass && last <= 0.15 && dec;
    detail += "k=" + std::to_string(k) + " rel error " + num(first) + " -> " + num(last) + " (tol 0.15), decreasing " +
              (dec ? "yes" : "no") + "; ";
  }
  return {pass, detail};
}

Outcome classical_contracts(const Harness& hx) {
  const auto r = hx.run("classical-map", preset("radial-bump"));
  const auto& s = table(r, "classical_summary");
  const auto get = [&](const std::string& k) { return as_double(lookup(s, k, "value")); };
  const double energy = get("max_energy_drift"), angular = get("max_angular_momentum_drift"),
               jac = get("max_jacobian_defect"), oracle = get("max_oracle_angle_error");
  const double points = get("jacobian_points");
  const bool pass = energy <= 1e-8 && angular <= 1e-8 && jac <= 1e-4 && oracle <= 1e-5 && points >= 100;
  return {pass, "energy drift " + num(energy) + " (1e-8), angular momentum drift " + num(angular) +
                    " (1e-8), |det-1| " + num(jac) + " over " + num(points) + " points (1e-4), oracle direction error " +
                    num(oracle) + " (1e-5)"};
}

Outcome measure_hypotheses(const Harness& hx) {
  const Timer clock;
  const auto rb = preset("radial-bump");
  const auto single = hx.run("volumes", rb, hx.cold("cold_volumes"));
  const auto& sv = table(single, "volume_verdicts");
  const bool vol = as_string(lookup(sv, "interaction_within_3_sigma_of_closed_form", "pass")) == "yes";
  bool fixed = true;
  for (int l : rb.periods)
    fixed = fixed &&
            as_string(lookup(sv, "fixed_point_nonincreasing_as_epsilon_shrinks_l" + std::to_string(l), "pass")) == "yes";
  const auto& vt = table(single, "volumes");
  const double vmean = as_double(lookup(vt, "interaction", "mean"));
  const double verr = as_double(lookup(vt, "interaction", "standard_error"));
  const double vn = as_double(lookup(vt, "interaction", "samples"));
  const auto pair = hx.run("volumes", preset("two-bump-trapping"));
  const auto& pv = table(pair, "volume_verdicts");
  const bool mono = as_string(lookup(pv, "trapped_nonincreasing_in_horizon", "pass")) == "yes";
  const bool small = as_string(lookup(pv, "trapped_at_longest_horizon_below_1e-3_reference", "pass")) == "yes";
  const double trapped = as_double(lookup(pv, "trapped_at_longest_horizon_below_1e-3_reference", "value"));
  const double secs = clock.seconds();
  return {vol && fixed && mono && small && vn >= 1e6 && secs < 900.0,
          "Vol(I) " + num(vmean) + " +- " + num(verr) + " (N = " + num(vn) + ") vs 4pi within 3 sigma: " + (vol ? "yes" : "no") +
              "; two-bump trapped nonincreasing: " + (mono ? "yes" : "no") + ", at T=200 " + num(trapped) +
              " <= 1e-3 ref: " + (small ? "yes" : "no") + "; fixed-point measure decreasing for l=1,2: " +
              (fixed ? "yes" : "no") + "; " + num(secs) + " s (limit 900)"};
}

Outcome counting_bound(const Harness& hx) {
  const auto r = hx.run("equidist", preset("radial-bump"));
  const auto& t = table(r, "counting_fit");
  bool pass = true;
  std::string detail;
  for (const auto& row : t.rows) {
    const double L = as_double(row[column(t, "L")]);
    if (std::isnan(L)) continue;
    const double spread = as_double(row[column(t, "spread")]);
    pass = pass && spread <= 2.0;
    detail += "L=" + num(L) + " C0 " + num(as_double(row[column(t, "C0")])) + " spread " + num(spread) + "; ";
  }
  return {pass, detail + "tol factor 2 per L"};
}

Outcome pairing_bound(const Harness& hx) {
  const auto r = hx.run("equidist", preset("radial-bump"));
  const auto& t = table(r, "pairing_fit");
  bool pass = !t.rows.empty();
  std::string detail;
  for (const auto& row : t.rows) {
    const bool bounded = as_string(row[column(t, "bounded")]) == "yes";
    pass = pass && bounded;
    detail += as_string(row[0]) + " coarse max " + num(as_double(row[column(t, "coarse_max")])) + ", fine max " +
              num(as_double(row[column(t, "fine_max")])) + " (spread " + num(as_double(row[column(t, "spread")])) +
              "); ";
  }
  return {pass, detail + "fine-half max within 2x of coarse-half max"};
}

Outcome transport(const Harness& hx) {
  const auto r = hx.run("transport", preset("radial-bump"));
  const auto& fit = table(r, "transport_fit");
  const double spread = as_double(fit.rows.at(0)[column(fit, "spread")]);
  const double cmax = as_double(fit.rows.at(0)[column(fit, "C_max")]);
  const auto& off = table(r, "off_interaction");
  double worst = 0.0;
  for (const auto& row : off.rows) worst = std::max(worst, as_double(row[column(off, "identity_defect")]));
  return {spread <= 2.0 && worst <= 1e-4 && !off.rows.empty(),
          "C max " + num(cmax) + ", spread " + num(spread) + " (factor 2); off-interaction |Su-u| " + num(worst) +
              " (1e-4)"};
}

Outcome determinism(const Harness& hx) {
  struct Case {
    std::string preset;
    std::vector<std::string> commands;
  };
  const std::vector<Case> cases{
      {"free", command_names()},
      {"radial-bump", command_names()},
      {"radial-well", {"classical-map", "volumes", "equidist", "transport"}},
      {"degenerate-bump", {"nondegeneracy", "phases"}},
      {"two-bump-trapping", {"classical-map", "volumes", "phases"}},
  };
  int compared = 0;
  std::string bad;
  for (const auto& cs : cases) {
    for (const auto& cmd : cs.commands) {
      std::string out[2];
      for (int i = 0; i < 2; ++i) {
        auto c = preset(cs.preset);
        c.workers = i == 0 ? 1 : 4;
        auto ctx = hx.context("determinism_" + std::to_string(i), false);
        fs::remove_all(ctx.out_dir);
        run_to_directory(cmd, c, ctx);
        std::ifstream csv(ctx.out_dir / "report.csv", std::ios::binary), json(ctx.out_dir / "report.json", std::ios::binary);
        std::ostringstream s;
        s << csv.rdbuf() << json.rdbuf();
        out[i] = s.str();
      }
      ++compared;
      if (out[0].empty() || out[0] != out[1]) bad += " " + cs.preset + "/" + cmd;
    }
  }
  return {bad.empty(), std::to_string(compared) + " preset/command pairs rerun with 1 and 4 workers, cache off; " +
                           (bad.empty() ? std::string("all reports byte-identical") : "differing:" + bad)};
}

const std::vector<std::pair<std::string, std::function<Outcome(const Harness&)>>>& criteria() {
  static const std::vector<std::pair<std::string, std::function<Outcome(const Harness&)>>> list{
      {"free-case exactness", free_exactness},
      {"unitarity", unitarity},
      {"backend cross-validation", cross_validation},
      {"equidistribution on arcs", equidistribution},
      {"trace formula", trace_formula},
      {"classical contracts", classical_contracts},
      {"measure hypotheses", measure_hypotheses},
      {"counting bound", counting_bound},
      {"pairing bound", pairing_bound},
      {"wavepacket transport", transport},
      {"determinism", determinism},
  };
  return list;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"scatlab acceptance checks"};
  std::vector<int> selected;
  std::string work = (fs::temp_directory_path() / "scatlab-acceptance").string();
  app.add_option("--criterion", selected, "criteria to run (default: all)")->check(CLI::Range(1, 11));
  app.add_option("--work", work, "scratch directory; S-matrix cache is shared across runs");
  CLI11_PARSE(app, argc, argv);
  if (selected.empty())
    for (int i = 1; i <= static_cast<int>(criteria().size()); ++i) selected.push_back(i);

  const Harness hx{work};
  bool all = true;
  for (int n : selected) {
    const auto& [name, check] = criteria()[static_cast<std::size_t>(n - 1)];
    Outcome o;
    const Timer clock;
    try {
      o = check(hx);
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    all = all && o.pass;
    std::cout << "criterion " << n << " " << (o.pass ? "PASS" : "FAIL") << " [" << name << "] " << o.detail << " ("
              << num(clock.seconds()) << " s)" << std::endl;
  }
  return all ? 0 : 1;
}
