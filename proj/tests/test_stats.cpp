#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "scatlab/quantum/lippmann_schwinger.hpp"
#include "scatlab/quantum/partial_wave.hpp"
#include "scatlab/stats/spectral.hpp"

using namespace scatlab;

namespace {

const auto kBump = PotentialSpec<2>::radial_bump(0.5, 1.0);

PhaseSpectrum identity_spectrum(double h, int M) {
  PhaseSpectrum s;
  s.h = h;
  s.M = M;
  s.phases.assign(2 * M + 1, 0.0);
  return s;
}

PhaseSpectrum synthetic(double h, const std::vector<double>& phases) {
  PhaseSpectrum s;
  s.h = h;
  s.M = static_cast<int>(phases.size() / 2);
  s.phases = phases;
  sort_by_chord(s.phases);
  return s;
}

LogWeighted log_unit() {
  return {"log-unit", [](double) { return cplx{1.0, 0.0}; }, 3.0};
}

}  // namespace

TEST(TestFunctions, Validation) {
  EXPECT_NO_THROW(validate(TrigPoly::power_minus_one(3)));
  TrigPoly bad{1, {1.0, 0.0, 1.0}};
  try {
    validate(bad);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), "FunctionNotVanishingAtOne");
  }
  for (auto arc : {IndicatorArc{0.0, 1.0}, IndicatorArc{2.0, 1.0}, IndicatorArc{1.0, 7.0}}) {
    try {
      validate(arc);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), "BadArc");
    }
  }
}

TEST(TestFunctions, VanishAtOne) {
  EXPECT_EQ(evaluate(TrigPoly::power_minus_one(2), 0.0), cplx{});
  EXPECT_EQ(evaluate(IndicatorArc{0.5, 6.0}, 0.0), cplx{});
  EXPECT_EQ(evaluate(log_unit(), 0.0), cplx{});
  // z² − 1 at β = π/2 is −2.
  EXPECT_NEAR(std::abs(evaluate(TrigPoly::power_minus_one(2), std::numbers::pi / 2.0) - cplx(-2.0, 0.0)), 0.0, 1e-15);
}

TEST(MuPairing, IdentityGivesZero) {
  const auto s = identity_spectrum(0.05, 40);
  EXPECT_EQ(mu_pairing(s, TrigPoly::power_minus_one(1)), cplx{});
  EXPECT_EQ(mu_pairing(s, IndicatorArc{1.0, 5.0}), cplx{});
  EXPECT_EQ(mu_pairing(s, log_unit()), cplx{});
  EXPECT_EQ(count_in_arc(s, 0.1, 6.2), 0);
  EXPECT_EQ(count_above_threshold(s, 1.0), 0);
}

TEST(MuPairing, PowerIdentityMatchesTrace) {
  for (double h : {0.1, 0.05}) {
    const auto S = assemble_radial_smatrix(kBump, h, TruncationPolicy{});
    const auto spec = eigenphases(S);
    for (int k : {1, 2, 3, -2}) {
      const cplx a = mu_pairing(spec, TrigPoly::power_minus_one(k));
      const cplx b = 2.0 * std::numbers::pi * h * trace_powers(S, k);
      EXPECT_LE(std::abs(a - b), 1e-10) << h << " " << k;
    }
  }
}

TEST(MuPairing, LinearAndPositive) {
  const auto spec = eigenphases(assemble_radial_smatrix(kBump, 0.05, TruncationPolicy{}));
  const IndicatorArc a{1.0, 2.5};
  const LogWeighted f = log_unit();
  const LogWeighted g{"mix", [&](double b) { return 2.0 * evaluate(a, b) - 3.0 * evaluate(f, b); }, 3.0};
  // g is not itself of the log-weighted form, so pair it through its values directly.
  cplx direct{};
  for (double b : spec.phases) direct += 2.0 * evaluate(a, b) - 3.0 * evaluate(f, b);
  direct *= 2.0 * std::numbers::pi * spec.h;
  EXPECT_LE(std::abs(direct - (2.0 * mu_pairing(spec, a) - 3.0 * mu_pairing(spec, f))), 1e-12);
  EXPECT_GE(mu_pairing(spec, a).real(), -1e-12);
  EXPECT_GE(mu_pairing(spec, f).real(), -1e-12);
}

TEST(MuPairing, TruncationRobust) {
  for (double h : {0.1, 0.05, 0.02}) {
    const int M = TruncationPolicy{}.modes(kBump.support_radius(), h);
    const auto a = eigenphases(radial_smatrix_from_table(kBump, radial_phase_table(kBump, h, M)));
    const auto b = eigenphases(radial_smatrix_from_table(kBump, radial_phase_table(kBump, h, 2 * M)));
    for (const TestFunction& f : std::vector<TestFunction>{TrigPoly::power_minus_one(1), TrigPoly::power_minus_one(3),
                                                           IndicatorArc{1.0, 5.0}})
      EXPECT_LE(std::abs(mu_pairing(a, f) - mu_pairing(b, f)), 1e-6) << h;
  }
}

// The log weight only decays like |log d|^{−α}, so modes added by doubling M each
// contribute 2πh·|log d|^{−α}; the change must be exactly that tail sum.
TEST(MuPairing, LogWeightedTailIsTheAddedModes) {
  const double h = 0.05;
  const int M = TruncationPolicy{}.modes(kBump.support_radius(), h);
  const auto t = radial_phase_table(kBump, h, 2 * M);
  const auto a = eigenphases(radial_smatrix_from_table(kBump, radial_phase_table(kBump, h, M)));
  const auto b = eigenphases(radial_smatrix_from_table(kBump, t));
  double tail = 0.0;
  for (int m = M + 1; m <= 2 * M; ++m) {
    const double d = 2.0 * std::abs(std::sin(t.delta[m]));
    if (d > 0.0) tail += 2.0 * 2.0 * std::numbers::pi * h * std::pow(std::abs(std::log(d)), -3.0);
  }
  const cplx diff = mu_pairing(b, log_unit()) - mu_pairing(a, log_unit());
  EXPECT_GT(tail, 1e-6);
  EXPECT_NEAR(diff.real(), tail, 1e-9 * tail + 1e-15);
  EXPECT_NEAR(diff.imag(), 0.0, 1e-15);
}

TEST(CountInArc, Partition) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-std::numbers::pi, std::numbers::pi);
  std::vector<double> ph(201);
  for (auto& b : ph) b = u(rng);
  for (int i = 0; i < 7; ++i) ph[i] = 0.0;
  const auto s = synthetic(0.05, ph);
  const double p1 = 1.2, p2 = 4.0;
  // (p1, p2) and its complement, with the point 1 removed: the complement is split at 0.
  const long inner = count_in_arc(s, p1, p2);
  const long left = count_in_arc(s, 1e-300, std::nextafter(p1, 0.0));
  const long right = count_in_arc(s, std::nextafter(p2, 7.0), std::nextafter(2.0 * std::numbers::pi, 0.0));
  long at_one = 0;
  for (double b : ph) at_one += b == 0.0;
  EXPECT_EQ(inner + left + right + at_one, static_cast<long>(ph.size()));
}

TEST(CountInArc, Additive) {
  const auto spec = eigenphases(assemble_radial_smatrix(kBump, 0.02, TruncationPolicy{}));
  const long whole = count_in_arc(spec, 1.0, 5.0);
  const long a = count_in_arc(spec, 1.0, 3.0);
  const long b = count_in_arc(spec, std::nextafter(3.0, 4.0), 5.0);
  EXPECT_EQ(whole, a + b);
}

TEST(TracePowers, IdentityAndConjugation) {
  const auto I = assemble_radial_smatrix(PotentialSpec<2>::zero(), 0.1, TruncationPolicy{});
  for (int k : {1, 2, -3}) EXPECT_EQ(trace_powers(I, k), cplx{});
  EXPECT_THROW(trace_powers(I, 0), Error);
  const auto S = assemble_radial_smatrix(kBump, 0.05, TruncationPolicy{});
  for (int k : {1, 2, 3}) EXPECT_EQ(trace_powers(S, -k), std::conj(trace_powers(S, k)));
}

TEST(TracePowers, DiagonalBitForBit) {
  const auto S = assemble_radial_smatrix(kBump, 0.05, TruncationPolicy{});
  cplx t{};
  for (int m = -S.M(); m <= S.M(); ++m) t += S.at_modes(m, m) - 1.0;
  EXPECT_EQ(trace_powers(S, 1), t);
}

TEST(TracePowers, DenseMatchesDirectPower) {
  const auto S = assemble_general_smatrix(kBump, 0.2, TruncationPolicy{});
  for (int k : {1, 2, 3}) {
    Eigen::MatrixXcd p = Eigen::MatrixXcd::Identity(S.size(), S.size());
    for (int i = 0; i < k; ++i) p = p * S.dense_entries();
    EXPECT_LE(std::abs(trace_powers(S, k) - (p.trace() - static_cast<double>(S.size()))), 1e-8);
  }
}

TEST(CountAboveThreshold, MonotoneInL) {
  for (double h : {0.1, 0.05, 0.02}) {
    const auto spec = eigenphases(assemble_radial_smatrix(kBump, h, TruncationPolicy{}));
    long prev = 0;
    for (double L : {1.0, 2.0, 4.0}) {
      const long n = count_above_threshold(spec, L);
      EXPECT_GE(n, prev);
      prev = n;
    }
  }
  EXPECT_THROW(count_above_threshold(identity_spectrum(0.1, 3), 0.5), Error);
  EXPECT_THROW(count_above_threshold(identity_spectrum(0.001, 3), 1.0), Error);
}

TEST(HolderNorm, ZeroAndUnit) {
  const LogWeighted zero{"zero", [](double) { return cplx{}; }, 3.0};
  EXPECT_EQ(holder_log_norm(zero).value, 0.0);
  const auto n = holder_log_norm(log_unit());
  EXPECT_NEAR(n.value, 1.0, 1e-12);
  EXPECT_GE(n.level, 2);
}

TEST(HolderNorm, GrowingWeightRejected) {
  // Decays like |log|^{-1} only, so the α = 3 weighted sup diverges toward z = 1.
  const LogWeighted slow{"slow", [](double b) {
                           const double d = chord_from_one(b);
                           return cplx{std::pow(std::abs(std::log(d)), 2.0), 0.0};
                         },
                         3.0};
  try {
    holder_log_norm(slow);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), "NonConvergent");
  }
}

TEST(SortedSpectrum, ChordNonincreasing) {
  const auto spec = eigenphases(assemble_radial_smatrix(kBump, 0.02, TruncationPolicy{}));
  for (std::size_t i = 1; i < spec.size(); ++i)
    EXPECT_GE(chord_from_one(spec.phases[i - 1]), chord_from_one(spec.phases[i]));
}

// Beyond the support the chord |e^{iβ_n} − 1| falls off with n; check the tail is
// eventually strictly decreasing in log scale.
TEST(SortedSpectrum, TailDecay) {
  TruncationPolicy wide;
  wide.margin = 3.0;
  const auto spec = eigenphases(assemble_radial_smatrix(kBump, 0.05, wide));
  const std::size_t start = static_cast<std::size_t>(2.0 * 1.5 / 0.05);
  int strict = 0, total = 0;
  for (std::size_t i = start + 2; i < spec.size(); i += 2) {
    const double a = chord_from_one(spec.phases[i - 2]), b = chord_from_one(spec.phases[i]);
    if (b == 0.0) break;
    ++total;
    strict += b < a;
  }
  EXPECT_GT(total, 20);
  EXPECT_EQ(strict, total);
}

TEST(Verdict, DecreasingAlongGrid) {
  EXPECT_TRUE(decreasing_along_grid({0.4, 0.3, 0.2, 0.1}));
  EXPECT_TRUE(decreasing_along_grid({0.4, 0.43, 0.2, 0.1}));
  EXPECT_FALSE(decreasing_along_grid({0.4, 0.5, 0.2, 0.1}));
  EXPECT_FALSE(decreasing_along_grid({0.4, 0.3, 0.25, 0.21}));
  EXPECT_TRUE(decreasing_along_grid({0.0, 0.0}));
}
