#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "scatlab/special/bessel.hpp"

using namespace scatlab;

namespace {

// Power series J₀(x) = Σ (−x²/4)^k / (k!)², summed in long double until terms drop below 1e−18.
double j0_series(double x) {
  long double term = 1.0L, sum = 1.0L;
  const long double q = -0.25L * x * x;
  for (int k = 1; k < 200; ++k) {
    term *= q / (static_cast<long double>(k) * k);
    sum += term;
    if (std::abs(term) < 1e-18L) break;
  }
  return static_cast<double>(sum);
}

// Defining series Y₀(x) = (2/π)[(ln(x/2) + γ) J₀(x) + Σ_{k≥1} (−1)^{k+1} H_k (x²/4)^k / (k!)²].
double y0_series(double x) {
  long double term = 1.0L, sum = 0.0L, hk = 0.0L;
  const long double q = 0.25L * x * x;
  for (int k = 1; k < 200; ++k) {
    term *= q / (static_cast<long double>(k) * k);
    hk += 1.0L / k;
    sum += (k % 2 ? 1.0L : -1.0L) * hk * term;
    if (term * hk < 1e-18L) break;
  }
  const long double pi = std::numbers::pi_v<long double>;
  return static_cast<double>((2.0L / pi) * ((std::log(0.5L * x) + std::numbers::egamma_v<long double>) * j0_series(x) + sum));
}

struct Ref {
  int m;
  double x;
  double j, y;
};

// 30-digit values from mpmath's besselj / bessely (independent arbitrary-precision code).
const std::vector<Ref> kRefs = {
    {0, 1.0, 0.76519768655796655, 0.088256964215676958},
    {1, 1.0, 0.44005058574493352, -0.78121282130028872},
    {0, 10.0, -0.24593576445134834, 0.055671167283599391},
    {1, 10.0, 0.043472746168861437, 0.24901542420695388},
    {5, 0.5, 8.0536272413574741e-6, -7946.3014788074733},
    {100, 50.0, 1.1159273690838093e-21, -3.2938001882026666e+18},
    {100, 120.0, 0.075737179130010701, 0.062052590956877141},
    {1000, 500.0, 1.9704922060099743e-198, -1.8652837678769252e+194},
    {1000, 1000.0, 0.044730672947964041, -0.077476001520720744},
    {50, 3000.0, 0.012107457521534443, -0.008102193498012913},
    {2000, 5000.0, 0.0033275209620543053, 0.011307052044352307},
    {7, 30.0, 0.14518518957232827, 0.027202118395205592},
    {3, 25.5, 0.038687170306616198, 0.15374676823645428},
    {40, 24.9, 1.4755652248990796e-6, -6895.0211989807787},
};

}  // namespace

TEST(Bessel, SeriesOracleAtOne) {
  const auto e = bessel_pair(0, 1.0);
  EXPECT_NEAR(j0_series(1.0), 0.7651976865579666, 1e-16);
  EXPECT_NEAR(e.j, j0_series(1.0), 1e-13);
  EXPECT_NEAR(e.y, y0_series(1.0), 1e-13);
  EXPECT_NEAR(e.j, 0.7651976865579666, 1e-13);
}

TEST(Bessel, SeriesOracleSmallArguments) {
  for (double x : {0.01, 0.3, 2.0, 7.5, 12.0}) {
    const auto e = bessel_pair(0, x);
    EXPECT_NEAR(e.j, j0_series(x), 1e-10 * std::max(1.0, std::abs(e.j))) << x;
    EXPECT_NEAR(e.y, y0_series(x), 1e-10 * std::max(1.0, std::abs(e.y))) << x;
  }
}

TEST(Bessel, ReferenceTable) {
  for (const auto& r : kRefs) {
    const auto e = bessel_pair(r.m, r.x);
    EXPECT_NEAR(e.j, r.j, 1e-10 * std::abs(r.j)) << r.m << " " << r.x;
    EXPECT_NEAR(e.y, r.y, 1e-10 * std::abs(r.y)) << r.m << " " << r.x;
  }
}

TEST(Bessel, ScaledBeyondDoubleRange) {
  // mpmath: J_20000(5000) = 5.5875748595823462e−9516, Y_20000(5000) = −2.9417864201020313e+9510.
  const auto e = bessel_pair(20000, 5000.0);
  const double ln10 = std::log(10.0);
  EXPECT_TRUE(e.j_underflow);
  EXPECT_EQ(e.j, 0.0);
  EXPECT_NEAR(e.j_scaled().log_abs(), std::log(5.5875748595823462) - 9516.0 * ln10, 1e-9 * 9516.0 * ln10);
  EXPECT_GT(e.j_mant, 0.0);
  EXPECT_NEAR(e.y_scaled().log_abs(), std::log(2.9417864201020313) + 9510.0 * ln10, 1e-9 * 9510.0 * ln10);
  EXPECT_LT(e.y_mant, 0.0);
  EXPECT_TRUE(std::isinf(e.y));
}

TEST(Bessel, SmallArgumentLimits) {
  const auto e0 = bessel_pair(0, 1e-8);
  EXPECT_NEAR(e0.j, 1.0, 1e-15);
  for (int m : {1, 2, 5}) EXPECT_LT(std::abs(bessel_pair(m, 1e-8).j), 1e-8);
}

TEST(Bessel, DomainError) {
  for (double x : {0.0, -1.0}) {
    try {
      bessel_pair(0, x);
      FAIL();
    } catch (const Error& err) {
      EXPECT_EQ(err.code(), "DomainError");
    }
  }
  EXPECT_THROW(hankel1(1, 0.0), Error);
}

TEST(BesselProperty, WronskianSpecGrid) {
  for (int m : {1, 10, 100, 1000}) {
    for (double x : {0.5, 10.0, 500.0}) {
      const auto e = bessel_pair(m, x);
      // J Y′ − J′ Y in scaled form; compare logs of both sides when out of range.
      const double w = e.j_mant * e.yp_mant - e.jp_mant * e.y_mant;
      const double lhs_log = std::log(std::abs(w)) + e.j_log + e.y_log;
      const double rhs = 2.0 / (std::numbers::pi * x);
      EXPECT_GT(w, 0.0);
      EXPECT_NEAR(std::exp(lhs_log - std::log(rhs)), 1.0, 1e-9) << m << " " << x;
    }
  }
}

TEST(BesselProperty, WronskianLogGrid) {
  for (int i = 0; i < 20; ++i) {
    const int m = static_cast<int>(std::round(std::pow(10.0, 4.3 * i / 19.0))) - 1;
    for (int k = 0; k < 20; ++k) {
      const double x = std::pow(10.0, -1.0 + (std::log10(5000.0) + 1.0) * k / 19.0);
      const auto e = bessel_pair(m, x);
      const double w = e.j_mant * e.yp_mant - e.jp_mant * e.y_mant;
      const double ratio = std::exp(std::log(std::abs(w)) + e.j_log + e.y_log - std::log(2.0 / (std::numbers::pi * x)));
      EXPECT_NEAR(ratio, 1.0, 1e-9) << m << " " << x;
    }
  }
}

TEST(BesselProperty, RecurrenceConsistency) {
  for (double x : {0.7, 8.0, 33.0, 400.0}) {
    for (int m : {1, 3, 20, 150, 600}) {
      const auto a = bessel_pair(m - 1, x), b = bessel_pair(m, x), c = bessel_pair(m + 1, x);
      if (a.j_underflow || c.j_underflow) continue;
      const double lhs = a.j + c.j, rhs = (2.0 * m / x) * b.j;
      const double scale = std::max({std::abs(a.j), std::abs(c.j)});
      if (std::abs(rhs) < 1e-3 * scale) continue;  // near a zero
      EXPECT_NEAR(lhs, rhs, 1e-9 * scale) << m << " " << x;
    }
  }
}

TEST(BesselProperty, MonotoneDecayPastTurningPoint) {
  for (double x : {0.5, 5.0, 50.0, 800.0}) {
    double prev = std::numeric_limits<double>::infinity();
    for (int m = static_cast<int>(std::ceil(x)) + 1; m < x + 400; ++m) {
      const double l = bessel_pair(m, x).j_scaled().log_abs();
      EXPECT_LT(l, prev) << m << " " << x;
      prev = l;
    }
  }
}

TEST(Hankel, ModulusIsDefinition) {
  for (double x : {0.3, 1.0, 17.0, 250.0}) {
    const auto h = hankel1(0, x);
    const auto e = bessel_pair(0, x);
    EXPECT_DOUBLE_EQ(std::norm(h.value), e.j * e.j + e.y * e.y);
  }
}

TEST(Hankel, LeadingAsymptotic) {
  for (double x : {100.0, 300.0, 1000.0, 4000.0}) {
    const auto h = hankel1(0, x).value;
    const std::complex<double> lead =
        std::sqrt(2.0 / (std::numbers::pi * x)) * std::exp(std::complex<double>(0.0, x - std::numbers::pi / 4.0));
    EXPECT_LE(std::abs(h - lead) / std::abs(lead), 2.0 / x) << x;
  }
}

TEST(Hankel, AtOne) {
  const auto h = hankel1(0, 1.0).value;
  EXPECT_NEAR(h.real(), j0_series(1.0), 1e-13);
  EXPECT_NEAR(h.imag(), y0_series(1.0), 1e-13);
  EXPECT_NEAR(h.imag(), 0.0882569642156769, 1e-13);
}

TEST(Bessel01, MatchesGeneralPath) {
  for (double x : {0.2, 3.0, 24.99, 25.0, 80.0}) {
    const auto f = bessel01(x);
    const auto a = bessel_pair(0, x), b = bessel_pair(1, x);
    EXPECT_NEAR(f.j0, a.j, 1e-12);
    EXPECT_NEAR(f.y0, a.y, 1e-12);
    EXPECT_NEAR(f.j1, b.j, 1e-12);
    EXPECT_NEAR(f.y1, b.y, 1e-12);
  }
}
