#include <gtest/gtest.h>

#include <cmath>

#include "bcirepair/stats.hpp"

using namespace bcirepair;

namespace {

// Composite Simpson rule.
template <class F>
double simpson(F f, double a, double b, int n = 20000) {
  if (n % 2) ++n;
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

// P(X <= x) for chi-square(k) via t = u^2, which removes the singularity at 0.
double chi2_cdf_by_integration(double x, int k) {
  const double norm = std::pow(2.0, 0.5 * k) * std::tgamma(0.5 * k);
  return simpson([k, norm](double u) { return 2.0 * std::pow(u, k - 1) * std::exp(-0.5 * u * u) / norm; }, 0.0,
                 std::sqrt(x));
}

double t_two_sided_by_integration(double t, double df) {
  const double c = std::tgamma(0.5 * (df + 1)) / (std::sqrt(df * M_PI) * std::tgamma(0.5 * df));
  const double mass = simpson([&](double s) { return c * std::pow(1.0 + s * s / df, -0.5 * (df + 1)); }, 0.0,
                              std::fabs(t));
  return 1.0 - 2.0 * mass;
}

}  // namespace

TEST(ChiSquareSurvival, Df2ClosedForm) {
  for (double x : {0.0, 1.0, 2.0, 5.0, 10.0}) EXPECT_NEAR(chi_square_survival(x, 2), std::exp(-x / 2.0), 1e-12) << x;
}

TEST(ChiSquareSurvival, Df1MatchesErfc) {
  for (double x : {0.01, 0.5, 1.0, 3.84, 9.0, 25.0})
    EXPECT_NEAR(chi_square_survival(x, 1), std::erfc(std::sqrt(x / 2.0)), 1e-13) << x;
}

TEST(ChiSquareSurvival, MatchesNumericalIntegration) {
  for (int k : {1, 2, 3, 4, 7, 12})
    for (double x : {0.3, 1.0, 2.5, 6.0, 11.0, 20.0})
      EXPECT_NEAR(chi_square_survival(x, k), 1.0 - chi2_cdf_by_integration(x, k), 1e-9) << "k=" << k << " x=" << x;
}

TEST(ChiSquareSurvival, KnownTwentyThirds) {
  // [[10,20],[20,10]] gives 20/3 on one degree of freedom
  const double p = chi_square_survival(20.0 / 3.0, 1);
  EXPECT_NEAR(p, 1.0 - chi2_cdf_by_integration(20.0 / 3.0, 1), 1e-9);
  EXPECT_NEAR(p, 0.00982, 1e-4);
}

TEST(ChiSquareSurvival, Edges) {
  EXPECT_EQ(chi_square_survival(0.0, 3), 1.0);
  EXPECT_THROW(chi_square_survival(1.0, 0), Error);
  EXPECT_THROW(chi_square_survival(-1.0, 2), Error);
  EXPECT_LT(chi_square_survival(400.0, 2), 1e-80);
}

TEST(RegularizedGamma, LargeArguments) {
  // Q(a, a) tends to 1/2 for large a.
  EXPECT_NEAR(regularized_gamma_q(1000.0, 1000.0), 0.5, 0.01);
  EXPECT_GE(regularized_gamma_q(50.0, 10.0), 0.0);
  EXPECT_LE(regularized_gamma_q(50.0, 10.0), 1.0);
}

TEST(StudentT, MatchesNumericalIntegration) {
  for (double df : {4.0, 9.0})
    for (double t : {0.0, 0.5, 1.3, 2.2, 4.2426, 7.0})
      EXPECT_NEAR(student_t_two_sided(t, df), t_two_sided_by_integration(t, df), 1e-6) << df << " " << t;
}

TEST(StudentT, Symmetric) {
  EXPECT_DOUBLE_EQ(student_t_two_sided(-1.7, 5.0), student_t_two_sided(1.7, 5.0));
  EXPECT_DOUBLE_EQ(student_t_two_sided(0.0, 5.0), 1.0);
  EXPECT_EQ(student_t_two_sided(INFINITY, 5.0), 0.0);
}

TEST(RegularizedBeta, Df1IsCauchy) {
  // t with one degree of freedom is Cauchy: P(|T| >= t) = 1 - 2 atan(t) / pi
  for (double t : {0.2, 1.0, 3.0, 30.0})
    EXPECT_NEAR(student_t_two_sided(t, 1.0), 1.0 - 2.0 * std::atan(t) / M_PI, 1e-12);
}
