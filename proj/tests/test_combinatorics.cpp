#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <vector>

#include "lsym/combinatorics.hpp"
#include "oracles.hpp"

using namespace lsym::combinatorics;

using namespace lsym::testing;

TEST(CountG, SpecExamples) {
  EXPECT_EQ(count_G(1, 5), 1);
  EXPECT_EQ(count_G(3, 3), 6);
  EXPECT_EQ(count_G(4, 3), 0);
  EXPECT_EQ(count_G(2, 4), 14);
}

TEST(CountG, ClosedFormsUpToTwenty) {
  for (int m = 1; m <= 20; ++m) {
    EXPECT_EQ(count_G(1, m), 1);
    if (m >= 2) {
      EXPECT_EQ(count_G(2, m), power(2, m) - 2);
    }
  }
  for (int r = 1; r + 1 <= 20; ++r) {
    EXPECT_EQ(count_G(r, r + 1), Count(r) * factorial(r + 1) / 2) << "r=" << r;
  }
  for (int r = 1; r <= 10; ++r) {
    EXPECT_EQ(count_G(r, r), factorial(r));
    for (int m = 1; m < r; ++m) EXPECT_EQ(count_G(r, m), 0);
  }
}

TEST(CountG, MatchesStirlingAndSurjections) {
  const auto S = stirling2_table(15);
  for (int m = 1; m <= 15; ++m) {
    for (int r = 1; r <= m; ++r) EXPECT_EQ(count_G(r, m), factorial(r) * S[m][r]) << r << "," << m;
  }
  for (int m = 1; m <= 7; ++m) {
    for (int r = 1; r <= m; ++r) EXPECT_EQ(count_G(r, m), surjections_by_enumeration(r, m));
  }
}

TEST(CountGOracle, ExamplesAndAgreement) {
  EXPECT_EQ(count_G_oracle(2, 3), 6);
  EXPECT_EQ(count_G_oracle(1, 1), 1);
  EXPECT_EQ(count_G_oracle(3, 4), 36);
  for (int m = 1; m <= 9; ++m) {
    for (int r = 1; r <= m; ++r) EXPECT_EQ(count_G_oracle(r, m), count_G(r, m));
  }
  EXPECT_THROW(count_G_oracle(2, 10), std::out_of_range);
}

TEST(CountSmallG, BellNumbers) {
  EXPECT_EQ(count_g(1), 1);
  EXPECT_EQ(count_g(3), 5);
  EXPECT_EQ(count_g(4), 15);
  const auto B = bell_table(12);
  for (int u = 1; u <= 12; ++u) EXPECT_EQ(count_g(u), B[u]) << u;
}

TEST(CountT, SpecExamples) {
  EXPECT_EQ(count_T(2, 3), 12);
  EXPECT_EQ(count_T(3, 4), 60);
  EXPECT_EQ(count_T(3, 3), 6);
  EXPECT_EQ(count_T(1, 2), 3);
  EXPECT_THROW(count_T(3, 2), std::invalid_argument);
}

TEST(CountT, DiagonalIsFactorial) {
  for (int r = 1; r <= 10; ++r) EXPECT_EQ(count_T(r, r), factorial(r));
}

TEST(CountT, MatchesEnumerationAndOracle) {
  for (int m = 1; m <= 7; ++m) {
    for (int r = 1; r <= m; ++r) {
      const Count t = count_T(r, m);
      EXPECT_EQ(t, count_T_oracle(r, m)) << r << "," << m;
      EXPECT_EQ(t, subspaces_by_enumeration(r, m)) << r << "," << m;
    }
  }
  EXPECT_EQ(count_T_oracle(2, 4), 62);
  EXPECT_THROW(count_T_oracle(2, 8), std::out_of_range);
}

TEST(CountT, DominatesG) {
  for (int m = 1; m <= 30; ++m) {
    for (int r = 1; r <= m; ++r) EXPECT_GE(count_T(r, m), count_G(r, m));
  }
}

TEST(Identities, RecountingAndVast) {
  for (int r = 1; r <= 10; ++r) {
    for (int m = 1; m <= 60; ++m) {
      Count lhs = 0;
      for (int l = 1; l <= r; ++l) lhs += binomial(r, l) * count_G(l, m);
      EXPECT_EQ(lhs, power(r, m)) << r << "," << m;
    }
  }
  for (int r_star = 2; r_star <= 10; ++r_star) {
    for (int m = 1; m <= 60; ++m) {
      const auto v = vast_identity_check(r_star, m);
      EXPECT_EQ(v.lhs, v.rhs);
      EXPECT_EQ(v.rhs, power(r_star - 1, m));
    }
  }
}

TEST(Identities, VastExamples) {
  EXPECT_EQ(vast_identity_check(2, 7).lhs, 1);
  const auto v35 = vast_identity_check(3, 5);
  EXPECT_EQ(v35.lhs, 32);
  const auto v = vast_identity_check(5, 40);
  Ratio bound = 1;
  for (int i = 0; i < 40; ++i) bound *= Ratio(4, 5);
  EXPECT_LE(v.bound, bound);
}

TEST(Binomial, Basics) {
  EXPECT_EQ(binomial(5, 2), 10);
  EXPECT_EQ(binomial(5, 0), 1);
  EXPECT_EQ(binomial(5, 6), 0);
  EXPECT_EQ(factorial(0), 1);
  const std::vector<int> parts{1, 2};
  EXPECT_EQ(multinomial(parts), 3);
}

TEST(Composition, Validation) {
  const Composition c({1, 2}, {1, 1, 2}, 7);
  EXPECT_EQ(c.r(), 2);
  EXPECT_EQ(c.j(), 3);
  const auto mult = c.multiplicities();
  EXPECT_EQ(mult[1], 2);
  EXPECT_EQ(mult[2], 1);
  EXPECT_THROW(Composition({1, 2}, {}, 4), std::invalid_argument);
  EXPECT_THROW(Composition({0, 3}, {}, 3), std::invalid_argument);
}

TEST(RatioRk, Examples) {
  EXPECT_EQ(ratio_Rk(0, 3, 4), Ratio(3, 5));
  for (int m = 6; m <= 12; ++m) EXPECT_EQ(ratio_Rk(4, 5, m), Ratio(1) / Ratio(count_T(5, m)));
  EXPECT_THROW(ratio_Rk(3, 3, 4), std::invalid_argument);
  EXPECT_THROW(ratio_Rk(1, 3, 3), std::invalid_argument);
}

TEST(RatioRk, FigureSixCrossover) {
  EXPECT_GT(ratio_Rk(1, 30, 31), 1);
  EXPECT_LT(ratio_Rk(1, 30, 90), 1);
  int first_below = -1;
  for (int m = 31; m <= 90; ++m) {
    if (ratio_Rk(1, 30, m) < 1) {
      first_below = m;
      break;
    }
  }
  EXPECT_GT(first_below, 35);
  EXPECT_LE(first_below, 40);
  for (int m = first_below; m < 90; ++m) EXPECT_GT(ratio_Rk(1, 30, m), ratio_Rk(1, 30, m + 1));
}

TEST(Approximations, MildRegime) {
  EXPECT_DOUBLE_EQ(mild_regime_approx(1, 1, 12), 3.0);
  EXPECT_NEAR(mild_regime_approx(2, 1, 10), 100.0 / 24.0, 1e-12);
  EXPECT_DOUBLE_EQ(mild_regime_approx(1, 2, 30), 5.0);
}

TEST(Approximations, Asymptotic) {
  EXPECT_NEAR(asymptotic_logGT(0, 5), std::log(120.0), 1e-12);
  EXPECT_NEAR(asymptotic_logGT(1, 10), std::log(10.0 * 3628800.0 / 2), 1e-10);
  const double ratio = std::exp(log_count(count_G(38, 40)) - asymptotic_logGT(2, 40));
  EXPECT_NEAR(ratio, 1.0, 0.15);
}

TEST(Approximations, LogCount) {
  EXPECT_NEAR(log_count(Count(1000)), std::log(1000.0), 1e-12);
  const Count big = factorial(300);
  EXPECT_NEAR(log_count(big), std::lgamma(301.0), 1e-9 * std::lgamma(301.0));
}

TEST(Multilayer, Products) {
  const std::vector<int> r{2, 3}, m{3, 4};
  EXPECT_EQ(multilayer_counts(r, m, CountKind::T), 720);
  const std::vector<int> r1{1, 1, 1}, m1{2, 2, 2};
  EXPECT_EQ(multilayer_counts(r1, m1, CountKind::T), 27);
  const std::vector<int> rs{3}, ms{5};
  EXPECT_EQ(multilayer_counts(rs, ms, CountKind::G), count_G(3, 5));
  const std::vector<int> bad{1};
  EXPECT_THROW(multilayer_counts(r, bad, CountKind::T), std::invalid_argument);
}

TEST(RatioTable, ShapeAndAggregate) {
  const auto rows = ratio_table(5, 12, 2);
  ASSERT_EQ(rows.size(), std::size_t(7 * 3));
  for (const auto& row : rows) {
    if (row.k == 0) {
      EXPECT_LE(row.value, 1);
    }
    Ratio agg = 0;
    for (int k = 1; k <= 4; ++k) agg += ratio_Rk(k, 5, row.m);
    EXPECT_EQ(row.aggregate, agg);
  }
  const std::vector<Count> weights{2, 0, 0, 1};
  const auto custom = ratio_table(5, 7, 1, SaddleWeights::custom, weights);
  EXPECT_EQ(custom.front().aggregate, 2 * ratio_Rk(1, 5, 6) + ratio_Rk(4, 5, 6));
  EXPECT_THROW(ratio_table(5, 7, 1, SaddleWeights::custom, {}), std::invalid_argument);
}

TEST(RatioTable, CsvFormat) {
  const auto csv = ratio_table_csv(ratio_table(3, 5, 1));
  EXPECT_EQ(csv.rfind("m,k,R_num,R_den,R_decimal,aggregate_num,aggregate_den,aggregate_decimal\n", 0), 0u);
  EXPECT_EQ(csv.find('\r'), std::string::npos);
  EXPECT_NE(csv.find("\n4,0,3,5,0.6,"), std::string::npos);
}

TEST(Decimal, Rendering) {
  EXPECT_EQ(to_decimal(Ratio(3, 5)), "0.6");
  EXPECT_EQ(to_decimal(Ratio(1, 3)), "0.333333333333");
  EXPECT_EQ(to_decimal(Ratio(2, 3)), "0.666666666667");
  EXPECT_EQ(to_decimal(Ratio(0)), "0");
  EXPECT_EQ(to_decimal(Ratio(1, 8), 2), "0.12");  // half-even
  EXPECT_EQ(to_decimal(Ratio(3, 8), 2), "0.38");
  EXPECT_EQ(to_decimal(ratio_Rk(1, 30, 90)), "3.15937085511e-06");
  EXPECT_EQ(to_string(factorial(20)), "2432902008176640000");
}
