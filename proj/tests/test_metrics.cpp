#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "batd/metrics.hpp"

using namespace batd;

TEST(Metrics, AucOverSecondHalf) {
  // T = 4: mean of e_2, e_3, e_4.
  const std::vector<double> e{10, 9, 3, 2, 1};
  EXPECT_DOUBLE_EQ(auc_ss(e), 2.0);
  // T = 5: floor(5/2) = 2, mean of e_2..e_5.
  const std::vector<double> f{10, 9, 4, 3, 2, 1};
  EXPECT_DOUBLE_EQ(auc_ss(f), 2.5);
  EXPECT_THROW(auc_ss(std::vector<double>{1, 2}), InvalidModel);
}

TEST(Metrics, FinalAndTrailing) {
  const std::vector<double> e{5, 4, 3, 2, 1, 0, 1, 2, 3, 4};
  EXPECT_EQ(final_value(e), 4.0);
  EXPECT_DOUBLE_EQ(trailing_mean(e, 0.2), 3.5);
  EXPECT_DOUBLE_EQ(trailing_mean(e, 0.25), 3.0);  // ceil(2.5) = 3 values
  EXPECT_DOUBLE_EQ(trailing_mean(e, 0.0), 4.0);
  EXPECT_THROW(final_value(std::vector<double>{}), InvalidModel);
}

TEST(Metrics, AggregateUsesSampleStd) {
  const std::vector<double> v{2, 4, 4, 4, 5, 5, 7, 9};
  const Aggregate a = aggregate(v);
  EXPECT_DOUBLE_EQ(a.mean, 5.0);
  EXPECT_NEAR(a.std, std::sqrt(32.0 / 7.0), 1e-15);
  EXPECT_EQ(a.n, 8u);
  EXPECT_THROW(aggregate(std::vector<double>{1.0}), InvalidModel);
}

TEST(Metrics, AggregateIsOrderIndependent) {
  std::mt19937_64 rng(1);
  std::lognormal_distribution<double> d(0.0, 3.0);
  std::vector<double> v(1000);
  for (double& x : v) x = d(rng);
  const Aggregate ref = aggregate(v);
  for (int k = 0; k < 5; ++k) {
    std::shuffle(v.begin(), v.end(), rng);
    const Aggregate a = aggregate(v);
    EXPECT_EQ(a.mean, ref.mean);
    EXPECT_EQ(a.std, ref.std);
  }
}
