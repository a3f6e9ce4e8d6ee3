#include <gtest/gtest.h>

#include <random>

#include "vitalspec/error.hpp"
#include "vitalspec/metrics.hpp"

namespace vitalspec {
namespace {

double brute_force_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
  double wins = 0.0;
  double pairs = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i)
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[i] != 1 || labels[j] != 0) continue;
      pairs += 1.0;
      wins += scores[i] > scores[j] ? 1.0 : scores[i] == scores[j] ? 0.5 : 0.0;
    }
  return wins / pairs;
}

TEST(Metrics, PerfectPredictionsScoreFullMarks) {
  const std::vector<int> y{0, 1, 0, 1, 1, 0};
  const std::vector<double> s{0.1, 0.9, 0.2, 0.8, 0.7, 0.3};
  const auto r = compute_metrics(y, y, s);
  EXPECT_EQ(r.accuracy, 100.0);
  for (const auto& c : {r.per_class[0], r.per_class[1], r.overall}) {
    EXPECT_EQ(c.precision, 100.0);
    EXPECT_EQ(c.recall, 100.0);
    EXPECT_EQ(c.f1, 100.0);
  }
  EXPECT_EQ(r.auc, 1.0);
  EXPECT_EQ(r.overall.support, 6u);
}

TEST(Metrics, AllPositivePredictorOnBalancedSet) {
  const std::vector<int> y{0, 1, 0, 1, 0, 1}, pred(6, 1);
  const std::vector<double> s(6, 0.5);
  const auto r = compute_metrics(y, pred, s);
  EXPECT_EQ(r.accuracy, 50.0);
  EXPECT_EQ(r.per_class[1].recall, 100.0);
  EXPECT_EQ(r.per_class[0].recall, 0.0);
  EXPECT_EQ(r.per_class[0].precision, 0.0);
  EXPECT_EQ(r.per_class[0].f1, 0.0);
  EXPECT_EQ(r.per_class[1].precision, 50.0);
  EXPECT_NEAR(r.per_class[1].f1, 200.0 / 3.0, 1e-12);
  EXPECT_EQ(r.auc, 0.5);
  EXPECT_EQ(r.confusion[0][1], 3u);
  EXPECT_EQ(r.confusion[1][1], 3u);
}

TEST(Metrics, ConfusionIdentitiesAndSupportWeighting) {
  const std::vector<int> y{1, 1, 1, 1, 0, 0, 0, 0, 0, 0}, pred{1, 1, 1, 0, 0, 0, 0, 0, 1, 1};
  const std::vector<double> s{.9, .8, .7, .4, .1, .2, .3, .35, .6, .65};
  const auto r = compute_metrics(y, pred, s);
  EXPECT_EQ(r.accuracy, 100.0 * (r.confusion[0][0] + r.confusion[1][1]) / r.total);
  EXPECT_NEAR(r.per_class[1].precision, 60.0, 1e-12);
  EXPECT_NEAR(r.per_class[1].recall, 75.0, 1e-12);
  EXPECT_NEAR(r.per_class[0].precision, 80.0, 1e-12);
  EXPECT_NEAR(r.per_class[0].recall, 100.0 * 4 / 6, 1e-12);
  for (const auto& c : r.per_class) EXPECT_NEAR(c.f1, 2 * c.precision * c.recall / (c.precision + c.recall), 1e-12);
  EXPECT_NEAR(r.overall.recall, (6 * r.per_class[0].recall + 4 * r.per_class[1].recall) / 10, 1e-12);
  EXPECT_NEAR(r.overall.precision, (6 * r.per_class[0].precision + 4 * r.per_class[1].precision) / 10, 1e-12);
  EXPECT_NEAR(r.overall.f1, (6 * r.per_class[0].f1 + 4 * r.per_class[1].f1) / 10, 1e-12);
}

TEST(RankAuc, EightScoredSamplesMatchPairCount) {
  const std::vector<double> s{0.9, 0.4, 0.4, 0.7, 0.2, 0.7, 0.55, 0.1};
  const std::vector<int> y{1, 0, 1, 0, 0, 1, 1, 0};
  // 16 (pos, neg) pairs: 12 ordered, 2 tied (0.4/0.4 and 0.7/0.7), 2 reversed.
  EXPECT_DOUBLE_EQ(brute_force_auc(s, y), 13.0 / 16.0);
  EXPECT_DOUBLE_EQ(*rank_auc(s, y), 13.0 / 16.0);
}

TEST(RankAuc, MatchesBruteForceOnRandomScores) {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = std::uniform_int_distribution<std::size_t>(2, 200)(rng);
    const bool coarse = trial % 3 == 0;
    std::vector<double> s(n);
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = coarse ? static_cast<double>(rng() % 5) / 4.0 : std::uniform_real_distribution<double>(0, 1)(rng);
      y[i] = static_cast<int>(rng() % 2);
    }
    y[0] = 0;
    y[1] = 1;
    ASSERT_NEAR(*rank_auc(s, y), brute_force_auc(s, y), 1e-12) << "trial " << trial;
  }
}

TEST(RankAuc, UndefinedForSingleClass) {
  const std::vector<double> s{0.2, 0.8, 0.4};
  EXPECT_FALSE(rank_auc(s, std::vector<int>{1, 1, 1}).has_value());
  const auto r = compute_metrics(std::vector<int>{0, 0, 0}, std::vector<int>{0, 1, 0}, s);
  EXPECT_FALSE(r.auc.has_value());
  EXPECT_NEAR(r.accuracy, 200.0 / 3.0, 1e-12);
  const auto j = to_json(r);
  EXPECT_FALSE(j.at("auc_defined").get<bool>());
  EXPECT_TRUE(j.at("auc").is_null());
}

TEST(Metrics, RejectsMismatchedOrEmptyInput) {
  EXPECT_THROW(compute_metrics(std::vector<int>{}, std::vector<int>{}, std::vector<double>{}), ValidationError);
  EXPECT_THROW(compute_metrics(std::vector<int>{0, 1}, std::vector<int>{0}, std::vector<double>{0.1, 0.2}), ValidationError);
  EXPECT_THROW(compute_metrics(std::vector<int>{0, 2}, std::vector<int>{0, 1}, std::vector<double>{0.1, 0.2}), ValidationError);
}

TEST(Metrics, JsonCarriesReportFields) {
  const std::vector<int> y{0, 1, 1}, p{0, 1, 0};
  const std::vector<double> s{0.2, 0.9, 0.4};
  const auto j = to_json(compute_metrics(y, p, s));
  EXPECT_TRUE(j.at("auc_defined").get<bool>());
  EXPECT_DOUBLE_EQ(j.at("auc").get<double>(), 1.0);
  EXPECT_EQ(j.at("total").get<int>(), 3);
  EXPECT_EQ(j.at("confusion")[1][0].get<int>(), 1);
  EXPECT_TRUE(j.contains("overall"));
  EXPECT_DOUBLE_EQ(j.at("class_1").at("recall").get<double>(), 50.0);
}

}  // namespace
}  // namespace vitalspec
