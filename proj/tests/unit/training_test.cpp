#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <map>
#include <random>

#include "vitalspec/cross_validation.hpp"
#include "vitalspec/dataset.hpp"
#include "vitalspec/error.hpp"
#include "vitalspec/protocol.hpp"
#include "vitalspec/synth.hpp"
#include "vitalspec/training.hpp"

namespace vitalspec {
namespace {

LabeledSample random_sample(std::uint64_t seed, int label, std::string subject) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  LabeledSample s;
  for (auto& p : s.image.pixels) p = u(rng);
  // Brighter upper half for positives gives the tiny models something to learn.
  if (label == 1)
    for (std::size_t i = 0; i < s.image.pixels.size() / 2; ++i) s.image.pixels[i] = std::min(1.0f, s.image.pixels[i] + 0.5f);
  s.label = label;
  s.subject_id = std::move(subject);
  return s;
}

TEST(RmsPropConfig, Validation) {
  RmsPropConfig ok;
  EXPECT_NO_THROW(ok.validate());
  for (auto mutate : std::vector<void (*)(RmsPropConfig&)>{
           [](RmsPropConfig& c) { c.learning_rate = 0.0; }, [](RmsPropConfig& c) { c.decay_rho = 1.0; },
           [](RmsPropConfig& c) { c.decay_rho = 0.0; }, [](RmsPropConfig& c) { c.epsilon = 0.0; },
           [](RmsPropConfig& c) { c.batch_size = 0; }, [](RmsPropConfig& c) { c.epochs = 0; }}) {
    RmsPropConfig c;
    mutate(c);
    EXPECT_THROW(c.validate(), ValidationError);
  }
}

TEST(RmsProp, FollowsUpdateRule) {
  RmsPropConfig cfg;
  cfg.learning_rate = 0.01;
  RmsProp opt(cfg, 3);
  std::vector<double> theta{1.0, -2.0, 0.5}, v(3, 0.0), expected = theta;
  const std::vector<std::vector<double>> grads{{0.3, -1.0, 0.0}, {0.1, 0.4, 2.0}, {-0.5, 0.0, 1.0}};
  for (const auto& g : grads) {
    opt.step(theta, g);
    for (std::size_t i = 0; i < 3; ++i) {
      v[i] = 0.9 * v[i] + 0.1 * g[i] * g[i];
      expected[i] -= 0.01 * g[i] / (std::sqrt(v[i]) + 1e-8);
      EXPECT_DOUBLE_EQ(theta[i], expected[i]);
      EXPECT_DOUBLE_EQ(opt.mean_square()[i], v[i]);
    }
  }
}

// With rho near zero the running mean square is just g^2, so each step moves
// every coordinate by lr against the sign of its gradient.
TEST(RmsProp, VanishingDecayGivesSignDescentOnQuadraticBowl) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(-3.0, 3.0), curv(0.5, 4.0);
  for (int trial = 0; trial < 50; ++trial) {
    RmsPropConfig cfg;
    cfg.decay_rho = 1e-300;
    cfg.epsilon = 1e-300;
    cfg.learning_rate = 0.05;
    const std::size_t n = 6;
    RmsProp opt(cfg, n);
    std::vector<double> a(n), theta(n);
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = curv(rng);
      theta[i] = u(rng);
    }
    for (int step = 0; step < 5; ++step) {
      std::vector<double> g(n), before = theta;
      for (std::size_t i = 0; i < n; ++i) g[i] = a[i] * theta[i];
      opt.step(theta, g);
      for (std::size_t i = 0; i < n; ++i)
        ASSERT_NEAR(theta[i], before[i] - cfg.learning_rate * (g[i] > 0 ? 1.0 : -1.0), 1e-9);
    }
  }
}

TEST(MajorityVote, Examples) {
  EXPECT_EQ(majority_vote(std::vector<int>{1, 1, 0}), 1);
  EXPECT_EQ(majority_vote(std::vector<int>{0, 0, 0}), 0);
  EXPECT_EQ(majority_vote(std::vector<int>{1}), 1);
  EXPECT_EQ(majority_vote(std::vector<int>{0}), 0);
  EXPECT_THROW(majority_vote(std::vector<int>{1, 0}), ValidationError);
  EXPECT_THROW(majority_vote(std::vector<int>{}), ValidationError);
}

TEST(MajorityVote, EqualsModeOfVotes) {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 2000; ++trial) {
    const std::size_t n = 2 * std::uniform_int_distribution<std::size_t>(0, 7)(rng) + 1;
    std::vector<int> votes(n);
    std::map<int, int> tally;
    for (auto& v : votes) ++tally[v = static_cast<int>(rng() % 2)];
    const int mode = tally[1] > tally[0] ? 1 : 0;
    ASSERT_EQ(majority_vote(votes), mode);
  }
}

std::vector<Snapshot> zero_snapshots(const CnnChannels& ch, std::initializer_list<int> epochs) {
  std::vector<Snapshot> out;
  for (int e : epochs) out.push_back({e, std::vector<double>(ShallowCnn::parameter_count(ch), 0.0)});
  return out;
}

TEST(SnapshotEnsemble, VoteSetValidation) {
  const CnnChannels ch{2, 2, 2};
  EXPECT_THROW(SnapshotEnsemble(ch, zero_snapshots(ch, {2, 4, 6}), {}), ValidationError);
  EXPECT_THROW(SnapshotEnsemble(ch, zero_snapshots(ch, {2, 4, 6}), {4, 6}), ValidationError);
  EXPECT_THROW(SnapshotEnsemble(ch, zero_snapshots(ch, {2, 4, 6}), {2, 4, 8}), ValidationError);
  EXPECT_NO_THROW(SnapshotEnsemble(ch, zero_snapshots(ch, {2, 4, 6}), {2, 4, 6}));
  EXPECT_NO_THROW(SnapshotEnsemble(ch, zero_snapshots(ch, {2, 4, 6}), {4}));
}

// Voters whose only nonzero parameter is the dense bias give a fixed probability.
TEST(SnapshotEnsemble, VotesAndAveragesBiasOnlyVoters) {
  const CnnChannels ch{2, 2, 2};
  auto snaps = zero_snapshots(ch, {1, 2, 3});
  snaps[0].params.back() = 2.0;
  snaps[1].params.back() = 1.0;
  snaps[2].params.back() = -3.0;
  const SnapshotEnsemble all(ch, snaps, {1, 2, 3});
  const SpectroImage img;
  EXPECT_EQ(all.predict_vote(img), 1);
  EXPECT_NEAR(all.mean_probability(img), (sigmoid(2.0) + sigmoid(1.0) + sigmoid(-3.0)) / 3.0, 1e-15);
  const auto probs = all.voter_probabilities(to_input(img), 128, 128);
  ASSERT_EQ(probs.size(), 3u);
  EXPECT_DOUBLE_EQ(probs[2], sigmoid(-3.0));
  const SnapshotEnsemble single(ch, snaps, {3});
  EXPECT_EQ(single.predict_vote(img), 0);
}

TEST(Train, SnapshotScheduleFollowsInterval) {
  std::vector<LabeledSample> samples{random_sample(1, 0, "a"), random_sample(2, 1, "b")};
  RmsPropConfig opt;
  opt.epochs = 12;
  auto model = ShallowCnn::initialized({2, 2, 2}, 1);
  const auto r = train(model, samples, opt, 2);
  std::vector<int> epochs;
  for (const auto& s : r.snapshots) epochs.push_back(s.epoch);
  EXPECT_EQ(epochs, (std::vector<int>{2, 4, 6, 8, 10, 12}));
  EXPECT_EQ(r.epoch_loss.size(), 12u);
  EXPECT_EQ(r.initial_loss, std::log(2.0));
  EXPECT_TRUE(std::equal(r.snapshots.back().params.begin(), r.snapshots.back().params.end(), model.params().begin()));

  opt.epochs = 45;
  auto model45 = ShallowCnn::initialized({2, 2, 2}, 1);
  const auto r45 = train(model45, samples, opt, 3);
  ASSERT_EQ(r45.snapshots.size(), 15u);
  EXPECT_NO_THROW(SnapshotEnsemble({2, 2, 2}, r45.snapshots, {39, 42, 45}));
}

TEST(Train, RejectsEmptySetAndBadInterval) {
  auto model = ShallowCnn::initialized({2, 2, 2}, 1);
  EXPECT_THROW(train(model, std::vector<LabeledSample>{}, RmsPropConfig{}, 2), ValidationError);
  EXPECT_THROW(train(model, std::vector<LabeledSample>{random_sample(1, 0, "a")}, RmsPropConfig{}, 0), ValidationError);
}

TEST(Train, DeterministicGivenSeed) {
  std::vector<LabeledSample> samples;
  for (int i = 0; i < 6; ++i) samples.push_back(random_sample(static_cast<std::uint64_t>(i), i % 2, "s"));
  RmsPropConfig opt;
  opt.epochs = 3;
  opt.batch_size = 2;
  opt.learning_rate = 1e-3;
  auto m1 = ShallowCnn::initialized({2, 3, 2}, 4), m2 = ShallowCnn::initialized({2, 3, 2}, 4);
  const auto a = train(m1, samples, opt, 1), b = train(m2, samples, opt, 1);
  EXPECT_EQ(a.epoch_loss, b.epoch_loss);
  EXPECT_EQ(a.snapshots.back().params, b.snapshots.back().params);
}

TEST(Train, DivergenceReportsEpoch) {
  std::vector<LabeledSample> samples{random_sample(1, 0, "a"), random_sample(2, 1, "b")};
  RmsPropConfig opt;
  opt.learning_rate = 1e308;
  opt.epochs = 5;
  auto model = ShallowCnn::initialized({2, 2, 2}, 1);
  try {
    train(model, samples, opt, 1);
    FAIL() << "expected divergence";
  } catch (const TrainingDiverged& e) {
    EXPECT_GE(e.epoch(), 1);
    EXPECT_LE(e.epoch(), 5);
  }
}

TEST(Train, OverfitsSingleSample) {
  PipelineConfig pc;
  std::vector<double> v(40);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = 80.0 - static_cast<double>(i) * 0.5;
  LabeledSample s;
  s.image = encode_observation(TimeSeries(v, 60.0), pc);
  s.label = 1;
  s.subject_id = "solo";
  RmsPropConfig opt;
  opt.learning_rate = 1e-3;
  opt.epochs = 200;
  auto model = ShallowCnn::initialized({}, 0);
  const auto r = train(model, std::vector<LabeledSample>{s}, opt, 50);
  EXPECT_LT(r.epoch_loss.back(), 0.01);
  EXPECT_LT(bce_with_logit(model.logit(to_input(s.image), 128, 128), 1), 0.01);
}

TEST(Train, FinalLossBelowInitialOnSyntheticCorpus) {
  auto p = preset("mimic_like");
  p.pipeline.copies_per_class = {1, 1};
  const auto ds = build_dataset(synthesize_corpus(p.synth.scaled_to(10), p.seed), p.pipeline);
  ASSERT_EQ(ds.samples.size(), 20u);
  auto model = ShallowCnn::initialized(p.training.channels, p.training.optimizer.seed);
  const auto r = train(model, ds.samples, p.training.optimizer, p.training.snapshot_every);
  EXPECT_LT(r.epoch_loss.back(), r.initial_loss);
}

TEST(SnapshotFile, RoundTripsParametersAndHeader) {
  const auto dir = std::filesystem::temp_directory_path() / "vitalspec_snapshot_test";
  std::filesystem::create_directories(dir);
  const CnnChannels ch{3, 2, 4};
  auto model = ShallowCnn::initialized(ch, 8);
  model.params().back() = -0.125;
  const Snapshot snap{6, {model.params().begin(), model.params().end()}};
  const auto stem = (dir / "fold0_epoch6").string();
  write_snapshot(stem, snap, ch, 99);
  EXPECT_EQ(std::filesystem::file_size(stem + ".params"), 8 * model.parameter_count());
  CnnChannels back_ch;
  const auto back = read_snapshot(stem, &back_ch);
  EXPECT_EQ(back.epoch, 6);
  EXPECT_EQ(back.params, snap.params);
  EXPECT_EQ(back_ch, ch);
  std::filesystem::resize_file(stem + ".params", 16);
  EXPECT_ANY_THROW(read_snapshot(stem));
  std::filesystem::remove_all(dir);
}

std::vector<LabeledSample> subject_corpus(std::size_t subjects, int copies) {
  std::vector<LabeledSample> out;
  for (std::size_t s = 0; s < subjects; ++s)
    for (int a = 0; a <= copies; ++a) {
      auto sample = random_sample(s * 100 + static_cast<std::uint64_t>(a), static_cast<int>(s % 2), "p" + std::to_string(s));
      sample.augmentation_index = a;
      out.push_back(std::move(sample));
    }
  return out;
}

TrainConfig tiny_training() {
  TrainConfig tc;
  tc.channels = {2, 2, 2};
  tc.optimizer.epochs = 3;
  tc.optimizer.learning_rate = 1e-2;
  tc.optimizer.batch_size = 4;
  tc.snapshot_every = 1;
  tc.vote_epochs = {1, 2, 3};
  return tc;
}

TEST(CrossValidate, LeaveOneOutTestsEachSubjectOriginalsOnce) {
  const auto samples = subject_corpus(12, 2);
  const auto folds = subject_kfold(samples, 12, 3);
  const auto cv = cross_validate(samples, folds, tiny_training());
  ASSERT_EQ(cv.folds.size(), 12u);
  std::map<std::string, int> tested;
  for (const auto& f : cv.folds) {
    ASSERT_EQ(f.test_indices.size(), 1u);
    EXPECT_EQ(samples[f.test_indices[0]].augmentation_index, 0);
    ++tested[samples[f.test_indices[0]].subject_id];
    EXPECT_EQ(f.training.snapshots.size(), 3u);
  }
  EXPECT_EQ(tested.size(), 12u);
  EXPECT_EQ(cv.pooled.total, 12u);
}

TEST(CrossValidate, DeterministicPooledReport) {
  const auto samples = subject_corpus(10, 1);
  const auto folds = subject_kfold(samples, 5, 1);
  const auto a = cross_validate(samples, folds, tiny_training());
  const auto b = cross_validate(samples, folds, tiny_training());
  EXPECT_EQ(to_json(a.pooled).dump(), to_json(b.pooled).dump());
  for (std::size_t f = 0; f < a.folds.size(); ++f) EXPECT_EQ(a.folds[f].scores, b.folds[f].scores);
}

TEST(CrossValidate, RejectsVoteEpochsOffSchedule) {
  const auto samples = subject_corpus(4, 0);
  const auto folds = subject_kfold(samples, 2, 1);
  auto tc = tiny_training();
  tc.snapshot_every = 2;
  tc.vote_epochs = {1};
  EXPECT_THROW(cross_validate(samples, folds, tc), ValidationError);
  tc.snapshot_every = 1;
  tc.vote_epochs = {5};
  EXPECT_THROW(cross_validate(samples, folds, tc), ValidationError);
}

TEST(Evaluate, UsesMeanProbabilityForAuc) {
  const CnnChannels ch{2, 2, 2};
  auto snaps = zero_snapshots(ch, {1});
  snaps[0].params.back() = 0.3;
  const SnapshotEnsemble ens(ch, snaps, {1});
  const auto samples = subject_corpus(4, 0);
  const auto r = evaluate(ens, samples);
  EXPECT_EQ(r.total, 4u);
  EXPECT_DOUBLE_EQ(r.accuracy, 50.0);
  ASSERT_TRUE(r.auc.has_value());
  EXPECT_DOUBLE_EQ(*r.auc, 0.5);
}

}  // namespace
}  // namespace vitalspec
