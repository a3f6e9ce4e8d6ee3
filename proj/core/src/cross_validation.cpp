#include "vitalspec/cross_validation.hpp"

#include <algorithm>

#include "vitalspec/error.hpp"
#include "vitalspec/parallel.hpp"
#include "vitalspec/protocol.hpp"

namespace vitalspec {

void TrainConfig::validate() const {
  optimizer.validate();
  if (snapshot_every < 1) throw ValidationError("snapshot_every must be >= 1");
  if (vote_epochs.empty() || vote_epochs.size() % 2 == 0)
    throw ValidationError("vote set must hold an odd number of epochs");
  for (int e : vote_epochs) {
    if (e < 1 || e > optimizer.epochs || e % snapshot_every != 0)
      throw ValidationError("vote epoch " + std::to_string(e) + " is not a snapshot epoch of the schedule");
  }
}

namespace {

struct Scored {
  int prediction;
  double score;
};

Scored score_sample(const SnapshotEnsemble& ensemble, const LabeledSample& s) {
  const auto input = to_input(s.image);
  const auto probs = ensemble.voter_probabilities(input, kImageSize, kImageSize);
  std::vector<int> votes;
  double mean = 0.0;
  for (double p : probs) {
    votes.push_back(p >= 0.5 ? 1 : 0);
    mean += p;
  }
  return {majority_vote(votes), mean / static_cast<double>(probs.size())};
}

}  // namespace

MetricsReport evaluate(const SnapshotEnsemble& ensemble, const std::vector<LabeledSample>& samples) {
  if (samples.empty()) throw ValidationError("evaluate: empty evaluation set");
  std::vector<int> labels, preds;
  std::vector<double> scores;
  for (const auto& s : samples) {
    const auto [pred, score] = score_sample(ensemble, s);
    labels.push_back(s.label);
    preds.push_back(pred);
    scores.push_back(score);
  }
  return compute_metrics(labels, preds, scores);
}

CrossValidationResult cross_validate(const std::vector<LabeledSample>& samples, const std::vector<Fold>& folds,
                                     const TrainConfig& cfg) {
  cfg.validate();
  if (folds.empty()) throw ValidationError("cross_validate: no folds");

  std::vector<FoldResult> results(folds.size());
  parallel_for(folds.size(), [&](std::size_t f) {
    try {
      const auto& fold = folds[f];
      std::vector<const LabeledSample*> train_set;
      for (std::size_t i : fold.train_indices) train_set.push_back(&samples.at(i));

      auto opt = cfg.optimizer;
      opt.seed = splitmix64(cfg.optimizer.seed ^ (2 * f + 2));
      auto model = ShallowCnn::initialized(cfg.channels, splitmix64(cfg.optimizer.seed ^ (2 * f + 1)));

      FoldResult& out = results[f];
      out.fold = f;
      out.training = train(model, train_set, opt, cfg.snapshot_every);
      const SnapshotEnsemble ensemble(cfg.channels, out.training.snapshots, cfg.vote_epochs);

      for (std::size_t i : fold.test_indices) {
        const auto& s = samples.at(i);
        if (s.augmentation_index != 0) continue;
        const auto [pred, score] = score_sample(ensemble, s);
        out.test_indices.push_back(i);
        out.predictions.push_back(pred);
        out.scores.push_back(score);
      }
    } catch (const std::exception& e) {
      throw std::runtime_error("fold " + std::to_string(f) + ": " + e.what());
    }
  });

  CrossValidationResult cv;
  std::vector<int> labels, preds;
  std::vector<double> scores;
  for (auto& r : results) {
    for (std::size_t k = 0; k < r.test_indices.size(); ++k) {
      labels.push_back(samples[r.test_indices[k]].label);
      preds.push_back(r.predictions[k]);
      scores.push_back(r.scores[k]);
    }
  }
  cv.pooled = compute_metrics(labels, preds, scores);
  cv.folds = std::move(results);
  return cv;
}

}  // namespace vitalspec
