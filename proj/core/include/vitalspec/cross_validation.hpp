#pragma once

#include <cstdint>
#include <vector>

#include "vitalspec/cnn.hpp"
#include "vitalspec/dataset.hpp"
#include "vitalspec/metrics.hpp"
#include "vitalspec/training.hpp"

namespace vitalspec {

struct TrainConfig {
  CnnChannels channels;
  RmsPropConfig optimizer;
  int snapshot_every = 2;
  std::vector<int> vote_epochs{8, 10, 12};

  /// Vote epochs must be an odd-sized subset of the snapshot epochs.
  void validate() const;
};

struct FoldResult {
  std::size_t fold = 0;
  std::vector<std::size_t> test_indices;  // originals only
  std::vector<int> predictions;
  std::vector<double> scores;
  TrainResult training;
};

struct CrossValidationResult {
  MetricsReport pooled;
  std::vector<FoldResult> folds;
};

/// Trains one model per fold on originals + augmented copies of the training
/// subjects and evaluates the voting ensemble on the test subjects' originals.
/// Predictions of all folds are pooled before computing metrics. Fold f trains
/// with seed derived from (optimizer.seed, f). Folds run in parallel.
CrossValidationResult cross_validate(const std::vector<LabeledSample>& samples, const std::vector<Fold>& folds,
                                     const TrainConfig& cfg);

/// Metrics of an ensemble on every sample of the set.
MetricsReport evaluate(const SnapshotEnsemble& ensemble, const std::vector<LabeledSample>& samples);

}  // namespace vitalspec
