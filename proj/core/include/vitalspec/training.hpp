#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "vitalspec/cnn.hpp"
#include "vitalspec/dataset.hpp"

namespace vitalspec {

struct RmsPropConfig {
  double learning_rate = 1e-4;
  double decay_rho = 0.9;
  double epsilon = 1e-8;
  std::size_t batch_size = 32;
  int epochs = 12;
  std::uint64_t seed = 0;

  void validate() const;
};

/// v <- rho v + (1 - rho) g^2 ;  theta <- theta - lr g / (sqrt(v) + eps)
class RmsProp {
 public:
  RmsProp(const RmsPropConfig& cfg, std::size_t n_params);
  void step(std::span<double> params, std::span<const double> grad);
  std::span<const double> mean_square() const noexcept { return mean_square_; }

 private:
  double lr_, rho_, eps_;
  std::vector<double> mean_square_;
};

struct Snapshot {
  int epoch = 0;
  std::vector<double> params;
};

/// Snapshots taken from one training run plus the odd-sized subset of epochs
/// that votes at inference time.
class SnapshotEnsemble {
 public:
  // Throws ValidationError for an empty or even vote set, or a vote epoch with
  // no matching snapshot.
  SnapshotEnsemble(CnnChannels channels, std::vector<Snapshot> snapshots, std::vector<int> vote_epochs);

  const std::vector<Snapshot>& snapshots() const noexcept { return snapshots_; }
  const std::vector<int>& vote_epochs() const noexcept { return vote_epochs_; }
  const CnnChannels& channels() const noexcept { return channels_; }

  std::vector<double> voter_probabilities(std::span<const double> image, std::size_t h, std::size_t w) const;
  int predict_vote(std::span<const double> image, std::size_t h, std::size_t w) const;
  int predict_vote(const SpectroImage& image) const;
  // Mean of the voting snapshots' probabilities (used for AUC).
  double mean_probability(const SpectroImage& image) const;

 private:
  CnnChannels channels_;
  std::vector<Snapshot> snapshots_;
  std::vector<int> vote_epochs_;
  std::vector<ShallowCnn> voters_;
};

/// Majority of thresholded (p >= 0.5) votes. Requires an odd number of votes.
int majority_vote(std::span<const int> votes);

struct TrainResult {
  std::vector<Snapshot> snapshots;
  std::vector<double> epoch_loss;  // mean training loss per epoch
  double initial_loss = 0.0;       // mean loss of the untrained model
};

/// Mini-batch RMSProp on binary cross-entropy. Shuffling is seeded by opt.seed.
/// A snapshot is stored at the end of every snapshot_every-th epoch.
/// Throws TrainingDiverged on a non-finite loss.
TrainResult train(ShallowCnn& model, const std::vector<const LabeledSample*>& samples, const RmsPropConfig& opt,
                  int snapshot_every);
TrainResult train(ShallowCnn& model, const std::vector<LabeledSample>& samples, const RmsPropConfig& opt,
                  int snapshot_every);

/// Writes `<stem>.params` (little-endian float64 in canonical layer order) and
/// `<stem>.json` ({arch, channels, epoch, seed, n_params}).
void write_snapshot(const std::string& stem, const Snapshot& snap, const CnnChannels& ch, std::uint64_t seed);
Snapshot read_snapshot(const std::string& stem, CnnChannels* channels = nullptr);

}  // namespace vitalspec
