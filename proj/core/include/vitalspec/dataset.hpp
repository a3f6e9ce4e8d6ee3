#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "vitalspec/csv.hpp"
#include "vitalspec/fm.hpp"
#include "vitalspec/stft.hpp"
#include "vitalspec/time_series.hpp"

namespace vitalspec {

struct WindowSpec {
  double observation_s = 0.0;
  double gap_s = 0.0;
  double target_s = 0.0;

  void validate() const;
};

enum class Comparator { Below };

struct EpisodeRule {
  double threshold = 60.0;
  double min_duration_s = 0.0;
  Comparator comparator = Comparator::Below;

  void validate() const;
};

struct AugmentConfig {
  double noise_mean = 0.0;
  double noise_std = 3.0;
  int copies = 0;
  std::uint64_t seed = 0;
};

struct LabeledSample {
  SpectroImage image;
  int label = 0;
  std::string subject_id;
  int record_id = 0;
  int augmentation_index = 0;  // 0 = original
};

/// 1 iff some contiguous run of below-threshold samples covers at least
/// min_duration_s, where a run of k samples covers k*dt seconds. With
/// min_duration_s == 0 any single reading below threshold qualifies.
int label_target(const TimeSeries& target_window, const EpisodeRule& rule);

struct WindowSplit {
  TimeSeries observation;
  TimeSeries target;
};

/// Observation = samples in [0, obs); target = samples in [obs+gap, obs+gap+target).
/// Gap samples are dropped.
WindowSplit split_windows(const TimeSeries& ts, const WindowSpec& spec);

/// cfg.copies noisy copies of ts (originals not included), deterministic in cfg.seed.
std::vector<TimeSeries> augment(const TimeSeries& ts, const AugmentConfig& cfg);

struct Fold {
  std::vector<std::string> train_subjects;
  std::vector<std::string> test_subjects;
  std::vector<std::size_t> train_indices;
  std::vector<std::size_t> test_indices;
};

/// Subject-wise k-fold: distinct subjects are shuffled with the seed and dealt
/// round-robin into k folds. k == number of subjects gives leave-one-subject-out.
std::vector<Fold> subject_kfold(const std::vector<std::string>& sample_subjects, std::size_t k,
                                std::uint64_t seed);
std::vector<Fold> subject_kfold(const std::vector<LabeledSample>& samples, std::size_t k, std::uint64_t seed);
std::size_t distinct_subject_count(const std::vector<std::string>& sample_subjects);

enum class TaskKind {
  Prediction,  // label from EpisodeRule on the target window
  Detection,   // whole record is the observation, label from the CSV
};

struct PipelineConfig {
  TaskKind task = TaskKind::Prediction;
  WindowSpec window;
  EpisodeRule rule;
  NormalizationSpec normalization;
  double noise_mean = 0.0;
  double noise_std = 3.0;
  std::array<int, 2> copies_per_class{0, 0};  // indexed by label
  FmConfig fm;
  StftConfig stft = default_stft_config(FmConfig{});
  std::uint64_t seed = 0;
};

/// Observation window (or whole record) to image: normalize, modulate, stft, render.
SpectroImage encode_observation(const TimeSeries& observation, const PipelineConfig& cfg,
                                std::string provenance = {});

struct RecordError {
  std::string subject_id;
  int record_id = 0;
  std::string message;
};

struct Dataset {
  std::vector<LabeledSample> samples;  // sorted by (subject, record, augmentation_index)
  std::vector<RecordError> errors;
};

/// Seed used to augment one record: splitmix64 of the global seed mixed with an
/// FNV-1a hash of the subject id and the record id.
std::uint64_t record_seed(std::uint64_t global_seed, const std::string& subject_id, int record_id);

/// split -> label -> augment the raw observation -> encode each copy. Per-record
/// failures are collected in Dataset::errors and the rest of the corpus is kept.
Dataset build_dataset(const std::vector<Record>& records, const PipelineConfig& cfg);

struct LabelCounts {
  std::array<std::size_t, 2> originals{0, 0};
  std::size_t total = 0;
};

/// Labels and output size of build_dataset without rendering any images.
LabelCounts count_dataset(const std::vector<Record>& records, const PipelineConfig& cfg);

}  // namespace vitalspec
