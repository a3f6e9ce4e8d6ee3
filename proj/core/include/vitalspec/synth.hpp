#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vitalspec/csv.hpp"
#include "vitalspec/dataset.hpp"

namespace vitalspec {

/// Parameters of the synthetic corpus generator that stands in for the
/// restricted clinical datasets.
///
/// Prediction corpora: positive records drift linearly from a baseline down to
/// below the threshold by the start of the target window and stay there;
/// negative records are stationary around the baseline and never touch the
/// threshold. Detection corpora: positive records carry an upward drift plus a
/// slow oscillation; negative records are stationary. Labels are written for
/// detection corpora only (prediction labels come from the episode rule).
struct SynthSpec {
  TaskKind task = TaskKind::Prediction;
  std::size_t subjects = 0;
  std::size_t records = 0;           // total recordings, dealt round-robin over subjects
  std::size_t positive_records = 0;  // how many of them are label 1
  double dt = 1.0;                   // seconds
  std::size_t length = 0;            // samples per record
  WindowSpec window;                 // prediction only
  double threshold = 60.0;
  double baseline = 80.0;
  double baseline_spread = 5.0;
  double noise_std = 1.0;
  double drift = 15.0;               // detection positives: total rise over the record
  std::string unit;

  void validate() const;
  /// Same class balance and records-per-subject ratio at a different subject count.
  SynthSpec scaled_to(std::size_t n_subjects) const;
};

std::vector<Record> synthesize_corpus(const SynthSpec& spec, std::uint64_t seed);

}  // namespace vitalspec
