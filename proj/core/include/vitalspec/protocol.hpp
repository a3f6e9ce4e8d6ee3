#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vitalspec/cross_validation.hpp"
#include "vitalspec/dataset.hpp"
#include "vitalspec/synth.hpp"

namespace vitalspec {

enum class CvScheme { KFold, LeaveOneSubjectOut };

/// Everything one experiment needs: windowing, labelling, augmentation,
/// signal encoding, training schedule, validation scheme and the matching
/// synthetic corpus.
struct ProtocolPreset {
  std::string name;
  PipelineConfig pipeline;
  TrainConfig training;
  CvScheme cv = CvScheme::KFold;
  std::size_t folds = 10;  // ignored for leave-one-subject-out
  SynthSpec synth;
  std::uint64_t seed = 0;
  std::uint64_t cv_seed = 0;
};

/// mimic_like, pic_like, pain_like, stress_like
std::vector<std::string> preset_names();
ProtocolPreset preset(const std::string& name);

nlohmann::json to_json(const ProtocolPreset& p);
ProtocolPreset preset_from_json(const nlohmann::json& j);

/// RFC 7386 merge of `overrides` onto the preset's JSON form.
ProtocolPreset apply_overrides(const ProtocolPreset& base, const nlohmann::json& overrides);

/// 16 hex digits of FNV-1a over the canonical JSON of the pipeline section.
std::string protocol_hash(const ProtocolPreset& p);

/// Stage seeds derived from one master seed: splitmix64(seed ^ fnv1a64(stage))
/// for the stages "augment", "train" and "folds". Sets p.seed as well.
ProtocolPreset with_seed(ProtocolPreset p, std::uint64_t seed);
std::uint64_t stage_seed(std::uint64_t seed, std::string_view stage);

std::size_t fold_count(const ProtocolPreset& p, std::size_t n_subjects);

std::uint64_t fnv1a64(std::string_view bytes);
std::uint64_t splitmix64(std::uint64_t x);

}  // namespace vitalspec
