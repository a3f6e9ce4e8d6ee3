#include "vitalspec/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "vitalspec/error.hpp"

namespace vitalspec {

void SynthSpec::validate() const {
  if (records < subjects) throw ValidationError("synth: every subject needs at least one record");
  if (positive_records > records) throw ValidationError("synth: more positive records than records");
  if (subjects > 0 && length < 2) throw ValidationError("synth: records need at least 2 samples");
  if (!(dt > 0.0)) throw ValidationError("synth: dt must be positive");
  if (task == TaskKind::Prediction && subjects > 0) {
    window.validate();
    const double needed = window.observation_s + window.gap_s + window.target_s;
    if (static_cast<double>(length) * dt + 1e-9 < needed)
      throw ValidationError("synth: record length does not cover observation + gap + target");
    if (baseline - baseline_spread < threshold + 10.0)
      throw ValidationError("synth: baseline - spread must sit at least 10 units above the threshold");
  }
}

SynthSpec SynthSpec::scaled_to(std::size_t n_subjects) const {
  SynthSpec s = *this;
  if (subjects == 0) {
    s.subjects = n_subjects;
    s.records = n_subjects;
    s.positive_records = n_subjects / 2;
    return s;
  }
  const double ratio = static_cast<double>(n_subjects) / static_cast<double>(subjects);
  s.subjects = n_subjects;
  s.records = std::max(n_subjects, static_cast<std::size_t>(std::llround(static_cast<double>(records) * ratio)));
  s.positive_records =
      std::min(s.records, static_cast<std::size_t>(std::llround(static_cast<double>(positive_records) * ratio)));
  return s;
}

namespace {

std::string subject_name(std::size_t i, std::size_t count) {
  std::string digits = std::to_string(i + 1);
  const std::size_t width = std::max<std::size_t>(3, std::to_string(count).size());
  return "s" + std::string(width - std::min(width, digits.size()), '0') + digits;
}

}  // namespace

std::vector<Record> synthesize_corpus(const SynthSpec& spec, std::uint64_t seed) {
  spec.validate();
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> order(spec.records);
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<bool> positive(spec.records, false);
  for (std::size_t i = 0; i < spec.positive_records; ++i) positive[order[i]] = true;

  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  auto noise = [&] { return spec.noise_std * std::clamp(gauss(rng), -3.0, 3.0); };

  std::vector<Record> out;
  out.reserve(spec.records);
  for (std::size_t i = 0; i < spec.records; ++i) {
    const std::size_t subject = i % spec.subjects;
    const int record_id = static_cast<int>(i / spec.subjects);
    const double base = spec.baseline + spec.baseline_spread * unit(rng);
    std::vector<double> v(spec.length);

    if (spec.task == TaskKind::Prediction) {
      const double onset = spec.window.observation_s + spec.window.gap_s;
      const double floor_level = spec.threshold - (4.0 + 3.0 * (unit(rng) + 1.0));
      for (std::size_t k = 0; k < spec.length; ++k) {
        const double t = static_cast<double>(k) * spec.dt;
        if (positive[i]) {
          if (t + 1e-9 < onset) {
            v[k] = base + (floor_level - base) * (t / onset) + noise();
          } else {
            v[k] = std::min(floor_level + noise(), spec.threshold - 1.0);
          }
        } else {
          v[k] = std::max(base + noise(), spec.threshold + 2.0);
        }
      }
    } else {
      const double total = static_cast<double>(spec.length) * spec.dt;
      const double phase = std::numbers::pi * (unit(rng) + 1.0);
      for (std::size_t k = 0; k < spec.length; ++k) {
        const double u = static_cast<double>(k) * spec.dt / total;
        v[k] = base + noise();
        if (positive[i])
          v[k] += spec.drift * u + 0.3 * spec.drift * std::sin(4.0 * std::numbers::pi * u + phase);
      }
    }

    Record r{subject_name(subject, spec.subjects), record_id, std::nullopt,
             TimeSeries(std::move(v), spec.dt, spec.unit, subject_name(subject, spec.subjects), 0.0)};
    if (spec.task == TaskKind::Detection) r.label = positive[i] ? 1 : 0;
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace vitalspec
