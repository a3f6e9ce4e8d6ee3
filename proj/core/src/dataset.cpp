#include "vitalspec/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <optional>
#include <set>
#include <tuple>

#include "vitalspec/error.hpp"
#include "vitalspec/parallel.hpp"
#include "vitalspec/protocol.hpp"

namespace vitalspec {
namespace {

// Index of the first sample at or after time t (relative to series start).
std::size_t first_index_at(double t, double dt) {
  return static_cast<std::size_t>(std::max(0.0, std::ceil(t / dt - 1e-9)));
}

TimeSeries slice(const TimeSeries& ts, std::size_t begin, std::size_t end) {
  std::vector<double> v(ts.values().begin() + static_cast<std::ptrdiff_t>(begin),
                        ts.values().begin() + static_cast<std::ptrdiff_t>(end));
  return TimeSeries(std::move(v), ts.dt(), ts.unit(), ts.subject_id(),
                    ts.start_time() + static_cast<double>(begin) * ts.dt());
}

}  // namespace

void WindowSpec::validate() const {
  if (!(observation_s > 0.0) || !(gap_s > 0.0) || !(target_s > 0.0))
    throw ValidationError("window durations must all be strictly positive");
}

void EpisodeRule::validate() const {
  if (!std::isfinite(threshold)) throw ValidationError("episode threshold must be finite");
  if (!(min_duration_s >= 0.0)) throw ValidationError("episode min_duration_s must be >= 0");
}

int label_target(const TimeSeries& target_window, const EpisodeRule& rule) {
  rule.validate();
  if (rule.min_duration_s > 0.0 && target_window.duration() + 1e-9 < rule.min_duration_s)
    throw ValidationError("target window (" + std::to_string(target_window.duration()) +
                          " s) is shorter than the episode minimum duration (" +
                          std::to_string(rule.min_duration_s) + " s)");
  std::size_t run = 0;
  for (double v : target_window.values()) {
    run = v < rule.threshold ? run + 1 : 0;
    if (run > 0 && static_cast<double>(run) * target_window.dt() + 1e-9 >= rule.min_duration_s) return 1;
  }
  return 0;
}

WindowSplit split_windows(const TimeSeries& ts, const WindowSpec& spec) {
  spec.validate();
  const double needed = spec.observation_s + spec.gap_s + spec.target_s;
  if (ts.duration() + 1e-9 * needed < needed)
    throw ValidationError("series spans " + std::to_string(ts.duration()) + " s but the windows require " +
                          std::to_string(needed) + " s");
  const double dt = ts.dt();
  const std::size_t obs_end = first_index_at(spec.observation_s, dt);
  const std::size_t target_begin = first_index_at(spec.observation_s + spec.gap_s, dt);
  const std::size_t target_end = std::min(ts.size(), first_index_at(needed, dt));
  if (obs_end == 0) throw ValidationError("observation window holds no samples");
  if (target_end <= target_begin) throw ValidationError("target window holds no samples");
  return {slice(ts, 0, obs_end), slice(ts, target_begin, target_end)};
}

std::vector<TimeSeries> augment(const TimeSeries& ts, const AugmentConfig& cfg) {
  if (!(cfg.noise_std >= 0.0)) throw ValidationError("noise_std must be >= 0");
  if (cfg.copies < 0) throw ValidationError("copies must be >= 0");
  std::vector<TimeSeries> out;
  out.reserve(static_cast<std::size_t>(cfg.copies));
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> noise(0.0, cfg.noise_std > 0.0 ? cfg.noise_std : 1.0);
  for (int c = 0; c < cfg.copies; ++c) {
    std::vector<double> v(ts.values().begin(), ts.values().end());
    for (auto& x : v) x += cfg.noise_mean + (cfg.noise_std > 0.0 ? noise(rng) : 0.0);
    out.push_back(ts.with_values(std::move(v)));
  }
  return out;
}

std::size_t distinct_subject_count(const std::vector<std::string>& sample_subjects) {
  return std::set<std::string>(sample_subjects.begin(), sample_subjects.end()).size();
}

std::vector<Fold> subject_kfold(const std::vector<std::string>& sample_subjects, std::size_t k,
                                std::uint64_t seed) {
  if (k < 2) throw ValidationError("subject_kfold: k must be at least 2");
  std::set<std::string> unique(sample_subjects.begin(), sample_subjects.end());
  if (unique.size() < k)
    throw ValidationError("subject_kfold: " + std::to_string(unique.size()) + " distinct subjects, fewer than k = " +
                          std::to_string(k));
  std::vector<std::string> order(unique.begin(), unique.end());
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  std::map<std::string, std::size_t> fold_of;
  for (std::size_t i = 0; i < order.size(); ++i) fold_of[order[i]] = i % k;

  std::vector<Fold> folds(k);
  for (const auto& [subject, f] : fold_of) {
    for (std::size_t g = 0; g < k; ++g) {
      (g == f ? folds[g].test_subjects : folds[g].train_subjects).push_back(subject);
    }
  }
  for (std::size_t i = 0; i < sample_subjects.size(); ++i) {
    const std::size_t f = fold_of.at(sample_subjects[i]);
    for (std::size_t g = 0; g < k; ++g) (g == f ? folds[g].test_indices : folds[g].train_indices).push_back(i);
  }
  return folds;
}

std::vector<Fold> subject_kfold(const std::vector<LabeledSample>& samples, std::size_t k, std::uint64_t seed) {
  std::vector<std::string> subjects;
  subjects.reserve(samples.size());
  for (const auto& s : samples) subjects.push_back(s.subject_id);
  return subject_kfold(subjects, k, seed);
}

SpectroImage encode_observation(const TimeSeries& observation, const PipelineConfig& cfg, std::string provenance) {
  const auto message = normalize(observation, cfg.normalization).series;
  const auto wave = fm_modulate(message, cfg.fm);
  return render_image(stft(wave, cfg.stft), std::move(provenance));
}

std::uint64_t record_seed(std::uint64_t global_seed, const std::string& subject_id, int record_id) {
  std::uint64_t x = global_seed;
  x = splitmix64(x ^ fnv1a64(subject_id));
  x = splitmix64(x ^ static_cast<std::uint64_t>(static_cast<std::int64_t>(record_id)));
  return x;
}

namespace {

struct Prepared {
  TimeSeries observation;
  int label;
};

Prepared prepare(const Record& r, const PipelineConfig& cfg) {
  if (cfg.task == TaskKind::Prediction) {
    auto split = split_windows(r.series, cfg.window);
    const int label = label_target(split.target, cfg.rule);
    return {std::move(split.observation), label};
  }
  if (!r.label) throw ValidationError("detection protocol needs a label column value for every record");
  return {r.series, *r.label};
}

std::string provenance_of(const Record& r, int aug) {
  return r.subject_id + "/" + std::to_string(r.record_id) + "/" + std::to_string(aug);
}

std::vector<std::size_t> canonical_order(const std::vector<Record>& records) {
  std::vector<std::size_t> order(records.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::tie(records[a].subject_id, records[a].record_id) <
           std::tie(records[b].subject_id, records[b].record_id);
  });
  return order;
}

}  // namespace

Dataset build_dataset(const std::vector<Record>& records, const PipelineConfig& cfg) {
  cfg.fm.validate();
  const auto order = canonical_order(records);
  std::vector<std::vector<LabeledSample>> per_record(records.size());
  std::vector<std::optional<std::string>> failures(records.size());

  parallel_for(order.size(), [&](std::size_t slot) {
    const Record& r = records[order[slot]];
    try {
      auto [observation, label] = prepare(r, cfg);
      const int copies = cfg.copies_per_class[static_cast<std::size_t>(label)];
      auto noisy = augment(observation, {cfg.noise_mean, cfg.noise_std, copies,
                                         record_seed(cfg.seed, r.subject_id, r.record_id)});
      auto& out = per_record[slot];
      out.reserve(noisy.size() + 1);
      auto emit = [&](const TimeSeries& obs, int aug) {
        out.push_back(LabeledSample{encode_observation(obs, cfg, provenance_of(r, aug)), label, r.subject_id,
                                    r.record_id, aug});
      };
      emit(observation, 0);
      for (std::size_t c = 0; c < noisy.size(); ++c) emit(noisy[c], static_cast<int>(c) + 1);
    } catch (const std::exception& e) {
      per_record[slot].clear();
      failures[slot] = e.what();
    }
  });

  Dataset ds;
  for (std::size_t slot = 0; slot < order.size(); ++slot) {
    if (failures[slot]) {
      const Record& r = records[order[slot]];
      ds.errors.push_back({r.subject_id, r.record_id, *failures[slot]});
      continue;
    }
    for (auto& s : per_record[slot]) ds.samples.push_back(std::move(s));
  }
  return ds;
}

LabelCounts count_dataset(const std::vector<Record>& records, const PipelineConfig& cfg) {
  LabelCounts c;
  for (const auto& r : records) {
    try {
      const int label = prepare(r, cfg).label;
      c.originals[static_cast<std::size_t>(label)] += 1;
      c.total += 1 + static_cast<std::size_t>(cfg.copies_per_class[static_cast<std::size_t>(label)]);
    } catch (const std::exception&) {
    }
  }
  return c;
}

}  // namespace vitalspec
