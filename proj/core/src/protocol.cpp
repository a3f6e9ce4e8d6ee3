#include "vitalspec/protocol.hpp"

#include <algorithm>
#include <cstdio>

#include "vitalspec/error.hpp"

namespace vitalspec {

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t stage_seed(std::uint64_t seed, std::string_view stage) { return splitmix64(seed ^ fnv1a64(stage)); }

ProtocolPreset with_seed(ProtocolPreset p, std::uint64_t seed) {
  p.seed = seed;
  p.pipeline.seed = stage_seed(seed, "augment");
  p.training.optimizer.seed = stage_seed(seed, "train");
  p.cv_seed = stage_seed(seed, "folds");
  return p;
}

std::vector<std::string> preset_names() { return {"mimic_like", "pic_like", "pain_like", "stress_like"}; }

ProtocolPreset preset(const std::string& name) {
  ProtocolPreset p;
  p.name = name;
  p.pipeline.fm = FmConfig{};
  p.pipeline.stft = default_stft_config(p.pipeline.fm);
  p.pipeline.normalization = NormalizationSpec::per_sample();
  p.pipeline.noise_mean = 0.0;

  auto& tr = p.training;
  tr.channels = CnnChannels{};
  tr.optimizer.decay_rho = 0.9;
  tr.optimizer.epsilon = 1e-8;
  tr.optimizer.batch_size = 32;

  if (name == "mimic_like") {
    // Hourly mean arterial pressure: 2 h observation, 1 h gap, 2 h target;
    // episode = MAP < 60 for at least 30 min.
    p.pipeline.task = TaskKind::Prediction;
    p.pipeline.window = {7200.0, 3600.0, 7200.0};
    p.pipeline.rule = {60.0, 1800.0, Comparator::Below};
    p.pipeline.noise_std = 3.0;
    p.pipeline.copies_per_class = {14, 14};
    tr.optimizer.learning_rate = 1e-4;
    tr.optimizer.epochs = 12;
    tr.snapshot_every = 2;
    tr.vote_epochs = {8, 10, 12};
    p.cv = CvScheme::KFold;
    p.folds = 10;
    p.synth = {TaskKind::Prediction, 142, 142, 72, 3600.0, 5, p.pipeline.window, 60.0, 80.0, 8.0, 2.0, 0.0, "mmHg"};
  } else if (name == "pic_like") {
    // Systolic pressure every 5 min: 20 min observation, 5 min gap, 20 min target;
    // any reading below 60 is an episode.
    p.pipeline.task = TaskKind::Prediction;
    p.pipeline.window = {1200.0, 300.0, 1200.0};
    p.pipeline.rule = {60.0, 0.0, Comparator::Below};
    p.pipeline.noise_std = 3.0;
    p.pipeline.copies_per_class = {7, 9};
    tr.optimizer.learning_rate = 1e-5;
    tr.optimizer.epochs = 24;
    tr.snapshot_every = 3;
    tr.vote_epochs = {18, 21, 24};
    p.cv = CvScheme::KFold;
    p.folds = 10;
    p.synth = {TaskKind::Prediction, 300, 573, 255, 300.0, 10, p.pipeline.window, 60.0, 80.0, 8.0, 2.0, 0.0, "mmHg"};
  } else if (name == "pain_like") {
    // 10 s heart-rate clips at 1 Hz, label 1 = pain.
    p.pipeline.task = TaskKind::Detection;
    p.pipeline.noise_std = 3.0;
    p.pipeline.copies_per_class = {9, 26};
    tr.optimizer.learning_rate = 1e-4;
    tr.optimizer.epochs = 45;
    tr.snapshot_every = 3;
    tr.vote_epochs = {39, 42, 45};
    p.cv = CvScheme::LeaveOneSubjectOut;
    p.synth = {TaskKind::Detection, 12, 78, 21, 1.0, 10, {}, 60.0, 140.0, 10.0, 2.0, 12.0, "bpm"};
  } else if (name == "stress_like") {
    // 5 min heart-rate segments at 1 Hz, label 1 = stress.
    p.pipeline.task = TaskKind::Detection;
    p.pipeline.noise_std = 1.0;
    p.pipeline.copies_per_class = {28, 28};
    tr.optimizer.learning_rate = 1e-5;
    tr.optimizer.epochs = 30;
    tr.snapshot_every = 3;
    tr.vote_epochs = {24, 27, 30};
    p.cv = CvScheme::LeaveOneSubjectOut;
    p.synth = {TaskKind::Detection, 20, 120, 60, 1.0, 300, {}, 60.0, 75.0, 8.0, 1.5, 15.0, "bpm"};
  } else {
    std::string known;
    for (const auto& n : preset_names()) known += (known.empty() ? "" : ", ") + n;
    throw ValidationError("unknown preset '" + name + "' (known: " + known + ")");
  }
  return with_seed(std::move(p), 0);
}

namespace {

using nlohmann::json;

const char* to_string(TaskKind t) { return t == TaskKind::Prediction ? "prediction" : "detection"; }
TaskKind task_from(const std::string& s) {
  if (s == "prediction") return TaskKind::Prediction;
  if (s == "detection") return TaskKind::Detection;
  throw ValidationError("unknown task '" + s + "'");
}
const char* to_string(NormalizationMode m) { return m == NormalizationMode::PerSample ? "per_sample" : "fixed"; }
NormalizationMode norm_from(const std::string& s) {
  if (s == "per_sample") return NormalizationMode::PerSample;
  if (s == "fixed") return NormalizationMode::Fixed;
  throw ValidationError("unknown normalization mode '" + s + "'");
}
const char* to_string(WindowKind w) { return w == WindowKind::Hann ? "hann" : "rect"; }
WindowKind window_from(const std::string& s) {
  if (s == "hann") return WindowKind::Hann;
  if (s == "rect") return WindowKind::Rect;
  throw ValidationError("unknown window '" + s + "'");
}
const char* to_string(CvScheme c) { return c == CvScheme::KFold ? "kfold" : "leave_one_subject_out"; }
CvScheme cv_from(const std::string& s) {
  if (s == "kfold") return CvScheme::KFold;
  if (s == "leave_one_subject_out") return CvScheme::LeaveOneSubjectOut;
  throw ValidationError("unknown cv scheme '" + s + "'");
}

json window_json(const WindowSpec& w) {
  return {{"observation_s", w.observation_s}, {"gap_s", w.gap_s}, {"target_s", w.target_s}};
}
WindowSpec window_spec_from(const json& j) {
  return {j.at("observation_s").get<double>(), j.at("gap_s").get<double>(), j.at("target_s").get<double>()};
}

json pipeline_json(const PipelineConfig& c) {
  json stft{{"n_fft", c.stft.n_fft}, {"hop", c.stft.hop}, {"window", to_string(c.stft.window)}};
  stft["band"] = c.stft.band ? json::array({c.stft.band->lo, c.stft.band->hi}) : json(nullptr);
  return {{"task", to_string(c.task)},
          {"window", window_json(c.window)},
          {"rule", {{"threshold", c.rule.threshold}, {"min_duration_s", c.rule.min_duration_s}, {"comparator", "below"}}},
          {"normalization",
           {{"mode", to_string(c.normalization.mode)}, {"lo", c.normalization.lo}, {"hi", c.normalization.hi}}},
          {"noise_mean", c.noise_mean},
          {"noise_std", c.noise_std},
          {"copies_per_class", c.copies_per_class},
          {"fm",
           {{"fc", c.fm.fc}, {"delta_f", c.fm.delta_f}, {"fs", c.fm.fs}, {"duration", c.fm.duration}, {"ac", c.fm.ac}}},
          {"stft", stft},
          {"seed", c.seed}};
}

PipelineConfig pipeline_from(const json& j) {
  PipelineConfig c;
  c.task = task_from(j.at("task").get<std::string>());
  c.window = window_spec_from(j.at("window"));
  const auto& rule = j.at("rule");
  if (rule.value("comparator", "below") != "below") throw ValidationError("only the 'below' comparator exists");
  c.rule = {rule.at("threshold").get<double>(), rule.at("min_duration_s").get<double>(), Comparator::Below};
  const auto& norm = j.at("normalization");
  c.normalization = {norm.at("lo").get<double>(), norm.at("hi").get<double>(),
                     norm_from(norm.at("mode").get<std::string>())};
  c.noise_mean = j.at("noise_mean").get<double>();
  c.noise_std = j.at("noise_std").get<double>();
  c.copies_per_class = j.at("copies_per_class").get<std::array<int, 2>>();
  const auto& fm = j.at("fm");
  c.fm = {fm.at("fc").get<double>(), fm.at("delta_f").get<double>(), fm.at("fs").get<double>(),
          fm.at("duration").get<double>(), fm.at("ac").get<double>()};
  const auto& st = j.at("stft");
  c.stft.n_fft = st.at("n_fft").get<std::size_t>();
  c.stft.hop = st.at("hop").get<std::size_t>();
  c.stft.window = window_from(st.at("window").get<std::string>());
  if (st.contains("band") && !st.at("band").is_null()) {
    const auto b = st.at("band").get<std::array<double, 2>>();
    c.stft.band = FrequencyBand{b[0], b[1]};
  } else {
    c.stft.band.reset();
  }
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

json training_json(const TrainConfig& t) {
  return {{"channels", {t.channels.c1, t.channels.c2, t.channels.c3}},
          {"learning_rate", t.optimizer.learning_rate},
          {"decay_rho", t.optimizer.decay_rho},
          {"epsilon", t.optimizer.epsilon},
          {"batch_size", t.optimizer.batch_size},
          {"epochs", t.optimizer.epochs},
          {"seed", t.optimizer.seed},
          {"snapshot_every", t.snapshot_every},
          {"vote_epochs", t.vote_epochs}};
}

TrainConfig training_from(const json& j) {
  TrainConfig t;
  const auto ch = j.at("channels").get<std::array<std::size_t, 3>>();
  t.channels = {ch[0], ch[1], ch[2]};
  t.optimizer.learning_rate = j.at("learning_rate").get<double>();
  t.optimizer.decay_rho = j.at("decay_rho").get<double>();
  t.optimizer.epsilon = j.at("epsilon").get<double>();
  t.optimizer.batch_size = j.at("batch_size").get<std::size_t>();
  t.optimizer.epochs = j.at("epochs").get<int>();
  t.optimizer.seed = j.at("seed").get<std::uint64_t>();
  t.snapshot_every = j.at("snapshot_every").get<int>();
  t.vote_epochs = j.at("vote_epochs").get<std::vector<int>>();
  return t;
}

json synth_json(const SynthSpec& s) {
  return {{"task", to_string(s.task)},
          {"subjects", s.subjects},
          {"records", s.records},
          {"positive_records", s.positive_records},
          {"dt", s.dt},
          {"length", s.length},
          {"window", window_json(s.window)},
          {"threshold", s.threshold},
          {"baseline", s.baseline},
          {"baseline_spread", s.baseline_spread},
          {"noise_std", s.noise_std},
          {"drift", s.drift},
          {"unit", s.unit}};
}

SynthSpec synth_from(const json& j) {
  SynthSpec s;
  s.task = task_from(j.at("task").get<std::string>());
  s.subjects = j.at("subjects").get<std::size_t>();
  s.records = j.at("records").get<std::size_t>();
  s.positive_records = j.at("positive_records").get<std::size_t>();
  s.dt = j.at("dt").get<double>();
  s.length = j.at("length").get<std::size_t>();
  s.window = window_spec_from(j.at("window"));
  s.threshold = j.at("threshold").get<double>();
  s.baseline = j.at("baseline").get<double>();
  s.baseline_spread = j.at("baseline_spread").get<double>();
  s.noise_std = j.at("noise_std").get<double>();
  s.drift = j.at("drift").get<double>();
  s.unit = j.at("unit").get<std::string>();
  return s;
}

}  // namespace

nlohmann::json to_json(const ProtocolPreset& p) {
  return {{"name", p.name},
          {"seed", p.seed},
          {"cv", {{"scheme", to_string(p.cv)}, {"folds", p.folds}, {"seed", p.cv_seed}}},
          {"pipeline", pipeline_json(p.pipeline)},
          {"training", training_json(p.training)},
          {"synth", synth_json(p.synth)}};
}

ProtocolPreset preset_from_json(const nlohmann::json& j) {
  try {
    ProtocolPreset p;
    p.name = j.at("name").get<std::string>();
    p.seed = j.at("seed").get<std::uint64_t>();
    const auto& cv = j.at("cv");
    p.cv = cv_from(cv.at("scheme").get<std::string>());
    p.folds = cv.at("folds").get<std::size_t>();
    p.cv_seed = cv.at("seed").get<std::uint64_t>();
    p.pipeline = pipeline_from(j.at("pipeline"));
    p.training = training_from(j.at("training"));
    p.synth = synth_from(j.at("synth"));
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("invalid protocol config: ") + e.what());
  }
}

ProtocolPreset apply_overrides(const ProtocolPreset& base, const nlohmann::json& overrides) {
  auto j = to_json(base);
  j.merge_patch(overrides);
  return preset_from_json(j);
}

std::string protocol_hash(const ProtocolPreset& p) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a64(pipeline_json(p.pipeline).dump())));
  return buf;
}

std::size_t fold_count(const ProtocolPreset& p, std::size_t n_subjects) {
  return p.cv == CvScheme::LeaveOneSubjectOut ? n_subjects : p.folds;
}

}  // namespace vitalspec
