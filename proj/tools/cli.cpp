#include "cli.hpp"

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "vitalspec/cross_validation.hpp"
#include "vitalspec/csv.hpp"
#include "vitalspec/dataset.hpp"
#include "vitalspec/demod.hpp"
#include "vitalspec/error.hpp"
#include "vitalspec/protocol.hpp"
#include "vitalspec/synth.hpp"

namespace vitalspec::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitVerification = 1;
constexpr int kExitInput = 2;

struct Context {
  std::uint64_t seed = 0;
  bool seed_given = false;
  std::string config_path;
  std::string out = ".";
  bool out_given = false;
  std::string preset_name;
  json patch = json::object();  // flag overrides, same shape as the preset JSON
};

void set_patch(Context& ctx, const std::string& pointer, json value) {
  ctx.patch[json::json_pointer(pointer)] = std::move(value);
}

template <typename T>
void patch_option(CLI::App* sub, Context& ctx, const std::string& name, const std::string& pointer,
                  const std::string& help) {
  sub->add_option_function<T>(name, [&ctx, pointer](const T& v) { set_patch(ctx, pointer, v); }, help);
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

bool has_pointer(const json& j, const std::string& pointer) { return j.contains(json::json_pointer(pointer)); }

// Preset, then --config file, then flags, then --seed.
ProtocolPreset resolve(const Context& ctx) {
  json config = json::object();
  if (!ctx.config_path.empty()) {
    config = read_json_file(ctx.config_path);
    if (!config.is_object()) throw ValidationError(ctx.config_path + ": config must be a JSON object");
  }
  const std::string name =
      !ctx.preset_name.empty() ? ctx.preset_name : config.value("name", std::string("mimic_like"));
  const auto base = preset(name);
  auto p = apply_overrides(apply_overrides(base, config), ctx.patch);
  if (ctx.seed_given) p = with_seed(std::move(p), ctx.seed);

  const bool band_set = has_pointer(config, "/pipeline/stft/band") || has_pointer(ctx.patch, "/pipeline/stft/band");
  const auto& fm = p.pipeline.fm;
  if (!band_set && (fm.fc != base.pipeline.fm.fc || fm.delta_f != base.pipeline.fm.delta_f))
    p.pipeline.stft.band = default_stft_config(fm).band;
  return p;
}

std::string safe_name(const std::string& s) {
  std::string out = s;
  for (auto& c : out)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.')) c = '_';
  return out.empty() ? "unnamed" : out;
}

std::string record_stem(const Record& r) { return safe_name(r.subject_id) + "_r" + std::to_string(r.record_id); }

fs::path output_dir(const Context& ctx) {
  fs::path dir(ctx.out);
  fs::create_directories(dir);
  return dir;
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

json stft_json(const StftConfig& c) {
  json j{{"n_fft", c.n_fft}, {"hop", c.hop}, {"window", c.window == WindowKind::Hann ? "hann" : "rect"}};
  j["band"] = c.band ? json::array({c.band->lo, c.band->hi}) : json(nullptr);
  return j;
}

// ---- modulate -------------------------------------------------------------

void add_fm_flags(CLI::App* sub, Context& ctx) {
  patch_option<double>(sub, ctx, "--fc", "/pipeline/fm/fc", "Carrier frequency (Hz)");
  patch_option<double>(sub, ctx, "--delta-f", "/pipeline/fm/delta_f", "Peak frequency deviation (Hz)");
  patch_option<double>(sub, ctx, "--fs", "/pipeline/fm/fs", "Waveform sampling rate (Hz)");
  patch_option<double>(sub, ctx, "--duration", "/pipeline/fm/duration", "Compressed message duration (s)");
  patch_option<double>(sub, ctx, "--ac", "/pipeline/fm/ac", "Carrier amplitude");
  sub->add_option_function<std::string>(
         "--norm", [&ctx](const std::string& m) { set_patch(ctx, "/pipeline/normalization/mode", m); },
         "Message normalization: per_sample or fixed")
      ->check(CLI::IsMember({"per_sample", "fixed"}));
  patch_option<double>(sub, ctx, "--norm-lo", "/pipeline/normalization/lo", "Lower bound for fixed normalization");
  patch_option<double>(sub, ctx, "--norm-hi", "/pipeline/normalization/hi", "Upper bound for fixed normalization");
}

void add_stft_flags(CLI::App* sub, Context& ctx) {
  patch_option<std::size_t>(sub, ctx, "--n-fft", "/pipeline/stft/n_fft", "STFT frame length (power of two)");
  patch_option<std::size_t>(sub, ctx, "--hop", "/pipeline/stft/hop", "STFT hop in samples");
  sub->add_option_function<std::string>(
         "--window", [&ctx](const std::string& w) { set_patch(ctx, "/pipeline/stft/window", w); }, "hann or rect")
      ->check(CLI::IsMember({"hann", "rect"}));
  sub->add_option_function<std::vector<double>>(
         "--band", [&ctx](const std::vector<double>& b) { set_patch(ctx, "/pipeline/stft/band", b); },
         "Frequency crop lo,hi in Hz")
      ->expected(2)
      ->delimiter(',');
  sub->add_flag_callback("--no-band", [&ctx] { set_patch(ctx, "/pipeline/stft/band", nullptr); },
                         "Keep the full 0..fs/2 range");
}

int cmd_modulate(const Context& ctx, const std::string& input) {
  const auto p = resolve(ctx);
  const auto& fm = p.pipeline.fm;
  fm.validate();
  const auto records = read_records_csv(input);
  const auto dir = output_dir(ctx);
  const auto config = to_json(p);
  for (const auto& r : records) {
    const auto norm = normalize(r.series, p.pipeline.normalization);
    const auto wave = fm_modulate(norm.series, fm);
    const auto stem = (dir / record_stem(r)).string();
    const json extra{{"subject_id", r.subject_id}, {"record_id", r.record_id}, {"duration", fm.duration},
                     {"ac", fm.ac}, {"clamped", norm.clamped}, {"config", config}};
    write_waveform_dump(stem, wave, fm, extra.dump());

    const auto m = norm.series.values();
    json t = json::array(), hz = json::array();
    for (std::size_t i = 0; i < m.size(); ++i) {
      t.push_back(m.size() > 1 ? fm.duration * static_cast<double>(i) / static_cast<double>(m.size() - 1) : 0.0);
      hz.push_back(fm.fc + fm.delta_f * m[i]);
    }
    write_json(stem + "_ifreq.json", {{"subject_id", r.subject_id},
                                      {"record_id", r.record_id},
                                      {"fc", fm.fc},
                                      {"delta_f", fm.delta_f},
                                      {"t_s", t},
                                      {"hz", hz}});
    std::cout << "wrote " << stem << ".f32 (" << wave.samples.size() << " samples)\n";
  }
  if (records.empty()) std::cout << "no records in " << input << '\n';
  return kExitOk;
}

// ---- spectrogram ----------------------------------------------------------

struct SpectrogramArgs {
  std::string input;
  std::string waveform;
  bool raw = false;
};

void emit_spectrogram(const fs::path& stem, const Spectrogram& s, const StftConfig& cfg, const std::string& mode,
                      const std::string& provenance, const json& config) {
  write_png(stem.string() + ".png", render_image(s, provenance));
  write_json(stem.string() + ".json", {{"provenance", provenance},
                                       {"mode", mode},
                                       {"image_size", kImageSize},
                                       {"n_freq", s.n_freq()},
                                       {"n_frames", s.n_frames()},
                                       {"freq_axis_hz", s.freq_axis},
                                       {"time_axis_s", s.time_axis},
                                       {"stft", stft_json(cfg)},
                                       {"config", config}});
  std::cout << "wrote " << stem.string() << ".png\n";
}

StftConfig raw_config(const Context& ctx, const Record& r) {
  auto cfg = raw_stft_config(r.series.size());
  const auto& patch = ctx.patch;
  if (has_pointer(patch, "/pipeline/stft/n_fft")) {
    cfg.n_fft = patch.at(json::json_pointer("/pipeline/stft/n_fft")).get<std::size_t>();
    cfg.hop = std::max<std::size_t>(1, cfg.n_fft / 8);
  }
  if (has_pointer(patch, "/pipeline/stft/hop")) cfg.hop = patch.at(json::json_pointer("/pipeline/stft/hop")).get<std::size_t>();
  if (has_pointer(patch, "/pipeline/stft/window") &&
      patch.at(json::json_pointer("/pipeline/stft/window")).get<std::string>() == "rect")
    cfg.window = WindowKind::Rect;
  if (r.series.size() < cfg.n_fft)
    throw ValidationError("--raw: record " + r.subject_id + "/" + std::to_string(r.record_id) + " has " +
                          std::to_string(r.series.size()) + " samples but n_fft = " + std::to_string(cfg.n_fft) +
                          "; the series must be at least n_fft samples long (lower --n-fft)");
  return cfg;
}

int cmd_spectrogram(const Context& ctx, const SpectrogramArgs& args) {
  if (args.input.empty() == args.waveform.empty())
    throw ValidationError("spectrogram: give exactly one of --input (CSV) or --waveform (dump stem)");
  if (args.raw && args.input.empty()) throw ValidationError("--raw needs --input (CSV)");
  const auto p = resolve(ctx);
  const auto config = to_json(p);
  const auto dir = output_dir(ctx);

  if (!args.waveform.empty()) {
    const auto wave = read_waveform_dump(args.waveform);
    const auto name = fs::path(args.waveform).filename().string();
    emit_spectrogram(dir / name, stft(wave, p.pipeline.stft), p.pipeline.stft, "waveform", name, config);
    return kExitOk;
  }
  const auto records = read_records_csv(args.input);
  for (const auto& r : records) {
    const auto stem = record_stem(r);
    if (args.raw) {
      const auto cfg = raw_config(ctx, r);
      const auto v = r.series.values();
      const Waveform wave{{v.begin(), v.end()}, 1.0 / r.series.dt()};
      emit_spectrogram(dir / (stem + "_raw"), stft(wave, cfg), cfg, "raw", stem, config);
    } else {
      const auto message = normalize(r.series, p.pipeline.normalization).series;
      const auto s = stft(fm_modulate(message, p.pipeline.fm), p.pipeline.stft);
      emit_spectrogram(dir / stem, s, p.pipeline.stft, "fm", stem, config);
    }
  }
  if (records.empty()) std::cout << "no records in " << args.input << '\n';
  return kExitOk;
}

// ---- roundtrip ------------------------------------------------------------

struct RoundtripArgs {
  bool list = false;
  std::vector<std::string> only;
};

int cmd_roundtrip(const Context& ctx, const RoundtripArgs& args) {
  const auto fixtures = roundtrip_fixtures(ctx.seed_given ? ctx.seed : 7);
  if (args.list) {
    for (const auto& f : fixtures) std::cout << f.name << '\n';
    return kExitOk;
  }
  for (const auto& name : args.only)
    if (std::none_of(fixtures.begin(), fixtures.end(), [&](const auto& f) { return f.name == name; }))
      throw ValidationError("unknown fixture '" + name + "' (see --list-fixtures)");

  const auto p = resolve(ctx);
  p.pipeline.fm.validate();
  p.pipeline.stft.validate(p.pipeline.fm.fs);
  const RoundtripThresholds thresholds;
  json rows = json::array();
  std::vector<std::string> failed;
  for (const auto& f : fixtures) {
    if (!args.only.empty() && std::find(args.only.begin(), args.only.end(), f.name) == args.only.end()) continue;
    const auto m = roundtrip_report(f.message, p.pipeline.fm, p.pipeline.stft);
    auto row = json::parse(to_json(m));
    row["name"] = f.name;
    row["pass"] = passes(m, thresholds);
    if (!passes(m, thresholds)) failed.push_back(f.name);
    rows.push_back(std::move(row));
  }
  const json report{{"fixtures", rows},
                    {"thresholds", {{"min_pearson_r", thresholds.min_pearson_r}, {"max_rmse", thresholds.max_rmse}}},
                    {"all_pass", failed.empty()},
                    {"fm", to_json(p)["pipeline"]["fm"]},
                    {"stft", stft_json(p.pipeline.stft)}};
  std::cout << report.dump(2) << '\n';
  if (ctx.out_given) write_json(output_dir(ctx) / "roundtrip.json", report);
  if (!failed.empty()) {
    std::cerr << "roundtrip FAILED for:";
    for (const auto& n : failed) std::cerr << ' ' << n;
    std::cerr << " (need pearson_r >= " << thresholds.min_pearson_r << " and rmse <= " << thresholds.max_rmse << ")\n";
    return kExitVerification;
  }
  return kExitOk;
}

// ---- synth ----------------------------------------------------------------

int cmd_synth(const Context& ctx, std::optional<std::size_t> subjects) {
  const auto p = resolve(ctx);
  const auto spec = subjects ? p.synth.scaled_to(*subjects) : p.synth;
  const auto records = synthesize_corpus(spec, p.seed);
  const auto dir = output_dir(ctx);
  {
    std::ofstream out(dir / "corpus.csv");
    if (!out) throw std::runtime_error("cannot write " + (dir / "corpus.csv").string());
    write_records_csv(out, records, spec.task == TaskKind::Detection);
  }
  const auto counts = count_dataset(records, p.pipeline);
  auto config = to_json(p);
  config["synth"]["subjects"] = spec.subjects;
  config["synth"]["records"] = spec.records;
  config["synth"]["positive_records"] = spec.positive_records;
  write_json(dir / "corpus.json", {{"records", records.size()},
                                   {"subjects", spec.subjects},
                                   {"originals", counts.originals},
                                   {"dataset_samples", counts.total},
                                   {"config", config}});
  std::cout << "wrote " << (dir / "corpus.csv").string() << " (" << records.size() << " records, " << counts.total
            << " samples after augmentation)\n";
  return kExitOk;
}

// ---- dataset --------------------------------------------------------------

std::string sample_stem(const LabeledSample& s) {
  return safe_name(s.subject_id) + "_r" + std::to_string(s.record_id) + "_a" + std::to_string(s.augmentation_index);
}

int cmd_dataset(const Context& ctx, const std::string& input) {
  const auto p = resolve(ctx);
  const auto records = read_records_csv(input);
  const auto ds = build_dataset(records, p.pipeline);
  const auto dir = output_dir(ctx);
  fs::create_directories(dir / "images");
  const auto hash = protocol_hash(p);

  std::ofstream manifest(dir / "manifest.jsonl");
  if (!manifest) throw std::runtime_error("cannot write " + (dir / "manifest.jsonl").string());
  std::array<std::size_t, 2> originals{0, 0};
  for (const auto& s : ds.samples) {
    const auto rel = fs::path("images") / (sample_stem(s) + ".png");
    write_png((dir / rel).string(), s.image);
    manifest << json{{"path", rel.generic_string()},
                     {"label", s.label},
                     {"subject_id", s.subject_id},
                     {"record_id", s.record_id},
                     {"augmentation_index", s.augmentation_index},
                     {"protocol_hash", hash}}
                    .dump()
             << '\n';
    if (s.augmentation_index == 0) ++originals[static_cast<std::size_t>(s.label)];
  }
  json errors = json::array();
  for (const auto& e : ds.errors) {
    std::cerr << "skipped " << e.subject_id << "/" << e.record_id << ": " << e.message << '\n';
    errors.push_back({{"subject_id", e.subject_id}, {"record_id", e.record_id}, {"message", e.message}});
  }
  write_json(dir / "dataset.json", {{"samples", ds.samples.size()},
                                    {"originals", originals},
                                    {"protocol_hash", hash},
                                    {"errors", errors},
                                    {"config", to_json(p)}});
  std::cout << "wrote " << ds.samples.size() << " samples to " << (dir / "manifest.jsonl").string() << '\n';
  if (ds.samples.empty() && !ds.errors.empty()) return kExitInput;
  return kExitOk;
}

// ---- train / evaluate -----------------------------------------------------

struct Manifest {
  std::vector<LabeledSample> samples;
  std::vector<std::string> hashes;
};

Manifest read_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open manifest " + path);
  const auto base = fs::path(path).parent_path();
  Manifest m;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = json::parse(line);
      LabeledSample s;
      s.label = j.at("label").get<int>();
      if (s.label != 0 && s.label != 1) throw ValidationError("label must be 0 or 1");
      s.subject_id = j.at("subject_id").get<std::string>();
      s.record_id = j.value("record_id", 0);
      s.augmentation_index = j.value("augmentation_index", 0);
      s.image = read_png((base / j.at("path").get<std::string>()).string());
      m.hashes.push_back(j.value("protocol_hash", std::string()));
      m.samples.push_back(std::move(s));
    } catch (const std::exception& e) {
      throw ValidationError(path + " line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (m.samples.empty()) throw ValidationError("manifest " + path + " lists no samples");
  return m;
}

void warn_on_hash_mismatch(const Manifest& m, const ProtocolPreset& p) {
  const auto expected = protocol_hash(p);
  const auto mismatched = std::count_if(m.hashes.begin(), m.hashes.end(),
                                        [&](const auto& h) { return !h.empty() && h != expected; });
  if (mismatched > 0)
    std::cerr << "warning: " << mismatched << " manifest entries were built with a different protocol (hash "
              << expected << " expected)\n";
}

void add_training_flags(CLI::App* sub, Context& ctx) {
  patch_option<int>(sub, ctx, "--epochs", "/training/epochs", "Training epochs");
  patch_option<double>(sub, ctx, "--lr", "/training/learning_rate", "RMSProp learning rate");
  patch_option<std::size_t>(sub, ctx, "--batch", "/training/batch_size", "Mini-batch size");
  patch_option<int>(sub, ctx, "--snapshot-every", "/training/snapshot_every", "Epochs between snapshots");
  sub->add_option_function<std::vector<int>>(
         "--vote", [&ctx](const std::vector<int>& v) { set_patch(ctx, "/training/vote_epochs", v); },
         "Comma-separated voting epochs (odd count)")
      ->delimiter(',');
  sub->add_option_function<std::vector<std::size_t>>(
         "--channels", [&ctx](const std::vector<std::size_t>& c) { set_patch(ctx, "/training/channels", c); },
         "Conv channel counts c1,c2,c3")
      ->expected(3)
      ->delimiter(',');
  sub->add_flag_callback("--paper-arch", [&ctx] { set_patch(ctx, "/training/channels", {128, 128, 64}); },
                         "Use the published 128,128,64 channel widths");
  patch_option<std::size_t>(sub, ctx, "--folds", "/cv/folds", "Folds for k-fold schemes");
}

int cmd_train(const Context& ctx, const std::string& manifest_path) {
  const auto p = resolve(ctx);
  p.training.validate();
  const auto manifest = read_manifest(manifest_path);
  warn_on_hash_mismatch(manifest, p);
  const auto& samples = manifest.samples;
  std::vector<std::string> ids;
  for (const auto& s : samples) ids.push_back(s.subject_id);
  const auto k = fold_count(p, distinct_subject_count(ids));
  const auto folds = subject_kfold(samples, k, p.cv_seed);
  std::cout << "training " << k << " folds on " << samples.size() << " samples ("
            << ShallowCnn::parameter_count(p.training.channels) << " parameters per model)\n";
  const auto cv = cross_validate(samples, folds, p.training);

  const auto dir = output_dir(ctx);
  fs::create_directories(dir / "snapshots");
  const auto config = to_json(p);
  json per_fold = json::array();
  for (const auto& f : cv.folds) {
    json stems = json::array();
    for (const auto& snap : f.training.snapshots) {
      const auto stem = dir / "snapshots" / ("fold" + std::to_string(f.fold) + "_epoch" + std::to_string(snap.epoch));
      write_snapshot(stem.string(), snap, p.training.channels, p.training.optimizer.seed);
      auto sidecar = read_json_file(stem.string() + ".json");
      sidecar["fold"] = f.fold;
      sidecar["config"] = config;
      write_json(stem.string() + ".json", sidecar);
      stems.push_back(fs::relative(stem, dir).generic_string());
    }
    per_fold.push_back({{"fold", f.fold},
                        {"test_subjects", folds[f.fold].test_subjects},
                        {"n_test", f.test_indices.size()},
                        {"initial_loss", f.training.initial_loss},
                        {"epoch_loss", f.training.epoch_loss},
                        {"snapshots", stems}});
  }
  write_json(dir / "metrics.json", {{"scheme", p.cv == CvScheme::KFold ? "kfold" : "leave_one_subject_out"},
                                    {"folds", k},
                                    {"vote_epochs", p.training.vote_epochs},
                                    {"protocol_hash", protocol_hash(p)},
                                    {"pooled", to_json(cv.pooled)},
                                    {"per_fold", per_fold},
                                    {"config", config}});
  std::cout << "accuracy " << cv.pooled.accuracy << "%  auc "
            << (cv.pooled.auc ? std::to_string(*cv.pooled.auc) : std::string("undefined")) << "  -> "
            << (dir / "metrics.json").string() << '\n';
  return kExitOk;
}

struct EvaluateArgs {
  std::string manifest;
  std::vector<std::string> snapshots;
  bool include_augmented = false;
};

int cmd_evaluate(const Context& ctx, const EvaluateArgs& args) {
  const auto p = resolve(ctx);
  std::vector<Snapshot> snaps;
  std::vector<int> votes;
  std::optional<CnnChannels> channels;
  for (const auto& stem : args.snapshots) {
    CnnChannels ch;
    auto snap = read_snapshot(stem, &ch);
    if (channels && !(*channels == ch)) throw ValidationError("snapshots disagree on channel counts: " + stem);
    channels = ch;
    snap.epoch = static_cast<int>(snaps.size()) + 1;  // voters are positional here
    votes.push_back(snap.epoch);
    snaps.push_back(std::move(snap));
  }
  const SnapshotEnsemble ensemble(*channels, std::move(snaps), votes);
  auto manifest = read_manifest(args.manifest);
  if (!args.include_augmented)
    std::erase_if(manifest.samples, [](const auto& s) { return s.augmentation_index != 0; });
  if (manifest.samples.empty()) throw ValidationError("no original samples in " + args.manifest);
  const auto report = evaluate(ensemble, manifest.samples);
  const json out{{"snapshots", args.snapshots},
                 {"samples", manifest.samples.size()},
                 {"metrics", to_json(report)},
                 {"config", to_json(p)}};
  const auto dir = output_dir(ctx);
  write_json(dir / "evaluation.json", out);
  std::cout << out["metrics"].dump(2) << '\n';
  if (!report.auc) std::cerr << "note: AUC undefined, the evaluation set holds a single class\n";
  return kExitOk;
}

}  // namespace

int run(int argc, char** argv) {
  CLI::App app{"vitalspec: vital-sign series to FM spectrogram images and a shallow CNN classifier"};
  app.require_subcommand(1);
  app.fallthrough();
  Context ctx;
  auto* seed_opt = app.add_option("--seed", ctx.seed, "Master seed; every stage seed derives from it");
  app.add_option("--config", ctx.config_path, "JSON file merged onto the preset (flags win)")->check(CLI::ExistingFile);
  auto* out_opt = app.add_option("--out", ctx.out, "Output directory");

  std::string input;
  auto* modulate = app.add_subcommand("modulate", "Normalize and frequency-modulate each record of a CSV");
  modulate->add_option("--input,-i", input, "Records CSV")->required();
  modulate->add_option("--preset", ctx.preset_name, "Protocol preset");
  add_fm_flags(modulate, ctx);

  SpectrogramArgs spec_args;
  auto* spectrogram = app.add_subcommand("spectrogram", "Render 128x128 spectrogram PNGs");
  spectrogram->add_option("--input,-i", spec_args.input, "Records CSV");
  spectrogram->add_option("--waveform", spec_args.waveform, "Waveform dump stem written by modulate");
  spectrogram->add_flag("--raw", spec_args.raw, "Spectrogram of the unmodulated series");
  spectrogram->add_option("--preset", ctx.preset_name, "Protocol preset");
  add_fm_flags(spectrogram, ctx);
  add_stft_flags(spectrogram, ctx);

  RoundtripArgs rt_args;
  auto* roundtrip = app.add_subcommand("roundtrip", "Modulate, demodulate and score the fixture family");
  roundtrip->add_flag("--list-fixtures", rt_args.list, "Print fixture names and exit");
  roundtrip->add_option("--fixture", rt_args.only, "Restrict to these fixtures");
  roundtrip->add_option("--preset", ctx.preset_name, "Protocol preset");
  add_fm_flags(roundtrip, ctx);
  add_stft_flags(roundtrip, ctx);

  std::optional<std::size_t> subjects;
  auto* synth = app.add_subcommand("synth", "Write a seeded synthetic corpus CSV for a preset");
  synth->add_option("--preset", ctx.preset_name, "Protocol preset");
  synth->add_option_function<std::size_t>("--subjects", [&](std::size_t n) { subjects = n; },
                                          "Scale the corpus to this many subjects");

  auto* dataset = app.add_subcommand("dataset", "Build labelled, augmented spectrogram images and a manifest");
  dataset->add_option("--input,-i", input, "Records CSV")->required();
  dataset->add_option("--preset", ctx.preset_name, "Protocol preset");
  patch_option<double>(dataset, ctx, "--noise-std", "/pipeline/noise_std", "Augmentation noise std (signal units)");
  dataset->add_option_function<std::vector<int>>(
             "--copies", [&ctx](const std::vector<int>& c) { set_patch(ctx, "/pipeline/copies_per_class", c); },
             "Augmented copies per class: label0,label1")
      ->expected(2)
      ->delimiter(',');
  add_fm_flags(dataset, ctx);
  add_stft_flags(dataset, ctx);

  std::string manifest;
  auto* train_cmd = app.add_subcommand("train", "Subject-wise cross-validation of the snapshot ensemble");
  train_cmd->add_option("--manifest,-m", manifest, "manifest.jsonl written by dataset")->required();
  train_cmd->add_option("--preset", ctx.preset_name, "Protocol preset");
  add_training_flags(train_cmd, ctx);

  EvaluateArgs eval_args;
  auto* evaluate_cmd = app.add_subcommand("evaluate", "Score saved snapshots on a manifest");
  evaluate_cmd->add_option("--manifest,-m", eval_args.manifest, "manifest.jsonl")->required();
  evaluate_cmd->add_option("--snapshot,-s", eval_args.snapshots, "Snapshot stem (repeat; odd count votes)")
      ->required();
  evaluate_cmd->add_flag("--include-augmented", eval_args.include_augmented, "Score augmented copies too");
  evaluate_cmd->add_option("--preset", ctx.preset_name, "Protocol preset");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInput;
  }
  ctx.seed_given = seed_opt->count() > 0;
  ctx.out_given = out_opt->count() > 0;

  try {
    if (*modulate) return cmd_modulate(ctx, input);
    if (*spectrogram) return cmd_spectrogram(ctx, spec_args);
    if (*roundtrip) return cmd_roundtrip(ctx, rt_args);
    if (*synth) return cmd_synth(ctx, subjects);
    if (*dataset) return cmd_dataset(ctx, input);
    if (*train_cmd) return cmd_train(ctx, manifest);
    if (*evaluate_cmd) return cmd_evaluate(ctx, eval_args);
  } catch (const CsvError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const TrainingDiverged& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitVerification;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  }
  return kExitInput;
}

}  // namespace vitalspec::cli
