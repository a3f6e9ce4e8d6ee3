#include "vitalspec/demod.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include <nlohmann/json.hpp>

#include "vitalspec/error.hpp"

namespace vitalspec {

RidgeTrack extract_ridge(const Spectrogram& s) {
  const std::size_t bins = s.n_freq();
  const std::size_t frames = s.n_frames();
  RidgeTrack track;
  track.freqs_hz.resize(frames);
  track.times_s = s.time_axis;
  const double width = s.bin_width();

  for (std::size_t t = 0; t < frames; ++t) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < bins; ++k) {
      if (s.at(k, t) > s.at(best, t)) best = k;
    }
    double freq = s.freq_axis[best];
    if (best > 0 && best + 1 < bins) {
      const double a = s.at(best - 1, t);
      const double b = s.at(best, t);
      const double c = s.at(best + 1, t);
      const double denom = a - 2.0 * b + c;
      if (denom != 0.0) freq += 0.5 * (a - c) / denom * width;
    }
    track.freqs_hz[t] = freq;
  }
  return track;
}

TimeSeries demodulate(const RidgeTrack& track, const FmConfig& cfg) {
  if (track.freqs_hz.empty()) throw ValidationError("demodulate: empty ridge track");
  std::vector<double> m(track.freqs_hz.size());
  for (std::size_t i = 0; i < m.size(); ++i)
    m[i] = std::clamp((track.freqs_hz[i] - cfg.fc) / cfg.delta_f, -1.0, 1.0);
  const double dt =
      track.times_s.size() > 1 ? track.times_s[1] - track.times_s[0] : 1.0 / cfg.fs;
  const double start = track.times_s.empty() ? 0.0 : track.times_s.front();
  return TimeSeries(std::move(m), dt, "normalized", {}, start);
}

RoundtripMetrics roundtrip_report(const TimeSeries& message, const FmConfig& fm_cfg, const StftConfig& stft_cfg) {
  if (message.size() < 3) throw ValidationError("roundtrip_report: message needs at least 3 samples");
  const auto compressed = compress_message(message, fm_cfg);
  const auto wave = fm_modulate(message, fm_cfg);
  const auto spec = stft(wave, stft_cfg);
  const auto estimate = demodulate(extract_ridge(spec), fm_cfg);

  const std::size_t frames = estimate.size();
  if (frames <= 2 * kRoundtripEdgeFrames)
    throw ValidationError("roundtrip_report: too few frames after excluding edges");

  std::vector<double> truth;
  std::vector<double> est;
  const double centre = 0.5 * static_cast<double>(stft_cfg.n_fft - 1);
  for (std::size_t t = kRoundtripEdgeFrames; t + kRoundtripEdgeFrames < frames; ++t) {
    const double pos = static_cast<double>(t * stft_cfg.hop) + centre;
    const auto k = static_cast<std::size_t>(pos);
    const double frac = pos - static_cast<double>(k);
    const double v = k + 1 < compressed.size() ? compressed[k] + frac * (compressed[k + 1] - compressed[k])
                                               : compressed.back();
    truth.push_back(v);
    est.push_back(estimate[t]);
  }

  RoundtripMetrics r;
  r.frames_compared = truth.size();
  const double n = static_cast<double>(truth.size());
  double sq = 0.0;
  double mean_t = 0.0;
  double mean_e = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const double d = est[i] - truth[i];
    sq += d * d;
    r.max_abs_err = std::max(r.max_abs_err, std::abs(d));
    mean_t += truth[i];
    mean_e += est[i];
  }
  r.rmse = std::sqrt(sq / n);
  mean_t /= n;
  mean_e /= n;

  r.constant_message = message.max() == message.min();
  if (r.constant_message) {
    r.pearson_r = 1.0;
    return r;
  }
  double stt = 0.0;
  double see = 0.0;
  double ste = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    stt += (truth[i] - mean_t) * (truth[i] - mean_t);
    see += (est[i] - mean_e) * (est[i] - mean_e);
    ste += (truth[i] - mean_t) * (est[i] - mean_e);
  }
  r.pearson_r = (stt > 0.0 && see > 0.0) ? ste / std::sqrt(stt * see) : 0.0;
  return r;
}

std::string to_json(const RoundtripMetrics& m) {
  nlohmann::json j{{"rmse", m.rmse},
                   {"pearson_r", m.pearson_r},
                   {"max_abs_err", m.max_abs_err},
                   {"constant_message", m.constant_message},
                   {"frames_compared", m.frames_compared}};
  return j.dump();
}

bool passes(const RoundtripMetrics& m, const RoundtripThresholds& t) {
  return m.pearson_r >= t.min_pearson_r && m.rmse <= t.max_rmse;
}

std::vector<MessageFixture> roundtrip_fixtures(unsigned long long seed) {
  constexpr std::size_t n = 200;
  constexpr double span = 0.5;  // matches the default compressed duration
  const double dt = span / static_cast<double>(n - 1);
  auto t_at = [&](std::size_t i) { return static_cast<double>(i) * dt; };

  std::vector<double> constant(n, 0.3);
  std::vector<double> ramp(n), sinus(n), triangle(n), steps(n), walk(n);
  const double levels[] = {-0.6, 0.4, -0.2, 0.8, 0.0};
  for (std::size_t i = 0; i < n; ++i) {
    const double u = static_cast<double>(i) / static_cast<double>(n - 1);
    ramp[i] = -1.0 + 2.0 * u;
    sinus[i] = std::sin(2.0 * std::numbers::pi * 8.0 * t_at(i));
    const double phase = std::fmod(2.0 * u, 1.0);  // two periods
    triangle[i] = phase < 0.5 ? -1.0 + 4.0 * phase : 3.0 - 4.0 * phase;
    steps[i] = levels[std::min<std::size_t>(i * 5 / n, 4)];
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> step(0.0, 1.0);
  walk[0] = 0.0;
  for (std::size_t i = 1; i < n; ++i) walk[i] = walk[i - 1] + step(rng);
  auto walk_series = normalize(TimeSeries(walk, dt), NormalizationSpec::per_sample()).series;

  std::vector<MessageFixture> out;
  out.push_back({"constant", TimeSeries(constant, dt)});
  out.push_back({"ramp", TimeSeries(ramp, dt)});
  out.push_back({"sinusoid", TimeSeries(sinus, dt)});
  out.push_back({"triangle", TimeSeries(triangle, dt)});
  out.push_back({"piecewise_constant", TimeSeries(steps, dt)});
  out.push_back({"random_walk", walk_series});
  return out;
}

double normalized_ridge_variance(const Spectrogram& s) {
  const auto ridge = extract_ridge(s);
  const double lo = s.freq_axis.front();
  const double hi = s.freq_axis.back();
  if (!(hi > lo)) return 0.0;
  double mean = 0.0;
  for (double f : ridge.freqs_hz) mean += (f - lo) / (hi - lo);
  mean /= static_cast<double>(ridge.freqs_hz.size());
  double var = 0.0;
  for (double f : ridge.freqs_hz) {
    const double u = (f - lo) / (hi - lo) - mean;
    var += u * u;
  }
  return var / static_cast<double>(ridge.freqs_hz.size());
}

}  // namespace vitalspec
