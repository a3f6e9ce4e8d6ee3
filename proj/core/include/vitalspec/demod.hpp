#pragma once

#include <string>
#include <vector>

#include "vitalspec/fm.hpp"
#include "vitalspec/stft.hpp"
#include "vitalspec/time_series.hpp"

namespace vitalspec {

struct RidgeTrack {
  std::vector<double> freqs_hz;
  std::vector<double> times_s;
};

/// Per-frame argmax bin refined by 3-point parabolic interpolation on the dB
/// magnitudes. Edge bins keep the raw argmax frequency.
RidgeTrack extract_ridge(const Spectrogram& s);

/// m(t) = (ridge(t) - fc) / delta_f clamped to [-1, 1], sampled at frame centres.
TimeSeries demodulate(const RidgeTrack& track, const FmConfig& cfg);

struct RoundtripMetrics {
  double rmse = 0.0;
  double pearson_r = 0.0;
  double max_abs_err = 0.0;
  bool constant_message = false;  // pearson_r is 1.0 by convention when set
  std::size_t frames_compared = 0;
};

inline constexpr std::size_t kRoundtripEdgeFrames = 2;

/// modulate -> stft -> ridge -> demodulate, compared against the time-compressed
/// message at frame centres with kRoundtripEdgeFrames excluded on each side.
RoundtripMetrics roundtrip_report(const TimeSeries& message, const FmConfig& fm_cfg, const StftConfig& stft_cfg);

std::string to_json(const RoundtripMetrics& m);

struct RoundtripThresholds {
  double min_pearson_r = 0.95;
  double max_rmse = 0.08;
};

bool passes(const RoundtripMetrics& m, const RoundtripThresholds& t = {});

struct MessageFixture {
  std::string name;
  TimeSeries message;
};

/// Constant, ramp, sinusoid, triangle, piecewise-constant and random walk, all
/// in [-1, 1]. Only the random walk depends on the seed.
std::vector<MessageFixture> roundtrip_fixtures(unsigned long long seed = 7);

/// Variance of the ridge expressed as a fraction of the analysed band,
/// (ridge - f_lo) / (f_hi - f_lo). Lets ridges from spectrograms with different
/// frequency scales be compared.
double normalized_ridge_variance(const Spectrogram& s);

}  // namespace vitalspec
