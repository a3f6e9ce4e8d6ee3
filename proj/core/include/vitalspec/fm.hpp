#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "vitalspec/time_series.hpp"

namespace vitalspec {

struct FmConfig {
  double fc = 50'000.0;      // carrier frequency, Hz
  double delta_f = 850.0;    // peak deviation at |m| = 1, Hz
  double fs = 262'144.0;     // output sampling rate, Hz
  double duration = 0.5;     // every message is compressed onto [0, duration] s
  double ac = 1.0;           // carrier amplitude

  std::size_t n_samples() const;
  // Throws ValidationError unless fs > 2(fc + delta_f), 0 < delta_f < fc,
  // duration > 0 and ac > 0.
  void validate() const;
};

struct Waveform {
  std::vector<double> samples;
  double fs = 0.0;

  double duration() const { return static_cast<double>(samples.size()) / fs; }
};

/// Message linearly resampled onto the output grid of cfg (n_samples points,
/// first and last message samples at the first and last output samples).
/// Rejects messages with |m| > 1 + 1e-9.
std::vector<double> compress_message(const TimeSeries& message, const FmConfig& cfg);

/// FM synthesis by phase integration:
///   f(t) = ac * cos(2 pi fc t + 2 pi delta_f * integral_0^t m(tau) dtau)
/// with the integral taken as a trapezoidal cumulative sum and zero initial phase.
Waveform fm_modulate(const TimeSeries& message, const FmConfig& cfg);

/// Analytic instantaneous frequency fc + delta_f * m(t) on the fm_modulate grid.
TimeSeries instantaneous_frequency(const TimeSeries& message, const FmConfig& cfg);

/// Writes `<stem>.f32` (float32 little-endian samples) and `<stem>.json`
/// ({fs, n_samples, fc, delta_f} plus any extra keys in extra_json).
void write_waveform_dump(const std::string& stem, const Waveform& w, const FmConfig& cfg,
                         const std::string& extra_json = "{}");

/// Reads back a dump written by write_waveform_dump (stem without extension).
Waveform read_waveform_dump(const std::string& stem);

}  // namespace vitalspec
