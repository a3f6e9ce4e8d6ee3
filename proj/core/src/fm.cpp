#include "vitalspec/fm.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <numbers>

#include <nlohmann/json.hpp>

#include "vitalspec/error.hpp"

namespace vitalspec {

std::size_t FmConfig::n_samples() const { return static_cast<std::size_t>(std::llround(fs * duration)); }

void FmConfig::validate() const {
  if (!(fc > 0.0) || !std::isfinite(fc)) throw ValidationError("fc must be positive");
  if (!(delta_f > 0.0) || !(delta_f < fc)) throw ValidationError("delta_f must satisfy 0 < delta_f < fc");
  if (!(fs > 2.0 * (fc + delta_f)) || !std::isfinite(fs))
    throw ValidationError("fs must exceed 2*(fc + delta_f) (Nyquist with deviation headroom); fs=" +
                          std::to_string(fs) + ", 2*(fc+delta_f)=" + std::to_string(2.0 * (fc + delta_f)));
  if (!(duration > 0.0) || !std::isfinite(duration)) throw ValidationError("duration must be positive");
  if (!(ac > 0.0) || !std::isfinite(ac)) throw ValidationError("ac must be positive");
  if (n_samples() < 2) throw ValidationError("fs * duration must give at least 2 samples");
}

std::vector<double> compress_message(const TimeSeries& message, const FmConfig& cfg) {
  cfg.validate();
  for (std::size_t i = 0; i < message.size(); ++i) {
    if (std::abs(message[i]) > 1.0 + 1e-9)
      throw ValidationError("message sample " + std::to_string(i) + " = " + std::to_string(message[i]) +
                            " is outside [-1, 1]; normalize first");
  }
  const std::size_t n = cfg.n_samples();
  if (message.size() == 1) return std::vector<double>(n, message[0]);
  auto resampled = resample_linear(message, n);
  return {resampled.values().begin(), resampled.values().end()};
}

namespace {

// Integral of m over [j-1, j] in sample units: 4-point cubic quadrature, one-sided
// at the ends, trapezoid when there are fewer than four samples.
double interval_integral(const std::vector<double>& m, std::size_t j) {
  const std::size_t n = m.size();
  if (n < 4) return 0.5 * (m[j - 1] + m[j]);
  if (j == 1) return (9.0 * m[0] + 19.0 * m[1] - 5.0 * m[2] + m[3]) / 24.0;
  if (j == n - 1) return (9.0 * m[n - 1] + 19.0 * m[n - 2] - 5.0 * m[n - 3] + m[n - 4]) / 24.0;
  return (13.0 * (m[j - 1] + m[j]) - m[j - 2] - m[j + 1]) / 24.0;
}

}  // namespace

Waveform fm_modulate(const TimeSeries& message, const FmConfig& cfg) {
  const auto m = compress_message(message, cfg);
  const std::size_t n = m.size();
  const double two_pi = 2.0 * std::numbers::pi;
  const double inv_fs = 1.0 / cfg.fs;

  Waveform w{std::vector<double>(n), cfg.fs};
  // Integral of the message, accumulated separately from the carrier term so
  // the carrier phase does not pick up summation error.
  double integral = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    if (j > 0) integral += interval_integral(m, j) * inv_fs;
    const double t = static_cast<double>(j) * inv_fs;
    const double phase = two_pi * cfg.fc * t + two_pi * cfg.delta_f * integral;
    w.samples[j] = cfg.ac * std::cos(phase);
  }
  return w;
}

TimeSeries instantaneous_frequency(const TimeSeries& message, const FmConfig& cfg) {
  auto m = compress_message(message, cfg);
  for (auto& v : m) v = cfg.fc + cfg.delta_f * v;
  return TimeSeries(std::move(m), 1.0 / cfg.fs, "Hz", message.subject_id());
}

void write_waveform_dump(const std::string& stem, const Waveform& w, const FmConfig& cfg,
                         const std::string& extra_json) {
  {
    std::ofstream out(stem + ".f32", std::ios::binary);
    if (!out) throw ValidationError("cannot write " + stem + ".f32");
    for (double s : w.samples) {
      auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(s));
      if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap32(bits);
      char bytes[4];
      std::memcpy(bytes, &bits, 4);
      out.write(bytes, 4);
    }
  }
  auto j = nlohmann::json::parse(extra_json);
  j["fs"] = w.fs;
  j["n_samples"] = w.samples.size();
  j["fc"] = cfg.fc;
  j["delta_f"] = cfg.delta_f;
  std::ofstream side(stem + ".json");
  if (!side) throw ValidationError("cannot write " + stem + ".json");
  side << j.dump(2) << '\n';
}

Waveform read_waveform_dump(const std::string& stem) {
  std::ifstream side(stem + ".json");
  if (!side) throw ValidationError("cannot open " + stem + ".json");
  const auto j = nlohmann::json::parse(side);
  const auto n = j.at("n_samples").get<std::size_t>();
  Waveform w{std::vector<double>(n), j.at("fs").get<double>()};
  std::ifstream in(stem + ".f32", std::ios::binary);
  if (!in) throw ValidationError("cannot open " + stem + ".f32");
  for (std::size_t i = 0; i < n; ++i) {
    char bytes[4];
    if (!in.read(bytes, 4)) throw ValidationError(stem + ".f32 is shorter than n_samples");
    std::uint32_t bits;
    std::memcpy(&bits, bytes, 4);
    if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap32(bits);
    w.samples[i] = std::bit_cast<float>(bits);
  }
  return w;
}

}  // namespace vitalspec
