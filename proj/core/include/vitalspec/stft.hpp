#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "vitalspec/fm.hpp"

namespace vitalspec {

enum class WindowKind { Hann, Rect };

struct FrequencyBand {
  double lo = 0.0;
  double hi = 0.0;
};

struct StftConfig {
  std::size_t n_fft = 4096;
  std::size_t hop = 512;
  WindowKind window = WindowKind::Hann;
  std::optional<FrequencyBand> band;

  void validate(double fs) const;
};

/// Defaults used with FM waveforms: 4096-point Hann frames, hop 512 and a band
/// crop of fc +- 2 delta_f. The half-width is widened to at least 8 bins so the
/// crop always holds enough bins for peak interpolation.
StftConfig default_stft_config(const FmConfig& fm);

/// Frames for spectrogramming a short unmodulated series directly: Hann, n_fft
/// the largest power of two <= length / 2 (at least 2), hop n_fft / 8.
StftConfig raw_stft_config(std::size_t length);

/// Row-major magnitudes, row = frequency bin, column = frame: at(bin, frame).
struct Spectrogram {
  std::vector<double> mags_db;
  std::vector<double> freq_axis;  // Hz, ascending
  std::vector<double> time_axis;  // frame centres, seconds, ascending

  std::size_t n_freq() const { return freq_axis.size(); }
  std::size_t n_frames() const { return time_axis.size(); }
  double at(std::size_t bin, std::size_t frame) const { return mags_db[bin * n_frames() + frame]; }
  double bin_width() const { return freq_axis.size() > 1 ? freq_axis[1] - freq_axis[0] : 0.0; }
};

inline constexpr double kMagnitudeFloor = 1e-10;

std::size_t stft_frame_count(std::size_t length, std::size_t n_fft, std::size_t hop);

std::vector<double> make_window(WindowKind kind, std::size_t n);

/// Short-time Fourier transform magnitude in dB: 20 log10(|DFT(window * frame)| + 1e-10).
/// Frame t covers samples [t*hop, t*hop + n_fft). Band crop is applied last.
Spectrogram stft(const Waveform& w, const StftConfig& cfg);

inline constexpr std::size_t kImageSize = 128;

/// 128x128 grayscale image in [0,1], row-major, row 0 = highest frequency.
struct SpectroImage {
  std::vector<float> pixels = std::vector<float>(kImageSize * kImageSize, 0.0f);
  std::string provenance;

  float at(std::size_t row, std::size_t col) const { return pixels[row * kImageSize + col]; }
};

/// Bilinear resize of the dB matrix to 128x128 (corner-aligned) followed by
/// per-image min-max normalization. Constant input renders uniform 0.5.
SpectroImage render_image(const Spectrogram& s, std::string provenance = {});

// 8-bit grayscale PNG, value = round(255 * pixel).
void write_png(const std::string& path, const SpectroImage& img);
SpectroImage read_png(const std::string& path);

}  // namespace vitalspec
