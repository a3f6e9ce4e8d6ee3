#include "vitalspec/stft.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>

#include "vitalspec/error.hpp"

namespace vitalspec {
namespace {

// FFTW planning is not thread-safe; plans are created once per size under a
// lock and then executed concurrently on fftw_malloc'd (equally aligned) buffers.
class RealFftPlan {
 public:
  explicit RealFftPlan(std::size_t n) : n_(n) {
    auto* in = fftw_alloc_real(n);
    auto* out = fftw_alloc_complex(n / 2 + 1);
    plan_ = fftw_plan_dft_r2c_1d(static_cast<int>(n), in, out, FFTW_ESTIMATE);
    fftw_free(in);
    fftw_free(out);
    if (!plan_) throw std::runtime_error("FFTW planning failed");
  }
  ~RealFftPlan() { fftw_destroy_plan(plan_); }
  RealFftPlan(const RealFftPlan&) = delete;
  RealFftPlan& operator=(const RealFftPlan&) = delete;

  void execute(double* in, fftw_complex* out) const { fftw_execute_dft_r2c(plan_, in, out); }
  std::size_t size() const { return n_; }

 private:
  std::size_t n_;
  fftw_plan plan_;
};

const RealFftPlan& plan_for(std::size_t n) {
  static std::mutex mu;
  static std::map<std::size_t, std::unique_ptr<RealFftPlan>> cache;
  std::lock_guard lock(mu);
  auto& slot = cache[n];
  if (!slot) slot = std::make_unique<RealFftPlan>(n);
  return *slot;
}

struct FftwDeleter {
  void operator()(void* p) const { fftw_free(p); }
};

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

}  // namespace

void StftConfig::validate(double fs) const {
  if (n_fft < 2 || !is_power_of_two(n_fft)) throw ValidationError("n_fft must be a power of two >= 2");
  if (hop == 0 || hop > n_fft) throw ValidationError("hop must satisfy 0 < hop <= n_fft");
  if (band) {
    if (!(band->lo >= 0.0) || !(band->lo < band->hi) || !(band->hi <= fs / 2.0))
      throw ValidationError("band must satisfy 0 <= lo < hi <= fs/2");
  }
}

StftConfig raw_stft_config(std::size_t length) {
  StftConfig cfg;
  cfg.n_fft = 2;
  while (cfg.n_fft * 4 <= length) cfg.n_fft *= 2;
  cfg.hop = std::max<std::size_t>(1, cfg.n_fft / 8);
  return cfg;
}

StftConfig default_stft_config(const FmConfig& fm) {
  StftConfig cfg;
  const double bin = fm.fs / static_cast<double>(cfg.n_fft);
  const double half = std::max(2.0 * fm.delta_f, 8.0 * bin);
  cfg.band = FrequencyBand{std::max(0.0, fm.fc - half), std::min(fm.fs / 2.0, fm.fc + half)};
  return cfg;
}

std::size_t stft_frame_count(std::size_t length, std::size_t n_fft, std::size_t hop) {
  if (length < n_fft) return 0;
  return (length - n_fft) / hop + 1;
}

std::vector<double> make_window(WindowKind kind, std::size_t n) {
  std::vector<double> w(n, 1.0);
  if (kind == WindowKind::Hann && n > 1) {
    const double denom = static_cast<double>(n - 1);
    for (std::size_t i = 0; i < n; ++i)
      w[i] = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / denom));
  }
  return w;
}

Spectrogram stft(const Waveform& w, const StftConfig& cfg) {
  cfg.validate(w.fs);
  const std::size_t n = cfg.n_fft;
  if (w.samples.size() < n)
    throw ValidationError("waveform has " + std::to_string(w.samples.size()) +
                          " samples, fewer than n_fft = " + std::to_string(n));

  const std::size_t frames = stft_frame_count(w.samples.size(), n, cfg.hop);
  const std::size_t n_bins = n / 2 + 1;
  const double bin_hz = w.fs / static_cast<double>(n);

  std::size_t first = 0;
  std::size_t last = n_bins - 1;
  if (cfg.band) {
    first = static_cast<std::size_t>(std::ceil(cfg.band->lo / bin_hz - 1e-9));
    const double hi_bin = std::floor(cfg.band->hi / bin_hz + 1e-9);
    last = std::min(n_bins - 1, static_cast<std::size_t>(std::max(0.0, hi_bin)));
    if (first > last) throw ValidationError("frequency band contains no FFT bins");
  }
  const std::size_t kept = last - first + 1;

  Spectrogram s;
  s.freq_axis.resize(kept);
  for (std::size_t k = 0; k < kept; ++k) s.freq_axis[k] = static_cast<double>(first + k) * bin_hz;
  s.time_axis.resize(frames);
  const double centre = 0.5 * static_cast<double>(n - 1);
  for (std::size_t t = 0; t < frames; ++t)
    s.time_axis[t] = (static_cast<double>(t * cfg.hop) + centre) / w.fs;
  s.mags_db.assign(kept * frames, 0.0);

  const auto window = make_window(cfg.window, n);
  const auto& plan = plan_for(n);
  std::unique_ptr<double, FftwDeleter> in(fftw_alloc_real(n));
  std::unique_ptr<fftw_complex, FftwDeleter> out(fftw_alloc_complex(n_bins));

  for (std::size_t t = 0; t < frames; ++t) {
    const double* frame = w.samples.data() + t * cfg.hop;
    for (std::size_t i = 0; i < n; ++i) in.get()[i] = frame[i] * window[i];
    plan.execute(in.get(), out.get());
    for (std::size_t k = 0; k < kept; ++k) {
      const auto& c = out.get()[first + k];
      const double mag = std::hypot(c[0], c[1]);
      s.mags_db[k * frames + t] = 20.0 * std::log10(mag + kMagnitudeFloor);
    }
  }
  return s;
}

SpectroImage render_image(const Spectrogram& s, std::string provenance) {
  if (s.n_freq() == 0 || s.n_frames() == 0) throw ValidationError("render_image: empty spectrogram");
  SpectroImage img;
  img.provenance = std::move(provenance);

  const std::size_t rows = s.n_freq();
  const std::size_t cols = s.n_frames();
  const double last = static_cast<double>(kImageSize - 1);
  const double row_scale = static_cast<double>(rows - 1) / last;
  const double col_scale = static_cast<double>(cols - 1) / last;

  std::vector<double> resized(kImageSize * kImageSize);
  for (std::size_t r = 0; r < kImageSize; ++r) {
    // Row 0 is the top of the image, i.e. the highest frequency.
    const double y = static_cast<double>(kImageSize - 1 - r) * row_scale;
    std::size_t y0 = static_cast<std::size_t>(y);
    if (y0 + 1 >= rows) y0 = rows >= 2 ? rows - 2 : 0;
    const double fy = rows >= 2 ? y - static_cast<double>(y0) : 0.0;
    const std::size_t y1 = rows >= 2 ? y0 + 1 : 0;
    for (std::size_t c = 0; c < kImageSize; ++c) {
      const double x = static_cast<double>(c) * col_scale;
      std::size_t x0 = static_cast<std::size_t>(x);
      if (x0 + 1 >= cols) x0 = cols >= 2 ? cols - 2 : 0;
      const double fx = cols >= 2 ? x - static_cast<double>(x0) : 0.0;
      const std::size_t x1 = cols >= 2 ? x0 + 1 : 0;
      const double top = s.at(y0, x0) + fx * (s.at(y0, x1) - s.at(y0, x0));
      const double bottom = s.at(y1, x0) + fx * (s.at(y1, x1) - s.at(y1, x0));
      resized[r * kImageSize + c] = top + fy * (bottom - top);
    }
  }

  const auto [lo_it, hi_it] = std::minmax_element(resized.begin(), resized.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  for (std::size_t i = 0; i < resized.size(); ++i)
    img.pixels[i] = hi > lo ? static_cast<float>((resized[i] - lo) / (hi - lo)) : 0.5f;
  return img;
}

}  // namespace vitalspec
