#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <numbers>
#include <random>

#include "vitalspec/error.hpp"
#include "vitalspec/stft.hpp"

namespace vitalspec {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

Waveform noise_waveform(std::size_t n, double fs, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  Waveform w{std::vector<double>(n), fs};
  for (auto& x : w.samples) x = g(rng);
  return w;
}

Waveform tone(double f0, std::size_t n, double fs) {
  Waveform w{std::vector<double>(n), fs};
  for (std::size_t j = 0; j < n; ++j) w.samples[j] = std::cos(kTwoPi * f0 * static_cast<double>(j) / fs);
  return w;
}

// Direct O(n^2) transform of one windowed frame, Hann written out independently.
std::vector<double> naive_frame_db(const std::vector<double>& x, std::size_t start, std::size_t n, bool hann) {
  std::vector<double> out(n / 2 + 1);
  for (std::size_t k = 0; k <= n / 2; ++k) {
    std::complex<double> acc = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double win = hann ? 0.5 * (1.0 - std::cos(kTwoPi * static_cast<double>(j) / static_cast<double>(n - 1))) : 1.0;
      acc += win * x[start + j] * std::polar(1.0, -kTwoPi * static_cast<double>(k * j) / static_cast<double>(n));
    }
    out[k] = 20.0 * std::log10(std::abs(acc) + 1e-10);
  }
  return out;
}

TEST(Stft, MatchesNaiveDft) {
  const auto w = noise_waveform(300, 1000.0, 5);
  for (auto kind : {WindowKind::Hann, WindowKind::Rect}) {
    StftConfig cfg;
    cfg.n_fft = 64;
    cfg.hop = 24;
    cfg.window = kind;
    const auto s = stft(w, cfg);
    ASSERT_EQ(s.n_frames(), (300u - 64u) / 24u + 1u);
    ASSERT_EQ(s.n_freq(), 33u);
    for (std::size_t t = 0; t < s.n_frames(); ++t) {
      const auto ref = naive_frame_db(w.samples, t * cfg.hop, cfg.n_fft, kind == WindowKind::Hann);
      for (std::size_t k = 0; k < ref.size(); ++k) ASSERT_NEAR(s.at(k, t), ref[k], 1e-9) << "bin " << k << " frame " << t;
    }
  }
}

TEST(Stft, AxesAreBinFrequenciesAndFrameCentres) {
  const auto w = noise_waveform(512, 256.0, 1);
  StftConfig cfg;
  cfg.n_fft = 128;
  cfg.hop = 32;
  const auto s = stft(w, cfg);
  EXPECT_DOUBLE_EQ(s.bin_width(), 2.0);
  EXPECT_DOUBLE_EQ(s.freq_axis.back(), 128.0);
  EXPECT_DOUBLE_EQ(s.time_axis.front(), 63.5 / 256.0);
  EXPECT_DOUBLE_EQ(s.time_axis[1] - s.time_axis[0], 32.0 / 256.0);
}

TEST(Stft, BandCropKeepsBinsInsideBand) {
  const auto w = noise_waveform(1024, 1024.0, 2);
  StftConfig cfg;
  cfg.n_fft = 256;
  cfg.hop = 128;
  cfg.band = FrequencyBand{100.0, 200.0};
  const auto s = stft(w, cfg);
  EXPECT_EQ(s.freq_axis.front(), 100.0);
  EXPECT_EQ(s.freq_axis.back(), 200.0);
  EXPECT_EQ(s.n_freq(), 26u);
  StftConfig full = cfg;
  full.band.reset();
  const auto f = stft(w, full);
  for (std::size_t t = 0; t < s.n_frames(); ++t) EXPECT_EQ(s.at(0, t), f.at(25, t));
}

TEST(Stft, RejectsShortWaveformAndBadConfig) {
  StftConfig cfg;
  EXPECT_THROW(stft(Waveform{std::vector<double>(4095), 262'144.0}, cfg), ValidationError);
  cfg.hop = 0;
  EXPECT_THROW(cfg.validate(262'144.0), ValidationError);
  cfg = StftConfig{};
  cfg.hop = 8192;
  EXPECT_THROW(cfg.validate(262'144.0), ValidationError);
  cfg = StftConfig{};
  cfg.n_fft = 1000;
  EXPECT_THROW(cfg.validate(262'144.0), ValidationError);
  cfg = StftConfig{};
  cfg.band = FrequencyBand{500.0, 400.0};
  EXPECT_THROW(cfg.validate(262'144.0), ValidationError);
  cfg.band = FrequencyBand{0.0, 200'000.0};
  EXPECT_THROW(cfg.validate(262'144.0), ValidationError);
}

TEST(Stft, RawConfigScalesWithLength) {
  EXPECT_EQ(raw_stft_config(200).n_fft, 64u);
  EXPECT_EQ(raw_stft_config(200).hop, 8u);
  EXPECT_EQ(raw_stft_config(256).n_fft, 128u);
  EXPECT_EQ(raw_stft_config(3).n_fft, 2u);
  EXPECT_EQ(raw_stft_config(3).hop, 1u);
}

TEST(Stft, FrameCountMatchesNaiveLoop) {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 2000; ++trial) {
    const std::size_t n_fft = std::size_t{1} << std::uniform_int_distribution<int>(0, 8)(rng);
    const std::size_t hop = std::uniform_int_distribution<std::size_t>(1, n_fft)(rng);
    const std::size_t len = n_fft + std::uniform_int_distribution<std::size_t>(0, 2000)(rng);
    std::size_t naive = 0;
    for (std::size_t start = 0; start + n_fft <= len; start += hop) ++naive;
    ASSERT_EQ(stft_frame_count(len, n_fft, hop), naive) << len << " " << n_fft << " " << hop;
  }
  EXPECT_EQ(stft_frame_count(10, 16, 4), 0u);
}

TEST(Stft, BinAlignedToneLocalizesInEveryFrame) {
  FmConfig fm;
  StftConfig cfg;
  cfg.window = WindowKind::Rect;
  for (double f0 : {50'000.0, 64.0 * 700.0, 64.0 * 1111.0}) {
    const auto s = stft(tone(f0, fm.n_samples(), fm.fs), cfg);
    const auto expected = static_cast<std::size_t>(std::lround(f0 * 4096.0 / fm.fs));
    for (std::size_t t = 0; t < s.n_frames(); ++t) {
      std::size_t best = 0;
      for (std::size_t k = 1; k < s.n_freq(); ++k)
        if (s.at(k, t) > s.at(best, t)) best = k;
      ASSERT_EQ(best, expected) << "f0 " << f0 << " frame " << t;
    }
  }
}

TEST(Stft, ZeroWaveformSitsAtFloor) {
  StftConfig cfg;
  cfg.n_fft = 256;
  cfg.hop = 64;
  const auto s = stft(Waveform{std::vector<double>(1000, 0.0), 8000.0}, cfg);
  for (double v : s.mags_db) ASSERT_EQ(v, 20.0 * std::log10(kMagnitudeFloor));
  EXPECT_EQ(20.0 * std::log10(kMagnitudeFloor), -200.0);
}

TEST(Stft, GainAddsConstantDecibels) {
  const auto w = noise_waveform(2048, 4096.0, 17);
  StftConfig cfg;
  cfg.n_fft = 256;
  cfg.hop = 100;
  const auto base = stft(w, cfg);
  for (double c : {2.0, 10.0, 37.5}) {
    Waveform scaled = w;
    for (auto& x : scaled.samples) x *= c;
    const auto s = stft(scaled, cfg);
    // The additive floor breaks exact scaling only far below the noise level.
    for (std::size_t i = 0; i < s.mags_db.size(); ++i) ASSERT_NEAR(s.mags_db[i] - base.mags_db[i], 20.0 * std::log10(c), 1e-6);
    const auto a = render_image(base), b = render_image(s);
    for (std::size_t i = 0; i < a.pixels.size(); ++i) ASSERT_NEAR(a.pixels[i], b.pixels[i], 1e-5);
  }
}

TEST(Stft, DefaultConfigCropsAroundCarrier) {
  FmConfig fm;
  const auto cfg = default_stft_config(fm);
  EXPECT_EQ(cfg.n_fft, 4096u);
  EXPECT_EQ(cfg.hop, 512u);
  EXPECT_EQ(cfg.window, WindowKind::Hann);
  ASSERT_TRUE(cfg.band.has_value());
  EXPECT_DOUBLE_EQ(cfg.band->lo, 50'000.0 - 1700.0);
  EXPECT_DOUBLE_EQ(cfg.band->hi, 50'000.0 + 1700.0);
  fm.delta_f = 10.0;
  const auto narrow = default_stft_config(fm);
  EXPECT_DOUBLE_EQ(narrow.band->hi - narrow.band->lo, 16.0 * 64.0);
}

Spectrogram grid(std::size_t n_freq, std::size_t n_frames, const std::vector<double>& values) {
  Spectrogram s;
  s.mags_db = values;
  for (std::size_t k = 0; k < n_freq; ++k) s.freq_axis.push_back(static_cast<double>(k));
  for (std::size_t t = 0; t < n_frames; ++t) s.time_axis.push_back(static_cast<double>(t));
  return s;
}

TEST(RenderImage, ConstantSpectrogramIsMidGray) {
  const auto img = render_image(grid(7, 9, std::vector<double>(63, -42.0)), "c");
  EXPECT_EQ(img.provenance, "c");
  ASSERT_EQ(img.pixels.size(), kImageSize * kImageSize);
  for (float p : img.pixels) ASSERT_EQ(p, 0.5f);
}

TEST(RenderImage, SpansUnitInterval) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-120.0, 30.0);
  for (auto [nf, nt] : {std::pair<std::size_t, std::size_t>{5, 300}, {60, 60}, {300, 17}}) {
    std::vector<double> v(nf * nt);
    for (auto& x : v) x = u(rng);
    const auto img = render_image(grid(nf, nt, v));
    const auto [lo, hi] = std::minmax_element(img.pixels.begin(), img.pixels.end());
    EXPECT_EQ(*lo, 0.0f);
    EXPECT_EQ(*hi, 1.0f);
  }
}

// Rows run from the highest frequency down, so the identity holds after a vertical flip.
TEST(RenderImage, NormalizedSquareInputIsReproduced) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> v(kImageSize * kImageSize);
  for (auto& x : v) x = u(rng);
  v[3] = 0.0;
  v[500] = 1.0;
  const auto s = grid(kImageSize, kImageSize, v);
  const auto img = render_image(s);
  for (std::size_t r = 0; r < kImageSize; ++r)
    for (std::size_t c = 0; c < kImageSize; ++c)
      ASSERT_NEAR(img.at(r, c), s.at(kImageSize - 1 - r, c), 1e-6) << r << "," << c;
}

TEST(RenderImage, HighestFrequencyIsTopRow) {
  std::vector<double> v(4 * 3, 0.0);
  for (std::size_t t = 0; t < 3; ++t) v[3 * 3 + t] = 10.0;
  const auto img = render_image(grid(4, 3, v));
  EXPECT_EQ(img.at(0, 64), 1.0f);
  EXPECT_EQ(img.at(kImageSize - 1, 64), 0.0f);
}

TEST(Png, RoundTripQuantizesToEightBits) {
  const auto dir = std::filesystem::temp_directory_path() / "vitalspec_png_test";
  std::filesystem::create_directories(dir);
  SpectroImage img;
  for (std::size_t i = 0; i < img.pixels.size(); ++i) img.pixels[i] = static_cast<float>((i * 37) % 1000) / 999.0f;
  const auto a = (dir / "a.png").string(), b = (dir / "b.png").string();
  write_png(a, img);
  const auto back = read_png(a);
  for (std::size_t i = 0; i < img.pixels.size(); ++i) {
    ASSERT_NEAR(back.pixels[i], img.pixels[i], 0.5 / 255.0 + 1e-6);
    ASSERT_EQ(back.pixels[i] * 255.0f, std::round(back.pixels[i] * 255.0f));
  }
  write_png(b, back);
  std::ifstream fa(a, std::ios::binary), fb(b, std::ios::binary);
  const std::string bytes_a{std::istreambuf_iterator<char>(fa), {}}, bytes_b{std::istreambuf_iterator<char>(fb), {}};
  EXPECT_EQ(bytes_a, bytes_b);
  std::filesystem::remove_all(dir);
}

TEST(Png, RejectsMissingFile) { EXPECT_ANY_THROW(read_png("/nonexistent/vitalspec.png")); }

}  // namespace
}  // namespace vitalspec
