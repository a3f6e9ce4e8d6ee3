#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace vitalspec {

/// Uniformly sampled univariate signal (a vital sign, or any message signal).
///
/// Immutable after construction. The constructor rejects empty input,
/// non-finite samples and a non-positive sample interval.
class TimeSeries {
 public:
  TimeSeries(std::vector<double> values, double dt, std::string unit = {}, std::string subject_id = {},
             double start_time = 0.0);

  std::span<const double> values() const noexcept { return values_; }
  double operator[](std::size_t i) const noexcept { return values_[i]; }
  std::size_t size() const noexcept { return values_.size(); }
  double dt() const noexcept { return dt_; }
  const std::string& unit() const noexcept { return unit_; }
  const std::string& subject_id() const noexcept { return subject_id_; }
  double start_time() const noexcept { return start_time_; }

  // Each sample is taken to cover one interval, so n samples span n*dt seconds.
  double duration() const noexcept { return static_cast<double>(values_.size()) * dt_; }

  double min() const noexcept;
  double max() const noexcept;

  // Same metadata, new samples.
  TimeSeries with_values(std::vector<double> values) const;

 private:
  std::vector<double> values_;
  double dt_;
  std::string unit_;
  std::string subject_id_;
  double start_time_;
};

enum class NormalizationMode { PerSample, Fixed };

struct NormalizationSpec {
  double lo = -1.0;
  double hi = 1.0;
  NormalizationMode mode = NormalizationMode::PerSample;

  static NormalizationSpec per_sample() { return {}; }
  static NormalizationSpec fixed(double lo, double hi) { return {lo, hi, NormalizationMode::Fixed}; }
};

struct NormalizedSeries {
  TimeSeries series;
  // Fixed mode only: number of samples outside [lo, hi] that were clamped to +-1.
  std::size_t clamped = 0;
};

/// Linear interpolation onto n_out evenly spaced points over the same time extent
/// (first sample to last sample). Endpoints are reproduced exactly.
TimeSeries resample_linear(const TimeSeries& ts, std::size_t n_out);

/// Affine map x -> 2(x - lo)/(hi - lo) - 1. In PerSample mode lo/hi are the
/// series' own min/max and a constant series maps to all zeros.
NormalizedSeries normalize(const TimeSeries& ts, const NormalizationSpec& spec);

}  // namespace vitalspec
