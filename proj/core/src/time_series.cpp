#include "vitalspec/time_series.hpp"

#include <algorithm>
#include <cmath>

#include "vitalspec/error.hpp"

namespace vitalspec {

TimeSeries::TimeSeries(std::vector<double> values, double dt, std::string unit, std::string subject_id,
                       double start_time)
    : values_(std::move(values)),
      dt_(dt),
      unit_(std::move(unit)),
      subject_id_(std::move(subject_id)),
      start_time_(start_time) {
  if (values_.empty()) throw ValidationError("time series must not be empty");
  if (!(dt_ > 0.0) || !std::isfinite(dt_)) throw ValidationError("sample interval must be positive and finite");
  if (!std::isfinite(start_time_)) throw ValidationError("start time must be finite");
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i]))
      throw ValidationError("non-finite sample at index " + std::to_string(i));
  }
}

double TimeSeries::min() const noexcept { return *std::min_element(values_.begin(), values_.end()); }
double TimeSeries::max() const noexcept { return *std::max_element(values_.begin(), values_.end()); }

TimeSeries TimeSeries::with_values(std::vector<double> values) const {
  return TimeSeries(std::move(values), dt_, unit_, subject_id_, start_time_);
}

TimeSeries resample_linear(const TimeSeries& ts, std::size_t n_out) {
  if (n_out < 2) throw ValidationError("resample_linear: n_out must be at least 2");
  const std::size_t n_in = ts.size();
  if (n_in < 2) throw ValidationError("resample_linear: input needs at least 2 samples");

  const auto in = ts.values();
  std::vector<double> out(n_out);
  const double scale = static_cast<double>(n_in - 1) / static_cast<double>(n_out - 1);
  for (std::size_t i = 0; i < n_out; ++i) {
    const double pos = static_cast<double>(i) * scale;
    std::size_t k = static_cast<std::size_t>(pos);
    if (k >= n_in - 1) k = n_in - 2;
    const double frac = pos - static_cast<double>(k);
    out[i] = in[k] + frac * (in[k + 1] - in[k]);
  }
  out.front() = in.front();
  out.back() = in.back();

  const double extent = static_cast<double>(n_in - 1) * ts.dt();
  return TimeSeries(std::move(out), extent / static_cast<double>(n_out - 1), ts.unit(), ts.subject_id(),
                    ts.start_time());
}

NormalizedSeries normalize(const TimeSeries& ts, const NormalizationSpec& spec) {
  double lo = spec.lo;
  double hi = spec.hi;
  if (spec.mode == NormalizationMode::PerSample) {
    lo = ts.min();
    hi = ts.max();
    if (hi == lo) {
      return {ts.with_values(std::vector<double>(ts.size(), 0.0)), 0};
    }
  } else if (!(hi > lo)) {
    throw ValidationError("normalize: fixed bounds need hi > lo");
  }

  std::vector<double> out(ts.size());
  std::size_t clamped = 0;
  const double width = hi - lo;
  const double mid2 = lo + hi;
  const auto in = ts.values();
  for (std::size_t i = 0; i < in.size(); ++i) {
    double v = (2.0 * in[i] - mid2) / width;
    if (v < -1.0 || v > 1.0) {
      if (spec.mode == NormalizationMode::Fixed) ++clamped;
      v = std::clamp(v, -1.0, 1.0);
    }
    out[i] = v;
  }
  return {ts.with_values(std::move(out)), clamped};
}

}  // namespace vitalspec
