#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>

#include <nlohmann/json.hpp>

namespace vitalspec {

struct ClassMetrics {
  double precision = 0.0;  // percent
  double recall = 0.0;     // percent
  double f1 = 0.0;         // percent
  std::size_t support = 0;
};

/// Per-class rows for labels 0 and 1, a support-weighted overall row,
/// accuracy in percent and ROC AUC. Precision of a class that is never
/// predicted is reported as 0.
struct MetricsReport {
  std::array<ClassMetrics, 2> per_class;
  ClassMetrics overall;
  double accuracy = 0.0;
  std::optional<double> auc;  // empty when only one class is present
  // confusion[true][pred]
  std::array<std::array<std::size_t, 2>, 2> confusion{};
  std::size_t total = 0;
};

/// AUC as the Mann-Whitney rank statistic with average ranks for ties.
/// Returns nullopt if either class is absent.
std::optional<double> rank_auc(std::span<const double> scores, std::span<const int> labels);

MetricsReport compute_metrics(std::span<const int> labels, std::span<const int> predictions,
                              std::span<const double> scores);

nlohmann::json to_json(const MetricsReport& r);

}  // namespace vitalspec
