#include "vitalspec/metrics.hpp"

#include <algorithm>
#include <numeric>
#include <vector>

#include "vitalspec/error.hpp"

namespace vitalspec {

std::optional<double> rank_auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw ValidationError("rank_auc: scores and labels differ in length");
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  double positive_rank_sum = 0.0;
  std::size_t n_pos = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j + 1);
    for (std::size_t k = i; k <= j; ++k) {
      if (labels[order[k]] == 1) {
        positive_rank_sum += avg_rank;
        ++n_pos;
      }
    }
    i = j + 1;
  }
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) return std::nullopt;
  const double np = static_cast<double>(n_pos);
  return (positive_rank_sum - np * (np + 1.0) / 2.0) / (np * static_cast<double>(n_neg));
}

MetricsReport compute_metrics(std::span<const int> labels, std::span<const int> predictions,
                              std::span<const double> scores) {
  if (labels.size() != predictions.size() || labels.size() != scores.size())
    throw ValidationError("compute_metrics: inputs differ in length");
  if (labels.empty()) throw ValidationError("compute_metrics: empty evaluation set");

  MetricsReport r;
  r.total = labels.size();
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if ((labels[i] != 0 && labels[i] != 1) || (predictions[i] != 0 && predictions[i] != 1))
      throw ValidationError("compute_metrics: labels and predictions must be 0 or 1");
    ++r.confusion[static_cast<std::size_t>(labels[i])][static_cast<std::size_t>(predictions[i])];
  }

  const double total = static_cast<double>(r.total);
  for (std::size_t c = 0; c < 2; ++c) {
    auto& m = r.per_class[c];
    const double tp = static_cast<double>(r.confusion[c][c]);
    const double predicted = static_cast<double>(r.confusion[0][c] + r.confusion[1][c]);
    m.support = r.confusion[c][0] + r.confusion[c][1];
    m.precision = predicted > 0 ? 100.0 * tp / predicted : 0.0;
    m.recall = m.support > 0 ? 100.0 * tp / static_cast<double>(m.support) : 0.0;
    m.f1 = m.precision + m.recall > 0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
    const double w = static_cast<double>(m.support) / total;
    r.overall.precision += w * m.precision;
    r.overall.recall += w * m.recall;
    r.overall.f1 += w * m.f1;
  }
  r.overall.support = r.total;
  r.accuracy = 100.0 * static_cast<double>(r.confusion[0][0] + r.confusion[1][1]) / total;
  r.auc = rank_auc(scores, labels);
  return r;
}

nlohmann::json to_json(const MetricsReport& r) {
  auto row = [](const ClassMetrics& m) {
    return nlohmann::json{{"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1}, {"support", m.support}};
  };
  nlohmann::json j{{"class_0", row(r.per_class[0])},
                   {"class_1", row(r.per_class[1])},
                   {"overall", row(r.overall)},
                   {"accuracy", r.accuracy},
                   {"confusion", r.confusion},
                   {"total", r.total}};
  if (r.auc) {
    j["auc"] = *r.auc;
    j["auc_defined"] = true;
  } else {
    j["auc"] = nullptr;
    j["auc_defined"] = false;
  }
  return j;
}

}  // namespace vitalspec
