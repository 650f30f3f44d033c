#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "stockmem/domain.hpp"

namespace stockmem {

/// "up" is the positive class.
struct ConfusionMatrix {
  std::int64_t tp = 0;
  std::int64_t tn = 0;
  std::int64_t fp = 0;
  std::int64_t fn = 0;

  /// An empty prediction (abstention) counts as wrong. Flat actuals are not
  /// scored and must be filtered by the caller.
  void add(std::optional<Label> predicted, Label actual);
  std::int64_t total() const { return tp + tn + fp + fn; }
  ConfusionMatrix& operator+=(const ConfusionMatrix& other);
  bool operator==(const ConfusionMatrix&) const = default;
};

/// (TP + TN) / total; 0 for an empty matrix.
double accuracy(const ConfusionMatrix& cm);

/// (TP*TN - FP*FN) / sqrt((TP+FP)(TP+FN)(TN+FP)(TN+FN)); 0 when any factor
/// of the denominator is zero.
double compute_mcc(const ConfusionMatrix& cm);

struct CompanyMetrics {
  std::string company;
  ConfusionMatrix confusion;
  double acc = 0.0;
  double mcc = 0.0;
  std::int64_t abstentions = 0;
  std::int64_t flat_skipped = 0;
};

struct MetricsReport {
  std::vector<CompanyMetrics> per_company;
  double avg_acc = 0.0;  // mean over companies
  double avg_mcc = 0.0;
  ConfusionMatrix pooled;
  double pooled_acc = 0.0;
  double pooled_mcc = 0.0;
  std::int64_t abstentions = 0;
};

void to_json(nlohmann::json& j, const ConfusionMatrix& cm);
void to_json(nlohmann::json& j, const CompanyMetrics& m);
void to_json(nlohmann::json& j, const MetricsReport& r);

}  // namespace stockmem
