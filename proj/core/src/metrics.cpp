#include "stockmem/metrics.hpp"

#include <cmath>

#include "stockmem/errors.hpp"

namespace stockmem {

void ConfusionMatrix::add(std::optional<Label> predicted, Label actual) {
  if (actual == Label::flat) throw PreconditionError("flat days are not scored");
  if (predicted == Label::flat) throw PreconditionError("predictions are up or down");
  const bool actual_up = actual == Label::up;
  if (!predicted) {
    // Abstention: whatever the truth was, the call was wrong.
    if (actual_up) {
      ++fn;
    } else {
      ++fp;
    }
    return;
  }
  const bool predicted_up = *predicted == Label::up;
  if (predicted_up && actual_up) {
    ++tp;
  } else if (!predicted_up && !actual_up) {
    ++tn;
  } else if (predicted_up) {
    ++fp;
  } else {
    ++fn;
  }
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& other) {
  tp += other.tp;
  tn += other.tn;
  fp += other.fp;
  fn += other.fn;
  return *this;
}

double accuracy(const ConfusionMatrix& cm) {
  if (cm.total() == 0) return 0.0;
  return static_cast<double>(cm.tp + cm.tn) / static_cast<double>(cm.total());
}

double compute_mcc(const ConfusionMatrix& cm) {
  const double tp = static_cast<double>(cm.tp);
  const double tn = static_cast<double>(cm.tn);
  const double fp = static_cast<double>(cm.fp);
  const double fn = static_cast<double>(cm.fn);
  const double denom = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn);
  if (denom == 0.0) return 0.0;
  return (tp * tn - fp * fn) / std::sqrt(denom);
}

void to_json(nlohmann::json& j, const ConfusionMatrix& cm) {
  j = {{"tp", cm.tp}, {"tn", cm.tn}, {"fp", cm.fp}, {"fn", cm.fn}};
}

void to_json(nlohmann::json& j, const CompanyMetrics& m) {
  j = {{"company", m.company},         {"acc", m.acc},
       {"mcc", m.mcc},                 {"confusion", m.confusion},
       {"abstentions", m.abstentions}, {"flat_skipped", m.flat_skipped}};
}

void to_json(nlohmann::json& j, const MetricsReport& r) {
  j = {{"per_company", r.per_company}, {"avg_acc", r.avg_acc},       {"avg_mcc", r.avg_mcc},
       {"pooled", r.pooled},           {"pooled_acc", r.pooled_acc}, {"pooled_mcc", r.pooled_mcc},
       {"abstentions", r.abstentions}};
}

}  // namespace stockmem
