#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "stockmem/backends.hpp"
#include "stockmem/config.hpp"
#include "stockmem/domain.hpp"
#include "stockmem/extraction.hpp"
#include "stockmem/inference.hpp"
#include "stockmem/merging.hpp"
#include "stockmem/metrics.hpp"
#include "stockmem/prompts.hpp"
#include "stockmem/reflection.hpp"
#include "stockmem/retrieval.hpp"
#include "stockmem/store.hpp"
#include "stockmem/taxonomy.hpp"
#include "stockmem/tracking.hpp"

namespace stockmem {

/// One test-day prediction with the evidence behind it.
struct BacktestRecord {
  std::string record_id;  // "<company>@<date>"
  std::string company;
  Date date;
  std::optional<Label> predicted;  // empty on abstention
  Label actual = Label::flat;
  bool scored = false;  // actual is up or down
  std::string reason;
  std::string series_ref;
  std::vector<std::string> event_ids;  // events of the prediction day
  std::vector<EventChain> chains;      // their chains and incremental information
  std::vector<std::string> candidate_ids;  // coarse-screen reflections
  std::vector<std::string> reference_ids;  // reflections kept by the fine filter
  std::string information_digest;
  std::string prompt_digest;

  bool abstained() const { return !predicted.has_value(); }
  bool operator==(const BacktestRecord&) const = default;
};

void to_json(nlohmann::json& j, const BacktestRecord& r);
void from_json(const nlohmann::json& j, BacktestRecord& r);

struct BacktestResult {
  MetricsReport metrics;
  std::vector<BacktestRecord> records;
  LeakageReport leakage;
  std::size_t training_reflections = 0;
  std::size_t online_reflections = 0;
  /// SHA-256 over every prediction prompt digest, in record order.
  std::string run_digest;
};

MetricsReport summarize(const std::vector<Company>& companies,
                        std::span<const BacktestRecord> records);

/// Rolling-window online backtest. The training phase builds event memory and
/// reflections; the test phase walks trading days in order, predicting each
/// day before its label is revealed and folded back into memory.
class Backtester {
 public:
  Backtester(BacktestConfig config, const Taxonomy& taxonomy, const PromptSet& prompts,
             GenerationBackend& generation, EmbeddingBackend& embedding, Store& store,
             AuditLog* audit = nullptr);
  ~Backtester();

  Backtester(const Backtester&) = delete;
  Backtester& operator=(const Backtester&) = delete;

  void ingest(std::span<const NewsDoc> news, std::span<const PriceBar> prices);

  /// Training phase over [train_start, train_end]. Returns reflections added.
  std::size_t build_memory();
  BacktestResult run_test();
  /// build_memory() then run_test().
  BacktestResult run();

  /// Extract, merge, persist and track one company-day.
  DailyEventSet process_day(const Company& company, Date date);
  /// {information} text for a company-day under the configured ablation.
  std::string information_for(const Company& company, Date anchor);
  ChainIndex chain_index(const EventSeries& series) const;

  const BacktestConfig& config() const { return config_; }
  Generator& generator() { return generator_; }

 private:
  struct DayPrediction;

  DayPrediction predict_day(const Company& company, Date date);
  std::vector<SeriesCandidate> memory_before(Date anchor);
  std::vector<Date> all_trading_days(Date first, Date last) const;
  std::vector<NewsDoc> docs_for(const Company& company, Date date) const;
  const Company* company_by_ticker(std::string_view ticker) const;
  std::string delta_summary(const DailyEventSet& day, const ChainIndex& index) const;
  nlohmann::json prediction_context(const DailyEventSet& today, const ChainIndex& index,
                                    std::span<const SeriesCandidate> references) const;
  void run_parallel(const std::function<void(const Company&)>& task);

  BacktestConfig config_;
  const Taxonomy& taxonomy_;
  const PromptSet& prompts_;
  EmbeddingBackend& embedding_;
  Store& store_;
  Generator generator_;
  EventExtractor extractor_;
  EventMerger merger_;
  EventTracker tracker_;
  Reflector reflector_;
  ReferenceFilter filter_;
  Predictor predictor_;

  std::mutex cache_mutex_;
  std::map<std::string, EventSeries> series_cache_;
  std::map<std::string, std::string> information_cache_;
};

/// Human-readable evidence trail for one prediction. Throws
/// PreconditionError for an unknown record id.
std::string report_explainability(std::span<const BacktestRecord> records,
                                  std::string_view record_id, const Store& store);
std::string report_explainability(const BacktestRecord& record, const Store& store);

}  // namespace stockmem
