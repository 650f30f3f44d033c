#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include "stockmem/domain.hpp"
#include "stockmem/taxonomy.hpp"

namespace stockmem {

enum class RecordKind { events, chains, reflections, days, series };

std::string_view to_string(RecordKind kind);

/// Every pipeline read is an as-of read: only records dated strictly before
/// `upper_bound` come back.
struct AsOfQuery {
  RecordKind kind = RecordKind::events;
  std::optional<std::string> company;
  Date upper_bound = Date::max();
};

/// Exclusive read limits in force while a prediction is being assembled.
struct AuditHorizon {
  Date events_bound = Date::max();       // events, chains, days, series
  Date reflections_bound = Date::max();  // reflections
};

struct QueryTrace {
  RecordKind kind = RecordKind::events;
  std::optional<std::string> company;
  Date upper_bound;
  Date horizon;
  std::size_t returned = 0;
  std::optional<Date> max_returned_date;
  bool violation = false;
};

struct LeakageReport {
  std::size_t audited_queries = 0;
  std::size_t violations = 0;
  std::vector<QueryTrace> traces;  // audited queries only
};

/// Trading days for one company, derived from its price table.
class TradingCalendar {
 public:
  TradingCalendar() = default;
  explicit TradingCalendar(std::vector<Date> days);

  const std::vector<Date>& days() const { return days_; }
  std::optional<std::size_t> index_of(Date date) const;
  /// First trading day strictly after `date`.
  std::optional<Date> next(Date date) const;
  /// First trading day on or after `date`.
  std::optional<Date> on_or_after(Date date) const;
  /// The trading day `n` positions before `date` (which must be a trading day).
  std::optional<Date> back(Date date, std::size_t n) const;
  std::vector<Date> between(Date first, Date last) const;  // inclusive

 private:
  std::vector<Date> days_;
};

/// Append-only persistence with as-of query semantics.
///
/// Layout under the root directory, one subdirectory per company:
///   <company>/news.jsonl         NewsDoc per line
///   <company>/prices.jsonl       PriceBar per line
///   <company>/events.jsonl       Event per line (embedding stripped)
///   <company>/embeddings.tsv     event_id <TAB> space-separated floats, 9 significant digits
///   <company>/chains.jsonl       EventChain per line
///   <company>/days.jsonl         {company, date, event_ids, type_vector, group_vector}
///   <company>/reflections.jsonl  Reflection per line
/// A record re-put with identical content is a no-op; different content under
/// an existing id is appended as a newer version and shadows the old one.
///
/// Single writer, many readers.
class Store {
 public:
  /// Memory-only store.
  explicit Store(const Taxonomy& taxonomy);
  /// Opens (creating if needed) a persistent store and loads its contents.
  Store(const Taxonomy& taxonomy, std::filesystem::path root);
  ~Store();

  Store(const Store&) = delete;
  Store& operator=(const Store&) = delete;

  const std::optional<std::filesystem::path>& root() const { return root_; }
  const Taxonomy& taxonomy() const { return taxonomy_; }

  std::string put(const NewsDoc& doc);
  std::string put(const PriceBar& bar);
  std::string put(const Event& event);
  std::string put(const EventChain& chain);
  /// Puts the set's events too.
  std::string put(const DailyEventSet& day);
  std::string put(const Reflection& reflection);

  std::vector<Event> events(const AsOfQuery& query) const;
  std::vector<EventChain> chains(const AsOfQuery& query) const;
  std::vector<DailyEventSet> days(const AsOfQuery& query) const;
  std::vector<Reflection> reflections(const AsOfQuery& query) const;

  /// The w+1 trading-day series ending at `anchor`, or nullopt when fewer
  /// than `window` trading days precede it. Days without stored events are
  /// empty sets. Audited as a `series` read bounded by `upper_bound`.
  std::optional<EventSeries> series(std::string_view company, Date anchor, int window,
                                    Date upper_bound) const;

  /// Id lookups are audited against the current horizon as well.
  std::optional<Event> event(std::string_view event_id) const;
  std::optional<EventChain> chain(std::string_view head_event_id) const;

  std::vector<NewsDoc> news(std::string_view company, Date date) const;
  std::vector<NewsDoc> news(std::string_view company) const;
  std::vector<PriceBar> prices(std::string_view company) const;
  std::optional<double> daily_return(std::string_view company, Date date) const;
  TradingCalendar calendar(std::string_view company) const;
  std::vector<std::string> companies() const;

  std::size_t reflection_count() const;
  std::size_t event_count() const;

  void set_horizon(std::optional<AuditHorizon> horizon);
  LeakageReport leakage_report() const;
  void reset_leakage_report();

 private:
  struct Partition;

  Partition& partition(const std::string& company);
  const Partition* find_partition(std::string_view company) const;
  void append_line(const std::string& company, std::string_view file, const std::string& line);
  void load();
  void audit(RecordKind kind, const std::optional<std::string>& company, Date upper_bound,
             std::size_t returned, std::optional<Date> max_date) const;
  std::vector<Event> events_locked(const AsOfQuery& query) const;
  DailyEventSet hydrate_day(const Partition& part, Date date) const;

  const Taxonomy& taxonomy_;
  std::optional<std::filesystem::path> root_;
  mutable std::shared_mutex mutex_;
  std::map<std::string, std::unique_ptr<Partition>, std::less<>> partitions_;
  std::map<std::string, std::string, std::less<>> event_owner_;  // event_id -> company

  mutable std::mutex audit_mutex_;
  std::optional<AuditHorizon> horizon_;
  mutable LeakageReport leakage_;
};

/// Installs an audit horizon for its lifetime.
class HorizonScope {
 public:
  HorizonScope(Store& store, AuditHorizon horizon) : store_(store) { store_.set_horizon(horizon); }
  ~HorizonScope() { store_.set_horizon(std::nullopt); }
  HorizonScope(const HorizonScope&) = delete;
  HorizonScope& operator=(const HorizonScope&) = delete;

 private:
  Store& store_;
};

}  // namespace stockmem
