#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "stockmem/taxonomy.hpp"

namespace stockmem {

/// Calendar date at day resolution, stored as days since 1970-01-01.
class Date {
 public:
  constexpr Date() = default;
  constexpr explicit Date(std::int32_t serial) : serial_(serial) {}
  Date(int year, unsigned month, unsigned day);

  /// Parses YYYY-MM-DD; throws ParseError.
  static Date parse(std::string_view iso);
  static constexpr Date min() { return Date(INT32_MIN / 2); }
  static constexpr Date max() { return Date(INT32_MAX / 2); }

  std::string str() const;
  constexpr std::int32_t serial() const { return serial_; }
  constexpr Date next() const { return Date(serial_ + 1); }
  constexpr Date prev() const { return Date(serial_ - 1); }
  constexpr Date plus_days(int n) const { return Date(serial_ + n); }
  /// 0 = Monday ... 6 = Sunday.
  int weekday() const;

  constexpr auto operator<=>(const Date&) const = default;

 private:
  std::int32_t serial_ = 0;
};

enum class Label { up, down, flat };
enum class Polarity { more_positive, more_negative, neutral };

std::string_view to_string(Label label);
std::string_view to_string(Polarity polarity);
Label label_from_string(std::string_view text);
Polarity polarity_from_string(std::string_view text);

/// Returns above +1% are up, below -1% down; the closed interval [-1%, 1%] is
/// flat. Throws PreconditionError on non-finite input.
Label label_return(double daily_return);

/// Fixed-width occurrence bitmap.
class BitVector {
 public:
  BitVector() = default;
  explicit BitVector(std::size_t size);

  std::size_t size() const { return size_; }
  void set(std::size_t index, bool value = true);
  bool test(std::size_t index) const;
  std::size_t count() const;
  bool none() const { return count() == 0; }
  const std::vector<std::uint64_t>& words() const { return words_; }

  /// "0101..." with index 0 first.
  std::string to_string() const;
  static BitVector from_string(std::string_view bits);

  bool operator==(const BitVector&) const = default;

 private:
  std::size_t size_ = 0;
  std::vector<std::uint64_t> words_;
};

struct NewsDoc {
  std::string doc_id;
  std::string company;
  Date date;
  std::string title;
  std::string body;

  bool operator==(const NewsDoc&) const = default;
};

struct Event {
  std::string event_id;
  std::string company;
  EventGroup group;
  EventType type;
  Date time;
  std::optional<std::string> location;
  std::vector<std::string> entities;
  std::vector<std::string> industries;
  std::vector<std::string> companies;
  std::map<std::string, std::string> open_params;
  std::string description;
  std::vector<std::string> source_docs;
  std::optional<std::vector<float>> embedding;

  bool operator==(const Event&) const = default;
};

inline constexpr std::size_t kMaxChainDepth = 5;

struct EventChain {
  std::string company;
  Date date;  // the head event's date
  std::string head;
  std::vector<std::string> predecessors;  // most recent first
  std::vector<Date> predecessor_dates;    // parallel to predecessors
  std::string delta_info;
  Polarity delta_polarity = Polarity::neutral;

  std::size_t depth() const { return predecessors.size(); }
  bool operator==(const EventChain&) const = default;
};

struct DailyEventSet {
  std::string company;
  Date date;
  std::vector<Event> events;
  BitVector type_vector{kTypeCount};
  BitVector group_vector{kGroupCount};

  /// Rebuilds both occurrence vectors from `events`.
  void recompute_vectors(const Taxonomy& taxonomy);
  bool operator==(const DailyEventSet&) const = default;
};

DailyEventSet make_daily_set(std::string company, Date date, std::vector<Event> events,
                             const Taxonomy& taxonomy);

/// w+1 consecutive trading days ending at the anchor.
struct EventSeries {
  std::string company;
  Date anchor_date;
  int window = 0;
  std::vector<DailyEventSet> days;  // chronological, size window + 1

  std::string ref() const;
  bool operator==(const EventSeries&) const = default;
};

std::string series_ref(std::string_view company, Date anchor, int window);

struct Reflection {
  std::string reflection_id;
  std::string company;
  Date anchor_date;
  std::string series_ref;
  std::string delta_info;
  Label realized_move = Label::flat;
  std::string reason;
  std::string key_events;

  bool operator==(const Reflection&) const = default;
};

struct PriceBar {
  std::string company;
  Date date;
  double daily_return = 0.0;

  bool operator==(const PriceBar&) const = default;
};

struct Company {
  std::string ticker;
  std::string name;  // display name used in prompts
};

void to_json(nlohmann::json& j, const Date& d);
void from_json(const nlohmann::json& j, Date& d);
void to_json(nlohmann::json& j, const Label& l);
void from_json(const nlohmann::json& j, Label& l);
void to_json(nlohmann::json& j, const Polarity& p);
void from_json(const nlohmann::json& j, Polarity& p);
void to_json(nlohmann::json& j, const BitVector& b);
void from_json(const nlohmann::json& j, BitVector& b);
void to_json(nlohmann::json& j, const EventGroup& g);
void from_json(const nlohmann::json& j, EventGroup& g);
void to_json(nlohmann::json& j, const EventType& t);
void from_json(const nlohmann::json& j, EventType& t);
void to_json(nlohmann::json& j, const NewsDoc& d);
void from_json(const nlohmann::json& j, NewsDoc& d);
void to_json(nlohmann::json& j, const Event& e);
void from_json(const nlohmann::json& j, Event& e);
void to_json(nlohmann::json& j, const EventChain& c);
void from_json(const nlohmann::json& j, EventChain& c);
void to_json(nlohmann::json& j, const DailyEventSet& s);
void from_json(const nlohmann::json& j, DailyEventSet& s);
void to_json(nlohmann::json& j, const EventSeries& s);
void from_json(const nlohmann::json& j, EventSeries& s);
void to_json(nlohmann::json& j, const Reflection& r);
void from_json(const nlohmann::json& j, Reflection& r);
void to_json(nlohmann::json& j, const PriceBar& p);
void from_json(const nlohmann::json& j, PriceBar& p);
void to_json(nlohmann::json& j, const Company& c);
void from_json(const nlohmann::json& j, Company& c);

/// Checks the chain invariants that need no outside context: depth bound,
/// strictly decreasing predecessor dates, and dates before the head.
/// Returns a description of the first violation.
std::optional<std::string> check_chain(const EventChain& chain);

}  // namespace stockmem
