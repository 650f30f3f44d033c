#include "stockmem/domain.hpp"

#include <bit>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>

#include "stockmem/errors.hpp"

namespace stockmem {

namespace chr = std::chrono;

Date::Date(int year, unsigned month, unsigned day) {
  chr::year_month_day ymd{chr::year{year}, chr::month{month}, chr::day{day}};
  if (!ymd.ok()) throw ParseError("invalid calendar date");
  serial_ = static_cast<std::int32_t>(chr::sys_days{ymd}.time_since_epoch().count());
}

Date Date::parse(std::string_view iso) {
  auto fail = [&] { return ParseError("invalid date \"" + std::string(iso) + "\", expected YYYY-MM-DD"); };
  if (iso.size() != 10 || iso[4] != '-' || iso[7] != '-') throw fail();
  int y = 0;
  unsigned m = 0;
  unsigned d = 0;
  auto parse_part = [&](std::size_t pos, std::size_t len, auto& out) {
    auto res = std::from_chars(iso.data() + pos, iso.data() + pos + len, out);
    if (res.ec != std::errc{} || res.ptr != iso.data() + pos + len) throw fail();
  };
  parse_part(0, 4, y);
  parse_part(5, 2, m);
  parse_part(8, 2, d);
  chr::year_month_day ymd{chr::year{y}, chr::month{m}, chr::day{d}};
  if (!ymd.ok()) throw fail();
  return Date(static_cast<std::int32_t>(chr::sys_days{ymd}.time_since_epoch().count()));
}

std::string Date::str() const {
  chr::year_month_day ymd{chr::sys_days{chr::days{serial_}}};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

int Date::weekday() const {
  chr::weekday wd{chr::sys_days{chr::days{serial_}}};
  return static_cast<int>(wd.iso_encoding()) - 1;
}

std::string_view to_string(Label label) {
  switch (label) {
    case Label::up:
      return "up";
    case Label::down:
      return "down";
    case Label::flat:
      return "flat";
  }
  return "flat";
}

std::string_view to_string(Polarity polarity) {
  switch (polarity) {
    case Polarity::more_positive:
      return "more_positive";
    case Polarity::more_negative:
      return "more_negative";
    case Polarity::neutral:
      return "neutral";
  }
  return "neutral";
}

Label label_from_string(std::string_view text) {
  if (text == "up") return Label::up;
  if (text == "down") return Label::down;
  if (text == "flat") return Label::flat;
  throw ParseError("unknown label: " + std::string(text));
}

Polarity polarity_from_string(std::string_view text) {
  if (text == "more_positive" || text == "more positive") return Polarity::more_positive;
  if (text == "more_negative" || text == "more negative") return Polarity::more_negative;
  if (text == "neutral") return Polarity::neutral;
  throw ParseError("unknown polarity: " + std::string(text));
}

Label label_return(double daily_return) {
  if (!std::isfinite(daily_return)) throw PreconditionError("daily return must be finite");
  if (daily_return > 0.01) return Label::up;
  if (daily_return < -0.01) return Label::down;
  return Label::flat;
}

// BitVector -------------------------------------------------------------------

BitVector::BitVector(std::size_t size) : size_(size), words_((size + 63) / 64, 0) {}

void BitVector::set(std::size_t index, bool value) {
  if (index >= size_) throw PreconditionError("bit index out of range");
  auto mask = std::uint64_t{1} << (index % 64);
  if (value) {
    words_[index / 64] |= mask;
  } else {
    words_[index / 64] &= ~mask;
  }
}

bool BitVector::test(std::size_t index) const {
  if (index >= size_) throw PreconditionError("bit index out of range");
  return (words_[index / 64] >> (index % 64)) & 1U;
}

std::size_t BitVector::count() const {
  std::size_t n = 0;
  for (auto w : words_) n += static_cast<std::size_t>(std::popcount(w));
  return n;
}

std::string BitVector::to_string() const {
  std::string out(size_, '0');
  for (std::size_t i = 0; i < size_; ++i) {
    if (test(i)) out[i] = '1';
  }
  return out;
}

BitVector BitVector::from_string(std::string_view bits) {
  BitVector v(bits.size());
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (bits[i] == '1') {
      v.set(i);
    } else if (bits[i] != '0') {
      throw ParseError("bit string may only contain 0 and 1");
    }
  }
  return v;
}

// Daily sets -------------------------------------------------------------------

void DailyEventSet::recompute_vectors(const Taxonomy& taxonomy) {
  type_vector = BitVector(taxonomy.type_count());
  group_vector = BitVector(taxonomy.group_count());
  for (const auto& e : events) {
    type_vector.set(static_cast<std::size_t>(e.type.id));
    group_vector.set(static_cast<std::size_t>(e.group.id));
  }
}

DailyEventSet make_daily_set(std::string company, Date date, std::vector<Event> events,
                             const Taxonomy& taxonomy) {
  DailyEventSet day;
  day.company = std::move(company);
  day.date = date;
  day.events = std::move(events);
  day.recompute_vectors(taxonomy);
  return day;
}

std::string series_ref(std::string_view company, Date anchor, int window) {
  return std::string(company) + "@" + anchor.str() + "/w" + std::to_string(window);
}

std::string EventSeries::ref() const { return series_ref(company, anchor_date, window); }

std::optional<std::string> check_chain(const EventChain& chain) {
  if (chain.predecessors.size() > kMaxChainDepth) {
    return "chain depth " + std::to_string(chain.predecessors.size()) + " exceeds " +
           std::to_string(kMaxChainDepth);
  }
  if (chain.predecessor_dates.size() != chain.predecessors.size()) {
    return "predecessor dates do not match predecessors";
  }
  Date last = chain.date;
  for (auto d : chain.predecessor_dates) {
    if (!(d < last)) return "predecessor dates are not strictly decreasing";
    last = d;
  }
  return std::nullopt;
}

// JSON -------------------------------------------------------------------------

void to_json(nlohmann::json& j, const Date& d) { j = d.str(); }
void from_json(const nlohmann::json& j, Date& d) { d = Date::parse(j.get<std::string>()); }
void to_json(nlohmann::json& j, const Label& l) { j = std::string(to_string(l)); }
void from_json(const nlohmann::json& j, Label& l) { l = label_from_string(j.get<std::string>()); }
void to_json(nlohmann::json& j, const Polarity& p) { j = std::string(to_string(p)); }
void from_json(const nlohmann::json& j, Polarity& p) {
  p = polarity_from_string(j.get<std::string>());
}
void to_json(nlohmann::json& j, const BitVector& b) { j = b.to_string(); }
void from_json(const nlohmann::json& j, BitVector& b) {
  b = BitVector::from_string(j.get<std::string>());
}

void to_json(nlohmann::json& j, const EventGroup& g) { j = {{"id", g.id}, {"name", g.name}}; }
void from_json(const nlohmann::json& j, EventGroup& g) {
  j.at("id").get_to(g.id);
  j.at("name").get_to(g.name);
}
void to_json(nlohmann::json& j, const EventType& t) {
  j = {{"id", t.id}, {"name", t.name}, {"group", t.group}};
}
void from_json(const nlohmann::json& j, EventType& t) {
  j.at("id").get_to(t.id);
  j.at("name").get_to(t.name);
  j.at("group").get_to(t.group);
}

void to_json(nlohmann::json& j, const NewsDoc& d) {
  j = {{"doc_id", d.doc_id}, {"company", d.company}, {"date", d.date},
       {"title", d.title},   {"body", d.body}};
}
void from_json(const nlohmann::json& j, NewsDoc& d) {
  j.at("doc_id").get_to(d.doc_id);
  j.at("company").get_to(d.company);
  j.at("date").get_to(d.date);
  d.title = j.value("title", "");
  d.body = j.value("body", "");
}

void to_json(nlohmann::json& j, const Event& e) {
  j = {{"event_id", e.event_id},
       {"company", e.company},
       {"group", e.group},
       {"type", e.type},
       {"time", e.time},
       {"location", e.location ? nlohmann::json(*e.location) : nlohmann::json(nullptr)},
       {"entities", e.entities},
       {"industries", e.industries},
       {"companies", e.companies},
       {"open_params", e.open_params},
       {"description", e.description},
       {"source_docs", e.source_docs}};
  if (e.embedding) j["embedding"] = *e.embedding;
}
void from_json(const nlohmann::json& j, Event& e) {
  j.at("event_id").get_to(e.event_id);
  e.company = j.value("company", "");
  j.at("group").get_to(e.group);
  j.at("type").get_to(e.type);
  j.at("time").get_to(e.time);
  if (j.contains("location") && j["location"].is_string()) {
    e.location = j["location"].get<std::string>();
  } else {
    e.location.reset();
  }
  e.entities = j.value("entities", std::vector<std::string>{});
  e.industries = j.value("industries", std::vector<std::string>{});
  e.companies = j.value("companies", std::vector<std::string>{});
  e.open_params = j.value("open_params", std::map<std::string, std::string>{});
  j.at("description").get_to(e.description);
  e.source_docs = j.value("source_docs", std::vector<std::string>{});
  if (j.contains("embedding") && j["embedding"].is_array()) {
    e.embedding = j["embedding"].get<std::vector<float>>();
  } else {
    e.embedding.reset();
  }
}

void to_json(nlohmann::json& j, const EventChain& c) {
  j = {{"company", c.company},
       {"date", c.date},
       {"head", c.head},
       {"predecessors", c.predecessors},
       {"predecessor_dates", c.predecessor_dates},
       {"delta_info", c.delta_info},
       {"delta_polarity", c.delta_polarity}};
}
void from_json(const nlohmann::json& j, EventChain& c) {
  j.at("company").get_to(c.company);
  j.at("date").get_to(c.date);
  j.at("head").get_to(c.head);
  j.at("predecessors").get_to(c.predecessors);
  j.at("predecessor_dates").get_to(c.predecessor_dates);
  j.at("delta_info").get_to(c.delta_info);
  j.at("delta_polarity").get_to(c.delta_polarity);
}

void to_json(nlohmann::json& j, const DailyEventSet& s) {
  j = {{"company", s.company},
       {"date", s.date},
       {"events", s.events},
       {"type_vector", s.type_vector},
       {"group_vector", s.group_vector}};
}
void from_json(const nlohmann::json& j, DailyEventSet& s) {
  j.at("company").get_to(s.company);
  j.at("date").get_to(s.date);
  j.at("events").get_to(s.events);
  j.at("type_vector").get_to(s.type_vector);
  j.at("group_vector").get_to(s.group_vector);
}

void to_json(nlohmann::json& j, const EventSeries& s) {
  j = {{"company", s.company}, {"anchor_date", s.anchor_date}, {"window", s.window}, {"days", s.days}};
}
void from_json(const nlohmann::json& j, EventSeries& s) {
  j.at("company").get_to(s.company);
  j.at("anchor_date").get_to(s.anchor_date);
  j.at("window").get_to(s.window);
  j.at("days").get_to(s.days);
}

void to_json(nlohmann::json& j, const Reflection& r) {
  j = {{"reflection_id", r.reflection_id},
       {"company", r.company},
       {"anchor_date", r.anchor_date},
       {"series_ref", r.series_ref},
       {"delta_info", r.delta_info},
       {"realized_move", r.realized_move},
       {"reason", r.reason},
       {"key_events", r.key_events}};
}
void from_json(const nlohmann::json& j, Reflection& r) {
  j.at("reflection_id").get_to(r.reflection_id);
  j.at("company").get_to(r.company);
  j.at("anchor_date").get_to(r.anchor_date);
  j.at("series_ref").get_to(r.series_ref);
  j.at("delta_info").get_to(r.delta_info);
  j.at("realized_move").get_to(r.realized_move);
  j.at("reason").get_to(r.reason);
  j.at("key_events").get_to(r.key_events);
}

void to_json(nlohmann::json& j, const PriceBar& p) {
  j = {{"company", p.company}, {"date", p.date}, {"daily_return", p.daily_return}};
}
void from_json(const nlohmann::json& j, PriceBar& p) {
  j.at("company").get_to(p.company);
  j.at("date").get_to(p.date);
  j.at("daily_return").get_to(p.daily_return);
}

void to_json(nlohmann::json& j, const Company& c) { j = {{"ticker", c.ticker}, {"name", c.name}}; }
void from_json(const nlohmann::json& j, Company& c) {
  j.at("ticker").get_to(c.ticker);
  c.name = j.value("name", c.ticker);
}

}  // namespace stockmem
