#include "stockmem/store.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <tuple>

#include <nlohmann/json.hpp>

#include "stockmem/errors.hpp"

namespace stockmem {

namespace fs = std::filesystem;

std::string_view to_string(RecordKind kind) {
  switch (kind) {
    case RecordKind::events:
      return "events";
    case RecordKind::chains:
      return "chains";
    case RecordKind::reflections:
      return "reflections";
    case RecordKind::days:
      return "days";
    case RecordKind::series:
      return "series";
  }
  return "events";
}

// Calendar ---------------------------------------------------------------------

TradingCalendar::TradingCalendar(std::vector<Date> days) : days_(std::move(days)) {
  std::sort(days_.begin(), days_.end());
  days_.erase(std::unique(days_.begin(), days_.end()), days_.end());
}

std::optional<std::size_t> TradingCalendar::index_of(Date date) const {
  auto it = std::lower_bound(days_.begin(), days_.end(), date);
  if (it == days_.end() || *it != date) return std::nullopt;
  return static_cast<std::size_t>(it - days_.begin());
}

std::optional<Date> TradingCalendar::next(Date date) const {
  auto it = std::upper_bound(days_.begin(), days_.end(), date);
  if (it == days_.end()) return std::nullopt;
  return *it;
}

std::optional<Date> TradingCalendar::on_or_after(Date date) const {
  auto it = std::lower_bound(days_.begin(), days_.end(), date);
  if (it == days_.end()) return std::nullopt;
  return *it;
}

std::optional<Date> TradingCalendar::back(Date date, std::size_t n) const {
  auto idx = index_of(date);
  if (!idx || *idx < n) return std::nullopt;
  return days_[*idx - n];
}

std::vector<Date> TradingCalendar::between(Date first, Date last) const {
  auto lo = std::lower_bound(days_.begin(), days_.end(), first);
  auto hi = std::upper_bound(days_.begin(), days_.end(), last);
  return {lo, hi};
}

// Store ------------------------------------------------------------------------

struct DayRecord {
  std::vector<std::string> event_ids;
  BitVector type_vector;
  BitVector group_vector;
  bool operator==(const DayRecord&) const = default;
};

struct Store::Partition {
  std::map<std::string, NewsDoc> news;
  std::map<Date, PriceBar> prices;
  std::map<std::string, Event> events;
  std::map<std::string, EventChain> chains;
  std::map<Date, DayRecord> days;
  std::map<std::string, Reflection> reflections;
};

namespace {

std::string format_vector(const std::vector<float>& v) {
  std::string out;
  char buf[32];
  for (std::size_t i = 0; i < v.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.9g", static_cast<double>(v[i]));
    if (i > 0) out.push_back(' ');
    out += buf;
  }
  return out;
}

std::vector<float> parse_vector(const std::string& text) {
  std::vector<float> v;
  std::istringstream in(text);
  float x = 0;
  while (in >> x) v.push_back(x);
  return v;
}

nlohmann::json day_json(const std::string& company, Date date, const DayRecord& day) {
  return {{"company", company},
          {"date", date},
          {"event_ids", day.event_ids},
          {"type_vector", day.type_vector},
          {"group_vector", day.group_vector}};
}

}  // namespace

Store::Store(const Taxonomy& taxonomy) : taxonomy_(taxonomy) {}

Store::Store(const Taxonomy& taxonomy, fs::path root) : taxonomy_(taxonomy), root_(std::move(root)) {
  std::error_code ec;
  fs::create_directories(*root_, ec);
  if (ec) throw StoreError("cannot create store directory " + root_->string() + ": " + ec.message());
  load();
}

Store::~Store() = default;

Store::Partition& Store::partition(const std::string& company) {
  if (company.empty()) throw InvariantViolation("record has no company");
  auto it = partitions_.find(company);
  if (it == partitions_.end()) {
    it = partitions_.emplace(company, std::make_unique<Partition>()).first;
  }
  return *it->second;
}

const Store::Partition* Store::find_partition(std::string_view company) const {
  auto it = partitions_.find(company);
  return it == partitions_.end() ? nullptr : it->second.get();
}

void Store::append_line(const std::string& company, std::string_view file, const std::string& line) {
  if (!root_) return;
  auto dir = *root_ / company;
  std::error_code ec;
  fs::create_directories(dir, ec);
  std::ofstream out(dir / file, std::ios::app);
  if (!out) throw StoreError("cannot write " + (dir / file).string());
  out << line << '\n';
  if (!out) throw StoreError("write failed for " + (dir / file).string());
}

std::string Store::put(const NewsDoc& doc) {
  if (doc.doc_id.empty()) throw InvariantViolation("news document has no doc_id");
  std::unique_lock lock(mutex_);
  auto& part = partition(doc.company);
  auto it = part.news.find(doc.doc_id);
  if (it != part.news.end() && it->second == doc) return doc.doc_id;
  part.news[doc.doc_id] = doc;
  append_line(doc.company, "news.jsonl", nlohmann::json(doc).dump());
  return doc.doc_id;
}

std::string Store::put(const PriceBar& bar) {
  if (!std::isfinite(bar.daily_return)) throw InvariantViolation("price bar return is not finite");
  std::unique_lock lock(mutex_);
  auto& part = partition(bar.company);
  auto it = part.prices.find(bar.date);
  std::string id = bar.company + "@" + bar.date.str();
  if (it != part.prices.end() && it->second == bar) return id;
  part.prices[bar.date] = bar;
  append_line(bar.company, "prices.jsonl", nlohmann::json(bar).dump());
  return id;
}

std::string Store::put(const Event& event) {
  if (event.event_id.empty()) throw InvariantViolation("event has no id");
  if (event.description.empty()) throw InvariantViolation("event " + event.event_id + " has no description");
  if (event.type.id < 0 || static_cast<std::size_t>(event.type.id) >= taxonomy_.type_count() ||
      taxonomy_.type(event.type.id).name != event.type.name) {
    throw InvariantViolation("event " + event.event_id + " has a type outside the taxonomy");
  }
  if (event.group.id != event.type.group || taxonomy_.group(event.group.id).name != event.group.name) {
    throw InvariantViolation("event " + event.event_id + " group does not match its type");
  }
  std::unique_lock lock(mutex_);
  auto owner = event_owner_.find(event.event_id);
  if (owner != event_owner_.end() && owner->second != event.company) {
    throw InvariantViolation("event id " + event.event_id + " already belongs to " + owner->second);
  }
  auto& part = partition(event.company);
  auto it = part.events.find(event.event_id);
  if (it != part.events.end() && it->second == event) return event.event_id;
  part.events[event.event_id] = event;
  event_owner_[event.event_id] = event.company;
  Event stripped = event;
  stripped.embedding.reset();
  append_line(event.company, "events.jsonl", nlohmann::json(stripped).dump());
  if (event.embedding) {
    append_line(event.company, "embeddings.tsv", event.event_id + "\t" + format_vector(*event.embedding));
  }
  return event.event_id;
}

std::string Store::put(const EventChain& chain) {
  if (auto problem = check_chain(chain)) {
    throw InvariantViolation("chain for " + chain.head + ": " + *problem);
  }
  std::unique_lock lock(mutex_);
  auto& part = partition(chain.company);
  auto head = part.events.find(chain.head);
  if (head == part.events.end()) throw InvariantViolation("chain head " + chain.head + " is not stored");
  if (head->second.time != chain.date) throw InvariantViolation("chain date differs from its head event");
  for (std::size_t i = 0; i < chain.predecessors.size(); ++i) {
    auto p = part.events.find(chain.predecessors[i]);
    if (p == part.events.end()) {
      throw InvariantViolation("chain predecessor " + chain.predecessors[i] + " is not stored");
    }
    if (p->second.time != chain.predecessor_dates[i]) {
      throw InvariantViolation("chain predecessor date mismatch for " + chain.predecessors[i]);
    }
  }
  auto it = part.chains.find(chain.head);
  if (it != part.chains.end() && it->second == chain) return chain.head;
  part.chains[chain.head] = chain;
  append_line(chain.company, "chains.jsonl", nlohmann::json(chain).dump());
  return chain.head;
}

std::string Store::put(const DailyEventSet& day) {
  DailyEventSet check = day;
  check.recompute_vectors(taxonomy_);
  if (check.type_vector != day.type_vector || check.group_vector != day.group_vector) {
    throw InvariantViolation("daily event set vectors do not match its events");
  }
  for (const auto& e : day.events) {
    if (e.company != day.company || e.time != day.date) {
      throw InvariantViolation("event " + e.event_id + " does not belong to day " + day.date.str());
    }
    put(e);
  }
  DayRecord record;
  for (const auto& e : day.events) record.event_ids.push_back(e.event_id);
  record.type_vector = day.type_vector;
  record.group_vector = day.group_vector;
  std::unique_lock lock(mutex_);
  auto& part = partition(day.company);
  auto it = part.days.find(day.date);
  std::string id = day.company + "@" + day.date.str();
  if (it != part.days.end() && it->second == record) return id;
  part.days[day.date] = record;
  append_line(day.company, "days.jsonl", day_json(day.company, day.date, record).dump());
  return id;
}

std::string Store::put(const Reflection& reflection) {
  if (reflection.reflection_id.empty()) throw InvariantViolation("reflection has no id");
  if (reflection.reason.empty() || reflection.key_events.empty()) {
    throw InvariantViolation("reflection " + reflection.reflection_id + " has empty reason or key events");
  }
  std::unique_lock lock(mutex_);
  auto& part = partition(reflection.company);
  auto it = part.reflections.find(reflection.reflection_id);
  if (it != part.reflections.end() && it->second == reflection) return reflection.reflection_id;
  part.reflections[reflection.reflection_id] = reflection;
  append_line(reflection.company, "reflections.jsonl", nlohmann::json(reflection).dump());
  return reflection.reflection_id;
}

void Store::load() {
  std::vector<fs::path> dirs;
  for (const auto& entry : fs::directory_iterator(*root_)) {
    if (entry.is_directory()) dirs.push_back(entry.path());
  }
  std::sort(dirs.begin(), dirs.end());

  auto each_line = [](const fs::path& file, auto&& fn) {
    std::ifstream in(file);
    if (!in) return;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      try {
        fn(line);
      } catch (const std::exception& e) {
        throw StoreError(file.string() + ":" + std::to_string(lineno) + ": " + e.what());
      }
    }
  };

  for (const auto& dir : dirs) {
    auto& part = partition(dir.filename().string());
    const std::string company = dir.filename().string();
    each_line(dir / "news.jsonl", [&](const std::string& l) {
      auto d = nlohmann::json::parse(l).get<NewsDoc>();
      part.news[d.doc_id] = d;
    });
    each_line(dir / "prices.jsonl", [&](const std::string& l) {
      auto p = nlohmann::json::parse(l).get<PriceBar>();
      part.prices[p.date] = p;
    });
    each_line(dir / "events.jsonl", [&](const std::string& l) {
      auto e = nlohmann::json::parse(l).get<Event>();
      event_owner_[e.event_id] = company;
      part.events[e.event_id] = std::move(e);
    });
    each_line(dir / "embeddings.tsv", [&](const std::string& l) {
      auto tab = l.find('\t');
      if (tab == std::string::npos) throw ParseError("missing tab");
      auto it = part.events.find(l.substr(0, tab));
      if (it != part.events.end()) it->second.embedding = parse_vector(l.substr(tab + 1));
    });
    each_line(dir / "chains.jsonl", [&](const std::string& l) {
      auto c = nlohmann::json::parse(l).get<EventChain>();
      part.chains[c.head] = std::move(c);
    });
    each_line(dir / "days.jsonl", [&](const std::string& l) {
      auto j = nlohmann::json::parse(l);
      DayRecord r;
      j.at("event_ids").get_to(r.event_ids);
      j.at("type_vector").get_to(r.type_vector);
      j.at("group_vector").get_to(r.group_vector);
      part.days[j.at("date").get<Date>()] = std::move(r);
    });
    each_line(dir / "reflections.jsonl", [&](const std::string& l) {
      auto r = nlohmann::json::parse(l).get<Reflection>();
      part.reflections[r.reflection_id] = std::move(r);
    });
  }
}

// Queries ----------------------------------------------------------------------

void Store::audit(RecordKind kind, const std::optional<std::string>& company, Date upper_bound,
                  std::size_t returned, std::optional<Date> max_date) const {
  std::lock_guard lock(audit_mutex_);
  if (!horizon_) return;
  Date horizon = kind == RecordKind::reflections ? horizon_->reflections_bound : horizon_->events_bound;
  QueryTrace trace{kind, company, upper_bound, horizon, returned, max_date, false};
  trace.violation = upper_bound > horizon || (max_date && *max_date >= horizon);
  ++leakage_.audited_queries;
  if (trace.violation) ++leakage_.violations;
  leakage_.traces.push_back(std::move(trace));
}

std::vector<Event> Store::events_locked(const AsOfQuery& query) const {
  std::vector<Event> out;
  for (const auto& [company, part] : partitions_) {
    if (query.company && company != *query.company) continue;
    for (const auto& [id, e] : part->events) {
      if (e.time < query.upper_bound) out.push_back(e);
    }
  }
  std::sort(out.begin(), out.end(), [](const Event& a, const Event& b) {
    return std::tie(a.time, a.event_id) < std::tie(b.time, b.event_id);
  });
  return out;
}

std::vector<Event> Store::events(const AsOfQuery& query) const {
  std::vector<Event> out;
  {
    std::shared_lock lock(mutex_);
    out = events_locked(query);
  }
  audit(RecordKind::events, query.company, query.upper_bound, out.size(),
        out.empty() ? std::nullopt : std::optional<Date>(out.back().time));
  return out;
}

std::vector<EventChain> Store::chains(const AsOfQuery& query) const {
  std::vector<EventChain> out;
  {
    std::shared_lock lock(mutex_);
    for (const auto& [company, part] : partitions_) {
      if (query.company && company != *query.company) continue;
      for (const auto& [head, c] : part->chains) {
        if (c.date < query.upper_bound) out.push_back(c);
      }
    }
  }
  std::sort(out.begin(), out.end(), [](const EventChain& a, const EventChain& b) {
    return std::tie(a.date, a.head) < std::tie(b.date, b.head);
  });
  std::optional<Date> max_date;
  for (const auto& c : out) max_date = max_date ? std::max(*max_date, c.date) : c.date;
  audit(RecordKind::chains, query.company, query.upper_bound, out.size(), max_date);
  return out;
}

DailyEventSet Store::hydrate_day(const Partition& part, Date date) const {
  DailyEventSet day;
  auto it = part.days.find(date);
  if (it == part.days.end()) {
    day.type_vector = BitVector(taxonomy_.type_count());
    day.group_vector = BitVector(taxonomy_.group_count());
    day.date = date;
    return day;
  }
  day.date = date;
  for (const auto& id : it->second.event_ids) {
    auto e = part.events.find(id);
    if (e == part.events.end()) throw StoreError("day " + date.str() + " references missing event " + id);
    day.events.push_back(e->second);
  }
  day.type_vector = it->second.type_vector;
  day.group_vector = it->second.group_vector;
  return day;
}

std::vector<DailyEventSet> Store::days(const AsOfQuery& query) const {
  std::vector<DailyEventSet> out;
  {
    std::shared_lock lock(mutex_);
    for (const auto& [company, part] : partitions_) {
      if (query.company && company != *query.company) continue;
      for (const auto& [date, record] : part->days) {
        if (!(date < query.upper_bound)) continue;
        auto day = hydrate_day(*part, date);
        day.company = company;
        out.push_back(std::move(day));
      }
    }
  }
  std::sort(out.begin(), out.end(), [](const DailyEventSet& a, const DailyEventSet& b) {
    return std::tie(a.date, a.company) < std::tie(b.date, b.company);
  });
  audit(RecordKind::days, query.company, query.upper_bound, out.size(),
        out.empty() ? std::nullopt : std::optional<Date>(out.back().date));
  return out;
}

std::vector<Reflection> Store::reflections(const AsOfQuery& query) const {
  std::vector<Reflection> out;
  {
    std::shared_lock lock(mutex_);
    for (const auto& [company, part] : partitions_) {
      if (query.company && company != *query.company) continue;
      for (const auto& [id, r] : part->reflections) {
        if (r.anchor_date < query.upper_bound) out.push_back(r);
      }
    }
  }
  std::sort(out.begin(), out.end(), [](const Reflection& a, const Reflection& b) {
    return std::tie(a.anchor_date, a.reflection_id) < std::tie(b.anchor_date, b.reflection_id);
  });
  audit(RecordKind::reflections, query.company, query.upper_bound, out.size(),
        out.empty() ? std::nullopt : std::optional<Date>(out.back().anchor_date));
  return out;
}

std::optional<EventSeries> Store::series(std::string_view company, Date anchor, int window,
                                         Date upper_bound) const {
  if (window < 1) throw PreconditionError("series window must be at least 1");
  std::optional<EventSeries> out;
  {
    std::shared_lock lock(mutex_);
    const auto* part = find_partition(company);
    if (part != nullptr && anchor < upper_bound) {
      std::vector<Date> dates;
      for (const auto& [d, bar] : part->prices) dates.push_back(d);
      TradingCalendar cal(std::move(dates));
      auto idx = cal.index_of(anchor);
      if (idx && *idx >= static_cast<std::size_t>(window)) {
        EventSeries s;
        s.company = std::string(company);
        s.anchor_date = anchor;
        s.window = window;
        for (std::size_t i = *idx - static_cast<std::size_t>(window); i <= *idx; ++i) {
          auto day = hydrate_day(*part, cal.days()[i]);
          day.company = s.company;
          s.days.push_back(std::move(day));
        }
        out = std::move(s);
      }
    }
  }
  audit(RecordKind::series, std::string(company), upper_bound, out ? 1 : 0,
        out ? std::optional<Date>(anchor) : std::nullopt);
  return out;
}

std::optional<Event> Store::event(std::string_view event_id) const {
  std::optional<Event> out;
  {
    std::shared_lock lock(mutex_);
    auto owner = event_owner_.find(event_id);
    if (owner != event_owner_.end()) {
      const auto* part = find_partition(owner->second);
      auto it = part->events.find(std::string(event_id));
      if (it != part->events.end()) out = it->second;
    }
  }
  if (out) audit(RecordKind::events, out->company, Date::min(), 1, out->time);
  return out;
}

std::optional<EventChain> Store::chain(std::string_view head_event_id) const {
  std::optional<EventChain> out;
  {
    std::shared_lock lock(mutex_);
    auto owner = event_owner_.find(head_event_id);
    if (owner != event_owner_.end()) {
      const auto* part = find_partition(owner->second);
      auto it = part->chains.find(std::string(head_event_id));
      if (it != part->chains.end()) out = it->second;
    }
  }
  if (out) audit(RecordKind::chains, out->company, Date::min(), 1, out->date);
  return out;
}

std::vector<NewsDoc> Store::news(std::string_view company, Date date) const {
  std::vector<NewsDoc> out;
  for (auto& d : news(company)) {
    if (d.date == date) out.push_back(std::move(d));
  }
  return out;
}

std::vector<NewsDoc> Store::news(std::string_view company) const {
  std::shared_lock lock(mutex_);
  std::vector<NewsDoc> out;
  if (const auto* part = find_partition(company)) {
    for (const auto& [id, d] : part->news) out.push_back(d);
  }
  std::sort(out.begin(), out.end(), [](const NewsDoc& a, const NewsDoc& b) {
    return std::tie(a.date, a.doc_id) < std::tie(b.date, b.doc_id);
  });
  return out;
}

std::vector<PriceBar> Store::prices(std::string_view company) const {
  std::shared_lock lock(mutex_);
  std::vector<PriceBar> out;
  if (const auto* part = find_partition(company)) {
    for (const auto& [d, bar] : part->prices) out.push_back(bar);
  }
  return out;
}

std::optional<double> Store::daily_return(std::string_view company, Date date) const {
  std::shared_lock lock(mutex_);
  const auto* part = find_partition(company);
  if (part == nullptr) return std::nullopt;
  auto it = part->prices.find(date);
  if (it == part->prices.end()) return std::nullopt;
  return it->second.daily_return;
}

TradingCalendar Store::calendar(std::string_view company) const {
  std::vector<Date> dates;
  for (const auto& bar : prices(company)) dates.push_back(bar.date);
  return TradingCalendar(std::move(dates));
}

std::vector<std::string> Store::companies() const {
  std::shared_lock lock(mutex_);
  std::vector<std::string> out;
  for (const auto& [name, part] : partitions_) out.push_back(name);
  return out;
}

std::size_t Store::reflection_count() const {
  std::shared_lock lock(mutex_);
  std::size_t n = 0;
  for (const auto& [name, part] : partitions_) n += part->reflections.size();
  return n;
}

std::size_t Store::event_count() const {
  std::shared_lock lock(mutex_);
  std::size_t n = 0;
  for (const auto& [name, part] : partitions_) n += part->events.size();
  return n;
}

void Store::set_horizon(std::optional<AuditHorizon> horizon) {
  std::lock_guard lock(audit_mutex_);
  horizon_ = horizon;
}

LeakageReport Store::leakage_report() const {
  std::lock_guard lock(audit_mutex_);
  return leakage_;
}

void Store::reset_leakage_report() {
  std::lock_guard lock(audit_mutex_);
  leakage_ = {};
}

}  // namespace stockmem
