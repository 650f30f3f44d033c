#include "stockmem/tracking.hpp"

#include <algorithm>
#include <cctype>
#include <tuple>

#include <spdlog/spdlog.h>

#include "stockmem/errors.hpp"

namespace stockmem {
namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::optional<Polarity> parse_polarity(const std::string& text) {
  auto t = lower(text);
  if (t.find("positive") != std::string::npos) return Polarity::more_positive;
  if (t.find("negative") != std::string::npos) return Polarity::more_negative;
  if (t.find("neutral") != std::string::npos) return Polarity::neutral;
  return std::nullopt;
}

std::string describe(const Event& e) {
  return "[" + e.group.name + "::" + e.type.name + "] (" + e.time.str() + ") " + e.description;
}

nlohmann::json event_context(const Event& e) {
  return {{"event_id", e.event_id},   {"date", e.time},
          {"group", e.group.name},    {"type", e.type.name},
          {"description", e.description}, {"open_params", e.open_params}};
}

}  // namespace

std::vector<TrackCandidate> top_k_candidates(const Event& query, std::span<const Event> history,
                                             int k) {
  if (k < 1) throw PreconditionError("candidate count must be at least 1");
  if (!query.embedding) throw PreconditionError("event " + query.event_id + " has no embedding");
  std::vector<TrackCandidate> scored;
  scored.reserve(history.size());
  for (const auto& h : history) {
    if (!h.embedding) throw PreconditionError("historical event " + h.event_id + " has no embedding");
    scored.push_back({h, cosine(*query.embedding, *h.embedding)});
  }
  auto before = [](const TrackCandidate& a, const TrackCandidate& b) {
    if (a.similarity != b.similarity) return a.similarity > b.similarity;
    if (a.event.time != b.event.time) return a.event.time > b.event.time;
    return a.event.event_id < b.event.event_id;
  };
  auto keep = std::min(scored.size(), static_cast<std::size_t>(k));
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(keep), scored.end(),
                    before);
  scored.resize(keep);
  return scored;
}

EventChain chain_from(const Event& head, const Event& predecessor,
                      const EventChain* predecessor_chain, Date window_start,
                      std::size_t max_depth) {
  if (!(predecessor.time < head.time) || predecessor.time < window_start) {
    throw PreconditionError("predecessor " + predecessor.event_id + " lies outside the tracking window");
  }
  EventChain chain;
  chain.company = head.company;
  chain.date = head.time;
  chain.head = head.event_id;
  if (max_depth == 0) return chain;
  chain.predecessors.push_back(predecessor.event_id);
  chain.predecessor_dates.push_back(predecessor.time);
  if (predecessor_chain != nullptr) {
    for (std::size_t i = 0; i < predecessor_chain->predecessors.size(); ++i) {
      if (chain.predecessors.size() >= max_depth) break;
      if (predecessor_chain->predecessor_dates[i] < window_start) break;
      chain.predecessors.push_back(predecessor_chain->predecessors[i]);
      chain.predecessor_dates.push_back(predecessor_chain->predecessor_dates[i]);
    }
  }
  return chain;
}

EventTracker::EventTracker(const PromptSet& prompts, Generator& generator, const Store& store,
                           TrackingOptions options)
    : prompts_(prompts), generator_(generator), store_(store), options_(options) {
  if (options_.window < 1) throw ConfigError("tracking window must be at least 1");
  if (options_.max_depth > kMaxChainDepth) throw ConfigError("chain depth is capped at 5");
}

namespace {

Date window_start_for(const Event& event, const TradingCalendar& calendar, int window) {
  if (auto start = calendar.back(event.time, static_cast<std::size_t>(window))) return *start;
  if (!calendar.index_of(event.time)) {
    throw PreconditionError(event.time.str() + " is not a trading day for " + event.company);
  }
  return calendar.days().front();
}

}  // namespace

std::vector<TrackCandidate> EventTracker::candidate_predecessors(
    const Event& event, const TradingCalendar& calendar) const {
  Date start = window_start_for(event, calendar, options_.window);
  auto history = store_.events({RecordKind::events, event.company, event.time});
  std::erase_if(history, [&](const Event& e) { return e.time < start; });
  return top_k_candidates(event, history, options_.candidate_k);
}

std::optional<Event> EventTracker::link_predecessor(
    const Event& event, std::span<const TrackCandidate> candidates) const {
  if (candidates.empty()) return std::nullopt;

  std::string listing;
  nlohmann::json context_candidates = nlohmann::json::array();
  for (const auto& c : candidates) {
    listing += "id: " + c.event.event_id + " | " + describe(c.event) + "\n";
    context_candidates.push_back(event_context(c.event));
  }
  GenRequest request;
  request.template_id = TemplateId::track;
  request.expected_schema = "track_link";
  request.filled_prompt =
      prompts_.track_link.render({{"current_event", describe(event)}, {"candidates", listing}});
  request.context = {{"current", event_context(event)}, {"candidates", context_candidates}};

  auto check = [&](const nlohmann::json& r) -> std::optional<std::string> {
    const auto& p = r["predecessor"];
    if (p.is_null()) return std::nullopt;
    auto id = p.get<std::string>();
    if (id == "null" || id.empty()) return std::nullopt;
    for (const auto& c : candidates) {
      if (c.event.event_id == id) return std::nullopt;
    }
    return "predecessor \"" + id + "\" is not one of the candidate ids";
  };

  try {
    auto response = generator_.generate(request, check);
    const auto& p = response["predecessor"];
    if (p.is_null()) return std::nullopt;
    auto id = p.get<std::string>();
    for (const auto& c : candidates) {
      if (c.event.event_id == id) return c.event;
    }
    return std::nullopt;
  } catch (const SchemaViolation& e) {
    spdlog::warn("no predecessor linked for {}: {}", event.event_id, e.what());
    return std::nullopt;
  }
}

EventChain EventTracker::build_chain(const Event& event, const std::optional<Event>& predecessor,
                                     const TradingCalendar& calendar) const {
  if (!predecessor) {
    EventChain chain;
    chain.company = event.company;
    chain.date = event.time;
    chain.head = event.event_id;
    return chain;
  }
  Date start = window_start_for(event, calendar, options_.window);
  auto stored = store_.chain(predecessor->event_id);
  return chain_from(event, *predecessor, stored ? &*stored : nullptr, start, options_.max_depth);
}

std::pair<std::string, Polarity> EventTracker::extract_delta_info(const Event& event,
                                                                  const EventChain& chain) const {
  std::string chain_text;
  nlohmann::json context_chain = nlohmann::json::array();
  for (const auto& id : chain.predecessors) {
    auto e = store_.event(id);
    if (!e) throw PreconditionError("chain references unknown event " + id);
    chain_text += "- " + describe(*e) + "\n";
    context_chain.push_back(event_context(*e));
  }
  if (chain_text.empty()) chain_text = "(none: the event appears for the first time)\n";

  GenRequest request;
  request.template_id = TemplateId::track;
  request.expected_schema = "track_delta";
  request.filled_prompt =
      prompts_.track_delta.render({{"current_event", describe(event)}, {"chain", chain_text}});
  request.context = {{"current", event_context(event)}, {"chain", context_chain}};

  auto check = [](const nlohmann::json& r) -> std::optional<std::string> {
    if (!parse_polarity(r["Polarity"].get<std::string>())) {
      return "Polarity must be more positive, more negative or neutral";
    }
    return std::nullopt;
  };
  auto response = generator_.generate(request, check);
  auto text = response["Incremental information"].get<std::string>();
  auto polarity = *parse_polarity(response["Polarity"].get<std::string>());
  if (chain.predecessors.empty()) text = std::string(kFirstOccurrence) + " " + text;
  return {text, polarity};
}

EventChain EventTracker::track(const Event& event, const TradingCalendar& calendar) const {
  auto candidates = candidate_predecessors(event, calendar);
  auto predecessor = link_predecessor(event, candidates);
  auto chain = build_chain(event, predecessor, calendar);
  auto [delta, polarity] = extract_delta_info(event, chain);
  chain.delta_info = std::move(delta);
  chain.delta_polarity = polarity;
  return chain;
}

}  // namespace stockmem
