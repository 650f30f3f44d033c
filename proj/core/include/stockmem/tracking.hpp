#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "stockmem/backends.hpp"
#include "stockmem/domain.hpp"
#include "stockmem/prompts.hpp"
#include "stockmem/store.hpp"

namespace stockmem {

struct TrackingOptions {
  int window = 5;
  int candidate_k = 10;
  std::size_t max_depth = kMaxChainDepth;
};

struct TrackCandidate {
  Event event;
  double similarity = 0.0;
};

/// Top-K of `history` by cosine to `query`; ties go to the more recent date,
/// then the smaller event_id.
std::vector<TrackCandidate> top_k_candidates(const Event& query, std::span<const Event> history,
                                             int k);

/// [predecessor] followed by the predecessor's own chain, keeping only
/// entries on or after `window_start`, capped at `max_depth`.
EventChain chain_from(const Event& head, const Event& predecessor,
                      const EventChain* predecessor_chain, Date window_start,
                      std::size_t max_depth = kMaxChainDepth);

inline constexpr std::string_view kFirstOccurrence = "[first occurrence]";

class EventTracker {
 public:
  EventTracker(const PromptSet& prompts, Generator& generator, const Store& store,
               TrackingOptions options = {});

  /// Same-company events dated in [t-w, t-1] trading days.
  std::vector<TrackCandidate> candidate_predecessors(const Event& event,
                                                     const TradingCalendar& calendar) const;
  /// At most one candidate. An answer outside the list is retried, then
  /// treated as no predecessor.
  std::optional<Event> link_predecessor(const Event& event,
                                        std::span<const TrackCandidate> candidates) const;
  EventChain build_chain(const Event& event, const std::optional<Event>& predecessor,
                         const TradingCalendar& calendar) const;
  std::pair<std::string, Polarity> extract_delta_info(const Event& event,
                                                      const EventChain& chain) const;

  /// candidate_predecessors -> link_predecessor -> build_chain -> delta.
  EventChain track(const Event& event, const TradingCalendar& calendar) const;

  const TrackingOptions& options() const { return options_; }

 private:
  const PromptSet& prompts_;
  Generator& generator_;
  const Store& store_;
  TrackingOptions options_;
};

}  // namespace stockmem
