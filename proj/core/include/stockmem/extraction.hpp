#pragma once

#include <span>
#include <string>
#include <vector>

#include "stockmem/backends.hpp"
#include "stockmem/domain.hpp"
#include "stockmem/prompts.hpp"
#include "stockmem/taxonomy.hpp"

namespace stockmem {

struct RawEventBatch {
  std::string doc_id;
  std::vector<Event> events;  // pre-merge, time = document date
};

/// One generate call per document. Events whose type does not resolve get a
/// single recalibration pass; anything still unresolved is dropped with a
/// warning.
class EventExtractor {
 public:
  EventExtractor(const Taxonomy& taxonomy, const PromptSet& prompts, Generator& generator);

  RawEventBatch extract_events(const NewsDoc& doc) const;

  /// Extracts every document in doc_id order and returns the union.
  std::vector<Event> extract_day(std::span<const NewsDoc> docs) const;

 private:
  const Taxonomy& taxonomy_;
  const PromptSet& prompts_;
  Generator& generator_;
};

/// Union of per-document batches in doc_id order. No deduplication.
std::vector<Event> collect_daily_raw(std::span<const RawEventBatch> batches);

}  // namespace stockmem
