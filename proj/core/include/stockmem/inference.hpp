#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "stockmem/backends.hpp"
#include "stockmem/domain.hpp"
#include "stockmem/prompts.hpp"
#include "stockmem/retrieval.hpp"

namespace stockmem {

/// Chains for the events being rendered plus the predecessor events they
/// point at.
struct ChainIndex {
  std::map<std::string, EventChain> chains;  // by head event id
  std::map<std::string, Event> events;       // predecessors by id
};

struct RenderOptions {
  bool include_delta = true;  // chain summary + incremental information
};

/// One dated section per series day, events ordered by event_id:
///   --- 2024-01-05 ---
///   - [Group / Type] description
///     Chain: 2024-01-04: ...; 2024-01-03: ...
///     Incremental information (more positive): ...
std::string render_information(const EventSeries& series, const ChainIndex& chains,
                               const RenderOptions& options = {});

/// Per-document summaries (title plus lead sentence) by day.
std::string render_summaries(const std::vector<std::pair<Date, std::vector<NewsDoc>>>& days);

/// Opinion labels: each day's summaries clustered by embedding, one label per
/// cluster.
std::string render_opinions(const std::vector<std::pair<Date, std::vector<NewsDoc>>>& days,
                            EmbeddingBackend& embedder, double threshold);

std::string summarize_doc(const NewsDoc& doc);

inline constexpr std::string_view kNoReference = "No historical reference available.";

struct ReferenceCase {
  std::string company_name;
  Reflection reflection;
  std::string information;  // rendered historical series
};

std::string render_references(std::span<const ReferenceCase> references);

struct EvidenceBundle {
  std::string company_name;
  std::string information;      // current series with incremental information
  std::string hist_reflection;  // rendered reference reflections
  std::vector<std::string> reflection_ids;
  nlohmann::json context;  // structured form of the evidence, for scripted backends
};

struct Prediction {
  std::optional<Label> direction;  // up or down; empty on abstention
  std::string reason;
  std::string prompt_digest;
  bool abstained() const { return !direction.has_value(); }
};

class Predictor {
 public:
  Predictor(const PromptSet& prompts, Generator& generator);

  std::string filled_prompt(const EvidenceBundle& bundle) const;
  /// An answer outside {up, down} after the retry budget is an abstention.
  Prediction predict(const EvidenceBundle& bundle) const;

 private:
  const PromptSet& prompts_;
  Generator& generator_;
};

}  // namespace stockmem
