#pragma once

#include <span>
#include <string>
#include <vector>

#include "stockmem/backends.hpp"
#include "stockmem/domain.hpp"
#include "stockmem/prompts.hpp"
#include "stockmem/taxonomy.hpp"

namespace stockmem {

struct Cluster {
  int group = -1;
  std::vector<std::string> member_event_ids;  // ascending
  Embedding centroid;
};

/// Single-link agglomerative clustering under cosine similarity: two events
/// end up in the same cluster iff a chain of pairs with cosine >= threshold
/// connects them. Members are ordered by event_id and clusters by their first
/// member. All events must carry embeddings; throws PreconditionError.
std::vector<Cluster> cluster_group(std::span<const Event> events, double threshold);

struct MergeOptions {
  double cosine_threshold = 0.80;
};

class EventMerger {
 public:
  EventMerger(const Taxonomy& taxonomy, const PromptSet& prompts, Generator& generator,
              EmbeddingBackend& embedder, MergeOptions options = {});

  /// Singletons pass through without a model call.
  std::vector<Event> refine_cluster(const Cluster& cluster, std::span<const Event> members) const;

  /// Embeds raw events, clusters within each group, refines each cluster and
  /// returns the consolidated day with ids "<company>/<date>/eNNN".
  DailyEventSet merge_day(const std::string& company, Date date, std::vector<Event> raw) const;

 private:
  const Taxonomy& taxonomy_;
  const PromptSet& prompts_;
  Generator& generator_;
  EmbeddingBackend& embedder_;
  MergeOptions options_;
};

}  // namespace stockmem
