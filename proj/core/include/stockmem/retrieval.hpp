#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "stockmem/backends.hpp"
#include "stockmem/domain.hpp"
#include "stockmem/prompts.hpp"

namespace stockmem {

struct SimilarityParams {
  double alpha = 0.7;
  int window = 5;
  int coarse_k = 5;
};

enum class RetrievalStrategy { full, same_company, recent_period, none };

std::string_view to_string(RetrievalStrategy strategy);
RetrievalStrategy retrieval_strategy_from_string(std::string_view text);

/// |a & b| / |a | b|. Two empty vectors are identical (1.0). Throws
/// PreconditionError on size mismatch.
double jaccard(const BitVector& a, const BitVector& b);

/// alpha * TypeSim + (1 - alpha) * GroupSim.
double daily_sim(const DailyEventSet& a, const DailyEventSet& b, double alpha);

/// Mean daily similarity over the `window` most recent aligned positions.
/// Both series must hold window + 1 days.
double seq_sim(const EventSeries& a, const EventSeries& b, const SimilarityParams& params);

/// A historical series paired with the reflection written for its anchor.
struct SeriesCandidate {
  EventSeries series;
  Reflection reflection;
  double similarity = 0.0;
};

/// Ranking used by the coarse screen: higher similarity, then more recent
/// anchor, then company name ascending.
bool candidate_before(const SeriesCandidate& a, const SeriesCandidate& b);

/// Top-K historical series for `current`. Only anchors strictly before the
/// current anchor are eligible. same_company restricts the pool to the
/// current company, recent_period ranks by anchor date alone, none returns
/// nothing.
std::vector<SeriesCandidate> coarse_screen(const EventSeries& current,
                                           std::span<const SeriesCandidate> memory,
                                           const SimilarityParams& params,
                                           RetrievalStrategy strategy = RetrievalStrategy::full);

/// Model pass that keeps the candidates with genuine reference value. The
/// rendered texts are what the model sees.
class ReferenceFilter {
 public:
  ReferenceFilter(const PromptSet& prompts, Generator& generator);

  /// Throws SchemaViolation if the model keeps naming candidates outside the
  /// list.
  std::vector<SeriesCandidate> fine_filter(const std::string& current_rendered,
                                           std::span<const SeriesCandidate> candidates,
                                           std::span<const std::string> candidates_rendered) const;

 private:
  const PromptSet& prompts_;
  Generator& generator_;
};

}  // namespace stockmem
