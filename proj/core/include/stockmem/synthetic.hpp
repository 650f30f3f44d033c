#pragma once

#include <cstdint>
#include <vector>

#include "stockmem/backends.hpp"
#include "stockmem/domain.hpp"
#include "stockmem/taxonomy.hpp"

namespace stockmem {

/// Deterministic fixture corpus for offline runs. Documents mark their events
/// with lines of the form
///   @event <group>::<type> | <description>
/// which the synthetic responder reads back.
struct SyntheticCorpusOptions {
  std::vector<Company> companies;  // empty: four default companies
  Date start{2024, 1, 1};
  int train_days = 40;
  int test_days = 20;
  int storylines = 4;
  std::uint64_t seed = 20240101;
};

struct SyntheticCorpus {
  std::vector<Company> companies;
  std::vector<NewsDoc> news;
  std::vector<PriceBar> prices;
  Date train_start;
  Date train_end;
  Date test_start;
  Date test_end;
};

SyntheticCorpus make_synthetic_corpus(const SyntheticCorpusOptions& options,
                                      const Taxonomy& taxonomy);

/// Stateless, schema-valid answers for every generation role, derived from
/// the request context. Serves as the mock backend's fallback script.
Responder synthetic_responder(const Taxonomy& taxonomy);

}  // namespace stockmem
