#include "stockmem/retrieval.hpp"

#include <algorithm>
#include <bit>
#include <set>

#include "stockmem/errors.hpp"

namespace stockmem {

std::string_view to_string(RetrievalStrategy strategy) {
  switch (strategy) {
    case RetrievalStrategy::full:
      return "full";
    case RetrievalStrategy::same_company:
      return "same_company";
    case RetrievalStrategy::recent_period:
      return "recent_period";
    case RetrievalStrategy::none:
      return "none";
  }
  return "full";
}

RetrievalStrategy retrieval_strategy_from_string(std::string_view text) {
  for (auto s : {RetrievalStrategy::full, RetrievalStrategy::same_company,
                 RetrievalStrategy::recent_period, RetrievalStrategy::none}) {
    if (to_string(s) == text) return s;
  }
  throw ConfigError("unknown retrieval strategy: " + std::string(text));
}

double jaccard(const BitVector& a, const BitVector& b) {
  if (a.size() != b.size()) throw PreconditionError("jaccard of bit vectors with different sizes");
  std::size_t inter = 0;
  std::size_t uni = 0;
  const auto& wa = a.words();
  const auto& wb = b.words();
  for (std::size_t i = 0; i < wa.size(); ++i) {
    inter += static_cast<std::size_t>(std::popcount(wa[i] & wb[i]));
    uni += static_cast<std::size_t>(std::popcount(wa[i] | wb[i]));
  }
  if (uni == 0) return 1.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

double daily_sim(const DailyEventSet& a, const DailyEventSet& b, double alpha) {
  if (alpha < 0.0 || alpha > 1.0) throw PreconditionError("alpha must lie in [0, 1]");
  return alpha * jaccard(a.type_vector, b.type_vector) +
         (1.0 - alpha) * jaccard(a.group_vector, b.group_vector);
}

double seq_sim(const EventSeries& a, const EventSeries& b, const SimilarityParams& params) {
  const auto w = static_cast<std::size_t>(params.window);
  if (params.window < 1) throw PreconditionError("window must be at least 1");
  if (a.days.size() != w + 1 || b.days.size() != w + 1) {
    throw PreconditionError("series length does not match window + 1");
  }
  double sum = 0.0;
  for (std::size_t k = 0; k < w; ++k) {
    sum += daily_sim(a.days[w - k], b.days[w - k], params.alpha);
  }
  return sum / static_cast<double>(w);
}

bool candidate_before(const SeriesCandidate& a, const SeriesCandidate& b) {
  if (a.similarity != b.similarity) return a.similarity > b.similarity;
  if (a.series.anchor_date != b.series.anchor_date) return a.series.anchor_date > b.series.anchor_date;
  return a.series.company < b.series.company;
}

std::vector<SeriesCandidate> coarse_screen(const EventSeries& current,
                                           std::span<const SeriesCandidate> memory,
                                           const SimilarityParams& params,
                                           RetrievalStrategy strategy) {
  if (strategy == RetrievalStrategy::none || params.coarse_k < 1) return {};

  // Score by index and copy only the survivors.
  struct Scored {
    double similarity;
    const SeriesCandidate* candidate;
  };
  std::vector<Scored> pool;
  pool.reserve(memory.size());
  for (const auto& m : memory) {
    if (!(m.series.anchor_date < current.anchor_date)) continue;
    if (strategy == RetrievalStrategy::same_company && m.series.company != current.company) continue;
    pool.push_back({seq_sim(current, m.series, params), &m});
  }

  auto keep = std::min(pool.size(), static_cast<std::size_t>(params.coarse_k));
  auto mid = pool.begin() + static_cast<std::ptrdiff_t>(keep);
  auto newer = [](const Scored& a, const Scored& b) {
    if (a.candidate->series.anchor_date != b.candidate->series.anchor_date) {
      return a.candidate->series.anchor_date > b.candidate->series.anchor_date;
    }
    return a.candidate->series.company < b.candidate->series.company;
  };
  if (strategy == RetrievalStrategy::recent_period) {
    std::partial_sort(pool.begin(), mid, pool.end(), newer);
  } else {
    std::partial_sort(pool.begin(), mid, pool.end(), [&](const Scored& a, const Scored& b) {
      if (a.similarity != b.similarity) return a.similarity > b.similarity;
      return newer(a, b);
    });
  }
  std::vector<SeriesCandidate> out;
  out.reserve(keep);
  for (auto it = pool.begin(); it != mid; ++it) {
    out.push_back(*it->candidate);
    out.back().similarity = it->similarity;
  }
  return out;
}

ReferenceFilter::ReferenceFilter(const PromptSet& prompts, Generator& generator)
    : prompts_(prompts), generator_(generator) {}

std::vector<SeriesCandidate> ReferenceFilter::fine_filter(
    const std::string& current_rendered, std::span<const SeriesCandidate> candidates,
    std::span<const std::string> candidates_rendered) const {
  if (candidates.empty()) return {};
  if (candidates_rendered.size() != candidates.size()) {
    throw PreconditionError("one rendering per candidate is required");
  }

  std::string listing;
  nlohmann::json context = nlohmann::json::array();
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto& c = candidates[i];
    listing += "Candidate " + std::to_string(i + 1) + " (" + c.series.company +
               ", sequence ending " + c.series.anchor_date.str() + "):\n" + candidates_rendered[i] + "\n";
    context.push_back({{"index", i + 1},
                       {"company", c.series.company},
                       {"anchor_date", c.series.anchor_date},
                       {"similarity", c.similarity}});
  }

  GenRequest request;
  request.template_id = TemplateId::retrieve_filter;
  request.expected_schema = "retrieve_filter";
  request.filled_prompt = prompts_.retrieve_filter.render(
      {{"current_series", current_rendered}, {"candidates", listing}});
  request.context = {{"candidates", context}};

  const auto n = static_cast<std::int64_t>(candidates.size());
  auto check = [n](const nlohmann::json& r) -> std::optional<std::string> {
    for (const auto& s : r["selected"]) {
      if (!s.is_number_integer()) return "selected entries must be candidate numbers";
      auto k = s.get<std::int64_t>();
      if (k < 1 || k > n) return "candidate " + std::to_string(k) + " is not in the list";
    }
    return std::nullopt;
  };

  auto response = generator_.generate(request, check);
  std::set<std::int64_t> chosen;
  for (const auto& s : response["selected"]) chosen.insert(s.get<std::int64_t>());
  std::vector<SeriesCandidate> out;
  for (auto k : chosen) out.push_back(candidates[static_cast<std::size_t>(k - 1)]);
  return out;
}

}  // namespace stockmem
