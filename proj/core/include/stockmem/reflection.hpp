#pragma once

#include <string>

#include "stockmem/backends.hpp"
#include "stockmem/domain.hpp"
#include "stockmem/prompts.hpp"
#include "stockmem/store.hpp"

namespace stockmem {

std::string reflection_id(std::string_view company, Date anchor);

/// Turns a labelled event window into a causal explanation.
class Reflector {
 public:
  Reflector(const PromptSet& prompts, Generator& generator);

  /// `information` is the rendered series with incremental information for the anchor day.
  Reflection reflect(const Company& company, const EventSeries& series,
                     const std::string& information, const std::string& delta_info,
                     Label realized) const;

  /// Looks up the next trading day's return to label the anchor, reflects,
  /// and persists. Throws PreconditionError when that price bar is missing.
  Reflection reflect_and_store(Store& store, const Company& company, const EventSeries& series,
                               const std::string& information, const std::string& delta_info) const;

 private:
  const PromptSet& prompts_;
  Generator& generator_;
};

}  // namespace stockmem
