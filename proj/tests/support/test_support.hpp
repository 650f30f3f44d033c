#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "stockmem/backends.hpp"
#include "stockmem/domain.hpp"
#include "stockmem/taxonomy.hpp"

namespace stockmem::test {

inline const Taxonomy& tax() { return Taxonomy::builtin(); }

inline Event make_event(std::string id, std::string company, Date time, std::string qualified_type,
                        std::string description) {
  const auto& t = tax().resolve_type(qualified_type);
  Event e;
  e.event_id = std::move(id);
  e.company = std::move(company);
  e.time = time;
  e.type = t;
  e.group = tax().group(t.group);
  e.description = std::move(description);
  return e;
}

inline Embedding unit_vector(std::vector<float> v) {
  double n = 0;
  for (float x : v) n += double(x) * x;
  n = std::sqrt(n);
  for (auto& x : v) x = float(x / n);
  return v;
}

/// Day with the given type ids set, built directly on the vectors.
inline DailyEventSet day_from_types(Date date, const std::vector<int>& type_ids, std::string company = "X") {
  std::vector<Event> events;
  for (std::size_t i = 0; i < type_ids.size(); ++i) {
    const auto& t = tax().type(type_ids[i]);
    Event e;
    e.event_id = company + "/" + date.str() + "/e" + std::to_string(i);
    e.company = company;
    e.time = date;
    e.type = t;
    e.group = tax().group(t.group);
    e.description = "event " + std::to_string(i);
    events.push_back(e);
  }
  return make_daily_set(company, date, std::move(events), tax());
}

inline FixtureEntry script(TemplateId id, std::string match, nlohmann::json response,
                           std::optional<int> times = std::nullopt) {
  return {id, std::move(match), response.is_string() ? response.get<std::string>() : response.dump(), times};
}

}  // namespace stockmem::test
