#include "stockmem/reflection.hpp"

#include "stockmem/errors.hpp"

namespace stockmem {
namespace {

std::string json_text(const nlohmann::json& j) {
  return j.is_string() ? j.get<std::string>() : j.dump();
}

std::optional<std::string> non_empty_fields(const nlohmann::json& r) {
  for (const char* key : {"Reason for price movement", "Events causing the impact"}) {
    const auto& v = r[key];
    if ((v.is_string() && v.get<std::string>().empty()) || (v.is_array() && v.empty())) {
      return std::string("\"") + key + "\" must not be empty";
    }
  }
  return std::nullopt;
}

}  // namespace

std::string reflection_id(std::string_view company, Date anchor) {
  return std::string(company) + "@" + anchor.str();
}

Reflector::Reflector(const PromptSet& prompts, Generator& generator)
    : prompts_(prompts), generator_(generator) {}

Reflection Reflector::reflect(const Company& company, const EventSeries& series,
                              const std::string& information, const std::string& delta_info,
                              Label realized) const {
  if (series.company != company.ticker) {
    throw PreconditionError("series belongs to " + series.company + ", not " + company.ticker);
  }
  GenRequest request;
  request.template_id = TemplateId::reason;
  request.expected_schema = "reason";
  request.filled_prompt = prompts_.reason.render({{"stock", company.name},
                                                  {"information", information},
                                                  {"price_change", std::string(to_string(realized))}});
  std::size_t event_count = 0;
  for (const auto& d : series.days) event_count += d.events.size();
  request.context = {{"company", company.ticker},
                     {"anchor_date", series.anchor_date},
                     {"realized", realized},
                     {"event_count", event_count},
                     {"last_day_events", series.days.empty() ? 0 : series.days.back().events.size()}};
  if (!series.days.empty() && !series.days.back().events.empty()) {
    request.context["key_event"] = series.days.back().events.front().description;
  }

  auto response = generator_.generate(request, non_empty_fields);

  Reflection r;
  r.reflection_id = reflection_id(company.ticker, series.anchor_date);
  r.company = company.ticker;
  r.anchor_date = series.anchor_date;
  r.series_ref = series.ref();
  r.delta_info = delta_info;
  r.realized_move = realized;
  r.reason = json_text(response["Reason for price movement"]);
  r.key_events = json_text(response["Events causing the impact"]);
  return r;
}

Reflection Reflector::reflect_and_store(Store& store, const Company& company,
                                        const EventSeries& series, const std::string& information,
                                        const std::string& delta_info) const {
  auto next = store.calendar(company.ticker).next(series.anchor_date);
  if (!next) {
    throw PreconditionError("no price bar after " + series.anchor_date.str() + " for " +
                            company.ticker);
  }
  auto ret = store.daily_return(company.ticker, *next);
  if (!ret) throw PreconditionError("missing price bar for " + company.ticker + " " + next->str());
  auto reflection = reflect(company, series, information, delta_info, label_return(*ret));
  store.put(reflection);
  return reflection;
}

}  // namespace stockmem
