#include "stockmem/extraction.hpp"

#include <algorithm>
#include <map>
#include <optional>

#include <spdlog/spdlog.h>

#include "stockmem/errors.hpp"

namespace stockmem {
namespace {

std::vector<std::string> string_list(const nlohmann::json& j) {
  std::vector<std::string> out;
  if (j.is_string()) {
    if (!j.get<std::string>().empty()) out.push_back(j.get<std::string>());
  } else if (j.is_array()) {
    for (const auto& item : j) {
      if (item.is_string()) {
        out.push_back(item.get<std::string>());
      } else if (!item.is_null()) {
        out.push_back(item.dump());
      }
    }
  }
  return out;
}

std::map<std::string, std::string> string_map(const nlohmann::json& j) {
  std::map<std::string, std::string> out;
  if (!j.is_object()) return out;
  for (const auto& [key, value] : j.items()) {
    out[key] = value.is_string() ? value.get<std::string>() : value.dump();
  }
  return out;
}

std::string text_field(const nlohmann::json& item, const char* key) {
  if (!item.contains(key) || !item[key].is_string()) return {};
  return item[key].get<std::string>();
}

std::optional<std::string> check_events(const nlohmann::json& response) {
  const auto& events = response["events"];
  for (std::size_t i = 0; i < events.size(); ++i) {
    const auto& e = events[i];
    if (!e.is_object()) return "event " + std::to_string(i + 1) + " is not an object";
    if (text_field(e, "type").empty()) return "event " + std::to_string(i + 1) + " has no type";
    if (text_field(e, "description").empty()) {
      return "event " + std::to_string(i + 1) + " has no description";
    }
  }
  return std::nullopt;
}

std::string render_document(const NewsDoc& doc) {
  return "Title: " + doc.title + "\nDate: " + doc.date.str() + "\nCompany: " + doc.company +
         "\n\n" + doc.body;
}

}  // namespace

EventExtractor::EventExtractor(const Taxonomy& taxonomy, const PromptSet& prompts,
                               Generator& generator)
    : taxonomy_(taxonomy), prompts_(prompts), generator_(generator) {}

RawEventBatch EventExtractor::extract_events(const NewsDoc& doc) const {
  GenRequest request;
  request.template_id = TemplateId::extract;
  request.expected_schema = "extract";
  request.filled_prompt = prompts_.extract.render(
      {{"taxonomy", taxonomy_.render_listing()}, {"document", render_document(doc)}});
  request.context = {{"doc", doc}};
  auto response = generator_.generate(request, check_events);
  const auto& items = response["events"];

  // Resolve types; collect the misses for one recalibration pass.
  std::vector<const EventType*> resolved(items.size(), nullptr);
  nlohmann::json invalid = nlohmann::json::array();
  std::string invalid_text;
  for (std::size_t i = 0; i < items.size(); ++i) {
    auto r = taxonomy_.resolve(text_field(items[i], "group"), text_field(items[i], "type"));
    if (r) {
      resolved[i] = r.type;
    } else {
      invalid.push_back({{"index", i + 1},
                         {"group", text_field(items[i], "group")},
                         {"type", text_field(items[i], "type")},
                         {"description", text_field(items[i], "description")}});
      invalid_text += std::to_string(i + 1) + ". type \"" + text_field(items[i], "type") +
                      "\": " + text_field(items[i], "description") + "\n";
    }
  }

  if (!invalid.empty()) {
    GenRequest fix;
    fix.template_id = TemplateId::extract;
    fix.expected_schema = "extract_recalibrate";
    fix.filled_prompt = prompts_.extract_recalibrate.render(
        {{"taxonomy", taxonomy_.render_listing()}, {"invalid_events", invalid_text}});
    fix.context = {{"doc", doc}, {"invalid", invalid}};
    try {
      auto answer = generator_.generate(fix);
      for (const auto& item : answer["events"]) {
        if (!item.is_object() || !item.contains("index") || !item["index"].is_number_integer()) {
          continue;
        }
        auto index = item["index"].get<std::int64_t>();
        if (index < 1 || static_cast<std::size_t>(index) > items.size()) continue;
        auto r = taxonomy_.resolve(text_field(item, "group"), text_field(item, "type"));
        if (r) resolved[static_cast<std::size_t>(index - 1)] = r.type;
      }
    } catch (const SchemaViolation& e) {
      spdlog::warn("type recalibration for {} failed: {}", doc.doc_id, e.what());
    }
  }

  RawEventBatch batch;
  batch.doc_id = doc.doc_id;
  for (std::size_t i = 0; i < items.size(); ++i) {
    const auto& item = items[i];
    if (resolved[i] == nullptr) {
      spdlog::warn("dropping event from {}: type \"{}\" is not in the taxonomy", doc.doc_id,
                   text_field(item, "type"));
      continue;
    }
    Event e;
    e.event_id = doc.doc_id + "#" + std::to_string(batch.events.size());
    e.company = doc.company;
    e.type = *resolved[i];
    e.group = taxonomy_.group(e.type.group);
    e.time = doc.date;
    if (auto loc = text_field(item, "location"); !loc.empty()) e.location = loc;
    if (item.contains("entities")) e.entities = string_list(item["entities"]);
    if (item.contains("industries")) e.industries = string_list(item["industries"]);
    if (item.contains("companies")) e.companies = string_list(item["companies"]);
    if (item.contains("open_params")) e.open_params = string_map(item["open_params"]);
    e.description = text_field(item, "description");
    e.source_docs = {doc.doc_id};
    batch.events.push_back(std::move(e));
  }
  return batch;
}

std::vector<Event> EventExtractor::extract_day(std::span<const NewsDoc> docs) const {
  std::vector<const NewsDoc*> ordered;
  for (const auto& d : docs) ordered.push_back(&d);
  std::sort(ordered.begin(), ordered.end(),
            [](const NewsDoc* a, const NewsDoc* b) { return a->doc_id < b->doc_id; });
  std::vector<RawEventBatch> batches;
  batches.reserve(ordered.size());
  for (const auto* d : ordered) batches.push_back(extract_events(*d));
  return collect_daily_raw(batches);
}

std::vector<Event> collect_daily_raw(std::span<const RawEventBatch> batches) {
  std::vector<const RawEventBatch*> ordered;
  for (const auto& b : batches) ordered.push_back(&b);
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const auto* a, const auto* b) { return a->doc_id < b->doc_id; });
  std::vector<Event> out;
  for (const auto* b : ordered) out.insert(out.end(), b->events.begin(), b->events.end());
  return out;
}

}  // namespace stockmem
