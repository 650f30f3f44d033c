#include "stockmem/inference.hpp"

#include <algorithm>
#include <cctype>
#include <numeric>

#include "stockmem/digest.hpp"
#include "stockmem/errors.hpp"

namespace stockmem {
namespace {

std::string trim_copy(std::string_view s) {
  auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::string polarity_text(Polarity p) {
  switch (p) {
    case Polarity::more_positive:
      return "more positive";
    case Polarity::more_negative:
      return "more negative";
    case Polarity::neutral:
      return "neutral";
  }
  return "neutral";
}

std::string json_text(const nlohmann::json& j) {
  return j.is_string() ? j.get<std::string>() : j.dump();
}

}  // namespace

std::string render_information(const EventSeries& series, const ChainIndex& chains,
                               const RenderOptions& options) {
  std::string out;
  for (const auto& day : series.days) {
    out += "--- " + day.date.str() + " ---\n";
    std::vector<const Event*> events;
    for (const auto& e : day.events) events.push_back(&e);
    std::sort(events.begin(), events.end(),
              [](const Event* a, const Event* b) { return a->event_id < b->event_id; });
    if (events.empty()) out += "(no events)\n";
    for (const auto* e : events) {
      out += "- [" + e->group.name + " / " + e->type.name + "] " + e->description + "\n";
      if (!options.include_delta) continue;
      auto it = chains.chains.find(e->event_id);
      if (it == chains.chains.end()) continue;
      const auto& chain = it->second;
      if (chain.predecessors.empty()) {
        out += "  Chain: none " + std::string("[first occurrence]") + "\n";
      } else {
        out += "  Chain: ";
        for (std::size_t i = 0; i < chain.predecessors.size(); ++i) {
          if (i > 0) out += "; ";
          auto p = chains.events.find(chain.predecessors[i]);
          out += chain.predecessor_dates[i].str() + ": " +
                 (p != chains.events.end() ? p->second.description : chain.predecessors[i]);
        }
        out += "\n";
      }
      out += "  Incremental information (" + polarity_text(chain.delta_polarity) +
             "): " + chain.delta_info + "\n";
    }
  }
  return out;
}

std::string summarize_doc(const NewsDoc& doc) {
  std::string lead;
  std::size_t pos = 0;
  while (pos <= doc.body.size()) {
    auto end = doc.body.find('\n', pos);
    if (end == std::string::npos) end = doc.body.size();
    auto line = trim_copy(std::string_view(doc.body).substr(pos, end - pos));
    pos = end + 1;
    if (line.empty() || line.front() == '@') continue;
    lead = line;
    break;
  }
  if (auto stop = lead.find(". "); stop != std::string::npos) lead = lead.substr(0, stop + 1);
  if (lead.size() > 200) lead = lead.substr(0, 200) + "...";
  if (lead.empty()) return doc.title;
  return doc.title + ": " + lead;
}

std::string render_summaries(const std::vector<std::pair<Date, std::vector<NewsDoc>>>& days) {
  std::string out;
  for (const auto& [date, docs] : days) {
    out += "--- " + date.str() + " ---\n";
    if (docs.empty()) out += "(no news)\n";
    for (const auto& d : docs) out += "- " + summarize_doc(d) + "\n";
  }
  return out;
}

std::string render_opinions(const std::vector<std::pair<Date, std::vector<NewsDoc>>>& days,
                            EmbeddingBackend& embedder, double threshold) {
  std::string out;
  for (const auto& [date, docs] : days) {
    out += "--- " + date.str() + " ---\n";
    if (docs.empty()) {
      out += "(no news)\n";
      continue;
    }
    std::vector<std::string> titles;
    for (const auto& d : docs) titles.push_back(d.title);
    auto vectors = embed(embedder, titles);

    // Single-link grouping of the day's headlines.
    std::vector<std::size_t> parent(docs.size());
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](std::size_t x) {
      while (parent[x] != x) x = parent[x] = parent[parent[x]];
      return x;
    };
    for (std::size_t i = 0; i < docs.size(); ++i) {
      for (std::size_t j = i + 1; j < docs.size(); ++j) {
        if (cosine(vectors[i], vectors[j]) >= threshold) {
          auto a = find(i);
          auto b = find(j);
          if (a != b) parent[std::max(a, b)] = std::min(a, b);
        }
      }
    }
    for (std::size_t i = 0; i < docs.size(); ++i) {
      if (find(i) != i) continue;
      std::size_t size = 0;
      for (std::size_t j = 0; j < docs.size(); ++j) size += find(j) == i ? 1 : 0;
      out += "- Opinion: " + docs[i].title + " (" + std::to_string(size) +
             (size == 1 ? " report)\n" : " reports)\n");
    }
  }
  return out;
}

std::string render_references(std::span<const ReferenceCase> references) {
  if (references.empty()) return std::string(kNoReference) + "\n";
  std::string out;
  for (std::size_t i = 0; i < references.size(); ++i) {
    const auto& r = references[i];
    out += "Reference " + std::to_string(i + 1) + ": " + r.company_name + ", sequence ending " +
           r.reflection.anchor_date.str() + "\n";
    out += r.information;
    out += "Subsequent price movement: " + std::string(to_string(r.reflection.realized_move)) + "\n";
    out += "Reason for price movement: " + r.reflection.reason + "\n";
    out += "Events causing the impact: " + r.reflection.key_events + "\n\n";
  }
  return out;
}

Predictor::Predictor(const PromptSet& prompts, Generator& generator)
    : prompts_(prompts), generator_(generator) {}

std::string Predictor::filled_prompt(const EvidenceBundle& bundle) const {
  return prompts_.predict.render({{"stock", bundle.company_name},
                                  {"information", bundle.information},
                                  {"hist_reflection", bundle.hist_reflection}});
}

Prediction Predictor::predict(const EvidenceBundle& bundle) const {
  GenRequest request;
  request.template_id = TemplateId::predict;
  request.expected_schema = "predict";
  request.filled_prompt = filled_prompt(bundle);
  request.context = bundle.context;

  auto direction_of = [](const nlohmann::json& r) -> std::optional<Label> {
    auto text = trim_copy(r["Price movement"].get<std::string>());
    std::transform(text.begin(), text.end(), text.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (text == "up") return Label::up;
    if (text == "down") return Label::down;
    return std::nullopt;
  };

  Prediction prediction;
  prediction.prompt_digest = sha256_hex(request.filled_prompt);
  try {
    auto response = generator_.generate(request, [&](const nlohmann::json& r) -> std::optional<std::string> {
      if (!direction_of(r)) return "Price movement must be up or down";
      return std::nullopt;
    });
    prediction.direction = direction_of(response);
    prediction.reason = json_text(response["Reason for price movement"]);
  } catch (const SchemaViolation& e) {
    prediction.direction.reset();
    prediction.reason = std::string("abstained: ") + e.what();
  }
  return prediction;
}

}  // namespace stockmem
