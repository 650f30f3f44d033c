#include "stockmem/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <random>

#include "stockmem/digest.hpp"
#include "stockmem/errors.hpp"

namespace stockmem {
namespace {

struct Topic {
  const char* type;  // qualified
  const char* subject;
};

constexpr Topic kTopics[] = {
    {"Corporate Operations::Profitability", "quarterly earnings"},
    {"Corporate Operations::Order Service Agreement Signing", "order intake"},
    {"Products and Market::New Product Launch", "flagship product launch"},
    {"Products and Market::Product Price Changes", "product pricing"},
    {"Technology Events::Shipment", "unit shipments"},
    {"Stock Market Performance::Capital Flows", "institutional fund flows"},
    {"Corporate Equity::Share Increase", "insider shareholding"},
    {"Policies and Regulation::Government Support", "subsidy program"},
    {"Risks and Warnings::Company-Specific Risks", "litigation exposure"},
    {"Corporate Personnel::Executives", "management transition"},
    {"Stock Market Performance::Institutional Views", "analyst ratings"},
    {"Other Financial Market Performance::Capital Flows", "bond market funding"},
};

const std::vector<Company>& default_companies() {
  static const std::vector<Company> companies = {{"ACME", "Acme Robotics"},
                                                 {"BOLT", "Bolt Energy"},
                                                 {"CRUX", "Crux Semiconductors"},
                                                 {"DUNE", "Dune Logistics"}};
  return companies;
}

double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

int pick(std::mt19937_64& rng, int n) { return static_cast<int>(rng() % static_cast<std::uint64_t>(n)); }

std::string doc_id(const std::string& ticker, Date date, int n) {
  char buf[8];
  std::snprintf(buf, sizeof buf, "%02d", n);
  return ticker + "-" + date.str() + "-" + buf;
}

struct Occurrence {
  const Topic* topic;
  int tone;  // +1, -1, 0
  int magnitude;
};

std::string describe(const Company& c, const Occurrence& o) {
  std::string base = c.name + " " + o.topic->subject;
  if (o.tone > 0) return base + " came in ahead of expectations by " + std::to_string(o.magnitude) + "%";
  if (o.tone < 0) return base + " came in below expectations by " + std::to_string(o.magnitude) + "%";
  return base + " came in as expected";
}

NewsDoc make_doc(const Company& c, Date date, int n, const Occurrence& o, const Taxonomy& taxonomy,
                 const char* outlet) {
  const auto& type = taxonomy.resolve_type(o.topic->type);
  NewsDoc d;
  d.doc_id = doc_id(c.ticker, date, n);
  d.company = c.ticker;
  d.date = date;
  d.title = c.name + " " + o.topic->subject + (o.tone > 0 ? " beat" : o.tone < 0 ? " miss" : " update");
  d.body = std::string(outlet) + " reports on " + c.name + ". " + describe(c, o) + ".\n" + "@event " +
           taxonomy.qualified_name(type.id) + " | " + describe(c, o) + "\n";
  return d;
}

}  // namespace

SyntheticCorpus make_synthetic_corpus(const SyntheticCorpusOptions& options,
                                      const Taxonomy& taxonomy) {
  if (options.train_days < 1 || options.test_days < 1) {
    throw PreconditionError("synthetic corpus needs at least one train and one test day");
  }
  if (options.storylines < 1) throw PreconditionError("synthetic corpus needs a storyline");
  SyntheticCorpus corpus;
  corpus.companies = options.companies.empty() ? default_companies() : options.companies;

  // Weekdays only; one extra day so the last test day has a label.
  std::vector<Date> days;
  const auto total = static_cast<std::size_t>(options.train_days + options.test_days + 1);
  for (Date d = options.start; days.size() < total; d = d.next()) {
    if (d.weekday() < 5) days.push_back(d);
  }
  corpus.train_start = days.front();
  corpus.train_end = days[static_cast<std::size_t>(options.train_days - 1)];
  corpus.test_start = days[static_cast<std::size_t>(options.train_days)];
  corpus.test_end = days[static_cast<std::size_t>(options.train_days + options.test_days - 1)];

  constexpr int kTopicCount = static_cast<int>(std::size(kTopics));
  for (std::size_t ci = 0; ci < corpus.companies.size(); ++ci) {
    const auto& company = corpus.companies[ci];
    std::mt19937_64 rng(options.seed ^ (0x9E3779B97F4A7C15ULL * (ci + 1)));
    std::vector<const Topic*> storylines;
    while (static_cast<int>(storylines.size()) < std::min(options.storylines, kTopicCount)) {
      const Topic* t = &kTopics[pick(rng, kTopicCount)];
      if (std::find(storylines.begin(), storylines.end(), t) == storylines.end()) storylines.push_back(t);
    }

    double carried = 0.0;  // price impact of the previous trading day's news
    for (std::size_t i = 0; i < days.size(); ++i) {
      const Date date = days[i];
      double noise = (unit(rng) + unit(rng) + unit(rng) - 1.5) * 0.01;
      corpus.prices.push_back({company.ticker, date, carried + noise});

      double impact = 0.0;
      int n = 0;
      for (const auto* topic : storylines) {
        if (unit(rng) >= 0.35) continue;
        double u = unit(rng);
        Occurrence o{topic, u < 0.4 ? 1 : u < 0.8 ? -1 : 0, 2 + pick(rng, 14)};
        corpus.news.push_back(make_doc(company, date, n++, o, taxonomy, "Wire"));
        if (unit(rng) < 0.15) {
          corpus.news.push_back(make_doc(company, date, n++, o, taxonomy, "Daily Ledger"));
        }
        impact += o.tone * o.magnitude * 0.0015;
      }
      if (unit(rng) < 0.2) {
        NewsDoc color;
        color.doc_id = doc_id(company.ticker, date, n++);
        color.company = company.ticker;
        color.date = date;
        color.title = company.name + " shares in focus";
        color.body = "Traders discussed " + company.name + " without fresh news.\n";
        corpus.news.push_back(std::move(color));
      }
      // Weekend coverage lands between Friday and Monday.
      if (date.weekday() == 4 && unit(rng) < 0.3) {
        Occurrence o{storylines[static_cast<std::size_t>(pick(rng, static_cast<int>(storylines.size())))],
                     unit(rng) < 0.5 ? 1 : -1, 2 + pick(rng, 14)};
        corpus.news.push_back(make_doc(company, date.plus_days(1), 0, o, taxonomy, "Weekend Review"));
      }
      carried = impact;
    }
  }
  std::sort(corpus.news.begin(), corpus.news.end(),
            [](const NewsDoc& a, const NewsDoc& b) { return a.doc_id < b.doc_id; });
  return corpus;
}

namespace {

std::string tone_of(const std::string& text) {
  if (text.find("ahead of") != std::string::npos) return "more positive";
  if (text.find("below") != std::string::npos) return "more negative";
  return "neutral";
}

nlohmann::json answer_extract(const Taxonomy& taxonomy, const nlohmann::json& ctx) {
  nlohmann::json events = nlohmann::json::array();
  const auto doc = ctx.at("doc").get<NewsDoc>();
  std::size_t pos = 0;
  while (pos < doc.body.size()) {
    auto end = doc.body.find('\n', pos);
    if (end == std::string::npos) end = doc.body.size();
    std::string line = doc.body.substr(pos, end - pos);
    pos = end + 1;
    if (line.rfind("@event ", 0) != 0) continue;
    auto bar = line.find(" | ");
    if (bar == std::string::npos) continue;
    std::string qualified = line.substr(7, bar - 7);
    std::string description = line.substr(bar + 3);
    auto sep = qualified.find("::");
    std::string group = sep == std::string::npos ? "" : qualified.substr(0, sep);
    std::string type = sep == std::string::npos ? qualified : qualified.substr(sep + 2);
    (void)taxonomy;
    events.push_back({{"group", group},
                      {"type", type},
                      {"time", doc.date},
                      {"entities", {doc.company}},
                      {"companies", {doc.company}},
                      {"open_params", {{"tone", tone_of(description)}}},
                      {"description", description}});
  }
  return {{"events", events}};
}

nlohmann::json answer_merge(const nlohmann::json& ctx) {
  std::map<std::pair<std::string, std::string>, nlohmann::json> groups;
  std::vector<std::pair<std::string, std::string>> order;
  for (const auto& m : ctx.at("members")) {
    std::pair<std::string, std::string> key{m.at("type").get<std::string>(),
                                            m.at("description").get<std::string>()};
    auto [it, inserted] = groups.try_emplace(key, nlohmann::json{{"members", nlohmann::json::array()},
                                                                 {"group", m.at("group")},
                                                                 {"type", m.at("type")},
                                                                 {"description", m.at("description")}});
    if (inserted) order.push_back(key);
    it->second["members"].push_back(m.at("index"));
  }
  nlohmann::json events = nlohmann::json::array();
  for (const auto& key : order) events.push_back(groups[key]);
  return {{"events", events}};
}

nlohmann::json answer_link(const nlohmann::json& ctx) {
  const auto& current = ctx.at("current");
  const nlohmann::json* best = nullptr;
  for (const auto& c : ctx.at("candidates")) {
    if (c.at("type") != current.at("type") || c.at("group") != current.at("group")) continue;
    if (best == nullptr || c.at("date").get<Date>() > best->at("date").get<Date>() ||
        (c.at("date") == best->at("date") && c.at("event_id") < best->at("event_id"))) {
      best = &c;
    }
  }
  return {{"predecessor", best ? best->at("event_id") : nlohmann::json(nullptr)}};
}

nlohmann::json answer_delta(const nlohmann::json& ctx) {
  const auto desc = ctx.at("current").at("description").get<std::string>();
  std::string text;
  if (ctx.at("chain").empty()) {
    text = "New development: " + desc;
  } else {
    const auto& prev = ctx.at("chain").front();
    text = "Versus " + prev.at("date").get<std::string>() + " (" +
           prev.at("description").get<std::string>() + "), now: " + desc;
  }
  return {{"Incremental information", text}, {"Polarity", tone_of(desc)}};
}

nlohmann::json answer_reason(const nlohmann::json& ctx) {
  std::string company = ctx.at("company").get<std::string>();
  std::string realized = ctx.at("realized").get<std::string>();
  std::string key = ctx.value("key_event", std::string());
  std::string reason = company + " moved " + realized + " after " +
                       std::to_string(ctx.at("event_count").get<int>()) + " events in the window";
  if (!key.empty()) reason += "; the latest was: " + key;
  return {{"Reason for price movement", reason},
          {"Events causing the impact", key.empty() ? "no single dominant event" : key}};
}

nlohmann::json answer_filter(const nlohmann::json& ctx) {
  nlohmann::json selected = nlohmann::json::array();
  const nlohmann::json* best = nullptr;
  for (const auto& c : ctx.at("candidates")) {
    if (c.at("similarity").get<double>() >= 0.5) selected.push_back(c.at("index"));
    if (best == nullptr || c.at("similarity").get<double>() > best->at("similarity").get<double>()) best = &c;
  }
  if (selected.empty() && best != nullptr && best->at("similarity").get<double>() > 0.2) {
    selected.push_back(best->at("index"));
  }
  return {{"selected", selected}};
}

nlohmann::json answer_predict(const GenRequest& request) {
  const auto& ctx = request.context;
  double score = 0.0;
  if (ctx.contains("polarity")) {
    score += ctx["polarity"].value("more_positive", 0) - ctx["polarity"].value("more_negative", 0);
  }
  if (ctx.contains("references")) {
    for (const auto& r : ctx["references"]) {
      auto move = r.value("realized", std::string("flat"));
      if (move == "up") score += 0.5;
      if (move == "down") score -= 0.5;
    }
  }
  std::string direction;
  std::string why;
  if (score > 0) {
    direction = "up";
    why = "positive incremental developments outweigh negative ones";
  } else if (score < 0) {
    direction = "down";
    why = "negative incremental developments outweigh positive ones";
  } else {
    auto digest = sha256(request.filled_prompt);
    direction = (digest[0] & 1) ? "up" : "down";
    why = "no clear balance of evidence";
  }
  return {{"Reason for price movement", why}, {"Price movement", direction}};
}

}  // namespace

Responder synthetic_responder(const Taxonomy& taxonomy) {
  return [&taxonomy](const GenRequest& request) -> std::string {
    const auto& schema = request.expected_schema;
    nlohmann::json answer;
    if (schema == "extract") {
      answer = answer_extract(taxonomy, request.context);
    } else if (schema == "extract_recalibrate") {
      answer = {{"events", nlohmann::json::array()}};
    } else if (schema == "merge") {
      answer = answer_merge(request.context);
    } else if (schema == "track_link") {
      answer = answer_link(request.context);
    } else if (schema == "track_delta") {
      answer = answer_delta(request.context);
    } else if (schema == "reason") {
      answer = answer_reason(request.context);
    } else if (schema == "retrieve_filter") {
      answer = answer_filter(request.context);
    } else if (schema == "predict") {
      answer = answer_predict(request);
    } else {
      throw TransportError("synthetic responder has no answer for schema " + schema);
    }
    return answer.dump();
  };
}

}  // namespace stockmem
