#include "stockmem/merging.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <set>

#include "stockmem/errors.hpp"

namespace stockmem {
namespace {

class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }

  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent_[std::max(a, b)] = std::min(a, b);
  }

 private:
  std::vector<std::size_t> parent_;
};

void append_unique(std::vector<std::string>& into, const std::vector<std::string>& from) {
  for (const auto& s : from) {
    if (std::find(into.begin(), into.end(), s) == into.end()) into.push_back(s);
  }
}

std::string text_field(const nlohmann::json& item, const char* key) {
  if (!item.contains(key) || !item[key].is_string()) return {};
  return item[key].get<std::string>();
}

}  // namespace

std::vector<Cluster> cluster_group(std::span<const Event> events, double threshold) {
  if (events.empty()) return {};
  for (const auto& e : events) {
    if (!e.embedding) throw PreconditionError("event " + e.event_id + " has no embedding");
    if (e.group.id != events.front().group.id) {
      throw PreconditionError("cluster_group received events from different groups");
    }
  }

  std::vector<std::size_t> order(events.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return events[a].event_id < events[b].event_id; });

  DisjointSets sets(order.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    for (std::size_t j = i + 1; j < order.size(); ++j) {
      if (cosine(*events[order[i]].embedding, *events[order[j]].embedding) >= threshold) {
        sets.unite(i, j);
      }
    }
  }

  // Roots are the smallest sorted position in each set, so iterating in
  // sorted order yields clusters ordered by their first member.
  std::map<std::size_t, std::size_t> cluster_of_root;
  std::vector<Cluster> clusters;
  for (std::size_t i = 0; i < order.size(); ++i) {
    auto root = sets.find(i);
    auto [it, inserted] = cluster_of_root.emplace(root, clusters.size());
    if (inserted) {
      Cluster c;
      c.group = events.front().group.id;
      clusters.push_back(std::move(c));
    }
    clusters[it->second].member_event_ids.push_back(events[order[i]].event_id);
  }

  std::map<std::string_view, const Event*> by_id;
  for (const auto& e : events) by_id[e.event_id] = &e;
  const std::size_t dim = events.front().embedding->size();
  for (auto& c : clusters) {
    std::vector<double> sum(dim, 0.0);
    for (const auto& id : c.member_event_ids) {
      const auto& v = *by_id.at(id)->embedding;
      for (std::size_t k = 0; k < dim; ++k) sum[k] += v[k];
    }
    double norm = 0.0;
    for (double x : sum) norm += x * x;
    norm = std::sqrt(norm);
    c.centroid.resize(dim);
    for (std::size_t k = 0; k < dim; ++k) {
      c.centroid[k] = static_cast<float>(norm > 0.0 ? sum[k] / norm : 0.0);
    }
  }
  return clusters;
}

EventMerger::EventMerger(const Taxonomy& taxonomy, const PromptSet& prompts, Generator& generator,
                         EmbeddingBackend& embedder, MergeOptions options)
    : taxonomy_(taxonomy),
      prompts_(prompts),
      generator_(generator),
      embedder_(embedder),
      options_(options) {}

std::vector<Event> EventMerger::refine_cluster(const Cluster& cluster,
                                               std::span<const Event> members) const {
  if (members.empty() || members.size() != cluster.member_event_ids.size()) {
    throw PreconditionError("refine_cluster needs the cluster's member events");
  }
  if (members.size() == 1) return {members.front()};

  const std::size_t n = members.size();
  std::string listing;
  nlohmann::json context_members = nlohmann::json::array();
  for (std::size_t i = 0; i < n; ++i) {
    const auto& m = members[i];
    listing += std::to_string(i + 1) + ". [" + taxonomy_.qualified_name(m.type.id) + "] " +
               m.description + "\n";
    context_members.push_back({{"index", i + 1},
                               {"event_id", m.event_id},
                               {"group", m.group.name},
                               {"type", m.type.name},
                               {"description", m.description}});
  }

  GenRequest request;
  request.template_id = TemplateId::merge;
  request.expected_schema = "merge";
  request.filled_prompt = prompts_.merge.render(
      {{"taxonomy", taxonomy_.render_listing()}, {"cluster_events", listing}});
  request.context = {{"members", context_members}};

  auto check = [&](const nlohmann::json& response) -> std::optional<std::string> {
    std::vector<int> seen(n, 0);
    for (const auto& out : response["events"]) {
      if (!out.is_object() || !out.contains("members") || !out["members"].is_array() ||
          out["members"].empty()) {
        return "each merged event needs a non-empty members list";
      }
      for (const auto& idx : out["members"]) {
        if (!idx.is_number_integer()) return "member indices must be integers";
        auto k = idx.get<std::int64_t>();
        if (k < 1 || static_cast<std::size_t>(k) > n) return "member index out of range";
        ++seen[static_cast<std::size_t>(k - 1)];
      }
      if (text_field(out, "description").empty()) return "merged event needs a description";
      if (!taxonomy_.resolve(text_field(out, "group"), text_field(out, "type"))) {
        return "merged event type \"" + text_field(out, "type") + "\" is not in the taxonomy";
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (seen[i] != 1) return "input event " + std::to_string(i + 1) + " must be assigned exactly once";
    }
    return std::nullopt;
  };

  auto response = generator_.generate(request, check);
  std::vector<Event> merged;
  for (const auto& out : response["events"]) {
    const auto& type = *taxonomy_.resolve(text_field(out, "group"), text_field(out, "type")).type;
    Event e;
    e.type = type;
    e.group = taxonomy_.group(type.group);
    e.description = text_field(out, "description");
    std::set<std::string> sources;
    bool first = true;
    std::vector<std::int64_t> indices = out["members"].get<std::vector<std::int64_t>>();
    std::sort(indices.begin(), indices.end());
    for (auto k : indices) {
      const auto& m = members[static_cast<std::size_t>(k - 1)];
      if (first) {
        e.event_id = m.event_id;
        e.company = m.company;
        e.time = m.time;
        first = false;
      }
      if (!e.location && m.location) e.location = m.location;
      append_unique(e.entities, m.entities);
      append_unique(e.industries, m.industries);
      append_unique(e.companies, m.companies);
      for (const auto& [key, value] : m.open_params) e.open_params.emplace(key, value);
      sources.insert(m.source_docs.begin(), m.source_docs.end());
    }
    e.source_docs.assign(sources.begin(), sources.end());
    merged.push_back(std::move(e));
  }
  return merged;
}

DailyEventSet EventMerger::merge_day(const std::string& company, Date date,
                                     std::vector<Event> raw) const {
  if (raw.empty()) return make_daily_set(company, date, {}, taxonomy_);

  std::vector<std::string> texts;
  std::vector<std::size_t> missing;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (!raw[i].embedding) {
      missing.push_back(i);
      texts.push_back(raw[i].description);
    }
  }
  if (!texts.empty()) {
    auto vectors = embed(embedder_, texts);
    for (std::size_t k = 0; k < missing.size(); ++k) raw[missing[k]].embedding = std::move(vectors[k]);
  }

  std::map<int, std::vector<Event>> by_group;
  for (auto& e : raw) by_group[e.group.id].push_back(std::move(e));

  std::vector<Event> merged;
  for (auto& [group, events] : by_group) {
    std::map<std::string_view, const Event*> by_id;
    for (const auto& e : events) by_id[e.event_id] = &e;
    for (const auto& cluster : cluster_group(events, options_.cosine_threshold)) {
      std::vector<Event> members;
      for (const auto& id : cluster.member_event_ids) members.push_back(*by_id.at(id));
      auto refined = refine_cluster(cluster, members);
      if (refined.size() != 1 || members.size() != 1) {
        for (auto& e : refined) e.embedding.reset();
      }
      for (auto& e : refined) merged.push_back(std::move(e));
    }
  }

  texts.clear();
  missing.clear();
  for (std::size_t i = 0; i < merged.size(); ++i) {
    char suffix[16];
    std::snprintf(suffix, sizeof suffix, "/e%03zu", i);
    merged[i].event_id = company + "/" + date.str() + suffix;
    merged[i].company = company;
    merged[i].time = date;
    if (!merged[i].embedding) {
      missing.push_back(i);
      texts.push_back(merged[i].description);
    }
  }
  if (!texts.empty()) {
    auto vectors = embed(embedder_, texts);
    for (std::size_t k = 0; k < missing.size(); ++k) {
      merged[missing[k]].embedding = std::move(vectors[k]);
    }
  }
  return make_daily_set(company, date, std::move(merged), taxonomy_);
}

}  // namespace stockmem
