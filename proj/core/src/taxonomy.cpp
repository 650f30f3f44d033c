#include "stockmem/taxonomy.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "stockmem/embedded_data.hpp"
#include "stockmem/errors.hpp"

namespace stockmem {
namespace {

std::string_view trim(std::string_view s) {
  const auto* ws = " \t\r\n";
  auto first = s.find_first_not_of(ws);
  if (first == std::string_view::npos) return {};
  auto last = s.find_last_not_of(ws);
  return s.substr(first, last - first + 1);
}

}  // namespace

Taxonomy Taxonomy::parse(std::string_view document) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(document);
  } catch (const nlohmann::json::exception& e) {
    throw TaxonomyError(std::string("taxonomy document is not valid JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("groups") || !doc["groups"].is_array()) {
    throw TaxonomyError("taxonomy document must be an object with a \"groups\" array");
  }

  Taxonomy tax;
  tax.version_ = doc.value("version", 0);
  std::set<std::string, std::less<>> group_names;
  for (const auto& entry : doc["groups"]) {
    if (!entry.is_object() || !entry.contains("types") || !entry["types"].is_array()) {
      throw TaxonomyError("each group needs a \"types\" array");
    }
    std::string name = entry.contains("name") && entry["name"].is_string()
                           ? std::string(trim(entry["name"].get<std::string>()))
                           : std::string();
    if (name.empty()) {
      throw TaxonomyError("orphan type: " + entry["types"].dump() + " has no group");
    }
    if (!group_names.insert(name).second) throw TaxonomyError("duplicate group name: " + name);

    const int gid = static_cast<int>(tax.groups_.size());
    tax.groups_.push_back(EventGroup{gid, name});
    tax.group_members_.emplace_back();
    std::set<std::string, std::less<>> seen;
    for (const auto& t : entry["types"]) {
      if (!t.is_string()) throw TaxonomyError("type names must be strings in group " + name);
      std::string tname(trim(t.get<std::string>()));
      if (tname.empty()) throw TaxonomyError("empty type name in group " + name);
      if (!seen.insert(tname).second) {
        throw TaxonomyError("duplicate type name: " + tname + " in group " + name);
      }
      const int tid = static_cast<int>(tax.types_.size());
      tax.types_.push_back(EventType{tid, tname, gid});
      tax.group_members_.back().push_back(tid);
      tax.by_name_[tname].push_back(tid);
      tax.by_qualified_[name + std::string(kQualifier) + tname] = tid;
    }
    if (tax.group_members_.back().empty()) throw TaxonomyError("group has no types: " + name);
  }
  if (tax.groups_.size() != kGroupCount) {
    throw TaxonomyError("expected " + std::to_string(kGroupCount) + " groups, found " +
                        std::to_string(tax.groups_.size()));
  }
  if (tax.types_.size() != kTypeCount) {
    throw TaxonomyError("expected " + std::to_string(kTypeCount) + " types, found " +
                        std::to_string(tax.types_.size()));
  }
  return tax;
}

Taxonomy Taxonomy::load_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw TaxonomyError("cannot open taxonomy file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

const Taxonomy& Taxonomy::builtin() {
  static const Taxonomy tax = parse(embedded::k_taxonomy);
  return tax;
}

const EventGroup& Taxonomy::group(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= groups_.size()) {
    throw TaxonomyError("group id out of range: " + std::to_string(id));
  }
  return groups_[static_cast<std::size_t>(id)];
}

const EventType& Taxonomy::type(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= types_.size()) {
    throw TaxonomyError("type id out of range: " + std::to_string(id));
  }
  return types_[static_cast<std::size_t>(id)];
}

std::span<const int> Taxonomy::types_in_group(int group_id) const {
  group(group_id);
  return group_members_[static_cast<std::size_t>(group_id)];
}

std::optional<int> Taxonomy::find_group(std::string_view name) const {
  name = trim(name);
  for (const auto& g : groups_) {
    if (g.name == name) return g.id;
  }
  return std::nullopt;
}

TypeResolution Taxonomy::resolve(std::string_view name) const {
  name = trim(name);
  if (name.empty()) return {};
  if (auto q = by_qualified_.find(name); q != by_qualified_.end()) {
    return {TypeResolution::Status::resolved, &types_[static_cast<std::size_t>(q->second)]};
  }
  auto it = by_name_.find(name);
  if (it == by_name_.end()) return {};
  if (it->second.size() > 1) return {TypeResolution::Status::ambiguous, nullptr};
  return {TypeResolution::Status::resolved, &types_[static_cast<std::size_t>(it->second.front())]};
}

TypeResolution Taxonomy::resolve(std::string_view group_name, std::string_view type_name) const {
  auto gid = find_group(group_name);
  if (gid) {
    auto q = by_qualified_.find(groups_[static_cast<std::size_t>(*gid)].name +
                                std::string(kQualifier) + std::string(trim(type_name)));
    if (q != by_qualified_.end()) {
      return {TypeResolution::Status::resolved, &types_[static_cast<std::size_t>(q->second)]};
    }
  }
  return resolve(type_name);
}

const EventType& Taxonomy::resolve_type(std::string_view name) const {
  auto r = resolve(name);
  switch (r.status) {
    case TypeResolution::Status::resolved:
      return *r.type;
    case TypeResolution::Status::ambiguous:
      throw UnknownTypeError("ambiguous event type name (qualify with group): " + std::string(name));
    case TypeResolution::Status::unknown:
      break;
  }
  throw UnknownTypeError("unknown event type: \"" + std::string(name) + "\"");
}

std::string Taxonomy::qualified_name(int type_id) const {
  const auto& t = type(type_id);
  return group(t.group).name + std::string(kQualifier) + t.name;
}

std::string Taxonomy::render_listing() const {
  std::string out;
  for (const auto& g : groups_) {
    out += "- " + g.name + ": ";
    bool first = true;
    for (int tid : group_members_[static_cast<std::size_t>(g.id)]) {
      if (!first) out += "; ";
      out += types_[static_cast<std::size_t>(tid)].name;
      first = false;
    }
    out += "\n";
  }
  return out;
}

}  // namespace stockmem
