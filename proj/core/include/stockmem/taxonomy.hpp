#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace stockmem {

inline constexpr std::size_t kGroupCount = 13;
inline constexpr std::size_t kTypeCount = 57;

struct EventGroup {
  int id = -1;
  std::string name;

  bool operator==(const EventGroup&) const = default;
};

struct EventType {
  int id = -1;
  std::string name;
  int group = -1;

  bool operator==(const EventType&) const = default;
};

/// Outcome of a name lookup. `ambiguous` happens for the few type names that
/// appear under more than one group ("Market Size", "Capital Flows",
/// "Institutional Views"); callers disambiguate with the qualified form
/// "<group>::<type>".
struct TypeResolution {
  enum class Status { resolved, unknown, ambiguous };
  Status status = Status::unknown;
  const EventType* type = nullptr;

  explicit operator bool() const { return status == Status::resolved; }
};

/// The fixed two-level event type system. Indices follow the listing order of
/// the definition document, so occurrence vectors are stable across runs.
/// Immutable once loaded.
class Taxonomy {
 public:
  static constexpr std::string_view kQualifier = "::";

  /// Parses and validates a definition document:
  /// {"version": N, "groups": [{"name": ..., "types": [...]}, ...]}
  static Taxonomy parse(std::string_view document);
  static Taxonomy load_file(const std::filesystem::path& path);
  /// The taxonomy compiled into the library.
  static const Taxonomy& builtin();

  int version() const { return version_; }
  std::size_t group_count() const { return groups_.size(); }
  std::size_t type_count() const { return types_.size(); }

  std::span<const EventGroup> groups() const { return groups_; }
  std::span<const EventType> types() const { return types_; }
  const EventGroup& group(int id) const;
  const EventType& type(int id) const;
  std::span<const int> types_in_group(int group_id) const;

  std::optional<int> find_group(std::string_view name) const;

  /// Exact, case-sensitive match after trimming surrounding whitespace.
  /// Accepts a bare type name or "<group>::<type>".
  TypeResolution resolve(std::string_view name) const;
  /// Like resolve(), but a group hint disambiguates shared type names.
  TypeResolution resolve(std::string_view group_name, std::string_view type_name) const;
  /// Throws UnknownTypeError unless the name resolves.
  const EventType& resolve_type(std::string_view name) const;

  std::string qualified_name(int type_id) const;
  /// Group-by-group listing of every valid type, used in extraction prompts.
  std::string render_listing() const;

 private:
  int version_ = 0;
  std::vector<EventGroup> groups_;
  std::vector<EventType> types_;
  std::vector<std::vector<int>> group_members_;
  std::map<std::string, std::vector<int>, std::less<>> by_name_;
  std::map<std::string, int, std::less<>> by_qualified_;
};

}  // namespace stockmem
