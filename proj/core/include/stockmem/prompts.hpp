#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace stockmem {

/// Text with `{name}` placeholders. `{{` and `}}` render as literal braces.
class PromptTemplate {
 public:
  PromptTemplate() = default;
  explicit PromptTemplate(std::string text);

  const std::string& text() const { return text_; }
  std::vector<std::string> placeholders() const;

  /// Throws PreconditionError when a placeholder has no value, so a filled
  /// prompt never carries an unresolved placeholder.
  std::string render(const std::map<std::string, std::string>& values) const;

 private:
  std::string text_;
};

struct PromptSet {
  PromptTemplate extract;
  PromptTemplate extract_recalibrate;
  PromptTemplate merge;
  PromptTemplate track_link;
  PromptTemplate track_delta;
  PromptTemplate reason;
  PromptTemplate retrieve_filter;
  PromptTemplate predict;

  static PromptSet builtin();
  /// Reads <name>.txt for each template from `dir`; missing files keep the
  /// built-in text.
  static PromptSet load_dir(const std::filesystem::path& dir);
};

}  // namespace stockmem
