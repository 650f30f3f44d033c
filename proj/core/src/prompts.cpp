#include "stockmem/prompts.hpp"

#include <fstream>
#include <sstream>

#include "stockmem/embedded_data.hpp"
#include "stockmem/errors.hpp"

namespace stockmem {
namespace {

bool is_name_char(char c) { return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_'; }

// Calls on_text for literal runs and on_placeholder for `{name}`.
template <typename Text, typename Placeholder>
void scan(const std::string& text, Text on_text, Placeholder on_placeholder) {
  std::size_t i = 0;
  while (i < text.size()) {
    char c = text[i];
    if ((c == '{' || c == '}') && i + 1 < text.size() && text[i + 1] == c) {
      on_text(std::string_view(&text[i], 1));
      i += 2;
      continue;
    }
    if (c == '{') {
      std::size_t j = i + 1;
      while (j < text.size() && is_name_char(text[j])) ++j;
      if (j < text.size() && text[j] == '}' && j > i + 1) {
        on_placeholder(std::string_view(&text[i + 1], j - i - 1));
        i = j + 1;
        continue;
      }
    }
    on_text(std::string_view(&text[i], 1));
    ++i;
  }
}

PromptTemplate read_or(const std::filesystem::path& path, std::string_view fallback) {
  std::ifstream in(path);
  if (!in) return PromptTemplate(std::string(fallback));
  std::stringstream buf;
  buf << in.rdbuf();
  return PromptTemplate(buf.str());
}

}  // namespace

PromptTemplate::PromptTemplate(std::string text) : text_(std::move(text)) {}

std::vector<std::string> PromptTemplate::placeholders() const {
  std::vector<std::string> out;
  scan(text_, [](std::string_view) {}, [&](std::string_view name) { out.emplace_back(name); });
  return out;
}

std::string PromptTemplate::render(const std::map<std::string, std::string>& values) const {
  std::string out;
  out.reserve(text_.size());
  scan(
      text_, [&](std::string_view s) { out.append(s); },
      [&](std::string_view name) {
        auto it = values.find(std::string(name));
        if (it == values.end()) {
          throw PreconditionError("no value for prompt placeholder {" + std::string(name) + "}");
        }
        out.append(it->second);
      });
  return out;
}

PromptSet PromptSet::builtin() {
  return PromptSet{PromptTemplate(std::string(embedded::k_extract)),
                   PromptTemplate(std::string(embedded::k_extract_recalibrate)),
                   PromptTemplate(std::string(embedded::k_merge)),
                   PromptTemplate(std::string(embedded::k_track_link)),
                   PromptTemplate(std::string(embedded::k_track_delta)),
                   PromptTemplate(std::string(embedded::k_reason)),
                   PromptTemplate(std::string(embedded::k_retrieve_filter)),
                   PromptTemplate(std::string(embedded::k_predict))};
}

PromptSet PromptSet::load_dir(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw ConfigError("prompt directory not found: " + dir.string());
  }
  return PromptSet{read_or(dir / "extract.txt", embedded::k_extract),
                   read_or(dir / "extract_recalibrate.txt", embedded::k_extract_recalibrate),
                   read_or(dir / "merge.txt", embedded::k_merge),
                   read_or(dir / "track_link.txt", embedded::k_track_link),
                   read_or(dir / "track_delta.txt", embedded::k_track_delta),
                   read_or(dir / "reason.txt", embedded::k_reason),
                   read_or(dir / "retrieve_filter.txt", embedded::k_retrieve_filter),
                   read_or(dir / "predict.txt", embedded::k_predict)};
}

}  // namespace stockmem
