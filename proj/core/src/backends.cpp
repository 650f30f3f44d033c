#include "stockmem/backends.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <thread>

#include <spdlog/spdlog.h>

#include "stockmem/digest.hpp"
#include "stockmem/errors.hpp"

namespace stockmem {

std::string_view to_string(TemplateId id) {
  switch (id) {
    case TemplateId::extract:
      return "extract";
    case TemplateId::merge:
      return "merge";
    case TemplateId::track:
      return "track";
    case TemplateId::reason:
      return "reason";
    case TemplateId::retrieve_filter:
      return "retrieve_filter";
    case TemplateId::predict:
      return "predict";
  }
  return "extract";
}

TemplateId template_id_from_string(std::string_view text) {
  for (auto id : {TemplateId::extract, TemplateId::merge, TemplateId::track, TemplateId::reason,
                  TemplateId::retrieve_filter, TemplateId::predict}) {
    if (to_string(id) == text) return id;
  }
  throw ParseError("unknown template id: " + std::string(text));
}

// Schemas ----------------------------------------------------------------------

const Schema& schema_for(std::string_view id) {
  static const std::map<std::string, Schema, std::less<>> registry = [] {
    std::map<std::string, Schema, std::less<>> m;
    auto add = [&](Schema s) { m.emplace(s.id, std::move(s)); };
    add({"extract", {{"events", FieldKind::array}}});
    add({"extract_recalibrate", {{"events", FieldKind::array}}});
    add({"merge", {{"events", FieldKind::array}}});
    add({"track_link", {{"predecessor", FieldKind::string_or_null}}});
    add({"track_delta",
         {{"Incremental information", FieldKind::string}, {"Polarity", FieldKind::string}}});
    add({"reason",
         {{"Reason for price movement", FieldKind::any},
          {"Events causing the impact", FieldKind::any}}});
    add({"retrieve_filter", {{"selected", FieldKind::array}}});
    add({"predict",
         {{"Reason for price movement", FieldKind::any}, {"Price movement", FieldKind::string}}});
    return m;
  }();
  auto it = registry.find(id);
  if (it == registry.end()) throw ConfigError("unknown response schema: " + std::string(id));
  return it->second;
}

std::optional<std::string> validate(const Schema& schema, const nlohmann::json& value) {
  if (!value.is_object()) return "response is not a JSON object";
  for (const auto& field : schema.required) {
    if (!value.contains(field.key)) return "missing required key \"" + field.key + "\"";
    const auto& v = value[field.key];
    bool ok = true;
    switch (field.kind) {
      case FieldKind::string:
        ok = v.is_string();
        break;
      case FieldKind::string_or_null:
        ok = v.is_string() || v.is_null();
        break;
      case FieldKind::array:
        ok = v.is_array();
        break;
      case FieldKind::object:
        ok = v.is_object();
        break;
      case FieldKind::any:
        ok = !v.is_null();
        break;
    }
    if (!ok) return "key \"" + field.key + "\" has the wrong type";
  }
  return std::nullopt;
}

nlohmann::json parse_model_json(std::string_view text) {
  auto attempt = [](std::string_view s) -> std::optional<nlohmann::json> {
    auto j = nlohmann::json::parse(s, nullptr, false);
    if (j.is_discarded()) return std::nullopt;
    return j;
  };
  if (auto j = attempt(text)) return *j;
  // Strip a ```json fence or surrounding prose: take the outermost object.
  auto open = text.find('{');
  auto close = text.rfind('}');
  if (open != std::string_view::npos && close != std::string_view::npos && close > open) {
    if (auto j = attempt(text.substr(open, close - open + 1))) return *j;
  }
  throw ParseError("response is not valid JSON");
}

// Audit --------------------------------------------------------------------------

void to_json(nlohmann::json& j, const AuditEntry& e) {
  j = {{"template_id", e.template_id}, {"schema", e.schema},     {"prompt_digest", e.prompt_digest},
       {"attempt", e.attempt},         {"outcome", e.outcome},   {"response", e.response}};
}

void AuditLog::record(AuditEntry entry) {
  std::lock_guard lock(mutex_);
  if (sink_ != nullptr) {
    *sink_ << nlohmann::json(entry).dump() << '\n';
  }
  entries_.push_back(std::move(entry));
}

std::vector<AuditEntry> AuditLog::entries() const {
  std::lock_guard lock(mutex_);
  return entries_;
}

std::size_t AuditLog::size() const {
  std::lock_guard lock(mutex_);
  return entries_.size();
}

// Generator ----------------------------------------------------------------------

Generator::Generator(GenerationBackend& backend, GeneratorOptions options, AuditLog* audit)
    : backend_(backend), options_(options), audit_(audit) {}

nlohmann::json Generator::generate(const GenRequest& request, const ResponseCheck& check) {
  const Schema& schema = schema_for(request.expected_schema);
  GenRequest attempt_request = request;
  std::string last_error;

  for (int attempt = 0; attempt <= options_.retry_budget; ++attempt) {
    std::string response;
    for (int transport_try = 0;; ++transport_try) {
      try {
        response = backend_.complete(attempt_request);
        break;
      } catch (const RateLimitError& e) {
        if (audit_ != nullptr) {
          audit_->record({std::string(to_string(request.template_id)), schema.id,
                          sha256_hex(attempt_request.filled_prompt), attempt, "",
                          std::string("transport: ") + e.what()});
        }
        if (transport_try >= options_.rate_limit_retries) throw;
        std::this_thread::sleep_for(
            std::chrono::milliseconds(options_.rate_limit_backoff_ms << transport_try));
      }
    }

    std::optional<std::string> problem;
    nlohmann::json parsed;
    try {
      parsed = parse_model_json(response);
      problem = validate(schema, parsed);
      if (!problem && check) problem = check(parsed);
    } catch (const ParseError& e) {
      problem = e.what();
    }

    if (audit_ != nullptr) {
      audit_->record({std::string(to_string(request.template_id)), schema.id,
                      sha256_hex(attempt_request.filled_prompt), attempt, response,
                      problem ? "repair: " + *problem : "ok"});
    }
    if (!problem) return parsed;

    last_error = *problem;
    attempt_request.filled_prompt =
        request.filled_prompt +
        "\n\nYour previous response could not be accepted: " + last_error +
        ". Respond again with only the JSON object in the required format.";
  }
  throw SchemaViolation(std::string(to_string(request.template_id)) + " response rejected after " +
                        std::to_string(options_.retry_budget) + " repair retries: " + last_error);
}

// Embeddings ---------------------------------------------------------------------

double cosine(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) throw PreconditionError("cosine of vectors with different dimensions");
  double dot = 0.0;
  double na = 0.0;
  double nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += static_cast<double>(a[i]) * b[i];
    na += static_cast<double>(a[i]) * a[i];
    nb += static_cast<double>(b[i]) * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

std::vector<Embedding> embed(EmbeddingBackend& backend, std::span<const std::string> texts) {
  if (texts.empty()) throw PreconditionError("embed requires at least one text");
  auto vectors = backend.embed_batch(texts);
  if (vectors.size() != texts.size()) {
    throw BackendError("embedding backend returned " + std::to_string(vectors.size()) +
                       " vectors for " + std::to_string(texts.size()) + " texts");
  }
  for (auto& v : vectors) {
    if (v.size() != backend.dimension()) {
      throw BackendError("embedding dimension " + std::to_string(v.size()) + " != configured " +
                         std::to_string(backend.dimension()));
    }
    double norm = 0.0;
    for (float x : v) norm += static_cast<double>(x) * x;
    norm = std::sqrt(norm);
    if (norm == 0.0) throw BackendError("embedding backend returned a zero vector");
    for (float& x : v) x = static_cast<float>(x / norm);
  }
  return vectors;
}

std::vector<Embedding> MockEmbeddingBackend::embed_batch(std::span<const std::string> texts) {
  std::vector<Embedding> out;
  out.reserve(texts.size());
  for (const auto& text : texts) {
    auto digest = sha256(text);
    std::uint64_t seed = 0;
    for (int i = 0; i < 8; ++i) seed = (seed << 8) | digest[static_cast<std::size_t>(i)];
    std::mt19937_64 rng(seed);
    Embedding v(dimension_);
    double norm = 0.0;
    for (auto& x : v) {
      double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
      x = static_cast<float>(2.0 * u - 1.0);
      norm += static_cast<double>(x) * x;
    }
    norm = std::sqrt(norm);
    for (auto& x : v) x = static_cast<float>(x / norm);
    out.push_back(std::move(v));
  }
  return out;
}

InjectedEmbeddingBackend::InjectedEmbeddingBackend(std::size_t dimension,
                                                   std::shared_ptr<EmbeddingBackend> fallback)
    : dimension_(dimension), fallback_(std::move(fallback)) {}

void InjectedEmbeddingBackend::inject(std::string text, Embedding vector) {
  injected_.emplace_back(std::move(text), std::move(vector));
}

std::vector<Embedding> InjectedEmbeddingBackend::embed_batch(std::span<const std::string> texts) {
  std::vector<Embedding> out;
  out.reserve(texts.size());
  for (const auto& text : texts) {
    auto it = std::find_if(injected_.begin(), injected_.end(),
                           [&](const auto& kv) { return kv.first == text; });
    if (it != injected_.end()) {
      out.push_back(it->second);
    } else if (fallback_) {
      out.push_back(fallback_->embed_batch(std::span<const std::string>(&text, 1)).front());
    } else {
      throw TransportError("no injected embedding for \"" + text + "\"");
    }
  }
  return out;
}

// Mock generation ----------------------------------------------------------------

std::vector<FixtureEntry> parse_fixture(const nlohmann::json& document) {
  if (!document.is_array()) throw ParseError("fixture must be a JSON array");
  std::vector<FixtureEntry> out;
  for (const auto& item : document) {
    FixtureEntry entry;
    entry.template_id = template_id_from_string(item.at("template").get<std::string>());
    entry.match_key = item.value("match", "");
    const auto& response = item.at("response");
    entry.response = response.is_string() ? response.get<std::string>() : response.dump();
    if (item.contains("times")) entry.times = item["times"].get<int>();
    out.push_back(std::move(entry));
  }
  return out;
}

std::vector<FixtureEntry> load_fixture(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open fixture file " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("fixture " + path.string() + ": " + e.what());
  }
  return parse_fixture(doc);
}

MockGenerationBackend::MockGenerationBackend(std::vector<FixtureEntry> script, Responder fallback)
    : script_(std::move(script)), used_(script_.size(), 0), fallback_(std::move(fallback)) {}

std::string MockGenerationBackend::complete(const GenRequest& request) {
  {
    std::lock_guard lock(mutex_);
    requests_.push_back(request);
    for (std::size_t i = 0; i < script_.size(); ++i) {
      const auto& entry = script_[i];
      if (entry.template_id != request.template_id) continue;
      if (entry.times && used_[i] >= *entry.times) continue;
      if (!entry.match_key.empty() &&
          request.filled_prompt.find(entry.match_key) == std::string::npos) {
        continue;
      }
      ++used_[i];
      return entry.response;
    }
  }
  if (fallback_) return fallback_(request);
  throw TransportError("mock backend has no scripted response for " +
                       std::string(to_string(request.template_id)) + " request");
}

std::size_t MockGenerationBackend::calls() const {
  std::lock_guard lock(mutex_);
  return requests_.size();
}

std::vector<GenRequest> MockGenerationBackend::requests() const {
  std::lock_guard lock(mutex_);
  return requests_;
}

}  // namespace stockmem
