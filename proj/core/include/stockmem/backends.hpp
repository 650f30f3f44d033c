#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace stockmem {

enum class TemplateId { extract, merge, track, reason, retrieve_filter, predict };

std::string_view to_string(TemplateId id);
TemplateId template_id_from_string(std::string_view text);

/// One call to a text-generation role. `context` carries the structured
/// inputs the prompt was rendered from; remote providers ignore it, the
/// scripted mock may use it to answer.
struct GenRequest {
  TemplateId template_id = TemplateId::extract;
  std::string filled_prompt;
  std::string expected_schema;
  nlohmann::json context;
};

using Embedding = std::vector<float>;

class GenerationBackend {
 public:
  virtual ~GenerationBackend() = default;
  /// Raw model text for the request. Throws TransportError / RateLimitError.
  virtual std::string complete(const GenRequest& request) = 0;
};

class EmbeddingBackend {
 public:
  virtual ~EmbeddingBackend() = default;
  virtual std::size_t dimension() const = 0;
  virtual std::vector<Embedding> embed_batch(std::span<const std::string> texts) = 0;
};

// ---------------------------------------------------------------------------
// Schemas

enum class FieldKind { string, string_or_null, array, object, any };

struct SchemaField {
  std::string key;
  FieldKind kind = FieldKind::any;
};

struct Schema {
  std::string id;
  std::vector<SchemaField> required;
};

/// Registered response schemas, keyed by id ("extract", "predict", ...).
/// Throws ConfigError for unknown ids.
const Schema& schema_for(std::string_view id);

/// Returns an error message if `value` does not satisfy `schema`.
std::optional<std::string> validate(const Schema& schema, const nlohmann::json& value);

/// Pulls the JSON object out of model text, tolerating code fences and
/// surrounding prose. Throws ParseError.
nlohmann::json parse_model_json(std::string_view text);

// ---------------------------------------------------------------------------
// Audit log

struct AuditEntry {
  std::string template_id;
  std::string schema;
  std::string prompt_digest;
  int attempt = 0;
  std::string response;
  std::string outcome;  // "ok", "repair: <reason>", "transport: <reason>"
};

void to_json(nlohmann::json& j, const AuditEntry& e);

/// Every generate call appends here. Optionally mirrored to a JSONL stream.
class AuditLog {
 public:
  AuditLog() = default;
  explicit AuditLog(std::ostream* sink) : sink_(sink) {}

  void record(AuditEntry entry);
  std::vector<AuditEntry> entries() const;
  std::size_t size() const;

 private:
  mutable std::mutex mutex_;
  std::vector<AuditEntry> entries_;
  std::ostream* sink_ = nullptr;
};

// ---------------------------------------------------------------------------
// Schema-validated generation with bounded repair retries.

/// Extra semantic check on top of the schema; returns an error message.
using ResponseCheck = std::function<std::optional<std::string>(const nlohmann::json&)>;

struct GeneratorOptions {
  int retry_budget = 2;        // repair retries after the first attempt
  int rate_limit_retries = 3;  // transport retries on RateLimitError
  int rate_limit_backoff_ms = 500;
};

class Generator {
 public:
  Generator(GenerationBackend& backend, GeneratorOptions options = {}, AuditLog* audit = nullptr);

  /// Calls the backend, parses and validates against
  /// `request.expected_schema` plus `check`. On failure re-asks with a repair
  /// instruction up to `retry_budget` times, then throws SchemaViolation.
  nlohmann::json generate(const GenRequest& request, const ResponseCheck& check = {});

  const GeneratorOptions& options() const { return options_; }

 private:
  GenerationBackend& backend_;
  GeneratorOptions options_;
  AuditLog* audit_;
};

/// Validated embedding: non-empty input, dimension check, unit norm.
/// Throws PreconditionError / BackendError.
std::vector<Embedding> embed(EmbeddingBackend& backend, std::span<const std::string> texts);

double cosine(std::span<const float> a, std::span<const float> b);

// ---------------------------------------------------------------------------
// Mocks

struct FixtureEntry {
  TemplateId template_id = TemplateId::extract;
  std::string match_key;  // substring of the filled prompt; empty matches all
  std::string response;
  std::optional<int> times;  // consumed after this many uses
};

/// Fixture file: JSON array of
/// {"template": "predict", "match": "...", "response": <string or JSON>, "times": N}
std::vector<FixtureEntry> parse_fixture(const nlohmann::json& document);
std::vector<FixtureEntry> load_fixture(const std::filesystem::path& path);

using Responder = std::function<std::string(const GenRequest&)>;

/// Replays scripted responses in order; the first entry whose template and
/// match key fit wins. Unmatched requests go to `fallback` or fail with a
/// TransportError.
class MockGenerationBackend : public GenerationBackend {
 public:
  explicit MockGenerationBackend(std::vector<FixtureEntry> script, Responder fallback = {});

  std::string complete(const GenRequest& request) override;
  std::size_t calls() const;
  std::vector<GenRequest> requests() const;

 private:
  mutable std::mutex mutex_;
  std::vector<FixtureEntry> script_;
  std::vector<int> used_;
  Responder fallback_;
  std::vector<GenRequest> requests_;
};

/// Pseudo-random unit vector seeded from the SHA-256 of the text: the first
/// eight digest bytes (big endian) seed a mt19937_64, each component is
/// 2 * (u >> 11) * 2^-53 - 1, then the vector is L2-normalized.
/// Similar strings are NOT similar vectors.
class MockEmbeddingBackend : public EmbeddingBackend {
 public:
  explicit MockEmbeddingBackend(std::size_t dimension = 64) : dimension_(dimension) {}

  std::size_t dimension() const override { return dimension_; }
  std::vector<Embedding> embed_batch(std::span<const std::string> texts) override;

 private:
  std::size_t dimension_;
};

/// Returns fixed vectors for known texts and defers to another backend
/// otherwise. Used to control similarity in tests.
class InjectedEmbeddingBackend : public EmbeddingBackend {
 public:
  InjectedEmbeddingBackend(std::size_t dimension, std::shared_ptr<EmbeddingBackend> fallback = {});

  void inject(std::string text, Embedding vector);
  std::size_t dimension() const override { return dimension_; }
  std::vector<Embedding> embed_batch(std::span<const std::string> texts) override;

 private:
  std::size_t dimension_;
  std::shared_ptr<EmbeddingBackend> fallback_;
  std::vector<std::pair<std::string, Embedding>> injected_;
};

// ---------------------------------------------------------------------------
// Remote (OpenAI-compatible HTTP API)

struct RemoteConfig {
  std::string endpoint;            // OpenAI-compatible base URL, e.g. https://host/v1
  std::string model;
  std::string embedding_endpoint;  // defaults to endpoint
  std::string embedding_model;
  std::size_t embedding_dimension = 1024;
  double temperature = 0.0;
  std::string api_key_env = "STOCKMEM_API_KEY";
  std::string embedding_api_key_env;  // defaults to api_key_env
  int timeout_seconds = 120;
};

std::unique_ptr<GenerationBackend> make_remote_generation_backend(const RemoteConfig& config);
std::unique_ptr<EmbeddingBackend> make_remote_embedding_backend(const RemoteConfig& config);

}  // namespace stockmem
