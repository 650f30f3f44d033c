#include <cstdlib>
#include <memory>
#include <string>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "stockmem/backends.hpp"
#include "stockmem/errors.hpp"

namespace stockmem {
namespace {

struct Url {
  std::string origin;  // scheme://host[:port]
  std::string base_path;
};

Url split_url(const std::string& endpoint) {
  auto scheme_end = endpoint.find("://");
  if (scheme_end == std::string::npos) throw ConfigError("endpoint needs a scheme: " + endpoint);
  auto path_start = endpoint.find('/', scheme_end + 3);
  Url url;
  url.origin = endpoint.substr(0, path_start);
  url.base_path = path_start == std::string::npos ? "" : endpoint.substr(path_start);
  while (!url.base_path.empty() && url.base_path.back() == '/') url.base_path.pop_back();
  return url;
}

std::string api_key(const std::string& env_name) {
  const char* value = std::getenv(env_name.c_str());
  if (value == nullptr || *value == '\0') {
    throw ConfigError("environment variable " + env_name + " is not set");
  }
  return value;
}

nlohmann::json post_json(const std::string& endpoint, const std::string& path,
                         const std::string& key, const nlohmann::json& body, int timeout) {
  auto url = split_url(endpoint);
  httplib::Client client(url.origin);
  client.set_read_timeout(timeout, 0);
  client.set_connection_timeout(30, 0);
  client.set_bearer_token_auth(key);
  auto res = client.Post(url.base_path + path, body.dump(), "application/json");
  if (!res) {
    throw TransportError("request to " + endpoint + path + " failed: " + httplib::to_string(res.error()));
  }
  if (res->status == 429) throw RateLimitError("rate limited by " + endpoint);
  if (res->status < 200 || res->status >= 300) {
    throw TransportError("HTTP " + std::to_string(res->status) + " from " + endpoint + path + ": " +
                         res->body.substr(0, 300));
  }
  auto parsed = nlohmann::json::parse(res->body, nullptr, false);
  if (parsed.is_discarded()) throw TransportError("non-JSON body from " + endpoint + path);
  return parsed;
}

class RemoteGenerationBackend : public GenerationBackend {
 public:
  explicit RemoteGenerationBackend(RemoteConfig config)
      : config_(std::move(config)), key_(api_key(config_.api_key_env)) {}

  std::string complete(const GenRequest& request) override {
    nlohmann::json body = {
        {"model", config_.model},
        {"temperature", config_.temperature},
        {"messages", nlohmann::json::array({{{"role", "user"}, {"content", request.filled_prompt}}})}};
    auto reply = post_json(config_.endpoint, "/chat/completions", key_, body, config_.timeout_seconds);
    try {
      return reply.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception&) {
      throw TransportError("unexpected chat completion payload");
    }
  }

 private:
  RemoteConfig config_;
  std::string key_;
};

class RemoteEmbeddingBackend : public EmbeddingBackend {
 public:
  explicit RemoteEmbeddingBackend(RemoteConfig config)
      : config_(std::move(config)),
        key_(api_key(config_.embedding_api_key_env.empty() ? config_.api_key_env
                                                           : config_.embedding_api_key_env)) {}

  std::size_t dimension() const override { return config_.embedding_dimension; }

  std::vector<Embedding> embed_batch(std::span<const std::string> texts) override {
    const auto& endpoint =
        config_.embedding_endpoint.empty() ? config_.endpoint : config_.embedding_endpoint;
    nlohmann::json body = {{"model", config_.embedding_model},
                           {"input", std::vector<std::string>(texts.begin(), texts.end())}};
    auto reply = post_json(endpoint, "/embeddings", key_, body, config_.timeout_seconds);
    std::vector<Embedding> out(texts.size());
    try {
      for (const auto& item : reply.at("data")) {
        auto index = item.value("index", std::size_t{0});
        if (index >= out.size()) throw TransportError("embedding index out of range");
        out[index] = item.at("embedding").get<Embedding>();
      }
    } catch (const nlohmann::json::exception&) {
      throw TransportError("unexpected embeddings payload");
    }
    return out;
  }

 private:
  RemoteConfig config_;
  std::string key_;
};

}  // namespace

std::unique_ptr<GenerationBackend> make_remote_generation_backend(const RemoteConfig& config) {
  if (config.endpoint.empty()) throw ConfigError("remote backend needs an endpoint");
  return std::make_unique<RemoteGenerationBackend>(config);
}

std::unique_ptr<EmbeddingBackend> make_remote_embedding_backend(const RemoteConfig& config) {
  if (config.endpoint.empty() && config.embedding_endpoint.empty()) {
    throw ConfigError("remote embedding backend needs an endpoint");
  }
  return std::make_unique<RemoteEmbeddingBackend>(config);
}

}  // namespace stockmem
