#include "stockmem/config.hpp"

#include <fstream>
#include <set>
#include <tuple>

#include "stockmem/errors.hpp"

namespace stockmem {

namespace fs = std::filesystem;

std::string_view to_string(Representation representation) {
  switch (representation) {
    case Representation::event:
      return "event";
    case Representation::summary:
      return "summary";
    case Representation::cluster_opinion:
      return "cluster_opinion";
  }
  return "event";
}

Representation representation_from_string(std::string_view text) {
  for (auto r : {Representation::event, Representation::summary, Representation::cluster_opinion}) {
    if (to_string(r) == text) return r;
  }
  throw ConfigError("unknown representation: " + std::string(text));
}

void AblationFlags::validate() const {
  if (representation != Representation::event && delta_info) {
    throw ConfigError("conflicting ablation flags: representation=" +
                      std::string(to_string(representation)) +
                      " has no event chains, so delta_info must be off");
  }
}

void BacktestConfig::validate() const {
  if (companies.empty()) throw ConfigError("no companies configured");
  std::set<std::string> tickers;
  for (const auto& c : companies) {
    if (c.ticker.empty()) throw ConfigError("company with empty ticker");
    if (!tickers.insert(c.ticker).second) throw ConfigError("duplicate company " + c.ticker);
  }
  if (train_end < train_start) throw ConfigError("train range is empty");
  if (test_end < test_start) throw ConfigError("test range is empty");
  if (!(train_end < test_start)) throw ConfigError("train range must end before the test range starts");
  if (window < 1) throw ConfigError("window must be at least 1");
  if (retrieval.window != window) throw ConfigError("retrieval.window must equal window");
  if (retrieval.alpha < 0.0 || retrieval.alpha > 1.0) throw ConfigError("retrieval.alpha must lie in [0, 1]");
  if (retrieval.coarse_k < 1) throw ConfigError("retrieval.coarse_k must be at least 1");
  if (merge_threshold < -1.0 || merge_threshold > 1.0) {
    throw ConfigError("merge.cosine_threshold must lie in [-1, 1]");
  }
  if (tracking_k < 1) throw ConfigError("tracking.candidate_k must be at least 1");
  if (backend.kind != "mock" && backend.kind != "remote") {
    throw ConfigError("backend.kind must be mock or remote");
  }
  if (backend.retry_budget < 0) throw ConfigError("backend.retry_budget must be non-negative");
  if (threads < 1) throw ConfigError("threads must be at least 1");
  ablation.validate();
}

namespace {

fs::path resolve_path(const std::string& p, const fs::path& base) {
  fs::path path(p);
  if (path.is_relative() && !base.empty()) return base / path;
  return path;
}

std::pair<Date, Date> range(const nlohmann::json& j, const char* name) {
  if (!j.contains(name)) throw ConfigError(std::string("missing ") + name + " range");
  const auto& r = j[name];
  if (r.is_array() && r.size() == 2) return {r[0].get<Date>(), r[1].get<Date>()};
  return {r.at("start").get<Date>(), r.at("end").get<Date>()};
}

}  // namespace

BacktestConfig config_from_json(const nlohmann::json& doc, const fs::path& base_dir) {
  BacktestConfig c;
  try {
    c.companies = doc.at("companies").get<std::vector<Company>>();
    std::tie(c.train_start, c.train_end) = range(doc, "train");
    std::tie(c.test_start, c.test_end) = range(doc, "test");
    c.window = doc.value("window", 5);
    c.retrieval.window = c.window;
    if (doc.contains("retrieval")) {
      const auto& r = doc["retrieval"];
      c.retrieval.alpha = r.value("alpha", c.retrieval.alpha);
      if (r.contains("window")) {
        c.window = r["window"].get<int>();
        c.retrieval.window = c.window;
      }
      c.retrieval.coarse_k = r.value("coarse_k", c.retrieval.coarse_k);
      if (r.contains("strategy")) {
        c.ablation.strategy = retrieval_strategy_from_string(r["strategy"].get<std::string>());
      }
    }
    if (doc.contains("merge")) c.merge_threshold = doc["merge"].value("cosine_threshold", c.merge_threshold);
    if (doc.contains("tracking")) c.tracking_k = doc["tracking"].value("candidate_k", c.tracking_k);
    if (doc.contains("reflection")) c.reflect_flat = doc["reflection"].value("include_flat", c.reflect_flat);
    if (doc.contains("ablation")) {
      const auto& a = doc["ablation"];
      if (a.contains("representation")) {
        c.ablation.representation = representation_from_string(a["representation"].get<std::string>());
      }
      c.ablation.delta_info = a.value("delta_info", c.ablation.delta_info);
      if (a.contains("strategy")) {
        c.ablation.strategy = retrieval_strategy_from_string(a["strategy"].get<std::string>());
      }
    }
    if (doc.contains("backend")) {
      const auto& b = doc["backend"];
      c.backend.kind = b.value("kind", c.backend.kind);
      if (b.contains("fixture")) c.backend.fixture = resolve_path(b["fixture"].get<std::string>(), base_dir);
      c.backend.synthetic_fallback = b.value("synthetic_fallback", c.backend.synthetic_fallback);
      c.backend.embedding_dimension = b.value("embedding_dimension", c.backend.embedding_dimension);
      c.backend.retry_budget = b.value("retry_budget", c.backend.retry_budget);
      auto& r = c.backend.remote;
      r.endpoint = b.value("endpoint", r.endpoint);
      r.model = b.value("model", r.model);
      r.embedding_endpoint = b.value("embedding_endpoint", r.embedding_endpoint);
      r.embedding_model = b.value("embedding_model", r.embedding_model);
      r.embedding_dimension = c.backend.embedding_dimension;
      r.temperature = b.value("temperature", r.temperature);
      r.api_key_env = b.value("api_key_env", r.api_key_env);
      r.embedding_api_key_env = b.value("embedding_api_key_env", r.embedding_api_key_env);
      r.timeout_seconds = b.value("timeout_seconds", r.timeout_seconds);
    }
    if (doc.contains("data")) {
      const auto& d = doc["data"];
      if (d.contains("news")) c.news_path = resolve_path(d["news"].get<std::string>(), base_dir);
      if (d.contains("prices")) c.prices_path = resolve_path(d["prices"].get<std::string>(), base_dir);
    }
    if (doc.contains("prompts_dir")) c.prompts_dir = resolve_path(doc["prompts_dir"].get<std::string>(), base_dir);
    if (doc.contains("taxonomy")) c.taxonomy_path = resolve_path(doc["taxonomy"].get<std::string>(), base_dir);
    c.threads = doc.value("threads", c.threads);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("invalid config: ") + e.what());
  } catch (const ParseError& e) {
    throw ConfigError(std::string("invalid config: ") + e.what());
  }
  return c;
}

BacktestConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return config_from_json(doc, path.parent_path());
}

nlohmann::json to_json(const BacktestConfig& c) {
  nlohmann::json j = {
      {"companies", c.companies},
      {"train", {{"start", c.train_start}, {"end", c.train_end}}},
      {"test", {{"start", c.test_start}, {"end", c.test_end}}},
      {"window", c.window},
      {"retrieval",
       {{"alpha", c.retrieval.alpha},
        {"window", c.retrieval.window},
        {"coarse_k", c.retrieval.coarse_k},
        {"strategy", to_string(c.ablation.strategy)}}},
      {"merge", {{"cosine_threshold", c.merge_threshold}}},
      {"tracking", {{"candidate_k", c.tracking_k}}},
      {"reflection", {{"include_flat", c.reflect_flat}}},
      {"ablation",
       {{"representation", to_string(c.ablation.representation)}, {"delta_info", c.ablation.delta_info}}},
      {"backend",
       {{"kind", c.backend.kind},
        {"synthetic_fallback", c.backend.synthetic_fallback},
        {"embedding_dimension", c.backend.embedding_dimension},
        {"retry_budget", c.backend.retry_budget},
        {"endpoint", c.backend.remote.endpoint},
        {"model", c.backend.remote.model},
        {"embedding_endpoint", c.backend.remote.embedding_endpoint},
        {"embedding_model", c.backend.remote.embedding_model},
        {"temperature", c.backend.remote.temperature},
        {"api_key_env", c.backend.remote.api_key_env}}},
      {"threads", c.threads}};
  if (c.backend.fixture) j["backend"]["fixture"] = c.backend.fixture->string();
  if (c.news_path) j["data"]["news"] = c.news_path->string();
  if (c.prices_path) j["data"]["prices"] = c.prices_path->string();
  if (c.prompts_dir) j["prompts_dir"] = c.prompts_dir->string();
  if (c.taxonomy_path) j["taxonomy"] = c.taxonomy_path->string();
  return j;
}

}  // namespace stockmem
