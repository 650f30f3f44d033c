#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "stockmem/backends.hpp"
#include "stockmem/domain.hpp"
#include "stockmem/retrieval.hpp"

namespace stockmem {

enum class Representation { event, summary, cluster_opinion };

std::string_view to_string(Representation representation);
Representation representation_from_string(std::string_view text);

struct AblationFlags {
  Representation representation = Representation::event;
  bool delta_info = true;
  RetrievalStrategy strategy = RetrievalStrategy::full;

  /// Throws ConfigError for combinations that cannot be honored.
  void validate() const;
};

struct BackendConfig {
  std::string kind = "mock";  // mock | remote
  RemoteConfig remote;
  std::optional<std::filesystem::path> fixture;
  bool synthetic_fallback = true;
  std::size_t embedding_dimension = 64;
  int retry_budget = 2;
};

struct BacktestConfig {
  std::vector<Company> companies;
  Date train_start;
  Date train_end;
  Date test_start;
  Date test_end;
  int window = 5;
  SimilarityParams retrieval;
  double merge_threshold = 0.80;
  int tracking_k = 10;
  bool reflect_flat = true;
  AblationFlags ablation;
  BackendConfig backend;
  std::optional<std::filesystem::path> news_path;
  std::optional<std::filesystem::path> prices_path;
  std::optional<std::filesystem::path> prompts_dir;
  std::optional<std::filesystem::path> taxonomy_path;
  int threads = 1;

  /// Throws ConfigError.
  void validate() const;
};

/// Relative paths inside the document resolve against `base_dir`.
BacktestConfig config_from_json(const nlohmann::json& document,
                                const std::filesystem::path& base_dir = {});
BacktestConfig load_config(const std::filesystem::path& path);
nlohmann::json to_json(const BacktestConfig& config);

}  // namespace stockmem
