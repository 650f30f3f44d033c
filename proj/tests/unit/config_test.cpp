#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "stockmem/config.hpp"
#include "stockmem/errors.hpp"

using namespace stockmem;

namespace {

nlohmann::json base() {
  return {{"companies", {{{"ticker", "ACME"}, {"name", "Acme Robotics"}}, {{"ticker", "BOLT"}, {"name", "Bolt"}}}},
          {"train", {{"start", "2024-01-01"}, {"end", "2024-02-29"}}},
          {"test", {"2024-03-01", "2024-03-29"}}};
}

}  // namespace

TEST(Config, Defaults) {
  auto c = config_from_json(base());
  EXPECT_NO_THROW(c.validate());
  EXPECT_EQ(c.companies.size(), 2u);
  EXPECT_EQ(c.window, 5);
  EXPECT_EQ(c.retrieval.window, 5);
  EXPECT_DOUBLE_EQ(c.retrieval.alpha, 0.7);
  EXPECT_EQ(c.retrieval.coarse_k, 5);
  EXPECT_DOUBLE_EQ(c.merge_threshold, 0.8);
  EXPECT_EQ(c.tracking_k, 10);
  EXPECT_EQ(c.backend.retry_budget, 2);
  EXPECT_EQ(c.backend.kind, "mock");
  EXPECT_EQ(c.ablation.representation, Representation::event);
  EXPECT_TRUE(c.ablation.delta_info);
  EXPECT_EQ(c.test_start, Date::parse("2024-03-01"));
}

TEST(Config, RoundTripThroughJson) {
  auto j = base();
  j["window"] = 3;
  j["ablation"] = {{"strategy", "same_company"}, {"delta_info", false}};
  auto c = config_from_json(j);
  auto again = config_from_json(to_json(c));
  EXPECT_EQ(again.window, 3);
  EXPECT_EQ(again.ablation.strategy, RetrievalStrategy::same_company);
  EXPECT_FALSE(again.ablation.delta_info);
}

TEST(Config, ValidationFailures) {
  auto expect_bad = [](auto mutate) {
    auto j = base();
    mutate(j);
    EXPECT_THROW(config_from_json(j).validate(), ConfigError) << j.dump();
  };
  expect_bad([](auto& j) { j["companies"] = nlohmann::json::array(); });
  expect_bad([](auto& j) { j["companies"].push_back({{"ticker", "ACME"}, {"name", "again"}}); });
  expect_bad([](auto& j) { j["test"] = {"2024-02-15", "2024-03-29"}; });
  expect_bad([](auto& j) { j["test"] = {"2024-03-29", "2024-03-01"}; });
  expect_bad([](auto& j) { j["window"] = 0; });
  expect_bad([](auto& j) { j["retrieval"] = {{"alpha", 1.5}}; });
  expect_bad([](auto& j) { j["retrieval"] = {{"coarse_k", 0}}; });
  expect_bad([](auto& j) { j["merge"] = {{"cosine_threshold", 2.0}}; });
  expect_bad([](auto& j) { j["backend"] = {{"kind", "oracle"}}; });
  expect_bad([](auto& j) { j["ablation"] = {{"representation", "summary"}}; });
  expect_bad([](auto& j) { j["ablation"] = {{"strategy", "random"}}; });
  expect_bad([](auto& j) { j["threads"] = 0; });
  expect_bad([](auto& j) { j["train"] = "yesterday"; });
}

TEST(Config, NonEventRepresentationNeedsDeltaOff) {
  auto j = base();
  j["ablation"] = {{"representation", "cluster_opinion"}, {"delta_info", false}};
  auto c = config_from_json(j);
  EXPECT_NO_THROW(c.validate());
  EXPECT_EQ(c.ablation.representation, Representation::cluster_opinion);
}

TEST(Config, RelativePathsResolveAgainstConfigDir) {
  auto dir = std::filesystem::temp_directory_path() / "stockmem_config_test";
  std::filesystem::create_directories(dir);
  auto j = base();
  j["data"] = {{"news", "news.jsonl"}, {"prices", "/abs/prices.csv"}};
  std::ofstream(dir / "config.json") << j.dump();
  auto c = load_config(dir / "config.json");
  EXPECT_EQ(*c.news_path, dir / "news.jsonl");
  EXPECT_EQ(*c.prices_path, std::filesystem::path("/abs/prices.csv"));
  std::ofstream(dir / "broken.json") << "{";
  EXPECT_THROW(load_config(dir / "broken.json"), ConfigError);
  EXPECT_THROW(load_config(dir / "missing.json"), ConfigError);
  std::filesystem::remove_all(dir);
}

TEST(Config, NoCredentialsInConfig) {
  auto j = base();
  j["backend"] = {{"kind", "remote"}, {"api_key_env", "MY_KEY"}};
  auto c = config_from_json(j);
  EXPECT_EQ(c.backend.remote.api_key_env, "MY_KEY");
  EXPECT_EQ(to_json(c).dump().find("sk-"), std::string::npos);
}
