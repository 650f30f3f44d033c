#include <cstdlib>

#include <gtest/gtest.h>

#include "stockmem/inference.hpp"

using namespace stockmem;

namespace {

std::optional<RemoteConfig> live_config() {
  auto env = [](const char* name) -> std::string {
    const char* v = std::getenv(name);
    return v ? v : "";
  };
  RemoteConfig c;
  c.endpoint = env("STOCKMEM_LIVE_ENDPOINT");
  c.model = env("STOCKMEM_LIVE_MODEL");
  c.embedding_model = env("STOCKMEM_LIVE_EMBEDDING_MODEL");
  if (c.endpoint.empty() || c.model.empty() || env(c.api_key_env.c_str()).empty()) return std::nullopt;
  if (auto dim = env("STOCKMEM_LIVE_EMBEDDING_DIM"); !dim.empty()) c.embedding_dimension = std::stoul(dim);
  return c;
}

}  // namespace

TEST(Live, PredictionRoundTrip) {
  auto config = live_config();
  if (!config) GTEST_SKIP() << "set STOCKMEM_LIVE_ENDPOINT, STOCKMEM_LIVE_MODEL and STOCKMEM_API_KEY";
  auto backend = make_remote_generation_backend(*config);
  Generator gen(*backend);
  auto prompts = PromptSet::builtin();
  Predictor p(prompts, gen);
  EvidenceBundle b;
  b.company_name = "Acme Robotics";
  b.information = "--- 2024-03-05 ---\n- [Products and Market / New Product Launch] Acme ships a new arm\n";
  b.hist_reflection = std::string(kNoReference) + "\n";
  auto out = p.predict(b);
  EXPECT_FALSE(out.reason.empty());
}

TEST(Live, EmbeddingDimension) {
  auto config = live_config();
  if (!config || config->embedding_model.empty()) GTEST_SKIP() << "no live embedding model configured";
  auto backend = make_remote_embedding_backend(*config);
  auto v = embed(*backend, std::vector<std::string>{"Acme ships a new arm"});
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].size(), backend->dimension());
}
