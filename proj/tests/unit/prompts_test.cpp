#include <algorithm>
#include <fstream>

#include <gtest/gtest.h>

#include "stockmem/errors.hpp"
#include "stockmem/prompts.hpp"

using namespace stockmem;

TEST(PromptTemplate, FillsPlaceholders) {
  PromptTemplate t("Stock {stock}: {information}");
  EXPECT_EQ(t.render({{"stock", "ACME"}, {"information", "none"}}), "Stock ACME: none");
  EXPECT_EQ(t.placeholders(), (std::vector<std::string>{"stock", "information"}));
}

TEST(PromptTemplate, EscapedBracesStayLiteral) {
  PromptTemplate t(R"({{"Price movement": "{x}"}})");
  EXPECT_EQ(t.render({{"x", "up"}}), R"({"Price movement": "up"})");
}

TEST(PromptTemplate, ValuesAreNotReexpanded) {
  PromptTemplate t("{a}");
  EXPECT_EQ(t.render({{"a", "{b}"}}), "{b}");
}

TEST(PromptTemplate, MissingValueIsAnError) {
  PromptTemplate t("{stock} {price_change}");
  EXPECT_THROW(t.render({{"stock", "ACME"}}), PreconditionError);
}

TEST(PromptSet, BuiltinTemplatesCarryTheirPlaceholders) {
  auto p = PromptSet::builtin();
  auto has = [](const PromptTemplate& t, const std::string& name) {
    auto ph = t.placeholders();
    return std::find(ph.begin(), ph.end(), name) != ph.end();
  };
  EXPECT_TRUE(has(p.reason, "stock"));
  EXPECT_TRUE(has(p.reason, "information"));
  EXPECT_TRUE(has(p.reason, "price_change"));
  EXPECT_TRUE(has(p.predict, "stock"));
  EXPECT_TRUE(has(p.predict, "information"));
  EXPECT_TRUE(has(p.predict, "hist_reflection"));
  EXPECT_TRUE(has(p.extract, "taxonomy"));
  EXPECT_TRUE(has(p.extract, "document"));
  EXPECT_TRUE(has(p.merge, "cluster_events"));
  EXPECT_TRUE(has(p.track_link, "candidates"));
  EXPECT_TRUE(has(p.track_delta, "chain"));
  EXPECT_TRUE(has(p.retrieve_filter, "candidates"));
}

TEST(PromptSet, LoadDirFallsBackToBuiltin) {
  auto dir = std::filesystem::temp_directory_path() / "stockmem_prompts_test";
  std::filesystem::create_directories(dir);
  { std::ofstream(dir / "predict.txt") << "custom {stock} {information} {hist_reflection}"; }
  auto p = PromptSet::load_dir(dir);
  EXPECT_EQ(p.predict.text(), "custom {stock} {information} {hist_reflection}");
  EXPECT_EQ(p.reason.text(), PromptSet::builtin().reason.text());
  std::filesystem::remove_all(dir);
}
