#include <gtest/gtest.h>

#include "stockmem/extraction.hpp"
#include "test_support.hpp"

using namespace stockmem;
using stockmem::test::script;
using stockmem::test::tax;

namespace {

NewsDoc doc(std::string id, std::string body) {
  return {std::move(id), "ACME", Date::parse("2024-03-04"), "title", std::move(body)};
}

nlohmann::json events(std::initializer_list<nlohmann::json> items) {
  return {{"events", nlohmann::json::array_t(items)}};
}

}  // namespace

TEST(Extraction, ProductLaunchBecomesOneTypedEvent) {
  MockGenerationBackend mock({script(TemplateId::extract, "robot arm",
                                     events({{{"group", "Products and Market"},
                                              {"type", "New Product Launch"},
                                              {"companies", {"ACME"}},
                                              {"open_params", {{"product", "arm"}}},
                                              {"description", "ACME launches robot arm"}}}))});
  Generator gen(mock);
  auto prompts = PromptSet::builtin();
  EventExtractor ex(tax(), prompts, gen);
  auto batch = ex.extract_events(doc("d1", "ACME unveiled its robot arm."));
  ASSERT_EQ(batch.events.size(), 1u);
  const auto& e = batch.events[0];
  EXPECT_EQ(e.event_id, "d1#0");
  EXPECT_EQ(e.group.name, "Products and Market");
  EXPECT_EQ(e.type.name, "New Product Launch");
  EXPECT_EQ(e.companies, std::vector<std::string>{"ACME"});
  EXPECT_EQ(e.open_params.at("product"), "arm");
  EXPECT_EQ(e.time, Date::parse("2024-03-04"));
  EXPECT_EQ(e.source_docs, std::vector<std::string>{"d1"});
  // The prompt lists every valid type.
  auto prompt = mock.requests()[0].filled_prompt;
  for (const auto& t : tax().types()) EXPECT_NE(prompt.find(t.name), std::string::npos);
}

TEST(Extraction, EmptyDocumentGivesEmptyBatch) {
  MockGenerationBackend mock({script(TemplateId::extract, "", events({}))});
  Generator gen(mock);
  auto prompts = PromptSet::builtin();
  EventExtractor ex(tax(), prompts, gen);
  EXPECT_TRUE(ex.extract_events(doc("d1", "Nothing happened.")).events.empty());
}

TEST(Extraction, UnknownTypeIsRecalibrated) {
  MockGenerationBackend mock(
      {script(TemplateId::extract, "type \"Launch Party\"",
              {{"events", {{{"index", 1}, {"group", "Products and Market"}, {"type", "New Product Launch"}}}}}),
       script(TemplateId::extract, "",
              events({{{"type", "Launch Party"}, {"description", "ACME hosts launch party"}},
                      {{"type", "Taxation"}, {"description", "tax change"}}}))});
  Generator gen(mock);
  auto prompts = PromptSet::builtin();
  EventExtractor ex(tax(), prompts, gen);
  auto batch = ex.extract_events(doc("d1", "Launch Party"));
  ASSERT_EQ(mock.calls(), 2u);
  EXPECT_EQ(mock.requests()[1].expected_schema, "extract_recalibrate");
  ASSERT_EQ(batch.events.size(), 2u);
  EXPECT_EQ(batch.events[0].type.name, "New Product Launch");
  EXPECT_EQ(batch.events[1].type.name, "Taxation");
}

TEST(Extraction, StillInvalidAfterRecalibrationIsDropped) {
  MockGenerationBackend mock(
      {script(TemplateId::extract, "Launch Party",
              events({{{"type", "Launch Party"}, {"description", "party"}},
                      {{"type", "Capital Flows"}, {"description", "ambiguous without a group"}}})),
       script(TemplateId::extract, "", {{"events", {{{"index", 1}, {"type", "Still Wrong"}}}}})});
  Generator gen(mock);
  auto prompts = PromptSet::builtin();
  EventExtractor ex(tax(), prompts, gen);
  auto batch = ex.extract_events(doc("d1", "Launch Party"));
  EXPECT_TRUE(batch.events.empty());
  EXPECT_EQ(mock.calls(), 2u);
}

TEST(Extraction, MissingDescriptionIsRepaired) {
  MockGenerationBackend mock({script(TemplateId::extract, "", events({{{"type", "Taxation"}}}), 1),
                              script(TemplateId::extract, "",
                                     events({{{"type", "Taxation"}, {"description", "tax"}}}))});
  Generator gen(mock);
  auto prompts = PromptSet::builtin();
  EventExtractor ex(tax(), prompts, gen);
  EXPECT_EQ(ex.extract_events(doc("d1", "x")).events.size(), 1u);
  EXPECT_EQ(mock.calls(), 2u);
}

TEST(Extraction, DailyRawIsTheUnionInDocOrder) {
  // 2 + 0 + 1 events, with one duplicate across documents kept pre-merge.
  MockGenerationBackend mock(
      {script(TemplateId::extract, "doc-b",
              events({{{"type", "Taxation"}, {"description", "tax"}},
                      {{"type", "Fiscal Policy"}, {"description", "budget"}}})),
       script(TemplateId::extract, "doc-a", events({})),
       script(TemplateId::extract, "doc-c", events({{{"type", "Taxation"}, {"description", "tax"}}}))});
  Generator gen(mock);
  auto prompts = PromptSet::builtin();
  EventExtractor ex(tax(), prompts, gen);
  std::vector<NewsDoc> docs = {doc("c", "doc-c"), doc("a", "doc-a"), doc("b", "doc-b")};
  auto raw = ex.extract_day(docs);
  ASSERT_EQ(raw.size(), 3u);
  EXPECT_EQ(raw[0].event_id, "b#0");
  EXPECT_EQ(raw[1].event_id, "b#1");
  EXPECT_EQ(raw[2].event_id, "c#0");
  EXPECT_EQ(raw[0].description, raw[2].description);
  EXPECT_TRUE(ex.extract_day(std::vector<NewsDoc>{}).empty());
}

TEST(Extraction, CollectDailyRawSortsBatches) {
  std::vector<RawEventBatch> batches(2);
  batches[0].doc_id = "z";
  batches[0].events.resize(1);
  batches[1].doc_id = "m";
  batches[1].events.resize(2);
  auto out = collect_daily_raw(batches);
  EXPECT_EQ(out.size(), 3u);
}
