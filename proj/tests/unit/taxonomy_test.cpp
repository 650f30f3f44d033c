#include <fstream>
#include <set>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "stockmem/errors.hpp"
#include "stockmem/taxonomy.hpp"

using namespace stockmem;

namespace {

nlohmann::json builtin_doc() {
  std::ifstream in(std::string(STOCKMEM_CORE_DATA) + "/taxonomy.json");
  return nlohmann::json::parse(in);
}

}  // namespace

TEST(Taxonomy, BuiltinHasThirteenGroupsAndFiftySevenTypes) {
  const auto& t = Taxonomy::builtin();
  EXPECT_EQ(t.group_count(), 13u);
  EXPECT_EQ(t.type_count(), 57u);
  const std::vector<std::size_t> sizes = {5, 3, 3, 7, 6, 8, 3, 4, 3, 6, 4, 2, 3};
  for (std::size_t g = 0; g < sizes.size(); ++g) {
    EXPECT_EQ(t.types_in_group(static_cast<int>(g)).size(), sizes[g]) << t.group(static_cast<int>(g)).name;
  }
}

TEST(Taxonomy, ProductLaunchLivesInSevenTypeGroup) {
  const auto& t = Taxonomy::builtin();
  auto r = t.resolve("New Product Launch");
  ASSERT_TRUE(r);
  EXPECT_EQ(t.group(r.type->group).name, "Products and Market");
  EXPECT_EQ(t.types_in_group(r.type->group).size(), 7u);
}

TEST(Taxonomy, FiscalPolicyResolves) {
  const auto& t = Taxonomy::builtin();
  const auto& type = t.resolve_type("Fiscal Policy");
  EXPECT_EQ(t.group(type.group).name, "Macroeconomic Finance");
}

TEST(Taxonomy, UnknownNames) {
  const auto& t = Taxonomy::builtin();
  EXPECT_THROW(t.resolve_type(""), UnknownTypeError);
  EXPECT_THROW(t.resolve_type("fiscal policy"), UnknownTypeError);
  EXPECT_THROW(t.resolve_type("Launch Party"), UnknownTypeError);
  EXPECT_EQ(t.resolve("Launch Party").status, TypeResolution::Status::unknown);
}

TEST(Taxonomy, SurroundingWhitespaceIsIgnored) {
  const auto& t = Taxonomy::builtin();
  auto r = t.resolve("  Taxation \n");
  ASSERT_TRUE(r);
  EXPECT_EQ(r.type->name, "Taxation");
}

TEST(Taxonomy, SharedTypeNamesNeedAGroup) {
  const auto& t = Taxonomy::builtin();
  for (const char* shared : {"Market Size", "Capital Flows", "Institutional Views"}) {
    EXPECT_EQ(t.resolve(shared).status, TypeResolution::Status::ambiguous) << shared;
    auto a = t.resolve("Stock Market Performance", shared);
    auto b = t.resolve("Other Financial Market Performance", shared);
    ASSERT_TRUE(a);
    ASSERT_TRUE(b);
    EXPECT_NE(a.type->id, b.type->id);
    EXPECT_EQ(t.resolve(std::string("Stock Market Performance::") + shared).type, a.type);
  }
  EXPECT_THROW(t.resolve_type("Capital Flows"), UnknownTypeError);
}

TEST(Taxonomy, GroupHintIgnoredForUniqueNames) {
  const auto& t = Taxonomy::builtin();
  auto r = t.resolve("", "Taxation");
  ASSERT_TRUE(r);
  EXPECT_EQ(r.type->name, "Taxation");
}

TEST(Taxonomy, QualifiedNamesAreABijection) {
  const auto& t = Taxonomy::builtin();
  std::set<std::string> seen;
  for (const auto& type : t.types()) {
    auto q = t.qualified_name(type.id);
    EXPECT_TRUE(seen.insert(q).second) << q;
    auto r = t.resolve(q);
    ASSERT_TRUE(r) << q;
    EXPECT_EQ(r.type->id, type.id);
  }
  EXPECT_EQ(seen.size(), 57u);
}

TEST(Taxonomy, ListingNamesEveryType) {
  const auto& t = Taxonomy::builtin();
  auto listing = t.render_listing();
  for (const auto& type : t.types()) EXPECT_NE(listing.find(type.name), std::string::npos) << type.name;
  for (const auto& g : t.groups()) EXPECT_NE(listing.find("- " + g.name + ": "), std::string::npos);
}

TEST(Taxonomy, ParseRoundTripsShippedFile) {
  auto doc = builtin_doc();
  auto t = Taxonomy::parse(doc.dump());
  EXPECT_EQ(t.type_count(), 57u);
}

TEST(Taxonomy, MissingTypeIsACountViolation) {
  auto doc = builtin_doc();
  doc["groups"][0]["types"].erase(0);
  EXPECT_THROW(Taxonomy::parse(doc.dump()), TaxonomyError);
}

TEST(Taxonomy, StructuralErrors) {
  EXPECT_THROW(Taxonomy::parse("{not json"), TaxonomyError);
  EXPECT_THROW(Taxonomy::parse(R"({"groups": 3})"), TaxonomyError);

  auto dup_group = builtin_doc();
  dup_group["groups"][1]["name"] = dup_group["groups"][0]["name"];
  EXPECT_THROW(Taxonomy::parse(dup_group.dump()), TaxonomyError);

  auto dup_type = builtin_doc();
  dup_type["groups"][0]["types"][1] = dup_type["groups"][0]["types"][0];
  EXPECT_THROW(Taxonomy::parse(dup_type.dump()), TaxonomyError);

  auto orphan = builtin_doc();
  orphan["groups"][0].erase("name");
  EXPECT_THROW(Taxonomy::parse(orphan.dump()), TaxonomyError);

  auto empty = builtin_doc();
  empty["groups"][11]["types"] = nlohmann::json::array();
  EXPECT_THROW(Taxonomy::parse(empty.dump()), TaxonomyError);
}
