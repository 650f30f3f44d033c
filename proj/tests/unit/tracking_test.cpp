#include <gtest/gtest.h>

#include "stockmem/errors.hpp"
#include "stockmem/tracking.hpp"
#include "test_support.hpp"

using namespace stockmem;
using stockmem::test::make_event;
using stockmem::test::script;
using stockmem::test::tax;
using stockmem::test::unit_vector;

namespace {

std::vector<Date> weekdays(Date start, int n) {
  std::vector<Date> out;
  for (Date d = start; static_cast<int>(out.size()) < n; d = d.next()) {
    if (d.weekday() < 5) out.push_back(d);
  }
  return out;
}

Event reduction(int day, Date date, Embedding v) {
  auto e = make_event("ACME/" + date.str() + "/e000", "ACME", date, "Corporate Equity::Share Decrease",
                      "major holder trims stake, day " + std::to_string(day));
  e.embedding = std::move(v);
  return e;
}

struct Memory {
  Store store{tax()};
  std::vector<Date> days;
  std::vector<Event> events;

  explicit Memory(int n) : days(weekdays(Date::parse("2024-03-04"), n)) {
    for (auto d : days) store.put(PriceBar{"ACME", d, 0.0});
  }
};

}  // namespace

TEST(TopK, FewerThanK) {
  auto q = reduction(0, Date::parse("2024-03-08"), unit_vector({1, 0}));
  std::vector<Event> h = {reduction(1, Date::parse("2024-03-07"), unit_vector({1, 1})),
                          reduction(2, Date::parse("2024-03-06"), unit_vector({0, 1}))};
  h[1].event_id = "other";
  EXPECT_EQ(top_k_candidates(q, h, 5).size(), 2u);
  EXPECT_TRUE(top_k_candidates(q, std::vector<Event>{}, 5).empty());
}

TEST(TopK, ByCosineThenRecencyThenId) {
  auto q = reduction(0, Date::parse("2024-03-08"), {1, 0, 0});
  auto mk = [](std::string id, Date d, double cos) {
    auto e = reduction(0, d, unit_vector({static_cast<float>(cos), static_cast<float>(std::sqrt(1 - cos * cos)), 0}));
    e.event_id = std::move(id);
    return e;
  };
  std::vector<Event> h = {mk("c", Date::parse("2024-03-05"), 0.4), mk("a", Date::parse("2024-03-05"), 0.9),
                          mk("b", Date::parse("2024-03-06"), 0.5)};
  auto top = top_k_candidates(q, h, 2);
  ASSERT_EQ(top.size(), 2u);
  EXPECT_EQ(top[0].event.event_id, "a");
  EXPECT_EQ(top[1].event.event_id, "b");

  // Exact ties fall back to date, then id.
  std::vector<Event> tied = {mk("z", Date::parse("2024-03-05"), 0.7), mk("y", Date::parse("2024-03-06"), 0.7),
                             mk("x", Date::parse("2024-03-06"), 0.7)};
  auto t = top_k_candidates(q, tied, 3);
  EXPECT_EQ(t[0].event.event_id, "x");
  EXPECT_EQ(t[1].event.event_id, "y");
  EXPECT_EQ(t[2].event.event_id, "z");
}

TEST(ChainFrom, SevenDayChainTruncatesToDepthFive) {
  // e0..e6 on consecutive trading days, each linked to the one before.
  auto days = weekdays(Date::parse("2024-03-04"), 7);
  std::vector<Event> ev;
  std::vector<EventChain> chains;
  for (int i = 0; i < 7; ++i) {
    ev.push_back(reduction(i, days[static_cast<std::size_t>(i)], unit_vector({1, 0})));
    if (i == 0) {
      chains.push_back({"ACME", days[0], ev[0].event_id, {}, {}, "", Polarity::neutral});
      continue;
    }
    // window_start for w = 5
    Date start = days[static_cast<std::size_t>(std::max(0, i - 5))];
    chains.push_back(chain_from(ev[static_cast<std::size_t>(i)], ev[static_cast<std::size_t>(i - 1)],
                                &chains.back(), start));
  }
  for (const auto& c : chains) EXPECT_FALSE(check_chain(c)) << c.head;
  const auto& last = chains[6];
  const auto& prev = chains[5];
  ASSERT_EQ(prev.depth(), 5u);
  // Oracle: [p] + first four of p's chain.
  std::vector<std::string> expected = {ev[5].event_id};
  expected.insert(expected.end(), prev.predecessors.begin(), prev.predecessors.begin() + 4);
  EXPECT_EQ(last.predecessors, expected);
  EXPECT_EQ(last.depth(), 5u);
  for (std::size_t k = 0; k < 5; ++k) EXPECT_EQ(last.predecessor_dates[k], days[5 - k]);
}

TEST(ChainFrom, WindowConfinesReusedEntries) {
  auto days = weekdays(Date::parse("2024-03-04"), 7);
  EventChain p_chain{"ACME", days[5], "p", {"p4", "p3", "p2", "p1"}, {days[4], days[3], days[2], days[1]}, "",
                     Polarity::neutral};
  auto head = reduction(6, days[6], {1, 0});
  auto p = reduction(5, days[5], {1, 0});
  auto c = chain_from(head, p, &p_chain, days[3]);  // w = 3
  EXPECT_EQ(c.predecessors, (std::vector<std::string>{p.event_id, "p4", "p3"}));
  EXPECT_THROW(chain_from(head, p, &p_chain, days[6]), PreconditionError);
}

TEST(ChainFrom, PredecessorWithEmptyChain) {
  auto days = weekdays(Date::parse("2024-03-04"), 2);
  auto head = reduction(1, days[1], {1, 0});
  auto p = reduction(0, days[0], {1, 0});
  EventChain empty{"ACME", days[0], p.event_id, {}, {}, "", Polarity::neutral};
  auto c = chain_from(head, p, &empty, days[0]);
  EXPECT_EQ(c.depth(), 1u);
  EXPECT_EQ(c.predecessors[0], p.event_id);
}

namespace {

struct TrackerFixture {
  Memory mem{8};
  MockGenerationBackend mock;
  Generator gen{mock};
  PromptSet prompts = PromptSet::builtin();
  EventTracker tracker{prompts, gen, mem.store};

  explicit TrackerFixture(std::vector<FixtureEntry> s) : mock(std::move(s)) {}
  Date day(int i) const { return mem.days[static_cast<std::size_t>(i)]; }
};

}  // namespace

TEST(Tracker, CandidatesComeFromTheWindowOnly) {
  TrackerFixture f({});
  for (int i = 0; i < 7; ++i) f.mem.store.put(reduction(i, f.day(i), unit_vector({1, float(i)})));
  auto other = reduction(9, f.day(6), unit_vector({1, 0}));
  other.company = "BOLT";
  other.event_id = "BOLT/x";
  f.mem.store.put(other);
  auto cur = reduction(7, f.day(7), unit_vector({1, 0}));
  auto c = f.tracker.candidate_predecessors(cur, f.mem.store.calendar("ACME"));
  ASSERT_EQ(c.size(), 5u);  // days 2..6
  for (const auto& x : c) {
    EXPECT_GE(x.event.time, f.day(2));
    EXPECT_LT(x.event.time, f.day(7));
    EXPECT_EQ(x.event.company, "ACME");
  }
}

TEST(Tracker, EmptyCandidatesMeanNoCall) {
  TrackerFixture f({});
  auto cur = reduction(7, f.day(7), unit_vector({1, 0}));
  EXPECT_FALSE(f.tracker.link_predecessor(cur, {}));
  EXPECT_EQ(f.mock.calls(), 0u);
}

TEST(Tracker, ScriptedPickIsLinked) {
  TrackerFixture f({script(TemplateId::track, "", {{"predecessor", "ACME/2024-03-06/e000"}})});
  std::vector<TrackCandidate> c;
  for (int i = 0; i < 3; ++i) c.push_back({reduction(i, f.day(i), unit_vector({1, 0})), 0.9});
  auto cur = reduction(3, f.day(3), unit_vector({1, 0}));
  auto p = f.tracker.link_predecessor(cur, c);
  ASSERT_TRUE(p);
  EXPECT_EQ(p->event_id, c[2].event.event_id);
}

TEST(Tracker, IdOutsideTheListIsRetriedThenDropped) {
  TrackerFixture f({script(TemplateId::track, "", {{"predecessor", "made-up"}})});
  std::vector<TrackCandidate> c = {{reduction(0, f.day(0), unit_vector({1, 0})), 0.9}};
  auto cur = reduction(3, f.day(3), unit_vector({1, 0}));
  EXPECT_FALSE(f.tracker.link_predecessor(cur, c));
  EXPECT_EQ(f.mock.calls(), 3u);
}

TEST(Tracker, BuildChainReusesStoredChain) {
  TrackerFixture f({});
  auto p = reduction(1, f.day(1), unit_vector({1, 0}));
  auto pp = reduction(0, f.day(0), unit_vector({1, 0}));
  f.mem.store.put(pp);
  f.mem.store.put(p);
  f.mem.store.put(EventChain{"ACME", f.day(1), p.event_id, {pp.event_id}, {f.day(0)}, "", Polarity::neutral});
  auto cur = reduction(2, f.day(2), unit_vector({1, 0}));
  auto cal = f.mem.store.calendar("ACME");
  auto chain = f.tracker.build_chain(cur, p, cal);
  EXPECT_EQ(chain.predecessors, (std::vector<std::string>{p.event_id, pp.event_id}));
  EXPECT_TRUE(f.tracker.build_chain(cur, std::nullopt, cal).predecessors.empty());
}

TEST(Tracker, DeltaForFirstOccurrenceCarriesMarker) {
  TrackerFixture f({script(TemplateId::track, "", {{"Incremental information", "new buyback"},
                                                   {"Polarity", "more positive"}})});
  auto cur = reduction(2, f.day(2), unit_vector({1, 0}));
  EventChain empty{"ACME", f.day(2), cur.event_id, {}, {}, "", Polarity::neutral};
  auto [text, polarity] = f.tracker.extract_delta_info(cur, empty);
  EXPECT_EQ(text.rfind(std::string(kFirstOccurrence), 0), 0u);
  EXPECT_EQ(polarity, Polarity::more_positive);
}

TEST(Tracker, RepeatedNewsWithoutNewDevelopmentIsNeutral) {
  TrackerFixture f({script(TemplateId::track, "",
                           {{"Incremental information", "same reduction as before"}, {"Polarity", "neutral"}})});
  auto p = reduction(1, f.day(1), unit_vector({1, 0}));
  f.mem.store.put(p);
  auto cur = reduction(2, f.day(2), unit_vector({1, 0}));
  EventChain chain{"ACME", f.day(2), cur.event_id, {p.event_id}, {f.day(1)}, "", Polarity::neutral};
  auto [text, polarity] = f.tracker.extract_delta_info(cur, chain);
  EXPECT_EQ(text, "same reduction as before");
  EXPECT_EQ(polarity, Polarity::neutral);
  EXPECT_NE(f.mock.requests()[0].filled_prompt.find("day 1"), std::string::npos);
}

TEST(Tracker, UnparseablePolarityIsASchemaViolation) {
  TrackerFixture f({script(TemplateId::track, "", {{"Incremental information", "x"}, {"Polarity", "bullish"}})});
  auto cur = reduction(2, f.day(2), unit_vector({1, 0}));
  EventChain empty{"ACME", f.day(2), cur.event_id, {}, {}, "", Polarity::neutral};
  EXPECT_THROW(f.tracker.extract_delta_info(cur, empty), SchemaViolation);
}

TEST(Tracker, RejectsDepthBeyondFive) {
  Store store(tax());
  MockGenerationBackend mock({});
  Generator gen(mock);
  auto prompts = PromptSet::builtin();
  TrackingOptions o;
  o.max_depth = 6;
  EXPECT_THROW(EventTracker(prompts, gen, store, o), ConfigError);
}
