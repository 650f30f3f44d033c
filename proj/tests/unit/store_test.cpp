#include <filesystem>
#include <fstream>
#include <random>

#include <gtest/gtest.h>

#include "stockmem/errors.hpp"
#include "stockmem/store.hpp"
#include "test_support.hpp"

using namespace stockmem;
using stockmem::test::make_event;
using stockmem::test::tax;

namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("stockmem_store_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  return dir;
}

Event ev(const std::string& company, const std::string& date, int n) {
  auto e = make_event(company + "/" + date + "/e00" + std::to_string(n), company, Date::parse(date),
                      "Products and Market::New Product Launch", "launch " + std::to_string(n));
  e.embedding = Embedding{0.1f * float(n + 1), -0.3f, 0.123456789f};
  return e;
}

Reflection refl(const std::string& company, const std::string& date, std::string reason = "r") {
  Reflection r;
  r.reflection_id = company + "@" + date;
  r.company = company;
  r.anchor_date = Date::parse(date);
  r.series_ref = company + "@" + date + "/w5";
  r.reason = std::move(reason);
  r.key_events = "k";
  r.realized_move = Label::up;
  return r;
}

}  // namespace

TEST(Store, AsOfBoundIsExclusive) {
  Store s(tax());
  for (auto d : {"2024-03-04", "2024-03-05", "2024-03-06"}) s.put(ev("ACME", d, 0));
  s.put(ev("BOLT", "2024-03-04", 0));
  auto got = s.events({RecordKind::events, std::string("ACME"), Date::parse("2024-03-06")});
  ASSERT_EQ(got.size(), 2u);
  EXPECT_EQ(got.back().time, Date::parse("2024-03-05"));
  EXPECT_EQ(s.events({RecordKind::events, std::nullopt, Date::max()}).size(), 4u);
  EXPECT_TRUE(s.events({RecordKind::events, std::string("ACME"), Date::parse("2024-03-04")}).empty());
}

TEST(Store, ReflectionsAsOf) {
  Store s(tax());
  s.put(refl("ACME", "2024-03-04"));
  s.put(refl("BOLT", "2024-03-05"));
  EXPECT_EQ(s.reflections({RecordKind::reflections, std::nullopt, Date::parse("2024-03-05")}).size(), 1u);
  EXPECT_EQ(s.reflections({RecordKind::reflections, std::nullopt, Date::parse("2024-03-06")}).size(), 2u);
}

TEST(Store, RePutIsNoOpAndNewContentShadows) {
  auto dir = fresh_dir("versions");
  {
    Store s(tax(), dir);
    s.put(refl("ACME", "2024-03-04", "first"));
    s.put(refl("ACME", "2024-03-04", "first"));
    s.put(refl("ACME", "2024-03-04", "second"));
    EXPECT_EQ(s.reflection_count(), 1u);
    EXPECT_EQ(s.reflections({RecordKind::reflections})[0].reason, "second");
  }
  std::ifstream in(dir / "ACME" / "reflections.jsonl");
  std::size_t lines = 0;
  for (std::string l; std::getline(in, l);) ++lines;
  EXPECT_EQ(lines, 2u);
  Store reloaded(tax(), dir);
  EXPECT_EQ(reloaded.reflections({RecordKind::reflections})[0].reason, "second");
  fs::remove_all(dir);
}

TEST(Store, PersistenceRoundTrip) {
  auto dir = fresh_dir("roundtrip");
  std::mt19937 rng(3);
  std::uniform_real_distribution<float> u(-1, 1);
  std::vector<Event> events;
  {
    Store s(tax(), dir);
    s.put(PriceBar{"ACME", Date::parse("2024-03-04"), 0.0123});
    s.put(PriceBar{"ACME", Date::parse("2024-03-05"), -0.004});
    NewsDoc d{"n1", "ACME", Date::parse("2024-03-04"), "t", "b"};
    s.put(d);
    for (int i = 0; i < 3; ++i) {
      auto e = ev("ACME", "2024-03-04", i);
      Embedding v(16);
      for (auto& x : v) x = u(rng);
      e.embedding = v;
      events.push_back(e);
    }
    s.put(make_daily_set("ACME", Date::parse("2024-03-04"), events, tax()));
    auto later = ev("ACME", "2024-03-05", 0);
    s.put(later);
    s.put(EventChain{"ACME", later.time, later.event_id, {events[1].event_id}, {events[1].time}, "more",
                     Polarity::more_positive});
    s.put(refl("ACME", "2024-03-04"));
  }
  Store r(tax(), dir);
  EXPECT_EQ(r.event_count(), 4u);
  for (const auto& e : events) {
    auto got = r.event(e.event_id);
    ASSERT_TRUE(got);
    EXPECT_EQ(*got, e);  // embeddings survive 9 significant digits exactly
  }
  EXPECT_EQ(r.chain("ACME/2024-03-05/e000")->delta_polarity, Polarity::more_positive);
  EXPECT_EQ(r.days({RecordKind::days, std::string("ACME")}).at(0).events.size(), 3u);
  EXPECT_EQ(*r.daily_return("ACME", Date::parse("2024-03-04")), 0.0123);
  EXPECT_EQ(r.news("ACME", Date::parse("2024-03-04")).size(), 1u);
  EXPECT_EQ(r.calendar("ACME").days().size(), 2u);
  EXPECT_EQ(r.reflection_count(), 1u);
  fs::remove_all(dir);
}

TEST(Store, RejectsInvalidRecords) {
  Store s(tax());
  auto e = ev("ACME", "2024-03-04", 0);
  e.description.clear();
  EXPECT_THROW(s.put(e), InvariantViolation);
  auto bad_type = ev("ACME", "2024-03-04", 1);
  bad_type.type.name = "Launch Party";
  EXPECT_THROW(s.put(bad_type), InvariantViolation);
  auto r = refl("ACME", "2024-03-04");
  r.reason.clear();
  EXPECT_THROW(s.put(r), InvariantViolation);
  EXPECT_THROW(s.put(PriceBar{"ACME", Date::parse("2024-03-04"), std::nan("")}), InvariantViolation);
}

TEST(Store, RejectsChainBeyondDepthFive) {
  Store s(tax());
  std::vector<std::string> ids;
  std::vector<Date> dates;
  const char* days[] = {"2024-03-11", "2024-03-08", "2024-03-07", "2024-03-06", "2024-03-05", "2024-03-04", "2024-03-01"};
  for (auto d : days) s.put(ev("ACME", d, 0));
  for (int i = 1; i < 7; ++i) {
    ids.push_back(std::string("ACME/") + days[i] + "/e000");
    dates.push_back(Date::parse(days[i]));
  }
  EventChain six{"ACME", Date::parse(days[0]), std::string("ACME/") + days[0] + "/e000", ids, dates, "", Polarity::neutral};
  EXPECT_THROW(s.put(six), InvariantViolation);
  six.predecessors.pop_back();
  six.predecessor_dates.pop_back();
  EXPECT_NO_THROW(s.put(six));
  // Out of order dates.
  std::swap(six.predecessor_dates[0], six.predecessor_dates[1]);
  EXPECT_THROW(s.put(six), InvariantViolation);
}

TEST(Store, ChainNeedsStoredEvents) {
  Store s(tax());
  s.put(ev("ACME", "2024-03-05", 0));
  EXPECT_THROW(s.put(EventChain{"ACME", Date::parse("2024-03-05"), "ACME/2024-03-05/e000", {"ghost"},
                                {Date::parse("2024-03-04")}, "", Polarity::neutral}),
               InvariantViolation);
}

TEST(Store, SeriesHasWindowPlusOneTradingDays) {
  Store s(tax());
  for (auto d : {"2024-03-01", "2024-03-04", "2024-03-05", "2024-03-06"}) s.put(PriceBar{"ACME", Date::parse(d), 0.0});
  s.put(make_daily_set("ACME", Date::parse("2024-03-04"), {ev("ACME", "2024-03-04", 0)}, tax()));
  auto series = s.series("ACME", Date::parse("2024-03-06"), 2, Date::parse("2024-03-07"));
  ASSERT_TRUE(series);
  ASSERT_EQ(series->days.size(), 3u);
  EXPECT_EQ(series->days[0].date, Date::parse("2024-03-04"));
  EXPECT_EQ(series->days[0].events.size(), 1u);
  EXPECT_TRUE(series->days[2].events.empty());
  EXPECT_FALSE(s.series("ACME", Date::parse("2024-03-04"), 2, Date::max()));
}

TEST(Store, LeakageAudit) {
  Store s(tax());
  s.put(ev("ACME", "2024-03-04", 0));
  s.put(ev("ACME", "2024-03-05", 0));
  s.put(refl("ACME", "2024-03-04"));
  // No horizon: nothing audited.
  s.events({RecordKind::events, std::string("ACME"), Date::max()});
  EXPECT_EQ(s.leakage_report().audited_queries, 0u);
  {
    HorizonScope scope(s, {Date::parse("2024-03-06"), Date::parse("2024-03-05")});
    s.events({RecordKind::events, std::string("ACME"), Date::parse("2024-03-06")});
    s.reflections({RecordKind::reflections, std::nullopt, Date::parse("2024-03-05")});
    EXPECT_EQ(s.leakage_report().violations, 0u);
    s.reflections({RecordKind::reflections, std::nullopt, Date::parse("2024-03-06")});
    s.events({RecordKind::events, std::string("ACME"), Date::max()});
  }
  auto report = s.leakage_report();
  EXPECT_EQ(report.audited_queries, 4u);
  EXPECT_EQ(report.violations, 2u);
  s.reset_leakage_report();
  EXPECT_EQ(s.leakage_report().audited_queries, 0u);
}

TEST(Calendar, Navigation) {
  TradingCalendar c({Date::parse("2024-03-01"), Date::parse("2024-03-04"), Date::parse("2024-03-05")});
  EXPECT_EQ(*c.next(Date::parse("2024-03-01")), Date::parse("2024-03-04"));
  EXPECT_EQ(*c.next(Date::parse("2024-03-02")), Date::parse("2024-03-04"));
  EXPECT_FALSE(c.next(Date::parse("2024-03-05")));
  EXPECT_EQ(*c.on_or_after(Date::parse("2024-03-02")), Date::parse("2024-03-04"));
  EXPECT_EQ(*c.back(Date::parse("2024-03-05"), 2), Date::parse("2024-03-01"));
  EXPECT_FALSE(c.back(Date::parse("2024-03-05"), 3));
  EXPECT_EQ(c.between(Date::parse("2024-03-02"), Date::parse("2024-03-05")).size(), 2u);
}
