#include <random>

#include <benchmark/benchmark.h>

#include "stockmem/merging.hpp"
#include "stockmem/retrieval.hpp"
#include "stockmem/tracking.hpp"

using namespace stockmem;

namespace {

const Taxonomy& tax() { return Taxonomy::builtin(); }

DailyEventSet random_day(std::mt19937_64& rng, const std::string& company, Date date) {
  std::vector<Event> events;
  int n = static_cast<int>(rng() % 5);
  for (int i = 0; i < n; ++i) {
    const auto& t = tax().type(static_cast<int>(rng() % tax().type_count()));
    Event e;
    e.event_id = company + "/" + date.str() + "/e" + std::to_string(i);
    e.company = company;
    e.time = date;
    e.type = t;
    e.group = tax().group(t.group);
    e.description = "x";
    events.push_back(std::move(e));
  }
  return make_daily_set(company, date, std::move(events), tax());
}

EventSeries random_series(std::mt19937_64& rng, const std::string& company, Date anchor, int w) {
  EventSeries s;
  s.company = company;
  s.anchor_date = anchor;
  s.window = w;
  for (int i = w; i >= 0; --i) s.days.push_back(random_day(rng, company, anchor.plus_days(-i)));
  return s;
}

Embedding random_unit(std::mt19937_64& rng, std::size_t dim) {
  std::normal_distribution<float> n(0, 1);
  Embedding v(dim);
  double norm = 0;
  for (auto& x : v) {
    x = n(rng);
    norm += double(x) * x;
  }
  for (auto& x : v) x = static_cast<float>(x / std::sqrt(norm));
  return v;
}

}  // namespace

static void BM_Jaccard(benchmark::State& state) {
  std::mt19937_64 rng(1);
  BitVector a(57), b(57);
  for (std::size_t i = 0; i < 57; ++i) {
    if (rng() % 4 == 0) a.set(i);
    if (rng() % 4 == 0) b.set(i);
  }
  for (auto _ : state) benchmark::DoNotOptimize(jaccard(a, b));
}
BENCHMARK(BM_Jaccard);

static void BM_SeqSim(benchmark::State& state) {
  std::mt19937_64 rng(2);
  int w = static_cast<int>(state.range(0));
  auto a = random_series(rng, "A", Date(2024, 6, 3), w);
  auto b = random_series(rng, "B", Date(2024, 5, 3), w);
  SimilarityParams p;
  p.window = w;
  for (auto _ : state) benchmark::DoNotOptimize(seq_sim(a, b, p));
}
BENCHMARK(BM_SeqSim)->Arg(2)->Arg(5)->Arg(10);

static void BM_CoarseScreen(benchmark::State& state) {
  std::mt19937_64 rng(3);
  const char* companies[] = {"ACME", "BOLT", "CRUX", "DUNE"};
  std::vector<SeriesCandidate> memory;
  for (std::int64_t i = 0; i < state.range(0); ++i) {
    SeriesCandidate c;
    c.series = random_series(rng, companies[i % 4], Date(2024, 1, 1).plus_days(static_cast<int>(i / 4)), 5);
    c.reflection.reflection_id = c.series.company + "@" + c.series.anchor_date.str();
    memory.push_back(std::move(c));
  }
  auto current = random_series(rng, "ACME", Date(2030, 1, 1), 5);
  SimilarityParams p;
  for (auto _ : state) benchmark::DoNotOptimize(coarse_screen(current, memory, p, RetrievalStrategy::full));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_CoarseScreen)->Arg(100)->Arg(1000)->Arg(10000);

static void BM_TopKCandidates(benchmark::State& state) {
  std::mt19937_64 rng(4);
  Event q;
  q.event_id = "q";
  q.time = Date(2024, 3, 8);
  q.embedding = random_unit(rng, 1024);
  std::vector<Event> history(static_cast<std::size_t>(state.range(0)));
  for (std::size_t i = 0; i < history.size(); ++i) {
    history[i].event_id = "h" + std::to_string(i);
    history[i].time = Date(2024, 3, 1 + static_cast<unsigned>(i % 7));
    history[i].embedding = random_unit(rng, 1024);
  }
  for (auto _ : state) benchmark::DoNotOptimize(top_k_candidates(q, history, 10));
}
BENCHMARK(BM_TopKCandidates)->Arg(50)->Arg(500);

static void BM_ClusterGroup(benchmark::State& state) {
  std::mt19937_64 rng(5);
  std::vector<Event> events(static_cast<std::size_t>(state.range(0)));
  const auto& t = tax().type(11);
  for (std::size_t i = 0; i < events.size(); ++i) {
    events[i].event_id = "e" + std::to_string(i);
    events[i].type = t;
    events[i].group = tax().group(t.group);
    events[i].embedding = random_unit(rng, 1024);
  }
  for (auto _ : state) benchmark::DoNotOptimize(cluster_group(events, 0.8));
}
BENCHMARK(BM_ClusterGroup)->Arg(10)->Arg(100);

BENCHMARK_MAIN();
