#include "stockmem/backtest.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <set>
#include <thread>

#include <spdlog/spdlog.h>

#include "stockmem/digest.hpp"
#include "stockmem/errors.hpp"

namespace stockmem {

void to_json(nlohmann::json& j, const BacktestRecord& r) {
  j = {{"record_id", r.record_id},
       {"company", r.company},
       {"date", r.date},
       {"predicted", r.predicted ? nlohmann::json(*r.predicted) : nlohmann::json(nullptr)},
       {"actual", r.actual},
       {"scored", r.scored},
       {"reason", r.reason},
       {"series_ref", r.series_ref},
       {"event_ids", r.event_ids},
       {"chains", r.chains},
       {"candidate_ids", r.candidate_ids},
       {"reference_ids", r.reference_ids},
       {"information_digest", r.information_digest},
       {"prompt_digest", r.prompt_digest}};
}

void from_json(const nlohmann::json& j, BacktestRecord& r) {
  j.at("record_id").get_to(r.record_id);
  j.at("company").get_to(r.company);
  j.at("date").get_to(r.date);
  if (j.at("predicted").is_null()) {
    r.predicted.reset();
  } else {
    r.predicted = j.at("predicted").get<Label>();
  }
  j.at("actual").get_to(r.actual);
  j.at("scored").get_to(r.scored);
  j.at("reason").get_to(r.reason);
  j.at("series_ref").get_to(r.series_ref);
  j.at("event_ids").get_to(r.event_ids);
  j.at("chains").get_to(r.chains);
  j.at("candidate_ids").get_to(r.candidate_ids);
  j.at("reference_ids").get_to(r.reference_ids);
  j.at("information_digest").get_to(r.information_digest);
  j.at("prompt_digest").get_to(r.prompt_digest);
}

MetricsReport summarize(const std::vector<Company>& companies,
                        std::span<const BacktestRecord> records) {
  MetricsReport report;
  for (const auto& c : companies) {
    CompanyMetrics m;
    m.company = c.ticker;
    for (const auto& r : records) {
      if (r.company != c.ticker) continue;
      if (!r.scored) {
        ++m.flat_skipped;
        continue;
      }
      if (r.abstained()) ++m.abstentions;
      m.confusion.add(r.predicted, r.actual);
    }
    m.acc = accuracy(m.confusion);
    m.mcc = compute_mcc(m.confusion);
    report.pooled += m.confusion;
    report.abstentions += m.abstentions;
    report.per_company.push_back(std::move(m));
  }
  if (!report.per_company.empty()) {
    for (const auto& m : report.per_company) {
      report.avg_acc += m.acc;
      report.avg_mcc += m.mcc;
    }
    report.avg_acc /= static_cast<double>(report.per_company.size());
    report.avg_mcc /= static_cast<double>(report.per_company.size());
  }
  report.pooled_acc = accuracy(report.pooled);
  report.pooled_mcc = compute_mcc(report.pooled);
  return report;
}

struct Backtester::DayPrediction {
  BacktestRecord record;
  std::string information;
  std::string delta;
};

namespace {

TrackingOptions tracking_options(const BacktestConfig& c) {
  TrackingOptions o;
  o.window = c.window;
  o.candidate_k = c.tracking_k;
  return o;
}

GeneratorOptions generator_options(const BacktestConfig& c) {
  GeneratorOptions o;
  o.retry_budget = c.backend.retry_budget;
  return o;
}

const BacktestConfig& validated(const BacktestConfig& c) {
  c.validate();
  return c;
}

}  // namespace

Backtester::Backtester(BacktestConfig config, const Taxonomy& taxonomy, const PromptSet& prompts,
                       GenerationBackend& generation, EmbeddingBackend& embedding, Store& store,
                       AuditLog* audit)
    : config_(validated(config)),
      taxonomy_(taxonomy),
      prompts_(prompts),
      embedding_(embedding),
      store_(store),
      generator_(generation, generator_options(config_), audit),
      extractor_(taxonomy, prompts, generator_),
      merger_(taxonomy, prompts, generator_, embedding, MergeOptions{config_.merge_threshold}),
      tracker_(prompts, generator_, store, tracking_options(config_)),
      reflector_(prompts, generator_),
      filter_(prompts, generator_),
      predictor_(prompts, generator_) {
  config_.retrieval.window = config_.window;
}

Backtester::~Backtester() = default;

void Backtester::ingest(std::span<const NewsDoc> news, std::span<const PriceBar> prices) {
  for (const auto& bar : prices) store_.put(bar);
  std::map<std::string, TradingCalendar> calendars;
  std::size_t rolled = 0;
  std::size_t dropped = 0;
  for (auto doc : news) {
    auto it = calendars.find(doc.company);
    if (it == calendars.end()) it = calendars.emplace(doc.company, store_.calendar(doc.company)).first;
    auto day = it->second.on_or_after(doc.date);
    if (!day) {
      ++dropped;
      continue;
    }
    if (*day != doc.date) {
      // Non-trading-day news is first seen on the next session.
      doc.date = *day;
      ++rolled;
    }
    store_.put(doc);
  }
  if (rolled > 0) spdlog::info("{} news documents moved to the next trading day", rolled);
  if (dropped > 0) spdlog::warn("{} news documents fall after the last price bar and were skipped", dropped);
}

const Company* Backtester::company_by_ticker(std::string_view ticker) const {
  for (const auto& c : config_.companies) {
    if (c.ticker == ticker) return &c;
  }
  return nullptr;
}

std::vector<Date> Backtester::all_trading_days(Date first, Date last) const {
  std::set<Date> days;
  for (const auto& c : config_.companies) {
    for (auto d : store_.calendar(c.ticker).between(first, last)) days.insert(d);
  }
  return {days.begin(), days.end()};
}

std::vector<NewsDoc> Backtester::docs_for(const Company& company, Date date) const {
  return store_.news(company.ticker, date);
}

void Backtester::run_parallel(const std::function<void(const Company&)>& task) {
  const auto n = config_.companies.size();
  const auto workers = std::min<std::size_t>(static_cast<std::size_t>(config_.threads), n);
  if (workers <= 1) {
    for (const auto& c : config_.companies) task(c);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr error;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (auto i = next++; i < n; i = next++) {
        try {
          task(config_.companies[i]);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

DailyEventSet Backtester::process_day(const Company& company, Date date) {
  auto existing = store_.days({RecordKind::days, company.ticker, date.next()});
  if (!existing.empty() && existing.back().date == date) return existing.back();

  auto docs = docs_for(company, date);
  auto raw = extractor_.extract_day(docs);
  auto day = merger_.merge_day(company.ticker, date, std::move(raw));
  if (config_.ablation.delta_info) {
    auto calendar = store_.calendar(company.ticker);
    // Events are stored before tracking so chains can reference them, but the
    // day record goes last: its presence marks the day as complete.
    for (const auto& e : day.events) store_.put(e);
    for (const auto& e : day.events) store_.put(tracker_.track(e, calendar));
  }
  store_.put(day);
  return day;
}

ChainIndex Backtester::chain_index(const EventSeries& series) const {
  ChainIndex index;
  for (const auto& day : series.days) {
    for (const auto& e : day.events) {
      auto chain = store_.chain(e.event_id);
      if (!chain) continue;
      for (const auto& p : chain->predecessors) {
        if (index.events.count(p) > 0) continue;
        if (auto pe = store_.event(p)) index.events.emplace(p, std::move(*pe));
      }
      index.chains.emplace(e.event_id, std::move(*chain));
    }
  }
  return index;
}

std::string Backtester::information_for(const Company& company, Date anchor) {
  const std::string key = company.ticker + "@" + anchor.str();
  {
    std::lock_guard lock(cache_mutex_);
    if (auto it = information_cache_.find(key); it != information_cache_.end()) return it->second;
  }
  std::string text;
  if (config_.ablation.representation == Representation::event) {
    auto series = store_.series(company.ticker, anchor, config_.window, anchor.next());
    if (series) {
      text = render_information(*series, config_.ablation.delta_info ? chain_index(*series) : ChainIndex{},
                                RenderOptions{config_.ablation.delta_info});
    }
  } else {
    auto calendar = store_.calendar(company.ticker);
    auto first = calendar.back(anchor, static_cast<std::size_t>(config_.window));
    if (first) {
      std::vector<std::pair<Date, std::vector<NewsDoc>>> days;
      for (auto d : calendar.between(*first, anchor)) days.emplace_back(d, docs_for(company, d));
      text = config_.ablation.representation == Representation::summary
                 ? render_summaries(days)
                 : render_opinions(days, embedding_, config_.merge_threshold);
    }
  }
  if (text.empty()) return text;
  std::lock_guard lock(cache_mutex_);
  information_cache_.emplace(key, text);
  return text;
}

std::string Backtester::delta_summary(const DailyEventSet& day, const ChainIndex& index) const {
  std::string out;
  for (const auto& e : day.events) {
    auto it = index.chains.find(e.event_id);
    if (it == index.chains.end() || it->second.delta_info.empty()) continue;
    out += e.type.name + ": " + it->second.delta_info + "\n";
  }
  return out;
}

std::vector<SeriesCandidate> Backtester::memory_before(Date anchor) {
  std::vector<SeriesCandidate> out;
  for (auto& r : store_.reflections({RecordKind::reflections, std::nullopt, anchor})) {
    std::optional<EventSeries> series;
    {
      std::lock_guard lock(cache_mutex_);
      if (auto it = series_cache_.find(r.reflection_id); it != series_cache_.end()) series = it->second;
    }
    if (!series) {
      series = store_.series(r.company, r.anchor_date, config_.window, r.anchor_date.next());
      if (!series) continue;
      std::lock_guard lock(cache_mutex_);
      series_cache_.emplace(r.reflection_id, *series);
    }
    out.push_back({std::move(*series), std::move(r), 0.0});
  }
  return out;
}

nlohmann::json Backtester::prediction_context(const DailyEventSet& today, const ChainIndex& index,
                                              std::span<const SeriesCandidate> references) const {
  nlohmann::json ctx = {{"company", today.company}, {"date", today.date}};
  if (config_.ablation.delta_info && config_.ablation.representation == Representation::event) {
    std::map<std::string, int> counts{{"more_positive", 0}, {"more_negative", 0}, {"neutral", 0}};
    for (const auto& e : today.events) {
      auto it = index.chains.find(e.event_id);
      if (it != index.chains.end()) ++counts[std::string(to_string(it->second.delta_polarity))];
    }
    ctx["polarity"] = counts;
  }
  nlohmann::json refs = nlohmann::json::array();
  for (const auto& r : references) {
    refs.push_back({{"reflection_id", r.reflection.reflection_id},
                    {"company", r.reflection.company},
                    {"anchor_date", r.reflection.anchor_date},
                    {"realized", r.reflection.realized_move}});
  }
  ctx["references"] = refs;
  return ctx;
}

Backtester::DayPrediction Backtester::predict_day(const Company& company, Date date) {
  DayPrediction out;
  auto& rec = out.record;
  rec.record_id = company.ticker + "@" + date.str();
  rec.company = company.ticker;
  rec.date = date;
  rec.series_ref = series_ref(company.ticker, date, config_.window);

  auto series = store_.series(company.ticker, date, config_.window, date.next());
  ChainIndex index;
  DailyEventSet today;
  if (series) {
    index = chain_index(*series);
    today = series->days.back();
  } else {
    today = make_daily_set(company.ticker, date, {}, taxonomy_);
  }
  for (const auto& e : today.events) {
    rec.event_ids.push_back(e.event_id);
    if (auto it = index.chains.find(e.event_id); it != index.chains.end()) rec.chains.push_back(it->second);
  }

  out.information = information_for(company, date);
  if (out.information.empty()) out.information = "(insufficient history)\n";
  out.delta = delta_summary(today, index);

  std::vector<SeriesCandidate> references;
  if (series && config_.ablation.strategy != RetrievalStrategy::none) {
    auto memory = memory_before(date);
    auto coarse = coarse_screen(*series, memory, config_.retrieval, config_.ablation.strategy);
    for (const auto& c : coarse) rec.candidate_ids.push_back(c.reflection.reflection_id);
    std::vector<std::string> renderings;
    for (const auto& c : coarse) {
      const Company* owner = company_by_ticker(c.series.company);
      Company fallback{c.series.company, c.series.company};
      renderings.push_back(information_for(owner ? *owner : fallback, c.series.anchor_date));
    }
    try {
      references = filter_.fine_filter(out.information, coarse, renderings);
    } catch (const SchemaViolation& e) {
      spdlog::warn("reference filter failed for {}: {}", rec.record_id, e.what());
    }
  }

  std::vector<ReferenceCase> cases;
  EvidenceBundle bundle;
  for (const auto& r : references) {
    const Company* owner = company_by_ticker(r.series.company);
    ReferenceCase rc;
    rc.company_name = owner ? owner->name : r.series.company;
    rc.reflection = r.reflection;
    rc.information = information_for(owner ? *owner : Company{r.series.company, r.series.company},
                                      r.series.anchor_date);
    cases.push_back(std::move(rc));
    rec.reference_ids.push_back(r.reflection.reflection_id);
    bundle.reflection_ids.push_back(r.reflection.reflection_id);
  }
  bundle.company_name = company.name;
  bundle.information = out.information;
  bundle.hist_reflection = render_references(cases);
  bundle.context = prediction_context(today, index, references);

  auto prediction = predictor_.predict(bundle);
  rec.predicted = prediction.direction;
  rec.reason = prediction.reason;
  rec.prompt_digest = prediction.prompt_digest;
  rec.information_digest = sha256_hex(out.information);
  return out;
}

std::size_t Backtester::build_memory() {
  std::atomic<std::size_t> added{0};
  for (auto date : all_trading_days(config_.train_start, config_.train_end)) {
    run_parallel([&](const Company& c) {
      auto calendar = store_.calendar(c.ticker);
      if (!calendar.index_of(date)) return;
      auto day = process_day(c, date);
      auto next = calendar.next(date);
      if (!next) return;
      auto ret = store_.daily_return(c.ticker, *next);
      if (!ret) return;
      if (!config_.reflect_flat && label_return(*ret) == Label::flat) return;
      auto existing = store_.reflections({RecordKind::reflections, c.ticker, date.next()});
      if (!existing.empty() && existing.back().anchor_date == date) return;
      auto series = store_.series(c.ticker, date, config_.window, date.next());
      if (!series) return;
      auto info = information_for(c, date);
      auto index = config_.ablation.delta_info ? chain_index(*series) : ChainIndex{};
      reflector_.reflect_and_store(store_, c, *series, info, delta_summary(day, index));
      ++added;
    });
  }
  return added;
}

BacktestResult Backtester::run_test() {
  BacktestResult result;
  store_.reset_leakage_report();
  std::mutex records_mutex;
  std::atomic<std::size_t> online{0};

  for (auto date : all_trading_days(config_.test_start, config_.test_end)) {
    std::map<std::string, DayPrediction> today;
    {
      // Everything on day t sees events up to t and reflections before t.
      HorizonScope scope(store_, AuditHorizon{date.next(), date});
      run_parallel([&](const Company& c) {
        if (!store_.calendar(c.ticker).index_of(date)) return;
        process_day(c, date);
        auto p = predict_day(c, date);
        std::lock_guard lock(records_mutex);
        today.emplace(c.ticker, std::move(p));
      });
    }
    // The label is revealed after the prediction, then folded into memory.
    run_parallel([&](const Company& c) {
      DayPrediction* p = nullptr;
      {
        std::lock_guard lock(records_mutex);
        auto it = today.find(c.ticker);
        if (it == today.end()) return;
        p = &it->second;
      }
      auto next = store_.calendar(c.ticker).next(date);
      std::optional<double> ret;
      if (next) ret = store_.daily_return(c.ticker, *next);
      if (!ret) {
        spdlog::warn("no label for {}; record kept unscored", p->record.record_id);
        return;
      }
      auto label = label_return(*ret);
      p->record.actual = label;
      p->record.scored = label != Label::flat;
      if (!config_.reflect_flat && label == Label::flat) return;
      auto existing = store_.reflections({RecordKind::reflections, c.ticker, date.next()});
      if (!existing.empty() && existing.back().anchor_date == date) return;
      auto series = store_.series(c.ticker, date, config_.window, date.next());
      if (!series) return;
      reflector_.reflect_and_store(store_, c, *series, information_for(c, date), p->delta);
      ++online;
    });
    for (auto& [ticker, p] : today) result.records.push_back(std::move(p.record));
  }

  std::sort(result.records.begin(), result.records.end(), [](const auto& a, const auto& b) {
    return std::tie(a.date, a.company) < std::tie(b.date, b.company);
  });
  result.metrics = summarize(config_.companies, result.records);
  result.leakage = store_.leakage_report();
  result.online_reflections = online;
  std::string all;
  for (const auto& r : result.records) all += r.prompt_digest + "\n";
  result.run_digest = sha256_hex(all);
  return result;
}

BacktestResult Backtester::run() {
  auto training = build_memory();
  auto result = run_test();
  result.training_reflections = training;
  return result;
}

}  // namespace stockmem
