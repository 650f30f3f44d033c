#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "stockmem/backtest.hpp"
#include "stockmem/errors.hpp"
#include "stockmem/io.hpp"
#include "stockmem/runtime.hpp"
#include "stockmem/synthetic.hpp"

namespace fs = std::filesystem;
using namespace stockmem;

namespace {

struct Overrides {
  std::string config_path;
  std::string store_dir;
  std::string companies;  // comma separated tickers
  std::string backend;
  int threads = 0;
  std::string representation;
  std::string delta;  // on | off
  std::string strategy;
};

std::vector<std::string> split(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

BacktestConfig load(const Overrides& o) {
  auto cfg = load_config(o.config_path);
  if (!o.companies.empty()) {
    std::vector<Company> keep;
    for (const auto& t : split(o.companies)) {
      auto it = std::find_if(cfg.companies.begin(), cfg.companies.end(),
                             [&](const Company& c) { return c.ticker == t; });
      if (it == cfg.companies.end()) throw ConfigError("company " + t + " is not in the config");
      keep.push_back(*it);
    }
    cfg.companies = std::move(keep);
  }
  if (!o.backend.empty()) cfg.backend.kind = o.backend;
  if (o.threads > 0) cfg.threads = o.threads;
  if (!o.representation.empty()) {
    cfg.ablation.representation = representation_from_string(o.representation);
    // Summaries carry no chains; switch delta_info off unless asked for explicitly.
    if (cfg.ablation.representation != Representation::event && o.delta.empty()) cfg.ablation.delta_info = false;
  }
  if (o.delta == "on") cfg.ablation.delta_info = true;
  if (o.delta == "off") cfg.ablation.delta_info = false;
  if (!o.delta.empty() && o.delta != "on" && o.delta != "off") throw ConfigError("--delta takes on or off");
  if (!o.strategy.empty()) cfg.ablation.strategy = retrieval_strategy_from_string(o.strategy);
  cfg.validate();
  return cfg;
}

std::unique_ptr<Store> open_store(const Taxonomy& tax, const std::string& dir) {
  if (dir.empty()) return std::make_unique<Store>(tax);
  return std::make_unique<Store>(tax, fs::path(dir));
}

void ingest_inputs(Backtester& bt, const BacktestConfig& cfg) {
  if (!cfg.news_path || !cfg.prices_path) throw ConfigError("config needs data.news and data.prices");
  auto news = load_news(*cfg.news_path);
  auto prices = load_prices(*cfg.prices_path);
  bt.ingest(news, prices);
  spdlog::info("ingested {} documents and {} price bars", news.size(), prices.size());
}

void write_outputs(const fs::path& out, const BacktestResult& result, const Store& store) {
  fs::create_directories(out);
  {
    std::ofstream f(out / "metrics.json");
    nlohmann::json j = {{"metrics", result.metrics},
                        {"leakage", {{"audited_queries", result.leakage.audited_queries},
                                     {"violations", result.leakage.violations}}},
                        {"training_reflections", result.training_reflections},
                        {"online_reflections", result.online_reflections},
                        {"run_digest", result.run_digest}};
    f << j.dump(2) << '\n';
  }
  {
    std::ofstream f(out / "records.jsonl");
    for (const auto& r : result.records) f << nlohmann::json(r).dump() << '\n';
  }
  {
    std::ofstream f(out / "report.txt");
    for (const auto& r : result.records) f << report_explainability(r, store) << '\n';
  }
}

void print_summary(const BacktestResult& result) {
  const auto& m = result.metrics;
  for (const auto& c : m.per_company) {
    std::printf("%-8s ACC %.4f  MCC %+.4f  (tp %lld tn %lld fp %lld fn %lld, abstained %lld, flat %lld)\n",
                c.company.c_str(), c.acc, c.mcc, static_cast<long long>(c.confusion.tp),
                static_cast<long long>(c.confusion.tn), static_cast<long long>(c.confusion.fp),
                static_cast<long long>(c.confusion.fn), static_cast<long long>(c.abstentions),
                static_cast<long long>(c.flat_skipped));
  }
  std::printf("average  ACC %.4f  MCC %+.4f\n", m.avg_acc, m.avg_mcc);
  std::printf("leakage violations %zu of %zu audited reads\n", result.leakage.violations,
              result.leakage.audited_queries);
  std::printf("run digest %s\n", result.run_digest.c_str());
}

struct Session {
  BacktestConfig cfg;
  Runtime rt;
  std::unique_ptr<Store> store;
  std::ofstream audit_file;
  std::unique_ptr<AuditLog> audit;
  std::unique_ptr<Backtester> bt;

  Session(const Overrides& o, const fs::path& audit_path = {}) : cfg(load(o)), rt(make_runtime(cfg)) {
    store = open_store(*rt.taxonomy, o.store_dir);
    if (!audit_path.empty()) {
      fs::create_directories(audit_path.parent_path());
      audit_file.open(audit_path);
      audit = std::make_unique<AuditLog>(&audit_file);
    }
    bt = std::make_unique<Backtester>(cfg, *rt.taxonomy, rt.prompts, *rt.generation, *rt.embedding, *store,
                                      audit.get());
  }
};

void add_config_options(CLI::App* cmd, Overrides& o, bool with_store = true) {
  cmd->add_option("-c,--config", o.config_path, "Config file (JSON)")->required()->check(CLI::ExistingFile);
  if (with_store) cmd->add_option("-s,--store", o.store_dir, "Persistent store directory");
  cmd->add_option("--companies", o.companies, "Comma-separated subset of configured tickers");
  cmd->add_option("--backend", o.backend, "Backend kind")->check(CLI::IsMember({"mock", "remote"}));
  cmd->add_option("--threads", o.threads, "Companies processed in parallel");
}

void add_ablation_options(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--representation", o.representation, "event | summary | cluster_opinion")
      ->check(CLI::IsMember({"event", "summary", "cluster_opinion"}));
  cmd->add_option("--delta", o.delta, "Incremental information: on | off")->check(CLI::IsMember({"on", "off"}));
  cmd->add_option("--strategy", o.strategy, "full | same_company | recent_period | none")
      ->check(CLI::IsMember({"full", "same_company", "recent_period", "none"}));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Event memory and reflection pipeline for daily stock movement prediction"};
  app.fallthrough();
  app.require_subcommand(1);
  std::string log_level = "warn";
  app.add_option("--log-level", log_level, "trace|debug|info|warn|error|off");

  Overrides o;

  auto* synth = app.add_subcommand("synth", "Write a synthetic corpus and config for offline runs");
  std::string synth_out;
  SyntheticCorpusOptions synth_opts;
  std::uint64_t seed = synth_opts.seed;
  synth->add_option("-o,--out", synth_out, "Output directory")->required();
  synth->add_option("--train-days", synth_opts.train_days, "Training trading days");
  synth->add_option("--test-days", synth_opts.test_days, "Test trading days");
  synth->add_option("--seed", seed, "Corpus seed");

  auto* ingest = app.add_subcommand("ingest", "Load news and prices into a store");
  add_config_options(ingest, o);
  ingest->get_option("--store")->required();

  auto* build = app.add_subcommand("build-memory", "Training phase: events, chains and reflections");
  add_config_options(build, o);
  build->get_option("--store")->required();
  add_ablation_options(build, o);

  auto* backtest = app.add_subcommand("backtest", "Rolling test phase with online updates");
  std::string out_dir = "out";
  add_config_options(backtest, o);
  add_ablation_options(backtest, o);
  backtest->add_option("-o,--out", out_dir, "Directory for metrics.json, records.jsonl, report.txt");

  auto* ablate = app.add_subcommand("ablate", "Run ablation variants on fresh in-memory stores");
  bool grid = false;
  add_config_options(ablate, o, false);
  add_ablation_options(ablate, o);
  ablate->add_flag("--grid", grid, "Run the full variant grid");
  ablate->add_option("-o,--out", out_dir, "Output directory");

  auto* report = app.add_subcommand("report", "Explain predictions from a records file");
  std::string records_path;
  std::string record_id;
  report->add_option("-r,--records", records_path, "records.jsonl")->required()->check(CLI::ExistingFile);
  report->add_option("-s,--store", o.store_dir, "Store directory used for the run")->required();
  report->add_option("--id", record_id, "Record id, e.g. ACME@2024-03-01 (default: all)");
  report->add_option("-c,--config", o.config_path, "Config (for a custom taxonomy)");

  CLI11_PARSE(app, argc, argv);
  spdlog::set_level(spdlog::level::from_str(log_level));

  try {
    if (*synth) {
      synth_opts.seed = seed;
      auto corpus = make_synthetic_corpus(synth_opts, Taxonomy::builtin());
      fs::create_directories(synth_out);
      {
        std::ofstream f(fs::path(synth_out) / "news.jsonl");
        write_news(f, corpus.news);
      }
      {
        std::ofstream f(fs::path(synth_out) / "prices.csv");
        write_prices(f, corpus.prices);
      }
      nlohmann::json cfg = {{"companies", corpus.companies},
                            {"train", {{"start", corpus.train_start}, {"end", corpus.train_end}}},
                            {"test", {{"start", corpus.test_start}, {"end", corpus.test_end}}},
                            {"window", 5},
                            {"backend", {{"kind", "mock"}, {"embedding_dimension", 64}}},
                            {"data", {{"news", "news.jsonl"}, {"prices", "prices.csv"}}}};
      std::ofstream(fs::path(synth_out) / "config.json") << cfg.dump(2) << '\n';
      std::printf("wrote %zu documents and %zu price bars to %s\n", corpus.news.size(), corpus.prices.size(),
                  synth_out.c_str());
      return 0;
    }

    if (*ingest) {
      Session s(o);
      ingest_inputs(*s.bt, s.cfg);
      return 0;
    }

    if (*build) {
      Session s(o);
      ingest_inputs(*s.bt, s.cfg);
      auto n = s.bt->build_memory();
      std::printf("%zu reflections added; store holds %zu events and %zu reflections\n", n,
                  s.store->event_count(), s.store->reflection_count());
      return 0;
    }

    if (*backtest) {
      Session s(o, fs::path(out_dir) / "audit.jsonl");
      ingest_inputs(*s.bt, s.cfg);
      auto result = s.bt->run();
      write_outputs(out_dir, result, *s.store);
      print_summary(result);
      return result.leakage.violations == 0 ? 0 : 3;
    }

    if (*ablate) {
      std::vector<Overrides> variants;
      if (grid) {
        auto v = o;
        v.representation.clear();
        v.delta.clear();
        v.strategy.clear();
        variants.push_back(v);
        for (const char* rep : {"summary", "cluster_opinion"}) {
          auto x = v;
          x.representation = rep;
          variants.push_back(x);
        }
        auto x = v;
        x.delta = "off";
        variants.push_back(x);
        for (const char* st : {"same_company", "recent_period", "none"}) {
          auto y = v;
          y.strategy = st;
          variants.push_back(y);
        }
      } else {
        variants.push_back(o);
      }
      nlohmann::json table = nlohmann::json::array();
      for (const auto& v : variants) {
        Session s(v);
        ingest_inputs(*s.bt, s.cfg);
        auto result = s.bt->run();
        std::string name = std::string(to_string(s.cfg.ablation.representation)) +
                           "/delta=" + (s.cfg.ablation.delta_info ? "on" : "off") + "/" +
                           std::string(to_string(s.cfg.ablation.strategy));
        std::printf("%-40s ACC %.4f  MCC %+.4f  digest %.16s\n", name.c_str(), result.metrics.avg_acc,
                    result.metrics.avg_mcc, result.run_digest.c_str());
        table.push_back({{"variant", name},
                         {"metrics", result.metrics},
                         {"run_digest", result.run_digest},
                         {"leakage_violations", result.leakage.violations}});
      }
      fs::create_directories(out_dir);
      std::ofstream(fs::path(out_dir) / "ablation.json") << table.dump(2) << '\n';
      return 0;
    }

    if (*report) {
      std::unique_ptr<Taxonomy> owned;
      const Taxonomy* tax = &Taxonomy::builtin();
      if (!o.config_path.empty()) {
        auto cfg = load_config(o.config_path);
        if (cfg.taxonomy_path) {
          owned = std::make_unique<Taxonomy>(Taxonomy::load_file(*cfg.taxonomy_path));
          tax = owned.get();
        }
      }
      Store store(*tax, fs::path(o.store_dir));
      std::vector<BacktestRecord> records;
      std::ifstream in(records_path);
      std::string line;
      while (std::getline(in, line)) {
        if (!line.empty()) records.push_back(nlohmann::json::parse(line).get<BacktestRecord>());
      }
      if (record_id.empty()) {
        for (const auto& r : records) std::cout << report_explainability(r, store) << '\n';
      } else {
        std::cout << report_explainability(records, record_id, store);
      }
      return 0;
    }
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
