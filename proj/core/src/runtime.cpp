#include "stockmem/runtime.hpp"

#include "stockmem/errors.hpp"
#include "stockmem/synthetic.hpp"

namespace stockmem {

Runtime make_runtime(const BacktestConfig& config) {
  Runtime rt;
  if (config.taxonomy_path) {
    rt.owned_taxonomy = std::make_unique<Taxonomy>(Taxonomy::load_file(*config.taxonomy_path));
    rt.taxonomy = rt.owned_taxonomy.get();
  } else {
    rt.taxonomy = &Taxonomy::builtin();
  }
  rt.prompts = config.prompts_dir ? PromptSet::load_dir(*config.prompts_dir) : PromptSet::builtin();

  const auto& b = config.backend;
  if (b.kind == "mock") {
    std::vector<FixtureEntry> script;
    if (b.fixture) script = load_fixture(*b.fixture);
    Responder fallback;
    if (b.synthetic_fallback) fallback = synthetic_responder(*rt.taxonomy);
    rt.generation = std::make_unique<MockGenerationBackend>(std::move(script), std::move(fallback));
    rt.embedding = std::make_unique<MockEmbeddingBackend>(b.embedding_dimension);
  } else if (b.kind == "remote") {
    auto remote = b.remote;
    remote.embedding_dimension = b.embedding_dimension;
    rt.generation = make_remote_generation_backend(remote);
    rt.embedding = make_remote_embedding_backend(remote);
  } else {
    throw ConfigError("unknown backend kind " + b.kind);
  }
  return rt;
}

}  // namespace stockmem
