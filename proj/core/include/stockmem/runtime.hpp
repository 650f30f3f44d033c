#pragma once

#include <memory>

#include "stockmem/backends.hpp"
#include "stockmem/config.hpp"
#include "stockmem/prompts.hpp"
#include "stockmem/taxonomy.hpp"

namespace stockmem {

/// Taxonomy, prompts and backends resolved from a config.
struct Runtime {
  std::unique_ptr<Taxonomy> owned_taxonomy;
  const Taxonomy* taxonomy = nullptr;
  PromptSet prompts;
  std::unique_ptr<GenerationBackend> generation;
  std::unique_ptr<EmbeddingBackend> embedding;
};

/// kind "mock": fixture script (if any) with the synthetic responder as
/// fallback, hash embeddings. kind "remote": HTTP clients, key read from the
/// environment.
Runtime make_runtime(const BacktestConfig& config);

}  // namespace stockmem
