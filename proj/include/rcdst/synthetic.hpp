#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "rcdst/corpus.hpp"
#include "rcdst/embeddings.hpp"

namespace rcdst::synthetic {

/// A small templated multi-domain corpus with eight slots. Every gold value
/// is either yes/no/dontcare or appears verbatim in the dialog, so the
/// derivability coverage is 1.
struct Bundle {
  Schema schema;
  Ontology ontology;
  std::vector<Dialog> train;
  std::vector<Dialog> dev;
};

Bundle generate(std::uint64_t seed, std::size_t train_dialogs = 50, std::size_t dev_dialogs = 20);

/// Informative per-token features standing in for contextual embeddings:
/// a fixed random identity code, ontology-lexicon indicators per slot,
/// per-slot indicators for the enclosing utterance, speaker flags, recency
/// of the utterance and position within it. The same token gets different
/// vectors in different contexts.
EmbeddingStore contextual_embeddings(const std::vector<Dialog>& dialogs, const Schema& schema,
                                     const Ontology& ontology, std::uint64_t seed);

}  // namespace rcdst::synthetic
