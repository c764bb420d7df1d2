#pragma once

#include <cstdint>

#include "greybox/dataset.hpp"
#include "greybox/kb.hpp"

namespace greybox {

struct SynthNoiseConfig {
  double p_omit = 0.0;    // each linked attribute is dropped independently
  int height = 64;
  int width = 64;
  int cell_size = 8;      // boxes live in distinct, non-touching grid cells
  int max_instances = 3;  // boxes per retained attribute, drawn from [1, max]

  void validate() const;
};

// Samples drawn from the isPartOf links of a knowledge base: every class gets
// `n_per_class` samples whose attributes are a random subset (at least one) of
// the attributes linked to it. Sample ids are "s000000", "s000001", ... in
// class order; each sample has its own stream seeded from (seed, id).
TripleDataset synth_generate(const KnowledgeBase& kb, int n_per_class,
                             const SynthNoiseConfig& noise, std::uint64_t seed);

// Same, with explicit vocabularies. A class with no linked attribute is an error.
TripleDataset synth_generate(const KnowledgeBase& kb, const AttributeVocabulary& attributes,
                             const ClassVocabulary& classes, int n_per_class,
                             const SynthNoiseConfig& noise, std::uint64_t seed);

}  // namespace greybox
