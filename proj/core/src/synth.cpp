#include "greybox/synth.hpp"

#include <cstdio>
#include <numeric>

#include "greybox/random.hpp"

namespace greybox {

void SynthNoiseConfig::validate() const {
  if (!(p_omit >= 0.0 && p_omit <= 1.0)) throw ValidationError("p_omit must lie in [0, 1]");
  if (cell_size < 3) throw ValidationError("cell_size must be >= 3");
  if (height < cell_size || width < cell_size) {
    throw ValidationError("grid must hold at least one cell");
  }
  if (max_instances < 1) throw ValidationError("max_instances must be >= 1");
}

TripleDataset synth_generate(const KnowledgeBase& kb, int n_per_class,
                             const SynthNoiseConfig& noise, std::uint64_t seed) {
  auto [attributes, classes] = derive_vocabularies(kb);
  return synth_generate(kb, attributes, classes, n_per_class, noise, seed);
}

TripleDataset synth_generate(const KnowledgeBase& kb, const AttributeVocabulary& attributes,
                             const ClassVocabulary& classes, int n_per_class,
                             const SynthNoiseConfig& noise, std::uint64_t seed) {
  noise.validate();
  if (n_per_class < 0) throw ValidationError("n_per_class must be non-negative");
  const auto links = class_links(kb, attributes, classes);
  for (std::size_t c = 0; c < links.size(); ++c) {
    if (links[c].empty()) {
      throw ValidationError("class '" + classes.names()[c] + "' has no linked attributes to sample from");
    }
  }

  const int cells_x = noise.width / noise.cell_size;
  const int cells_y = noise.height / noise.cell_size;
  const int n_cells = cells_x * cells_y;

  TripleDataset ds{attributes, classes, {}};
  int counter = 0;
  for (std::size_t c = 0; c < links.size(); ++c) {
    for (int n = 0; n < n_per_class; ++n) {
      char id[32];
      std::snprintf(id, sizeof(id), "s%06d", counter++);
      Sample s;
      s.id = id;
      s.label = static_cast<ClassId>(c);
      s.height = noise.height;
      s.width = noise.width;

      Rng rng(derive_seed(seed, s.id));
      std::vector<AttributeId> kept;
      for (AttributeId a : links[c]) {
        if (!rng.bernoulli(noise.p_omit)) kept.push_back(a);
      }
      if (kept.empty()) {
        const auto pick = rng.uniform_int(0, static_cast<std::int64_t>(links[c].size()) - 1);
        kept.push_back(links[c][static_cast<std::size_t>(pick)]);
      }

      std::vector<int> instances;
      int total = 0;
      for (std::size_t i = 0; i < kept.size(); ++i) {
        instances.push_back(static_cast<int>(rng.uniform_int(1, noise.max_instances)));
        total += instances.back();
      }
      if (total > n_cells) {
        throw ValidationError("grid of " + std::to_string(n_cells) + " cells cannot hold " +
                              std::to_string(total) + " boxes; enlarge the grid or lower max_instances");
      }

      // Partial Fisher-Yates over cell indices.
      std::vector<int> cells(static_cast<std::size_t>(n_cells));
      std::iota(cells.begin(), cells.end(), 0);
      int next_cell = 0;
      const int max_extent = noise.cell_size - 1;
      for (std::size_t i = 0; i < kept.size(); ++i) {
        for (int k = 0; k < instances[i]; ++k) {
          const auto j = rng.uniform_int(next_cell, n_cells - 1);
          std::swap(cells[static_cast<std::size_t>(next_cell)], cells[static_cast<std::size_t>(j)]);
          const int cell = cells[static_cast<std::size_t>(next_cell++)];
          BBox b;
          b.attribute = kept[i];
          b.w = static_cast<int>(rng.uniform_int(2, max_extent));
          b.h = static_cast<int>(rng.uniform_int(2, max_extent));
          // The last row and column of each cell stay empty so boxes never touch.
          b.x = (cell % cells_x) * noise.cell_size + static_cast<int>(rng.uniform_int(0, max_extent - b.w));
          b.y = (cell / cells_x) * noise.cell_size + static_cast<int>(rng.uniform_int(0, max_extent - b.h));
          s.boxes.push_back(b);
        }
      }
      s.gt_segmap = rasterize_bboxes(s.boxes, s.height, s.width);
      ds.samples.push_back(std::move(s));
    }
  }
  return ds;
}

}  // namespace greybox
