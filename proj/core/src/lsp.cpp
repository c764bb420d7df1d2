#include "greybox/lsp.hpp"

#include <cmath>
#include <map>
#include <set>

#include "greybox/random.hpp"

namespace greybox {

namespace {

std::map<AttributeId, int> regions_of(const SegMap& map, const AttributeVector& present) {
  auto all = count_regions(map);
  std::map<AttributeId, int> out;
  for (AttributeId id : present.ids()) out[id] = all[id];
  return out;
}

SegMap noisy_prediction(const NoiseConfig& noise, const Sample& sample, const AttributeVocabulary& vocab) {
  Rng rng(derive_seed(noise.seed, sample.id));

  std::vector<bool> keep(sample.boxes.size(), true);
  for (std::size_t i = 0; i < sample.boxes.size(); ++i) {
    if (rng.bernoulli(noise.p_drop_instance)) keep[i] = false;
  }
  if (noise.keep_last_instance) {
    std::map<AttributeId, std::size_t> first_box;
    std::set<AttributeId> survivors;
    for (std::size_t i = 0; i < sample.boxes.size(); ++i) {
      first_box.try_emplace(sample.boxes[i].attribute, i);
      if (keep[i]) survivors.insert(sample.boxes[i].attribute);
    }
    for (const auto& [attr, idx] : first_box) {
      if (!survivors.contains(attr)) keep[idx] = true;
    }
  }

  std::set<AttributeId> annotated;
  for (const auto& b : sample.boxes) annotated.insert(b.attribute);
  for (AttributeId attr : annotated) {
    if (rng.bernoulli(noise.p_drop_attribute)) {
      for (std::size_t i = 0; i < sample.boxes.size(); ++i) {
        if (sample.boxes[i].attribute == attr) keep[i] = false;
      }
    }
  }

  SegMap map;
  if (std::find(keep.begin(), keep.end(), false) == keep.end()) {
    map = sample.gt_segmap;
  } else {
    std::vector<BBox> kept;
    for (std::size_t i = 0; i < sample.boxes.size(); ++i) {
      if (keep[i]) kept.push_back(sample.boxes[i]);
    }
    map = rasterize_bboxes(kept, sample.height, sample.width);
  }

  validate_segmap(map, vocab);
  const int area = std::max(1, noise.spurious_min_pixels);
  const int side = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(area))));
  const int w = std::min(side, map.width());
  const int h = std::min((area + w - 1) / w, map.height());
  std::vector<bool> present(vocab.size() + 1, false);
  for (AttributeId id : map.labels()) present[static_cast<std::size_t>(id)] = true;
  for (std::size_t a = 1; a <= vocab.size(); ++a) {
    if (present[a]) continue;
    if (!rng.bernoulli(noise.p_spurious)) continue;
    const auto x = static_cast<int>(rng.uniform_int(0, map.width() - w));
    const auto y = static_cast<int>(rng.uniform_int(0, map.height() - h));
    for (int r = y; r < y + h; ++r) {
      for (int c = x; c < x + w; ++c) map.set(r, c, static_cast<AttributeId>(a));
    }
  }
  return map;
}

}  // namespace

void NoiseConfig::validate() const {
  for (double p : {p_drop_instance, p_drop_attribute, p_spurious}) {
    if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("noise probabilities must lie in [0, 1]");
  }
  if (spurious_min_pixels < 1) throw ValidationError("spurious_min_pixels must be >= 1");
}

std::filesystem::path prediction_labels_path(const std::filesystem::path& dir, std::string_view sample_id) {
  return dir / (std::string(sample_id) + ".seg");
}

std::filesystem::path prediction_confidence_path(const std::filesystem::path& dir,
                                                 std::string_view sample_id) {
  return dir / (std::string(sample_id) + ".conf");
}

void validate_predictor(const PredictorConfig& cfg) {
  if (const auto* f = std::get_if<FilePredictor>(&cfg)) {
    if (!std::filesystem::is_directory(f->dir)) {
      throw IoError("prediction directory '" + f->dir.string() + "' does not exist");
    }
  } else if (const auto* n = std::get_if<NoisyPredictor>(&cfg)) {
    n->noise.validate();
  }
}

SegMap predict_segmap(const PredictorConfig& cfg, const Sample& sample,
                      const AttributeVocabulary& vocab) {
  return std::visit(
      [&](const auto& mode) -> SegMap {
        using Mode = std::decay_t<decltype(mode)>;
        if constexpr (std::is_same_v<Mode, OraclePredictor>) {
          return sample.gt_segmap;
        } else if constexpr (std::is_same_v<Mode, FilePredictor>) {
          const auto labels = prediction_labels_path(mode.dir, sample.id);
          if (!std::filesystem::exists(labels)) {
            throw IoError("no prediction file for sample '" + sample.id + "' at " + labels.string());
          }
          const auto conf = prediction_confidence_path(mode.dir, sample.id);
          SegMap map = read_segmap_file(
              labels, std::filesystem::exists(conf) ? std::optional(conf) : std::nullopt);
          validate_segmap(map, vocab);
          return map;
        } else {
          mode.noise.validate();
          return noisy_prediction(mode.noise, sample, vocab);
        }
      },
      cfg);
}

std::string_view to_string(SegOutcome s) {
  switch (s) {
    case SegOutcome::kExact:
      return "ExactSeg";
    case SegOutcome::kIncomplete:
      return "IncompleteSeg";
    case SegOutcome::kWrong:
      return "WrongSeg";
  }
  return "?";
}

std::string to_string(const FailureCase& fc) {
  return std::string(to_string(fc.segmentation)) + "/" +
         (fc.correct_prediction ? "CorrectPred" : "WrongPred");
}

FailureCase classify_failure(const Sample& gt, const SegMap& predicted, ClassId predicted_label,
                             const AttributeVocabulary& vocab, const VectorizeConfig& cfg) {
  const auto gt_set = vectorize(gt.gt_segmap, vocab, cfg);
  const auto pred_set = vectorize(predicted, vocab, cfg);
  FailureCase fc;
  fc.correct_prediction = predicted_label == gt.label;
  if (gt_set != pred_set) {
    fc.segmentation = SegOutcome::kWrong;
  } else if (regions_of(gt.gt_segmap, gt_set) == regions_of(predicted, pred_set)) {
    fc.segmentation = SegOutcome::kExact;
  } else {
    fc.segmentation = SegOutcome::kIncomplete;
  }
  return fc;
}

}  // namespace greybox
