#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <variant>

#include "greybox/dataset.hpp"

namespace greybox {

struct NoiseConfig {
  double p_drop_instance = 0.0;   // one box erased, others of the attribute kept
  double p_drop_attribute = 0.0;  // every box of an attribute erased
  double p_spurious = 0.0;        // an absent attribute painted as one region
  // Never let instance drops erase the last box of an attribute.
  bool keep_last_instance = false;
  // Minimum area of an injected region. Raised to the vectorizer's
  // min_pixels by the pipeline so injected regions are always detected.
  int spurious_min_pixels = 1;
  std::uint64_t seed = 0;

  void validate() const;
};

struct OraclePredictor {};

// Reads <dir>/<sample_id>.seg and, when present, <dir>/<sample_id>.conf.
struct FilePredictor {
  std::filesystem::path dir;
};

struct NoisyPredictor {
  NoiseConfig noise;
};

using PredictorConfig = std::variant<OraclePredictor, FilePredictor, NoisyPredictor>;

std::filesystem::path prediction_labels_path(const std::filesystem::path& dir, std::string_view sample_id);
std::filesystem::path prediction_confidence_path(const std::filesystem::path& dir,
                                                 std::string_view sample_id);

// Oracle: the ground-truth map. File: the stored prediction. Noisy: ground
// truth after instance drops, then attribute drops, then spurious injections,
// drawn from a stream seeded by (noise.seed, sample id).
SegMap predict_segmap(const PredictorConfig& cfg, const Sample& sample,
                      const AttributeVocabulary& vocab);

void validate_predictor(const PredictorConfig& cfg);

enum class SegOutcome { kExact, kIncomplete, kWrong };

struct FailureCase {
  SegOutcome segmentation = SegOutcome::kExact;
  bool correct_prediction = true;

  auto operator<=>(const FailureCase&) const = default;
};

// "ExactSeg/CorrectPred" style label.
std::string to_string(const FailureCase& fc);
std::string_view to_string(SegOutcome s);

// Wrong when the detected attribute sets differ; Exact when the sets and the
// per-attribute region counts (4-connected) agree; otherwise Incomplete.
FailureCase classify_failure(const Sample& gt, const SegMap& predicted, ClassId predicted_label,
                             const AttributeVocabulary& vocab, const VectorizeConfig& cfg = {});

}  // namespace greybox
