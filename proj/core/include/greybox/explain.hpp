#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "greybox/classifier.hpp"
#include "greybox/dataset.hpp"

namespace greybox {

// Where a field of an explanation came from. Anything not traceable to the
// model, the input vector or the vocabularies is kExternal.
enum class Provenance { kModelWeight, kInputBit, kVocabulary, kExternal };

std::string_view to_string(Provenance p);

struct ExplainedAttribute {
  AttributeId id = 0;
  std::string name;
  std::optional<double> weight;  // weights(predicted_class, id)
  Provenance name_source = Provenance::kVocabulary;
  Provenance weight_source = Provenance::kModelWeight;
  Provenance presence_source = Provenance::kInputBit;

  bool operator==(const ExplainedAttribute&) const = default;
};

struct Explanation {
  std::string sample_id;
  ClassId predicted_class = 0;
  std::string predicted_name;
  Provenance class_source = Provenance::kVocabulary;
  // Present attributes, by descending |weight| then ascending id.
  std::vector<ExplainedAttribute> attributes;
  std::string text;
  std::optional<std::string> segmap_ref;

  bool degenerate() const noexcept { return attributes.empty(); }
  bool operator==(const Explanation&) const = default;
};

// Weights appear in text with this many decimals; audits use stored values.
inline constexpr int kExplanationWeightDigits = 4;

// Sentence for the fields of `e` (its `text` member is ignored).
std::string render_explanation(const Explanation& e);

Explanation explain(const LogRegModel& model, const AttributeVector& z, std::string sample_id);

// Names at least one vocabulary symbol and quotes at least one weight.
bool audit_objectivity(const Explanation& e);

// Every field traces back to the model, the input bits or the vocabularies:
// quoted weights equal the stored weights exactly, named attributes are set
// in z, the class is the model's prediction and the text is the rendering
// of those fields.
bool audit_intrinsicality(const Explanation& e, const LogRegModel& model, const AttributeVector& z);

struct CompletenessSummary {
  std::size_t attribute_count = 0;
  double weight_mass = 0.0;  // sum of |weight| over listed attributes
};

CompletenessSummary summarize_completeness(const Explanation& e);

struct CounterfactualResult {
  std::vector<AttributeId> flips;  // toggled attributes, ascending
  AttributeVector flipped;
  ClassId original_class = 0;
  ClassId new_class = 0;
  double old_prob = 0.0;  // P(original_class | z)
  double new_prob = 0.0;  // P(original_class | flipped)
  std::vector<double> probabilities;  // full distribution for `flipped`

  bool operator==(const CounterfactualResult&) const = default;
};

inline constexpr std::size_t kCounterfactualAttributeBound = 24;

// Every smallest set of bit flips (up to max_flips) that changes the argmax
// class, ordered by cardinality then lexicographically. Empty when no such
// set exists within the budget. Throws ValidationError when the model has
// more than `attribute_bound` attributes or max_flips < 1.
std::vector<CounterfactualResult> counterfactual_scan(const LogRegModel& model, const AttributeVector& z,
                                                      std::size_t max_flips,
                                                      std::size_t attribute_bound = kCounterfactualAttributeBound);

struct SelfExplainingConfig {
  std::size_t simulatability_bound = 24;  // max attributes a person is expected to follow
  std::size_t samples = 100;
  std::uint64_t seed = 0;
  double tolerance = 1e-12;
};

struct SelfExplainingReport {
  bool additive = false;
  bool monotone = false;
  bool simulatable = false;
  double max_deviation = 0.0;

  bool ok() const noexcept { return additive && monotone && simulatable; }
};

SelfExplainingReport check_self_explaining(const LogRegModel& model, const SelfExplainingConfig& cfg = {});
bool audit_self_explaining(const LogRegModel& model, const SelfExplainingConfig& cfg = {});

struct ExplanationAudit {
  bool objective = false;
  bool intrinsic = false;
  std::optional<bool> valid;  // filled by the knowledge-graph audit when an expert KB is given
  bool self_explaining = false;
};

}  // namespace greybox
