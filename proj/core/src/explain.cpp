#include "greybox/explain.hpp"

#include <cmath>

#include "greybox/random.hpp"
#include "greybox/text.hpp"

namespace greybox {

namespace {

std::string join_list(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i > 0) out += (i + 1 == items.size()) ? " and " : ", ";
    out += items[i];
  }
  return out;
}

bool allowed(Provenance p) { return p != Provenance::kExternal; }

// Advances `idx` to the next k-combination of {0..n-1} in lexicographic order.
bool next_combination(std::vector<std::size_t>& idx, std::size_t n) {
  const std::size_t k = idx.size();
  for (std::size_t i = k; i-- > 0;) {
    if (idx[i] < n - k + i) {
      ++idx[i];
      for (std::size_t j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
      return true;
    }
  }
  return false;
}

double sum_terms(std::span<const double> terms, double offset) {
  double s = 0.0;
  for (double t : terms) s += t;
  return s + offset;
}

}  // namespace

std::string_view to_string(Provenance p) {
  switch (p) {
    case Provenance::kModelWeight:
      return "model-weight";
    case Provenance::kInputBit:
      return "input-bit";
    case Provenance::kVocabulary:
      return "vocabulary";
    case Provenance::kExternal:
      return "external";
  }
  return "?";
}

std::string render_explanation(const Explanation& e) {
  const std::string head = "Image " + e.sample_id + " represents a " + e.predicted_name;
  if (e.attributes.empty()) {
    return head + " but no attributes were detected, so no attribute supports class " +
           e.predicted_name + ".";
  }
  std::vector<std::string> names;
  std::vector<std::string> weights;
  for (const auto& a : e.attributes) {
    names.push_back(a.name);
    weights.push_back(a.weight ? text::format_fixed(*a.weight, kExplanationWeightDigits) : "?");
  }
  if (names.size() == 1) {
    return head + " because attribute " + names[0] +
           " is present, and the classifier leads this attribute with weight " + weights[0] +
           " to class " + e.predicted_name + ".";
  }
  return head + " because attributes " + join_list(names) +
         " are present, and the classifier leads those attributes respectively with weights " +
         join_list(weights) + " to class " + e.predicted_name + ".";
}

Explanation explain(const LogRegModel& model, const AttributeVector& z, std::string sample_id) {
  Explanation e;
  e.sample_id = std::move(sample_id);
  e.predicted_class = predict(model, z);
  e.predicted_name = model.classes.name(e.predicted_class);
  for (AttributeId id : z.ids()) {
    ExplainedAttribute a;
    a.id = id;
    a.name = model.attributes.name(id);
    a.weight = model.weight(e.predicted_class, id);
    e.attributes.push_back(std::move(a));
  }
  std::stable_sort(e.attributes.begin(), e.attributes.end(),
                   [](const ExplainedAttribute& l, const ExplainedAttribute& r) {
                     return std::fabs(*l.weight) > std::fabs(*r.weight);
                   });
  e.text = render_explanation(e);
  return e;
}

bool audit_objectivity(const Explanation& e) {
  bool symbol = false;
  bool relationship = false;
  for (const auto& a : e.attributes) {
    if (!a.name.empty() && a.name_source == Provenance::kVocabulary) symbol = true;
    if (a.weight && std::isfinite(*a.weight)) relationship = true;
  }
  return symbol && relationship;
}

bool audit_intrinsicality(const Explanation& e, const LogRegModel& model, const AttributeVector& z) {
  if (z.size() != model.num_attributes()) return false;
  if (!allowed(e.class_source)) return false;
  if (!model.classes.contains(e.predicted_class)) return false;
  if (e.predicted_class != predict(model, z)) return false;
  if (e.predicted_name != model.classes.name(e.predicted_class)) return false;
  for (const auto& a : e.attributes) {
    if (!allowed(a.name_source) || !allowed(a.weight_source) || !allowed(a.presence_source)) {
      return false;
    }
    if (!model.attributes.contains(a.id)) return false;
    if (a.name != model.attributes.name(a.id)) return false;
    if (!z.test(static_cast<std::size_t>(a.id - 1))) return false;
    if (a.weight && *a.weight != model.weight(e.predicted_class, a.id)) return false;
  }
  return e.text == render_explanation(e);
}

CompletenessSummary summarize_completeness(const Explanation& e) {
  CompletenessSummary s;
  s.attribute_count = e.attributes.size();
  for (const auto& a : e.attributes) {
    if (a.weight) s.weight_mass += std::fabs(*a.weight);
  }
  return s;
}

std::vector<CounterfactualResult> counterfactual_scan(const LogRegModel& model, const AttributeVector& z,
                                                      std::size_t max_flips, std::size_t attribute_bound) {
  const std::size_t n = model.num_attributes();
  if (n > attribute_bound) {
    throw ValidationError("exhaustive counterfactual search supports at most " +
                          std::to_string(attribute_bound) + " attributes; model has " + std::to_string(n));
  }
  if (max_flips < 1) throw ValidationError("max_flips must be >= 1");
  if (z.size() != n) throw ValidationError("attribute vector length does not match the model");

  const auto base_probs = predict_proba(model, z);
  const auto original = static_cast<ClassId>(argmax(base_probs));

  std::vector<CounterfactualResult> results;
  for (std::size_t card = 1; card <= std::min(max_flips, n); ++card) {
    std::vector<std::size_t> idx(card);
    for (std::size_t i = 0; i < card; ++i) idx[i] = i;
    do {
      AttributeVector flipped = z;
      for (std::size_t j : idx) flipped.flip(j);
      // exp(theta_k . z') / sum_j exp(theta_j . z') on the flipped vector.
      auto probs = softmax(score_linear(model, flipped));
      const auto cls = static_cast<ClassId>(argmax(probs));
      if (cls == original) continue;

      CounterfactualResult r;
      for (std::size_t j : idx) r.flips.push_back(static_cast<AttributeId>(j + 1));
      r.flipped = std::move(flipped);
      r.original_class = original;
      r.new_class = cls;
      r.old_prob = base_probs[static_cast<std::size_t>(original)];
      r.new_prob = probs[static_cast<std::size_t>(original)];
      r.probabilities = std::move(probs);
      results.push_back(std::move(r));
    } while (next_combination(idx, n));
    if (!results.empty()) break;
  }
  return results;
}

SelfExplainingReport check_self_explaining(const LogRegModel& model, const SelfExplainingConfig& cfg) {
  SelfExplainingReport report;
  report.simulatable = model.num_attributes() <= cfg.simulatability_bound;
  report.additive = true;
  report.monotone = true;

  Rng rng(cfg.seed);
  const std::size_t n = model.num_attributes();
  for (std::size_t s = 0; s < cfg.samples; ++s) {
    AttributeVector z(n);
    for (std::size_t j = 0; j < n; ++j) z.set(j, rng.bernoulli(0.5));
    const auto scores = score_linear(model, z);
    for (std::size_t k = 0; k < model.num_classes(); ++k) {
      const auto cls = static_cast<ClassId>(k);
      auto terms = score_contributions(model, z, cls);
      const double offset = model.bias ? (*model.bias)[k] : 0.0;
      const double total = sum_terms(terms, offset);
      const double dev = std::fabs(total - scores[k]);
      report.max_deviation = std::max(report.max_deviation, dev);
      if (!(dev <= cfg.tolerance)) report.additive = false;

      if (n == 0) continue;
      const auto j = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(n) - 1));
      const double delta = 0.5 + rng.uniform01();
      terms[j] += delta;
      if (!(sum_terms(terms, offset) >= total)) report.monotone = false;
    }
  }
  return report;
}

bool audit_self_explaining(const LogRegModel& model, const SelfExplainingConfig& cfg) {
  return check_self_explaining(model, cfg).ok();
}

}  // namespace greybox
