#include "greybox/pipeline.hpp"

#include <algorithm>
#include <ostream>

#include <json.hpp>

#include "greybox/text.hpp"

namespace greybox {

namespace {

using Json = nlohmann::ordered_json;

PredictorConfig with_spurious_floor(PredictorConfig predictor, const VectorizeConfig& vect) {
  if (auto* noisy = std::get_if<NoisyPredictor>(&predictor)) {
    noisy->noise.spurious_min_pixels = std::max(noisy->noise.spurious_min_pixels, vect.min_pixels);
  }
  return predictor;
}

EvalReport evaluate_with(const TripleDataset& ds, const PredictorConfig& predictor,
                         const VectorizeConfig& vect,
                         const std::function<void(const Sample&, SampleRecord&)>& classify) {
  vect.validate();
  validate_predictor(predictor);
  const auto effective = with_spurious_floor(predictor, vect);

  std::vector<const Sample*> order;
  for (const auto& s : ds.samples) order.push_back(&s);
  std::sort(order.begin(), order.end(), [](const Sample* a, const Sample* b) { return a->id < b->id; });

  EvalReport report;
  report.classes = ds.classes;
  report.attributes = ds.attributes;
  const auto k = ds.classes.size();
  report.confusion.assign(k, std::vector<std::size_t>(k, 0));
  std::size_t hits = 0;
  for (const Sample* s : order) {
    SampleRecord rec;
    rec.sample_id = s->id;
    rec.truth = s->label;
    const SegMap map = predict_segmap(effective, *s, ds.attributes);
    rec.vector = vectorize(map, ds.attributes, vect);
    classify(*s, rec);
    rec.failure = classify_failure(*s, map, rec.predicted, ds.attributes, vect);
    ++report.confusion[static_cast<std::size_t>(rec.truth)][static_cast<std::size_t>(rec.predicted)];
    ++report.failure_counts[rec.failure];
    hits += rec.truth == rec.predicted ? 1 : 0;
    report.per_sample.push_back(std::move(rec));
  }
  report.accuracy = order.empty() ? 0.0 : static_cast<double>(hits) / static_cast<double>(order.size());
  return report;
}

Json attribute_list(const Explanation& e) {
  Json list = Json::array();
  for (const auto& a : e.attributes) {
    Json item;
    item["name"] = a.name;
    item["weight"] = a.weight ? Json(*a.weight) : Json(nullptr);
    list.push_back(std::move(item));
  }
  return list;
}

Json flips_json(const CounterfactualResult& r, const AttributeVocabulary& attributes, const AttributeVector& z) {
  Json flips = Json::array();
  for (AttributeId id : r.flips) {
    const bool was_on = z.test(static_cast<std::size_t>(id - 1));
    flips.push_back((was_on ? "-" : "+") + attributes.name(id));
  }
  return flips;
}

}  // namespace

InferenceResult run_inference(const Sample& sample, const PredictorConfig& predictor,
                              const LogRegModel& model, const VectorizeConfig& vect) {
  vect.validate();
  InferenceResult r;
  r.segmap = predict_segmap(with_spurious_floor(predictor, vect), sample, model.attributes);
  r.vector = vectorize(r.segmap, model.attributes, vect);
  r.prediction = predict(model, r.vector);
  r.explanation = explain(model, r.vector, sample.id);
  return r;
}

EvalReport evaluate(const TripleDataset& ds, const PredictorConfig& predictor, const LogRegModel& model,
                    const VectorizeConfig& vect, const EvalOptions& options) {
  if (model.attributes != ds.attributes || model.classes != ds.classes) {
    throw ValidationError("model vocabularies do not match the dataset");
  }
  const bool self_explaining = audit_self_explaining(model, options.self_explaining);
  std::optional<ValidityResult> validity;
  if (options.expert_kb) validity = audit_validity(model, *options.expert_kb, options.epsilon);

  auto report = evaluate_with(ds, predictor, vect, [&](const Sample& s, SampleRecord& rec) {
    rec.predicted = predict(model, rec.vector);
    rec.explanation = explain(model, rec.vector, s.id);
    rec.audit.objective = audit_objectivity(*rec.explanation);
    rec.audit.intrinsic = audit_intrinsicality(*rec.explanation, model, rec.vector);
    rec.audit.self_explaining = self_explaining;
    if (validity) rec.audit.valid = validity->valid;
    if (options.counterfactual_flips > 0) {
      rec.counterfactuals = counterfactual_scan(model, rec.vector, options.counterfactual_flips);
    }
  });
  report.model_kind = "logreg";
  report.validity = std::move(validity);
  return report;
}

EvalReport evaluate(const TripleDataset& ds, const PredictorConfig& predictor, const NaiveBayesModel& model,
                    const VectorizeConfig& vect) {
  if (model.attributes != ds.attributes || model.classes != ds.classes) {
    throw ValidationError("model vocabularies do not match the dataset");
  }
  auto report = evaluate_with(ds, predictor, vect, [&](const Sample&, SampleRecord& rec) {
    rec.predicted = predict_nb(model, rec.vector);
  });
  report.model_kind = "naive-bayes";
  return report;
}

void write_report_text(std::ostream& out, const EvalReport& report) {
  const std::size_t total = report.per_sample.size();
  out << "model: " << report.model_kind << '\n';
  out << "samples: " << total << '\n';
  out << "accuracy: " << text::format_fixed(report.accuracy, 6) << '\n';
  out << "\nconfusion (rows = truth, columns = prediction)\n";
  for (std::size_t t = 0; t < report.confusion.size(); ++t) {
    out << "  [" << t << "] " << report.classes.names()[t] << ':';
    for (auto v : report.confusion[t]) out << ' ' << v;
    out << '\n';
  }
  out << "\nfailure cases\n";
  for (const auto& [fc, n] : report.failure_counts) out << "  " << to_string(fc) << ": " << n << '\n';

  if (report.model_kind == "logreg") {
    std::size_t objective = 0;
    std::size_t intrinsic = 0;
    std::size_t with_cf = 0;
    bool self_explaining = true;
    for (const auto& r : report.per_sample) {
      objective += r.audit.objective ? 1 : 0;
      intrinsic += r.audit.intrinsic ? 1 : 0;
      with_cf += r.counterfactuals.empty() ? 0 : 1;
      self_explaining = self_explaining && r.audit.self_explaining;
    }
    out << "\nexplanation audits\n";
    out << "  objective: " << objective << '/' << total << '\n';
    out << "  intrinsic: " << intrinsic << '/' << total << '\n';
    out << "  self-explaining model: " << (self_explaining ? "yes" : "no") << '\n';
    out << "  samples with a counterfactual: " << with_cf << '/' << total << '\n';
  }
  if (report.validity) {
    out << "\nvalidity against expert knowledge graph\n";
    out << "  valid: " << (report.validity->valid ? "yes" : "no") << '\n';
    out << "  graph edit distance: " << report.validity->ged.distance << '\n';
    for (const auto& op : report.validity->ged.script) out << "    " << to_string(op) << '\n';
  }
}

void write_report_records(std::ostream& out, const EvalReport& report) {
  Json summary;
  summary["record"] = "summary";
  summary["model"] = report.model_kind;
  summary["samples"] = report.per_sample.size();
  summary["accuracy"] = report.accuracy;
  summary["confusion"] = report.confusion;
  Json failures = Json::object();
  for (const auto& [fc, n] : report.failure_counts) failures[to_string(fc)] = n;
  summary["failure_counts"] = std::move(failures);
  if (report.validity) {
    summary["valid"] = report.validity->valid;
    summary["ged"] = report.validity->ged.distance;
  }
  out << summary.dump() << '\n';

  for (const auto& r : report.per_sample) {
    Json rec;
    rec["record"] = "sample";
    rec["sample_id"] = r.sample_id;
    rec["truth"] = report.classes.name(r.truth);
    rec["predicted"] = report.classes.name(r.predicted);
    rec["failure_case"] = to_string(r.failure);
    rec["attributes_detected"] = Json::array();
    for (AttributeId id : r.vector.ids()) rec["attributes_detected"].push_back(report.attributes.name(id));
    if (r.explanation) {
      rec["text"] = r.explanation->text;
      rec["attributes"] = attribute_list(*r.explanation);
      const auto completeness = summarize_completeness(*r.explanation);
      rec["completeness"] = {{"attribute_count", completeness.attribute_count},
                             {"weight_mass", completeness.weight_mass}};
      Json audit;
      audit["objective"] = r.audit.objective;
      audit["intrinsic"] = r.audit.intrinsic;
      audit["valid"] = r.audit.valid ? Json(*r.audit.valid) : Json(nullptr);
      audit["self_explaining"] = r.audit.self_explaining;
      rec["audit"] = std::move(audit);
      Json cfs = Json::array();
      for (const auto& cf : r.counterfactuals) {
        Json c;
        c["flips"] = flips_json(cf, report.attributes, r.vector);
        c["new_class"] = report.classes.name(cf.new_class);
        c["old_prob"] = cf.old_prob;
        c["new_prob"] = cf.new_prob;
        cfs.push_back(std::move(c));
      }
      rec["counterfactuals"] = std::move(cfs);
    }
    out << rec.dump() << '\n';
  }
}

}  // namespace greybox
