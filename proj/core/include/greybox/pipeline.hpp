#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "greybox/classifier.hpp"
#include "greybox/dataset.hpp"
#include "greybox/explain.hpp"
#include "greybox/kb.hpp"
#include "greybox/kg.hpp"
#include "greybox/lsp.hpp"

namespace greybox {

struct InferenceResult {
  ClassId prediction = 0;
  Explanation explanation;
  SegMap segmap;
  AttributeVector vector;
};

// predict_segmap -> vectorize -> predict -> explain.
InferenceResult run_inference(const Sample& sample, const PredictorConfig& predictor,
                              const LogRegModel& model, const VectorizeConfig& vect = {});

struct EvalOptions {
  std::size_t counterfactual_flips = 0;  // 0 skips the counterfactual scan
  const KnowledgeBase* expert_kb = nullptr;
  double epsilon = kDefaultEdgeEpsilon;
  SelfExplainingConfig self_explaining;
};

struct SampleRecord {
  std::string sample_id;
  ClassId truth = 0;
  ClassId predicted = 0;
  FailureCase failure;
  AttributeVector vector;
  std::optional<Explanation> explanation;  // logistic regression only
  ExplanationAudit audit;
  std::vector<CounterfactualResult> counterfactuals;
};

struct EvalReport {
  ClassVocabulary classes;
  AttributeVocabulary attributes;
  std::string model_kind;
  double accuracy = 0.0;
  std::vector<std::vector<std::size_t>> confusion;  // [truth][predicted]
  std::map<FailureCase, std::size_t> failure_counts;
  std::vector<SampleRecord> per_sample;  // ordered by sample id
  std::optional<ValidityResult> validity;
};

// Runs inference on every sample, classifies failures against ground truth
// and aggregates. Output order follows sample ids, not evaluation order.
EvalReport evaluate(const TripleDataset& ds, const PredictorConfig& predictor, const LogRegModel& model,
                    const VectorizeConfig& vect = {}, const EvalOptions& options = {});

// Same harness for the naive Bayes baseline; no explanations are produced.
EvalReport evaluate(const TripleDataset& ds, const PredictorConfig& predictor, const NaiveBayesModel& model,
                    const VectorizeConfig& vect = {});

// Human-readable summary: accuracy, confusion matrix, failure taxonomy,
// validity and audit totals.
void write_report_text(std::ostream& out, const EvalReport& report);

// One JSON object per line: a summary record, then one record per sample
// with fixed key order.
void write_report_records(std::ostream& out, const EvalReport& report);

}  // namespace greybox
