#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "../support/fixtures.hpp"
#include "../support/oracles.hpp"
#include "greybox/explain.hpp"
#include "greybox/kb.hpp"
#include "greybox/synth.hpp"

namespace greybox {
namespace {

LogRegModel trained_monumai() {
  const auto ds = synth_generate(testing::monumai_kb(), 20, {}, 4);
  return train_logreg(ds.attributes, ds.classes, ground_truth_vectors(ds), labels_of(ds));
}

AttributeVector by_names(const LogRegModel& m, std::initializer_list<const char*> names) {
  AttributeVector z(m.num_attributes());
  for (const char* n : names) z.set(static_cast<std::size_t>(*m.attributes.find(n) - 1));
  return z;
}

TEST(Explain, GothicExclusiveAttributes) {
  const auto m = trained_monumai();
  const auto z = by_names(m, {"Trefoil Arch", "Pointed Arch", "Ogee Arch"});
  const auto e = explain(m, z, "img-7");
  EXPECT_EQ(e.predicted_name, "Gothic Monument");
  EXPECT_EQ(e.text.rfind("Image img-7 represents a Gothic Monument because attributes ", 0), 0u);
  for (const char* n : {"Trefoil Arch", "Pointed Arch", "Ogee Arch"}) {
    EXPECT_NE(e.text.find(n), std::string::npos);
  }
  EXPECT_NE(e.text.find("are present, and the classifier leads those attributes respectively with weights "),
            std::string::npos);
  EXPECT_TRUE(e.text.ends_with(" to class Gothic Monument."));
  for (std::size_t i = 1; i < e.attributes.size(); ++i) {
    EXPECT_GE(std::fabs(*e.attributes[i - 1].weight), std::fabs(*e.attributes[i].weight));
  }
  EXPECT_TRUE(audit_objectivity(e));
  EXPECT_TRUE(audit_intrinsicality(e, m, z));
}

TEST(Explain, QuotedWeightsComeFromTheModel) {
  const auto m = testing::quoted_weights_model();
  const auto z = by_names(m, {"Rounded Arch", "Porthole Arch", "Lintelled Doorway Arch"});
  const auto e = explain(m, z, "x");
  EXPECT_EQ(e.text,
            "Image x represents a Baroque Monument because attributes Rounded Arch, Porthole Arch and "
            "Lintelled Doorway Arch are present, and the classifier leads those attributes respectively with "
            "weights 0.1300, 0.1000 and 0.0700 to class Baroque Monument.");
  for (const auto& a : e.attributes) EXPECT_EQ(*a.weight, m.weight(e.predicted_class, a.id));
}

TEST(Explain, SingleAttributeWording) {
  const auto m = testing::quoted_weights_model();
  const auto e = explain(m, by_names(m, {"Serliana"}), "y");
  EXPECT_EQ(e.text,
            "Image y represents a Renaissance Monument because attribute Serliana is present, and the "
            "classifier leads this attribute with weight 0.1400 to class Renaissance Monument.");
}

TEST(Explain, AllZeroVectorIsDegenerate) {
  const auto m = trained_monumai();
  const AttributeVector z(m.num_attributes());
  const auto e = explain(m, z, "empty");
  EXPECT_TRUE(e.degenerate());
  EXPECT_EQ(e.predicted_class, predict(m, z));
  EXPECT_NE(e.text.find("no attributes were detected"), std::string::npos);
  EXPECT_FALSE(audit_objectivity(e));
  EXPECT_TRUE(audit_intrinsicality(e, m, z));

  const auto zero = LogRegModel::zeros(testing::generic_attributes(3), testing::generic_classes(3));
  EXPECT_EQ(explain(zero, AttributeVector(3), "z").predicted_class, 0);
}

TEST(Audits, TamperingIsDetected) {
  const auto m = trained_monumai();
  const auto z = by_names(m, {"Rounded Arch", "Serliana"});
  const auto e = explain(m, z, "t");

  auto stripped = e;
  for (auto& a : stripped.attributes) a.weight.reset();
  EXPECT_FALSE(audit_objectivity(stripped));

  auto weight = e;
  weight.attributes[0].weight = *weight.attributes[0].weight + 1e-9;
  weight.text = render_explanation(weight);
  EXPECT_FALSE(audit_intrinsicality(weight, m, z));

  auto added = e;
  ExplainedAttribute extra;
  extra.id = *m.attributes.find("Flat Arch");
  extra.name = "Flat Arch";
  extra.weight = m.weight(e.predicted_class, extra.id);
  added.attributes.push_back(extra);
  added.text = render_explanation(added);
  EXPECT_FALSE(audit_intrinsicality(added, m, z));

  auto external = e;
  external.attributes[0].weight_source = Provenance::kExternal;
  EXPECT_FALSE(audit_intrinsicality(external, m, z));

  auto text = e;
  text.text += " Trust me.";
  EXPECT_FALSE(audit_intrinsicality(text, m, z));

  auto cls = e;
  cls.predicted_class = (e.predicted_class + 1) % 4;
  cls.predicted_name = m.classes.name(cls.predicted_class);
  cls.text = render_explanation(cls);
  EXPECT_FALSE(audit_intrinsicality(cls, m, z));
}

TEST(Completeness, CountsAndMass) {
  const auto m = testing::quoted_weights_model();
  const auto e = explain(m, by_names(m, {"Rounded Arch", "Porthole Arch", "Lintelled Doorway Arch"}), "x");
  const auto c = summarize_completeness(e);
  EXPECT_EQ(c.attribute_count, 3u);
  EXPECT_NEAR(c.weight_mass, 0.30, 1e-15);
}

TEST(Counterfactual, IdentityWeights) {
  auto m = LogRegModel::zeros(testing::generic_attributes(2), testing::generic_classes(2));
  m.weights(0, 0) = 1.0;
  m.weights(1, 1) = 1.0;
  const auto z = AttributeVector::from_ids(2, {1});
  const auto results = counterfactual_scan(m, z, 2);
  ASSERT_EQ(results.size(), 1u);
  EXPECT_EQ(results[0].flips, (std::vector<AttributeId>{1, 2}));
  EXPECT_EQ(results[0].new_class, 1);
  EXPECT_EQ(results[0].flipped, AttributeVector::from_ids(2, {2}));
  const auto brute = oracle::brute_force_counterfactuals(m, z, 2);
  ASSERT_EQ(brute.size(), 1u);
  EXPECT_EQ(brute[0].flips, results[0].flips);
  EXPECT_TRUE(counterfactual_scan(m, z, 1).empty());
}

TEST(Counterfactual, QuotedWeightsReachRenaissanceThroughSerliana) {
  const auto m = testing::quoted_weights_model();
  const auto z = by_names(m, {"Rounded Arch", "Porthole Arch", "Lintelled Doorway Arch"});
  const ClassId baroque = *m.classes.find("Baroque Monument");
  const ClassId renaissance = *m.classes.find("Renaissance Monument");
  ASSERT_EQ(predict(m, z), baroque);
  const auto results = counterfactual_scan(m, z, 3);
  ASSERT_FALSE(results.empty());
  bool serliana = false;
  for (const auto& r : results) {
    EXPECT_EQ(r.original_class, baroque);
    const auto& f = r.flips;
    if (r.new_class == renaissance &&
        std::find(f.begin(), f.end(), *m.attributes.find("Serliana")) != f.end()) {
      serliana = true;
    }
    EXPECT_LT(r.new_prob, r.old_prob);
  }
  EXPECT_TRUE(serliana);
  const auto brute = oracle::brute_force_counterfactuals(m, z, 3);
  ASSERT_EQ(brute.size(), results.size());
  for (std::size_t i = 0; i < brute.size(); ++i) {
    EXPECT_EQ(brute[i].flips, results[i].flips);
    EXPECT_EQ(brute[i].new_class, results[i].new_class);
  }
}

TEST(Counterfactual, MatchesBruteForceOnRandomModels) {
  std::mt19937_64 gen(31);
  for (int trial = 0; trial < 150; ++trial) {
    const std::size_t n = 2 + gen() % 9;
    const auto m = testing::random_model(gen, n, 2 + gen() % 3, trial % 4 == 0);
    const auto z = testing::random_vector(gen, n);
    const std::size_t budget = 1 + gen() % n;
    const auto results = counterfactual_scan(m, z, budget);
    const auto brute = oracle::brute_force_counterfactuals(m, z, budget);
    ASSERT_EQ(results.size(), brute.size()) << trial;
    for (std::size_t i = 0; i < brute.size(); ++i) {
      ASSERT_EQ(results[i].flips, brute[i].flips);
      ASSERT_EQ(results[i].new_class, brute[i].new_class);
      ASSERT_EQ(predict(m, results[i].flipped), results[i].new_class);
      const auto p = predict_proba(m, results[i].flipped);
      for (std::size_t k = 0; k < p.size(); ++k) ASSERT_NEAR(p[k], results[i].probabilities[k], 1e-12);
    }
  }
}

TEST(Counterfactual, Errors) {
  const auto m = LogRegModel::zeros(testing::generic_attributes(25), testing::generic_classes(2));
  EXPECT_THROW(counterfactual_scan(m, AttributeVector(25), 1), ValidationError);
  const auto small = LogRegModel::zeros(testing::generic_attributes(3), testing::generic_classes(2));
  EXPECT_THROW(counterfactual_scan(small, AttributeVector(3), 0), ValidationError);
  EXPECT_THROW(counterfactual_scan(small, AttributeVector(2), 1), ValidationError);
}

TEST(SelfExplaining, LinearModelsPassWithinBound) {
  const auto m = trained_monumai();
  const auto report = check_self_explaining(m);
  EXPECT_TRUE(report.ok());
  EXPECT_LT(report.max_deviation, 1e-12);
  EXPECT_TRUE(audit_self_explaining(m));

  SelfExplainingConfig strict;
  strict.simulatability_bound = 10;
  EXPECT_FALSE(audit_self_explaining(m, strict));
}

TEST(SelfExplaining, DecompositionMatchesIndependentSums) {
  std::mt19937_64 gen(8);
  const auto m = testing::random_model(gen, 15, 4, true);
  for (int t = 0; t < 100; ++t) {
    const auto z = testing::random_vector(gen, 15);
    const auto s = oracle::scores(m, oracle::bits_of(z));
    const auto lin = score_linear(m, z);
    for (std::size_t k = 0; k < 4; ++k) ASSERT_LT(std::fabs(s[k] - lin[k]), 1e-12);
  }
  EXPECT_TRUE(audit_self_explaining(m));
}

}  // namespace
}  // namespace greybox
