#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "greybox/classifier.hpp"
#include "greybox/kb.hpp"

namespace greybox::testing {

inline std::filesystem::path data_dir() { return GREYBOX_DATA_DIR; }
inline std::filesystem::path fixture_dir() { return GREYBOX_FIXTURE_DIR; }

inline KnowledgeBase monumai_kb() { return load_kb(data_dir() / "monumai_expert_kb.txt"); }

inline LogRegModel quoted_weights_model() {
  return load_logreg(fixture_dir() / "monumai_quoted_weights.model");
}

// Vocabulary of n generic names: "a1".."an" or "c0".."c(n-1)".
inline AttributeVocabulary generic_attributes(std::size_t n) {
  std::vector<std::string> names;
  for (std::size_t i = 1; i <= n; ++i) names.push_back("a" + std::to_string(i));
  return AttributeVocabulary::from_names(names);
}

inline ClassVocabulary generic_classes(std::size_t n) {
  std::vector<std::string> names;
  for (std::size_t i = 0; i < n; ++i) names.push_back("c" + std::to_string(i));
  return ClassVocabulary::from_names(names);
}

inline LogRegModel random_model(std::mt19937_64& gen, std::size_t n_attr, std::size_t n_classes,
                                bool bias = false, double scale = 1.0) {
  std::normal_distribution<double> dist(0.0, scale);
  auto m = LogRegModel::zeros(generic_attributes(n_attr), generic_classes(n_classes), bias);
  for (double& w : m.weights.data()) w = dist(gen);
  if (m.bias) {
    for (double& b : *m.bias) b = dist(gen);
  }
  return m;
}

inline AttributeVector random_vector(std::mt19937_64& gen, std::size_t n) {
  AttributeVector z(n);
  for (std::size_t j = 0; j < n; ++j) z.set(j, (gen() & 1U) != 0);
  return z;
}

}  // namespace greybox::testing
