#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "greybox/dataset.hpp"

namespace greybox {

// Dense row-major matrix.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Multinomial logistic regression over attribute vectors. weights(k, j) is
// the weight of attribute id j + 1 for class k. The intercept is optional and
// off by default.
struct LogRegModel {
  AttributeVocabulary attributes;
  ClassVocabulary classes;
  Matrix weights;
  std::optional<std::vector<double>> bias;
  double l2_penalty = 0.0;

  static LogRegModel zeros(AttributeVocabulary attributes, ClassVocabulary classes,
                           bool with_bias = false, double l2_penalty = 0.0);

  std::size_t num_classes() const noexcept { return weights.rows(); }
  std::size_t num_attributes() const noexcept { return weights.cols(); }
  double weight(ClassId k, AttributeId a) const {
    return weights(static_cast<std::size_t>(k), static_cast<std::size_t>(a - 1));
  }

  // Shape and finiteness checks.
  void validate() const;
  bool operator==(const LogRegModel&) const = default;
};

struct LogRegGradient {
  Matrix weights;
  std::vector<double> bias;  // empty when the model has no intercept
};

struct TrainConfig {
  double learning_rate = 0.5;
  int max_epochs = 5000;
  double loss_tolerance = 1e-9;
  double l2_penalty = 1e-4;
  bool fit_bias = false;
  std::uint64_t seed = 0;  // unused by full-batch descent

  void validate() const;
};

struct TrainTrace {
  int epochs = 0;
  double initial_loss = 0.0;
  double final_loss = 0.0;
  std::vector<double> losses;  // total loss after each epoch
};

// Numerically stable (max-shifted) softmax.
std::vector<double> softmax(std::span<const double> scores);

double sigmoid(double t);

// Binary logistic model: 1 / (1 + exp(-theta . z)).
double sigmoid_predict(std::span<const double> theta, const AttributeVector& z);

// Index of the largest entry; the lowest index wins ties.
std::size_t argmax(std::span<const double> values);

// theta z (+ bias).
std::vector<double> score_linear(const LogRegModel& model, const AttributeVector& z);

// Per-attribute terms weights(k, j) * z_j of class k's score (bias excluded).
std::vector<double> score_contributions(const LogRegModel& model, const AttributeVector& z,
                                        ClassId k);

std::vector<double> predict_proba(const LogRegModel& model, const AttributeVector& z);
ClassId predict(const LogRegModel& model, const AttributeVector& z);

// Summed negative log-likelihood of the true classes plus
// l2_penalty * ||weights||^2 (the intercept is not penalized).
double loss(const LogRegModel& model, std::span<const AttributeVector> X, std::span<const ClassId> y);

// Exact gradient of loss().
LogRegGradient gradient(const LogRegModel& model, std::span<const AttributeVector> X,
                        std::span<const ClassId> y);

// Full-batch gradient descent from zero weights on loss() / |X|. Stops after
// max_epochs or once an epoch lowers the mean loss by less than
// loss_tolerance. Returns the lowest-loss iterate. Plain descent is
// monotone when learning_rate * max_i |z_i|^2 <= 4 (|z_i| counts the
// intercept column); the 0.5 default covers vectors of up to 8 active entries.
//
// Throws ValidationError if a class has no training sample, NumericError if
// the loss rises for 10 consecutive epochs or becomes non-finite.
LogRegModel train_logreg(const AttributeVocabulary& attributes, const ClassVocabulary& classes,
                         std::span<const AttributeVector> X, std::span<const ClassId> y,
                         const TrainConfig& cfg = {}, TrainTrace* trace = nullptr);

double accuracy(std::span<const ClassId> predicted, std::span<const ClassId> truth);

// Bernoulli naive Bayes with Laplace smoothing.
struct NaiveBayesModel {
  AttributeVocabulary attributes;
  ClassVocabulary classes;
  double alpha = 1.0;
  std::vector<double> log_prior;
  Matrix log_present;  // log P(bit = 1 | class)
  Matrix log_absent;   // log P(bit = 0 | class)

  bool operator==(const NaiveBayesModel&) const = default;
};

NaiveBayesModel train_nb(const AttributeVocabulary& attributes, const ClassVocabulary& classes,
                         std::span<const AttributeVector> X, std::span<const ClassId> y,
                         double alpha = 1.0);

// Unnormalized log joint log P(class) + sum_j log P(z_j | class), per class.
std::vector<double> nb_log_joint(const NaiveBayesModel& model, const AttributeVector& z);
std::vector<double> nb_posterior(const NaiveBayesModel& model, const AttributeVector& z);
ClassId predict_nb(const NaiveBayesModel& model, const AttributeVector& z);

// Versioned text formats; floats are written in shortest round-trip form so
// that load followed by save reproduces the file byte for byte.
void write_logreg(std::ostream& out, const LogRegModel& model);
LogRegModel parse_logreg(std::istream& in, const std::string& source = "<model>");
void write_nb(std::ostream& out, const NaiveBayesModel& model);
NaiveBayesModel parse_nb(std::istream& in, const std::string& source = "<model>");

void save_logreg(const std::filesystem::path& path, const LogRegModel& model);
LogRegModel load_logreg(const std::filesystem::path& path);
void save_nb(const std::filesystem::path& path, const NaiveBayesModel& model);
NaiveBayesModel load_nb(const std::filesystem::path& path);

enum class ModelKind { kLogReg, kNaiveBayes };

// Reads only the header line.
ModelKind detect_model_kind(const std::filesystem::path& path);

}  // namespace greybox
