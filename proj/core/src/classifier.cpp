#include "greybox/classifier.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <ostream>

#include "greybox/text.hpp"

namespace greybox {

namespace {

constexpr std::string_view kLogRegHeader = "greybox-logreg";
constexpr std::string_view kNaiveBayesHeader = "greybox-naive-bayes";
constexpr int kModelVersion = 1;
constexpr int kDivergencePatience = 10;

void check_dims(const LogRegModel& model, const AttributeVector& z) {
  if (z.size() != model.num_attributes()) {
    throw ValidationError("attribute vector has length " + std::to_string(z.size()) +
                          ", model expects " + std::to_string(model.num_attributes()));
  }
}

void check_batch(std::size_t n_attr, std::span<const AttributeVector> X, std::span<const ClassId> y,
                 std::size_t n_classes) {
  if (X.empty()) throw ValidationError("empty batch");
  if (X.size() != y.size()) throw ValidationError("X and y differ in length");
  for (std::size_t i = 0; i < X.size(); ++i) {
    if (X[i].size() != n_attr) {
      throw ValidationError("sample " + std::to_string(i) + " has " + std::to_string(X[i].size()) +
                            " attributes, expected " + std::to_string(n_attr));
    }
    if (y[i] < 0 || static_cast<std::size_t>(y[i]) >= n_classes) {
      throw ValidationError("label " + std::to_string(y[i]) + " out of range");
    }
  }
}

// log sum exp of the scores, max-shifted.
double log_partition(std::span<const double> scores) {
  const double m = scores[argmax(scores)];
  double s = 0.0;
  for (double v : scores) s += std::exp(v - m);
  return m + std::log(s);
}

double squared_norm(const Matrix& m) {
  double s = 0.0;
  for (double v : m.data()) s += v * v;
  return s;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  return out;
}

void write_vocabularies(std::ostream& out, const AttributeVocabulary& attributes,
                        const ClassVocabulary& classes) {
  for (std::size_t i = 0; i < attributes.size(); ++i) {
    out << "attribute " << (i + 1) << ' ' << text::quote(attributes.names()[i]) << '\n';
  }
  for (std::size_t i = 0; i < classes.size(); ++i) {
    out << "class " << i << ' ' << text::quote(classes.names()[i]) << '\n';
  }
}

void write_row(std::ostream& out, std::span<const double> row) {
  for (double v : row) out << ' ' << text::format_double(v);
  out << '\n';
}

// Shared line reader for the model formats: records keyed by their first token.
struct ModelRecords {
  std::vector<std::pair<int, std::string>> attributes;
  std::vector<std::pair<int, std::string>> classes;
  std::map<std::string, std::pair<std::size_t, std::vector<std::string>>> scalars;
  std::map<std::string, std::map<long long, std::pair<std::size_t, std::vector<double>>>> rows;
};

ModelRecords read_model_records(std::istream& in, const std::string& source, std::string_view header,
                                std::span<const std::string_view> scalar_keys,
                                std::span<const std::string_view> indexed_row_keys) {
  ModelRecords rec;
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    auto body = text::trim(line);
    if (body.empty() || body.front() == '#') continue;
    try {
      auto toks = text::tokenize(body);
      if (!header_seen) {
        if (toks.size() != 2 || toks[0] != header) {
          throw std::invalid_argument("expected '" + std::string(header) + " " +
                                      std::to_string(kModelVersion) + "' header");
        }
        if (text::parse_int(toks[1]) != kModelVersion) {
          throw std::invalid_argument("unsupported model version " + toks[1]);
        }
        header_seen = true;
        continue;
      }
      const auto& key = toks[0];
      if (key == "attribute" || key == "class") {
        if (toks.size() != 3) throw std::invalid_argument("expected '" + key + " <id> \"<name>\"'");
        (key == "attribute" ? rec.attributes : rec.classes)
            .emplace_back(static_cast<int>(text::parse_int(toks[1])), toks[2]);
      } else if (std::find(scalar_keys.begin(), scalar_keys.end(), key) != scalar_keys.end()) {
        if (rec.scalars.contains(key)) throw std::invalid_argument("duplicate '" + key + "' record");
        rec.scalars[key] = {line_no, std::vector<std::string>(toks.begin() + 1, toks.end())};
      } else if (std::find(indexed_row_keys.begin(), indexed_row_keys.end(), key) !=
                 indexed_row_keys.end()) {
        if (toks.size() < 2) throw std::invalid_argument("expected '" + key + " <row> values...'");
        const auto idx = text::parse_int(toks[1]);
        std::vector<double> values;
        for (std::size_t i = 2; i < toks.size(); ++i) values.push_back(text::parse_double(toks[i]));
        if (!rec.rows[key].emplace(idx, std::make_pair(line_no, std::move(values))).second) {
          throw std::invalid_argument("duplicate '" + key + "' row " + toks[1]);
        }
      } else {
        throw std::invalid_argument("unknown record '" + key + "'");
      }
    } catch (const std::invalid_argument& e) {
      throw ParseError(source, line_no, e.what());
    }
  }
  if (!header_seen) throw ParseError(source, line_no + 1, "empty model file");
  return rec;
}

Matrix assemble_rows(const ModelRecords& rec, const std::string& key, std::size_t rows,
                     std::size_t cols, const std::string& source) {
  Matrix m(rows, cols);
  auto it = rec.rows.find(key);
  const std::size_t present = it == rec.rows.end() ? 0 : it->second.size();
  if (present != rows) {
    throw ParseError(source, 0, "expected " + std::to_string(rows) + " '" + key + "' rows, found " +
                                    std::to_string(present));
  }
  for (const auto& [idx, entry] : it->second) {
    const auto& [line_no, values] = entry;
    if (idx < 0 || static_cast<std::size_t>(idx) >= rows) {
      throw ParseError(source, line_no, "row index " + std::to_string(idx) + " out of range");
    }
    if (values.size() != cols) {
      throw ParseError(source, line_no, "row has " + std::to_string(values.size()) +
                                            " values, expected " + std::to_string(cols));
    }
    std::copy(values.begin(), values.end(), m.row(static_cast<std::size_t>(idx)).begin());
  }
  return m;
}

const std::vector<std::string>& scalar(const ModelRecords& rec, const std::string& key,
                                       const std::string& source) {
  auto it = rec.scalars.find(key);
  if (it == rec.scalars.end()) throw ParseError(source, 0, "missing '" + key + "' record");
  return it->second.second;
}

double scalar_double(const ModelRecords& rec, const std::string& key, const std::string& source) {
  const auto& vals = scalar(rec, key, source);
  const auto line_no = rec.scalars.at(key).first;
  if (vals.size() != 1) throw ParseError(source, line_no, "'" + key + "' takes one value");
  try {
    return text::parse_double(vals[0]);
  } catch (const std::invalid_argument& e) {
    throw ParseError(source, line_no, e.what());
  }
}

}  // namespace

// ---------------------------------------------------------------------------

LogRegModel LogRegModel::zeros(AttributeVocabulary attributes, ClassVocabulary classes,
                               bool with_bias, double l2_penalty) {
  LogRegModel m;
  m.weights = Matrix(classes.size(), attributes.size());
  if (with_bias) m.bias = std::vector<double>(classes.size(), 0.0);
  m.attributes = std::move(attributes);
  m.classes = std::move(classes);
  m.l2_penalty = l2_penalty;
  return m;
}

void LogRegModel::validate() const {
  if (weights.rows() != classes.size() || weights.cols() != attributes.size()) {
    throw ValidationError("weight matrix shape does not match vocabularies");
  }
  if (bias && bias->size() != classes.size()) throw ValidationError("bias length mismatch");
  for (double v : weights.data()) {
    if (!std::isfinite(v)) throw ValidationError("non-finite weight");
  }
  if (bias) {
    for (double v : *bias) {
      if (!std::isfinite(v)) throw ValidationError("non-finite bias");
    }
  }
  if (!(l2_penalty >= 0.0)) throw ValidationError("l2_penalty must be non-negative");
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw ValidationError("learning_rate must be positive");
  }
  if (max_epochs < 1) throw ValidationError("max_epochs must be >= 1");
  if (!(loss_tolerance >= 0.0)) throw ValidationError("loss_tolerance must be non-negative");
  if (!(l2_penalty >= 0.0)) throw ValidationError("l2_penalty must be non-negative");
}

std::vector<double> softmax(std::span<const double> scores) {
  if (scores.empty()) return {};
  const double m = scores[argmax(scores)];
  std::vector<double> out(scores.size());
  double total = 0.0;
  for (std::size_t k = 0; k < scores.size(); ++k) {
    out[k] = std::exp(scores[k] - m);
    total += out[k];
  }
  for (double& v : out) v /= total;
  return out;
}

double sigmoid(double t) {
  if (t >= 0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

double sigmoid_predict(std::span<const double> theta, const AttributeVector& z) {
  if (theta.size() != z.size()) {
    throw ValidationError("weight vector has length " + std::to_string(theta.size()) +
                          ", attribute vector " + std::to_string(z.size()));
  }
  double t = 0.0;
  for (std::size_t j = 0; j < z.size(); ++j) {
    if (z.test(j)) t += theta[j];
  }
  return sigmoid(t);
}

std::size_t argmax(std::span<const double> values) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < values.size(); ++k) {
    if (values[k] > values[best]) best = k;
  }
  return best;
}

std::vector<double> score_linear(const LogRegModel& model, const AttributeVector& z) {
  check_dims(model, z);
  std::vector<double> scores(model.num_classes(), 0.0);
  for (std::size_t k = 0; k < scores.size(); ++k) {
    const auto row = model.weights.row(k);
    double s = 0.0;
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (z.test(j)) s += row[j];
    }
    scores[k] = s + (model.bias ? (*model.bias)[k] : 0.0);
  }
  return scores;
}

std::vector<double> score_contributions(const LogRegModel& model, const AttributeVector& z,
                                        ClassId k) {
  check_dims(model, z);
  if (!model.classes.contains(k)) throw ValidationError("unknown class id " + std::to_string(k));
  const auto row = model.weights.row(static_cast<std::size_t>(k));
  std::vector<double> out(row.size(), 0.0);
  for (std::size_t j = 0; j < row.size(); ++j) out[j] = z.test(j) ? row[j] : 0.0;
  return out;
}

std::vector<double> predict_proba(const LogRegModel& model, const AttributeVector& z) {
  return softmax(score_linear(model, z));
}

ClassId predict(const LogRegModel& model, const AttributeVector& z) {
  return static_cast<ClassId>(argmax(predict_proba(model, z)));
}

double loss(const LogRegModel& model, std::span<const AttributeVector> X, std::span<const ClassId> y) {
  check_batch(model.num_attributes(), X, y, model.num_classes());
  double total = 0.0;
  for (std::size_t i = 0; i < X.size(); ++i) {
    const auto scores = score_linear(model, X[i]);
    total += log_partition(scores) - scores[static_cast<std::size_t>(y[i])];
  }
  return total + model.l2_penalty * squared_norm(model.weights);
}

LogRegGradient gradient(const LogRegModel& model, std::span<const AttributeVector> X,
                        std::span<const ClassId> y) {
  check_batch(model.num_attributes(), X, y, model.num_classes());
  const auto k_classes = model.num_classes();
  LogRegGradient g{Matrix(k_classes, model.num_attributes()),
                   model.bias ? std::vector<double>(k_classes, 0.0) : std::vector<double>()};
  for (std::size_t i = 0; i < X.size(); ++i) {
    const auto p = predict_proba(model, X[i]);
    const auto present = X[i].ids();
    for (std::size_t k = 0; k < k_classes; ++k) {
      const double residual = p[k] - (static_cast<std::size_t>(y[i]) == k ? 1.0 : 0.0);
      auto row = g.weights.row(k);
      for (AttributeId a : present) row[static_cast<std::size_t>(a - 1)] += residual;
      if (model.bias) g.bias[k] += residual;
    }
  }
  const auto w = model.weights.data();
  auto gw = g.weights.data();
  for (std::size_t i = 0; i < w.size(); ++i) gw[i] += 2.0 * model.l2_penalty * w[i];
  return g;
}

LogRegModel train_logreg(const AttributeVocabulary& attributes, const ClassVocabulary& classes,
                         std::span<const AttributeVector> X, std::span<const ClassId> y,
                         const TrainConfig& cfg, TrainTrace* trace) {
  cfg.validate();
  check_batch(attributes.size(), X, y, classes.size());
  std::vector<bool> seen(classes.size(), false);
  for (ClassId c : y) seen[static_cast<std::size_t>(c)] = true;
  for (std::size_t k = 0; k < seen.size(); ++k) {
    if (!seen[k]) {
      throw ValidationError("class '" + classes.names()[k] + "' has no training samples");
    }
  }

  auto model = LogRegModel::zeros(attributes, classes, cfg.fit_bias, cfg.l2_penalty);
  const double n = static_cast<double>(X.size());
  const double step = cfg.learning_rate / n;

  double current = loss(model, X, y);
  const double initial = current;
  LogRegModel best = model;
  double best_loss = current;
  int rising = 0;
  int epoch = 0;
  std::vector<double> history;
  for (epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    const auto g = gradient(model, X, y);
    auto w = model.weights.data();
    const auto gw = g.weights.data();
    for (std::size_t i = 0; i < w.size(); ++i) w[i] -= step * gw[i];
    if (model.bias) {
      for (std::size_t k = 0; k < g.bias.size(); ++k) (*model.bias)[k] -= step * g.bias[k];
    }
    const double next = loss(model, X, y);
    if (!std::isfinite(next)) {
      throw NumericError("training loss became non-finite at epoch " + std::to_string(epoch) +
                         "; use a smaller learning_rate");
    }
    if (trace) history.push_back(next);
    if (next > current) {
      if (++rising >= kDivergencePatience) {
        throw NumericError("training diverged: loss rose for " + std::to_string(kDivergencePatience) +
                           " consecutive epochs; use a smaller learning_rate");
      }
      current = next;
      continue;
    }
    rising = 0;
    const bool converged = (current - next) / n < cfg.loss_tolerance;
    current = next;
    if (current < best_loss) {
      best_loss = current;
      best = model;
    }
    if (converged) break;
  }
  if (trace) {
    trace->epochs = std::min(epoch, cfg.max_epochs);
    trace->initial_loss = initial;
    trace->final_loss = best_loss;
    trace->losses = std::move(history);
  }
  return best;
}

double accuracy(std::span<const ClassId> predicted, std::span<const ClassId> truth) {
  if (predicted.size() != truth.size()) throw ValidationError("prediction/label length mismatch");
  if (truth.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) hits += predicted[i] == truth[i] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(truth.size());
}

// ---------------------------------------------------------------------------
// Naive Bayes

NaiveBayesModel train_nb(const AttributeVocabulary& attributes, const ClassVocabulary& classes,
                         std::span<const AttributeVector> X, std::span<const ClassId> y,
                         double alpha) {
  if (!(alpha > 0.0)) throw ValidationError("smoothing alpha must be positive");
  check_batch(attributes.size(), X, y, classes.size());
  const auto k_classes = classes.size();
  const auto n_attr = attributes.size();
  std::vector<double> count(k_classes, 0.0);
  Matrix present(k_classes, n_attr);
  for (std::size_t i = 0; i < X.size(); ++i) {
    const auto k = static_cast<std::size_t>(y[i]);
    count[k] += 1.0;
    for (AttributeId a : X[i].ids()) present(k, static_cast<std::size_t>(a - 1)) += 1.0;
  }
  NaiveBayesModel m;
  m.attributes = attributes;
  m.classes = classes;
  m.alpha = alpha;
  m.log_prior.resize(k_classes);
  m.log_present = Matrix(k_classes, n_attr);
  m.log_absent = Matrix(k_classes, n_attr);
  const double n = static_cast<double>(X.size());
  for (std::size_t k = 0; k < k_classes; ++k) {
    if (count[k] == 0.0) {
      throw ValidationError("class '" + classes.names()[k] + "' has no training samples");
    }
    m.log_prior[k] = std::log(count[k] / n);
    for (std::size_t j = 0; j < n_attr; ++j) {
      const double p = (present(k, j) + alpha) / (count[k] + 2.0 * alpha);
      m.log_present(k, j) = std::log(p);
      m.log_absent(k, j) = std::log1p(-p);
    }
  }
  return m;
}

std::vector<double> nb_log_joint(const NaiveBayesModel& model, const AttributeVector& z) {
  if (z.size() != model.attributes.size()) {
    throw ValidationError("attribute vector has length " + std::to_string(z.size()) +
                          ", model expects " + std::to_string(model.attributes.size()));
  }
  std::vector<double> out(model.log_prior);
  for (std::size_t k = 0; k < out.size(); ++k) {
    for (std::size_t j = 0; j < z.size(); ++j) {
      out[k] += z.test(j) ? model.log_present(k, j) : model.log_absent(k, j);
    }
  }
  return out;
}

std::vector<double> nb_posterior(const NaiveBayesModel& model, const AttributeVector& z) {
  return softmax(nb_log_joint(model, z));
}

ClassId predict_nb(const NaiveBayesModel& model, const AttributeVector& z) {
  return static_cast<ClassId>(argmax(nb_log_joint(model, z)));
}

// ---------------------------------------------------------------------------
// Serialization

void write_logreg(std::ostream& out, const LogRegModel& model) {
  model.validate();
  out << kLogRegHeader << ' ' << kModelVersion << '\n';
  out << "l2_penalty " << text::format_double(model.l2_penalty) << '\n';
  out << "bias " << (model.bias ? 1 : 0) << '\n';
  write_vocabularies(out, model.attributes, model.classes);
  for (std::size_t k = 0; k < model.num_classes(); ++k) {
    out << "weights " << k;
    write_row(out, model.weights.row(k));
  }
  if (model.bias) {
    out << "intercept 0";
    write_row(out, *model.bias);
  }
}

LogRegModel parse_logreg(std::istream& in, const std::string& source) {
  static constexpr std::string_view scalars[] = {"l2_penalty", "bias"};
  static constexpr std::string_view rows[] = {"weights", "intercept"};
  auto rec = read_model_records(in, source, kLogRegHeader, scalars, rows);
  LogRegModel m;
  try {
    m.attributes = AttributeVocabulary(rec.attributes);
    m.classes = ClassVocabulary(rec.classes);
  } catch (const ValidationError& e) {
    throw ParseError(source, 0, e.what());
  }
  m.l2_penalty = scalar_double(rec, "l2_penalty", source);
  const double bias_flag = scalar_double(rec, "bias", source);
  if (bias_flag != 0.0 && bias_flag != 1.0) throw ParseError(source, 0, "bias flag must be 0 or 1");
  m.weights = assemble_rows(rec, "weights", m.classes.size(), m.attributes.size(), source);
  if (bias_flag == 1.0) {
    auto b = assemble_rows(rec, "intercept", 1, m.classes.size(), source);
    m.bias = std::vector<double>(b.data().begin(), b.data().end());
  } else if (rec.rows.contains("intercept")) {
    throw ParseError(source, 0, "intercept present but bias flag is 0");
  }
  m.validate();
  return m;
}

void write_nb(std::ostream& out, const NaiveBayesModel& model) {
  out << kNaiveBayesHeader << ' ' << kModelVersion << '\n';
  out << "alpha " << text::format_double(model.alpha) << '\n';
  write_vocabularies(out, model.attributes, model.classes);
  out << "log_prior 0";
  write_row(out, model.log_prior);
  for (std::size_t k = 0; k < model.classes.size(); ++k) {
    out << "log_present " << k;
    write_row(out, model.log_present.row(k));
  }
  for (std::size_t k = 0; k < model.classes.size(); ++k) {
    out << "log_absent " << k;
    write_row(out, model.log_absent.row(k));
  }
}

NaiveBayesModel parse_nb(std::istream& in, const std::string& source) {
  static constexpr std::string_view scalars[] = {"alpha"};
  static constexpr std::string_view rows[] = {"log_prior", "log_present", "log_absent"};
  auto rec = read_model_records(in, source, kNaiveBayesHeader, scalars, rows);
  NaiveBayesModel m;
  try {
    m.attributes = AttributeVocabulary(rec.attributes);
    m.classes = ClassVocabulary(rec.classes);
  } catch (const ValidationError& e) {
    throw ParseError(source, 0, e.what());
  }
  m.alpha = scalar_double(rec, "alpha", source);
  auto prior = assemble_rows(rec, "log_prior", 1, m.classes.size(), source);
  m.log_prior.assign(prior.data().begin(), prior.data().end());
  m.log_present = assemble_rows(rec, "log_present", m.classes.size(), m.attributes.size(), source);
  m.log_absent = assemble_rows(rec, "log_absent", m.classes.size(), m.attributes.size(), source);
  return m;
}

void save_logreg(const std::filesystem::path& path, const LogRegModel& model) {
  auto out = open_out(path);
  write_logreg(out, model);
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

LogRegModel load_logreg(const std::filesystem::path& path) {
  auto in = open_in(path);
  return parse_logreg(in, path.string());
}

void save_nb(const std::filesystem::path& path, const NaiveBayesModel& model) {
  auto out = open_out(path);
  write_nb(out, model);
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

NaiveBayesModel load_nb(const std::filesystem::path& path) {
  auto in = open_in(path);
  return parse_nb(in, path.string());
}

ModelKind detect_model_kind(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::string line;
  while (std::getline(in, line)) {
    auto body = text::trim(line);
    if (body.empty() || body.front() == '#') continue;
    if (body.starts_with(kLogRegHeader)) return ModelKind::kLogReg;
    if (body.starts_with(kNaiveBayesHeader)) return ModelKind::kNaiveBayes;
    break;
  }
  throw ParseError(path.string(), 1, "not a greybox model file");
}

}  // namespace greybox
