// greybox command line tool.
//
// Options can also come from an INI/TOML config file (--config). Keys in a
// [subcommand] section apply to that subcommand; command-line flags override
// the file. GREYBOX_CONFIG names the config file used when --config is absent.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "greybox/classifier.hpp"
#include "greybox/dataset.hpp"
#include "greybox/explain.hpp"
#include "greybox/kb.hpp"
#include "greybox/kg.hpp"
#include "greybox/lsp.hpp"
#include "greybox/pipeline.hpp"
#include "greybox/synth.hpp"
#include "greybox/text.hpp"

namespace fs = std::filesystem;
using namespace greybox;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitIo = 2;
constexpr int kExitNumeric = 3;

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::ostringstream body;
  body << in.rdbuf();
  return body.str();
}

// "-" or empty writes to stdout.
void emit(const std::string& path, const std::string& body) {
  if (path.empty() || path == "-") {
    std::cout << body;
    std::cout.flush();
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << body;
  if (!out) throw IoError("failed writing '" + path + "'");
}

struct VectorizeFlags {
  double tau = 0.5;
  int min_pixels = 1;

  void attach(CLI::App* cmd) {
    cmd->add_option("--tau", tau, "Minimum per-pixel confidence")->capture_default_str();
    cmd->add_option("--min-pixels", min_pixels, "Qualifying cells needed to mark an attribute present")
        ->capture_default_str();
  }
  VectorizeConfig config() const { return {tau, min_pixels}; }
};

struct SplitFlags {
  std::string part = "all";
  double test_fraction = 0.2;
  std::uint64_t seed = 0;

  void attach(CLI::App* cmd) {
    cmd->add_option("--split", part, "Dataset part to use")
        ->check(CLI::IsMember({"all", "train", "test"}))
        ->capture_default_str();
    cmd->add_option("--test-fraction", test_fraction, "Share of samples in the test part")->capture_default_str();
    cmd->add_option("--split-seed", seed, "Seed of the train/test shuffle")->capture_default_str();
  }
  TripleDataset apply(TripleDataset ds) const {
    if (part == "all") return ds;
    auto [train, test] = split_dataset(ds, test_fraction, seed);
    return part == "train" ? std::move(train) : std::move(test);
  }
};

struct PredictorFlags {
  std::string kind = "oracle";
  std::string dir;
  NoiseConfig noise;

  void attach(CLI::App* cmd) {
    cmd->add_option("--predictor", kind, "Latent space predictor")
        ->check(CLI::IsMember({"oracle", "file", "noisy"}))
        ->capture_default_str();
    cmd->add_option("--pred-dir", dir, "Directory of <sample>.seg / <sample>.conf files (file predictor)");
    cmd->add_option("--p-drop-instance", noise.p_drop_instance, "Noisy predictor: drop one box")
        ->capture_default_str();
    cmd->add_option("--p-drop-attribute", noise.p_drop_attribute, "Noisy predictor: drop every box of an attribute")
        ->capture_default_str();
    cmd->add_option("--p-spurious", noise.p_spurious, "Noisy predictor: inject an absent attribute")
        ->capture_default_str();
    cmd->add_flag("--keep-last-instance", noise.keep_last_instance,
                  "Noisy predictor: instance drops never remove an attribute");
    cmd->add_option("--spurious-min-pixels", noise.spurious_min_pixels, "Noisy predictor: injected region area")
        ->capture_default_str();
    cmd->add_option("--noise-seed", noise.seed, "Noisy predictor seed")->capture_default_str();
  }
  PredictorConfig config() const {
    if (kind == "file") {
      if (dir.empty()) throw ValidationError("--pred-dir is required with --predictor file");
      return FilePredictor{dir};
    }
    if (kind == "noisy") return NoisyPredictor{noise};
    return OraclePredictor{};
  }
};

const Sample& find_sample(const TripleDataset& ds, const std::string& id) {
  for (const auto& s : ds.samples) {
    if (s.id == id) return s;
  }
  throw ValidationError("no sample with id '" + id + "' in the dataset");
}

// Edge list or isPartOf knowledge base, told apart by content.
KnowledgeGraph load_graph(const fs::path& path) {
  const auto body = read_text(path);
  if (body.find("isPartOf") != std::string::npos) return kb_to_graph(parse_kb(body, path.string()));
  return parse_edge_list(body, path.string());
}

std::string explanation_json(const Explanation& e, const LogRegModel& model) {
  nlohmann::ordered_json j;
  j["sample_id"] = e.sample_id;
  j["predicted"] = e.predicted_name;
  j["text"] = e.text;
  j["attributes"] = nlohmann::ordered_json::array();
  for (const auto& a : e.attributes) j["attributes"].push_back({{"name", a.name}, {"weight", *a.weight}});
  const auto z = [&] {
    AttributeVector v(model.num_attributes());
    for (const auto& a : e.attributes) v.set(static_cast<std::size_t>(a.id - 1));
    return v;
  }();
  j["objective"] = audit_objectivity(e);
  j["intrinsic"] = audit_intrinsicality(e, model, z);
  return j.dump() + "\n";
}

std::string counterfactual_text(const std::vector<CounterfactualResult>& results, const LogRegModel& model,
                                const AttributeVector& z) {
  std::ostringstream out;
  const auto original = predict(model, z);
  out << "prediction: " << model.classes.name(original) << '\n';
  if (results.empty()) {
    out << "no counterfactual within the flip budget\n";
    return out.str();
  }
  for (const auto& r : results) {
    out << "flip";
    for (AttributeId id : r.flips) {
      out << ' ' << (z.test(static_cast<std::size_t>(id - 1)) ? '-' : '+') << text::quote(model.attributes.name(id));
    }
    out << " -> " << model.classes.name(r.new_class) << " (P(" << model.classes.name(r.original_class)
        << ") " << text::format_fixed(r.old_prob, 6) << " -> " << text::format_fixed(r.new_prob, 6) << ")\n";
  }
  return out.str();
}

AttributeVector vector_from_names(const LogRegModel& model, const std::vector<std::string>& names) {
  AttributeVector z(model.num_attributes());
  for (const auto& n : names) {
    const auto id = model.attributes.find(n);
    if (!id) throw ValidationError("unknown attribute '" + n + "'");
    z.set(static_cast<std::size_t>(*id - 1));
  }
  return z;
}

int run(int argc, char** argv) {
  CLI::App app{"greybox: part-based explainable classification pipeline"};
  app.require_subcommand(1);
  std::string default_config;
  if (const char* env = std::getenv("GREYBOX_CONFIG")) default_config = env;
  app.set_config("--config", default_config, "INI/TOML file with option defaults");

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset from an expert knowledge base");
  std::string synth_kb;
  std::string synth_out;
  int n_per_class = 100;
  std::uint64_t synth_seed = 0;
  SynthNoiseConfig synth_noise;
  synth->add_option("--kb", synth_kb, "Expert knowledge base")->required();
  synth->add_option("--out", synth_out, "Manifest to write")->required();
  synth->add_option("--n-per-class", n_per_class, "Samples per class")->capture_default_str();
  synth->add_option("--p-omit", synth_noise.p_omit, "Probability of omitting a linked attribute")
      ->capture_default_str();
  synth->add_option("--height", synth_noise.height, "Image height")->capture_default_str();
  synth->add_option("--width", synth_noise.width, "Image width")->capture_default_str();
  synth->add_option("--cell-size", synth_noise.cell_size, "Grid cell holding at most one box")
      ->capture_default_str();
  synth->add_option("--max-instances", synth_noise.max_instances, "Boxes per attribute, at most")
      ->capture_default_str();
  synth->add_option("--seed", synth_seed, "Generator seed")->capture_default_str();

  // extract-kb
  auto* extract = app.add_subcommand("extract-kb", "Triplify a dataset into a knowledge base");
  std::string extract_dataset;
  std::string extract_out;
  double min_support = 0.0;
  extract->add_option("--dataset", extract_dataset, "Dataset manifest")->required();
  extract->add_option("--out", extract_out, "Knowledge base to write (default stdout)");
  extract->add_option("--min-support", min_support, "Minimum per-class support of an isPartOf link")
      ->capture_default_str();

  // train
  auto* train = app.add_subcommand("train", "Train a transparent classifier on ground-truth attribute vectors");
  std::string train_dataset;
  std::string train_out;
  std::string model_kind = "logreg";
  TrainConfig train_cfg;
  double nb_alpha = 1.0;
  VectorizeFlags train_vect;
  SplitFlags train_split;
  train_split.part = "all";
  train->add_option("--dataset", train_dataset, "Dataset manifest")->required();
  train->add_option("--out", train_out, "Model file to write")->required();
  train->add_option("--model", model_kind, "Classifier")
      ->check(CLI::IsMember({"logreg", "nb"}))
      ->capture_default_str();
  train->add_option("--learning-rate", train_cfg.learning_rate, "Gradient descent step")->capture_default_str();
  train->add_option("--max-epochs", train_cfg.max_epochs, "Epoch limit")->capture_default_str();
  train->add_option("--loss-tolerance", train_cfg.loss_tolerance, "Stop when the mean loss improves less")
      ->capture_default_str();
  train->add_option("--l2-penalty", train_cfg.l2_penalty, "Weight penalty")->capture_default_str();
  train->add_flag("--bias", train_cfg.fit_bias, "Fit a per-class intercept");
  train->add_option("--seed", train_cfg.seed, "Reserved; full-batch descent does not use it")
      ->capture_default_str();
  train->add_option("--alpha", nb_alpha, "Naive Bayes smoothing")->capture_default_str();
  train_vect.attach(train);
  train_split.attach(train);

  // eval
  auto* eval = app.add_subcommand("eval", "Run the full pipeline over a dataset and report");
  std::string eval_dataset;
  std::string eval_model;
  std::string eval_report;
  std::string eval_records;
  std::string eval_kb;
  double eval_epsilon = kDefaultEdgeEpsilon;
  std::size_t eval_flips = 0;
  VectorizeFlags eval_vect;
  SplitFlags eval_split;
  PredictorFlags eval_pred;
  eval->add_option("--dataset", eval_dataset, "Dataset manifest")->required();
  eval->add_option("--model", eval_model, "Model file")->required();
  eval->add_option("--report", eval_report, "Text report (default stdout)");
  eval->add_option("--records", eval_records, "JSON-lines per-sample records");
  eval->add_option("--expert-kb", eval_kb, "Expert knowledge base for the validity audit");
  eval->add_option("--epsilon", eval_epsilon, "Edge threshold of the extracted graph")->capture_default_str();
  eval->add_option("--counterfactual-flips", eval_flips, "Flip budget of the counterfactual scan (0 = off)")
      ->capture_default_str();
  eval_vect.attach(eval);
  eval_split.attach(eval);
  eval_pred.attach(eval);

  // explain
  auto* expl = app.add_subcommand("explain", "Explain the prediction for one sample");
  std::string expl_dataset;
  std::string expl_model;
  std::string expl_sample;
  std::string expl_segmap_out;
  bool expl_json = false;
  VectorizeFlags expl_vect;
  PredictorFlags expl_pred;
  expl->add_option("--dataset", expl_dataset, "Dataset manifest")->required();
  expl->add_option("--model", expl_model, "Logistic regression model")->required();
  expl->add_option("--sample", expl_sample, "Sample id")->required();
  expl->add_option("--segmap-out", expl_segmap_out, "Write the predicted segmentation map here");
  expl->add_flag("--json", expl_json, "Emit a JSON record instead of the sentence");
  expl_vect.attach(expl);
  expl_pred.attach(expl);

  // counterfactual
  auto* cf = app.add_subcommand("counterfactual", "Smallest attribute flips that change the prediction");
  std::string cf_model;
  std::string cf_dataset;
  std::string cf_sample;
  std::vector<std::string> cf_attrs;
  std::size_t cf_flips = 2;
  VectorizeFlags cf_vect;
  cf->add_option("--model", cf_model, "Logistic regression model")->required();
  cf->add_option("--attributes", cf_attrs, "Present attribute names")->delimiter(',');
  cf->add_option("--dataset", cf_dataset, "Dataset manifest (with --sample)");
  cf->add_option("--sample", cf_sample, "Use the ground-truth vector of this sample");
  cf->add_option("--max-flips", cf_flips, "Flip budget")->capture_default_str();
  cf_vect.attach(cf);

  // extract-kg
  auto* kg = app.add_subcommand("extract-kg", "Knowledge graph from positive classifier weights");
  std::string kg_model;
  std::string kg_out;
  std::string kg_format = "edges";
  double kg_epsilon = kDefaultEdgeEpsilon;
  kg->add_option("--model", kg_model, "Logistic regression model")->required();
  kg->add_option("--out", kg_out, "Output file (default stdout)");
  kg->add_option("--epsilon", kg_epsilon, "Edge threshold")->capture_default_str();
  kg->add_option("--format", kg_format, "Output format")
      ->check(CLI::IsMember({"edges", "dot"}))
      ->capture_default_str();

  // ged
  auto* ged_cmd = app.add_subcommand("ged", "Graph edit distance between two graphs (edge lists or KBs)");
  std::string ged_a;
  std::string ged_b;
  ged_cmd->add_option("first", ged_a, "First graph")->required();
  ged_cmd->add_option("second", ged_b, "Second graph")->required();

  // audit
  auto* audit = app.add_subcommand("audit", "Self-explaining, validity and explanation audits of a model");
  std::string audit_model;
  std::string audit_kb;
  std::string audit_dataset;
  std::string audit_out;
  double audit_epsilon = kDefaultEdgeEpsilon;
  SelfExplainingConfig se_cfg;
  VectorizeFlags audit_vect;
  audit->add_option("--model", audit_model, "Logistic regression model")->required();
  audit->add_option("--expert-kb", audit_kb, "Expert knowledge base");
  audit->add_option("--dataset", audit_dataset, "Audit explanations of every sample in this manifest");
  audit->add_option("--out", audit_out, "Report file (default stdout)");
  audit->add_option("--epsilon", audit_epsilon, "Edge threshold of the extracted graph")->capture_default_str();
  audit->add_option("--simulatability-bound", se_cfg.simulatability_bound, "Attribute count a reader can follow")
      ->capture_default_str();
  audit->add_option("--samples", se_cfg.samples, "Random vectors for the additivity check")->capture_default_str();
  audit->add_option("--seed", se_cfg.seed, "Seed of the additivity check")->capture_default_str();
  audit_vect.attach(audit);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    if (code == 0) return kExitOk;
    // A config file named but not readable is an I/O problem.
    if (dynamic_cast<const CLI::FileError*>(&e) != nullptr) return kExitIo;
    return kExitValidation;
  }

  if (synth->parsed()) {
    const auto ds = synth_generate(load_kb(synth_kb), n_per_class, synth_noise, synth_seed);
    save_dataset(synth_out, ds);
  } else if (extract->parsed()) {
    emit(extract_out, serialize_kb(extract_kb(load_dataset(extract_dataset), min_support)));
  } else if (train->parsed()) {
    const auto ds = train_split.apply(load_dataset(train_dataset));
    const auto X = ground_truth_vectors(ds, train_vect.config());
    const auto y = labels_of(ds);
    if (model_kind == "nb") {
      save_nb(train_out, train_nb(ds.attributes, ds.classes, X, y, nb_alpha));
    } else {
      save_logreg(train_out, train_logreg(ds.attributes, ds.classes, X, y, train_cfg));
    }
  } else if (eval->parsed()) {
    const auto ds = eval_split.apply(load_dataset(eval_dataset));
    const auto predictor = eval_pred.config();
    EvalReport report;
    if (detect_model_kind(eval_model) == ModelKind::kNaiveBayes) {
      report = evaluate(ds, predictor, load_nb(eval_model), eval_vect.config());
    } else {
      std::optional<KnowledgeBase> kb;
      if (!eval_kb.empty()) kb = load_kb(eval_kb);
      EvalOptions options;
      options.counterfactual_flips = eval_flips;
      options.expert_kb = kb ? &*kb : nullptr;
      options.epsilon = eval_epsilon;
      report = evaluate(ds, predictor, load_logreg(eval_model), eval_vect.config(), options);
    }
    std::ostringstream text;
    write_report_text(text, report);
    emit(eval_report, text.str());
    if (!eval_records.empty()) {
      std::ostringstream records;
      write_report_records(records, report);
      emit(eval_records, records.str());
    }
  } else if (expl->parsed()) {
    const auto ds = load_dataset(expl_dataset);
    const auto model = load_logreg(expl_model);
    const auto r = run_inference(find_sample(ds, expl_sample), expl_pred.config(), model, expl_vect.config());
    auto e = r.explanation;
    if (!expl_segmap_out.empty()) {
      write_segmap_files(expl_segmap_out, r.segmap);
      e.segmap_ref = expl_segmap_out;
    }
    emit("-", expl_json ? explanation_json(e, model) : e.text + "\n");
  } else if (cf->parsed()) {
    const auto model = load_logreg(cf_model);
    AttributeVector z;
    if (!cf_sample.empty()) {
      if (cf_dataset.empty()) throw ValidationError("--sample needs --dataset");
      const auto ds = load_dataset(cf_dataset);
      z = vectorize(find_sample(ds, cf_sample).gt_segmap, model.attributes, cf_vect.config());
    } else {
      z = vector_from_names(model, cf_attrs);
    }
    emit("-", counterfactual_text(counterfactual_scan(model, z, cf_flips), model, z));
  } else if (kg->parsed()) {
    const auto g = extract_kg(load_logreg(kg_model), kg_epsilon);
    emit(kg_out, kg_format == "dot" ? write_dot(g) : write_edge_list(g));
  } else if (ged_cmd->parsed()) {
    const auto r = ged(load_graph(ged_a), load_graph(ged_b));
    std::string out = "distance " + std::to_string(r.distance) + "\n";
    for (const auto& op : r.script) out += to_string(op) + "\n";
    emit("-", out);
  } else if (audit->parsed()) {
    const auto model = load_logreg(audit_model);
    std::ostringstream out;
    const auto se = check_self_explaining(model, se_cfg);
    out << "self-explaining: " << (se.ok() ? "yes" : "no") << '\n';
    out << "  additive: " << (se.additive ? "yes" : "no") << " (max deviation "
        << text::format_double(se.max_deviation) << ")\n";
    out << "  monotone: " << (se.monotone ? "yes" : "no") << '\n';
    out << "  simulatable: " << (se.simulatable ? "yes" : "no") << " (" << model.num_attributes()
        << " attributes, bound " << se_cfg.simulatability_bound << ")\n";
    if (!audit_kb.empty()) {
      const auto v = audit_validity(model, load_kb(audit_kb), audit_epsilon);
      out << "valid: " << (v.valid ? "yes" : "no") << " (epsilon " << text::format_double(audit_epsilon)
          << ", graph edit distance " << v.ged.distance << ")\n";
      for (const auto& op : v.ged.script) out << "  " << to_string(op) << '\n';
    }
    if (!audit_dataset.empty()) {
      const auto ds = load_dataset(audit_dataset);
      if (ds.attributes != model.attributes || ds.classes != model.classes) {
        throw ValidationError("model vocabularies do not match the dataset");
      }
      std::size_t objective = 0;
      std::size_t intrinsic = 0;
      for (const auto& s : ds.samples) {
        const auto z = vectorize(s.gt_segmap, ds.attributes, audit_vect.config());
        const auto e = explain(model, z, s.id);
        objective += audit_objectivity(e) ? 1 : 0;
        intrinsic += audit_intrinsicality(e, model, z) ? 1 : 0;
      }
      out << "explanations: " << ds.samples.size() << '\n';
      out << "  objective: " << objective << '/' << ds.samples.size() << '\n';
      out << "  intrinsic: " << intrinsic << '/' << ds.samples.size() << '\n';
    }
    emit(audit_out, out.str());
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return kExitIo;
  } catch (const Error& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  }
}
