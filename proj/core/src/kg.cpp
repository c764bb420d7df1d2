#include "greybox/kg.hpp"

#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "greybox/text.hpp"

namespace greybox {

namespace {

using Node = std::pair<NodeSide, std::string>;

std::set<Node> nodes_of(const KnowledgeGraph& g) {
  std::set<Node> out;
  for (const auto& a : g.attribute_nodes) out.emplace(NodeSide::kAttribute, a);
  for (const auto& c : g.class_nodes) out.emplace(NodeSide::kClass, c);
  return out;
}

// Branch and bound over which shared nodes are matched (kept) rather than
// deleted and re-inserted.
class GedSearch {
 public:
  GedSearch(const KnowledgeGraph& a, const KnowledgeGraph& b) : a_(a), b_(b) {
    const auto na = nodes_of(a);
    const auto nb = nodes_of(b);
    for (const auto& n : na) {
      if (nb.contains(n)) shared_.push_back(n);
    }
    only_nodes_ = na.size() + nb.size() - 2 * shared_.size();
  }

  std::vector<bool> solve() {
    std::vector<bool> keep(shared_.size(), true);
    best_keep_ = keep;
    best_cost_ = std::numeric_limits<std::size_t>::max();
    branch(keep, 0);
    return best_keep_;
  }

  const std::vector<Node>& shared() const { return shared_; }

 private:
  // Cost when shared nodes at index >= `decided` are kept; a lower bound for
  // every completion because keeping a node never adds an edit.
  std::size_t cost(const std::vector<bool>& keep) const {
    std::set<Node> kept;
    std::size_t dropped = 0;
    for (std::size_t i = 0; i < shared_.size(); ++i) {
      if (keep[i]) {
        kept.insert(shared_[i]);
      } else {
        dropped += 2;  // delete from a, insert from b
      }
    }
    std::size_t preserved = 0;
    for (const auto& e : a_.edges) {
      if (b_.edges.contains(e) && kept.contains({NodeSide::kAttribute, e.first}) &&
          kept.contains({NodeSide::kClass, e.second})) {
        ++preserved;
      }
    }
    return only_nodes_ + dropped + (a_.edges.size() - preserved) + (b_.edges.size() - preserved);
  }

  void branch(std::vector<bool>& keep, std::size_t i) {
    if (cost(keep) >= best_cost_) return;
    if (i == shared_.size()) {
      best_cost_ = cost(keep);
      best_keep_ = keep;
      return;
    }
    branch(keep, i + 1);
    keep[i] = false;
    branch(keep, i + 1);
    keep[i] = true;
  }

  const KnowledgeGraph& a_;
  const KnowledgeGraph& b_;
  std::vector<Node> shared_;
  std::size_t only_nodes_ = 0;
  std::vector<bool> best_keep_;
  std::size_t best_cost_ = 0;
};

std::string_view side_name(NodeSide s) { return s == NodeSide::kAttribute ? "attribute" : "class"; }

}  // namespace

KnowledgeGraph extract_kg(const LogRegModel& model, double epsilon) {
  if (!(epsilon >= 0.0)) throw ValidationError("epsilon must be non-negative");
  KnowledgeGraph g;
  for (const auto& c : model.classes.names()) g.add_class(c);
  for (std::size_t k = 0; k < model.num_classes(); ++k) {
    for (std::size_t j = 0; j < model.num_attributes(); ++j) {
      if (model.weights(k, j) > epsilon) {
        g.add_edge(model.attributes.names()[j], model.classes.names()[k]);
      }
    }
  }
  return g;
}

std::string to_string(const EditOp& op) {
  switch (op.kind) {
    case EditOp::Kind::kDeleteEdge:
      return "delete-edge (" + op.name + ") -- (" + op.cls + ")";
    case EditOp::Kind::kInsertEdge:
      return "insert-edge (" + op.name + ") -- (" + op.cls + ")";
    case EditOp::Kind::kDeleteNode:
      return "delete-node " + std::string(side_name(op.side)) + " (" + op.name + ")";
    case EditOp::Kind::kInsertNode:
      return "insert-node " + std::string(side_name(op.side)) + " (" + op.name + ")";
  }
  return "?";
}

GedResult ged(const KnowledgeGraph& a, const KnowledgeGraph& b) {
  auto all = nodes_of(a);
  for (auto& n : nodes_of(b)) all.insert(n);
  if (all.size() > kGedNodeBound) {
    throw ValidationError("exact graph edit distance is limited to " + std::to_string(kGedNodeBound) +
                          " nodes (got " + std::to_string(all.size()) +
                          "); approximate GED is not supported");
  }

  GedSearch search(a, b);
  const auto keep = search.solve();
  std::set<Node> kept;
  for (std::size_t i = 0; i < keep.size(); ++i) {
    if (keep[i]) kept.insert(search.shared()[i]);
  }
  auto survives = [&](const std::pair<std::string, std::string>& e) {
    return kept.contains({NodeSide::kAttribute, e.first}) && kept.contains({NodeSide::kClass, e.second});
  };

  GedResult r;
  for (const auto& e : a.edges) {
    if (!(b.edges.contains(e) && survives(e))) {
      r.script.push_back({EditOp::Kind::kDeleteEdge, NodeSide::kAttribute, e.first, e.second});
    }
  }
  for (const auto& n : nodes_of(a)) {
    if (!kept.contains(n)) r.script.push_back({EditOp::Kind::kDeleteNode, n.first, n.second, {}});
  }
  for (const auto& n : nodes_of(b)) {
    if (!kept.contains(n)) r.script.push_back({EditOp::Kind::kInsertNode, n.first, n.second, {}});
  }
  for (const auto& e : b.edges) {
    if (!(a.edges.contains(e) && survives(e))) {
      r.script.push_back({EditOp::Kind::kInsertEdge, NodeSide::kAttribute, e.first, e.second});
    }
  }
  r.distance = r.script.size();
  return r;
}

KnowledgeGraph apply_edit_script(KnowledgeGraph g, const std::vector<EditOp>& script) {
  for (const auto& op : script) {
    auto& side = op.side == NodeSide::kAttribute ? g.attribute_nodes : g.class_nodes;
    switch (op.kind) {
      case EditOp::Kind::kDeleteEdge:
        if (g.edges.erase({op.name, op.cls}) == 0) throw ValidationError("cannot apply " + to_string(op));
        break;
      case EditOp::Kind::kInsertEdge:
        if (!g.attribute_nodes.contains(op.name) || !g.class_nodes.contains(op.cls) ||
            !g.edges.emplace(op.name, op.cls).second) {
          throw ValidationError("cannot apply " + to_string(op));
        }
        break;
      case EditOp::Kind::kDeleteNode: {
        const bool incident = std::any_of(g.edges.begin(), g.edges.end(), [&](const auto& e) {
          return op.side == NodeSide::kAttribute ? e.first == op.name : e.second == op.name;
        });
        if (incident || side.erase(op.name) == 0) throw ValidationError("cannot apply " + to_string(op));
        break;
      }
      case EditOp::Kind::kInsertNode:
        if (!side.insert(op.name).second) throw ValidationError("cannot apply " + to_string(op));
        break;
    }
  }
  return g;
}

ClassId kg_deterministic_classify(const KnowledgeGraph& kg, const AttributeVector& z,
                                  const AttributeVocabulary& attributes, const ClassVocabulary& classes) {
  if (z.size() != attributes.size()) throw ValidationError("attribute vector length mismatch");
  std::vector<std::string> unknown;
  for (const auto& a : kg.attribute_nodes) {
    if (!attributes.find(a)) unknown.push_back(a);
  }
  for (const auto& c : kg.class_nodes) {
    if (!classes.find(c)) unknown.push_back(c);
  }
  if (!unknown.empty()) {
    std::string msg = "graph nodes not found in vocabulary:";
    for (const auto& n : unknown) msg += " '" + n + "'";
    throw ValidationError(msg);
  }
  std::vector<double> score(classes.size(), 0.0);
  for (const auto& [attr, cls] : kg.edges) {
    if (z.test(static_cast<std::size_t>(*attributes.find(attr) - 1))) {
      score[static_cast<std::size_t>(*classes.find(cls))] += 1.0;
    }
  }
  return static_cast<ClassId>(argmax(score));
}

ValidityResult audit_validity(const LogRegModel& model, const KnowledgeBase& expert_kb, double epsilon) {
  std::vector<std::string> unknown;
  for (const auto& t : expert_kb.tbox()) {
    if (!model.attributes.find(t.subject)) unknown.push_back("attribute '" + t.subject + "'");
    if (!model.classes.find(t.object_name())) unknown.push_back("class '" + t.object_name() + "'");
  }
  if (!unknown.empty()) {
    std::sort(unknown.begin(), unknown.end());
    unknown.erase(std::unique(unknown.begin(), unknown.end()), unknown.end());
    std::string msg = "expert knowledge base does not match the model vocabularies:";
    for (const auto& n : unknown) msg += " " + n;
    throw ValidationError(msg);
  }
  ValidityResult r;
  r.extracted = extract_kg(model, epsilon);
  r.expert = kb_to_graph(expert_kb);
  for (const auto& c : model.classes.names()) r.expert.add_class(c);
  r.ged = ged(r.extracted, r.expert);
  r.valid = r.ged.distance == 0;
  return r;
}

std::string write_edge_list(const KnowledgeGraph& g) {
  std::string out;
  std::set<std::string> linked_attrs;
  std::set<std::string> linked_classes;
  for (const auto& [a, c] : g.edges) {
    out += "(" + a + ") -- (" + c + ")\n";
    linked_attrs.insert(a);
    linked_classes.insert(c);
  }
  for (const auto& a : g.attribute_nodes) {
    if (!linked_attrs.contains(a)) out += "attribute (" + a + ")\n";
  }
  for (const auto& c : g.class_nodes) {
    if (!linked_classes.contains(c)) out += "class (" + c + ")\n";
  }
  return out;
}

KnowledgeGraph parse_edge_list(std::string_view body, const std::string& source) {
  KnowledgeGraph g;
  std::size_t line_no = 0;
  std::size_t start = 0;
  auto unwrap = [&](std::string_view s) -> std::string {
    s = text::trim(s);
    if (s.size() < 3 || s.front() != '(' || s.back() != ')') {
      throw ParseError(source, line_no, "expected '(name)', got '" + std::string(s) + "'");
    }
    return std::string(s.substr(1, s.size() - 2));
  };
  while (start < body.size()) {
    auto end = body.find('\n', start);
    if (end == std::string_view::npos) end = body.size();
    const auto line = text::trim(body.substr(start, end - start));
    start = end + 1;
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    if (const auto sep = line.find(") -- ("); sep != std::string_view::npos) {
      g.add_edge(unwrap(line.substr(0, sep + 1)), unwrap(line.substr(sep + 5)));
    } else if (line.starts_with("attribute ")) {
      g.add_attribute(unwrap(line.substr(10)));
    } else if (line.starts_with("class ")) {
      g.add_class(unwrap(line.substr(6)));
    } else {
      throw ParseError(source, line_no, "expected '(attribute) -- (class)' or an isolated node line");
    }
  }
  return g;
}

KnowledgeGraph load_edge_list(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_edge_list(buf.str(), path.string());
}

std::string write_dot(const KnowledgeGraph& g) {
  std::string out = "graph knowledge {\n";
  for (const auto& a : g.attribute_nodes) out += "  " + text::quote("attr:" + a) + " [label=" + text::quote(a) + ", shape=ellipse];\n";
  for (const auto& c : g.class_nodes) out += "  " + text::quote("class:" + c) + " [label=" + text::quote(c) + ", shape=box];\n";
  for (const auto& [a, c] : g.edges) {
    out += "  " + text::quote("attr:" + a) + " -- " + text::quote("class:" + c) + ";\n";
  }
  out += "}\n";
  return out;
}

}  // namespace greybox
