#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "greybox/classifier.hpp"
#include "greybox/graph.hpp"
#include "greybox/kb.hpp"

namespace greybox {

inline constexpr double kDefaultEdgeEpsilon = 0.01;
inline constexpr std::size_t kGedNodeBound = 40;

// Edge (attribute j, class k) iff weights(k, j) > epsilon. Every class is a
// node; attributes appear only when they carry an edge.
KnowledgeGraph extract_kg(const LogRegModel& model, double epsilon = kDefaultEdgeEpsilon);

enum class NodeSide { kAttribute, kClass };

struct EditOp {
  enum class Kind { kDeleteEdge, kDeleteNode, kInsertNode, kInsertEdge };
  Kind kind = Kind::kDeleteEdge;
  NodeSide side = NodeSide::kAttribute;  // node operations only
  std::string name;                      // node name, or the attribute of an edge
  std::string cls;                       // class of an edge

  bool operator==(const EditOp&) const = default;
};

std::string to_string(const EditOp& op);

struct GedResult {
  std::size_t distance = 0;
  std::vector<EditOp> script;  // transforms the first graph into the second
};

// Exact graph edit distance under unit node/edge insertion and deletion
// costs, no relabeling. Identically named nodes on the same side may be
// matched at zero cost. Throws ValidationError when the graphs together
// hold more than kGedNodeBound distinct nodes.
GedResult ged(const KnowledgeGraph& a, const KnowledgeGraph& b);

// Applies edits in order. Throws ValidationError on an inapplicable edit
// (deleting a missing node or edge, deleting a node that still has edges,
// inserting an existing node, inserting an edge with a missing endpoint).
KnowledgeGraph apply_edit_script(KnowledgeGraph g, const std::vector<EditOp>& script);

// Class with the most present attributes linked to it; ties go to the
// lowest class id.
ClassId kg_deterministic_classify(const KnowledgeGraph& kg, const AttributeVector& z,
                                  const AttributeVocabulary& attributes, const ClassVocabulary& classes);

struct ValidityResult {
  bool valid = false;
  GedResult ged;
  KnowledgeGraph extracted;
  KnowledgeGraph expert;
};

// Compares extract_kg(model, epsilon) with the expert TBox graph. The expert
// graph is given every class node of the model so that both graphs share the
// node set rule of extract_kg. Throws ValidationError listing KB names that
// are missing from the model vocabularies.
ValidityResult audit_validity(const LogRegModel& model, const KnowledgeBase& expert_kb,
                              double epsilon = kDefaultEdgeEpsilon);

// "(attribute) -- (class)" per edge, sorted; isolated nodes follow as
// "attribute (name)" / "class (name)" lines.
std::string write_edge_list(const KnowledgeGraph& g);
KnowledgeGraph parse_edge_list(std::string_view body, const std::string& source = "<graph>");
KnowledgeGraph load_edge_list(const std::filesystem::path& path);

// Graphviz-compatible undirected graph.
std::string write_dot(const KnowledgeGraph& g);

}  // namespace greybox
