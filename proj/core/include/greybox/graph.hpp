#pragma once

#include <cstddef>
#include <set>
#include <string>
#include <utility>

namespace greybox {

// Bipartite attribute/class graph. Nodes are identified by (side, name), so
// an attribute and a class may share a name without colliding.
struct KnowledgeGraph {
  std::set<std::string> attribute_nodes;
  std::set<std::string> class_nodes;
  std::set<std::pair<std::string, std::string>> edges;  // (attribute, class)

  void add_attribute(const std::string& name) { attribute_nodes.insert(name); }
  void add_class(const std::string& name) { class_nodes.insert(name); }
  void add_edge(const std::string& attribute, const std::string& cls) {
    attribute_nodes.insert(attribute);
    class_nodes.insert(cls);
    edges.emplace(attribute, cls);
  }
  bool has_edge(const std::string& attribute, const std::string& cls) const {
    return edges.contains({attribute, cls});
  }

  std::size_t node_count() const noexcept { return attribute_nodes.size() + class_nodes.size(); }
  std::size_t edge_count() const noexcept { return edges.size(); }
  bool empty() const noexcept { return node_count() == 0; }

  bool operator==(const KnowledgeGraph&) const = default;
};

}  // namespace greybox
