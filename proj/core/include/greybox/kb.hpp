#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "greybox/dataset.hpp"
#include "greybox/graph.hpp"

namespace greybox {

enum class Predicate { kIsPartOf, kHasLabel, kHasAttributes };

std::string_view predicate_name(Predicate p);

// (subject, predicate, object). hasAttributes carries the whole attribute
// name list in one triple; the other predicates carry a single name.
struct Triple {
  std::string subject;
  Predicate predicate = Predicate::kIsPartOf;
  std::variant<std::string, std::vector<std::string>> object;

  static Triple is_part_of(std::string attribute, std::string cls);
  static Triple has_label(std::string sample, std::string cls);
  static Triple has_attributes(std::string sample, std::vector<std::string> attributes);

  // Single-name object; throws for hasAttributes.
  const std::string& object_name() const;
  const std::vector<std::string>& object_list() const;

  bool operator==(const Triple&) const = default;
};

// TBox: isPartOf axioms (attribute -> class), no duplicates, insertion order
// kept. ABox: per-sample hasLabel / hasAttributes assertions.
class KnowledgeBase {
 public:
  const std::vector<Triple>& tbox() const noexcept { return tbox_; }
  const std::vector<Triple>& abox() const noexcept { return abox_; }

  // Routes by predicate. Throws ValidationError on a duplicate TBox triple or
  // an empty subject/object.
  void add(Triple t);

  bool empty() const noexcept { return tbox_.empty() && abox_.empty(); }
  bool operator==(const KnowledgeBase&) const = default;

 private:
  std::vector<Triple> tbox_;
  std::vector<Triple> abox_;
};

// Triplify a dataset. (attr, isPartOf, class) is kept when the attribute
// occurs in a fraction >= min_support of that class's samples (and at least
// once). TBox ordered by class id then attribute id; ABox in sample order.
KnowledgeBase extract_kb(const TripleDataset& ds, double min_support = 0.0);

// One triple per line: ("subject", predicate, "object") or
// ("subject", hasAttributes, ["a", "b"]). TBox lines come first.
std::string serialize_kb(const KnowledgeBase& kb);
KnowledgeBase parse_kb(std::string_view text, const std::string& source = "<kb>");
KnowledgeBase load_kb(const std::filesystem::path& path);
void save_kb(const std::filesystem::path& path, const KnowledgeBase& kb);

KnowledgeGraph kb_to_graph(const KnowledgeBase& kb);

// Vocabularies in order of first appearance in the TBox.
std::pair<AttributeVocabulary, ClassVocabulary> derive_vocabularies(const KnowledgeBase& kb);

// Attribute ids linked to each class id by the TBox.
std::vector<std::vector<AttributeId>> class_links(const KnowledgeBase& kb,
                                                  const AttributeVocabulary& attributes,
                                                  const ClassVocabulary& classes);

}  // namespace greybox
