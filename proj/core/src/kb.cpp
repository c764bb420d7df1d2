#include "greybox/kb.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

#include "greybox/text.hpp"

namespace greybox {

namespace {

// Cursor over one line of KB text.
class LineScanner {
 public:
  LineScanner(std::string_view line, const std::string& source, std::size_t line_no)
      : line_(line), source_(source), line_no_(line_no) {}

  void skip_ws() {
    while (pos_ < line_.size() && std::isspace(static_cast<unsigned char>(line_[pos_]))) ++pos_;
  }

  bool peek(char c) {
    skip_ws();
    return pos_ < line_.size() && line_[pos_] == c;
  }

  void expect(char c) {
    if (!peek(c)) fail(std::string("expected '") + c + "'");
    ++pos_;
  }

  // Quoted string, or bare text up to the next ',', ')' or ']'.
  std::string name() {
    skip_ws();
    if (pos_ < line_.size() && line_[pos_] == '"') {
      ++pos_;
      std::string out;
      while (pos_ < line_.size()) {
        char c = line_[pos_++];
        if (c == '\\' && pos_ < line_.size()) {
          out.push_back(line_[pos_++]);
        } else if (c == '"') {
          return out;
        } else {
          out.push_back(c);
        }
      }
      fail("unterminated quoted string");
    }
    const auto start = pos_;
    while (pos_ < line_.size() && line_[pos_] != ',' && line_[pos_] != ')' && line_[pos_] != ']') {
      ++pos_;
    }
    auto bare = text::trim(line_.substr(start, pos_ - start));
    if (bare.empty()) fail("empty name");
    return std::string(bare);
  }

  void expect_end() {
    skip_ws();
    if (pos_ != line_.size()) fail("trailing characters after triple");
  }

  [[noreturn]] void fail(const std::string& what) const { throw ParseError(source_, line_no_, what); }

 private:
  std::string_view line_;
  const std::string& source_;
  std::size_t line_no_;
  std::size_t pos_ = 0;
};

std::string render_triple(const Triple& t) {
  std::string out = "(" + text::quote(t.subject) + ", " + std::string(predicate_name(t.predicate)) + ", ";
  if (t.predicate == Predicate::kHasAttributes) {
    out += "[";
    const auto& list = t.object_list();
    for (std::size_t i = 0; i < list.size(); ++i) {
      if (i) out += ", ";
      out += text::quote(list[i]);
    }
    out += "]";
  } else {
    out += text::quote(t.object_name());
  }
  out += ")";
  return out;
}

}  // namespace

std::string_view predicate_name(Predicate p) {
  switch (p) {
    case Predicate::kIsPartOf:
      return "isPartOf";
    case Predicate::kHasLabel:
      return "hasLabel";
    case Predicate::kHasAttributes:
      return "hasAttributes";
  }
  return "?";
}

Triple Triple::is_part_of(std::string attribute, std::string cls) {
  return Triple{std::move(attribute), Predicate::kIsPartOf, std::move(cls)};
}

Triple Triple::has_label(std::string sample, std::string cls) {
  return Triple{std::move(sample), Predicate::kHasLabel, std::move(cls)};
}

Triple Triple::has_attributes(std::string sample, std::vector<std::string> attributes) {
  return Triple{std::move(sample), Predicate::kHasAttributes, std::move(attributes)};
}

const std::string& Triple::object_name() const {
  if (const auto* s = std::get_if<std::string>(&object)) return *s;
  throw ValidationError("triple object is a list, not a single name");
}

const std::vector<std::string>& Triple::object_list() const {
  if (const auto* l = std::get_if<std::vector<std::string>>(&object)) return *l;
  throw ValidationError("triple object is a single name, not a list");
}

void KnowledgeBase::add(Triple t) {
  if (t.subject.empty()) throw ValidationError("triple subject is empty");
  const bool list_object = std::holds_alternative<std::vector<std::string>>(t.object);
  if (list_object != (t.predicate == Predicate::kHasAttributes)) {
    throw ValidationError("only hasAttributes takes a list object");
  }
  if (list_object) {
    for (const auto& n : t.object_list()) {
      if (n.empty()) throw ValidationError("empty attribute name in hasAttributes list");
    }
  } else if (t.object_name().empty()) {
    throw ValidationError("triple object is empty");
  }

  if (t.predicate == Predicate::kIsPartOf) {
    if (std::find(tbox_.begin(), tbox_.end(), t) != tbox_.end()) {
      throw ValidationError("duplicate TBox triple (" + t.subject + ", isPartOf, " +
                            t.object_name() + ")");
    }
    tbox_.push_back(std::move(t));
  } else {
    abox_.push_back(std::move(t));
  }
}

KnowledgeBase extract_kb(const TripleDataset& ds, double min_support) {
  if (ds.samples.empty()) throw ValidationError("cannot extract a knowledge base from an empty dataset");
  if (!(min_support >= 0.0 && min_support <= 1.0)) {
    throw ValidationError("min_support must lie in [0, 1]");
  }
  const VectorizeConfig presence{0.0, 1};
  const auto k = ds.classes.size();
  const auto n_attr = ds.attributes.size();
  std::vector<std::size_t> class_size(k, 0);
  std::vector<std::vector<std::size_t>> support(k, std::vector<std::size_t>(n_attr, 0));

  KnowledgeBase kb;
  std::vector<Triple> abox;
  for (const auto& s : ds.samples) {
    const auto z = vectorize(s.gt_segmap, ds.attributes, presence);
    const auto label = static_cast<std::size_t>(s.label);
    ++class_size[label];
    std::vector<std::string> names;
    for (AttributeId id : z.ids()) {
      ++support[label][static_cast<std::size_t>(id - 1)];
      names.push_back(ds.attributes.name(id));
    }
    abox.push_back(Triple::has_label(s.id, ds.classes.name(s.label)));
    abox.push_back(Triple::has_attributes(s.id, std::move(names)));
  }

  for (std::size_t c = 0; c < k; ++c) {
    if (class_size[c] == 0) continue;
    for (std::size_t j = 0; j < n_attr; ++j) {
      const auto count = support[c][j];
      if (count == 0) continue;
      if (static_cast<double>(count) < min_support * static_cast<double>(class_size[c])) continue;
      kb.add(Triple::is_part_of(ds.attributes.names()[j], ds.classes.names()[c]));
    }
  }
  for (auto& t : abox) kb.add(std::move(t));
  return kb;
}

std::string serialize_kb(const KnowledgeBase& kb) {
  std::string out;
  for (const auto& t : kb.tbox()) out += render_triple(t) + "\n";
  for (const auto& t : kb.abox()) out += render_triple(t) + "\n";
  return out;
}

KnowledgeBase parse_kb(std::string_view body, const std::string& source) {
  KnowledgeBase kb;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < body.size()) {
    auto end = body.find('\n', start);
    if (end == std::string_view::npos) end = body.size();
    auto line = text::trim(body.substr(start, end - start));
    start = end + 1;
    ++line_no;
    if (line.empty() || line.front() == '#') continue;

    LineScanner scan(line, source, line_no);
    scan.expect('(');
    Triple t;
    t.subject = scan.name();
    scan.expect(',');
    const auto pred = scan.name();
    if (pred == "isPartOf") {
      t.predicate = Predicate::kIsPartOf;
    } else if (pred == "hasLabel") {
      t.predicate = Predicate::kHasLabel;
    } else if (pred == "hasAttributes") {
      t.predicate = Predicate::kHasAttributes;
    } else {
      scan.fail("unknown predicate '" + pred + "'");
    }
    scan.expect(',');
    if (t.predicate == Predicate::kHasAttributes) {
      std::vector<std::string> list;
      scan.expect('[');
      if (!scan.peek(']')) {
        list.push_back(scan.name());
        while (scan.peek(',')) {
          scan.expect(',');
          list.push_back(scan.name());
        }
      }
      scan.expect(']');
      t.object = std::move(list);
    } else {
      t.object = scan.name();
    }
    scan.expect(')');
    scan.expect_end();
    try {
      kb.add(std::move(t));
    } catch (const ValidationError& e) {
      scan.fail(e.what());
    }
  }
  return kb;
}

KnowledgeBase load_kb(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_kb(buf.str(), path.string());
}

void save_kb(const std::filesystem::path& path, const KnowledgeBase& kb) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << serialize_kb(kb);
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

KnowledgeGraph kb_to_graph(const KnowledgeBase& kb) {
  KnowledgeGraph g;
  for (const auto& t : kb.tbox()) g.add_edge(t.subject, t.object_name());
  return g;
}

std::pair<AttributeVocabulary, ClassVocabulary> derive_vocabularies(const KnowledgeBase& kb) {
  std::vector<std::string> attrs;
  std::vector<std::string> classes;
  for (const auto& t : kb.tbox()) {
    if (std::find(attrs.begin(), attrs.end(), t.subject) == attrs.end()) attrs.push_back(t.subject);
    const auto& c = t.object_name();
    if (std::find(classes.begin(), classes.end(), c) == classes.end()) classes.push_back(c);
  }
  return {AttributeVocabulary::from_names(attrs), ClassVocabulary::from_names(classes)};
}

std::vector<std::vector<AttributeId>> class_links(const KnowledgeBase& kb,
                                                  const AttributeVocabulary& attributes,
                                                  const ClassVocabulary& classes) {
  std::vector<std::vector<AttributeId>> links(classes.size());
  std::vector<std::string> unknown;
  for (const auto& t : kb.tbox()) {
    auto a = attributes.find(t.subject);
    auto c = classes.find(t.object_name());
    if (!a) unknown.push_back(t.subject);
    if (!c) unknown.push_back(t.object_name());
    if (a && c) links[static_cast<std::size_t>(*c)].push_back(*a);
  }
  if (!unknown.empty()) {
    std::string msg = "knowledge base names not found in vocabulary:";
    for (const auto& n : unknown) msg += " '" + n + "'";
    throw ValidationError(msg);
  }
  for (auto& l : links) std::sort(l.begin(), l.end());
  return links;
}

}  // namespace greybox
