#include <gtest/gtest.h>

#include <map>
#include <set>

#include "../support/fixtures.hpp"
#include "greybox/kb.hpp"
#include "greybox/synth.hpp"

namespace greybox {
namespace {

Sample sample_with(std::string id, ClassId label, std::vector<AttributeId> attrs) {
  Sample s;
  s.id = std::move(id);
  s.label = label;
  s.height = 8;
  s.width = 8 * static_cast<int>(std::max<std::size_t>(attrs.size(), 1));
  int x = 0;
  for (AttributeId a : attrs) {
    s.boxes.push_back({a, x, 0, 4, 4});
    x += 8;
  }
  s.gt_segmap = rasterize_bboxes(s.boxes, s.height, s.width);
  return s;
}

TEST(ExtractKb, SingleSample) {
  TripleDataset ds;
  ds.attributes = AttributeVocabulary::from_names({"a"});
  ds.classes = ClassVocabulary::from_names({"c"});
  ds.samples.push_back(sample_with("x", 0, {1}));
  const auto kb = extract_kb(ds);
  ASSERT_EQ(kb.tbox().size(), 1u);
  EXPECT_EQ(kb.tbox()[0], Triple::is_part_of("a", "c"));
  ASSERT_EQ(kb.abox().size(), 2u);
  EXPECT_EQ(kb.abox()[0], Triple::has_label("x", "c"));
  EXPECT_EQ(kb.abox()[1], Triple::has_attributes("x", {"a"}));
}

TEST(ExtractKb, ExclusiveAttributeLinksToOneClass) {
  const auto expert = testing::monumai_kb();
  const auto ds = synth_generate(expert, 10, {}, 3);
  const auto kb = extract_kb(ds);
  std::vector<Triple> serliana;
  for (const auto& t : kb.tbox()) {
    if (t.subject == "Serliana") serliana.push_back(t);
  }
  ASSERT_EQ(serliana.size(), 1u);
  EXPECT_EQ(serliana[0].object_name(), "Renaissance Monument");
}

TEST(ExtractKb, MinSupportDropsRareLinks) {
  TripleDataset ds;
  ds.attributes = AttributeVocabulary::from_names({"a", "b"});
  ds.classes = ClassVocabulary::from_names({"c"});
  ds.samples.push_back(sample_with("x", 0, {1, 2}));
  ds.samples.push_back(sample_with("y", 0, {1}));
  // Support of b in c is 1/2.
  EXPECT_EQ(extract_kb(ds, 0.6).tbox().size(), 1u);
  EXPECT_EQ(extract_kb(ds, 0.5).tbox().size(), 2u);
  EXPECT_THROW(extract_kb(ds, 1.5), ValidationError);
  EXPECT_THROW(extract_kb(TripleDataset{}), ValidationError);
}

TEST(ExtractKb, MatchesCooccurrenceOracleAndShrinksWithSupport) {
  const auto expert = testing::monumai_kb();
  SynthNoiseConfig noise;
  noise.p_omit = 0.4;
  const auto ds = synth_generate(expert, 20, noise, 9);
  std::set<std::pair<std::string, std::string>> oracle_edges;
  std::map<std::pair<AttributeId, ClassId>, int> support;
  std::map<ClassId, int> per_class;
  for (const auto& s : ds.samples) {
    ++per_class[s.label];
    std::set<AttributeId> seen;
    for (const auto& b : s.boxes) seen.insert(b.attribute);
    for (AttributeId a : seen) {
      oracle_edges.emplace(ds.attributes.name(a), ds.classes.name(s.label));
      ++support[{a, s.label}];
    }
  }
  const auto kb = extract_kb(ds);
  EXPECT_EQ(kb_to_graph(kb).edges, oracle_edges);
  EXPECT_EQ(kb.abox().size(), 2 * ds.samples.size());

  std::size_t previous = kb.tbox().size();
  for (double ms : {0.2, 0.5, 0.7, 0.9, 1.0}) {
    const auto shrunk = extract_kb(ds, ms);
    std::size_t expected = 0;
    for (const auto& [key, n] : support) {
      expected += static_cast<double>(n) / per_class[key.second] >= ms ? 1 : 0;
    }
    EXPECT_EQ(shrunk.tbox().size(), expected) << ms;
    EXPECT_LE(shrunk.tbox().size(), previous);
    previous = shrunk.tbox().size();
  }
}

TEST(KnowledgeBase, RejectsDuplicatesAndEmptyNames) {
  KnowledgeBase kb;
  kb.add(Triple::is_part_of("a", "c"));
  EXPECT_THROW(kb.add(Triple::is_part_of("a", "c")), ValidationError);
  EXPECT_THROW(kb.add(Triple::is_part_of("", "c")), ValidationError);
  EXPECT_THROW(kb.add(Triple::has_label("x", "")), ValidationError);
  EXPECT_NO_THROW(kb.add(Triple::has_attributes("x", {})));
}

TEST(KbText, EmptyRoundTrip) {
  const KnowledgeBase empty;
  EXPECT_EQ(serialize_kb(empty), "");
  EXPECT_EQ(parse_kb(""), empty);
}

TEST(KbText, MonumaiFixtureRoundTrips) {
  const auto kb = testing::monumai_kb();
  EXPECT_EQ(kb.tbox().size(), 18u);
  EXPECT_TRUE(kb.abox().empty());
  EXPECT_EQ(parse_kb(serialize_kb(kb)), kb);
  EXPECT_EQ(kb.tbox()[12], Triple::is_part_of("Porthole Arch", "Renaissance Monument"));
}

TEST(KbText, AboxRoundTrips) {
  KnowledgeBase kb;
  kb.add(Triple::is_part_of("a b", "c \"q\""));
  kb.add(Triple::has_label("s1", "c \"q\""));
  kb.add(Triple::has_attributes("s1", {"a b", "d"}));
  kb.add(Triple::has_attributes("s2", {}));
  const auto text = serialize_kb(kb);
  EXPECT_NE(text.find("(\"s1\", hasAttributes, [\"a b\", \"d\"])"), std::string::npos);
  EXPECT_EQ(parse_kb(text), kb);
}

TEST(KbText, UnknownPredicateIsAParseError) {
  try {
    parse_kb("(\"a\", isPartOf, \"b\")\n(x, partOf, y)\n", "kb");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
    EXPECT_NE(std::string(e.what()).find("partOf"), std::string::npos);
  }
  EXPECT_THROW(parse_kb("(\"a\", isPartOf)"), ParseError);
  EXPECT_THROW(parse_kb("(\"a\", isPartOf, \"b\""), ParseError);
  EXPECT_THROW(parse_kb("(\"a\", isPartOf, [\"b\"])"), ParseError);
}

TEST(KbGraph, MonumaiShape) {
  const auto g = kb_to_graph(testing::monumai_kb());
  EXPECT_EQ(g.attribute_nodes.size(), 15u);
  EXPECT_EQ(g.class_nodes.size(), 4u);
  EXPECT_EQ(g.edge_count(), 18u);
  EXPECT_TRUE(g.has_edge("Rounded Arch", "Baroque Monument"));
  EXPECT_TRUE(g.has_edge("Rounded Arch", "Renaissance Monument"));
}

TEST(KbGraph, EmptyAndSingle) {
  EXPECT_TRUE(kb_to_graph(KnowledgeBase{}).empty());
  KnowledgeBase kb;
  kb.add(Triple::is_part_of("a", "c"));
  const auto g = kb_to_graph(kb);
  EXPECT_EQ(g.edge_count(), 1u);
  EXPECT_EQ(g.node_count(), 2u);
}

TEST(KbVocabulary, FirstAppearanceOrder) {
  const auto [attrs, classes] = derive_vocabularies(testing::monumai_kb());
  EXPECT_EQ(attrs.size(), 15u);
  EXPECT_EQ(attrs.name(1), "Ogee Arch");
  EXPECT_EQ(attrs.name(10), "Rounded Arch");
  EXPECT_EQ(attrs.name(15), "Triangular Pediment");
  EXPECT_EQ(classes.names(), (std::vector<std::string>{"Gothic Monument", "Hispanic-Muslim Monument",
                                                        "Baroque Monument", "Renaissance Monument"}));
  const auto links = class_links(testing::monumai_kb(), attrs, classes);
  EXPECT_EQ(links[1], (std::vector<AttributeId>{5, 6, 7}));
  EXPECT_EQ(links[3], (std::vector<AttributeId>{10, 11, 12, 13, 14, 15}));
}

}  // namespace
}  // namespace greybox
