#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <set>
#include <sstream>

#include "../support/fixtures.hpp"
#include "../support/oracles.hpp"
#include "greybox/dataset.hpp"

namespace greybox {
namespace {

constexpr const char* kSmallManifest = R"(# two samples
greybox-manifest 1
attribute 1 "Ogee Arch"
attribute 2 "Pointed Arch"
attribute 3 "Flat Arch"
class 0 "Gothic Monument"
class 1 "Hispanic-Muslim Monument"
sample s2 1 16x16 3,0,0,4,4
sample s1 0 16x16 1,2,2,5,5 2,10,10,3,3
)";

TripleDataset parse(const std::string& body) {
  std::istringstream in(body);
  return parse_manifest(in, "test");
}

TEST(Vocabulary, RejectsGapsAndDuplicates) {
  EXPECT_THROW(AttributeVocabulary({{1, "a"}, {3, "b"}}), ValidationError);
  EXPECT_THROW(AttributeVocabulary({{0, "a"}}), ValidationError);
  EXPECT_THROW(AttributeVocabulary({{1, "a"}, {2, "a"}}), ValidationError);
  EXPECT_THROW(ClassVocabulary({{0, ""}}), ValidationError);
  const AttributeVocabulary v({{2, "b"}, {1, "a"}});
  EXPECT_EQ(v.name(1), "a");
  EXPECT_EQ(v.find("b"), 2);
  EXPECT_FALSE(v.contains(0));
}

TEST(Manifest, LoadsSamplesSortedById) {
  const auto ds = parse(kSmallManifest);
  ASSERT_EQ(ds.samples.size(), 2u);
  EXPECT_EQ(ds.attributes.size(), 3u);
  EXPECT_EQ(ds.classes.size(), 2u);
  EXPECT_EQ(ds.samples[0].id, "s1");
  EXPECT_EQ(ds.samples[1].id, "s2");
  EXPECT_EQ(ds.samples[0].boxes.size(), 2u);
  EXPECT_EQ(ds.samples[0].gt_segmap.at(3, 3), 1);
  EXPECT_NO_THROW(ds.validate());
}

TEST(Manifest, UnknownAttributeNamesTheSample) {
  std::string body = kSmallManifest;
  body += "sample bad-one 0 16x16 99,0,0,2,2\n";
  try {
    parse(body);
    FAIL() << "expected a validation error";
  } catch (const ParseError&) {
    FAIL() << "unknown ids are validation errors, not parse errors";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("bad-one"), std::string::npos);
  }
}

TEST(Manifest, MalformedLineReportsLineNumber) {
  std::string body = kSmallManifest;
  body += "sample s3 0 16by16\n";
  try {
    parse(body);
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 10u);
  }
  EXPECT_THROW(parse("attribute 1 \"x\"\n"), ParseError);
  EXPECT_THROW(parse(""), ParseError);
}

TEST(Manifest, BoxOutOfBoundsRejected) {
  std::string body = kSmallManifest;
  body += "sample s9 0 16x16 1,14,0,4,4\n";
  EXPECT_THROW(parse(body), ValidationError);
}

TEST(Manifest, MonumaiShapedVocabulary) {
  std::ostringstream body;
  body << "greybox-manifest 1\n";
  for (int a = 1; a <= 15; ++a) body << "attribute " << a << " \"attr " << a << "\"\n";
  for (int c = 0; c < 4; ++c) body << "class " << c << " \"style " << c << "\"\n";
  body << "sample x 3 8x8 15,0,0,2,2\n";
  const auto ds = parse(body.str());
  EXPECT_EQ(ds.classes.size(), 4u);
  EXPECT_EQ(ds.attributes.size(), 15u);
}

TEST(Manifest, RoundTripsThroughSerialization) {
  const auto ds = parse(kSmallManifest);
  std::ostringstream out;
  write_manifest(out, ds);
  const auto again = parse(out.str());
  EXPECT_EQ(ds, again);
  std::ostringstream out2;
  write_manifest(out2, again);
  EXPECT_EQ(out.str(), out2.str());
}

TEST(Rasterize, EmptyBoxListIsBackground) {
  const auto map = rasterize_bboxes({}, 4, 5);
  for (auto id : map.labels()) EXPECT_EQ(id, kBackground);
}

TEST(Rasterize, SmallBoxInsideLargeBoxKeepsItsPixels) {
  const std::vector<BBox> boxes{{1, 0, 0, 10, 10}, {2, 3, 3, 2, 2}};
  const auto map = rasterize_bboxes(boxes, 12, 12);
  int twos = 0;
  int ones = 0;
  for (auto id : map.labels()) {
    twos += id == 2;
    ones += id == 1;
  }
  EXPECT_EQ(twos, 4);
  EXPECT_EQ(ones, 96);
  EXPECT_EQ(map.at(3, 3), 2);
  EXPECT_EQ(map.at(4, 4), 2);
  EXPECT_EQ(map.at(11, 11), kBackground);
}

TEST(Rasterize, EqualAreaTieGoesToLowestId) {
  // Two 2x2 boxes sharing pixel (row 1, col 1).
  const std::vector<BBox> boxes{{5, 1, 1, 2, 2}, {3, 0, 0, 2, 2}};
  const auto map = rasterize_bboxes(boxes, 4, 4);
  const auto expected = oracle::rasterize(boxes, 4, 4);
  EXPECT_EQ(expected[1 * 4 + 1], 3);
  EXPECT_EQ(std::vector<AttributeId>(map.labels().begin(), map.labels().end()), expected);
}

TEST(Rasterize, OutOfBoundsBoxRejected) {
  const std::vector<BBox> boxes{{1, 3, 0, 2, 2}};
  EXPECT_THROW(rasterize_bboxes(boxes, 4, 4), ValidationError);
  const std::vector<BBox> degenerate{{1, 0, 0, 0, 2}};
  EXPECT_THROW(rasterize_bboxes(degenerate, 4, 4), ValidationError);
}

std::vector<BBox> random_boxes(std::mt19937_64& gen, int h, int w, int n, int n_attr) {
  std::vector<BBox> boxes;
  for (int i = 0; i < n; ++i) {
    BBox b;
    b.attribute = static_cast<int>(gen() % static_cast<unsigned>(n_attr)) + 1;
    b.w = static_cast<int>(gen() % static_cast<unsigned>(w)) + 1;
    b.h = static_cast<int>(gen() % static_cast<unsigned>(h)) + 1;
    b.x = static_cast<int>(gen() % static_cast<unsigned>(w - b.w + 1));
    b.y = static_cast<int>(gen() % static_cast<unsigned>(h - b.h + 1));
    boxes.push_back(b);
  }
  return boxes;
}

TEST(Rasterize, MatchesPixelOracleAndIgnoresBoxOrder) {
  std::mt19937_64 gen(7);
  for (int trial = 0; trial < 200; ++trial) {
    auto boxes = random_boxes(gen, 12, 10, 1 + trial % 7, 5);
    const auto map = rasterize_bboxes(boxes, 12, 10);
    const std::vector<AttributeId> got(map.labels().begin(), map.labels().end());
    ASSERT_EQ(got, oracle::rasterize(boxes, 12, 10));
    std::shuffle(boxes.begin(), boxes.end(), gen);
    ASSERT_EQ(rasterize_bboxes(boxes, 12, 10), map);
  }
}

TEST(Vectorize, AllBackgroundIsZero) {
  const auto vocab = testing::generic_attributes(4);
  EXPECT_TRUE(vectorize(SegMap(3, 3), vocab).none());
}

TEST(Vectorize, PresentAttributesSetTheirBits) {
  const auto vocab = testing::generic_attributes(15);
  const std::vector<BBox> boxes{{1, 0, 0, 2, 2}, {3, 4, 0, 2, 2}, {4, 0, 4, 2, 2}};
  const auto z = vectorize(rasterize_bboxes(boxes, 8, 8), vocab);
  std::vector<int> bits;
  for (std::size_t j = 0; j < z.size(); ++j) bits.push_back(z.test(j));
  const std::vector<int> expected{1, 0, 1, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0};
  EXPECT_EQ(bits, expected);
}

TEST(Vectorize, LowConfidenceCellsDoNotCount) {
  const auto vocab = testing::generic_attributes(3);
  std::vector<AttributeId> labels(9, 0);
  std::vector<double> conf(9, 1.0);
  for (std::size_t i : {0u, 4u, 8u}) {
    labels[i] = 2;
    conf[i] = 0.4;
  }
  labels[1] = 1;
  SegMap map(3, 3, labels, conf);
  const VectorizeConfig cfg{0.5, 1};
  int qualifying = 0;
  for (std::size_t i = 0; i < 9; ++i) qualifying += (labels[i] == 2 && conf[i] >= cfg.tau);
  const auto z = vectorize(map, vocab, cfg);
  EXPECT_EQ(qualifying, 0);
  EXPECT_EQ(z.test(1), qualifying >= cfg.min_pixels);
  EXPECT_TRUE(z.test(0));
  EXPECT_TRUE(vectorize(map, vocab, {0.4, 3}).test(1));
  EXPECT_FALSE(vectorize(map, vocab, {0.4, 4}).test(1));
}

TEST(Vectorize, RejectsBadConfigAndUnknownIds) {
  const auto vocab = testing::generic_attributes(2);
  EXPECT_THROW(vectorize(SegMap(2, 2), vocab, {1.5, 1}), ValidationError);
  EXPECT_THROW(vectorize(SegMap(2, 2), vocab, {0.5, 0}), ValidationError);
  SegMap bad(1, 1, {7});
  EXPECT_THROW(vectorize(bad, vocab), ValidationError);
}

TEST(Vectorize, ComposedWithRasterizeSeesSurvivingBoxes) {
  std::mt19937_64 gen(11);
  const auto vocab = testing::generic_attributes(6);
  for (int trial = 0; trial < 200; ++trial) {
    const auto boxes = random_boxes(gen, 9, 9, 1 + trial % 8, 6);
    const auto z = vectorize(rasterize_bboxes(boxes, 9, 9), vocab, {0.0, 1});
    std::set<AttributeId> seen;
    for (auto id : oracle::rasterize(boxes, 9, 9)) {
      if (id) seen.insert(id);
    }
    const auto ids = z.ids();
    ASSERT_EQ(std::set<AttributeId>(ids.begin(), ids.end()), seen);
  }
}

TEST(Vectorize, RaisingTauNeverAddsBits) {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto vocab = testing::generic_attributes(5);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<AttributeId> labels(36);
    std::vector<double> conf(36);
    for (std::size_t i = 0; i < 36; ++i) {
      labels[i] = static_cast<AttributeId>(gen() % 6);
      conf[i] = unit(gen);
    }
    SegMap map(6, 6, labels, conf);
    AttributeVector prev = vectorize(map, vocab, {0.0, 1});
    EXPECT_EQ(vectorize(map, vocab, {0.0, 1}), prev);
    for (double tau = 0.1; tau <= 1.0; tau += 0.1) {
      const auto cur = vectorize(map, vocab, {tau, 1});
      for (std::size_t j = 0; j < cur.size(); ++j) {
        if (cur.test(j)) ASSERT_TRUE(prev.test(j));
      }
      prev = cur;
    }
  }
}

TEST(SegMapFile, RoundTripsWithConfidence) {
  SegMap map(2, 3, {0, 1, 2, 2, 0, 1}, std::vector<double>{1.0, 0.25, 0.125, 0.1, 0.0, 0.9});
  std::ostringstream labels;
  std::ostringstream conf;
  write_segmap(labels, map);
  write_confidence(conf, map);
  EXPECT_EQ(labels.str(), "2 3\n0 1 2\n2 0 1\n");
  std::istringstream lin(labels.str());
  std::istringstream cin(conf.str());
  SegMap back = parse_segmap(lin);
  back.set_confidence(parse_confidence(cin, 2, 3));
  EXPECT_EQ(back, map);
}

TEST(SegMapFile, RejectsMalformedGrids) {
  std::istringstream short_row("2 2\n1 1\n1\n");
  try {
    parse_segmap(short_row, "f");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
  std::istringstream missing_row("2 2\n1 1\n");
  EXPECT_THROW(parse_segmap(missing_row), ParseError);
  std::istringstream conf("1 1\n1.3\n");
  EXPECT_THROW(parse_confidence(conf, 1, 1), ParseError);
  std::istringstream shape("1 2\n0.5 0.5\n");
  EXPECT_THROW(parse_confidence(shape, 1, 1), ParseError);
}

TEST(CountRegions, UsesFourConnectivity) {
  // Diagonal neighbours are separate regions.
  SegMap map(3, 3, {1, 0, 1, 0, 1, 0, 2, 2, 0});
  const auto regions = count_regions(map);
  EXPECT_EQ(regions.at(1), 3);
  EXPECT_EQ(regions.at(2), 1);
}

TEST(Split, PartitionsDeterministically) {
  const auto ds = parse(kSmallManifest);
  const auto [train, test] = split_dataset(ds, 0.5, 3);
  EXPECT_EQ(train.samples.size() + test.samples.size(), 2u);
  EXPECT_EQ(test.samples.size(), 1u);
  const auto [train2, test2] = split_dataset(ds, 0.5, 3);
  EXPECT_EQ(test, test2);
}

}  // namespace
}  // namespace greybox
