#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "greybox/random.hpp"
#include "greybox/text.hpp"

namespace greybox {
namespace {

TEST(Text, TokenizeQuotedNames) {
  EXPECT_EQ(text::tokenize("attribute 3 \"Ogee Arch\"  x"),
            (std::vector<std::string>{"attribute", "3", "Ogee Arch", "x"}));
  EXPECT_EQ(text::tokenize(R"("a \"b\" \\c")"), (std::vector<std::string>{"a \"b\" \\c"}));
  EXPECT_THROW(text::tokenize("\"open"), std::invalid_argument);
  EXPECT_EQ(text::quote("a\"b"), R"("a\"b")");
}

TEST(Text, DoublesRoundTrip) {
  for (double v : {0.1, -1e-300, 1.0 / 3.0, 123456.789, 0.0, std::numeric_limits<double>::max()}) {
    EXPECT_EQ(text::parse_double(text::format_double(v)), v);
  }
  EXPECT_EQ(text::format_fixed(0.13, 4), "0.1300");
  EXPECT_EQ(text::format_fixed(-0.00001, 4), "0.0000");
  EXPECT_EQ(text::format_fixed(-0.5, 2), "-0.50");
  EXPECT_THROW(text::parse_double("1.5x"), std::invalid_argument);
  EXPECT_THROW(text::parse_double(""), std::invalid_argument);
  EXPECT_THROW(text::parse_int("12.0"), std::invalid_argument);
  EXPECT_EQ(text::parse_int("-42"), -42);
}

TEST(Rng, BoundedDrawsStayInRangeAndAreReproducible) {
  Rng a(5);
  Rng b(5);
  for (int i = 0; i < 1000; ++i) {
    const auto v = a.uniform_int(-3, 3);
    ASSERT_GE(v, -3);
    ASSERT_LE(v, 3);
    ASSERT_EQ(v, b.uniform_int(-3, 3));
    const double u = a.uniform01();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    ASSERT_EQ(u, b.uniform01());
  }
  EXPECT_NE(derive_seed(1, "s000001"), derive_seed(1, "s000002"));
  EXPECT_NE(derive_seed(1, "s000001"), derive_seed(2, "s000001"));
  EXPECT_EQ(derive_seed(1, "s000001"), derive_seed(1, "s000001"));
}

}  // namespace
}  // namespace greybox
