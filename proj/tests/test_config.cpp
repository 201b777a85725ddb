#include "degcz/config.hpp"

#include <gtest/gtest.h>

using namespace degcz;

TEST(Config, SectionsInlineTablesAndLists) {
    Config c = Config::parse(R"(
seed = 7   # trailing comment
example = {variant = plain, n = 2, eps = 0.5}
[sweep]
rho = [2, 3, 3.6]
name = "a # b"
)");
    EXPECT_EQ(c.get_u64("seed", 0), 7u);
    EXPECT_EQ(c.get("example.variant"), "plain");
    EXPECT_DOUBLE_EQ(c.get_double("example.eps"), 0.5);
    EXPECT_EQ(c.get_doubles("sweep.rho", {}), (std::vector<double>{2.0, 3.0, 3.6}));
    EXPECT_EQ(c.get("sweep.name"), "a # b");
}

TEST(Config, MergeOverridesAndHashIsOrderFree) {
    Config a = Config::parse("x = 1\ny = 2");
    Config b = Config::parse("y = 2\nx = 1");
    EXPECT_EQ(a.hash(), b.hash());
    a.merge(Config::parse("x = 5"));
    EXPECT_DOUBLE_EQ(a.get_double("x"), 5.0);
    EXPECT_NE(a.hash(), b.hash());
    EXPECT_EQ(a.one_line(), "x=5; y=2");
}

TEST(Config, Errors) {
    EXPECT_THROW(Config::parse("= 3"), InvalidInput);
    EXPECT_THROW(Config::parse("a = {b = 1"), InvalidInput);
    Config c = Config::parse("a = nope");
    EXPECT_THROW(c.get_double("a"), InvalidInput);
    EXPECT_THROW(c.get("missing"), InvalidInput);
}

TEST(Config, DoubleFormattingRoundTrips) {
    for (double v : {0.1, 1.0 / 3.0, 1e-300, 6.02e23, -2.5}) EXPECT_EQ(std::stod(format_double(v)), v);
    EXPECT_EQ(format_double(2.0), "2");
    EXPECT_EQ(hex64(fnv1a64("")), "cbf29ce484222325");
}
