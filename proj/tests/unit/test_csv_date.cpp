#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "fincon/csv.hpp"
#include "fincon/date.hpp"
#include "fincon/error.hpp"

using namespace fincon;

TEST(YearMonth, ParsesBothNotations) {
  EXPECT_EQ(YearMonth::parse("2008-09"), YearMonth(2008, 9));
  EXPECT_EQ(YearMonth::parse("2008m9"), YearMonth(2008, 9));
  EXPECT_EQ(YearMonth::parse("2008m09"), YearMonth(2008, 9));
  EXPECT_THROW(YearMonth::parse("2008-13"), ValidationError);
  EXPECT_THROW(YearMonth::parse("08-01"), ValidationError);
  EXPECT_THROW(YearMonth::parse("2008/01"), ValidationError);
}

TEST(YearMonth, Arithmetic) {
  const YearMonth a(1994, 1);
  EXPECT_EQ((a + 340).to_string(), "2022-05");
  EXPECT_EQ(YearMonth(2022, 5) - a, 340);
  EXPECT_EQ(YearMonth(2010, 1) - 1, YearMonth(2009, 12));
  EXPECT_LT(YearMonth(2009, 12), YearMonth(2010, 1));
  EXPECT_EQ(YearMonth::from_ordinal(a.ordinal()), a);
}

TEST(DatePeriod, ContainsIsInclusive) {
  const DatePeriod p{"gfc", {2008, 9}, {2009, 6}};
  EXPECT_TRUE(p.contains({2008, 9}));
  EXPECT_TRUE(p.contains({2009, 6}));
  EXPECT_FALSE(p.contains({2009, 7}));
  EXPECT_FALSE(p.contains({2008, 8}));
}

TEST(Csv, QuotesTrimAndLineNumbers) {
  std::istringstream in("a, b ,c\n\n1,\"x, y\",3\n4,5,6\n");
  const CsvTable t = read_csv(in);
  ASSERT_EQ(t.header, (std::vector<std::string>{"a", "b", "c"}));
  ASSERT_EQ(t.rows.size(), 2u);
  EXPECT_EQ(t.lines[1], 4u);
  EXPECT_EQ(t.rows[0][1], "x, y");
  EXPECT_EQ(t.lines[0], 3u);
  EXPECT_EQ(t.column("c"), 2);
  EXPECT_EQ(t.column("zz"), -1);
}

TEST(Csv, RaggedRowsAreRejected) {
  std::istringstream in("a,b\n1,2,3\n");
  EXPECT_THROW(read_csv(in), ValidationError);
}

TEST(Csv, NumbersAndMissingTokens) {
  EXPECT_TRUE(std::isnan(parse_number("NA")));
  EXPECT_TRUE(std::isnan(parse_number("")));
  EXPECT_TRUE(std::isnan(parse_number("nan")));
  EXPECT_DOUBLE_EQ(parse_number("-0.75"), -0.75);
  EXPECT_DOUBLE_EQ(parse_number("1e-3"), 1e-3);
  EXPECT_THROW(parse_number("1.2.3"), ValidationError);
  EXPECT_THROW(parse_number("abc"), ValidationError);
}

TEST(Csv, FormatRoundTrips) {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-12, 12345.678, 0.0}) {
    EXPECT_EQ(std::stod(format_number(v)), v);
  }
  EXPECT_EQ(format_number(std::nan("")), "NA");
  EXPECT_EQ(format_number(0.123456, 3), "0.123");
}
