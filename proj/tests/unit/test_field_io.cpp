#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>
#include <sstream>

#include "oracles.hpp"
#include "sparfima/error.hpp"
#include "sparfima/field_io.hpp"
#include "sparfima/format.hpp"

using namespace sparfima;

namespace {

LatticeField parse(const std::string& text, FieldFormat f, bool standardize = false) {
  std::istringstream in(text);
  return read_field(in, f, standardize);
}

std::size_t parse_error_line(const std::string& text, FieldFormat f) {
  try {
    parse(text, f);
  } catch (const ParseError& e) {
    return e.line();
  }
  ADD_FAILURE() << "no parse error for: " << text;
  return 0;
}

}  // namespace

TEST(FieldIo, DenseIsRowMajor) {
  const LatticeField y = parse("1,2\n3,4\n", FieldFormat::dense_csv);
  ASSERT_TRUE(y.sites.grid().has_value());
  EXPECT_EQ(y.sites.grid()->rows, 2u);
  EXPECT_EQ(y.sites.grid()->cols, 2u);
  EXPECT_EQ(y.values, (Eigen::VectorXd(4) << 1, 2, 3, 4).finished());
}

TEST(FieldIo, LongAcceptsHeaderAndAnyOrder) {
  const LatticeField y = parse("row,col,value\n1,0,3\n0,1,2\n0,0,1\n1,1,4\n", FieldFormat::long_csv);
  EXPECT_EQ(y.values, (Eigen::VectorXd(4) << 1, 2, 3, 4).finished());
  EXPECT_EQ(y.sites.grid()->cols, 2u);
}

TEST(FieldIo, MalformedInputReportsLine) {
  EXPECT_EQ(parse_error_line("1,2\n3\n", FieldFormat::dense_csv), 2u);
  EXPECT_EQ(parse_error_line("1,2\n3,abc\n", FieldFormat::dense_csv), 2u);
  EXPECT_EQ(parse_error_line("0,0,1\n0,1,2\n0,0,5\n", FieldFormat::long_csv), 3u);
  EXPECT_EQ(parse_error_line("0,0,1\n0,1\n", FieldFormat::long_csv), 2u);
  EXPECT_THROW(parse("0,0,1\n1,1,2\n", FieldFormat::long_csv), Error);  // missing cells
}

TEST(FieldIo, UnknownFormatName) {
  EXPECT_THROW(parse_field_format("wide"), Error);
  EXPECT_EQ(parse_field_format("dense"), FieldFormat::dense_csv);
}

TEST(FieldIo, StandardizeUsesSampleSd) {
  const LatticeField y = parse("1,2\n3,4\n", FieldFormat::dense_csv, true);
  EXPECT_NEAR(y.values.mean(), 0.0, 1e-15);
  EXPECT_NEAR(y.values.squaredNorm() / 3.0, 1.0, 1e-14);
  EXPECT_THROW(parse("2,2\n2,2\n", FieldFormat::dense_csv, true), Error);
}

TEST(FieldIo, LongCsvRoundTripIsBitExact) {
  Eigen::VectorXd v(6);
  v << 0.1, -1.0 / 3.0, 1e-300, 6.02214076e23, -0.0, std::nextafter(1.0, 2.0);
  const LatticeField field(SiteSet::regular_grid(2, 3), v);
  const auto dir = oracle::scratch_dir("field");
  const std::string path = (dir / "f.csv").string();
  write_field_csv(field, path);
  const LatticeField back = load_field(path, FieldFormat::long_csv);
  ASSERT_EQ(back.size(), 6u);
  EXPECT_EQ(std::memcmp(back.values.data(), v.data(), sizeof(double) * 6), 0);
  std::filesystem::remove_all(dir);
}

TEST(FieldIo, MissingFileIsIoError) {
  try {
    load_field("/nonexistent/field.csv", FieldFormat::long_csv);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::io);
  }
}

TEST(Format, SeventeenDigitsAndNa) {
  EXPECT_EQ(format_number(0.1), "0.10000000000000001");
  EXPECT_EQ(format_number(2.0), "2");
  EXPECT_EQ(format_number(std::nan("")), "NA");
}
