#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "costot/error.hpp"
#include "costot/io.hpp"

using namespace costot;

namespace {

std::string parse_error_of(const std::string& text) {
  std::istringstream in(text);
  try {
    io::read_matrix_text(in);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::parse_error);
    return e.what();
  }
  return "";
}

}  // namespace

TEST(MatrixText, ReadsHeaderAndRows) {
  std::istringstream in("2 3\n1 2 3\n\n4 5 6.5\n");
  EXPECT_EQ(io::read_matrix_text(in), Matrix::from_rows({{1, 2, 3}, {4, 5, 6.5}}));
}

TEST(MatrixText, ErrorsNameTheLine) {
  EXPECT_NE(parse_error_of("2 2\n1 2\n3 x\n").find("line 3"), std::string::npos);
  EXPECT_NE(parse_error_of("2 2\n1 2 3\n3 4\n").find("line 2"), std::string::npos);
  EXPECT_NE(parse_error_of("2 2\n1 2\n").find("line"), std::string::npos);
  EXPECT_NE(parse_error_of("two 2\n").find("line 1"), std::string::npos);
  EXPECT_NE(parse_error_of("1 1\n0.5\n7\n").find("line 3"), std::string::npos);
  EXPECT_NE(parse_error_of("").find("line"), std::string::npos);
}

TEST(MatrixText, RoundTripIsExact) {
  std::mt19937_64 rng(51);
  std::normal_distribution<double> g;
  Matrix m(5, 4);
  for (auto& x : m.values()) x = g(rng) * 1e3;
  std::stringstream buf;
  io::write_matrix_text(buf, m);
  EXPECT_EQ(io::read_matrix_text(buf), m);
  std::stringstream csv;
  io::write_matrix_csv(csv, m);
  EXPECT_EQ(io::read_matrix_csv(csv), m);
}

TEST(MatrixCsv, ErrorsNameTheLine) {
  std::istringstream in("1,2\n3\n");
  try {
    io::read_matrix_csv(in);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
  }
}

TEST(FormatDouble, ShortestRoundTrip) {
  EXPECT_EQ(io::format_double(0.5), "0.5");
  EXPECT_EQ(io::format_double(0.1), "0.1");
  EXPECT_EQ(std::stod(io::format_double(1.0 / 3.0)), 1.0 / 3.0);
}

TEST(Grayscale, MinMaxAndConstant) {
  const std::vector<double> ramp{-1.0, 0.0, 1.0};
  EXPECT_EQ(io::to_grayscale(ramp), (std::vector<unsigned char>{0, 128, 255}));
  const std::vector<double> flat{0.3, 0.3};
  EXPECT_EQ(io::to_grayscale(flat), (std::vector<unsigned char>{128, 128}));
}

TEST(Pgm, HeaderAndBytes) {
  std::ostringstream out;
  const std::vector<unsigned char> px{0, 255, 128, 7};
  io::write_pgm(out, 2, 2, px);
  EXPECT_EQ(out.str(), std::string("P5\n2 2\n255\n") + std::string("\x00\xff\x80\x07", 4));
}

TEST(TraceAndHistory, Headers) {
  std::ostringstream t;
  io::write_trace_csv(t, std::vector<SinkhornTraceEntry>{{1, 0.1, 0.5, 0.25}});
  EXPECT_EQ(t.str(), "t,lambda,delta_v,distance\n1,0.1,0.5,0.25\n");
  std::ostringstream h;
  io::write_history_csv(h, std::vector<HistoryRow>{{0, 1.5, 0.25, 0.5}});
  EXPECT_EQ(h.str(), "step,ce,ot_distance,miou\n0,1.5,0.25,0.5\n");
}

TEST(Files, MissingFileIsIoError) {
  try {
    io::load_matrix_text("/nonexistent/cost.txt");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::io_error);
    EXPECT_NE(std::string(e.what()).find("/nonexistent/cost.txt"), std::string::npos);
  }
}
