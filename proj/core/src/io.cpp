#include "costot/io.hpp"

#include <algorithm>
#include <charconv>
#include <cctype>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "costot/error.hpp"

namespace costot::io {

namespace {

[[noreturn]] void parse_failure(std::size_t line, const std::string& what) {
  throw Error(ErrorCode::parse_error, "line " + std::to_string(line) + ": " + what);
}

double parse_double(std::string_view token, std::size_t line) {
  double value = 0.0;
  const auto* first = token.data();
  const auto* last = token.data() + token.size();
  if (!token.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last || !std::isfinite(value)) {
    parse_failure(line, "expected a finite number, got '" + std::string(token) + "'");
  }
  return value;
}

std::vector<std::string_view> split(std::string_view text, char sep) {
  std::vector<std::string_view> out;
  if (sep == ' ') {
    std::size_t pos = 0;
    while (pos < text.size()) {
      while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
      std::size_t end = pos;
      while (end < text.size() && !std::isspace(static_cast<unsigned char>(text[end]))) ++end;
      if (end > pos) out.push_back(text.substr(pos, end - pos));
      pos = end;
    }
    return out;
  }
  std::size_t pos = 0;
  while (true) {
    const std::size_t end = text.find(sep, pos);
    auto token = text.substr(pos, end == std::string_view::npos ? text.size() - pos : end - pos);
    while (!token.empty() && std::isspace(static_cast<unsigned char>(token.front()))) token.remove_prefix(1);
    while (!token.empty() && std::isspace(static_cast<unsigned char>(token.back()))) token.remove_suffix(1);
    out.push_back(token);
    if (end == std::string_view::npos) break;
    pos = end + 1;
  }
  return out;
}

bool is_blank(std::string_view line) {
  return std::all_of(line.begin(), line.end(),
                     [](char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; });
}

std::size_t parse_count(std::string_view token, std::size_t line) {
  std::size_t value = 0;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc{} || ptr != token.data() + token.size() || value == 0) {
    parse_failure(line, "expected a positive integer, got '" + std::string(token) + "'");
  }
  return value;
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io_error, "cannot open " + path.string());
  return in;
}

}  // namespace

std::string format_double(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

Matrix read_matrix_text(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (is_blank(line)) continue;
    const auto tokens = split(line, ' ');
    if (tokens.size() != 2) parse_failure(line_no, "header must be '<rows> <cols>'");
    rows = parse_count(tokens[0], line_no);
    cols = parse_count(tokens[1], line_no);
    break;
  }
  if (rows == 0) parse_failure(line_no, "missing '<rows> <cols>' header");

  Matrix m(rows, cols);
  std::size_t r = 0;
  while (r < rows && std::getline(in, line)) {
    ++line_no;
    if (is_blank(line)) continue;
    const auto tokens = split(line, ' ');
    if (tokens.size() != cols) {
      parse_failure(line_no, "expected " + std::to_string(cols) + " values, found " +
                                 std::to_string(tokens.size()));
    }
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = parse_double(tokens[c], line_no);
    ++r;
  }
  if (r < rows) {
    parse_failure(line_no, "expected " + std::to_string(rows) + " rows, found " + std::to_string(r));
  }
  while (std::getline(in, line)) {
    ++line_no;
    if (!is_blank(line)) parse_failure(line_no, "unexpected data after the last row");
  }
  return m;
}

void write_matrix_text(std::ostream& out, const Matrix& m) {
  out << m.rows() << ' ' << m.cols() << '\n';
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) {
      if (c > 0) out << ' ';
      out << format_double(m(r, c));
    }
    out << '\n';
  }
}

FeatureSet read_feature_set(std::istream& in, FeatureRole role) {
  return FeatureSet(read_matrix_text(in), role);
}

void write_feature_set(std::ostream& out, const FeatureSet& features) {
  write_matrix_text(out, features.matrix());
}

Matrix read_matrix_csv(std::istream& in) {
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (is_blank(line)) continue;
    const auto tokens = split(line, ',');
    std::vector<double> row;
    row.reserve(tokens.size());
    for (auto t : tokens) row.push_back(parse_double(t, line_no));
    if (!rows.empty() && row.size() != rows.front().size()) {
      parse_failure(line_no, "expected " + std::to_string(rows.front().size()) +
                                 " columns, found " + std::to_string(row.size()));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) parse_failure(line_no, "empty CSV matrix");
  return Matrix::from_rows(rows);
}

void write_matrix_csv(std::ostream& out, const Matrix& m) {
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) {
      if (c > 0) out << ',';
      out << format_double(m(r, c));
    }
    out << '\n';
  }
}

void write_trace_csv(std::ostream& out, std::span<const SinkhornTraceEntry> trace) {
  out << "t,lambda,delta_v,distance\n";
  for (const auto& e : trace) {
    out << e.iteration << ',' << format_double(e.lambda) << ',' << format_double(e.delta_v) << ','
        << format_double(e.distance) << '\n';
  }
}

void write_history_csv(std::ostream& out, std::span<const HistoryRow> history) {
  out << "step,ce,ot_distance,miou\n";
  for (const auto& h : history) {
    out << h.step << ',' << format_double(h.cross_entropy) << ',' << format_double(h.ot_distance)
        << ',' << format_double(h.miou) << '\n';
  }
}

void write_pgm(std::ostream& out, std::size_t width, std::size_t height,
               std::span<const unsigned char> pixels) {
  if (pixels.size() != width * height) {
    throw Error(ErrorCode::shape_mismatch, "PGM pixel count does not match width x height");
  }
  out << "P5\n" << width << ' ' << height << "\n255\n";
  out.write(reinterpret_cast<const char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
}

std::vector<unsigned char> to_grayscale(std::span<const double> values) {
  std::vector<unsigned char> out(values.size(), 128);
  if (values.empty()) return out;
  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  if (!(hi > lo)) return out;
  for (std::size_t k = 0; k < values.size(); ++k) {
    const double scaled = std::round(255.0 * (values[k] - lo) / (hi - lo));
    out[k] = static_cast<unsigned char>(std::clamp(scaled, 0.0, 255.0));
  }
  return out;
}

Matrix load_matrix_text(const std::filesystem::path& path) {
  auto in = open_input(path);
  try {
    return read_matrix_text(in);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

Matrix load_matrix_csv(const std::filesystem::path& path) {
  auto in = open_input(path);
  try {
    return read_matrix_csv(in);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

FeatureSet load_feature_set(const std::filesystem::path& path, FeatureRole role) {
  return FeatureSet(load_matrix_text(path), role);
}

void save_text(const std::filesystem::path& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::io_error, "cannot write " + path.string());
  out << contents;
  if (!out) throw Error(ErrorCode::io_error, "failed writing " + path.string());
}

}  // namespace costot::io
