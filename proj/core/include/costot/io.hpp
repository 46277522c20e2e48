#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "costot/features.hpp"
#include "costot/matrix.hpp"
#include "costot/sinkhorn.hpp"
#include "costot/trainer.hpp"

namespace costot::io {

/// Shortest decimal that parses back to the same double.
std::string format_double(double value);

/// Plain-text matrix: first line "rows cols", then one row of
/// whitespace-separated decimals per line. Blank lines are skipped. Throws
/// ParseError naming the offending line.
Matrix read_matrix_text(std::istream& in);
void write_matrix_text(std::ostream& out, const Matrix& m);

FeatureSet read_feature_set(std::istream& in, FeatureRole role);
void write_feature_set(std::ostream& out, const FeatureSet& features);

/// Row-major CSV, one matrix row per line, no header.
Matrix read_matrix_csv(std::istream& in);
void write_matrix_csv(std::ostream& out, const Matrix& m);

/// Header "t,lambda,delta_v,distance".
void write_trace_csv(std::ostream& out, std::span<const SinkhornTraceEntry> trace);
/// Header "step,ce,ot_distance,miou".
void write_history_csv(std::ostream& out, std::span<const HistoryRow> history);

/// Binary PGM (P5) of an 8-bit grayscale image stored row-major.
void write_pgm(std::ostream& out, std::size_t width, std::size_t height,
               std::span<const unsigned char> pixels);

/// Per-image min-max scaling to 0..255; a constant image maps to 128.
std::vector<unsigned char> to_grayscale(std::span<const double> values);

// File helpers; all throw IoError when the file cannot be opened.
Matrix load_matrix_text(const std::filesystem::path& path);
Matrix load_matrix_csv(const std::filesystem::path& path);
FeatureSet load_feature_set(const std::filesystem::path& path, FeatureRole role);
void save_text(const std::filesystem::path& path, const std::string& contents);

}  // namespace costot::io
