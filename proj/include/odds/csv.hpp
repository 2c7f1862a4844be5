#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>

#include "odds/linalg.hpp"

namespace odds {

// Interchange format: one matrix row per line, comma-separated decimals, no
// header. Dimensions are inferred; ragged rows are rejected. Vectors are
// stored as a single column (one value per line); a single row is also
// accepted when reading a vector.

DenseMatrix parse_matrix_csv(std::string_view text);
DenseMatrix read_matrix_csv(const std::filesystem::path& path);
RealVector read_vector_csv(const std::filesystem::path& path);

/// Shortest decimal that round-trips the double.
std::string format_double(double x);

void write_matrix_csv(std::ostream& out, const DenseMatrix& m);
void write_vector_csv(std::ostream& out, const RealVector& v);
std::string to_csv(const DenseMatrix& m);
std::string to_csv(const RealVector& v);

/// Writes to a sibling temporary file and renames it over `path`, so readers
/// never observe a partially written file.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

}  // namespace odds
