#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "romerr/dynsys.hpp"

namespace romerr {

// shortest decimal text that round-trips the double exactly
std::string format_double(double value);

// Matrix text format: one header line "rows cols" followed by row-major
// values, one row per line. Round-trips to 1e-12 or better.
void write_matrix(const std::filesystem::path& path, const Matrix& m);
Matrix read_matrix(const std::filesystem::path& path);
void write_vector(const std::filesystem::path& path, const Vector& v);
Vector read_vector(const std::filesystem::path& path);

// Minimal CSV with a header row; all cells are formatted doubles except
// integer columns, which the callers format themselves.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

void write_csv(const std::filesystem::path& path, const CsvTable& table);
CsvTable read_csv(const std::filesystem::path& path);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& content);

} // namespace romerr
