#include "romerr/io.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "romerr/errors.hpp"

namespace romerr {

std::string format_double(double value) {
    char buf[32];
    for (int precision = 15; precision <= 17; ++precision) {
        std::snprintf(buf, sizeof(buf), "%.*g", precision, value);
        if (std::strtod(buf, nullptr) == value) break;
    }
    return buf;
}

void write_matrix(const std::filesystem::path& path, const Matrix& m) {
    std::ostringstream out;
    out << m.rows() << ' ' << m.cols() << '\n';
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if (j) out << ' ';
            out << format_double(m(i, j));
        }
        out << '\n';
    }
    write_text_file(path, out.str());
}

Matrix read_matrix(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw validation_error("cannot open matrix file " + path.string());
    Eigen::Index rows = 0, cols = 0;
    if (!(in >> rows >> cols) || rows < 0 || cols < 0)
        throw validation_error("malformed matrix header in " + path.string());
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j)
            if (!(in >> m(i, j)))
                throw validation_error("truncated matrix data in " + path.string());
    return m;
}

void write_vector(const std::filesystem::path& path, const Vector& v) {
    write_matrix(path, v);
}

Vector read_vector(const std::filesystem::path& path) {
    const Matrix m = read_matrix(path);
    if (m.cols() != 1) throw validation_error("expected a single-column matrix in " + path.string());
    return m.col(0);
}

void write_csv(const std::filesystem::path& path, const CsvTable& table) {
    std::ostringstream out;
    for (std::size_t j = 0; j < table.header.size(); ++j) {
        if (j) out << ',';
        out << table.header[j];
    }
    out << '\n';
    for (const auto& row : table.rows) {
        if (row.size() != table.header.size())
            throw shape_error("CSV row width does not match the header");
        for (std::size_t j = 0; j < row.size(); ++j) {
            if (j) out << ',';
            out << row[j];
        }
        out << '\n';
    }
    write_text_file(path, out.str());
}

CsvTable read_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw validation_error("cannot open CSV file " + path.string());
    CsvTable table;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::size_t start = 0;
        for (;;) {
            const std::size_t comma = line.find(',', start);
            cells.push_back(line.substr(start, comma - start));
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        if (first) {
            table.header = std::move(cells);
            first = false;
        } else {
            table.rows.push_back(std::move(cells));
        }
    }
    if (first) throw validation_error("empty CSV file " + path.string());
    return table;
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw validation_error("cannot open file " + path.string());
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw validation_error("cannot write file " + path.string());
    out << content;
}

} // namespace romerr
