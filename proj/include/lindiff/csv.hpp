#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace lindiff {

// Shortest decimal form that round-trips a double (>= 17 significant digits).
std::string format_double(double value);

// Comma-separated numeric matrix, one sample per row, no header.
// Parse errors carry 1-based row/column locations.
Eigen::MatrixXd load_data_matrix(const std::string& path);
void write_data_matrix(const std::string& path, const Eigen::MatrixXd& data);

// Long-format result table with the versioned header comment.
class CsvTable {
public:
    explicit CsvTable(std::vector<std::string> columns);
    // Cells are preformatted strings; empty string = not applicable.
    void add_row(std::vector<std::string> cells);
    std::string to_string() const;
    void write(const std::string& path) const;

    static constexpr const char* kVersionLine = "# lindiff-csv v1";

private:
    std::vector<std::string> columns_;
    std::vector<std::vector<std::string>> rows_;
};

} // namespace lindiff
