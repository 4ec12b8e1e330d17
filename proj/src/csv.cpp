#include "lindiff/csv.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "lindiff/errors.hpp"

namespace lindiff {

std::string format_double(double value) {
    char buffer[40];
    std::snprintf(buffer, sizeof(buffer), "%.17g", value);
    return buffer;
}

Eigen::MatrixXd load_data_matrix(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open '" + path + "' for reading");
    std::vector<std::vector<double>> rows;
    std::string line;
    long line_no = 0;
    Eigen::Index width = -1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() && in.peek() == EOF && !rows.empty()) break; // trailing newline
        std::vector<double> cells;
        std::size_t start = 0;
        long col = 0;
        while (true) {
            ++col;
            const std::size_t comma = line.find(',', start);
            const std::size_t end = (comma == std::string::npos) ? line.size() : comma;
            double value = 0.0;
            const char* first = line.data() + start;
            const char* last = line.data() + end;
            const auto [ptr, ec] = std::from_chars(first, last, value);
            if (ec != std::errc() || ptr != last)
                throw parse_error("non-numeric cell '" +
                                      line.substr(start, end - start) + "'",
                                  line_no, col);
            cells.push_back(value);
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        if (width < 0) {
            width = static_cast<Eigen::Index>(cells.size());
        } else if (static_cast<Eigen::Index>(cells.size()) != width) {
            throw parse_error("ragged row: expected " + std::to_string(width) +
                                  " columns, found " + std::to_string(cells.size()),
                              line_no, 0);
        }
        rows.push_back(std::move(cells));
    }
    if (rows.empty()) throw parse_error("empty data file '" + path + "'", 0, 0);
    Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), width);
    for (Eigen::Index i = 0; i < out.rows(); ++i)
        for (Eigen::Index j = 0; j < width; ++j)
            out(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    return out;
}

void write_data_matrix(const std::string& path, const Eigen::MatrixXd& data) {
    std::ofstream out(path);
    if (!out) throw io_error("cannot open '" + path + "' for writing");
    for (Eigen::Index i = 0; i < data.rows(); ++i) {
        for (Eigen::Index j = 0; j < data.cols(); ++j) {
            if (j) out << ',';
            out << format_double(data(i, j));
        }
        out << '\n';
    }
    if (!out) throw io_error("write failed for '" + path + "'");
}

CsvTable::CsvTable(std::vector<std::string> columns) : columns_(std::move(columns)) {}

void CsvTable::add_row(std::vector<std::string> cells) {
    if (cells.size() != columns_.size())
        throw domain_error("csv row width does not match header");
    rows_.push_back(std::move(cells));
}

std::string CsvTable::to_string() const {
    std::ostringstream out;
    out << kVersionLine << '\n';
    for (std::size_t j = 0; j < columns_.size(); ++j) {
        if (j) out << ',';
        out << columns_[j];
    }
    out << '\n';
    for (const auto& row : rows_) {
        for (std::size_t j = 0; j < row.size(); ++j) {
            if (j) out << ',';
            out << row[j];
        }
        out << '\n';
    }
    return out.str();
}

void CsvTable::write(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot open '" + path + "' for writing");
    out << to_string();
    if (!out) throw io_error("write failed for '" + path + "'");
}

} // namespace lindiff
