#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace cbiqa {

// Numeric table: one row per line, comma separated. A first line that does
// not parse as numbers is treated as a header and skipped. Rows must agree
// in length.
Eigen::MatrixXd read_numeric_csv(const std::filesystem::path& path);
Eigen::MatrixXd parse_numeric_csv(const std::string& text);

// Shortest round-trip formatting ("%.17g" trimmed), so CSVs reload exactly.
std::string format_double(double value);

void write_row_csv(const std::filesystem::path& path, const std::vector<std::vector<double>>& rows);

std::vector<std::string> split_csv_line(const std::string& line);

}  // namespace cbiqa
