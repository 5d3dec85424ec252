#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "olap/glm.hpp"

namespace olap {

/// A numeric CSV table with a header row.
struct CsvTable {
  std::vector<std::string> header;
  Eigen::MatrixXd values;
};

/// Parses numeric CSV text. Empty cells, "NA" and "NaN" are rejected as
/// missing values; errors carry 1-based line and column.
CsvTable parse_csv(const std::string& text);
CsvTable read_csv(const std::string& path);

void write_csv(const std::string& path, const std::vector<std::string>& header, const Eigen::MatrixXd& values);
/// Shortest round-trip formatting of a double.
std::string format_double(double x);

/// The named column becomes y, the remaining columns become X in file order.
Dataset load_dataset(const std::string& path, Family family, const std::string& response_column = "y");
/// Writes X columns as x1..xp followed by the response column.
void save_dataset(const std::string& path, const Dataset& data, const std::string& response_column = "y");

/// Loads a covariate-only CSV; a column named `drop_column` is ignored if present.
Eigen::MatrixXd load_matrix(const std::string& path, const std::string& drop_column = "");

}  // namespace olap
