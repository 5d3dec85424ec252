#include "olap/dataset_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <system_error>

#include "olap/error.hpp"

namespace olap {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_line(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      cells.push_back(trim(line.substr(start)));
      break;
    }
    cells.push_back(trim(line.substr(start, comma - start)));
    start = comma + 1;
  }
  return cells;
}

std::string unquote(std::string_view s) {
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return std::string(s);
}

double parse_cell(std::string_view cell, std::size_t line, std::size_t column) {
  if (cell.empty() || cell == "NA" || cell == "NaN" || cell == "nan" || cell == "?") {
    throw ParseError("missing value at line " + std::to_string(line) + ", column " + std::to_string(column), line,
                     column);
  }
  if (cell.front() == '+') cell.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (ec != std::errc() || ptr != cell.data() + cell.size() || !std::isfinite(v)) {
    throw ParseError("non-numeric cell '" + std::string(cell) + "' at line " + std::to_string(line) + ", column " +
                         std::to_string(column),
                     line, column);
  }
  return v;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

CsvTable parse_csv(const std::string& text) {
  CsvTable table;
  std::vector<std::vector<double>> rows;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  bool have_header = false;
  while (pos <= text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string::npos) nl = text.size();
    std::string_view line(text.data() + pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split_line(line);
    if (!have_header) {
      for (auto c : cells) table.header.push_back(unquote(c));
      have_header = true;
      continue;
    }
    if (cells.size() != table.header.size()) {
      const std::size_t col = std::min(cells.size(), table.header.size()) + 1;
      throw ParseError("line " + std::to_string(line_no) + " has " + std::to_string(cells.size()) +
                           " cells, header has " + std::to_string(table.header.size()),
                       line_no, col);
    }
    std::vector<double> row(cells.size());
    for (std::size_t k = 0; k < cells.size(); ++k) row[k] = parse_cell(cells[k], line_no, k + 1);
    rows.push_back(std::move(row));
  }
  if (!have_header) throw ParseError("empty CSV: no header row", 1, 1);
  table.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(table.header.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t k = 0; k < rows[i].size(); ++k) {
      table.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k];
    }
  }
  return table;
}

CsvTable read_csv(const std::string& path) { return parse_csv(slurp(path)); }

std::string format_double(double x) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  if (ec != std::errc()) throw std::runtime_error("format_double failed");
  return std::string(buf, ptr);
}

void write_csv(const std::string& path, const std::vector<std::string>& header, const Eigen::MatrixXd& values) {
  if (static_cast<std::size_t>(values.cols()) != header.size()) {
    throw DimensionError("write_csv: header has " + std::to_string(header.size()) + " names for " +
                         std::to_string(values.cols()) + " columns");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path);
  for (std::size_t k = 0; k < header.size(); ++k) out << (k ? "," : "") << header[k];
  out << '\n';
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    for (Eigen::Index k = 0; k < values.cols(); ++k) out << (k ? "," : "") << format_double(values(i, k));
    out << '\n';
  }
  if (!out) throw std::runtime_error("write failed for " + path);
}

Dataset load_dataset(const std::string& path, Family family, const std::string& response_column) {
  CsvTable t = read_csv(path);
  std::size_t r = t.header.size();
  for (std::size_t k = 0; k < t.header.size(); ++k) {
    if (t.header[k] == response_column) {
      r = k;
      break;
    }
  }
  if (r == t.header.size()) throw ValidationError("response column '" + response_column + "' not found in " + path);
  if (t.header.size() < 2) throw ValidationError(path + ": need at least one covariate column");
  const Eigen::Index n = t.values.rows();
  const Eigen::Index p = t.values.cols() - 1;
  Eigen::MatrixXd X(n, p);
  Eigen::Index c = 0;
  for (Eigen::Index k = 0; k < t.values.cols(); ++k) {
    if (static_cast<std::size_t>(k) == r) continue;
    X.col(c++) = t.values.col(k);
  }
  Eigen::VectorXd y = t.values.col(static_cast<Eigen::Index>(r));
  if (family == Family::logistic) {
    for (Eigen::Index i = 0; i < n; ++i) {
      if (y(i) != 0.0 && y(i) != 1.0) {
        throw ValidationError("logistic response must be 0 or 1; row " + std::to_string(i + 1) + " has " +
                              format_double(y(i)));
      }
    }
  }
  return make_dataset(std::move(X), std::move(y), family);
}

void save_dataset(const std::string& path, const Dataset& data, const std::string& response_column) {
  std::vector<std::string> header;
  for (std::size_t j = 0; j < data.p(); ++j) header.push_back("x" + std::to_string(j + 1));
  header.push_back(response_column);
  Eigen::MatrixXd all(data.X.rows(), data.X.cols() + 1);
  all << data.X, data.y;
  write_csv(path, header, all);
}

Eigen::MatrixXd load_matrix(const std::string& path, const std::string& drop_column) {
  CsvTable t = read_csv(path);
  if (drop_column.empty()) return t.values;
  for (std::size_t k = 0; k < t.header.size(); ++k) {
    if (t.header[k] != drop_column) continue;
    Eigen::MatrixXd X(t.values.rows(), t.values.cols() - 1);
    Eigen::Index c = 0;
    for (Eigen::Index m = 0; m < t.values.cols(); ++m) {
      if (static_cast<std::size_t>(m) != k) X.col(c++) = t.values.col(m);
    }
    return X;
  }
  return t.values;
}

}  // namespace olap
