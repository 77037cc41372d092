#include "sparfima/field_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <vector>

#include "sparfima/error.hpp"
#include "sparfima/format.hpp"

namespace sparfima {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> cells;
  for (;;) {
    const auto comma = line.find(',');
    cells.push_back(trim(line.substr(0, comma)));
    if (comma == std::string_view::npos) break;
    line.remove_prefix(comma + 1);
  }
  return cells;
}

std::optional<double> to_double(std::string_view cell) {
  if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
  double value = 0.0;
  const auto [end, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (ec != std::errc() || end != cell.data() + cell.size() || cell.empty() || !std::isfinite(value)) {
    return std::nullopt;
  }
  return value;
}

std::optional<std::size_t> to_index(std::string_view cell) {
  std::size_t value = 0;
  const auto [end, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (ec != std::errc() || end != cell.data() + cell.size() || cell.empty()) return std::nullopt;
  return value;
}

LatticeField read_long(std::istream& in) {
  std::map<std::pair<std::size_t, std::size_t>, double> cells;
  std::string line;
  std::size_t line_no = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view text = trim(line);
    if (text.empty()) continue;
    const auto parts = split(text);
    if (parts.size() != 3) throw ParseError("expected 3 columns (row,col,value)", line_no);
    const auto r = to_index(parts[0]);
    const auto c = to_index(parts[1]);
    if ((!r || !c) && cells.empty() && !to_double(parts[0])) continue;  // header
    const auto v = to_double(parts[2]);
    if (!r || !c) throw ParseError("row and col must be non-negative integers", line_no);
    if (!v) throw ParseError("non-numeric value '" + std::string(parts[2]) + "'", line_no);
    if (!cells.emplace(std::make_pair(*r, *c), *v).second) {
      throw ParseError("duplicate cell (" + std::to_string(*r) + "," + std::to_string(*c) + ")", line_no);
    }
    rows = std::max(rows, *r + 1);
    cols = std::max(cols, *c + 1);
  }
  if (cells.empty()) fail(ErrorKind::parse, "field file contains no cells");
  if (cells.size() != rows * cols) {
    fail(ErrorKind::parse, "long-format field is missing " + std::to_string(rows * cols - cells.size()) +
                               " of " + std::to_string(rows * cols) + " grid cells");
  }
  Eigen::VectorXd values(static_cast<Eigen::Index>(rows * cols));
  for (const auto& [key, v] : cells) values(static_cast<Eigen::Index>(key.first * cols + key.second)) = v;
  return LatticeField(SiteSet::regular_grid(rows, cols), std::move(values));
}

LatticeField read_dense(std::istream& in) {
  std::vector<double> values;
  std::string line;
  std::size_t line_no = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view text = trim(line);
    if (text.empty()) continue;
    const auto parts = split(text);
    if (rows == 0) {
      cols = parts.size();
    } else if (parts.size() != cols) {
      throw ParseError("ragged row: expected " + std::to_string(cols) + " cells, found " +
                           std::to_string(parts.size()),
                       line_no);
    }
    for (const auto cell : parts) {
      const auto v = to_double(cell);
      if (!v) throw ParseError("non-numeric cell '" + std::string(cell) + "'", line_no);
      values.push_back(*v);
    }
    ++rows;
  }
  if (values.empty()) fail(ErrorKind::parse, "field file contains no cells");
  Eigen::VectorXd v = Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
  return LatticeField(SiteSet::regular_grid(rows, cols), std::move(v));
}

}  // namespace

FieldFormat parse_field_format(std::string_view name) {
  if (name == "long" || name == "long_csv") return FieldFormat::long_csv;
  if (name == "dense" || name == "dense_csv") return FieldFormat::dense_csv;
  fail(ErrorKind::invalid_argument, "unknown field format '" + std::string(name) + "'");
}

LatticeField read_field(std::istream& in, FieldFormat format, bool standardize) {
  LatticeField field = format == FieldFormat::long_csv ? read_long(in) : read_dense(in);
  if (standardize) {
    const auto n = field.values.size();
    if (n < 2) fail(ErrorKind::degenerate_input, "cannot standardize fewer than 2 values");
    const double mean = field.values.mean();
    const Eigen::ArrayXd centered = field.values.array() - mean;
    const double sd = std::sqrt(centered.square().sum() / static_cast<double>(n - 1));
    if (!(sd > 0.0)) fail(ErrorKind::degenerate_input, "cannot standardize a constant field");
    field.values = (centered / sd).matrix();
  }
  return field;
}

LatticeField load_field(const std::string& path, FieldFormat format, bool standardize) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "cannot open '" + path + "'");
  return read_field(in, format, standardize);
}

std::string field_csv(const LatticeField& field) {
  const auto& grid = field.sites.grid();
  if (!grid) fail(ErrorKind::unsupported_layout, "CSV export requires a regular grid");
  std::ostringstream out;
  out << "row,col,value\n";
  for (std::size_t r = 0; r < grid->rows; ++r) {
    for (std::size_t c = 0; c < grid->cols; ++c) {
      out << r << ',' << c << ',' << format_number(field.values(static_cast<Eigen::Index>(r * grid->cols + c)))
          << '\n';
    }
  }
  return out.str();
}

void write_field_csv(const LatticeField& field, const std::string& path) {
  write_text(path, field_csv(field));
}

void write_text(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::io, "cannot open '" + path + "' for writing");
  out << contents;
  out.close();
  if (!out) fail(ErrorKind::io, "failed writing '" + path + "'");
}

}  // namespace sparfima
