#pragma once

#include <istream>
#include <string>
#include <string_view>

#include "sparfima/model.hpp"

namespace sparfima {

enum class FieldFormat {
  long_csv,   // row,col,value per line; optional header
  dense_csv,  // one grid row per line
};

FieldFormat parse_field_format(std::string_view name);  // "long" | "dense"

// Grid shape comes from the dense shape or from max row/col + 1. With
// `standardize`, values are z-scored using the n - 1 standard deviation.
LatticeField read_field(std::istream& in, FieldFormat format, bool standardize = false);
LatticeField load_field(const std::string& path, FieldFormat format, bool standardize = false);

// Long CSV `row,col,value`, row-major. Regular grids only.
std::string field_csv(const LatticeField& field);
void write_field_csv(const LatticeField& field, const std::string& path);

// Writes `contents` to `path`, raising an io error on failure.
void write_text(const std::string& path, const std::string& contents);

}  // namespace sparfima
