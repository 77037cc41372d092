#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "sparfima/error.hpp"
#include "sparfima/weights.hpp"

namespace sparfima {

namespace {

using nlohmann::json;

std::string meta_path(const std::string& path) { return path + ".meta.json"; }

std::string format17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

void write_weight_triplets(const WeightMatrix& w, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::io, "cannot open " + path + " for writing");
  out << "i,j,w\n";
  const auto& m = w.entries();
  for (Eigen::Index r = 0; r < m.outerSize(); ++r) {
    for (WeightMatrix::Sparse::InnerIterator it(m, r); it; ++it) {
      out << r << ',' << it.col() << ',' << format17(it.value()) << '\n';
    }
  }
  json meta{{"schema", "sparfima.weights/1"},
            {"n", w.n()},
            {"standardization", w.is_row_standardized() ? "row_standardized" : "raw"},
            {"provenance", w.provenance()}};
  if (w.symmetrizer()) {
    meta["symmetrizer"] = std::vector<double>(w.symmetrizer()->begin(), w.symmetrizer()->end());
  }
  std::ofstream side(meta_path(path));
  if (!side) fail(ErrorKind::io, "cannot open " + meta_path(path) + " for writing");
  side << meta.dump(2) << '\n';
}

WeightMatrix read_weight_triplets(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "cannot open " + path);
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line)) throw ParseError("empty weight file", line_no);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "i,j,w") throw ParseError("expected header 'i,j,w'", line_no);

  std::vector<Eigen::Triplet<double>> triplets;
  long max_index = -1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != 3) throw ParseError("expected 3 fields", line_no);
    long i = 0, j = 0;
    double v = 0.0;
    auto parse_int = [&](const std::string& s, long& dst) {
      auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), dst);
      if (ec != std::errc() || p != s.data() + s.size() || dst < 0) {
        throw ParseError("invalid index '" + s + "'", line_no);
      }
    };
    parse_int(cells[0], i);
    parse_int(cells[1], j);
    try {
      std::size_t used = 0;
      v = std::stod(cells[2], &used);
      if (used != cells[2].size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw ParseError("invalid weight '" + cells[2] + "'", line_no);
    }
    max_index = std::max({max_index, i, j});
    triplets.emplace_back(static_cast<int>(i), static_cast<int>(j), v);
  }

  std::size_t n = static_cast<std::size_t>(max_index + 1);
  Standardization standardization = Standardization::raw;
  std::string provenance = "file(" + path + ")";
  std::optional<Eigen::VectorXd> symmetrizer;
  std::ifstream side(meta_path(path));
  if (side) {
    json meta;
    try {
      side >> meta;
    } catch (const json::exception& e) {
      fail(ErrorKind::parse, meta_path(path) + ": " + e.what());
    }
    n = meta.at("n").get<std::size_t>();
    if (static_cast<long>(n) <= max_index) {
      fail(ErrorKind::parse, "index exceeds n recorded in " + meta_path(path));
    }
    standardization = meta.value("standardization", "raw") == "row_standardized"
                          ? Standardization::row_standardized
                          : Standardization::raw;
    provenance = meta.value("provenance", provenance);
    if (meta.contains("symmetrizer")) {
      const auto values = meta["symmetrizer"].get<std::vector<double>>();
      symmetrizer = Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
    }
  }
  if (n == 0) fail(ErrorKind::parse, "weight file has no entries and no metadata");

  WeightMatrix::Sparse m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  m.setFromTriplets(triplets.begin(), triplets.end());
  WeightMatrix w(std::move(m), standardization, std::move(provenance));
  if (symmetrizer) w = w.with_symmetrizer(std::move(*symmetrizer));
  return w;
}

}  // namespace sparfima
