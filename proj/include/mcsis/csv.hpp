#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "mcsis/dataset.hpp"

namespace mcsis {

enum class Scaling { None, MinMax, Rank };

const char* to_string(Scaling s);
Scaling parse_scaling(const std::string& name);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> columns;

  std::size_t rows() const { return columns.empty() ? 0 : columns.front().size(); }
};

// Header row then numeric body. Errors carry 1-based file line and column:
// ParseError (ragged rows, bad quoting, empty input), MissingValue (empty,
// NA, NaN, null, "."), NonNumericColumn (any other unparsable cell).
CsvTable parse_csv(std::istream& in, const std::string& source = "<input>");
CsvTable read_csv_file(const std::string& path);

// Column by exact header name, else by 1-based position; empty means the
// first column. Throws InvalidArgument.
std::size_t resolve_column(const std::vector<std::string>& header, const std::string& selector);

// minmax: (v - min) / (max - min), constant columns map to 0.
// rank: (rank - 0.5) / n with average ranks for ties.
std::vector<double> scale_column(std::span<const double> v, Scaling scaling);

// Response from the selected column, the others become predictors in file
// order; every variable is scaled.
Dataset table_to_dataset(const CsvTable& table, const std::string& response, Scaling scaling);
Dataset load_csv(const std::string& path, const std::string& response, Scaling scaling = Scaling::MinMax);

// Response first, then predictors; values written with 17 significant digits.
void write_dataset_csv(const Dataset& data, const std::string& response_name, std::ostream& out);

// Writes to a temporary sibling and renames it over `path`.
void write_file_atomic(const std::string& path, const std::string& contents);

}  // namespace mcsis
