#include "mcsis/csv.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "mcsis/error.hpp"
#include "mcsis/stats.hpp"

namespace mcsis {

const char* to_string(Scaling s) {
  switch (s) {
    case Scaling::None: return "none";
    case Scaling::MinMax: return "minmax";
    case Scaling::Rank: return "rank";
  }
  return "?";
}

Scaling parse_scaling(const std::string& name) {
  if (name == "minmax") return Scaling::MinMax;
  if (name == "rank") return Scaling::Rank;
  if (name == "none") return Scaling::None;
  throw Error(ErrorCode::InvalidArgument, "scaling must be minmax, rank or none, got '" + name + "'");
}

namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

std::vector<std::string> split_record(const std::string& line, const std::string& source, std::size_t line_no) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (quoted) throw Error(ErrorCode::ParseError, source + " line " + std::to_string(line_no) + ": unterminated quote");
  fields.push_back(trim(cur));
  return fields;
}

bool is_missing_token(const std::string& s) {
  std::string l;
  for (char c : s) l.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  return l.empty() || l == "na" || l == "nan" || l == "n/a" || l == "null" || l == ".";
}

}  // namespace

CsvTable parse_csv(std::istream& in, const std::string& source) {
  CsvTable table;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1 && line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    if (trim(line).empty()) continue;
    std::vector<std::string> fields = split_record(line, source, line_no);
    if (!have_header) {
      table.header = std::move(fields);
      table.columns.assign(table.header.size(), {});
      have_header = true;
      continue;
    }
    if (fields.size() != table.header.size())
      throw Error(ErrorCode::ParseError, source + " line " + std::to_string(line_no) + ": expected " +
                                             std::to_string(table.header.size()) + " fields, got " +
                                             std::to_string(fields.size()));
    for (std::size_t c = 0; c < fields.size(); ++c) {
      const std::string& f = fields[c];
      const std::string where = source + " line " + std::to_string(line_no) + ", column " + std::to_string(c + 1) + " ('" +
                                table.header[c] + "')";
      if (is_missing_token(f)) throw Error(ErrorCode::MissingValue, "missing value at " + where);
      char* end = nullptr;
      const double v = std::strtod(f.c_str(), &end);
      if (end == f.c_str() || *end != '\0')
        throw Error(ErrorCode::NonNumericColumn, "non-numeric cell '" + f + "' at " + where);
      if (!std::isfinite(v)) throw Error(ErrorCode::ParseError, "non-finite value at " + where);
      table.columns[c].push_back(v);
    }
  }
  if (!have_header) throw Error(ErrorCode::ParseError, source + ": empty input, expected a header row");
  return table;
}

CsvTable read_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open '" + path + "'");
  return parse_csv(in, path);
}

std::size_t resolve_column(const std::vector<std::string>& header, const std::string& selector) {
  if (header.empty()) throw Error(ErrorCode::InvalidArgument, "table has no columns");
  if (selector.empty()) return 0;
  for (std::size_t c = 0; c < header.size(); ++c)
    if (header[c] == selector) return c;
  if (std::all_of(selector.begin(), selector.end(), [](char ch) { return std::isdigit(static_cast<unsigned char>(ch)); })) {
    const auto idx = std::stoul(selector);
    if (idx >= 1 && idx <= header.size()) return idx - 1;
  }
  throw Error(ErrorCode::InvalidArgument, "no column named or numbered '" + selector + "'");
}

std::vector<double> scale_column(std::span<const double> v, Scaling scaling) {
  std::vector<double> out(v.begin(), v.end());
  if (v.empty() || scaling == Scaling::None) return out;
  if (scaling == Scaling::MinMax) {
    const auto [mn, mx] = std::minmax_element(v.begin(), v.end());
    const double lo = *mn, range = *mx - *mn;
    for (double& x : out) x = range > 0.0 ? (x - lo) / range : 0.0;
    return out;
  }
  out = average_ranks(v);
  const double n = static_cast<double>(v.size());
  for (double& r : out) r = (r - 0.5) / n;
  return out;
}

Dataset table_to_dataset(const CsvTable& table, const std::string& response, Scaling scaling) {
  const std::size_t rc = resolve_column(table.header, response);
  const std::size_t n = table.rows();
  if (n == 0) throw Error(ErrorCode::EmptyDataset, "table has no data rows");
  if (table.header.size() < 2) throw Error(ErrorCode::EmptyDataset, "table has no predictor columns");
  Dataset d;
  d.y = scale_column(table.columns[rc], scaling);
  d.x.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(table.header.size() - 1));
  Eigen::Index j = 0;
  for (std::size_t c = 0; c < table.header.size(); ++c) {
    if (c == rc) continue;
    const std::vector<double> col = scale_column(table.columns[c], scaling);
    for (std::size_t u = 0; u < n; ++u) d.x(static_cast<Eigen::Index>(u), j) = col[u];
    d.column_names.push_back(table.header[c]);
    ++j;
  }
  return d;
}

Dataset load_csv(const std::string& path, const std::string& response, Scaling scaling) {
  return table_to_dataset(read_csv_file(path), response, scaling);
}

void write_dataset_csv(const Dataset& data, const std::string& response_name, std::ostream& out) {
  out << response_name;
  for (std::size_t j = 0; j < data.p(); ++j) out << ',' << data.column_name(j);
  out << '\n';
  char buf[32];
  for (std::size_t u = 0; u < data.n(); ++u) {
    std::snprintf(buf, sizeof buf, "%.17g", data.y[u]);
    out << buf;
    for (std::size_t j = 0; j < data.p(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", data.x(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(j)));
      out << ',' << buf;
    }
    out << '\n';
  }
}

void write_file_atomic(const std::string& path, const std::string& contents) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot write '" + tmp + "'");
    out << contents;
    out.flush();
    if (!out) {
      std::remove(tmp.c_str());
      throw Error(ErrorCode::Io, "write to '" + tmp + "' failed");
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::remove(tmp.c_str());
    throw Error(ErrorCode::Io, "cannot rename '" + tmp + "' to '" + path + "': " + ec.message());
  }
}

}  // namespace mcsis
