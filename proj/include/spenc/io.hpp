#pragma once

#include <cctype>
#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "spenc/count_matrix.hpp"
#include "spenc/errors.hpp"

namespace spenc {

enum class MatrixFormat { matrix_market, csv_dense, csv_triplet };

namespace detail {

inline std::string strip(const std::string& s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || s[i] == sep) {
      out.push_back(s.substr(start, i - start));
      start = i + 1;
    }
  }
  return out;
}

// Integer field parse. A token that reads as a number but not as an integer
// (e.g. "1.5") reports non_integer so the caller can raise a validation
// error carrying the (row, col) position; anything else is a format error.
enum class FieldParse { ok, non_integer, bad };

inline FieldParse parse_count(const std::string& raw, long& value) {
  const std::string tok = strip(raw);
  if (tok.empty()) return FieldParse::bad;
  errno = 0;
  char* end = nullptr;
  const long v = std::strtol(tok.c_str(), &end, 10);
  if (errno == 0 && end == tok.c_str() + tok.size()) {
    value = v;
    return FieldParse::ok;
  }
  char* dend = nullptr;
  errno = 0;
  std::strtod(tok.c_str(), &dend);
  if (errno == 0 && dend == tok.c_str() + tok.size()) {
    return FieldParse::non_integer;
  }
  return FieldParse::bad;
}

inline long require_count(const std::string& tok, const std::string& path,
                          long line_no, long row, long col) {
  long v = 0;
  switch (parse_count(tok, v)) {
    case FieldParse::ok:
      if (v < 0) {
        throw ValidationError(path + ": negative value at (" +
                              std::to_string(row) + ", " +
                              std::to_string(col) + ")");
      }
      return v;
    case FieldParse::non_integer:
      throw ValidationError(path + ": non-integer value at (" +
                            std::to_string(row) + ", " + std::to_string(col) +
                            ")");
    case FieldParse::bad:
    default:
      throw FormatError(path + ": line " + std::to_string(line_no) +
                        ": cannot parse '" + strip(tok) + "'");
  }
}

inline long require_index(const std::string& tok, const std::string& path,
                          long line_no, const char* what) {
  long v = 0;
  if (parse_count(tok, v) != FieldParse::ok) {
    throw FormatError(path + ": line " + std::to_string(line_no) + ": bad " +
                      std::string(what) + " '" + strip(tok) + "'");
  }
  return v;
}

}  // namespace detail

inline CountMatrix load_matrix_market(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError(path + ": cannot open file");
  std::string line;
  long line_no = 0;
  if (!std::getline(in, line)) throw FormatError(path + ": empty file");
  ++line_no;
  {
    std::istringstream hs(line);
    std::string banner, object, format, field, symmetry;
    hs >> banner >> object >> format >> field >> symmetry;
    if (banner != "%%MatrixMarket" || object != "matrix" ||
        format != "coordinate" || field != "integer" ||
        symmetry != "general") {
      throw FormatError(path + ": line 1: expected header '%%MatrixMarket "
                        "matrix coordinate integer general'");
    }
  }
  // Skip comments, read the size line.
  long n_rows = 0, n_cols = 0, nnz = 0;
  for (;;) {
    if (!std::getline(in, line)) {
      throw FormatError(path + ": missing size line");
    }
    ++line_no;
    const std::string t = detail::strip(line);
    if (t.empty() || t[0] == '%') continue;
    std::istringstream ls(t);
    if (!(ls >> n_rows >> n_cols >> nnz)) {
      throw FormatError(path + ": line " + std::to_string(line_no) +
                        ": bad size line");
    }
    break;
  }
  if (n_rows < 1 || n_cols < 1 || nnz < 0) {
    throw ValidationError(path + ": invalid dimensions " +
                          std::to_string(n_rows) + "x" +
                          std::to_string(n_cols));
  }
  CountMatrix m(n_rows, n_cols);
  long seen = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = detail::strip(line);
    if (t.empty() || t[0] == '%') continue;
    const std::istringstream probe(t);
    std::istringstream ls(t);
    std::string rtok, ctok, vtok;
    if (!(ls >> rtok >> ctok >> vtok)) {
      throw FormatError(path + ": line " + std::to_string(line_no) +
                        ": expected 'row col value'");
    }
    const long r = detail::require_index(rtok, path, line_no, "row index");
    const long c = detail::require_index(ctok, path, line_no, "col index");
    if (r < 1 || r > n_rows || c < 1 || c > n_cols) {
      throw ValidationError(path + ": entry (" + std::to_string(r - 1) +
                            ", " + std::to_string(c - 1) +
                            ") outside declared dimensions");
    }
    const long v = detail::require_count(vtok, path, line_no, r - 1, c - 1);
    m.add(r - 1, c - 1, v);
    ++seen;
  }
  if (seen != nnz) {
    throw FormatError(path + ": declared " + std::to_string(nnz) +
                      " entries, found " + std::to_string(seen));
  }
  m.compress();
  return m;
}

inline CountMatrix load_csv_dense(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError(path + ": cannot open file");
  std::vector<std::vector<long>> rows;
  std::string line;
  long line_no = 0;
  long n_cols = -1;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = detail::strip(line);
    if (t.empty()) continue;
    const auto fields = detail::split(t, ',');
    if (n_cols < 0) {
      n_cols = static_cast<long>(fields.size());
    } else if (static_cast<long>(fields.size()) != n_cols) {
      throw FormatError(path + ": line " + std::to_string(line_no) +
                        ": expected " + std::to_string(n_cols) +
                        " fields, got " + std::to_string(fields.size()));
    }
    std::vector<long> row(fields.size());
    for (std::size_t c = 0; c < fields.size(); ++c) {
      row[c] = detail::require_count(fields[c], path, line_no,
                                     static_cast<long>(rows.size()),
                                     static_cast<long>(c));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw FormatError(path + ": empty file");
  CountMatrix m(static_cast<long>(rows.size()), n_cols);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (long c = 0; c < n_cols; ++c) {
      m.add(static_cast<long>(r), c, rows[r][static_cast<std::size_t>(c)]);
    }
  }
  m.compress();
  return m;
}

// Triplet CSV: header `row,col,count`, zero-based indices. Dimensions are
// recovered as the tight bounds max(index)+1.
inline CountMatrix load_csv_triplet(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError(path + ": cannot open file");
  std::string line;
  if (!std::getline(in, line)) throw FormatError(path + ": empty file");
  long line_no = 1;
  {
    auto fields = detail::split(detail::strip(line), ',');
    for (auto& f : fields) f = detail::strip(f);
    if (fields.size() != 3 || fields[0] != "row" || fields[1] != "col" ||
        fields[2] != "count") {
      throw FormatError(path + ": line 1: expected header 'row,col,count'");
    }
  }
  struct Triplet {
    long r, c, v;
  };
  std::vector<Triplet> entries;
  long max_r = -1, max_c = -1;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = detail::strip(line);
    if (t.empty()) continue;
    const auto fields = detail::split(t, ',');
    if (fields.size() != 3) {
      throw FormatError(path + ": line " + std::to_string(line_no) +
                        ": expected 3 fields");
    }
    const long r = detail::require_index(fields[0], path, line_no, "row index");
    const long c = detail::require_index(fields[1], path, line_no, "col index");
    if (r < 0 || c < 0) {
      throw ValidationError(path + ": negative index at line " +
                            std::to_string(line_no));
    }
    const long v = detail::require_count(fields[2], path, line_no, r, c);
    entries.push_back({r, c, v});
    max_r = std::max(max_r, r);
    max_c = std::max(max_c, c);
  }
  if (entries.empty()) {
    throw FormatError(path + ": no entries after header");
  }
  CountMatrix m(max_r + 1, max_c + 1);
  for (const auto& e : entries) m.add(e.r, e.c, e.v);
  m.compress();
  return m;
}

inline CountMatrix load_matrix(const std::string& path, MatrixFormat format) {
  switch (format) {
    case MatrixFormat::matrix_market:
      return load_matrix_market(path);
    case MatrixFormat::csv_dense:
      return load_csv_dense(path);
    case MatrixFormat::csv_triplet:
    default:
      return load_csv_triplet(path);
  }
}

inline void save_matrix(const CountMatrix& m, const std::string& path,
                        MatrixFormat format) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError(path + ": cannot open for writing");
  switch (format) {
    case MatrixFormat::matrix_market: {
      out << "%%MatrixMarket matrix coordinate integer general\n";
      out << m.rows() << " " << m.cols() << " " << m.nnz() << "\n";
      for (long r = 0; r < m.rows(); ++r) {
        for (const auto& item : m.row(r)) {
          out << (r + 1) << " " << (item.col + 1) << " " << item.count
              << "\n";
        }
      }
      break;
    }
    case MatrixFormat::csv_dense: {
      for (long r = 0; r < m.rows(); ++r) {
        const auto& row = m.row(r);
        std::size_t idx = 0;
        for (long c = 0; c < m.cols(); ++c) {
          long v = 0;
          if (idx < row.size() && row[idx].col == c) v = row[idx++].count;
          out << v;
          if (c + 1 < m.cols()) out << ",";
        }
        out << "\n";
      }
      break;
    }
    case MatrixFormat::csv_triplet: {
      out << "row,col,count\n";
      for (long r = 0; r < m.rows(); ++r) {
        for (const auto& item : m.row(r)) {
          out << r << "," << item.col << "," << item.count << "\n";
        }
      }
      break;
    }
  }
  if (!out) throw FormatError(path + ": write failed");
}

// .mtx -> matrix market, .triplet.csv -> triplet, .csv -> dense.
inline MatrixFormat infer_format(const std::string& path) {
  auto ends_with = [&](const std::string& suffix) {
    return path.size() >= suffix.size() &&
           path.compare(path.size() - suffix.size(), suffix.size(), suffix) ==
               0;
  };
  if (ends_with(".mtx")) return MatrixFormat::matrix_market;
  if (ends_with(".triplet.csv")) return MatrixFormat::csv_triplet;
  if (ends_with(".csv")) return MatrixFormat::csv_dense;
  throw FormatError(path + ": cannot infer format from extension");
}

}  // namespace spenc
