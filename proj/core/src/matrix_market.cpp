// Copyright (c) 2026 The rmaav Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "rmaav/matrix_market.hpp"

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace rmaav {

namespace {

std::string to_lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) {
    return static_cast<char>(std::tolower(c));
  });
  return out;
}

std::vector<std::string> split_ws(std::string_view line) {
  std::vector<std::string> tokens;
  std::istringstream is{std::string(line)};
  std::string tok;
  while (is >> tok) tokens.push_back(tok);
  return tokens;
}

bool is_blank(std::string_view line) {
  return line.find_first_not_of(" \t\r\n\v\f") == std::string_view::npos;
}

std::int64_t parse_int(const std::string& tok, int line, const char* what) {
  errno = 0;
  char* end = nullptr;
  const long long v = std::strtoll(tok.c_str(), &end, 10);
  if (errno != 0 || end == tok.c_str() || *end != '\0')
    throw ParseError(line, std::string("malformed ") + what + " '" + tok +
                               "'");
  return static_cast<std::int64_t>(v);
}

void parse_real(const std::string& tok, int line) {
  errno = 0;
  char* end = nullptr;
  (void)std::strtod(tok.c_str(), &end);
  if (errno != 0 || end == tok.c_str() || *end != '\0')
    throw ParseError(line, "malformed value '" + tok + "'");
}

// Iterates lines, tracking 1-based line numbers; handles missing trailing
// newline.
class LineReader {
public:
  explicit LineReader(std::string_view text) : text_(text) {}

  bool next(std::string_view& line) {
    if (pos_ >= text_.size()) return false;
    const std::size_t nl = text_.find('\n', pos_);
    const std::size_t end = (nl == std::string_view::npos) ? text_.size() : nl;
    line = text_.substr(pos_, end - pos_);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    pos_ = (nl == std::string_view::npos) ? text_.size() : nl + 1;
    ++lineno_;
    return true;
  }

  int lineno() const { return lineno_; }

private:
  std::string_view text_;
  std::size_t pos_ = 0;
  int lineno_ = 0;
};

}  // namespace

SparseMatrix parse_matrix_market(std::string_view text) {
  LineReader reader(text);
  std::string_view line;

  if (!reader.next(line)) throw ParseError(1, "empty input, missing header");
  const auto header = split_ws(line);
  if (header.size() != 5 || to_lower(header[0]) != "%%matrixmarket")
    throw ParseError(reader.lineno(),
                     "header must be '%%MatrixMarket matrix coordinate "
                     "<field> <symmetry>'");
  if (to_lower(header[1]) != "matrix")
    throw ParseError(reader.lineno(),
                     "unsupported object '" + header[1] + "'");
  if (to_lower(header[2]) != "coordinate")
    throw ParseError(reader.lineno(),
                     "unsupported format '" + header[2] + "'");
  const std::string field = to_lower(header[3]);
  const std::string symmetry = to_lower(header[4]);
  if (field != "pattern" && field != "real" && field != "integer")
    throw ParseError(reader.lineno(), "unsupported field '" + field + "'");
  if (symmetry != "general" && symmetry != "symmetric")
    throw ParseError(reader.lineno(),
                     "unsupported symmetry '" + symmetry + "'");

  // size line: first non-comment, non-blank line after the header
  SparseMatrix m;
  std::int64_t declared_nnz = 0;
  for (;;) {
    if (!reader.next(line))
      throw ParseError(reader.lineno() + 1, "missing size line");
    if (is_blank(line) || line.front() == '%') continue;
    const auto tokens = split_ws(line);
    if (tokens.size() != 3)
      throw ParseError(reader.lineno(), "size line must be 'rows cols nnz'");
    m.n_rows = parse_int(tokens[0], reader.lineno(), "row count");
    m.n_cols = parse_int(tokens[1], reader.lineno(), "column count");
    declared_nnz = parse_int(tokens[2], reader.lineno(), "entry count");
    if (m.n_rows < 0 || m.n_cols < 0 || declared_nnz < 0)
      throw ParseError(reader.lineno(), "negative dimension or entry count");
    break;
  }

  const std::size_t value_tokens = (field == "pattern") ? 2u : 3u;
  std::int64_t seen = 0;
  m.coords.reserve(static_cast<std::size_t>(declared_nnz));
  while (seen < declared_nnz) {
    if (!reader.next(line))
      throw ParseError(reader.lineno() + 1,
                       "unexpected end of file: expected " +
                           std::to_string(declared_nnz) + " entries, got " +
                           std::to_string(seen));
    if (is_blank(line) || line.front() == '%') continue;
    const auto tokens = split_ws(line);
    if (tokens.size() != value_tokens)
      throw ParseError(reader.lineno(),
                       "entry must have " + std::to_string(value_tokens) +
                           " fields, got " + std::to_string(tokens.size()));
    const std::int64_t i = parse_int(tokens[0], reader.lineno(), "row index");
    const std::int64_t j =
        parse_int(tokens[1], reader.lineno(), "column index");
    if (i < 1 || i > m.n_rows)
      throw ParseError(reader.lineno(), "row index " + std::to_string(i) +
                                            " out of range [1, " +
                                            std::to_string(m.n_rows) + "]");
    if (j < 1 || j > m.n_cols)
      throw ParseError(reader.lineno(), "column index " + std::to_string(j) +
                                            " out of range [1, " +
                                            std::to_string(m.n_cols) + "]");
    if (value_tokens == 3) {
      if (field == "integer")
        parse_int(tokens[2], reader.lineno(), "value");
      else
        parse_real(tokens[2], reader.lineno());
    }
    if (symmetry == "symmetric" && j > i)
      throw ParseError(reader.lineno(),
                       "symmetric matrix entry above the diagonal (" +
                           std::to_string(i) + ", " + std::to_string(j) +
                           ")");
    m.coords.emplace_back(i - 1, j - 1);
    if (symmetry == "symmetric" && i != j) m.coords.emplace_back(j - 1, i - 1);
    ++seen;
  }

  while (reader.next(line)) {
    if (is_blank(line) || line.front() == '%') continue;
    throw ParseError(reader.lineno(), "unexpected content after " +
                                          std::to_string(declared_nnz) +
                                          " entries");
  }

  std::sort(m.coords.begin(), m.coords.end());
  m.coords.erase(std::unique(m.coords.begin(), m.coords.end()),
                 m.coords.end());
  return m;
}

SparseMatrix load_matrix_market(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArgumentError("cannot open matrix file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw ArgumentError("cannot read matrix file '" + path + "'");
  return parse_matrix_market(buf.str());
}

std::string serialize_matrix_market(const SparseMatrix& m) {
  std::ostringstream out;
  out << "%%MatrixMarket matrix coordinate pattern general\n";
  out << m.n_rows << ' ' << m.n_cols << ' ' << m.coords.size() << '\n';
  for (const auto& [i, j] : m.coords) out << i + 1 << ' ' << j + 1 << '\n';
  return out.str();
}

}  // namespace rmaav
