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

#ifndef RMAAV_MATRIX_MARKET_HPP
#define RMAAV_MATRIX_MARKET_HPP

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "rmaav/errors.hpp"

namespace rmaav {

// Matrix Market coordinate parser for the subset driving communication
// patterns: `matrix coordinate {pattern|real|integer} {general|symmetric}`.
// Values are discarded; only the sparsity structure is kept.

/// Sparsity structure, zero-based, sorted by (row, col), duplicates merged,
/// symmetric storage expanded to general form.
struct SparseMatrix {
  std::int64_t n_rows = 0;
  std::int64_t n_cols = 0;
  std::vector<std::pair<std::int64_t, std::int64_t>> coords;

  std::int64_t nnz() const { return static_cast<std::int64_t>(coords.size()); }

  friend bool operator==(const SparseMatrix&, const SparseMatrix&) = default;
};

// Throws ParseError carrying the 1-based line number on malformed input.
SparseMatrix parse_matrix_market(std::string_view text);

// Reads and parses a file; I/O failures raise ArgumentError naming the path.
SparseMatrix load_matrix_market(const std::string& path);

// Emits coordinate/pattern/general form (1-based indices); parsing the
// result reproduces the same coordinate set.
std::string serialize_matrix_market(const SparseMatrix& m);

}  // namespace rmaav

#endif  // RMAAV_MATRIX_MARKET_HPP
