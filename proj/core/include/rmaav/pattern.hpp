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

#ifndef RMAAV_PATTERN_HPP
#define RMAAV_PATTERN_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "rmaav/collectives.hpp"
#include "rmaav/matrix_market.hpp"

namespace rmaav {

// Communication patterns: an R×R byte-count matrix sliced into per-rank
// ExchangeSpecs with displacements packed in rank order, plus the
// deterministic sender-rank fill/validate scheme used to check exchanges.

/// R×R matrix of byte counts, row-major: at(r, p) is what rank r sends to
/// rank p. Entries are divisible by elem_size_bytes.
struct Pattern {
  int ranks = 0;
  std::vector<std::int64_t> counts_bytes;  // ranks*ranks, row-major
  std::int64_t elem_size_bytes = 1;
  std::string name;  // "uniform" or the matrix file stem

  std::int64_t at(int r, int p) const {
    return counts_bytes[static_cast<std::size_t>(r) *
                            static_cast<std::size_t>(ranks) +
                        static_cast<std::size_t>(p)];
  }
};

// counts_bytes[r][p] = msg_size_bytes for all r, p.
Pattern uniform_pattern(int ranks, std::int64_t msg_size_bytes,
                        std::int64_t elem_size_bytes);

// Rows of a square matrix are split into R contiguous blocks of ⌈n/R⌉ rows;
// counts_bytes[r][p] counts the nonzeros whose row block is r and column
// block is p, times elem_size_bytes.
Pattern matrix_pattern(const SparseMatrix& m, int ranks,
                       std::int64_t elem_size_bytes);

// Seeded random pattern for oracle sweeps: small mixed counts with zero
// entries, fully silent ranks and self-heavy diagonals.
Pattern random_pattern(int ranks, std::uint64_t seed,
                       std::int64_t elem_size_bytes);

// Per-rank view of a Pattern: sendcounts from row r, recvcounts from column
// r, displacements as exclusive prefix sums (regions packed in rank order).
// Buffers are not bound; see RankExchange.
ExchangeSpec slice(const Pattern& pat, int rank);

/// A sliced spec plus the send/recv storage it points into. Not movable:
/// the spec holds spans into the member buffers.
class RankExchange {
public:
  RankExchange(const Pattern& pat, int rank);
  RankExchange(const RankExchange&) = delete;
  RankExchange& operator=(const RankExchange&) = delete;

  ExchangeSpec& spec() { return spec_; }
  const ExchangeSpec& spec() const { return spec_; }

private:
  std::vector<std::byte> send_;
  std::vector<std::byte> recv_;
  ExchangeSpec spec_;
};

// Deterministic fill: the sender's rank id, little-endian, truncated or
// repeated to the element size.
std::byte encode_byte(int sender, std::int64_t byte_in_element);

// Writes encode(rank) over every send region of the spec.
void fill_send(const ExchangeSpec& spec, int rank);

struct Mismatch {
  int peer = -1;
  std::int64_t byte_index = 0;  // within the region received from peer
  std::byte expected{};
  std::byte got{};
};

// Checks each received region against the fill rule; empty means success.
std::vector<Mismatch> validate_recv(const ExchangeSpec& spec);

}  // namespace rmaav

#endif  // RMAAV_PATTERN_HPP
