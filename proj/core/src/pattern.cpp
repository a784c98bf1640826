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

#include "rmaav/pattern.hpp"

#include <numeric>
#include <random>

namespace rmaav {

namespace {

void check_pattern_args(int ranks, std::int64_t elem_size_bytes,
                        const char* op) {
  if (ranks < 1)
    throw ArgumentError(std::string(op) + ": ranks must be >= 1");
  if (elem_size_bytes < 1)
    throw ArgumentError(std::string(op) + ": elem_size_bytes must be >= 1");
}

}  // namespace

Pattern uniform_pattern(int ranks, std::int64_t msg_size_bytes,
                        std::int64_t elem_size_bytes) {
  check_pattern_args(ranks, elem_size_bytes, "uniform_pattern");
  if (msg_size_bytes < 0)
    throw ArgumentError("uniform_pattern: negative msg_size_bytes");
  if (msg_size_bytes % elem_size_bytes != 0)
    throw ArgumentError("uniform_pattern: msg_size_bytes " +
                        std::to_string(msg_size_bytes) +
                        " is not divisible by elem_size_bytes " +
                        std::to_string(elem_size_bytes));
  Pattern pat;
  pat.ranks = ranks;
  pat.elem_size_bytes = elem_size_bytes;
  pat.name = "uniform";
  pat.counts_bytes.assign(
      static_cast<std::size_t>(ranks) * static_cast<std::size_t>(ranks),
      msg_size_bytes);
  return pat;
}

Pattern matrix_pattern(const SparseMatrix& m, int ranks,
                       std::int64_t elem_size_bytes) {
  check_pattern_args(ranks, elem_size_bytes, "matrix_pattern");
  if (m.n_rows != m.n_cols)
    throw ArgumentError("matrix_pattern: requires a square matrix, got " +
                        std::to_string(m.n_rows) + "x" +
                        std::to_string(m.n_cols));
  if (static_cast<std::int64_t>(ranks) > m.n_rows)
    throw ArgumentError("matrix_pattern: " + std::to_string(ranks) +
                        " ranks exceed " + std::to_string(m.n_rows) +
                        " matrix rows");
  const std::int64_t block = (m.n_rows + ranks - 1) / ranks;
  Pattern pat;
  pat.ranks = ranks;
  pat.elem_size_bytes = elem_size_bytes;
  pat.name = "matrix";
  pat.counts_bytes.assign(
      static_cast<std::size_t>(ranks) * static_cast<std::size_t>(ranks), 0);
  for (const auto& [i, j] : m.coords) {
    const auto r = static_cast<std::size_t>(i / block);
    const auto p = static_cast<std::size_t>(j / block);
    pat.counts_bytes[r * static_cast<std::size_t>(ranks) + p] +=
        elem_size_bytes;
  }
  return pat;
}

Pattern random_pattern(int ranks, std::uint64_t seed,
                       std::int64_t elem_size_bytes) {
  check_pattern_args(ranks, elem_size_bytes, "random_pattern");
  // raw engine draws only: std::mt19937_64 output is identical everywhere,
  // distributions are not
  std::mt19937_64 eng(seed);
  Pattern pat;
  pat.ranks = ranks;
  pat.elem_size_bytes = elem_size_bytes;
  pat.name = "random";
  const auto n = static_cast<std::size_t>(ranks);
  pat.counts_bytes.assign(n * n, 0);
  for (auto& c : pat.counts_bytes) {
    const bool zero = eng() % 4 == 0;
    c = zero ? 0
             : static_cast<std::int64_t>(eng() % 65) * elem_size_bytes;
  }
  if (ranks > 1 && eng() % 4 == 0) {
    // a fully silent rank: sends and receives nothing
    const auto z = static_cast<std::size_t>(eng() % static_cast<std::uint64_t>(ranks));
    for (std::size_t k = 0; k < n; ++k) {
      pat.counts_bytes[z * n + k] = 0;
      pat.counts_bytes[k * n + z] = 0;
    }
  }
  if (eng() % 3 == 0) {
    // self-heavy traffic: inflate the diagonal well past the off-diagonal
    for (std::size_t r = 0; r < n; ++r)
      pat.counts_bytes[r * n + r] =
          static_cast<std::int64_t>(64 + eng() % 256) * elem_size_bytes;
  }
  return pat;
}

ExchangeSpec slice(const Pattern& pat, int rank) {
  if (pat.ranks < 1) throw ArgumentError("slice: empty pattern");
  if (rank < 0 || rank >= pat.ranks)
    throw ArgumentError("slice: rank " + std::to_string(rank) +
                        " out of range");
  const auto n = static_cast<std::size_t>(pat.ranks);
  ExchangeSpec spec;
  spec.elem_size_bytes = pat.elem_size_bytes;
  spec.sendcounts.resize(n);
  spec.recvcounts.resize(n);
  spec.sdispls.resize(n);
  spec.rdispls.resize(n);
  for (std::size_t p = 0; p < n; ++p) {
    const std::int64_t sbytes = pat.at(rank, static_cast<int>(p));
    const std::int64_t rbytes = pat.at(static_cast<int>(p), rank);
    if (sbytes % pat.elem_size_bytes != 0 || rbytes % pat.elem_size_bytes != 0)
      throw ArgumentError("slice: pattern byte count not divisible by the "
                          "element size");
    spec.sendcounts[p] = sbytes / pat.elem_size_bytes;
    spec.recvcounts[p] = rbytes / pat.elem_size_bytes;
  }
  std::exclusive_scan(spec.sendcounts.begin(), spec.sendcounts.end(),
                      spec.sdispls.begin(), std::int64_t{0});
  std::exclusive_scan(spec.recvcounts.begin(), spec.recvcounts.end(),
                      spec.rdispls.begin(), std::int64_t{0});
  return spec;
}

RankExchange::RankExchange(const Pattern& pat, int rank)
    : spec_(slice(pat, rank)) {
  std::int64_t send_elems = 0;
  std::int64_t recv_elems = 0;
  for (std::size_t p = 0; p < spec_.sendcounts.size(); ++p) {
    send_elems += spec_.sendcounts[p];
    recv_elems += spec_.recvcounts[p];
  }
  send_.resize(static_cast<std::size_t>(send_elems * spec_.elem_size_bytes));
  recv_.resize(static_cast<std::size_t>(recv_elems * spec_.elem_size_bytes));
  spec_.send = send_;
  spec_.recv = recv_;
}

std::byte encode_byte(int sender, std::int64_t byte_in_element) {
  const auto value = static_cast<std::uint64_t>(sender);
  const auto shift = static_cast<unsigned>((byte_in_element & 7) * 8);
  return static_cast<std::byte>((value >> shift) & 0xFFu);
}

void fill_send(const ExchangeSpec& spec, int rank) {
  const std::int64_t esize = spec.elem_size_bytes;
  for (std::size_t p = 0; p < spec.sendcounts.size(); ++p) {
    const auto off = static_cast<std::size_t>(spec.sdispls[p] * esize);
    const auto len = static_cast<std::size_t>(spec.sendcounts[p] * esize);
    for (std::size_t b = 0; b < len; ++b)
      spec.send[off + b] =
          encode_byte(rank, static_cast<std::int64_t>(b) % esize);
  }
}

std::vector<Mismatch> validate_recv(const ExchangeSpec& spec) {
  std::vector<Mismatch> out;
  const std::int64_t esize = spec.elem_size_bytes;
  for (std::size_t p = 0; p < spec.recvcounts.size(); ++p) {
    const auto off = static_cast<std::size_t>(spec.rdispls[p] * esize);
    const auto len = static_cast<std::size_t>(spec.recvcounts[p] * esize);
    for (std::size_t b = 0; b < len; ++b) {
      const std::byte expected =
          encode_byte(static_cast<int>(p), static_cast<std::int64_t>(b) % esize);
      if (spec.recv[off + b] != expected)
        out.push_back(Mismatch{static_cast<int>(p),
                               static_cast<std::int64_t>(b), expected,
                               spec.recv[off + b]});
    }
  }
  return out;
}

}  // namespace rmaav
