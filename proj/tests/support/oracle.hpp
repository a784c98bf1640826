// Copyright 2026 the rmaav authors
// SPDX-License-Identifier: Apache-2.0
//
// Test-local reference implementation of the exchange: a plain
// single-process copy loop over every (sender, receiver) pair.  Kept
// deliberately independent of the runtime so library results can be
// checked against something that cannot share their bugs.

#pragma once

#include <cstddef>
#include <cstring>
#include <vector>

#include "rmaav/pattern.hpp"

namespace rmaav_test {

// Expected receive buffer for every rank of `pat`, with send buffers
// filled by the standard fill rule.
inline std::vector<std::vector<std::byte>> expected_recv(
    const rmaav::Pattern& pat) {
  const int R = pat.ranks;
  const std::int64_t e = pat.elem_size_bytes;

  std::vector<std::vector<std::byte>> send(static_cast<std::size_t>(R));
  std::vector<std::vector<std::byte>> recv(static_cast<std::size_t>(R));
  std::vector<rmaav::ExchangeSpec> specs;
  specs.reserve(static_cast<std::size_t>(R));

  for (int r = 0; r < R; ++r) {
    rmaav::ExchangeSpec spec = rmaav::slice(pat, r);
    std::int64_t stot = 0;
    std::int64_t rtot = 0;
    for (int p = 0; p < R; ++p) {
      stot += spec.sendcounts[static_cast<std::size_t>(p)];
      rtot += spec.recvcounts[static_cast<std::size_t>(p)];
    }
    send[static_cast<std::size_t>(r)].resize(
        static_cast<std::size_t>(stot * e));
    recv[static_cast<std::size_t>(r)].resize(
        static_cast<std::size_t>(rtot * e));
    spec.send = send[static_cast<std::size_t>(r)];
    spec.recv = recv[static_cast<std::size_t>(r)];
    rmaav::fill_send(spec, r);
    specs.push_back(std::move(spec));
  }

  for (int s = 0; s < R; ++s) {
    const rmaav::ExchangeSpec& src = specs[static_cast<std::size_t>(s)];
    for (int r = 0; r < R; ++r) {
      const rmaav::ExchangeSpec& dst = specs[static_cast<std::size_t>(r)];
      const std::int64_t n = src.sendcounts[static_cast<std::size_t>(r)] * e;
      if (n == 0) continue;
      std::memcpy(
          dst.recv.data() + dst.rdispls[static_cast<std::size_t>(s)] * e,
          src.send.data() + src.sdispls[static_cast<std::size_t>(r)] * e,
          static_cast<std::size_t>(n));
    }
  }
  return recv;
}

}  // namespace rmaav_test
