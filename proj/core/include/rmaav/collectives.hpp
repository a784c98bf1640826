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

#ifndef RMAAV_COLLECTIVES_HPP
#define RMAAV_COLLECTIVES_HPP

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rmaav/runtime.hpp"

namespace rmaav {

// Baseline two-sided Alltoallv plus three persistent one-sided variants
// (fence, lock, fence-hierarchy) with an init/start/wait/free lifecycle.
// A request caches everything start needs: byte-converted counts and
// displacements, the per-peer target offsets obtained by exchanging receive
// displacements, and the window over the receive buffer. Windows are reused
// across inits through a WindowCache while the receive extent and buffer
// stay the same.

/// Full Alltoallv argument set for one rank. Counts and displacements are in
/// elements; buffers are raw bytes. The spec only borrows the buffers: they
/// must outlive any request initialized from it.
struct ExchangeSpec {
  std::vector<std::int64_t> sendcounts;
  std::vector<std::int64_t> sdispls;
  std::vector<std::int64_t> recvcounts;
  std::vector<std::int64_t> rdispls;
  std::int64_t elem_size_bytes = 1;
  std::span<std::byte> send;
  std::span<std::byte> recv;
};

enum class Variant { Baseline, Fence, Lock, FenceHierarchy };

const char* to_string(Variant v);
std::optional<Variant> parse_variant(std::string_view name);

enum class RequestState { Initialized, Started, Completed, Freed };

const char* to_string(RequestState s);

/// Persistent-collective state captured at init and reused by start/wait.
/// Owned by one rank; holds views into the caller's buffers.
struct PersistentRequest {
  Variant variant = Variant::Fence;
  WindowHandle window;
  std::vector<std::int64_t> put_displs;    // byte offset in peer p's window
  std::vector<std::int64_t> send_bytes;    // bytes sent to peer p
  std::vector<std::int64_t> sdispl_bytes;  // byte offset in the send buffer
  std::int64_t total_recv_bytes = 0;
  std::vector<int> remote_targets;  // hierarchy variant only, ascending
  std::vector<int> local_targets;   // hierarchy variant only, ascending
  RequestState state = RequestState::Initialized;
  std::span<const std::byte> send;
};

/// One reusable window slot per cache: a hit (same receive extent and buffer)
/// returns the existing window and generation; anything else frees and
/// recreates. Acquire is collective and all ranks must agree on the outcome.
class WindowCache {
public:
  WindowHandle acquire(Rank& rank, std::span<std::byte> recv,
                       std::int64_t total_recv_bytes);

  // Collective; frees the cached window if one is held.
  void release(Rank& rank);

  bool holds(WindowHandle win) const { return valid_ && win_ == win; }
  std::uint64_t hits() const { return hits_; }
  std::uint64_t misses() const { return misses_; }

private:
  bool valid_ = false;
  WindowHandle win_;
  std::int64_t cached_bytes_ = -1;
  const std::byte* cached_base_ = nullptr;
  std::uint64_t hits_ = 0;
  std::uint64_t misses_ = 0;
};

// Two-sided reference implementation; the correctness oracle for the RMA
// variants. Collective. Requires exactly matching counts: rank r's
// sendcounts[p] must equal rank p's recvcounts[r].
void alltoallv_baseline(Rank& rank, const ExchangeSpec& spec);

// Persistent lifecycle. Init is collective; start/wait are rank-local except
// for the epoch synchronization they perform. A request returned by init is
// in Initialized state; start moves it to Started, wait to Completed, and a
// completed request can be started again. Free releases the window (the
// cache slot is cleared when it held that window).
PersistentRequest alltoallv_fence_init(Rank& rank, const ExchangeSpec& spec,
                                       WindowCache& cache);
void fence_start(Rank& rank, PersistentRequest& req);
void fence_wait(Rank& rank, PersistentRequest& req);

PersistentRequest alltoallv_lock_init(Rank& rank, const ExchangeSpec& spec,
                                      WindowCache& cache);
void lock_start(Rank& rank, PersistentRequest& req);
void lock_wait(Rank& rank, PersistentRequest& req);
void lock_free(Rank& rank, PersistentRequest& req, WindowCache& cache);

PersistentRequest alltoallv_fence_hierarchy_init(Rank& rank,
                                                 const ExchangeSpec& spec,
                                                 WindowCache& cache);
void fence_hierarchy_start(Rank& rank, PersistentRequest& req);
// The hierarchy variant closes its epoch with fence_wait.

// Frees any variant's request: lock requests are routed through lock_free,
// fence ones release the window directly.
void free_request(Rank& rank, PersistentRequest& req, WindowCache& cache);

// Variant-dispatching helpers for harness code.
PersistentRequest init_request(Rank& rank, Variant variant,
                               const ExchangeSpec& spec, WindowCache& cache);
void start_request(Rank& rank, PersistentRequest& req);
void wait_request(Rank& rank, PersistentRequest& req);

namespace detail {
// Test hook: closes the lock epoch without the trailing barrier or the
// exclusive self-lock reacquisition, leaving the receive buffer exposed to
// reads that race other ranks' still-open epochs.
void lock_wait_unsynchronized(Rank& rank, PersistentRequest& req);
}  // namespace detail

}  // namespace rmaav

#endif  // RMAAV_COLLECTIVES_HPP
