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

#include "rmaav/collectives.hpp"

#include <algorithm>
#include <cstring>
#include <initializer_list>
#include <sstream>

namespace rmaav {

namespace {

void check_region_table(const std::vector<std::int64_t>& counts,
                        const std::vector<std::int64_t>& displs,
                        std::int64_t elem_size, std::size_t buffer_bytes,
                        const char* side, const char* op) {
  const int r = static_cast<int>(counts.size());
  for (int p = 0; p < r; ++p) {
    const auto i = static_cast<std::size_t>(p);
    if (counts[i] < 0 || displs[i] < 0)
      throw ArgumentError(std::string(op) + ": negative " + side +
                          " count or displacement for peer " +
                          std::to_string(p));
    const std::int64_t end = (displs[i] + counts[i]) * elem_size;
    if (end > static_cast<std::int64_t>(buffer_bytes))
      throw ArgumentError(std::string(op) + ": " + side + " region for peer " +
                          std::to_string(p) + " ends at byte " +
                          std::to_string(end) + ", past the " +
                          std::to_string(buffer_bytes) + "-byte buffer");
  }
  // pairwise-disjoint regions (zero-length regions cannot overlap)
  std::vector<std::pair<std::int64_t, int>> starts;
  for (int p = 0; p < r; ++p) {
    const auto i = static_cast<std::size_t>(p);
    if (counts[i] > 0) starts.emplace_back(displs[i], p);
  }
  std::sort(starts.begin(), starts.end());
  for (std::size_t k = 1; k < starts.size(); ++k) {
    const int prev = starts[k - 1].second;
    const auto pi = static_cast<std::size_t>(prev);
    if (displs[pi] + counts[pi] > starts[k].first)
      throw ArgumentError(std::string(op) + ": " + side +
                          " regions for peers " + std::to_string(prev) +
                          " and " + std::to_string(starts[k].second) +
                          " overlap");
  }
}

void validate_spec(const ExchangeSpec& spec, int world_size, const char* op) {
  const auto n = static_cast<std::size_t>(world_size);
  if (spec.sendcounts.size() != n || spec.sdispls.size() != n ||
      spec.recvcounts.size() != n || spec.rdispls.size() != n)
    throw ArgumentError(std::string(op) + ": count/displacement tables must "
                        "have one entry per rank (" +
                        std::to_string(world_size) + ")");
  if (spec.elem_size_bytes < 1)
    throw ArgumentError(std::string(op) + ": elem_size_bytes must be >= 1");
  check_region_table(spec.sendcounts, spec.sdispls, spec.elem_size_bytes,
                     spec.send.size(), "send", op);
  check_region_table(spec.recvcounts, spec.rdispls, spec.elem_size_bytes,
                     spec.recv.size(), "recv", op);
}

void check_uniform_elem_size(Rank& rank, const ExchangeSpec& spec,
                             const char* op) {
  const int r = rank.ctx().world_size;
  std::vector<std::int64_t> mine(static_cast<std::size_t>(r),
                                 spec.elem_size_bytes);
  const auto theirs = rank.alltoall_exchange(mine);
  for (int p = 0; p < r; ++p) {
    if (theirs[static_cast<std::size_t>(p)] != spec.elem_size_bytes)
      throw ArgumentError(
          std::string(op) + ": element size mismatch: rank " +
          std::to_string(rank.ctx().rank) + " uses " +
          std::to_string(spec.elem_size_bytes) + " bytes but rank " +
          std::to_string(p) + " uses " +
          std::to_string(theirs[static_cast<std::size_t>(p)]));
  }
}

void require_state(const PersistentRequest& req,
                   std::initializer_list<RequestState> allowed,
                   const char* op) {
  for (RequestState s : allowed)
    if (req.state == s) return;
  throw LifecycleError(std::string(op) + " on a request in state " +
                       to_string(req.state));
}

void require_variant(const PersistentRequest& req,
                     std::initializer_list<Variant> allowed, const char* op) {
  for (Variant v : allowed)
    if (req.variant == v) return;
  throw LifecycleError(std::string(op) + " on a " + to_string(req.variant) +
                       " request");
}

// Metadata exchanges shared by all persistent inits (target displacements,
// byte conversion, and the incoming-count overflow guard).
void init_exchanges(Rank& rank, const ExchangeSpec& spec,
                    PersistentRequest& req, const char* op) {
  const int r = rank.ctx().world_size;
  const std::int64_t esize = spec.elem_size_bytes;

  req.put_displs = rank.alltoall_exchange(spec.rdispls);
  for (auto& d : req.put_displs) d *= esize;

  req.send_bytes.resize(static_cast<std::size_t>(r));
  req.sdispl_bytes.resize(static_cast<std::size_t>(r));
  for (int p = 0; p < r; ++p) {
    const auto i = static_cast<std::size_t>(p);
    req.send_bytes[i] = spec.sendcounts[i] * esize;
    req.sdispl_bytes[i] = spec.sdispls[i] * esize;
  }

  const auto incoming = rank.alltoall_exchange(spec.sendcounts);
  for (int p = 0; p < r; ++p) {
    const auto i = static_cast<std::size_t>(p);
    if (incoming[i] > spec.recvcounts[i])
      throw ArgumentError(std::string(op) + ": receive overflow: rank " +
                          std::to_string(p) + " sends " +
                          std::to_string(incoming[i]) + " elements to rank " +
                          std::to_string(rank.ctx().rank) +
                          " but recvcounts allows only " +
                          std::to_string(spec.recvcounts[i]));
  }

  req.send = spec.send;
}

// Window acquisition shared by all persistent inits: element-size agreement,
// receive extent, packed-displacement check, cached window.
PersistentRequest init_window(Rank& rank, const ExchangeSpec& spec,
                              WindowCache& cache, Variant variant,
                              const char* op) {
  validate_spec(spec, rank.ctx().world_size, op);
  check_uniform_elem_size(rank, spec, op);

  const std::int64_t esize = spec.elem_size_bytes;
  std::int64_t total = 0;
  for (std::int64_t c : spec.recvcounts) total += c * esize;
  for (std::size_t i = 0; i < spec.recvcounts.size(); ++i) {
    const std::int64_t end = (spec.rdispls[i] + spec.recvcounts[i]) * esize;
    if (end > total)
      throw ArgumentError(std::string(op) + ": recv region for peer " +
                          std::to_string(i) + " ends at byte " +
                          std::to_string(end) + ", past the window extent " +
                          std::to_string(total) +
                          " (receive displacements must pack within "
                          "total_recv_bytes)");
  }

  PersistentRequest req;
  req.variant = variant;
  req.total_recv_bytes = total;
  req.window = cache.acquire(
      rank, spec.recv.first(static_cast<std::size_t>(total)), total);
  req.state = RequestState::Initialized;
  return req;
}

void issue_put(Rank& rank, const PersistentRequest& req, int peer) {
  const auto i = static_cast<std::size_t>(peer);
  if (req.send_bytes[i] <= 0) return;
  PutDescriptor desc;
  desc.origin_rank = rank.ctx().rank;
  desc.target_rank = peer;
  desc.origin_offset_bytes = req.sdispl_bytes[i];
  desc.target_offset_bytes = req.put_displs[i];
  desc.length_bytes = req.send_bytes[i];
  rank.put(req.window, desc,
           req.send.subspan(static_cast<std::size_t>(req.sdispl_bytes[i]),
                            static_cast<std::size_t>(req.send_bytes[i])));
}

void release_window(Rank& rank, PersistentRequest& req, WindowCache& cache) {
  if (cache.holds(req.window))
    cache.release(rank);
  else
    rank.win_free(req.window);
  req.state = RequestState::Freed;
}

}  // namespace

const char* to_string(Variant v) {
  switch (v) {
    case Variant::Baseline: return "baseline";
    case Variant::Fence: return "fence";
    case Variant::Lock: return "lock";
    case Variant::FenceHierarchy: return "fence-hier";
  }
  return "unknown";
}

std::optional<Variant> parse_variant(std::string_view name) {
  if (name == "baseline") return Variant::Baseline;
  if (name == "fence") return Variant::Fence;
  if (name == "lock") return Variant::Lock;
  if (name == "fence-hier") return Variant::FenceHierarchy;
  return std::nullopt;
}

const char* to_string(RequestState s) {
  switch (s) {
    case RequestState::Initialized: return "Initialized";
    case RequestState::Started: return "Started";
    case RequestState::Completed: return "Completed";
    case RequestState::Freed: return "Freed";
  }
  return "unknown";
}

// --- window cache ----------------------------------------------------------

WindowHandle WindowCache::acquire(Rank& rank, std::span<std::byte> recv,
                                  std::int64_t total_recv_bytes) {
  const int r = rank.ctx().world_size;
  const bool have = valid_;
  const bool hit = valid_ && cached_bytes_ == total_recv_bytes &&
                   cached_base_ == recv.data();
  const std::int64_t code = (have ? 2 : 0) + (hit ? 1 : 0);
  const std::vector<std::int64_t> mine(static_cast<std::size_t>(r), code);
  const auto votes = rank.alltoall_exchange(mine);

  bool all_have = true;
  bool any_have = false;
  bool all_hit = true;
  for (std::int64_t v : votes) {
    all_have = all_have && v >= 2;
    any_have = any_have || v >= 2;
    all_hit = all_hit && v == 3;
  }
  if (any_have && !all_have)
    throw ProtocolError(
        "window cache diverged: some ranks hold a cached window and others "
        "do not");
  if (all_have && all_hit) {
    ++hits_;
    return win_;
  }
  ++misses_;
  if (all_have) rank.win_free(win_);
  win_ = rank.win_create(recv, total_recv_bytes);
  valid_ = true;
  cached_bytes_ = total_recv_bytes;
  cached_base_ = recv.data();
  return win_;
}

void WindowCache::release(Rank& rank) {
  if (!valid_) return;
  rank.win_free(win_);
  valid_ = false;
  cached_bytes_ = -1;
  cached_base_ = nullptr;
}

// --- baseline ----------------------------------------------------------------

void alltoallv_baseline(Rank& rank, const ExchangeSpec& spec) {
  const int r = rank.ctx().world_size;
  validate_spec(spec, r, "alltoallv_baseline");
  check_uniform_elem_size(rank, spec, "alltoallv_baseline");

  const auto incoming = rank.alltoall_exchange(spec.sendcounts);
  for (int p = 0; p < r; ++p) {
    const auto i = static_cast<std::size_t>(p);
    if (incoming[i] != spec.recvcounts[i])
      throw ArgumentError("alltoallv_baseline: count mismatch: rank " +
                          std::to_string(p) + " sends " +
                          std::to_string(incoming[i]) + " elements to rank " +
                          std::to_string(rank.ctx().rank) +
                          ", whose recvcounts entry is " +
                          std::to_string(spec.recvcounts[i]));
  }

  const std::int64_t esize = spec.elem_size_bytes;
  std::vector<std::vector<std::byte>> out(static_cast<std::size_t>(r));
  for (int p = 0; p < r; ++p) {
    const auto i = static_cast<std::size_t>(p);
    const auto off = static_cast<std::size_t>(spec.sdispls[i] * esize);
    const auto len = static_cast<std::size_t>(spec.sendcounts[i] * esize);
    out[i].assign(spec.send.begin() + off, spec.send.begin() + off + len);
  }
  auto in = rank.exchange_bytes(std::move(out));
  for (int p = 0; p < r; ++p) {
    const auto i = static_cast<std::size_t>(p);
    if (in[i].empty()) continue;
    std::memcpy(spec.recv.data() + spec.rdispls[i] * esize, in[i].data(),
                in[i].size());
  }
}

// --- fence variant -----------------------------------------------------------

PersistentRequest alltoallv_fence_init(Rank& rank, const ExchangeSpec& spec,
                                       WindowCache& cache) {
  PersistentRequest req =
      init_window(rank, spec, cache, Variant::Fence, "alltoallv_fence_init");
  init_exchanges(rank, spec, req, "alltoallv_fence_init");
  return req;
}

void fence_start(Rank& rank, PersistentRequest& req) {
  require_variant(req, {Variant::Fence}, "fence_start");
  require_state(req, {RequestState::Initialized, RequestState::Completed},
                "fence_start");
  rank.fence(req.window, FenceAssert::NoStore | FenceAssert::NoPrecede);
  for (int p = 0; p < rank.ctx().world_size; ++p) issue_put(rank, req, p);
  req.state = RequestState::Started;
}

void fence_wait(Rank& rank, PersistentRequest& req) {
  require_variant(req, {Variant::Fence, Variant::FenceHierarchy},
                  "fence_wait");
  require_state(req, {RequestState::Started}, "fence_wait");
  rank.fence(req.window, FenceAssert::NoPut | FenceAssert::NoSucceed);
  req.state = RequestState::Completed;
}

// --- lock variant ------------------------------------------------------------

PersistentRequest alltoallv_lock_init(Rank& rank, const ExchangeSpec& spec,
                                      WindowCache& cache) {
  PersistentRequest req =
      init_window(rank, spec, cache, Variant::Lock, "alltoallv_lock_init");
  // exclusive self-lock: keeps other ranks off the window while metadata is
  // configured and between iterations
  rank.lock(req.window, rank.ctx().rank, LockMode::Exclusive);
  init_exchanges(rank, spec, req, "alltoallv_lock_init");
  return req;
}

void lock_start(Rank& rank, PersistentRequest& req) {
  require_variant(req, {Variant::Lock}, "lock_start");
  require_state(req, {RequestState::Initialized, RequestState::Completed},
                "lock_start");
  rank.unlock(req.window, rank.ctx().rank);
  rank.lock_all(req.window);
  for (int p = 0; p < rank.ctx().world_size; ++p) issue_put(rank, req, p);
  req.state = RequestState::Started;
}

void lock_wait(Rank& rank, PersistentRequest& req) {
  require_variant(req, {Variant::Lock}, "lock_wait");
  require_state(req, {RequestState::Started}, "lock_wait");
  rank.unlock_all(req.window);
  rank.barrier();
  rank.lock(req.window, rank.ctx().rank, LockMode::Exclusive);
  req.state = RequestState::Completed;
}

void lock_free(Rank& rank, PersistentRequest& req, WindowCache& cache) {
  require_variant(req, {Variant::Lock}, "lock_free");
  require_state(req, {RequestState::Initialized, RequestState::Completed},
                "lock_free");
  rank.unlock(req.window, rank.ctx().rank);
  release_window(rank, req, cache);
}

// --- fence-hierarchy variant ---------------------------------------------------

PersistentRequest alltoallv_fence_hierarchy_init(Rank& rank,
                                                 const ExchangeSpec& spec,
                                                 WindowCache& cache) {
  PersistentRequest req = init_window(rank, spec, cache,
                                      Variant::FenceHierarchy,
                                      "alltoallv_fence_hierarchy_init");
  init_exchanges(rank, spec, req, "alltoallv_fence_hierarchy_init");
  const RankContext& ctx = rank.ctx();
  for (int p = 0; p < ctx.world_size; ++p) {
    if (p / ctx.ppn == ctx.node_id)
      req.local_targets.push_back(p);
    else
      req.remote_targets.push_back(p);
  }
  return req;
}

void fence_hierarchy_start(Rank& rank, PersistentRequest& req) {
  require_variant(req, {Variant::FenceHierarchy}, "fence_hierarchy_start");
  require_state(req, {RequestState::Initialized, RequestState::Completed},
                "fence_hierarchy_start");
  rank.fence(req.window, FenceAssert::NoPrecede);
  for (int p : req.remote_targets) issue_put(rank, req, p);
  for (int p : req.local_targets) issue_put(rank, req, p);
  req.state = RequestState::Started;
}

// --- free + dispatch -----------------------------------------------------------

void free_request(Rank& rank, PersistentRequest& req, WindowCache& cache) {
  if (req.variant == Variant::Lock) {
    lock_free(rank, req, cache);
    return;
  }
  require_state(req, {RequestState::Initialized, RequestState::Completed},
                "free_request");
  release_window(rank, req, cache);
}

PersistentRequest init_request(Rank& rank, Variant variant,
                               const ExchangeSpec& spec, WindowCache& cache) {
  switch (variant) {
    case Variant::Fence: return alltoallv_fence_init(rank, spec, cache);
    case Variant::Lock: return alltoallv_lock_init(rank, spec, cache);
    case Variant::FenceHierarchy:
      return alltoallv_fence_hierarchy_init(rank, spec, cache);
    case Variant::Baseline: break;
  }
  throw ArgumentError("init_request: the baseline variant has no persistent "
                      "request");
}

void start_request(Rank& rank, PersistentRequest& req) {
  switch (req.variant) {
    case Variant::Fence: fence_start(rank, req); return;
    case Variant::Lock: lock_start(rank, req); return;
    case Variant::FenceHierarchy: fence_hierarchy_start(rank, req); return;
    case Variant::Baseline: break;
  }
  throw ArgumentError("start_request: invalid request variant");
}

void wait_request(Rank& rank, PersistentRequest& req) {
  switch (req.variant) {
    case Variant::Fence:
    case Variant::FenceHierarchy: fence_wait(rank, req); return;
    case Variant::Lock: lock_wait(rank, req); return;
    case Variant::Baseline: break;
  }
  throw ArgumentError("wait_request: invalid request variant");
}

namespace detail {

void lock_wait_unsynchronized(Rank& rank, PersistentRequest& req) {
  require_variant(req, {Variant::Lock}, "lock_wait_unsynchronized");
  require_state(req, {RequestState::Started}, "lock_wait_unsynchronized");
  rank.unlock_all(req.window);
  req.state = RequestState::Completed;
}

}  // namespace detail

}  // namespace rmaav
