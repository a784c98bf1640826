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

#ifndef RMAAV_RUNTIME_HPP
#define RMAAV_RUNTIME_HPP

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "rmaav/errors.hpp"

namespace rmaav {

// Simulated multi-rank runtime: byte-addressable RMA windows, one-sided put,
// fence epochs with assertion hints, passive-target locks, a barrier and a
// small scalar all-to-all exchange. One worker thread per rank; window bytes
// are owned by their rank and mutated by the runtime only at epoch close.
// Puts are buffered per epoch and applied atomically when the epoch closes
// (a fence, unlock or unlock_all); eager delivery is available as a config
// option. In validating mode the runtime additionally checks fence assertion
// hints, records a put/lock trace and flags reads that race open epochs.

struct RankContext {
  int rank = 0;
  int world_size = 1;
  int ppn = 1;
  int node_id = 0;  // rank / ppn, contiguous blocks
};

struct WorldConfig {
  int ranks = 1;
  int ppn = 1;
  bool validate = false;        // enable protocol checks + event trace
  bool eager_delivery = false;  // apply puts at issue instead of epoch close
  double timeout_s = 30.0;      // blocking-call deadline; converts deadlocks
                                // into diagnosable failures
};

/// Handle to a window created by a collective win_create. The generation
/// distinguishes a recreated window from a stale handle to the freed one.
struct WindowHandle {
  int slot = -1;
  std::uint64_t generation = 0;

  friend bool operator==(const WindowHandle&, const WindowHandle&) = default;
};

enum class EpochState { Idle, FenceOpen, LockAllOpen, SelfLockedExclusive };

enum class LockMode { Exclusive, Shared };

// Fence assertion hints. NoPut/NoSucceed are checked in validating mode;
// NoStore/NoPrecede are recorded but not checked (they constrain local
// stores the simulator does not track).
enum class FenceAssert : unsigned {
  None = 0,
  NoStore = 1u << 0,
  NoPrecede = 1u << 1,
  NoPut = 1u << 2,
  NoSucceed = 1u << 3,
};

constexpr FenceAssert operator|(FenceAssert a, FenceAssert b) {
  return static_cast<FenceAssert>(static_cast<unsigned>(a) |
                                  static_cast<unsigned>(b));
}

constexpr bool has_assert(FenceAssert set, FenceAssert flag) {
  return (static_cast<unsigned>(set) & static_cast<unsigned>(flag)) != 0;
}

struct PutDescriptor {
  int origin_rank = 0;
  int target_rank = 0;
  std::int64_t origin_offset_bytes = 0;
  std::int64_t target_offset_bytes = 0;
  std::int64_t length_bytes = 0;
};

// Validating-mode event trace. seq is a single world-wide counter, so issue
// and delivery order are directly comparable across ranks.
enum class TraceKind {
  PutIssue,
  PutDeliver,
  LockAcquire,
  LockRelease,
  LockAllAcquire,
  LockAllRelease,
  FencePass,
};

struct TraceEvent {
  std::uint64_t seq = 0;
  TraceKind kind = TraceKind::PutIssue;
  int rank = -1;    // acting rank (origin for puts)
  int target = -1;  // target rank for puts/locks, -1 otherwise
  int window_slot = -1;
  std::int64_t bytes = 0;
  std::uint64_t issue_seq = 0;  // PutDeliver: seq of the matching PutIssue
};

namespace detail {
class World;
}

/// Per-rank facade handed to the world program. All runtime calls for rank r
/// must be made through r's Rank object, from r's worker thread.
class Rank {
public:
  const RankContext& ctx() const { return ctx_; }

  // Collective. Every rank exposes its own region; sizes may differ.
  WindowHandle win_create(std::span<std::byte> region,
                          std::int64_t size_bytes);

  // Collective. The window must be quiescent: no open epochs, no locks, no
  // undelivered puts.
  void win_free(WindowHandle win);

  // Collective over all ranks. Closes any open fence epoch on this window
  // (delivering its puts) and opens a new one unless NoSucceed is asserted.
  void fence(WindowHandle win, FenceAssert asserts = FenceAssert::None);

  // One-sided. Requires an epoch granting access to the target: an open
  // fence epoch, lock_all, or a lock held on the target. payload.size()
  // must equal desc.length_bytes; zero length is a no-op.
  void put(WindowHandle win, const PutDescriptor& desc,
           std::span<const std::byte> payload);

  void lock(WindowHandle win, int target_rank, LockMode mode);
  void unlock(WindowHandle win, int target_rank);
  void lock_all(WindowHandle win);
  void unlock_all(WindowHandle win);

  void barrier();

  // Collective transpose of one scalar per peer: result[p] on rank r is the
  // value rank p placed at index r.
  std::vector<std::int64_t> alltoall_exchange(
      std::span<const std::int64_t> send);

  // Collective transpose of one byte payload per peer; the two-sided data
  // path used by the baseline alltoallv. Does not touch windows or epochs.
  std::vector<std::vector<std::byte>> exchange_bytes(
      std::vector<std::vector<std::byte>> send);

  // Validating mode: raise ProtocolError if reading this rank's window
  // region would race an open epoch (foreign lock epoch, open fence epoch,
  // or undelivered puts). No-op when validation is off.
  void check_read(WindowHandle win) const;

  EpochState epoch_state(WindowHandle win) const;

  // Size of this rank's own region of the window.
  std::int64_t win_size_bytes(WindowHandle win) const;

  bool validating() const;

  // Validating-mode introspection. put_events filters the world trace to
  // puts issued by this rank, in issue order.
  std::vector<TraceEvent> put_events() const;
  std::vector<TraceEvent> trace_events() const;
  std::vector<std::string> warnings() const;

private:
  friend class detail::World;
  Rank(detail::World& world, RankContext ctx) : world_(&world), ctx_(ctx) {}

  detail::World* world_;
  RankContext ctx_;
};

namespace detail {
// Runs `program` once per rank on dedicated threads; rethrows the first
// failure as WorldError after all workers stopped.
void run_world(const WorldConfig& cfg,
               const std::function<void(Rank&)>& program);
}  // namespace detail

/// Spawn a world of cfg.ranks workers, run `program` concurrently on each,
/// and return the per-rank results (indexed by rank). Any rank's error
/// aborts the world and is surfaced as WorldError naming rank and cause.
template <typename Program>
auto spawn_world(const WorldConfig& cfg, Program&& program) {
  using Result = std::invoke_result_t<Program&, Rank&>;
  if constexpr (std::is_void_v<Result>) {
    detail::run_world(cfg, [&](Rank& rank) { program(rank); });
  } else {
    std::vector<std::optional<Result>> slots(
        static_cast<std::size_t>(cfg.ranks));
    detail::run_world(cfg, [&](Rank& rank) {
      slots[static_cast<std::size_t>(rank.ctx().rank)] = program(rank);
    });
    std::vector<Result> out;
    out.reserve(slots.size());
    for (auto& slot : slots) out.push_back(std::move(*slot));
    return out;
  }
}

}  // namespace rmaav

#endif  // RMAAV_RUNTIME_HPP
