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

#include "rmaav/runtime.hpp"

#include <algorithm>
#include <chrono>
#include <condition_variable>
#include <cstring>
#include <mutex>
#include <sstream>
#include <thread>

namespace rmaav {
namespace detail {

namespace {

using Clock = std::chrono::steady_clock;

enum class CollKind {
  None,
  Barrier,
  Fence,
  WinCreate,
  WinFree,
  Alltoall,
  BytesExchange
};

const char* coll_name(CollKind k) {
  switch (k) {
    case CollKind::Barrier: return "barrier";
    case CollKind::Fence: return "fence";
    case CollKind::WinCreate: return "win_create";
    case CollKind::WinFree: return "win_free";
    case CollKind::Alltoall: return "alltoall_exchange";
    case CollKind::BytesExchange: return "exchange_bytes";
    default: return "none";
  }
}

}  // namespace

class World {
public:
  explicit World(const WorldConfig& cfg)
      : cfg_(cfg),
        timeout_(std::chrono::duration_cast<Clock::duration>(
            std::chrono::duration<double>(cfg.timeout_s))) {
    if (cfg.ranks < 1) throw ArgumentError("spawn_world: ranks must be >= 1");
    if (cfg.ppn < 1) throw ArgumentError("spawn_world: ppn must be >= 1");
    if (cfg.timeout_s <= 0.0)
      throw ArgumentError("spawn_world: timeout_s must be positive");
    const auto n = static_cast<std::size_t>(cfg.ranks);
    coll_.fence_asserts.resize(n);
    coll_.create_base.resize(n);
    coll_.create_size.resize(n);
    coll_.a2a_in.resize(n);
    coll_.a2a_out.resize(n);
    coll_.bytes_in.resize(n);
    coll_.bytes_out.resize(n);
    errors_.resize(n);
    exited_.resize(n, 0);
  }

  void run(const std::function<void(Rank&)>& program) {
    std::vector<std::thread> workers;
    workers.reserve(static_cast<std::size_t>(cfg_.ranks));
    for (int r = 0; r < cfg_.ranks; ++r) {
      workers.emplace_back([this, r, &program] {
        Rank rank(*this, RankContext{r, cfg_.ranks, cfg_.ppn, r / cfg_.ppn});
        try {
          program(rank);
        } catch (...) {
          std::lock_guard<std::mutex> g(mu_);
          errors_[static_cast<std::size_t>(r)] = std::current_exception();
          if (!aborted_) {
            aborted_ = true;
            abort_rank_ = r;
          }
          cv_.notify_all();
        }
        // The program's buffers are gone once it returns or unwinds, so the
        // world must stop writing into this rank's window regions.
        std::lock_guard<std::mutex> g(mu_);
        exited_[static_cast<std::size_t>(r)] = 1;
        cv_.notify_all();
      });
    }
    for (auto& w : workers) w.join();
    if (aborted_) {
      std::string cause = "unknown error";
      try {
        std::rethrow_exception(errors_[static_cast<std::size_t>(abort_rank_)]);
      } catch (const std::exception& e) {
        cause = e.what();
      } catch (...) {
      }
      throw WorldError(abort_rank_, cause);
    }
  }

  // --- windows -----------------------------------------------------------

  WindowHandle win_create(int rank, std::span<std::byte> region,
                          std::int64_t size_bytes) {
    if (size_bytes < 0)
      throw ArgumentError("win_create: negative size_bytes");
    if (size_bytes != static_cast<std::int64_t>(region.size()))
      throw ArgumentError(
          "win_create: size_bytes " + std::to_string(size_bytes) +
          " does not match region length " + std::to_string(region.size()));
    std::unique_lock<std::mutex> lk(mu_);
    run_collective(
        lk, rank, CollKind::WinCreate, 0,
        [&] {
          coll_.create_base[static_cast<std::size_t>(rank)] = region.data();
          coll_.create_size[static_cast<std::size_t>(rank)] = size_bytes;
        },
        [&] {
          std::size_t slot = windows_.size();
          for (std::size_t i = 0; i < windows_.size(); ++i) {
            if (!windows_[i].in_use) {
              slot = i;
              break;
            }
          }
          if (slot == windows_.size()) windows_.emplace_back();
          WindowSlot& w = windows_[slot];
          const auto n = static_cast<std::size_t>(cfg_.ranks);
          w.in_use = true;
          ++w.generation;
          w.base = coll_.create_base;
          w.size = coll_.create_size;
          w.fence_open.assign(n, 0);
          w.asserts.assign(n, FenceAssert::None);
          w.locks.assign(n, TargetLockState{});
          w.lock_all_open.assign(n, 0);
          w.holds_lock.assign(n, std::vector<char>(n, 0));
          w.pending.clear();
          coll_.created = WindowHandle{static_cast<int>(slot), w.generation};
        });
    return coll_.created;
  }

  void win_free(int rank, WindowHandle win) {
    std::unique_lock<std::mutex> lk(mu_);
    WindowSlot& w = resolve(win, "win_free");
    if (w.fence_open[static_cast<std::size_t>(rank)])
      throw ProtocolError("win_free inside an open fence epoch (rank " +
                          std::to_string(rank) + ")");
    if (w.lock_all_open[static_cast<std::size_t>(rank)] || holds_any(w, rank))
      throw ProtocolError("win_free while rank " + std::to_string(rank) +
                          " holds a lock epoch on the window");
    run_collective(
        lk, rank, CollKind::WinFree, window_key(win), [] {},
        [&] {
          // re-check global quiescence; per-rank checks above already cover
          // fence epochs and the caller's own locks
          for (int t = 0; t < cfg_.ranks; ++t) {
            const TargetLockState& ls = w.locks[static_cast<std::size_t>(t)];
            if (ls.exclusive != -1 || !ls.shared.empty())
              throw ProtocolError("win_free while window is locked (target " +
                                  std::to_string(t) + ")");
          }
          if (!w.pending.empty())
            throw ProtocolError("win_free with undelivered puts");
          w.in_use = false;
          w.base.clear();
          w.size.clear();
          w.pending.clear();
        });
  }

  // --- fence epochs ------------------------------------------------------

  void fence(int rank, WindowHandle win, FenceAssert asserts) {
    std::unique_lock<std::mutex> lk(mu_);
    WindowSlot& w = resolve(win, "fence");
    if (w.lock_all_open[static_cast<std::size_t>(rank)] || holds_any(w, rank))
      throw ProtocolError("fence while rank " + std::to_string(rank) +
                          " has an open lock epoch on the window");
    run_collective(
        lk, rank, CollKind::Fence, window_key(win),
        [&] { coll_.fence_asserts[static_cast<std::size_t>(rank)] = asserts; },
        [&] {
          deliver(w, win.slot, [](const PendingPut&) { return true; });
          for (int r = 0; r < cfg_.ranks; ++r) {
            const auto i = static_cast<std::size_t>(r);
            w.asserts[i] = coll_.fence_asserts[i];
            w.fence_open[i] =
                has_assert(coll_.fence_asserts[i], FenceAssert::NoSucceed) ? 0
                                                                           : 1;
          }
          trace(TraceKind::FencePass, -1, -1, win.slot, 0, 0);
        });
  }

  // --- one-sided put -----------------------------------------------------

  void put(int rank, WindowHandle win, const PutDescriptor& desc,
           std::span<const std::byte> payload) {
    std::unique_lock<std::mutex> lk(mu_);
    WindowSlot& w = resolve(win, "put");
    if (desc.origin_rank != rank)
      throw ArgumentError("put: descriptor origin_rank " +
                          std::to_string(desc.origin_rank) +
                          " does not match calling rank " +
                          std::to_string(rank));
    if (desc.target_rank < 0 || desc.target_rank >= cfg_.ranks)
      throw ArgumentError("put: target rank " +
                          std::to_string(desc.target_rank) + " out of range");
    if (desc.length_bytes < 0 || desc.origin_offset_bytes < 0 ||
        desc.target_offset_bytes < 0)
      throw ArgumentError("put: negative offset or length");
    if (desc.length_bytes != static_cast<std::int64_t>(payload.size()))
      throw ArgumentError("put: length_bytes " +
                          std::to_string(desc.length_bytes) +
                          " does not match payload size " +
                          std::to_string(payload.size()));
    const auto t = static_cast<std::size_t>(desc.target_rank);
    if (desc.target_offset_bytes + desc.length_bytes > w.size[t]) {
      std::ostringstream os;
      os << "put out of bounds at target rank " << desc.target_rank
         << ": offset " << desc.target_offset_bytes << " + length "
         << desc.length_bytes << " exceeds window size " << w.size[t];
      throw ArgumentError(os.str());
    }

    const auto o = static_cast<std::size_t>(rank);
    PendingPut::Via via;
    if (w.fence_open[o]) {
      via = PendingPut::Via::Fence;
    } else if (w.lock_all_open[o]) {
      via = PendingPut::Via::LockAll;
    } else if (w.holds_lock[o][t] != 0) {
      via = PendingPut::Via::Lock;
    } else {
      throw ProtocolError("put with no open epoch granting access to target " +
                          std::to_string(desc.target_rank) + " (origin rank " +
                          std::to_string(rank) + ")");
    }
    if (cfg_.validate && via == PendingPut::Via::Fence &&
        (has_assert(w.asserts[t], FenceAssert::NoPut) ||
         has_assert(w.asserts[t], FenceAssert::NoSucceed)))
      throw ProtocolError(
          "put violates the NoPut/NoSucceed fence assertion on target " +
          std::to_string(desc.target_rank) + "'s window");

    const std::uint64_t issue = ++seq_;
    trace(TraceKind::PutIssue, rank, desc.target_rank, win.slot,
          desc.length_bytes, issue);
    if (cfg_.eager_delivery) {
      if (desc.length_bytes > 0 && !exited_[t])
        std::memcpy(w.base[t] + desc.target_offset_bytes, payload.data(),
                    payload.size());
      trace(TraceKind::PutDeliver, rank, desc.target_rank, win.slot,
            desc.length_bytes, issue);
      return;
    }
    w.pending.push_back(PendingPut{
        rank, desc.target_rank, desc.target_offset_bytes,
        std::vector<std::byte>(payload.begin(), payload.end()), issue, via});
  }

  // --- passive-target locks ----------------------------------------------

  void lock(int rank, WindowHandle win, int target, LockMode mode) {
    std::unique_lock<std::mutex> lk(mu_);
    WindowSlot& w = resolve(win, "lock");
    if (target < 0 || target >= cfg_.ranks)
      throw ArgumentError("lock: target rank out of range");
    const auto o = static_cast<std::size_t>(rank);
    const auto t = static_cast<std::size_t>(target);
    if (w.fence_open[o])
      throw ProtocolError("lock while a fence epoch is open on the window");
    if (w.lock_all_open[o])
      throw ProtocolError("lock on target " + std::to_string(target) +
                          " while a lock_all epoch is open");
    if (w.holds_lock[o][t] != 0)
      throw ProtocolError("lock: rank " + std::to_string(rank) +
                          " already holds a lock on target " +
                          std::to_string(target));
    TargetLockState& ls = w.locks[t];
    if (mode == LockMode::Exclusive) {
      wait_until(
          lk, rank, "lock(exclusive)",
          [&] { return ls.exclusive == -1 && ls.shared.empty(); });
      ls.exclusive = rank;
      w.holds_lock[o][t] = 2;
    } else {
      wait_until(lk, rank, "lock(shared)", [&] { return ls.exclusive == -1; });
      ls.shared.push_back(rank);
      w.holds_lock[o][t] = 1;
    }
    trace(TraceKind::LockAcquire, rank, target, win.slot, 0, 0);
  }

  void unlock(int rank, WindowHandle win, int target) {
    std::unique_lock<std::mutex> lk(mu_);
    WindowSlot& w = resolve(win, "unlock");
    if (target < 0 || target >= cfg_.ranks)
      throw ArgumentError("unlock: target rank out of range");
    const auto o = static_cast<std::size_t>(rank);
    const auto t = static_cast<std::size_t>(target);
    if (w.holds_lock[o][t] == 0)
      throw ProtocolError("unlock without a matching lock on target " +
                          std::to_string(target) + " (rank " +
                          std::to_string(rank) + ")");
    deliver(w, win.slot, [&](const PendingPut& p) {
      return p.via == PendingPut::Via::Lock && p.origin == rank &&
             p.target == target;
    });
    TargetLockState& ls = w.locks[t];
    if (w.holds_lock[o][t] == 2) {
      ls.exclusive = -1;
    } else {
      ls.shared.erase(std::find(ls.shared.begin(), ls.shared.end(), rank));
    }
    w.holds_lock[o][t] = 0;
    trace(TraceKind::LockRelease, rank, target, win.slot, 0, 0);
    cv_.notify_all();
  }

  void lock_all(int rank, WindowHandle win) {
    std::unique_lock<std::mutex> lk(mu_);
    WindowSlot& w = resolve(win, "lock_all");
    const auto o = static_cast<std::size_t>(rank);
    if (w.fence_open[o])
      throw ProtocolError(
          "lock_all while a fence epoch is open on the window");
    if (w.lock_all_open[o])
      throw ProtocolError("nested lock_all (rank " + std::to_string(rank) +
                          ")");
    if (holds_any(w, rank))
      throw ProtocolError("lock_all while holding per-target locks");
    for (int t = 0; t < cfg_.ranks; ++t) {
      TargetLockState& ls = w.locks[static_cast<std::size_t>(t)];
      wait_until(lk, rank, "lock_all", [&] { return ls.exclusive == -1; });
      ls.shared.push_back(rank);
    }
    w.lock_all_open[o] = 1;
    trace(TraceKind::LockAllAcquire, rank, -1, win.slot, 0, 0);
  }

  void unlock_all(int rank, WindowHandle win) {
    std::unique_lock<std::mutex> lk(mu_);
    WindowSlot& w = resolve(win, "unlock_all");
    const auto o = static_cast<std::size_t>(rank);
    if (!w.lock_all_open[o])
      throw ProtocolError("unlock_all without a matching lock_all (rank " +
                          std::to_string(rank) + ")");
    deliver(w, win.slot, [&](const PendingPut& p) {
      return p.via == PendingPut::Via::LockAll && p.origin == rank;
    });
    for (int t = 0; t < cfg_.ranks; ++t) {
      TargetLockState& ls = w.locks[static_cast<std::size_t>(t)];
      ls.shared.erase(std::find(ls.shared.begin(), ls.shared.end(), rank));
    }
    w.lock_all_open[o] = 0;
    trace(TraceKind::LockAllRelease, rank, -1, win.slot, 0, 0);
    cv_.notify_all();
  }

  // --- collectives without window state -----------------------------------

  void barrier(int rank) {
    std::unique_lock<std::mutex> lk(mu_);
    run_collective(lk, rank, CollKind::Barrier, 0, [] {}, [] {});
  }

  std::vector<std::int64_t> alltoall_exchange(
      int rank, std::span<const std::int64_t> send) {
    if (send.size() != static_cast<std::size_t>(cfg_.ranks))
      throw ArgumentError("alltoall_exchange: expected " +
                          std::to_string(cfg_.ranks) + " values, got " +
                          std::to_string(send.size()));
    std::unique_lock<std::mutex> lk(mu_);
    run_collective(
        lk, rank, CollKind::Alltoall, 0,
        [&] {
          coll_.a2a_in[static_cast<std::size_t>(rank)].assign(send.begin(),
                                                              send.end());
        },
        [&] {
          const auto n = static_cast<std::size_t>(cfg_.ranks);
          for (std::size_t r = 0; r < n; ++r) {
            coll_.a2a_out[r].resize(n);
            for (std::size_t p = 0; p < n; ++p)
              coll_.a2a_out[r][p] = coll_.a2a_in[p][r];
          }
        });
    return std::move(coll_.a2a_out[static_cast<std::size_t>(rank)]);
  }

  std::vector<std::vector<std::byte>> exchange_bytes(
      int rank, std::vector<std::vector<std::byte>> send) {
    if (send.size() != static_cast<std::size_t>(cfg_.ranks))
      throw ArgumentError("exchange_bytes: expected " +
                          std::to_string(cfg_.ranks) + " payloads, got " +
                          std::to_string(send.size()));
    std::unique_lock<std::mutex> lk(mu_);
    run_collective(
        lk, rank, CollKind::BytesExchange, 0,
        [&] { coll_.bytes_in[static_cast<std::size_t>(rank)] = std::move(send); },
        [&] {
          const auto n = static_cast<std::size_t>(cfg_.ranks);
          for (std::size_t r = 0; r < n; ++r) {
            coll_.bytes_out[r].resize(n);
            for (std::size_t p = 0; p < n; ++p)
              coll_.bytes_out[r][p] = std::move(coll_.bytes_in[p][r]);
          }
        });
    return std::move(coll_.bytes_out[static_cast<std::size_t>(rank)]);
  }

  // --- validating-mode checks and introspection ---------------------------

  void check_read(int rank, WindowHandle win) {
    std::unique_lock<std::mutex> lk(mu_);
    WindowSlot& w = resolve(win, "check_read");
    if (!cfg_.validate) return;
    const auto me = static_cast<std::size_t>(rank);
    if (w.fence_open[me])
      throw ProtocolError("read of window region during an open fence epoch "
                          "(rank " +
                          std::to_string(rank) + ")");
    const TargetLockState& ls = w.locks[me];
    if (ls.exclusive != -1 && ls.exclusive != rank)
      throw ProtocolError("read of window region during an open lock epoch: "
                          "rank " +
                          std::to_string(ls.exclusive) +
                          " holds an exclusive lock on rank " +
                          std::to_string(rank) + "'s window");
    for (int holder : ls.shared) {
      if (holder != rank)
        throw ProtocolError(
            "read of window region during an open lock epoch: rank " +
            std::to_string(holder) + " holds a lock on rank " +
            std::to_string(rank) + "'s window");
    }
    for (const PendingPut& p : w.pending) {
      if (p.target == rank)
        throw ProtocolError("read of window region with an undelivered put "
                            "from rank " +
                            std::to_string(p.origin));
    }
  }

  EpochState epoch_state(int rank, WindowHandle win) {
    std::unique_lock<std::mutex> lk(mu_);
    WindowSlot& w = resolve(win, "epoch_state");
    const auto me = static_cast<std::size_t>(rank);
    if (w.fence_open[me]) return EpochState::FenceOpen;
    const TargetLockState& ls = w.locks[me];
    if (ls.exclusive == rank) return EpochState::SelfLockedExclusive;
    if (ls.exclusive != -1 || !ls.shared.empty())
      return EpochState::LockAllOpen;
    return EpochState::Idle;
  }

  std::int64_t win_size_bytes(int rank, WindowHandle win) {
    std::unique_lock<std::mutex> lk(mu_);
    WindowSlot& w = resolve(win, "win_size_bytes");
    return w.size[static_cast<std::size_t>(rank)];
  }

  bool validating() const { return cfg_.validate; }

  std::vector<TraceEvent> put_events(int rank) {
    std::unique_lock<std::mutex> lk(mu_);
    std::vector<TraceEvent> out;
    for (const TraceEvent& e : trace_)
      if (e.kind == TraceKind::PutIssue && e.rank == rank) out.push_back(e);
    return out;
  }

  std::vector<TraceEvent> trace_events() {
    std::unique_lock<std::mutex> lk(mu_);
    return trace_;
  }

  std::vector<std::string> warnings() {
    std::unique_lock<std::mutex> lk(mu_);
    return warnings_;
  }

private:
  struct TargetLockState {
    int exclusive = -1;
    std::vector<int> shared;
  };

  struct PendingPut {
    int origin = -1;
    int target = -1;
    std::int64_t offset = 0;
    std::vector<std::byte> data;
    std::uint64_t issue_seq = 0;
    enum class Via { Fence, LockAll, Lock } via = Via::Fence;
  };

  struct WindowSlot {
    bool in_use = false;
    std::uint64_t generation = 0;
    std::vector<std::byte*> base;
    std::vector<std::int64_t> size;
    std::vector<char> fence_open;           // per rank
    std::vector<FenceAssert> asserts;       // per rank, last fence
    std::vector<TargetLockState> locks;     // per target
    std::vector<char> lock_all_open;        // per origin
    std::vector<std::vector<char>> holds_lock;  // [origin][target] 0/1/2
    std::vector<PendingPut> pending;        // in issue order
  };

  struct CollectiveSlots {
    CollKind kind = CollKind::None;
    std::uint64_t key = 0;
    int arrived = 0;
    std::uint64_t phase = 0;
    std::vector<FenceAssert> fence_asserts;
    std::vector<std::byte*> create_base;
    std::vector<std::int64_t> create_size;
    WindowHandle created;
    std::vector<std::vector<std::int64_t>> a2a_in, a2a_out;
    std::vector<std::vector<std::vector<std::byte>>> bytes_in, bytes_out;
  };

  static std::uint64_t window_key(WindowHandle win) {
    return (static_cast<std::uint64_t>(win.slot) << 32) ^ win.generation;
  }

  WindowSlot& resolve(WindowHandle win, const char* op) {
    if (win.slot < 0 || static_cast<std::size_t>(win.slot) >= windows_.size())
      throw ProtocolError(std::string(op) + ": invalid window handle");
    WindowSlot& w = windows_[static_cast<std::size_t>(win.slot)];
    if (!w.in_use || w.generation != win.generation)
      throw ProtocolError(std::string(op) +
                          ": window freed or stale handle (slot " +
                          std::to_string(win.slot) + ", handle generation " +
                          std::to_string(win.generation) + ")");
    return w;
  }

  bool holds_any(const WindowSlot& w, int rank) const {
    const auto& row = w.holds_lock[static_cast<std::size_t>(rank)];
    return std::any_of(row.begin(), row.end(), [](char h) { return h != 0; });
  }

  void trace(TraceKind kind, int rank, int target, int slot,
             std::int64_t bytes, std::uint64_t issue_seq) {
    if (!cfg_.validate) return;
    trace_.push_back(TraceEvent{++seq_, kind, rank, target, slot, bytes,
                                issue_seq});
  }

  // Apply (in issue order) every pending put selected by pred; detect
  // overlapping ranges within the applied batch in validating mode.
  template <typename Pred>
  void deliver(WindowSlot& w, int slot, Pred pred) {
    std::vector<PendingPut> keep;
    std::vector<const PendingPut*> applied;
    keep.reserve(w.pending.size());
    for (PendingPut& p : w.pending) {
      if (!pred(std::as_const(p))) {
        keep.push_back(std::move(p));
        continue;
      }
      if (exited_[static_cast<std::size_t>(p.target)]) continue;
      if (!p.data.empty())
        std::memcpy(w.base[static_cast<std::size_t>(p.target)] + p.offset,
                    p.data.data(), p.data.size());
      trace(TraceKind::PutDeliver, p.origin, p.target, slot,
            static_cast<std::int64_t>(p.data.size()), p.issue_seq);
      if (cfg_.validate) applied.push_back(&p);
    }
    if (cfg_.validate && applied.size() > 1) warn_overlaps(applied, slot);
    w.pending = std::move(keep);
  }

  void warn_overlaps(std::vector<const PendingPut*>& applied, int slot) {
    std::sort(applied.begin(), applied.end(),
              [](const PendingPut* a, const PendingPut* b) {
                if (a->target != b->target) return a->target < b->target;
                if (a->offset != b->offset) return a->offset < b->offset;
                return a->issue_seq < b->issue_seq;
              });
    for (std::size_t i = 1; i < applied.size(); ++i) {
      const PendingPut* prev = applied[i - 1];
      const PendingPut* cur = applied[i];
      if (prev->target != cur->target) continue;
      const std::int64_t prev_end =
          prev->offset + static_cast<std::int64_t>(prev->data.size());
      if (cur->offset < prev_end && !cur->data.empty() &&
          !prev->data.empty()) {
        std::ostringstream os;
        os << "overlapping puts within one epoch to window slot " << slot
           << " target " << cur->target << ": origin " << prev->origin
           << " range [" << prev->offset << "," << prev_end << ") and origin "
           << cur->origin << " range [" << cur->offset << ","
           << cur->offset + static_cast<std::int64_t>(cur->data.size())
           << "); last-issued wins";
        warnings_.push_back(os.str());
      }
    }
  }

  [[noreturn]] void throw_aborted() {
    throw Error("world aborted by rank " + std::to_string(abort_rank_));
  }

  template <typename Pred>
  void wait_until(std::unique_lock<std::mutex>& lk, int rank, const char* what,
                  Pred pred) {
    const auto deadline = Clock::now() + timeout_;
    while (!pred()) {
      if (aborted_) throw_aborted();
      if (cv_.wait_until(lk, deadline) == std::cv_status::timeout) {
        if (pred()) return;
        if (aborted_) throw_aborted();
        throw TimeoutError("timeout after " + std::to_string(cfg_.timeout_s) +
                           " s waiting in " + what + " at rank " +
                           std::to_string(rank) + " (possible deadlock)");
      }
    }
  }

  // N-rank rendezvous: the first arriver pins (kind, key), every later
  // arriver must match, the last one runs `complete` and advances the phase.
  template <typename Deposit, typename Complete>
  void run_collective(std::unique_lock<std::mutex>& lk, int rank,
                      CollKind kind, std::uint64_t key, Deposit deposit,
                      Complete complete) {
    if (aborted_) throw_aborted();
    if (coll_.arrived == 0) {
      coll_.kind = kind;
      coll_.key = key;
    } else if (coll_.kind != kind || coll_.key != key) {
      throw ProtocolError(std::string("mismatched collectives: rank ") +
                          std::to_string(rank) + " called " + coll_name(kind) +
                          " while the in-flight collective is " +
                          coll_name(coll_.kind));
    }
    deposit();
    ++coll_.arrived;
    if (coll_.arrived == cfg_.ranks) {
      complete();
      coll_.arrived = 0;
      ++coll_.phase;
      cv_.notify_all();
    } else {
      const std::uint64_t target = coll_.phase + 1;
      wait_until(lk, rank, coll_name(kind),
                 [&] { return coll_.phase >= target; });
    }
  }

  WorldConfig cfg_;
  Clock::duration timeout_;
  std::mutex mu_;
  std::condition_variable cv_;
  bool aborted_ = false;
  int abort_rank_ = -1;
  std::vector<char> exited_;
  std::vector<std::exception_ptr> errors_;
  std::uint64_t seq_ = 0;
  CollectiveSlots coll_;
  std::vector<WindowSlot> windows_;
  std::vector<TraceEvent> trace_;
  std::vector<std::string> warnings_;
};

void run_world(const WorldConfig& cfg,
               const std::function<void(Rank&)>& program) {
  World world(cfg);
  world.run(program);
}

}  // namespace detail

WindowHandle Rank::win_create(std::span<std::byte> region,
                              std::int64_t size_bytes) {
  return world_->win_create(ctx_.rank, region, size_bytes);
}

void Rank::win_free(WindowHandle win) { world_->win_free(ctx_.rank, win); }

void Rank::fence(WindowHandle win, FenceAssert asserts) {
  world_->fence(ctx_.rank, win, asserts);
}

void Rank::put(WindowHandle win, const PutDescriptor& desc,
               std::span<const std::byte> payload) {
  world_->put(ctx_.rank, win, desc, payload);
}

void Rank::lock(WindowHandle win, int target_rank, LockMode mode) {
  world_->lock(ctx_.rank, win, target_rank, mode);
}

void Rank::unlock(WindowHandle win, int target_rank) {
  world_->unlock(ctx_.rank, win, target_rank);
}

void Rank::lock_all(WindowHandle win) { world_->lock_all(ctx_.rank, win); }

void Rank::unlock_all(WindowHandle win) {
  world_->unlock_all(ctx_.rank, win);
}

void Rank::barrier() { world_->barrier(ctx_.rank); }

std::vector<std::int64_t> Rank::alltoall_exchange(
    std::span<const std::int64_t> send) {
  return world_->alltoall_exchange(ctx_.rank, send);
}

std::vector<std::vector<std::byte>> Rank::exchange_bytes(
    std::vector<std::vector<std::byte>> send) {
  return world_->exchange_bytes(ctx_.rank, std::move(send));
}

void Rank::check_read(WindowHandle win) const {
  world_->check_read(ctx_.rank, win);
}

EpochState Rank::epoch_state(WindowHandle win) const {
  return world_->epoch_state(ctx_.rank, win);
}

std::int64_t Rank::win_size_bytes(WindowHandle win) const {
  return world_->win_size_bytes(ctx_.rank, win);
}

bool Rank::validating() const { return world_->validating(); }

std::vector<TraceEvent> Rank::put_events() const {
  return world_->put_events(ctx_.rank);
}

std::vector<TraceEvent> Rank::trace_events() const {
  return world_->trace_events();
}

std::vector<std::string> Rank::warnings() const { return world_->warnings(); }

}  // namespace rmaav
