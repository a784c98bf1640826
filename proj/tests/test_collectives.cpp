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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <chrono>
#include <cstring>
#include <numeric>
#include <string>
#include <thread>
#include <vector>

#include "rmaav/collectives.hpp"
#include "rmaav/pattern.hpp"
#include "support/oracle.hpp"

using namespace rmaav;

namespace {

template <typename Fn>
std::string world_error(Fn&& fn) {
  try {
    fn();
  } catch (const WorldError& e) {
    return e.what();
  }
  return "";
}

bool contains(const std::string& hay, const std::string& needle) {
  return hay.find(needle) != std::string::npos;
}

std::vector<std::byte> recv_copy(const ExchangeSpec& spec) {
  return std::vector<std::byte>(spec.recv.begin(), spec.recv.end());
}

// Runs the baseline exchange for `pat` in a world and returns every rank's
// receive buffer.
std::vector<std::vector<std::byte>> run_baseline(const Pattern& pat,
                                                 bool validate = false) {
  WorldConfig cfg;
  cfg.ranks = pat.ranks;
  cfg.validate = validate;
  return spawn_world(cfg, [&pat](Rank& r) {
    RankExchange ex(pat, r.ctx().rank);
    fill_send(ex.spec(), r.ctx().rank);
    alltoallv_baseline(r, ex.spec());
    return recv_copy(ex.spec());
  });
}

// Runs one persistent variant (init, start, wait, free) and returns every
// rank's receive buffer.
std::vector<std::vector<std::byte>> run_variant(Variant variant,
                                                const Pattern& pat, int ppn = 1,
                                                int iterations = 1) {
  WorldConfig cfg;
  cfg.ranks = pat.ranks;
  cfg.ppn = ppn;
  return spawn_world(cfg, [&](Rank& r) {
    RankExchange ex(pat, r.ctx().rank);
    fill_send(ex.spec(), r.ctx().rank);
    WindowCache cache;
    PersistentRequest req = init_request(r, variant, ex.spec(), cache);
    for (int i = 0; i < iterations; ++i) {
      start_request(r, req);
      wait_request(r, req);
    }
    auto out = recv_copy(ex.spec());
    free_request(r, req, cache);
    return out;
  });
}

}  // namespace

TEST_CASE("baseline matches the copy-loop reference") {
  for (int ranks : {1, 2, 4, 8}) {
    for (std::uint64_t seed : {11u, 12u, 13u}) {
      for (std::int64_t esize : {1, 4, 8}) {
        Pattern pat = random_pattern(ranks, seed, esize);
        CAPTURE(ranks);
        CAPTURE(seed);
        CAPTURE(esize);
        CHECK(run_baseline(pat) == rmaav_test::expected_recv(pat));
      }
    }
  }
}

TEST_CASE("baseline two-rank bytes land where the fill rule says") {
  Pattern pat = uniform_pattern(2, 16, 4);  // 4 elements of 4 bytes per peer
  auto recv = run_baseline(pat);
  REQUIRE(recv[0].size() == 32);
  // First 16 bytes from rank 0: 00 00 00 00 ...; next 16 from rank 1.
  for (int b = 0; b < 16; ++b) {
    CHECK(recv[0][static_cast<std::size_t>(b)] ==
          encode_byte(0, b % 4));
    CHECK(recv[0][static_cast<std::size_t>(16 + b)] ==
          encode_byte(1, b % 4));
    CHECK(recv[1][static_cast<std::size_t>(b)] ==
          encode_byte(0, b % 4));
  }
}

TEST_CASE("every persistent variant reproduces the baseline") {
  for (int ranks : {1, 2, 4}) {
    for (std::uint64_t seed : {21u, 22u}) {
      Pattern pat = random_pattern(ranks, seed, 4);
      auto expected = rmaav_test::expected_recv(pat);
      CAPTURE(ranks);
      CAPTURE(seed);
      CHECK(run_variant(Variant::Fence, pat) == expected);
      CHECK(run_variant(Variant::Lock, pat) == expected);
      CHECK(run_variant(Variant::FenceHierarchy, pat, 2) == expected);
    }
  }
}

TEST_CASE("persistent requests are reusable and track send mutations") {
  Pattern pat = uniform_pattern(2, 8, 4);
  WorldConfig cfg;
  cfg.ranks = 2;
  spawn_world(cfg, [&pat](Rank& r) {
    RankExchange ex(pat, r.ctx().rank);
    fill_send(ex.spec(), r.ctx().rank);
    WindowCache cache;
    PersistentRequest req = alltoallv_fence_init(r, ex.spec(), cache);

    std::vector<std::byte> first;
    for (int i = 0; i < 5; ++i) {
      fence_start(r, req);
      fence_wait(r, req);
      if (i == 0) first = recv_copy(ex.spec());
      CHECK(recv_copy(ex.spec()) == first);
    }

    // New send contents flow through the existing request.
    for (auto& b : ex.spec().send) b = std::byte{0xEE};
    fence_start(r, req);
    fence_wait(r, req);
    for (std::byte b : ex.spec().recv) CHECK(b == std::byte{0xEE});

    free_request(r, req, cache);
  });
}

TEST_CASE("init exchanges receive displacements into put offsets") {
  // Rank p's put_displs[q] must equal rank q's rdispls[p] in bytes.
  Pattern pat = random_pattern(4, 77, 4);
  WorldConfig cfg;
  cfg.ranks = 4;
  auto displs = spawn_world(cfg, [&pat](Rank& r) {
    RankExchange ex(pat, r.ctx().rank);
    WindowCache cache;
    PersistentRequest req = alltoallv_fence_init(r, ex.spec(), cache);
    auto out = req.put_displs;
    free_request(r, req, cache);
    return out;
  });
  for (int p = 0; p < 4; ++p) {
    ExchangeSpec peer = slice(pat, p);
    for (int q = 0; q < 4; ++q) {
      CHECK(displs[static_cast<std::size_t>(q)][static_cast<std::size_t>(p)] ==
            peer.rdispls[static_cast<std::size_t>(q)] * pat.elem_size_bytes);
    }
  }
}

TEST_CASE("all-zero counts leave the receive buffer untouched") {
  Pattern pat = uniform_pattern(3, 0, 4);
  WorldConfig cfg;
  cfg.ranks = 3;
  spawn_world(cfg, [&pat](Rank& r) {
    RankExchange ex(pat, r.ctx().rank);
    CHECK(ex.spec().recv.empty());
    alltoallv_baseline(r, ex.spec());
    WindowCache cache;
    PersistentRequest req = alltoallv_fence_init(r, ex.spec(), cache);
    fence_start(r, req);
    fence_wait(r, req);
    free_request(r, req, cache);
  });
}

TEST_CASE("baseline rejects mismatched counts naming both ranks") {
  WorldConfig cfg;
  cfg.ranks = 2;
  const std::string msg = world_error([&] {
    spawn_world(cfg, [](Rank& r) {
      ExchangeSpec spec;
      spec.elem_size_bytes = 1;
      if (r.ctx().rank == 0) {
        spec.sendcounts = {0, 5};
        spec.sdispls = {0, 0};
        spec.recvcounts = {0, 0};
        spec.rdispls = {0, 0};
      } else {
        spec.sendcounts = {0, 0};
        spec.sdispls = {0, 0};
        spec.recvcounts = {4, 0};  // rank 0 sends 5
        spec.rdispls = {0, 0};
      }
      std::vector<std::byte> send(5), recv(4);
      spec.send = send;
      spec.recv = recv;
      alltoallv_baseline(r, spec);
    });
  });
  CHECK(contains(msg, "count mismatch"));
  CHECK(contains(msg, "5"));
  CHECK(contains(msg, "4"));
}

TEST_CASE("persistent init rejects receive overflow but allows slack") {
  WorldConfig cfg;
  cfg.ranks = 2;

  auto make_spec = [](Rank& r, std::int64_t recv_from_zero,
                      std::vector<std::byte>& send,
                      std::vector<std::byte>& recv) {
    ExchangeSpec spec;
    spec.elem_size_bytes = 1;
    if (r.ctx().rank == 0) {
      spec.sendcounts = {0, 5};
      spec.sdispls = {0, 0};
      spec.recvcounts = {0, 0};
      spec.rdispls = {0, 0};
      send.resize(5);
      for (int i = 0; i < 5; ++i) send[static_cast<std::size_t>(i)] =
          std::byte(0x60 + i);
    } else {
      spec.sendcounts = {0, 0};
      spec.sdispls = {0, 0};
      spec.recvcounts = {recv_from_zero, 0};
      spec.rdispls = {0, 0};
      recv.resize(static_cast<std::size_t>(recv_from_zero), std::byte{0});
    }
    spec.send = send;
    spec.recv = recv;
    return spec;
  };

  SUBCASE("overflow is an error naming sender and capacity") {
    const std::string msg = world_error([&] {
      spawn_world(cfg, [&](Rank& r) {
        std::vector<std::byte> send, recv;
        ExchangeSpec spec = make_spec(r, 4, send, recv);
        WindowCache cache;
        alltoallv_fence_init(r, spec, cache);
      });
    });
    CHECK(contains(msg, "receive overflow"));
    CHECK(contains(msg, "rank 0"));
  }

  SUBCASE("slack is allowed and extra bytes stay zero") {
    spawn_world(cfg, [&](Rank& r) {
      std::vector<std::byte> send, recv;
      ExchangeSpec spec = make_spec(r, 8, send, recv);
      WindowCache cache;
      PersistentRequest req = alltoallv_fence_init(r, spec, cache);
      fence_start(r, req);
      fence_wait(r, req);
      if (r.ctx().rank == 1) {
        for (int i = 0; i < 5; ++i)
          CHECK(recv[static_cast<std::size_t>(i)] == std::byte(0x60 + i));
        for (int i = 5; i < 8; ++i)
          CHECK(recv[static_cast<std::size_t>(i)] == std::byte{0});
      }
      free_request(r, req, cache);
    });
  }
}

TEST_CASE("mismatched element sizes are rejected at init") {
  WorldConfig cfg;
  cfg.ranks = 2;
  const std::string msg = world_error([&] {
    spawn_world(cfg, [](Rank& r) {
      Pattern pat = uniform_pattern(2, 8, r.ctx().rank == 0 ? 4 : 8);
      RankExchange ex(pat, r.ctx().rank);
      WindowCache cache;
      alltoallv_fence_init(r, ex.spec(), cache);
    });
  });
  CHECK(contains(msg, "elem"));
}

TEST_CASE("negative counts and overlapping regions are rejected") {
  WorldConfig cfg;
  cfg.ranks = 1;

  SUBCASE("negative count") {
    spawn_world(cfg, [](Rank& r) {
      ExchangeSpec spec;
      spec.sendcounts = {-1};
      spec.sdispls = {0};
      spec.recvcounts = {0};
      spec.rdispls = {0};
      CHECK_THROWS_WITH_AS(alltoallv_baseline(r, spec),
                           doctest::Contains("negative"), ArgumentError);
    });
  }

  SUBCASE("overlapping receive regions") {
    WorldConfig cfg2;
    cfg2.ranks = 2;
    const std::string msg = world_error([&] {
      spawn_world(cfg2, [](Rank& r) {
        ExchangeSpec spec;
        spec.elem_size_bytes = 1;
        spec.sendcounts = {1, 1};
        spec.sdispls = {0, 1};
        spec.recvcounts = {2, 2};
        spec.rdispls = {0, 1};  // [0,2) and [1,3) overlap
        std::vector<std::byte> send(2), recv(4);
        spec.send = send;
        spec.recv = recv;
        alltoallv_baseline(r, spec);
      });
    });
    CHECK(contains(msg, "overlap"));
  }

  SUBCASE("region past the buffer end") {
    spawn_world(cfg, [](Rank& r) {
      ExchangeSpec spec;
      spec.elem_size_bytes = 4;
      spec.sendcounts = {2};
      spec.sdispls = {0};
      spec.recvcounts = {2};
      spec.rdispls = {0};
      std::vector<std::byte> send(8), recv(4);  // recv too small
      spec.send = send;
      spec.recv = recv;
      CHECK_THROWS_WITH_AS(alltoallv_baseline(r, spec),
                           doctest::Contains("past the"), ArgumentError);
    });
  }
}

TEST_CASE("persistent init requires packed receive displacements") {
  WorldConfig cfg;
  cfg.ranks = 2;
  const std::string msg = world_error([&] {
    spawn_world(cfg, [](Rank& r) {
      ExchangeSpec spec;
      spec.elem_size_bytes = 1;
      spec.sendcounts = {1, 1};
      spec.sdispls = {0, 1};
      spec.recvcounts = {1, 1};
      spec.rdispls = {0, 4};  // gap: region [4,5) past the 2-byte extent
      std::vector<std::byte> send(2), recv(8);
      spec.send = send;
      spec.recv = recv;
      WindowCache cache;
      alltoallv_fence_init(r, spec, cache);
    });
  });
  CHECK(contains(msg, "pack"));
}

TEST_CASE("permuted but packed receive displacements work") {
  WorldConfig cfg;
  cfg.ranks = 2;
  spawn_world(cfg, [](Rank& r) {
    // Both ranks receive the peer's block first, their own block second.
    ExchangeSpec spec;
    spec.elem_size_bytes = 1;
    spec.sendcounts = {2, 2};
    spec.sdispls = {0, 2};
    spec.recvcounts = {2, 2};
    spec.rdispls = r.ctx().rank == 0 ? std::vector<std::int64_t>{2, 0}
                                     : std::vector<std::int64_t>{0, 2};
    std::vector<std::byte> send(4), recv(4);
    spec.send = send;
    spec.recv = recv;
    fill_send(spec, r.ctx().rank);
    WindowCache cache;
    PersistentRequest req = alltoallv_fence_init(r, spec, cache);
    fence_start(r, req);
    fence_wait(r, req);
    CHECK(validate_recv(spec).empty());
    free_request(r, req, cache);
  });
}

TEST_CASE("window cache counts hits and misses and tracks identity") {
  WorldConfig cfg;
  cfg.ranks = 2;
  spawn_world(cfg, [](Rank& r) {
    Pattern small = uniform_pattern(2, 32, 4);
    Pattern big = uniform_pattern(2, 64, 4);
    RankExchange exa(small, r.ctx().rank);
    RankExchange exb(big, r.ctx().rank);
    RankExchange exc(small, r.ctx().rank);  // same sizes, different buffer
    WindowCache cache;

    PersistentRequest r1 = alltoallv_fence_init(r, exa.spec(), cache);
    CHECK(cache.misses() == 1);
    CHECK(cache.hits() == 0);
    const std::uint64_t gen1 = r1.window.generation;

    PersistentRequest r2 = alltoallv_fence_init(r, exa.spec(), cache);
    CHECK(cache.misses() == 1);
    CHECK(cache.hits() == 1);
    CHECK(r2.window == r1.window);

    PersistentRequest r3 = alltoallv_fence_init(r, exb.spec(), cache);
    CHECK(cache.misses() == 2);
    CHECK(r3.window.generation == gen1 + 1);

    PersistentRequest r4 = alltoallv_fence_init(r, exc.spec(), cache);
    CHECK(cache.misses() == 3);  // same extent, different buffer identity

    fence_start(r, r4);
    fence_wait(r, r4);
    free_request(r, r4, cache);
    CHECK_FALSE(cache.holds(r4.window));
  });
}

TEST_CASE("diverged caches across ranks are a protocol error") {
  WorldConfig cfg;
  cfg.ranks = 2;
  const std::string msg = world_error([&] {
    spawn_world(cfg, [](Rank& r) {
      Pattern pat = uniform_pattern(2, 16, 4);
      RankExchange ex(pat, r.ctx().rank);
      WindowCache keep;
      WindowCache fresh;
      alltoallv_fence_init(r, ex.spec(), keep);
      // Rank 0 switches to an empty cache; rank 1 reuses the warm one.
      WindowCache& second = r.ctx().rank == 0 ? fresh : keep;
      alltoallv_fence_init(r, ex.spec(), second);
    });
  });
  CHECK(contains(msg, "cache diverged"));
}

TEST_CASE("request lifecycle rejects out-of-order operations") {
  WorldConfig cfg;
  cfg.ranks = 2;
  Pattern pat = uniform_pattern(2, 8, 4);

  spawn_world(cfg, [&pat](Rank& r) {
    RankExchange ex(pat, r.ctx().rank);
    fill_send(ex.spec(), r.ctx().rank);
    WindowCache cache;
    PersistentRequest req = alltoallv_fence_init(r, ex.spec(), cache);

    CHECK(req.state == RequestState::Initialized);
    CHECK_THROWS_WITH_AS(fence_wait(r, req),
                         doctest::Contains("in state Initialized"),
                         LifecycleError);

    fence_start(r, req);
    CHECK(req.state == RequestState::Started);
    CHECK_THROWS_WITH_AS(fence_start(r, req),
                         doctest::Contains("in state Started"),
                         LifecycleError);

    fence_wait(r, req);
    CHECK(req.state == RequestState::Completed);
    fence_start(r, req);  // restart from Completed is legal
    fence_wait(r, req);

    free_request(r, req, cache);
    CHECK(req.state == RequestState::Freed);
    CHECK_THROWS_AS(fence_start(r, req), LifecycleError);
    CHECK_THROWS_AS(free_request(r, req, cache), LifecycleError);
  });
}

TEST_CASE("variant-mismatched operations are rejected") {
  WorldConfig cfg;
  cfg.ranks = 2;
  Pattern pat = uniform_pattern(2, 8, 4);
  spawn_world(cfg, [&pat](Rank& r) {
    RankExchange ex(pat, r.ctx().rank);
    WindowCache cache;
    PersistentRequest req = alltoallv_lock_init(r, ex.spec(), cache);
    CHECK_THROWS_WITH_AS(fence_start(r, req), doctest::Contains("lock"),
                         LifecycleError);
    lock_free(r, req, cache);
  });
}

TEST_CASE("baseline has no persistent form") {
  WorldConfig cfg;
  cfg.ranks = 1;
  spawn_world(cfg, [](Rank& r) {
    Pattern pat = uniform_pattern(1, 8, 4);
    RankExchange ex(pat, r.ctx().rank);
    WindowCache cache;
    CHECK_THROWS_AS(init_request(r, Variant::Baseline, ex.spec(), cache),
                    ArgumentError);
  });
}

TEST_CASE("lock variant holds the self-lock between exchanges") {
  WorldConfig cfg;
  cfg.ranks = 2;
  cfg.validate = true;
  Pattern pat = uniform_pattern(2, 8, 4);
  spawn_world(cfg, [&pat](Rank& r) {
    RankExchange ex(pat, r.ctx().rank);
    fill_send(ex.spec(), r.ctx().rank);
    WindowCache cache;
    PersistentRequest req = alltoallv_lock_init(r, ex.spec(), cache);
    CHECK(r.epoch_state(req.window) == EpochState::SelfLockedExclusive);
    lock_start(r, req);
    lock_wait(r, req);
    CHECK(r.epoch_state(req.window) == EpochState::SelfLockedExclusive);
    CHECK(validate_recv(ex.spec()).empty());
    lock_free(r, req, cache);
    CHECK_THROWS_AS(lock_free(r, req, cache), LifecycleError);
  });
}

TEST_CASE("lock start lets a blocked lock_all proceed") {
  WorldConfig cfg;
  cfg.ranks = 2;
  cfg.validate = true;
  Pattern pat = uniform_pattern(2, 8, 4);
  spawn_world(cfg, [&pat](Rank& r) {
    RankExchange ex(pat, r.ctx().rank);
    fill_send(ex.spec(), r.ctx().rank);
    WindowCache cache;
    PersistentRequest req = alltoallv_lock_init(r, ex.spec(), cache);
    if (r.ctx().rank == 0) {
      // Delay start so rank 1's lock_all demonstrably waits on our
      // exclusive self-lock from init.
      r.barrier();
      std::this_thread::sleep_for(std::chrono::milliseconds(20));
    } else {
      r.barrier();
    }
    lock_start(r, req);
    lock_wait(r, req);
    CHECK(validate_recv(ex.spec()).empty());
    r.barrier();
    if (r.ctx().rank == 0) {
      // Rank 1 acquired its shared locks only after some release by rank 0.
      std::uint64_t first_release0 = 0;
      std::uint64_t acquire1 = 0;
      for (const TraceEvent& ev : r.trace_events()) {
        if (ev.kind == TraceKind::LockRelease && ev.rank == 0 &&
            first_release0 == 0)
          first_release0 = ev.seq;
        if (ev.kind == TraceKind::LockAllAcquire && ev.rank == 1 &&
            acquire1 == 0)
          acquire1 = ev.seq;
      }
      CHECK(first_release0 != 0);
      CHECK(acquire1 > first_release0);
    }
    lock_free(r, req, cache);
  });
}

TEST_CASE("unsynchronized lock wait exposes the read race") {
  WorldConfig cfg;
  cfg.ranks = 2;
  cfg.validate = true;
  cfg.timeout_s = 10.0;
  Pattern pat = uniform_pattern(2, 8, 4);
  const std::string msg = world_error([&] {
    spawn_world(cfg, [&pat](Rank& r) {
      RankExchange ex(pat, r.ctx().rank);
      fill_send(ex.spec(), r.ctx().rank);
      WindowCache cache;
      PersistentRequest req = alltoallv_lock_init(r, ex.spec(), cache);
      lock_start(r, req);
      if (r.ctx().rank == 0) {
        detail::lock_wait_unsynchronized(r, req);
        r.barrier();
        // Rank 1's lock_all epoch is still open over our window.
        r.check_read(req.window);
        r.barrier();
      } else {
        r.barrier();
        r.barrier();
        lock_wait(r, req);
      }
    });
  });
  CHECK(contains(msg, "rank 0"));
  CHECK(contains(msg, "lock"));
}

TEST_CASE("the synchronized lock wait leaves reads race-free") {
  WorldConfig cfg;
  cfg.ranks = 2;
  cfg.validate = true;
  Pattern pat = uniform_pattern(2, 8, 4);
  spawn_world(cfg, [&pat](Rank& r) {
    RankExchange ex(pat, r.ctx().rank);
    fill_send(ex.spec(), r.ctx().rank);
    WindowCache cache;
    PersistentRequest req = alltoallv_lock_init(r, ex.spec(), cache);
    for (int i = 0; i < 3; ++i) {
      lock_start(r, req);
      lock_wait(r, req);
      // Self-exclusive lock is ours; nothing foreign can be open.
      CHECK(validate_recv(ex.spec()).empty());
    }
    lock_free(r, req, cache);
  });
}

TEST_CASE("hierarchy variant partitions peers by node and orders puts") {
  Pattern pat = uniform_pattern(4, 8, 4);
  WorldConfig cfg;
  cfg.ranks = 4;
  cfg.ppn = 2;
  cfg.validate = true;
  spawn_world(cfg, [&pat](Rank& r) {
    RankExchange ex(pat, r.ctx().rank);
    fill_send(ex.spec(), r.ctx().rank);
    WindowCache cache;
    PersistentRequest req = alltoallv_fence_hierarchy_init(r, ex.spec(), cache);

    const int me = r.ctx().rank;
    std::vector<int> remote;
    std::vector<int> local;
    for (int p = 0; p < 4; ++p) {
      (p / 2 == me / 2 ? local : remote).push_back(p);
    }
    CHECK(req.remote_targets == remote);
    CHECK(req.local_targets == local);

    fence_hierarchy_start(r, req);
    fence_wait(r, req);
    CHECK(validate_recv(ex.spec()).empty());

    auto events = r.put_events();
    REQUIRE(events.size() == 4);
    CHECK(events[0].target / 2 != me / 2);
    CHECK(events[1].target / 2 != me / 2);
    CHECK(events[2].target / 2 == me / 2);
    CHECK(events[3].target / 2 == me / 2);

    free_request(r, req, cache);
  });
}

TEST_CASE("hierarchy on one node and one rank per node") {
  Pattern pat = uniform_pattern(4, 8, 4);
  auto expected = rmaav_test::expected_recv(pat);
  CHECK(run_variant(Variant::FenceHierarchy, pat, 4) == expected);
  CHECK(run_variant(Variant::FenceHierarchy, pat, 1) == expected);
}

TEST_CASE("zero-count peers get no puts") {
  WorldConfig cfg;
  cfg.ranks = 3;
  cfg.validate = true;
  spawn_world(cfg, [](Rank& r) {
    // Everyone sends 2 elements to rank 1 only.
    ExchangeSpec spec;
    spec.elem_size_bytes = 1;
    spec.sendcounts = {0, 2, 0};
    spec.sdispls = {0, 0, 2};
    if (r.ctx().rank == 1) {
      spec.recvcounts = {2, 2, 2};
      spec.rdispls = {0, 2, 4};
    } else {
      spec.recvcounts = {0, 0, 0};
      spec.rdispls = {0, 0, 0};
    }
    std::vector<std::byte> send(2), recv(6);
    spec.send = send;
    spec.recv = recv;
    fill_send(spec, r.ctx().rank);
    WindowCache cache;
    PersistentRequest req = alltoallv_fence_init(r, spec, cache);
    fence_start(r, req);
    fence_wait(r, req);
    CHECK(r.put_events().size() == 1);
    if (r.ctx().rank == 1) CHECK(validate_recv(spec).empty());
    free_request(r, req, cache);
  });
}

TEST_CASE("variant names round-trip") {
  CHECK(parse_variant("baseline") == Variant::Baseline);
  CHECK(parse_variant("fence") == Variant::Fence);
  CHECK(parse_variant("lock") == Variant::Lock);
  CHECK(parse_variant("fence-hier") == Variant::FenceHierarchy);
  CHECK_FALSE(parse_variant("warp").has_value());
  CHECK(std::string(to_string(Variant::FenceHierarchy)) == "fence-hier");
  CHECK(std::string(to_string(RequestState::Started)) == "Started");
}
