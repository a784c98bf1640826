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

#include "rmaav/bench.hpp"

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <tuple>

namespace rmaav {

namespace {

// Wall clock, or a per-rank counter in 1 ms steps when determinism is needed
// for golden files. Each rank makes the same sequence of calls, so fake
// readings are identical across runs and ranks.
class BenchClock {
public:
  explicit BenchClock(bool fake) : fake_(fake) {}

  double now() {
    if (fake_) return 0.001 * static_cast<double>(ticks_++);
    const auto t = std::chrono::steady_clock::now().time_since_epoch();
    return std::chrono::duration<double>(t).count();
  }

private:
  bool fake_;
  std::uint64_t ticks_ = 0;
};

struct RankTiming {
  double t_init_s = 0.0;
  double t_loop_s = 0.0;
  std::int64_t mismatches = 0;
  std::uint64_t cache_misses = 0;
  std::uint64_t cache_hits = 0;
};

std::int64_t parse_csv_int(const std::string& tok, int line,
                           const char* what) {
  errno = 0;
  char* end = nullptr;
  const long long v = std::strtoll(tok.c_str(), &end, 10);
  if (errno != 0 || end == tok.c_str() || *end != '\0')
    throw ParseError(line,
                     std::string("malformed ") + what + " '" + tok + "'");
  return static_cast<std::int64_t>(v);
}

double parse_csv_double(const std::string& tok, int line, const char* what) {
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(tok.c_str(), &end);
  if (errno != 0 || end == tok.c_str() || *end != '\0')
    throw ParseError(line,
                     std::string("malformed ") + what + " '" + tok + "'");
  return v;
}

}  // namespace

BreakEvenResult break_even(double t_init_s, double t_mpi_s,
                           double t_persist_s) {
  if (!(t_init_s >= 0.0) || !(t_mpi_s >= 0.0) || !(t_persist_s >= 0.0))
    throw ArgumentError("break_even: times must be non-negative");
  BreakEvenResult r;
  r.delta_s = t_mpi_s - t_persist_s;
  r.savings_abs_s = r.delta_s;
  if (t_mpi_s > 0.0) r.savings_pct = 100.0 * r.delta_s / t_mpi_s;
  if (r.delta_s > 0.0) {
    auto n = static_cast<std::int64_t>(std::ceil(t_init_s / r.delta_s));
    if (n < 1) n = 1;
    // ceil over binary floats can land one step off the true threshold
    // min{N >= 1 : N*delta >= t_init}; nudge to it
    while (n > 1 && static_cast<double>(n - 1) * r.delta_s >= t_init_s) --n;
    while (static_cast<double>(n) * r.delta_s < t_init_s) ++n;
    r.n_breakeven = n;
  }
  return r;
}

double total_cost(double t_init_s, double t_persist_s, std::int64_t n) {
  if (n < 0) throw ArgumentError("total_cost: negative iteration count");
  return t_init_s + static_cast<double>(n) * t_persist_s;
}

double baseline_cost(double t_mpi_s, std::int64_t n) {
  if (n < 0) throw ArgumentError("baseline_cost: negative iteration count");
  return static_cast<double>(n) * t_mpi_s;
}

BenchOutcome run_pattern_bench(const BenchOptions& opt, const Pattern& pat,
                               const std::string& pattern_name,
                               std::int64_t msg_size_bytes) {
  if (opt.iterations < 1)
    throw ArgumentError("bench: iterations must be >= 1");
  if (opt.warmup < 0) throw ArgumentError("bench: warmup must be >= 0");
  if (pat.ranks != opt.ranks)
    throw ArgumentError("bench: pattern is " + std::to_string(pat.ranks) +
                        "-rank but the world has " +
                        std::to_string(opt.ranks));

  WorldConfig cfg;
  cfg.ranks = opt.ranks;
  cfg.ppn = opt.ppn;
  cfg.validate = opt.validate_rma;
  cfg.timeout_s = opt.timeout_s;

  const auto timings = spawn_world(cfg, [&](Rank& rank) -> RankTiming {
    RankTiming out;
    RankExchange ex(pat, rank.ctx().rank);
    fill_send(ex.spec(), rank.ctx().rank);
    BenchClock clk(opt.fake_clock);

    if (opt.variant == Variant::Baseline) {
      rank.barrier();
      for (int w = 0; w < opt.warmup; ++w) alltoallv_baseline(rank, ex.spec());
      rank.barrier();
      const double t1 = clk.now();
      for (int n = 0; n < opt.iterations; ++n)
        alltoallv_baseline(rank, ex.spec());
      out.t_loop_s = clk.now() - t1;
      out.cache_misses = 0;
      out.cache_hits = 0;
    } else {
      WindowCache cache;
      rank.barrier();
      const double t0 = clk.now();
      PersistentRequest req = init_request(rank, opt.variant, ex.spec(), cache);
      out.t_init_s = clk.now() - t0;
      for (int w = 0; w < opt.warmup; ++w) {
        start_request(rank, req);
        wait_request(rank, req);
      }
      rank.barrier();
      const double t1 = clk.now();
      for (int n = 0; n < opt.iterations; ++n) {
        start_request(rank, req);
        wait_request(rank, req);
      }
      out.t_loop_s = clk.now() - t1;
      if (rank.validating()) rank.check_read(req.window);
      out.cache_misses = cache.misses();
      out.cache_hits = cache.hits();
      out.mismatches =
          static_cast<std::int64_t>(validate_recv(ex.spec()).size());
      free_request(rank, req, cache);
      return out;
    }
    out.mismatches =
        static_cast<std::int64_t>(validate_recv(ex.spec()).size());
    return out;
  });

  BenchOutcome outcome;
  outcome.record.variant = opt.variant;
  outcome.record.ranks = opt.ranks;
  outcome.record.ppn = opt.ppn;
  outcome.record.pattern = pattern_name;
  outcome.record.msg_size_bytes = msg_size_bytes;
  outcome.record.iterations = opt.iterations;
  outcome.record.warmup = opt.warmup;

  std::int64_t mismatches = 0;
  for (const RankTiming& t : timings) {
    outcome.record.t_init_s = std::max(outcome.record.t_init_s, t.t_init_s);
    outcome.record.t_total_s =
        std::max(outcome.record.t_total_s, t.t_init_s + t.t_loop_s);
    const double mean = t.t_loop_s / static_cast<double>(opt.iterations);
    outcome.per_rank_mean_s.push_back(mean);
    outcome.record.t_per_iter_s =
        std::max(outcome.record.t_per_iter_s, mean);
    mismatches += t.mismatches;
  }
  outcome.mismatches = mismatches;
  outcome.record.validated = mismatches == 0;

  if (opt.variant != Variant::Baseline) {
    outcome.cache_misses = timings.front().cache_misses;
    outcome.cache_hits = timings.front().cache_hits;
    for (const RankTiming& t : timings) {
      if (t.cache_misses != 1 || t.cache_hits != 0)
        throw Error("bench: window cache recreated mid-run (misses=" +
                    std::to_string(t.cache_misses) + ", hits=" +
                    std::to_string(t.cache_hits) + ")");
    }
  }
  return outcome;
}

TimingRecord run_uniform_bench(const BenchOptions& opt,
                               std::int64_t msg_size_bytes) {
  const Pattern pat =
      uniform_pattern(opt.ranks, msg_size_bytes, opt.elem_size_bytes);
  return run_pattern_bench(opt, pat, "uniform", msg_size_bytes).record;
}

TimingRecord run_sparse_bench(const BenchOptions& opt, const SparseMatrix& m,
                              const std::string& pattern_name) {
  const Pattern pat = matrix_pattern(m, opt.ranks, opt.elem_size_bytes);
  return run_pattern_bench(opt, pat, pattern_name, 0).record;
}

// --- CSV ---------------------------------------------------------------

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

std::string emit_csv(std::span<const CsvRow> rows) {
  std::string out = kCsvHeader;
  out += '\n';
  for (const CsvRow& row : rows) {
    const TimingRecord& r = row.record;
    if (r.pattern.find_first_of(",\r\n") != std::string::npos)
      throw ArgumentError("emit_csv: pattern name '" + r.pattern +
                          "' contains a delimiter");
    out += to_string(r.variant);
    out += ",sim,";
    out += std::to_string(r.ranks);
    out += ',';
    out += std::to_string(r.ppn);
    out += ',';
    out += r.pattern;
    out += ',';
    out += std::to_string(r.msg_size_bytes);
    out += ',';
    out += std::to_string(r.iterations);
    out += ',';
    out += std::to_string(r.warmup);
    out += ',';
    out += format_double(r.t_init_s);
    out += ',';
    out += format_double(r.t_per_iter_s);
    out += ',';
    out += format_double(r.t_total_s);
    out += ',';
    if (row.breakeven) {
      const BreakEvenResult& b = *row.breakeven;
      out += format_double(b.delta_s);
      out += ',';
      if (b.n_breakeven) out += std::to_string(*b.n_breakeven);
      out += ',';
      if (b.savings_pct) out += format_double(*b.savings_pct);
    } else {
      out += ",,";
    }
    out += ',';
    out += r.validated ? '1' : '0';
    out += '\n';
  }
  return out;
}

std::vector<CsvRow> parse_csv(std::string_view text) {
  std::vector<CsvRow> rows;
  int lineno = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t nl = text.find('\n', pos);
    const std::size_t end = (nl == std::string_view::npos) ? text.size() : nl;
    std::string_view line = text.substr(pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    pos = (nl == std::string_view::npos) ? text.size() : nl + 1;
    ++lineno;

    if (lineno == 1) {
      if (line != kCsvHeader)
        throw ParseError(1, "unexpected CSV header");
      continue;
    }
    if (line.empty()) {
      if (pos < text.size())
        throw ParseError(lineno, "empty line inside CSV body");
      continue;
    }

    std::vector<std::string> f;
    std::size_t start = 0;
    for (;;) {
      const std::size_t comma = line.find(',', start);
      if (comma == std::string_view::npos) {
        f.emplace_back(line.substr(start));
        break;
      }
      f.emplace_back(line.substr(start, comma - start));
      start = comma + 1;
    }
    if (f.size() != 15)
      throw ParseError(lineno, "expected 15 fields, got " +
                                   std::to_string(f.size()));

    CsvRow row;
    const auto variant = parse_variant(f[0]);
    if (!variant) throw ParseError(lineno, "unknown variant '" + f[0] + "'");
    row.record.variant = *variant;
    if (f[1] != "sim")
      throw ParseError(lineno, "unknown transport '" + f[1] + "'");
    row.record.ranks =
        static_cast<int>(parse_csv_int(f[2], lineno, "ranks"));
    row.record.ppn = static_cast<int>(parse_csv_int(f[3], lineno, "ppn"));
    row.record.pattern = f[4];
    row.record.msg_size_bytes = parse_csv_int(f[5], lineno, "msg_size_bytes");
    row.record.iterations =
        static_cast<int>(parse_csv_int(f[6], lineno, "iterations"));
    row.record.warmup =
        static_cast<int>(parse_csv_int(f[7], lineno, "warmup"));
    row.record.t_init_s = parse_csv_double(f[8], lineno, "t_init_s");
    row.record.t_per_iter_s = parse_csv_double(f[9], lineno, "t_per_iter_s");
    row.record.t_total_s = parse_csv_double(f[10], lineno, "t_total_s");

    const bool has_delta = !f[11].empty();
    const bool has_n = !f[12].empty();
    const bool has_pct = !f[13].empty();
    if (!has_delta && (has_n || has_pct))
      throw ParseError(lineno, "break-even columns present without delta_s");
    if (has_delta) {
      BreakEvenResult b;
      b.delta_s = parse_csv_double(f[11], lineno, "delta_s");
      b.savings_abs_s = b.delta_s;
      if (has_n) b.n_breakeven = parse_csv_int(f[12], lineno, "n_breakeven");
      if (has_pct)
        b.savings_pct = parse_csv_double(f[13], lineno, "savings_pct");
      row.breakeven = b;
    }

    if (f[14] == "1")
      row.record.validated = true;
    else if (f[14] == "0")
      row.record.validated = false;
    else
      throw ParseError(lineno, "validated must be 0 or 1, got '" + f[14] +
                                   "'");
    rows.push_back(std::move(row));
  }
  if (lineno == 0) throw ParseError(1, "empty CSV, missing header");
  return rows;
}

std::vector<std::string> attach_break_evens(std::vector<CsvRow>& rows) {
  using Key = std::tuple<std::string, std::int64_t, int, int>;
  std::map<Key, const TimingRecord*> baselines;
  for (const CsvRow& row : rows) {
    if (row.record.variant != Variant::Baseline) continue;
    const Key key{row.record.pattern, row.record.msg_size_bytes,
                  row.record.ranks, row.record.ppn};
    baselines.emplace(key, &row.record);
  }

  std::vector<std::string> orphans;
  for (CsvRow& row : rows) {
    if (row.record.variant == Variant::Baseline) continue;
    const Key key{row.record.pattern, row.record.msg_size_bytes,
                  row.record.ranks, row.record.ppn};
    const auto it = baselines.find(key);
    if (it == baselines.end()) {
      orphans.push_back(std::string(to_string(row.record.variant)) + " " +
                        row.record.pattern + " msg_size=" +
                        std::to_string(row.record.msg_size_bytes) +
                        " ranks=" + std::to_string(row.record.ranks) +
                        " ppn=" + std::to_string(row.record.ppn));
      continue;
    }
    row.breakeven = break_even(row.record.t_init_s, it->second->t_per_iter_s,
                               row.record.t_per_iter_s);
  }
  return orphans;
}

}  // namespace rmaav
