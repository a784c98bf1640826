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

#ifndef RMAAV_BENCH_HPP
#define RMAAV_BENCH_HPP

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rmaav/pattern.hpp"

namespace rmaav {

// Timing harness and break-even analyzer. The protocol for every variant:
// barrier, time init once, run W warmup iterations, barrier, time N
// start/wait iterations, validate the receive buffer after timing. Per-rank
// mean iteration times are reduced with max. The transport is simulated, so
// absolute times mean nothing off this machine; every CSV row carries
// transport=sim as a reminder.

struct TimingRecord {
  Variant variant = Variant::Baseline;
  int ranks = 1;
  int ppn = 1;
  std::string pattern;  // "uniform" or the matrix file stem
  std::int64_t msg_size_bytes = 0;  // 0 for matrix patterns
  int iterations = 0;
  int warmup = 0;
  double t_init_s = 0.0;
  double t_per_iter_s = 0.0;
  double t_total_s = 0.0;
  bool validated = false;

  friend bool operator==(const TimingRecord&, const TimingRecord&) = default;
};

struct BreakEvenResult {
  double delta_s = 0.0;  // t_mpi - t_persist
  std::optional<std::int64_t> n_breakeven;  // empty iff delta_s <= 0
  double savings_abs_s = 0.0;
  std::optional<double> savings_pct;  // empty iff t_mpi == 0

  friend bool operator==(const BreakEvenResult&,
                         const BreakEvenResult&) = default;
};

// n_breakeven = ⌈t_init / (t_mpi - t_persist)⌉ clamped to >= 1; equality at
// the boundary counts as paid off. All inputs must be >= 0.
BreakEvenResult break_even(double t_init_s, double t_mpi_s,
                           double t_persist_s);

// t_init + n * t_persist
double total_cost(double t_init_s, double t_persist_s, std::int64_t n);

// n * t_mpi
double baseline_cost(double t_mpi_s, std::int64_t n);

struct BenchOptions {
  Variant variant = Variant::Baseline;
  int ranks = 1;
  int ppn = 1;
  int iterations = 1000;
  int warmup = 10;
  std::int64_t elem_size_bytes = 4;
  bool validate_rma = false;
  bool fake_clock = false;  // deterministic counter clock for golden files
  double timeout_s = 30.0;
};

struct BenchOutcome {
  TimingRecord record;
  std::vector<double> per_rank_mean_s;  // each <= record.t_per_iter_s
  std::uint64_t cache_misses = 0;
  std::uint64_t cache_hits = 0;
  std::int64_t mismatches = 0;
};

// Core harness; throws if the window cache recreates a window mid-run.
BenchOutcome run_pattern_bench(const BenchOptions& opt, const Pattern& pat,
                               const std::string& pattern_name,
                               std::int64_t msg_size_bytes);

TimingRecord run_uniform_bench(const BenchOptions& opt,
                               std::int64_t msg_size_bytes);

TimingRecord run_sparse_bench(const BenchOptions& opt, const SparseMatrix& m,
                              const std::string& pattern_name);

// --- CSV ---------------------------------------------------------------

inline constexpr const char* kCsvHeader =
    "variant,transport,ranks,ppn,pattern,msg_size_bytes,iterations,warmup,"
    "t_init_s,t_per_iter_s,t_total_s,delta_s,n_breakeven,savings_pct,"
    "validated";

struct CsvRow {
  TimingRecord record;
  std::optional<BreakEvenResult> breakeven;

  friend bool operator==(const CsvRow&, const CsvRow&) = default;
};

// %.9g: 9 significant digits, '.' decimal separator.
std::string format_double(double v);

// Header plus one line per row; empty cells for absent break-even data.
std::string emit_csv(std::span<const CsvRow> rows);

// Strict inverse of emit_csv; ParseError carries the 1-based line number.
std::vector<CsvRow> parse_csv(std::string_view text);

// Pairs each persistent row with the baseline row sharing (pattern,
// msg_size_bytes, ranks, ppn) and fills its break-even columns from the two
// per-iteration times. Returns a description of every persistent row left
// without a baseline partner.
std::vector<std::string> attach_break_evens(std::vector<CsvRow>& rows);

}  // namespace rmaav

#endif  // RMAAV_BENCH_HPP
