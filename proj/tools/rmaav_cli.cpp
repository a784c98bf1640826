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

// Command-line front-end: uniform and sparse-matrix benchmarks, oracle
// validation sweeps, pattern inspection and break-even analysis.
// Exit codes: 0 success, 1 execution or validation failure, 2 usage error.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <string>
#include <tuple>
#include <vector>

#include <CLI11.hpp>

#include "rmaav/bench.hpp"
#include "rmaav/collectives.hpp"
#include "rmaav/matrix_market.hpp"
#include "rmaav/pattern.hpp"
#include "rmaav/runtime.hpp"

namespace {

struct CommonOpts {
  int ranks = 4;
  int ppn = 1;
  std::int64_t elem_size = 4;
  bool validate_rma = false;
  double timeout_s = 30.0;
};

struct BenchOpts {
  CommonOpts common;
  std::vector<std::string> variants{"baseline", "fence", "lock",
                                    "fence-hier"};
  int iterations = 1000;
  int warmup = 10;
  bool fake_clock = false;
  std::string out_path;
};

void add_common_flags(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--ranks", o.ranks, "world size")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--ppn", o.ppn, "ranks per node")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--elem-size", o.elem_size, "element size in bytes")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_flag("--validate-rma", o.validate_rma,
                "enable runtime protocol checks (also: RMA_VALIDATE=1)");
  cmd->add_option("--timeout", o.timeout_s, "per-world deadline in seconds")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
}

void add_bench_flags(CLI::App* cmd, BenchOpts& o) {
  add_common_flags(cmd, o.common);
  cmd->add_option("--variants", o.variants,
                  "comma-separated subset of baseline,fence,lock,fence-hier")
      ->delimiter(',')
      ->capture_default_str();
  cmd->add_option("--iterations", o.iterations, "timed iterations")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--warmup", o.warmup, "untimed warmup iterations")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  cmd->add_option("--out", o.out_path, "write CSV here instead of stdout");
  cmd->add_flag("--fake-clock", o.fake_clock,
                "deterministic counter clock (golden-file test hook)")
      ->group("");
}

std::vector<rmaav::Variant> resolve_variants(
    const std::vector<std::string>& names) {
  std::vector<rmaav::Variant> out;
  for (const std::string& name : names) {
    const auto v = rmaav::parse_variant(name);
    if (!v) throw rmaav::ArgumentError("unknown variant '" + name + "'");
    out.push_back(*v);
  }
  if (out.empty()) throw rmaav::ArgumentError("no variants selected");
  return out;
}

rmaav::BenchOptions to_bench_options(const BenchOpts& o) {
  rmaav::BenchOptions opt;
  opt.ranks = o.common.ranks;
  opt.ppn = o.common.ppn;
  opt.iterations = o.iterations;
  opt.warmup = o.warmup;
  opt.elem_size_bytes = o.common.elem_size;
  opt.validate_rma = o.common.validate_rma;
  opt.fake_clock = o.fake_clock;
  opt.timeout_s = o.common.timeout_s;
  return opt;
}

void write_output(const std::string& path, const std::string& text) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw rmaav::ArgumentError("cannot open output file '" + path +
                                       "'");
  out << text;
  if (!out) throw rmaav::Error("failed writing output file '" + path + "'");
}

int emit_and_report(std::vector<rmaav::CsvRow>& rows,
                    const std::string& out_path) {
  rmaav::attach_break_evens(rows);
  write_output(out_path, rmaav::emit_csv(rows));
  for (const rmaav::CsvRow& row : rows) {
    if (!row.record.validated) {
      std::cerr << "validation failed: " << rmaav::to_string(row.record.variant)
                << " " << row.record.pattern << " msg_size="
                << row.record.msg_size_bytes << "\n";
      return 1;
    }
  }
  return 0;
}

int cmd_bench_uniform(const BenchOpts& o,
                      const std::vector<std::int64_t>& sizes) {
  const auto variants = resolve_variants(o.variants);
  std::vector<rmaav::CsvRow> rows;
  for (const std::int64_t size : sizes) {
    for (const rmaav::Variant v : variants) {
      rmaav::BenchOptions opt = to_bench_options(o);
      opt.variant = v;
      rows.push_back(rmaav::CsvRow{rmaav::run_uniform_bench(opt, size), {}});
    }
  }
  return emit_and_report(rows, o.out_path);
}

int cmd_bench_sparse(const BenchOpts& o, const std::string& matrix_path) {
  const auto variants = resolve_variants(o.variants);
  const rmaav::SparseMatrix m = rmaav::load_matrix_market(matrix_path);
  const std::string stem = std::filesystem::path(matrix_path).stem().string();
  std::vector<rmaav::CsvRow> rows;
  for (const rmaav::Variant v : variants) {
    rmaav::BenchOptions opt = to_bench_options(o);
    opt.variant = v;
    rows.push_back(rmaav::CsvRow{rmaav::run_sparse_bench(opt, m, stem), {}});
  }
  return emit_and_report(rows, o.out_path);
}

struct ValidateOpts {
  CommonOpts common;
  int specs = 20;
  std::uint64_t seed = 42;
  bool inject_fault = false;
};

int cmd_validate(const ValidateOpts& o) {
  using MismatchTuple = std::tuple<int, int, std::int64_t>;  // rank, peer, idx

  bool all_pass = true;
  for (const rmaav::Variant variant :
       {rmaav::Variant::Fence, rmaav::Variant::Lock,
        rmaav::Variant::FenceHierarchy}) {
    std::vector<MismatchTuple> mismatches;
    for (int s = 0; s < o.specs; ++s) {
      const rmaav::Pattern pat = rmaav::random_pattern(
          o.common.ranks, o.seed + static_cast<std::uint64_t>(s),
          o.common.elem_size);
      rmaav::WorldConfig cfg;
      cfg.ranks = o.common.ranks;
      cfg.ppn = o.common.ppn;
      cfg.validate = o.common.validate_rma;
      cfg.timeout_s = o.common.timeout_s;
      const auto per_rank = rmaav::spawn_world(
          cfg, [&](rmaav::Rank& rank) -> std::vector<MismatchTuple> {
            const int r = rank.ctx().rank;
            rmaav::RankExchange oracle(pat, r);
            rmaav::RankExchange subject(pat, r);
            rmaav::fill_send(oracle.spec(), r);
            rmaav::fill_send(subject.spec(), r);
            rmaav::alltoallv_baseline(rank, oracle.spec());

            rmaav::WindowCache cache;
            rmaav::PersistentRequest req =
                rmaav::init_request(rank, variant, subject.spec(), cache);
            rmaav::start_request(rank, req);
            rmaav::wait_request(rank, req);
            if (o.inject_fault && !subject.spec().recv.empty())
              subject.spec().recv[0] ^= std::byte{0xFF};
            rmaav::free_request(rank, req, cache);

            std::vector<MismatchTuple> bad;
            const auto& spec = oracle.spec();
            const std::int64_t esize = spec.elem_size_bytes;
            for (std::size_t p = 0; p < spec.recvcounts.size(); ++p) {
              const auto off =
                  static_cast<std::size_t>(spec.rdispls[p] * esize);
              const auto len =
                  static_cast<std::size_t>(spec.recvcounts[p] * esize);
              for (std::size_t b = 0; b < len; ++b) {
                if (subject.spec().recv[off + b] != spec.recv[off + b])
                  bad.emplace_back(r, static_cast<int>(p),
                                   static_cast<std::int64_t>(b));
              }
            }
            return bad;
          });
      for (const auto& rank_list : per_rank)
        mismatches.insert(mismatches.end(), rank_list.begin(),
                          rank_list.end());
    }
    if (mismatches.empty()) {
      std::cout << rmaav::to_string(variant) << ": pass\n";
    } else {
      all_pass = false;
      std::cout << rmaav::to_string(variant) << ": fail ("
                << mismatches.size() << " mismatches)\n";
      const std::size_t shown = std::min<std::size_t>(mismatches.size(), 5);
      for (std::size_t i = 0; i < shown; ++i) {
        const auto& [rank, peer, index] = mismatches[i];
        std::cout << "  rank " << rank << " peer " << peer << " index "
                  << index << "\n";
      }
    }
  }
  return all_pass ? 0 : 1;
}

int cmd_breakeven(const std::string& csv_path) {
  std::ifstream in(csv_path, std::ios::binary);
  if (!in)
    throw rmaav::ArgumentError("cannot open CSV file '" + csv_path + "'");
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());

  std::vector<rmaav::CsvRow> rows = rmaav::parse_csv(text);
  const std::vector<std::string> orphans = rmaav::attach_break_evens(rows);
  if (!orphans.empty()) {
    for (const std::string& orphan : orphans)
      std::cerr << "no baseline pairing for row: " << orphan << "\n";
    return 1;
  }

  std::cout << "variant      pattern          msg_size      delta_s"
               "  n_breakeven  savings_pct\n";
  for (const rmaav::CsvRow& row : rows) {
    const rmaav::TimingRecord& r = row.record;
    std::string delta = "0";
    std::string n = "-";
    std::string pct = "0";
    if (row.breakeven) {
      delta = rmaav::format_double(row.breakeven->delta_s);
      if (row.breakeven->n_breakeven)
        n = std::to_string(*row.breakeven->n_breakeven);
      pct = row.breakeven->savings_pct
                ? rmaav::format_double(*row.breakeven->savings_pct)
                : "-";
    }
    std::printf("%-12s %-16s %8lld %12s %12s %12s\n", rmaav::to_string(r.variant),
                r.pattern.c_str(),
                static_cast<long long>(r.msg_size_bytes), delta.c_str(),
                n.c_str(), pct.c_str());
  }
  return 0;
}

int cmd_pattern(const CommonOpts& common, const std::string& matrix_path,
                std::int64_t uniform_size) {
  rmaav::Pattern pat;
  if (!matrix_path.empty()) {
    const rmaav::SparseMatrix m = rmaav::load_matrix_market(matrix_path);
    pat = rmaav::matrix_pattern(m, common.ranks, common.elem_size);
    pat.name = std::filesystem::path(matrix_path).stem().string();
  } else {
    pat = rmaav::uniform_pattern(common.ranks, uniform_size,
                                 common.elem_size);
  }
  std::cout << "pattern " << pat.name << ": ranks=" << pat.ranks
            << " elem_size=" << pat.elem_size_bytes << "\n";
  for (int r = 0; r < pat.ranks; ++r) {
    std::cout << "rank " << r << " ->";
    for (int p = 0; p < pat.ranks; ++p) std::cout << ' ' << pat.at(r, p);
    std::cout << "\n";
  }
  return 0;
}

int guarded(const std::function<int()>& body) {
  try {
    return body();
  } catch (const rmaav::ArgumentError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const rmaav::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const rmaav::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"persistent one-sided alltoallv: benchmarks, validation and "
               "break-even analysis"};
  app.require_subcommand(1);

  BenchOpts uniform_opts;
  std::vector<std::int64_t> sizes;
  CLI::App* bench_uniform =
      app.add_subcommand("bench-uniform", "uniform all-to-all benchmark");
  add_bench_flags(bench_uniform, uniform_opts);
  bench_uniform->add_option("--sizes", sizes,
                            "comma-separated message sizes in bytes")
      ->delimiter(',')
      ->required();

  BenchOpts sparse_opts;
  std::string sparse_matrix;
  CLI::App* bench_sparse = app.add_subcommand(
      "bench-sparse", "sparse-matrix-pattern benchmark");
  add_bench_flags(bench_sparse, sparse_opts);
  bench_sparse->add_option("--matrix", sparse_matrix,
                           "Matrix Market coordinate file")
      ->required();

  ValidateOpts validate_opts;
  CLI::App* validate = app.add_subcommand(
      "validate", "check every persistent variant against the baseline");
  add_common_flags(validate, validate_opts.common);
  validate->add_option("--specs", validate_opts.specs,
                       "randomized exchanges per variant")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  validate->add_option("--seed", validate_opts.seed, "randomization seed")
      ->capture_default_str();
  validate->add_flag("--inject-fault", validate_opts.inject_fault,
                     "corrupt one received byte (test hook)")
      ->group("");

  std::string breakeven_csv;
  CLI::App* breakeven = app.add_subcommand(
      "breakeven", "pair persistent rows with baselines and report savings");
  breakeven->add_option("csv", breakeven_csv, "CSV produced by a bench run")
      ->required();

  CommonOpts pattern_common;
  std::string pattern_matrix;
  std::int64_t pattern_uniform_size = -1;
  CLI::App* pattern =
      app.add_subcommand("pattern", "print a pattern's byte-count matrix");
  add_common_flags(pattern, pattern_common);
  CLI::Option* pm = pattern->add_option("--matrix", pattern_matrix,
                                        "Matrix Market coordinate file");
  pattern->add_option("--uniform-size", pattern_uniform_size,
                      "uniform message size in bytes")
      ->excludes(pm);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (std::getenv("RMA_VALIDATE") &&
      std::string(std::getenv("RMA_VALIDATE")) == "1") {
    uniform_opts.common.validate_rma = true;
    sparse_opts.common.validate_rma = true;
    validate_opts.common.validate_rma = true;
  }

  if (bench_uniform->parsed())
    return guarded([&] { return cmd_bench_uniform(uniform_opts, sizes); });
  if (bench_sparse->parsed())
    return guarded([&] { return cmd_bench_sparse(sparse_opts, sparse_matrix); });
  if (validate->parsed())
    return guarded([&] { return cmd_validate(validate_opts); });
  if (breakeven->parsed())
    return guarded([&] { return cmd_breakeven(breakeven_csv); });
  if (pattern->parsed()) {
    if (pattern_matrix.empty() && pattern_uniform_size < 0) {
      std::cerr << "error: pattern needs --matrix or --uniform-size\n";
      return 2;
    }
    return guarded([&] {
      return cmd_pattern(pattern_common, pattern_matrix,
                         pattern_uniform_size);
    });
  }
  return 2;
}
