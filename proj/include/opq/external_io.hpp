// External-memory cost model: block-level cache simulation of recorded probe
// traces (LRU and offline-optimal Belady), the cache-aware and cache-agnostic
// oblivious partitions, and the priority-queue I/O experiment.
#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "opq/element.hpp"

namespace opq {

enum class ReplacementPolicy { ExplicitCacheAware, Lru, BeladyOffline };

std::string to_string(ReplacementPolicy policy);

struct IoModel {
  std::size_t memory_words = 1024;  // M
  std::size_t block_words = 64;     // B
  ReplacementPolicy policy = ReplacementPolicy::BeladyOffline;

  std::size_t frames() const { return memory_words / block_words; }
  bool tall(double epsilon) const;
};

struct IoStats {
  std::string algo;
  std::size_t n = 0;
  std::size_t memory_words = 0;
  std::size_t block_words = 0;
  ReplacementPolicy policy = ReplacementPolicy::BeladyOffline;
  std::uint64_t transfers = 0;
  std::vector<std::pair<std::string, std::uint64_t>> phases;
};

/// CSV header and row: algo,n,M,B,policy,transfers,phase. One row for the
/// total (phase "total") plus one per recorded phase.
void write_io_csv_header(std::ostream& out);
void write_io_csv(std::ostream& out, const IoStats& stats);

/// Collects the block-granular access sequence for one block size while a
/// computation runs. Consecutive accesses to the same block are merged; this
/// changes neither LRU nor Belady miss counts.
class BlockTrace : public ProbeObserver {
 public:
  explicit BlockTrace(std::size_t block_words) : block_words_(block_words) {}

  void on_probe(std::uint64_t address, ProbeOp op) override;
  void on_phase(std::string_view name) override;

  std::size_t block_words() const { return block_words_; }
  const std::vector<std::uint32_t>& blocks() const { return blocks_; }
  /// Phase boundaries as (first sequence position, name).
  const std::vector<std::pair<std::size_t, std::string>>& phases() const { return phases_; }

 private:
  std::size_t block_words_;
  std::vector<std::uint32_t> blocks_;
  std::vector<std::pair<std::size_t, std::string>> phases_;
};

struct MissCount {
  std::uint64_t total = 0;
  std::vector<std::pair<std::string, std::uint64_t>> phases;
};

/// Replays a block sequence against a cache of `frames` blocks. Misses at
/// positions before `count_from` are not counted.
MissCount simulate_blocks(const BlockTrace& trace, std::size_t frames, ReplacementPolicy policy,
                          std::size_t count_from = 0);

/// Replays a fully retained probe trace at block granularity.
IoStats simulate_io(const ProbeTrace& trace, std::size_t memory_words, std::size_t block_words,
                    ReplacementPolicy policy);

/// Blocked oblivious partition: groups of one block each, consolidated with
/// purify_half, groups partitioned as indivisible units, then two bitonic
/// merges. Requires policy == ExplicitCacheAware.
void cache_aware_partition(const ElementSpan& a, const Predicate& p, const IoModel& model);

/// Group size ceil(n^(1/(1+eps))) used by the cache-agnostic partition.
std::size_t agnostic_group_size(std::size_t n, double epsilon);

/// Recursive oblivious partition that never sees M or B. When `sizes` is
/// given, sizes->at(d) receives the largest instance size at recursion depth d.
void cache_agnostic_partition(const ElementSpan& a, const Predicate& p, double epsilon,
                              std::vector<std::size_t>* sizes = nullptr);

/// Recursion depth at which every instance of n elements fits M (both in
/// elements): ceil(log_{1+eps}(log n / log M)), or 0 if n <= M.
std::size_t predicted_in_cache_depth(std::size_t n, std::size_t memory_elements, double epsilon);

/// Measured counterpart: first depth whose largest instance is <= M.
std::size_t measured_in_cache_depth(const std::vector<std::size_t>& sizes,
                                    std::size_t memory_elements);

enum class ExternalBackend { CacheAware, CacheAgnostic };

struct PqIoResult {
  std::size_t capacity = 0;
  std::size_t operations = 0;
  IoStats stats;  // transfers over the measured window
  double transfers_per_op = 0.0;
  /// Levels m < small_levels (j = floor(log2(M/8)), M in words) and their
  /// share of the measured transfers, counting the per-operation reads.
  std::size_t small_levels = 0;
  std::uint64_t small_level_transfers = 0;
  std::uint64_t distinct_blocks = 0;
};

/// Builds a half-full queue, runs `n_ops` operation-hiding operations and
/// replays their trace with Belady replacement and M/B frames.
PqIoResult pq_io_experiment(std::size_t capacity, std::size_t n_ops, std::size_t memory_words,
                            std::size_t block_words, ExternalBackend backend,
                            std::uint64_t seed = 1);

}  // namespace opq
