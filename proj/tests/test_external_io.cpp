#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <list>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "opq/external_io.hpp"
#include "opq/reference/oracles.hpp"

namespace opq {
namespace {

const Predicate kBit = [](const Element& e) { return e.priority != 0; };

BlockTrace blocks_of(const std::vector<std::uint32_t>& seq) {
  BlockTrace t(1);
  for (auto b : seq) t.on_probe(b, ProbeOp::Read);
  return t;
}

// Plain list-based LRU.
std::uint64_t lru_oracle(const std::vector<std::uint32_t>& seq, std::size_t frames) {
  std::list<std::uint32_t> cache;
  std::uint64_t misses = 0;
  for (auto b : seq) {
    auto it = std::find(cache.begin(), cache.end(), b);
    if (it != cache.end()) {
      cache.erase(it);
    } else {
      ++misses;
      if (cache.size() == frames) cache.pop_back();
    }
    cache.push_front(b);
  }
  return misses;
}

// Exhaustive search over every eviction choice.
std::uint64_t optimal_oracle(const std::vector<std::uint32_t>& seq, std::size_t frames,
                             std::size_t pos, std::set<std::uint32_t> cache,
                             std::map<std::pair<std::size_t, std::set<std::uint32_t>>, std::uint64_t>& memo) {
  if (pos == seq.size()) return 0;
  const auto key = std::make_pair(pos, cache);
  if (auto it = memo.find(key); it != memo.end()) return it->second;
  std::uint64_t best;
  const std::uint32_t b = seq[pos];
  if (cache.count(b)) {
    best = optimal_oracle(seq, frames, pos + 1, cache, memo);
  } else if (cache.size() < frames) {
    cache.insert(b);
    best = 1 + optimal_oracle(seq, frames, pos + 1, cache, memo);
  } else {
    best = ~std::uint64_t{0};
    for (auto victim : std::set<std::uint32_t>(cache)) {
      auto next = cache;
      next.erase(victim);
      next.insert(b);
      best = std::min(best, 1 + optimal_oracle(seq, frames, pos + 1, next, memo));
    }
  }
  memo[key] = best;
  return best;
}

TEST(CacheSimulation, BeladyIsOptimalAndLruMatchesOracle) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t len = 1 + rng() % 14;
    const std::size_t distinct = 1 + rng() % 6;
    const std::size_t frames = 1 + rng() % 3;
    std::vector<std::uint32_t> seq(len);
    for (auto& b : seq) b = static_cast<std::uint32_t>(rng() % distinct);
    const BlockTrace trace = blocks_of(seq);
    std::map<std::pair<std::size_t, std::set<std::uint32_t>>, std::uint64_t> memo;
    const auto opt = optimal_oracle(seq, frames, 0, {}, memo);
    const auto belady = simulate_blocks(trace, frames, ReplacementPolicy::BeladyOffline).total;
    const auto lru = simulate_blocks(trace, frames, ReplacementPolicy::Lru).total;
    ASSERT_EQ(belady, opt) << "trial " << trial;
    ASSERT_EQ(lru, lru_oracle(seq, frames)) << "trial " << trial;
    ASSERT_LE(belady, lru);
  }
}

TEST(CacheSimulation, BeladyNeverWorseThanLruOnLongRandomTraces) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<std::uint32_t> seq(20000);
    for (auto& b : seq) b = static_cast<std::uint32_t>(rng() % 300);
    const BlockTrace trace = blocks_of(seq);
    for (std::size_t frames : {1, 8, 64, 299}) {
      EXPECT_LE(simulate_blocks(trace, frames, ReplacementPolicy::BeladyOffline).total,
                simulate_blocks(trace, frames, ReplacementPolicy::Lru).total);
    }
  }
}

ProbeTrace scan_trace(std::size_t words, std::size_t passes) {
  Memory memory(kRetainEvents);
  const TracedArray a = memory.allocate(words);
  for (std::size_t p = 0; p < passes; ++p) {
    for (std::size_t i = 0; i < words; ++i) a.get(i);
  }
  return memory.recorder().snapshot();
}

TEST(SimulateIo, SequentialScanCostsCompulsoryMisses) {
  for (std::size_t n : {1, 63, 64, 65, 1000}) {
    const ProbeTrace t = scan_trace(n, 1);
    for (auto policy : {ReplacementPolicy::Lru, ReplacementPolicy::BeladyOffline}) {
      EXPECT_EQ(simulate_io(t, 256, 64, policy).transfers, (n + 63) / 64) << n;
    }
  }
}

TEST(SimulateIo, RepeatedScanThatFitsMissesOnlyOnce) {
  const std::size_t m = 1024, b = 16;
  const ProbeTrace t = scan_trace(m / 2, 5);
  for (auto policy : {ReplacementPolicy::Lru, ReplacementPolicy::BeladyOffline}) {
    EXPECT_EQ(simulate_io(t, m, b, policy).transfers, m / 2 / b);
  }
  // A scan twice the cache size thrashes LRU on every pass.
  const ProbeTrace big = scan_trace(2 * m, 3);
  EXPECT_EQ(simulate_io(big, m, b, ReplacementPolicy::Lru).transfers, 3 * 2 * m / b);
  EXPECT_LT(simulate_io(big, m, b, ReplacementPolicy::BeladyOffline).transfers, 3 * 2 * m / b);
}

TEST(SimulateIo, RejectsTracesWithoutEventsAndBadModels) {
  Memory memory(kDigest);
  memory.allocate(4).get(0);
  EXPECT_THROW(simulate_io(memory.recorder().snapshot(), 64, 8, ReplacementPolicy::Lru),
               std::invalid_argument);
  EXPECT_THROW(simulate_io(scan_trace(4, 1), 4, 8, ReplacementPolicy::Lru), std::invalid_argument);
}

TEST(SimulateIo, PhasesSplitTheTotal) {
  Memory memory(kCountOnly);
  const TracedArray a = memory.allocate(64);
  BlockTrace trace(8);
  memory.recorder().add_observer(&trace);
  memory.recorder().mark_phase("first");
  for (std::size_t i = 0; i < 32; ++i) a.get(i);
  memory.recorder().mark_phase("second");
  for (std::size_t i = 0; i < 64; ++i) a.get(i);
  const MissCount m = simulate_blocks(trace, 16, ReplacementPolicy::Lru);
  EXPECT_EQ(m.total, 8u);
  ASSERT_EQ(m.phases.size(), 2u);
  EXPECT_EQ(m.phases[0], (std::pair<std::string, std::uint64_t>{"first", 4}));
  EXPECT_EQ(m.phases[1], (std::pair<std::string, std::uint64_t>{"second", 4}));
  EXPECT_EQ(simulate_blocks(trace, 16, ReplacementPolicy::Lru, 5).total, 4u);
}

TEST(IoCsv, HeaderAndRows) {
  std::ostringstream s;
  write_io_csv_header(s);
  write_io_csv(s, IoStats{"x", 10, 1024, 64, ReplacementPolicy::Lru, 7, {{"merge", 3}}});
  EXPECT_EQ(s.str(),
            "algo,n,M,B,policy,transfers,phase\n"
            "x,10,1024,64,lru,7,total\n"
            "x,10,1024,64,lru,3,merge\n");
}

std::vector<Element> random_bits(std::size_t n, std::mt19937_64& rng) {
  std::vector<Element> v(n);
  const unsigned density = static_cast<unsigned>(rng() % 5);  // vary the share of ones
  for (std::size_t i = 0; i < n; ++i) v[i] = Element::real(i, rng() % 4 < density, i);
  return v;
}

ElementSpan load(Memory& memory, const std::vector<Element>& values) {
  const ElementSpan a = ElementSpan::allocate(memory, values.size());
  for (std::size_t i = 0; i < values.size(); ++i) a.store(i, values[i]);
  return a;
}

void expect_partitioned(const std::vector<Element>& in, const ElementSpan& a) {
  const auto out = reference::snapshot(a);
  ASSERT_TRUE(reference::is_partitioned(out, kBit));
  ASSERT_TRUE(reference::same_multiset(in, out));
}

TEST(CacheAwarePartition, SmallInputsAllBlockSizes) {
  std::mt19937_64 rng(3);
  for (std::size_t b : {4, 16, 64}) {
    for (std::size_t n = 0; n <= 130; ++n) {
      const auto in = random_bits(n, rng);
      Memory memory(kCountOnly);
      const ElementSpan a = load(memory, in);
      cache_aware_partition(a, kBit, IoModel{4 * b, b, ReplacementPolicy::ExplicitCacheAware});
      expect_partitioned(in, a);
    }
  }
}

TEST(CacheAwarePartition, RequiresExplicitModel) {
  Memory memory;
  const ElementSpan a = ElementSpan::allocate(memory, 8);
  EXPECT_THROW(cache_aware_partition(a, kBit, IoModel{64, 16, ReplacementPolicy::Lru}),
               std::invalid_argument);
}

TEST(CacheAwarePartition, LargeInputAndObliviousTrace) {
  std::mt19937_64 rng(4);
  std::vector<Digest> digests;
  for (int trial = 0; trial < 3; ++trial) {
    const auto in = random_bits(1 << 14, rng);
    Memory memory(kDigest);
    const ElementSpan a = load(memory, in);
    cache_aware_partition(a, kBit, IoModel{1024, 64, ReplacementPolicy::ExplicitCacheAware});
    expect_partitioned(in, a);
    digests.push_back(memory.recorder().snapshot().digest);
  }
  EXPECT_EQ(digests[0], digests[1]);
  EXPECT_EQ(digests[0], digests[2]);
}

TEST(CacheAwarePartition, SingleBlockFitsInMemory) {
  // n <= B: one block, so transfers stay within 2 * ceil(n/B).
  Memory memory(kRetainEvents, 256);
  std::mt19937_64 rng(5);
  const auto in = random_bits(16, rng);  // 64 words
  const ElementSpan a = load(memory, in);
  cache_aware_partition(a, kBit, IoModel{1024, 64, ReplacementPolicy::ExplicitCacheAware});
  const IoStats s = simulate_io(memory.recorder().snapshot(), 1024, 64,
                                ReplacementPolicy::BeladyOffline);
  EXPECT_LE(s.transfers, 2u * 2u);  // the data block plus the tag scratch block
}

TEST(CacheAgnosticPartition, GroupSizes) {
  EXPECT_EQ(agnostic_group_size(100, 1.0), 10u);
  EXPECT_EQ(agnostic_group_size(101, 1.0), 11u);
  EXPECT_EQ(agnostic_group_size(4, 1.0), 2u);
  EXPECT_EQ(agnostic_group_size(1000, 2.0), 10u);
  EXPECT_EQ(agnostic_group_size(1001, 2.0), 11u);
  for (std::size_t n = 2; n < 3000; ++n) {
    for (double eps : {0.5, 1.0, 2.0}) {
      const std::size_t k = agnostic_group_size(n, eps);
      ASSERT_GE(std::pow(double(k), 1 + eps), double(n) * (1 - 1e-12));
      ASSERT_LT(std::pow(double(k - 1), 1 + eps), double(n) * (1 + 1e-12));
    }
  }
  EXPECT_THROW(agnostic_group_size(10, 0.0), std::invalid_argument);
}

TEST(CacheAgnosticPartition, BaseCaseAndSweep) {
  std::mt19937_64 rng(6);
  for (double eps : {1.0, 0.5, 3.0}) {
    for (std::size_t n = 0; n <= 200; ++n) {
      const auto in = random_bits(n, rng);
      Memory memory(kCountOnly);
      const ElementSpan a = load(memory, in);
      cache_agnostic_partition(a, kBit, eps);
      expect_partitioned(in, a);
    }
  }
}

TEST(CacheAgnosticPartition, RecordsInstanceSizesPerDepth) {
  Memory memory(kCountOnly);
  std::mt19937_64 rng(7);
  const auto in = random_bits(100, rng);
  const ElementSpan a = load(memory, in);
  std::vector<std::size_t> sizes;
  cache_agnostic_partition(a, kBit, 1.0, &sizes);
  expect_partitioned(in, a);
  // 100 -> groups of 10 -> groups of 4 (base case).
  EXPECT_EQ(sizes, (std::vector<std::size_t>{100, 10, 4}));
  EXPECT_EQ(measured_in_cache_depth(sizes, 10), 1u);
  EXPECT_EQ(measured_in_cache_depth(sizes, 3), 3u);
}

TEST(CacheAgnosticPartition, PredictedDepth) {
  EXPECT_EQ(predicted_in_cache_depth(100, 200, 1.0), 0u);
  // log(2^16)/log(2^4) = 4, log2(4) = 2.
  EXPECT_EQ(predicted_in_cache_depth(1 << 16, 1 << 4, 1.0), 2u);
  EXPECT_EQ(predicted_in_cache_depth(1 << 16, 1 << 8, 1.0), 1u);
  EXPECT_EQ(predicted_in_cache_depth(1 << 18, 1 << 8, 1.0), 2u);
}

TEST(CacheAgnosticPartition, ObliviousTrace) {
  std::mt19937_64 rng(8);
  std::vector<Digest> digests;
  for (int trial = 0; trial < 3; ++trial) {
    const auto in = random_bits(3000, rng);
    Memory memory(kDigest);
    cache_agnostic_partition(load(memory, in), kBit, 1.0);
    digests.push_back(memory.recorder().snapshot().digest);
  }
  EXPECT_EQ(digests[0], digests[1]);
  EXPECT_EQ(digests[0], digests[2]);
}

TEST(IoModel, TallCache) {
  EXPECT_TRUE((IoModel{1 << 14, 64, ReplacementPolicy::Lru}.tall(1.0)));
  EXPECT_FALSE((IoModel{1 << 10, 64, ReplacementPolicy::Lru}.tall(1.0)));
  EXPECT_EQ((IoModel{1 << 10, 64, ReplacementPolicy::Lru}.frames()), 16u);
}

TEST(PqIo, QueueThatFitsOnlyPaysColdMisses) {
  const PqIoResult r = pq_io_experiment(64, 64, 1 << 16, 64, ExternalBackend::CacheAware);
  EXPECT_EQ(r.stats.transfers, r.distinct_blocks);
  EXPECT_GT(r.stats.transfers, 0u);
}

TEST(PqIo, LargerQueuesCostMorePerOperation) {
  const auto small = pq_io_experiment(256, 128, 1024, 16, ExternalBackend::CacheAware);
  const auto large = pq_io_experiment(2048, 1024, 1024, 16, ExternalBackend::CacheAware);
  EXPECT_GT(large.transfers_per_op, small.transfers_per_op);
  EXPECT_LE(small.small_level_transfers, small.stats.transfers);
  EXPECT_EQ(small.small_levels, 7u);  // floor(log2(1024 / 8))
}

}  // namespace
}  // namespace opq
