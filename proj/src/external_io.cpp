#include "opq/external_io.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <random>
#include <stdexcept>

#include "opq/primitives.hpp"
#include "opq/priority_queue.hpp"

namespace opq {

std::string to_string(ReplacementPolicy policy) {
  switch (policy) {
    case ReplacementPolicy::ExplicitCacheAware: return "explicit";
    case ReplacementPolicy::Lru: return "lru";
    case ReplacementPolicy::BeladyOffline: return "belady";
  }
  return "?";
}

bool IoModel::tall(double epsilon) const {
  return static_cast<double>(memory_words) >=
         std::pow(static_cast<double>(block_words), 1.0 + epsilon);
}

void write_io_csv_header(std::ostream& out) { out << "algo,n,M,B,policy,transfers,phase\n"; }

void write_io_csv(std::ostream& out, const IoStats& s) {
  const auto row = [&](std::uint64_t transfers, const std::string& phase) {
    out << s.algo << ',' << s.n << ',' << s.memory_words << ',' << s.block_words << ','
        << to_string(s.policy) << ',' << transfers << ',' << phase << '\n';
  };
  row(s.transfers, "total");
  for (const auto& [name, transfers] : s.phases) row(transfers, name);
}

void BlockTrace::on_probe(std::uint64_t address, ProbeOp) {
  const std::uint64_t block = address / block_words_;
  if (block > std::numeric_limits<std::uint32_t>::max() - 1) {
    throw std::overflow_error("block index exceeds 32 bits");
  }
  const auto b = static_cast<std::uint32_t>(block);
  if (blocks_.empty() || blocks_.back() != b) blocks_.push_back(b);
}

void BlockTrace::on_phase(std::string_view name) {
  phases_.emplace_back(blocks_.size(), std::string(name));
}

namespace {

constexpr std::uint32_t kNone = std::numeric_limits<std::uint32_t>::max();

// Accumulates misses into the phase active at each position.
class PhaseTally {
 public:
  PhaseTally(const BlockTrace& trace, std::size_t count_from)
      : marks_(trace.phases()), count_from_(count_from) {}

  void at(std::size_t pos) {
    while (next_ < marks_.size() && marks_[next_].first <= pos) {
      current_ = index_of(marks_[next_].second);
      ++next_;
    }
  }

  void miss(std::size_t pos, MissCount& out) {
    if (pos < count_from_) return;
    ++out.total;
    if (current_ != kNone) ++counts_[current_];
  }

  void finish(MissCount& out) const {
    for (std::size_t i = 0; i < names_.size(); ++i) out.phases.emplace_back(names_[i], counts_[i]);
  }

 private:
  std::uint32_t index_of(const std::string& name) {
    for (std::size_t i = 0; i < names_.size(); ++i) {
      if (names_[i] == name) return static_cast<std::uint32_t>(i);
    }
    names_.push_back(name);
    counts_.push_back(0);
    return static_cast<std::uint32_t>(names_.size() - 1);
  }

  const std::vector<std::pair<std::size_t, std::string>>& marks_;
  std::size_t count_from_;
  std::size_t next_ = 0;
  std::uint32_t current_ = kNone;
  std::vector<std::string> names_;
  std::vector<std::uint64_t> counts_;
};

std::uint32_t max_block(const std::vector<std::uint32_t>& blocks) {
  return blocks.empty() ? 0 : *std::max_element(blocks.begin(), blocks.end());
}

MissCount simulate_lru(const BlockTrace& trace, std::size_t frames, std::size_t count_from) {
  const auto& blocks = trace.blocks();
  const std::size_t universe = std::size_t{max_block(blocks)} + 1;
  // Intrusive doubly linked recency list over block ids; head = most recent.
  std::vector<std::uint32_t> prev(universe, kNone), next(universe, kNone);
  std::vector<std::uint8_t> cached(universe, 0);
  std::uint32_t head = kNone, tail = kNone;
  std::size_t used = 0;

  const auto unlink = [&](std::uint32_t b) {
    if (prev[b] != kNone) next[prev[b]] = next[b]; else head = next[b];
    if (next[b] != kNone) prev[next[b]] = prev[b]; else tail = prev[b];
  };
  const auto push_front = [&](std::uint32_t b) {
    prev[b] = kNone;
    next[b] = head;
    if (head != kNone) prev[head] = b;
    head = b;
    if (tail == kNone) tail = b;
  };

  MissCount out;
  PhaseTally tally(trace, count_from);
  for (std::size_t pos = 0; pos < blocks.size(); ++pos) {
    tally.at(pos);
    const std::uint32_t b = blocks[pos];
    if (cached[b]) {
      unlink(b);
      push_front(b);
      continue;
    }
    tally.miss(pos, out);
    if (used == frames) {
      const std::uint32_t victim = tail;
      unlink(victim);
      cached[victim] = 0;
      --used;
    }
    push_front(b);
    cached[b] = 1;
    ++used;
  }
  tally.finish(out);
  return out;
}

// Max-heap of cached blocks keyed by next use, with positions for updates.
class NextUseHeap {
 public:
  NextUseHeap(std::size_t capacity, std::size_t universe) : where_(universe, kNone) {
    heap_.reserve(capacity);
  }

  bool contains(std::uint32_t b) const { return where_[b] != kNone; }
  std::size_t size() const { return heap_.size(); }

  void push(std::uint32_t b, std::uint32_t key) {
    heap_.push_back({key, b});
    where_[b] = static_cast<std::uint32_t>(heap_.size() - 1);
    sift_up(heap_.size() - 1);
  }

  /// Keys only grow: a block's next use moves forward when it is accessed.
  void increase(std::uint32_t b, std::uint32_t key) {
    const std::size_t i = where_[b];
    heap_[i].key = key;
    sift_up(i);
  }

  std::uint32_t pop_max() {
    const std::uint32_t b = heap_.front().block;
    where_[b] = kNone;
    heap_.front() = heap_.back();
    heap_.pop_back();
    if (!heap_.empty()) {
      where_[heap_.front().block] = 0;
      sift_down(0);
    }
    return b;
  }

 private:
  struct Entry {
    std::uint32_t key;
    std::uint32_t block;
  };

  void place(std::size_t i, Entry e) {
    heap_[i] = e;
    where_[e.block] = static_cast<std::uint32_t>(i);
  }
  void sift_up(std::size_t i) {
    const Entry e = heap_[i];
    while (i > 0) {
      const std::size_t parent = (i - 1) / 2;
      if (heap_[parent].key >= e.key) break;
      place(i, heap_[parent]);
      i = parent;
    }
    place(i, e);
  }
  void sift_down(std::size_t i) {
    const Entry e = heap_[i];
    for (;;) {
      std::size_t child = 2 * i + 1;
      if (child >= heap_.size()) break;
      if (child + 1 < heap_.size() && heap_[child + 1].key > heap_[child].key) ++child;
      if (heap_[child].key <= e.key) break;
      place(i, heap_[child]);
      i = child;
    }
    place(i, e);
  }

  std::vector<Entry> heap_;
  std::vector<std::uint32_t> where_;
};

MissCount simulate_belady(const BlockTrace& trace, std::size_t frames, std::size_t count_from) {
  const auto& blocks = trace.blocks();
  if (blocks.size() >= kNone) throw std::overflow_error("block trace too long for simulation");
  const std::size_t universe = std::size_t{max_block(blocks)} + 1;

  // next_use[pos]: position of the next access to the same block, or "never".
  std::vector<std::uint32_t> next_use(blocks.size());
  {
    std::vector<std::uint32_t> seen(universe, kNone);
    for (std::size_t pos = blocks.size(); pos-- > 0;) {
      next_use[pos] = seen[blocks[pos]];
      seen[blocks[pos]] = static_cast<std::uint32_t>(pos);
    }
  }

  MissCount out;
  PhaseTally tally(trace, count_from);
  NextUseHeap cache(frames, universe);
  for (std::size_t pos = 0; pos < blocks.size(); ++pos) {
    tally.at(pos);
    const std::uint32_t b = blocks[pos];
    if (cache.contains(b)) {
      cache.increase(b, next_use[pos]);
      continue;
    }
    tally.miss(pos, out);
    if (cache.size() == frames) cache.pop_max();
    cache.push(b, next_use[pos]);
  }
  tally.finish(out);
  return out;
}

}  // namespace

MissCount simulate_blocks(const BlockTrace& trace, std::size_t frames, ReplacementPolicy policy,
                          std::size_t count_from) {
  if (frames == 0) throw std::invalid_argument("cache must hold at least one block");
  if (policy == ReplacementPolicy::Lru) return simulate_lru(trace, frames, count_from);
  return simulate_belady(trace, frames, count_from);
}

IoStats simulate_io(const ProbeTrace& trace, std::size_t memory_words, std::size_t block_words,
                    ReplacementPolicy policy) {
  if (!trace.has_events || trace.events.size() != trace.count) {
    throw std::invalid_argument("simulate_io: trace does not retain its events");
  }
  if (block_words == 0 || memory_words < block_words) {
    throw std::invalid_argument("simulate_io: need M >= B >= 1");
  }
  BlockTrace blocks(block_words);
  for (const auto& e : trace.events) blocks.on_probe(e.address, e.op);
  const MissCount misses = simulate_blocks(blocks, memory_words / block_words, policy);
  IoStats stats;
  stats.n = trace.count;
  stats.memory_words = memory_words;
  stats.block_words = block_words;
  stats.policy = policy;
  stats.transfers = misses.total;
  stats.phases = misses.phases;
  return stats;
}

namespace {

// Shared tail of both external partitions: groups of `group` elements, each
// already partitioned.
void consolidate_and_merge(const ElementSpan& a, const Predicate& p, std::size_t group,
                           Memory* marks) {
  const std::size_t n = a.size();
  const std::size_t m = (n + group - 1) / group;
  const auto mark = [&](const char* name) {
    if (marks) marks->recorder().mark_phase(name);
  };

  mark("consolidate");
  for (std::size_t i = 1; i + 1 < m; ++i) {
    purify_half(a.subspan((i - 1) * group, group), a.subspan(i * group, group), p);
  }

  mark("group_partition");
  if (m > 2) partition_units(a.words(), group * kElementWords, m - 2, p);

  mark("merge");
  const std::size_t tail_begin = (m - 2) * group;
  const ElementSpan last = a.subspan((m - 1) * group, n - (m - 1) * group);
  const ElementSpan tail = a.subspan(tail_begin, n - tail_begin);
  reverse(last);
  part_bitonic(tail, p);
  reverse(tail);
  part_bitonic(a, p);
}

}  // namespace

void cache_aware_partition(const ElementSpan& a, const Predicate& p, const IoModel& model) {
  if (model.policy != ReplacementPolicy::ExplicitCacheAware) {
    throw std::invalid_argument("cache_aware_partition requires the explicit cache-aware model");
  }
  if (model.block_words == 0) throw std::invalid_argument("block size must be positive");
  const std::size_t n = a.size();
  const std::size_t group = std::max<std::size_t>(1, model.block_words / kElementWords);
  const std::size_t m = (n + group - 1) / group;
  if (m < 2) {
    partition(a, p);
    return;
  }
  Memory& memory = a.memory();
  memory.recorder().mark_phase("block_partition");
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t begin = i * group;
    partition(a.subspan(begin, std::min(group, n - begin)), p);
  }
  consolidate_and_merge(a, p, group, &memory);
}

std::size_t agnostic_group_size(std::size_t n, double epsilon) {
  if (!(epsilon > 0)) throw std::invalid_argument("epsilon must be positive");
  if (n <= 1) return n;
  const double e = 1.0 + epsilon;
  auto k = static_cast<std::size_t>(std::ceil(std::pow(static_cast<double>(n), 1.0 / e)));
  // Integer correction: smallest k with k^(1+eps) >= n.
  while (k > 1 && std::pow(static_cast<double>(k - 1), e) >= static_cast<double>(n)) --k;
  while (std::pow(static_cast<double>(k), e) < static_cast<double>(n)) ++k;
  return k;
}

namespace {

bool predicate_less(const Predicate& p, const Element& x, const Element& y) {
  return !p(x) && p(y);
}

void agnostic_impl(const ElementSpan& a, const Predicate& p, double epsilon,
                   std::vector<std::size_t>* sizes, std::size_t depth) {
  const std::size_t n = a.size();
  if (sizes) {
    if (sizes->size() <= depth) sizes->resize(depth + 1, 0);
    (*sizes)[depth] = std::max((*sizes)[depth], n);
  }
  if (n <= 4) {
    oblivious_sort(a, [&](const Element& x, const Element& y) { return predicate_less(p, x, y); });
    return;
  }
  const std::size_t k = agnostic_group_size(n, epsilon);
  const std::size_t m = (n + k - 1) / k;
  if (m < 2) {
    partition(a, p);
    return;
  }
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t begin = i * k;
    agnostic_impl(a.subspan(begin, std::min(k, n - begin)), p, epsilon, sizes, depth + 1);
  }
  consolidate_and_merge(a, p, k, nullptr);
}

}  // namespace

void cache_agnostic_partition(const ElementSpan& a, const Predicate& p, double epsilon,
                              std::vector<std::size_t>* sizes) {
  if (!(epsilon > 0)) throw std::invalid_argument("epsilon must be positive");
  if (sizes) sizes->clear();
  agnostic_impl(a, p, epsilon, sizes, 0);
}

std::size_t predicted_in_cache_depth(std::size_t n, std::size_t memory_elements, double epsilon) {
  if (n <= memory_elements) return 0;
  const double ratio = std::log(static_cast<double>(n)) / std::log(static_cast<double>(memory_elements));
  return static_cast<std::size_t>(std::ceil(std::log(ratio) / std::log(1.0 + epsilon) - 1e-9));
}

std::size_t measured_in_cache_depth(const std::vector<std::size_t>& sizes,
                                    std::size_t memory_elements) {
  for (std::size_t d = 0; d < sizes.size(); ++d) {
    if (sizes[d] <= memory_elements) return d;
  }
  return sizes.size();
}

PqIoResult pq_io_experiment(std::size_t capacity, std::size_t n_ops, std::size_t memory_words,
                            std::size_t block_words, ExternalBackend backend, std::uint64_t seed) {
  if (block_words == 0 || memory_words < block_words) {
    throw std::invalid_argument("pq_io_experiment: need M >= B >= 1");
  }
  // Aligned allocations keep every buffer on a block boundary for all block
  // sizes up to the alignment.
  Memory memory(kCountOnly, 256);
  const Backend b = backend == ExternalBackend::CacheAware ? Backend::cache_aware(block_words)
                                                           : Backend::cache_agnostic();
  std::mt19937_64 rng(seed);
  std::vector<std::pair<Word, Word>> items(capacity / 2);
  for (std::size_t i = 0; i < items.size(); ++i) items[i] = {i, rng() % (4 * capacity)};
  auto queue = ObliviousPriorityQueue::build_from(memory, items, capacity, b);
  queue.set_phase_marks(true);

  BlockTrace trace(block_words);
  memory.recorder().add_observer(&trace);
  // The trace does not depend on the operation kinds; alternate inserts and
  // deletes so the queue stays half full.
  for (std::size_t t = 0; t < n_ops; ++t) {
    const AccessKind kind = (t % 2 == 0) ? AccessKind::InsertAndMin : AccessKind::DeleteMinAndMin;
    queue.access(kind, t, rng() % (4 * capacity));
  }
  memory.recorder().remove_observer(&trace);

  const MissCount misses =
      simulate_blocks(trace, memory_words / block_words, ReplacementPolicy::BeladyOffline);

  PqIoResult r;
  r.capacity = capacity;
  r.operations = n_ops;
  r.stats.algo = backend == ExternalBackend::CacheAware ? "pq-cache-aware" : "pq-cache-agnostic";
  r.stats.n = capacity;
  r.stats.memory_words = memory_words;
  r.stats.block_words = block_words;
  r.stats.policy = ReplacementPolicy::BeladyOffline;
  r.stats.transfers = misses.total;
  r.stats.phases = misses.phases;
  r.transfers_per_op = n_ops ? static_cast<double>(misses.total) / static_cast<double>(n_ops) : 0;

  std::size_t j = 0;
  while ((std::size_t{16} << j) <= memory_words) ++j;  // floor(log2(M/8))
  r.small_levels = j;
  for (const auto& [name, count] : misses.phases) {
    if (name == "op") {
      r.small_level_transfers += count;
    } else if (name.rfind("rebuild ", 0) == 0 && std::stoul(name.substr(8)) < j) {
      r.small_level_transfers += count;
    }
  }
  std::vector<std::uint32_t> distinct(trace.blocks());
  std::sort(distinct.begin(), distinct.end());
  r.distinct_blocks = static_cast<std::uint64_t>(
      std::unique(distinct.begin(), distinct.end()) - distinct.begin());
  return r;
}

}  // namespace opq
