// Plain, obviously-correct reference implementations used by the tests and
// the fuzz command. None of this code is oblivious.
#pragma once

#include <cstddef>
#include <optional>
#include <queue>
#include <string>
#include <vector>

#include "opq/element.hpp"
#include "opq/priority_queue.hpp"

namespace opq::reference {

struct HeapEntry {
  Word key;
  Word priority;
};

/// Binary min-heap ordered by (priority, insertion order): equal priorities
/// leave in FIFO order.
class StableHeap {
 public:
  void insert(Word key, Word priority);
  std::optional<HeapEntry> min() const;
  std::optional<HeapEntry> pop();
  std::size_t size() const { return heap_.size(); }
  bool empty() const { return heap_.empty(); }

  /// Remaining entries in pop order.
  std::vector<HeapEntry> sorted() const;

 private:
  struct Item {
    Word priority;
    std::uint64_t seq;
    Word key;
    bool operator>(const Item& o) const {
      return priority != o.priority ? priority > o.priority : seq > o.seq;
    }
  };
  std::priority_queue<Item, std::vector<Item>, std::greater<>> heap_;
  std::uint64_t seq_ = 0;
};

/// Next-occurrence annotations by direct forward search (times 1-based,
/// sentinel n + 1).
std::vector<Word> next_access_naive(const std::vector<std::size_t>& indices);

/// Plain array with a default value for untouched cells.
class ShadowArray {
 public:
  ShadowArray(std::size_t size, Word default_value) : cells_(size, default_value) {}
  Word read(std::size_t i) const { return cells_.at(i); }
  void write(std::size_t i, Word v) { cells_.at(i) = v; }

 private:
  std::vector<Word> cells_;
};

/// True iff no P=1 element precedes a P=0 element.
bool is_partitioned(const std::vector<Element>& a, const Predicate& p);

/// Multiset equality over all four element words.
bool same_multiset(std::vector<Element> a, std::vector<Element> b);

/// Peeks (without probing) every slot of a traced span.
std::vector<Element> snapshot(const ElementSpan& a);

/// Checks the level invariants of a queue between operations: the real
/// elements equal `expected` as (key, priority) multiset, U_0 holds a dummy,
/// and every real element stored in level i >= 1 has rank >= delta_i among
/// all stored elements. Returns a description of the first violation.
std::optional<std::string> check_level_invariants(const ObliviousPriorityQueue& q,
                                                  std::vector<HeapEntry> expected);

/// Largest real timestamp currently stored, or nullopt if the queue is empty.
std::optional<Word> max_timestamp(const ObliviousPriorityQueue& q);

}  // namespace opq::reference
