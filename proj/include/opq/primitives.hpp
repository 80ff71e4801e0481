// Deterministic oblivious building blocks over traced element arrays.
//
// Every routine here has a probe sequence that is a function of the input
// length only (and of the fixed unit width for the unit-level variants).
#pragma once

#include <algorithm>
#include <cstddef>

#include "opq/element.hpp"

namespace opq {

/// Visits the comparators (i < j) of Batcher's odd-even merge sort on n
/// items. Comparators that would touch an index >= n are dropped, which is
/// what padding with +inf would do.
template <typename Visit>
void for_each_comparator(std::size_t n, Visit&& visit) {
  for (std::size_t p = 1; p < n; p <<= 1) {
    for (std::size_t k = p; k >= 1; k >>= 1) {
      for (std::size_t j = k % p; j + k < n; j += 2 * k) {
        const std::size_t limit = std::min(k, n - j - k);
        for (std::size_t i = 0; i < limit; ++i) {
          if ((i + j) / (2 * p) == (i + j + k) / (2 * p)) visit(i + j, i + j + k);
        }
      }
    }
  }
}

template <typename Less>
void oblivious_sort(const ElementSpan& a, Less&& less) {
  for_each_comparator(a.size(),
                      [&](std::size_t i, std::size_t j) { a.compare_exchange(i, j, less); });
}

inline void oblivious_sort(const ElementSpan& a) { oblivious_sort(a, element_less); }

/// Number of compare-exchanges the odd-even merge sort performs on n items.
std::size_t sort_network_size(std::size_t n);

/// Stable-for-zeros partition: all P(x)=0 before all P(x)=1. Compaction
/// network, O(n log n) probes.
void partition(const ElementSpan& a, const Predicate& p);

/// Partition by oblivious sort keyed on (P(x), original position). Stable,
/// O(n log^2 n) probes.
void partition_by_sort(const ElementSpan& a, const Predicate& p);

/// Partitions `count` units of `unit_words` contiguous words each. The unit
/// predicate is P applied to the unit's first element. Units move whole.
void partition_units(const TracedArray& words, std::size_t unit_words,
                     std::size_t count, const Predicate& p);

/// Partitions an array whose P=1 elements (or whose P=0 elements) are
/// consecutive. Other inputs keep their multiset but may stay unpartitioned.
void part_bitonic(const ElementSpan& a, const Predicate& p);

/// Given equal-length partitioned a and b: afterwards a is pure and b is
/// partitioned. Ties in the majority vote choose 0.
void purify_half(const ElementSpan& a, const ElementSpan& b, const Predicate& p);

void reverse(const ElementSpan& a);

/// Reverses iff flag, with an identical probe pattern either way.
void cond_invert(const ElementSpan& a, bool flag);

/// Deliberately non-oblivious partition (two-pointer scan); used only as a
/// negative control for trace checkers.
void naive_partition(const ElementSpan& a, const Predicate& p);

/// Non-oblivious insertion sort through traced memory; negative control.
void naive_sort(const ElementSpan& a);

}  // namespace opq
