// Oblivious k-selection: median-of-medians rank selection over an oblivious
// partition, with a probe trace that depends on the input length only.
#pragma once

#include <cstddef>
#include <string>

#include "opq/element.hpp"

namespace opq {

enum class PartitionAlgorithm {
  CompactionNetwork,  // default internal partition, O(n log n)
  SortNetwork,        // partition via odd-even merge sort, O(n log^2 n)
  CacheAware,         // blocked partition for a known block size
  CacheAgnostic,      // recursive partition, no cache parameters
  Naive,              // non-oblivious negative control
};

/// Which partition (and sort) the selection and priority-queue code runs on.
struct Backend {
  PartitionAlgorithm algorithm = PartitionAlgorithm::CompactionNetwork;
  std::size_t block_words = 64;
  double epsilon = 1.0;

  static Backend cache_aware(std::size_t block_words) {
    return {PartitionAlgorithm::CacheAware, block_words, 1.0};
  }
  static Backend cache_agnostic(double epsilon = 1.0) {
    return {PartitionAlgorithm::CacheAgnostic, 64, epsilon};
  }
  static Backend naive() { return {PartitionAlgorithm::Naive, 64, 1.0}; }

  void partition(const ElementSpan& a, const Predicate& p) const;
  void sort(const ElementSpan& a) const;
  std::string name() const;
};

/// Returns the element of rank k (0 = minimum). Elements must be pairwise
/// distinct; `a` is permuted.
Element k_element(const ElementSpan& a, std::size_t k, const Backend& backend = {});

/// Moves the k smallest elements to positions [0, k).
void k_select(const ElementSpan& a, std::size_t k, const Backend& backend = {});

/// Size of the prefix k_element recurses on for an input of n >= 7.
constexpr std::size_t kelement_recursion_size(std::size_t n) { return (7 * n + 20) / 10; }

/// Number of elements k_element drops when the rank lies above the pivot.
constexpr std::size_t kelement_rank_shift(std::size_t n) { return (3 * n - 20 + 9) / 10; }

}  // namespace opq
