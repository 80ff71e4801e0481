#include "opq/selection.hpp"

#include <stdexcept>

#include "opq/external_io.hpp"
#include "opq/primitives.hpp"

namespace opq {

void Backend::partition(const ElementSpan& a, const Predicate& p) const {
  switch (algorithm) {
    case PartitionAlgorithm::CompactionNetwork:
      opq::partition(a, p);
      return;
    case PartitionAlgorithm::SortNetwork:
      partition_by_sort(a, p);
      return;
    case PartitionAlgorithm::CacheAware:
      cache_aware_partition(a, p, IoModel{block_words * 4, block_words,
                                          ReplacementPolicy::ExplicitCacheAware});
      return;
    case PartitionAlgorithm::CacheAgnostic:
      cache_agnostic_partition(a, p, epsilon);
      return;
    case PartitionAlgorithm::Naive:
      naive_partition(a, p);
      return;
  }
}

void Backend::sort(const ElementSpan& a) const {
  if (algorithm == PartitionAlgorithm::Naive) {
    naive_sort(a);
  } else {
    oblivious_sort(a);
  }
}

std::string Backend::name() const {
  switch (algorithm) {
    case PartitionAlgorithm::CompactionNetwork: return "compaction";
    case PartitionAlgorithm::SortNetwork: return "sort";
    case PartitionAlgorithm::CacheAware: return "cache-aware";
    case PartitionAlgorithm::CacheAgnostic: return "cache-agnostic";
    case PartitionAlgorithm::Naive: return "naive";
  }
  return "?";
}

namespace {

constexpr std::size_t kGroupSize = 5;

Element k_element_impl(const ElementSpan& a, std::size_t k, const Backend& backend) {
  const std::size_t n = a.size();
  if (n < 7) {
    backend.sort(a);
    return linear_scan_select(a, k);
  }

  const std::size_t groups = (n + kGroupSize - 1) / kGroupSize;
  Element pivot;
  {
    Memory::Scope scope(a.memory());
    const ElementSpan medians = ElementSpan::allocate(a.memory(), groups);
    for (std::size_t g = 0; g < groups; ++g) {
      const std::size_t begin = g * kGroupSize;
      const ElementSpan group = a.subspan(begin, std::min(kGroupSize, n - begin));
      backend.sort(group);
      medians.store(g, group.load(group.size() / 2));
    }
    pivot = k_element_impl(medians, groups / 2, backend);
  }

  backend.partition(a, at_least(pivot));
  std::size_t below = 0;
  for (std::size_t i = 0; i < n; ++i) below += element_less(a.load(i), pivot);

  const bool upper = k >= below;
  cond_invert(a, upper);
  k = select_word(upper, k - kelement_rank_shift(n), k);

  const std::size_t next = kelement_recursion_size(n);
  if (!(groups <= next && next < n)) {
    throw std::logic_error("k_element: recursion size out of bounds");
  }
  return k_element_impl(a.subspan(0, next), k, backend);
}

}  // namespace

Element k_element(const ElementSpan& a, std::size_t k, const Backend& backend) {
  if (k >= a.size()) throw std::out_of_range("k_element: rank out of range");
  return k_element_impl(a, k, backend);
}

void k_select(const ElementSpan& a, std::size_t k, const Backend& backend) {
  const std::size_t n = a.size();
  if (k > n) throw std::out_of_range("k_select: k out of range");
  if (n == 0) return;
  const bool all = k == n;
  const Element kth = k_element(a, select_word(all, n - 1, k), backend);
  backend.partition(a, at_least(select_element(all, Element::infinity(), kth)));
}

}  // namespace opq
