#include "opq/reference/oracles.hpp"

#include <algorithm>
#include <tuple>

namespace opq::reference {

void StableHeap::insert(Word key, Word priority) { heap_.push({priority, seq_++, key}); }

std::optional<HeapEntry> StableHeap::min() const {
  if (heap_.empty()) return std::nullopt;
  return HeapEntry{heap_.top().key, heap_.top().priority};
}

std::optional<HeapEntry> StableHeap::pop() {
  auto top = min();
  if (top) heap_.pop();
  return top;
}

std::vector<HeapEntry> StableHeap::sorted() const {
  auto copy = heap_;
  std::vector<HeapEntry> out;
  while (!copy.empty()) {
    out.push_back({copy.top().key, copy.top().priority});
    copy.pop();
  }
  return out;
}

std::vector<Word> next_access_naive(const std::vector<std::size_t>& indices) {
  const std::size_t n = indices.size();
  std::vector<Word> tau(n, n + 1);
  for (std::size_t t = 0; t < n; ++t) {
    for (std::size_t u = t + 1; u < n; ++u) {
      if (indices[u] == indices[t]) {
        tau[t] = u + 1;
        break;
      }
    }
  }
  return tau;
}

bool is_partitioned(const std::vector<Element>& a, const Predicate& p) {
  bool seen_one = false;
  for (const auto& x : a) {
    const bool bit = p(x);
    if (seen_one && !bit) return false;
    seen_one = seen_one || bit;
  }
  return true;
}

bool same_multiset(std::vector<Element> a, std::vector<Element> b) {
  const auto key = [](const Element& e) {
    return std::make_tuple(e.key, e.priority, e.timestamp, e.dummy);
  };
  const auto less = [&](const Element& x, const Element& y) { return key(x) < key(y); };
  std::sort(a.begin(), a.end(), less);
  std::sort(b.begin(), b.end(), less);
  return a == b;
}

std::vector<Element> snapshot(const ElementSpan& a) {
  std::vector<Element> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a.peek(i);
  return out;
}

std::optional<std::string> check_level_invariants(const ObliviousPriorityQueue& q,
                                                  std::vector<HeapEntry> expected) {
  struct Stored {
    Element e;
    std::size_t level;
  };
  std::vector<Stored> reals;
  std::vector<Element> everything;
  for (std::size_t i = 0; i < q.levels(); ++i) {
    for (const ElementSpan& span : {q.down(i), q.up(i)}) {
      for (const Element& e : snapshot(span)) {
        everything.push_back(e);
        if (!e.is_dummy()) reals.push_back({e, i});
      }
    }
  }

  const Element u0 = q.up(0).peek(0);
  if (!u0.is_dummy()) return "U_0 holds a real element between operations";

  std::vector<HeapEntry> actual;
  for (const auto& s : reals) actual.push_back({s.e.key, s.e.priority});
  const auto entry_less = [](const HeapEntry& a, const HeapEntry& b) {
    return std::tie(a.priority, a.key) < std::tie(b.priority, b.key);
  };
  std::sort(actual.begin(), actual.end(), entry_less);
  std::sort(expected.begin(), expected.end(), entry_less);
  const auto entry_eq = [](const HeapEntry& a, const HeapEntry& b) {
    return a.key == b.key && a.priority == b.priority;
  };
  if (!std::equal(actual.begin(), actual.end(), expected.begin(), expected.end(), entry_eq)) {
    return "stored elements differ from the reference multiset (" +
           std::to_string(actual.size()) + " stored, " + std::to_string(expected.size()) +
           " expected)";
  }

  std::sort(everything.begin(), everything.end(), element_less);
  if (std::adjacent_find(everything.begin(), everything.end()) != everything.end()) {
    return "two stored elements compare equal";
  }
  for (const auto& s : reals) {
    if (s.level == 0) continue;
    const auto rank = static_cast<std::size_t>(
        std::lower_bound(everything.begin(), everything.end(), s.e, element_less) -
        everything.begin());
    if (rank < q.delta(s.level)) {
      return "element of rank " + std::to_string(rank) + " stored in level " +
             std::to_string(s.level) + " with delta " + std::to_string(q.delta(s.level));
    }
  }
  return std::nullopt;
}

std::optional<Word> max_timestamp(const ObliviousPriorityQueue& q) {
  std::optional<Word> best;
  for (std::size_t i = 0; i < q.levels(); ++i) {
    for (const ElementSpan& span : {q.down(i), q.up(i)}) {
      for (const Element& e : snapshot(span)) {
        if (!e.is_dummy()) best = std::max(best.value_or(0), e.timestamp);
      }
    }
  }
  return best;
}

}  // namespace opq::reference
