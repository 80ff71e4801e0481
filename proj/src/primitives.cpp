#include "opq/primitives.hpp"

#include <stdexcept>

namespace opq {

void copy_elements(const ElementSpan& src, const ElementSpan& dst) {
  if (src.size() != dst.size()) throw std::invalid_argument("copy_elements: size mismatch");
  for (std::size_t i = 0; i < src.size(); ++i) dst.store(i, src.load(i));
}

void linear_scan_write(const ElementSpan& a, std::size_t secret_index, const Element& value) {
  if (secret_index >= a.size()) throw std::out_of_range("linear_scan_write index");
  for (std::size_t i = 0; i < a.size(); ++i) {
    a.store(i, select_element(i == secret_index, value, a.load(i)));
  }
}

Element linear_scan_select(const ElementSpan& a, std::size_t secret_index) {
  if (secret_index >= a.size()) throw std::out_of_range("linear_scan_select index");
  Element result;
  for (std::size_t i = 0; i < a.size(); ++i) {
    result = select_element(i == secret_index, a.load(i), result);
  }
  return result;
}

std::size_t sort_network_size(std::size_t n) {
  std::size_t count = 0;
  for_each_comparator(n, [&](std::size_t, std::size_t) { ++count; });
  return count;
}

namespace {

// Swaps two units word by word: Read(a_w), Read(b_w), Write(a_w), Write(b_w).
void cond_swap_units(const TracedArray& words, std::size_t unit_words, std::size_t i,
                     std::size_t j, bool flag) {
  const std::size_t a = i * unit_words;
  const std::size_t b = j * unit_words;
  for (std::size_t w = 0; w < unit_words; ++w) cond_swap(words, a + w, b + w, flag);
}

// Order-preserving compaction of the 0-units. tags[i] holds the unit's
// predicate bit on entry. Each 0-unit travels left by its distance
// d = i - rank, one power of two per layer, lowest bit first; processing
// positions in increasing order guarantees the target slot holds a 1-unit.
void compaction_network(const TracedArray& words, std::size_t unit_words, std::size_t count,
                        const TracedArray& tags) {
  std::size_t zeros = 0;
  for (std::size_t i = 0; i < count; ++i) {
    const bool bit = tags.get(i) != 0;
    tags.set(i, select_word(bit, 0, i - zeros));
    zeros += !bit;
  }
  for (std::size_t shift = 1; shift < count; shift <<= 1) {
    for (std::size_t i = shift; i < count; ++i) {
      const Word lo = tags.get(i - shift);
      const Word hi = tags.get(i);
      const bool move = (hi & shift) != 0;
      tags.set(i - shift, select_word(move, hi, lo));
      tags.set(i, select_word(move, lo, hi));
      if (unit_words == kElementWords) {
        ElementSpan(words).cond_swap(i - shift, i, move);
      } else {
        cond_swap_units(words, unit_words, i - shift, i, move);
      }
    }
  }
}

}  // namespace

void partition_units(const TracedArray& words, std::size_t unit_words, std::size_t count,
                     const Predicate& p) {
  if (unit_words % kElementWords != 0 || unit_words == 0) {
    throw std::invalid_argument("partition_units: unit must hold whole elements");
  }
  if (count * unit_words > words.size()) throw std::out_of_range("partition_units: range");
  if (count < 2) return;
  const TracedArray region = words.subarray(0, count * unit_words);
  Memory::Scope scope(words.memory());
  const TracedArray tags = words.memory().allocate(count);
  const ElementSpan elements(region);
  const std::size_t stride = unit_words / kElementWords;
  for (std::size_t i = 0; i < count; ++i) tags.set(i, p(elements.load(i * stride)));
  compaction_network(region, unit_words, count, tags);
}

void partition(const ElementSpan& a, const Predicate& p) {
  partition_units(a.words(), kElementWords, a.size(), p);
}

void partition_by_sort(const ElementSpan& a, const Predicate& p) {
  const std::size_t n = a.size();
  if (n < 2) return;
  Memory::Scope scope(a.memory());
  const TracedArray keys = a.memory().allocate(n);
  constexpr Word kHigh = Word{1} << (kWordBits - 1);
  for (std::size_t i = 0; i < n; ++i) keys.set(i, select_word(p(a.load(i)), kHigh | i, i));
  for_each_comparator(n, [&](std::size_t i, std::size_t j) {
    const Word ki = keys.get(i);
    const Word kj = keys.get(j);
    const bool swap = kj < ki;
    keys.set(i, select_word(swap, kj, ki));
    keys.set(j, select_word(swap, ki, kj));
    a.cond_swap(i, j, swap);
  });
}

namespace {

// Batcher's bitonic merger generalized to arbitrary n (split at the largest
// power of two below n). Sorts every 0/1 key sequence of the form 1^a 0^b 1^c.
template <typename Key>
void bitonic_merge(const ElementSpan& a, std::size_t lo, std::size_t n, const Key& key) {
  if (n <= 1) return;
  std::size_t m = 1;
  while (m * 2 < n) m *= 2;
  for (std::size_t i = lo; i < lo + n - m; ++i) {
    a.compare_exchange(i, i + m,
                       [&](const Element& x, const Element& y) { return key(x) < key(y); });
  }
  bitonic_merge(a, lo, m, key);
  bitonic_merge(a, lo + m, n - m, key);
}

}  // namespace

void part_bitonic(const ElementSpan& a, const Predicate& p) {
  const std::size_t n = a.size();
  if (n < 2) return;
  // A 0^a 1^b 0^c input starts with 0; complementing the key turns it into
  // the 1^a 0^b 1^c shape the merger handles, and the final inversion undoes
  // the resulting descending order.
  const bool first = p(a.load(0));
  const auto key = [&](const Element& x) { return p(x) != !first; };
  bitonic_merge(a, 0, n, key);
  cond_invert(a, !first);
}

void purify_half(const ElementSpan& a, const ElementSpan& b, const Predicate& p) {
  const std::size_t n = a.size();
  if (b.size() != n) throw std::invalid_argument("purify_half: blocks differ in size");
  std::size_t ones = 0;
  for (std::size_t i = 0; i < n; ++i) ones += p(a.load(i));
  for (std::size_t i = 0; i < n; ++i) ones += p(b.load(i));
  const bool majority_one = ones > n;

  for (std::size_t i = 0; i < n; ++i) {
    const Element x = a.load(i);
    const Element y = b.load(n - 1 - i);
    const bool swap = p(x) && !p(y);
    a.store(i, select_element(swap, y, x));
    b.store(n - 1 - i, select_element(swap, x, y));
  }
  for (std::size_t i = 0; i < n; ++i) {
    const Element x = a.load(i);
    const Element y = b.load(i);
    a.store(i, select_element(majority_one, y, x));
    b.store(i, select_element(majority_one, x, y));
  }
  part_bitonic(b, p);
}

void reverse(const ElementSpan& a) { cond_invert(a, true); }

void cond_invert(const ElementSpan& a, bool flag) {
  const std::size_t n = a.size();
  for (std::size_t i = 0; i < n / 2; ++i) a.cond_swap(i, n - 1 - i, flag);
}

void naive_partition(const ElementSpan& a, const Predicate& p) {
  std::size_t write = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const Element x = a.load(i);
    if (!p(x)) {
      if (i != write) {
        const Element y = a.load(write);
        a.store(write, x);
        a.store(i, y);
      }
      ++write;
    }
  }
}

void naive_sort(const ElementSpan& a) {
  for (std::size_t i = 1; i < a.size(); ++i) {
    const Element x = a.load(i);
    std::size_t j = i;
    while (j > 0) {
      const Element y = a.load(j - 1);
      if (!element_less(x, y)) break;
      a.store(j, y);
      --j;
    }
    a.store(j, x);
  }
}

}  // namespace opq
