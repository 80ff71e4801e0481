// Elements and element-granular views over traced memory.
#pragma once

#include <cstddef>
#include <functional>

#include "opq/traced_memory.hpp"

namespace opq {

inline constexpr std::size_t kElementWords = 4;

/// A priority-queue entry. `dummy` is 0 for real elements and a nonzero
/// serial number for padding, so that every stored element is distinct.
struct Element {
  Word key = 0;
  Word priority = 0;
  Word timestamp = 0;
  Word dummy = 0;

  bool is_dummy() const { return dummy != 0; }

  static Element real(Word key, Word priority, Word timestamp) {
    return {key, priority, timestamp, 0};
  }
  static Element padding(Word serial) { return {0, 0, 0, serial}; }
  /// Compares greater than every element with a smaller dummy serial.
  static Element infinity() { return {0, 0, 0, ~Word{0}}; }

  friend bool operator==(const Element&, const Element&) = default;
};

/// Total order: reals by (priority, timestamp), then dummies by serial.
inline bool element_less(const Element& a, const Element& b) {
  const bool da = a.dummy != 0;
  const bool db = b.dummy != 0;
  if (da != db) return db;
  if (da) return a.dummy < b.dummy;
  if (a.priority != b.priority) return a.priority < b.priority;
  return a.timestamp < b.timestamp;
}

inline Element select_element(bool flag, const Element& a, const Element& b) {
  return {select_word(flag, a.key, b.key), select_word(flag, a.priority, b.priority),
          select_word(flag, a.timestamp, b.timestamp), select_word(flag, a.dummy, b.dummy)};
}

/// A predicate evaluated in private registers.
using Predicate = std::function<bool(const Element&)>;

/// Predicate x >= pivot under the element order.
inline Predicate at_least(const Element& pivot) {
  return [pivot](const Element& x) { return !element_less(x, pivot); };
}

/// Contiguous run of elements, kElementWords words each.
class ElementSpan {
 public:
  ElementSpan() = default;
  explicit ElementSpan(TracedArray words) : words_(words) {
    if (words.size() % kElementWords != 0) {
      throw std::invalid_argument("ElementSpan: word count not a multiple of element size");
    }
  }

  static ElementSpan allocate(Memory& memory, std::size_t count) {
    return ElementSpan(memory.allocate(count * kElementWords));
  }

  std::size_t size() const { return words_.size() / kElementWords; }
  bool empty() const { return words_.empty(); }

  Element load(std::size_t i) const {
    const std::size_t w = i * kElementWords;
    return {words_.get(w), words_.get(w + 1), words_.get(w + 2), words_.get(w + 3)};
  }
  void store(std::size_t i, const Element& e) const {
    const std::size_t w = i * kElementWords;
    words_.set(w, e.key);
    words_.set(w + 1, e.priority);
    words_.set(w + 2, e.timestamp);
    words_.set(w + 3, e.dummy);
  }
  Element peek(std::size_t i) const {
    const std::size_t w = i * kElementWords;
    return {words_.peek(w), words_.peek(w + 1), words_.peek(w + 2), words_.peek(w + 3)};
  }

  /// Reads i then j, writes i then j, whatever the flag.
  void cond_swap(std::size_t i, std::size_t j, bool flag) const {
    const Element x = load(i);
    const Element y = load(j);
    store(i, select_element(flag, y, x));
    store(j, select_element(flag, x, y));
  }

  /// Sorts the pair ascending: the compare-exchange of a sorting network.
  template <typename Less>
  void compare_exchange(std::size_t i, std::size_t j, Less&& less) const {
    const Element x = load(i);
    const Element y = load(j);
    const bool swap = less(y, x);
    store(i, select_element(swap, y, x));
    store(j, select_element(swap, x, y));
  }

  ElementSpan subspan(std::size_t offset, std::size_t count) const {
    return ElementSpan(words_.subarray(offset * kElementWords, count * kElementWords));
  }

  const TracedArray& words() const { return words_; }
  Memory& memory() const { return words_.memory(); }

 private:
  TracedArray words_;
};

/// Copies src into dst element by element (src.size() == dst.size()).
void copy_elements(const ElementSpan& src, const ElementSpan& dst);

/// Writes the element in slot `secret_index` via a full read/write scan.
void linear_scan_write(const ElementSpan& a, std::size_t secret_index, const Element& value);

/// Reads slot `secret_index` via a full scan.
Element linear_scan_select(const ElementSpan& a, std::size_t secret_index);

}  // namespace opq
