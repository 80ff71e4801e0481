// Level-structured oblivious priority queue.
//
// Level i owns a down-buffer D_i of 2^max(1,i) elements and an up-buffer U_i
// of 2^max(0,i-1) elements. Level i is rebuilt every 2^i operations; the
// counters driving that schedule depend on the operation count only and are
// kept outside traced memory.
#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "opq/element.hpp"
#include "opq/selection.hpp"

namespace opq {

enum class AccessKind { Min, InsertAndMin, DeleteMinAndMin };

/// Sorts by arrival (reals by timestamp, then dummies by serial) and rewrites
/// real timestamps to 0..r-1 and dummy serials to 1..d. Returns r.
std::size_t compress_timestamps(const ElementSpan& all);

class ObliviousPriorityQueue {
 public:
  /// Capacity must be at least 2. All buffers start dummy-filled.
  ObliviousPriorityQueue(Memory& memory, std::size_t capacity, Backend backend = {});

  /// Loads up to `capacity` (key, priority) pairs and runs the last-level
  /// rebuild once. Timestamps follow input order.
  static ObliviousPriorityQueue build_from(Memory& memory,
                                           const std::vector<std::pair<Word, Word>>& items,
                                           std::size_t capacity, Backend backend = {});

  ObliviousPriorityQueue(ObliviousPriorityQueue&&) = default;

  /// Throws std::length_error when the queue already holds `capacity` items.
  void insert(Word key, Word priority);

  /// Plain-mode minimum: reads D_0 and U_0, no rebuild. Dummy if empty.
  Element min();

  /// Removes the minimum (dummy schedule if empty) and returns it.
  Element delete_min();

  /// Removes the minimum iff `remove`; the probe trace ignores the flag.
  /// Returns the minimum as it was before the call.
  Element delete_min_if(bool remove);

  /// Operation-hiding access. Min and InsertAndMin return the minimum after
  /// the operation; DeleteMinAndMin returns the removed element.
  Element access(AccessKind kind, Word key = 0, Word priority = 0);

  std::size_t capacity() const { return capacity_; }
  std::size_t levels() const { return levels_; }
  std::size_t size() const { return size_; }
  bool empty() const { return size_ == 0; }
  std::uint64_t operations() const { return operations_; }
  Word next_timestamp() const { return next_timestamp_; }
  std::size_t delta(std::size_t level) const { return delta_.at(level); }
  const Backend& backend() const { return backend_; }

  ElementSpan down(std::size_t level) const;
  ElementSpan up(std::size_t level) const;
  /// Total element slots over all D_i and U_i.
  std::size_t buffer_slots() const { return down_.size() + up_.size(); }

  /// Called after each rebuild with the rebuilt level.
  void set_rebuild_hook(std::function<void(std::size_t)> hook) { rebuild_hook_ = std::move(hook); }
  /// Emits "op" and "rebuild <m>" phase marks on the memory's recorder.
  void set_phase_marks(bool on) { phase_marks_ = on; }

  /// Level rebuilt after operation number t (1-based).
  static std::size_t rebuild_level(std::uint64_t t, std::size_t levels);

 private:
  Element read_min_candidates(Element& d0, Element& d1, Element& u0);
  void finish_operation();
  void rebuild(std::size_t m);
  Element fresh_dummy() { return Element::padding(next_dummy_++); }

  Memory* memory_;
  std::size_t capacity_;
  std::size_t levels_;
  Backend backend_;
  ElementSpan down_;  // D_0 at 0, D_i at 2^i
  ElementSpan up_;    // U_0 at 0, U_i at 2^(i-1)
  std::vector<std::size_t> delta_;
  std::size_t size_ = 0;
  std::uint64_t operations_ = 0;
  Word next_timestamp_ = 0;
  Word next_dummy_ = 1;
  std::function<void(std::size_t)> rebuild_hook_;
  bool phase_marks_ = false;
};

}  // namespace opq
