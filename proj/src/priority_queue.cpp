#include "opq/priority_queue.hpp"

#include <stdexcept>
#include <string>

#include "opq/primitives.hpp"

namespace opq {

namespace {

std::size_t level_count(std::size_t capacity) {
  std::size_t l = 0;
  while ((std::size_t{1} << l) < capacity) ++l;
  return std::max<std::size_t>(l, 1);
}

// Order used by timestamp compression: reals by timestamp, then dummies by
// serial.
bool arrival_less(const Element& a, const Element& b) {
  const bool da = a.is_dummy();
  const bool db = b.is_dummy();
  if (da != db) return db;
  if (da) return a.dummy < b.dummy;
  return a.timestamp < b.timestamp;
}

}  // namespace

ObliviousPriorityQueue::ObliviousPriorityQueue(Memory& memory, std::size_t capacity,
                                               Backend backend)
    : memory_(&memory), capacity_(capacity), backend_(backend) {
  if (capacity < 2) throw std::invalid_argument("priority queue capacity must be at least 2");
  levels_ = level_count(capacity);
  down_ = ElementSpan::allocate(memory, std::size_t{2} << (levels_ - 1));
  up_ = ElementSpan::allocate(memory, std::size_t{1} << (levels_ - 1));
  for (std::size_t i = 0; i < down_.size(); ++i) down_.store(i, fresh_dummy());
  for (std::size_t i = 0; i < up_.size(); ++i) up_.store(i, fresh_dummy());
  delta_.resize(levels_);
  for (std::size_t i = 0; i < levels_; ++i) delta_[i] = std::size_t{1} << i;
}

ObliviousPriorityQueue ObliviousPriorityQueue::build_from(
    Memory& memory, const std::vector<std::pair<Word, Word>>& items, std::size_t capacity,
    Backend backend) {
  if (items.size() > capacity) throw std::length_error("build_from: more items than capacity");
  ObliviousPriorityQueue q(memory, capacity, backend);
  // Items fill D then U in order; slots beyond the input keep their dummies.
  const std::size_t total = q.buffer_slots();
  for (std::size_t s = 0; s < total; ++s) {
    const bool real = s < items.size();
    const Element fill = real ? Element::real(items[s].first, items[s].second, s)
                              : Element::padding(s + 1);
    if (s < q.down_.size()) {
      q.down_.store(s, fill);
    } else {
      q.up_.store(s - q.down_.size(), fill);
    }
  }
  q.size_ = items.size();
  q.next_timestamp_ = items.size();
  q.next_dummy_ = total + 1;
  q.rebuild(q.levels_ - 1);
  return q;
}

ElementSpan ObliviousPriorityQueue::down(std::size_t level) const {
  if (level >= levels_) throw std::out_of_range("down: level");
  return level == 0 ? down_.subspan(0, 2) : down_.subspan(std::size_t{1} << level,
                                                          std::size_t{1} << level);
}

ElementSpan ObliviousPriorityQueue::up(std::size_t level) const {
  if (level >= levels_) throw std::out_of_range("up: level");
  return level == 0 ? up_.subspan(0, 1)
                    : up_.subspan(std::size_t{1} << (level - 1), std::size_t{1} << (level - 1));
}

std::size_t ObliviousPriorityQueue::rebuild_level(std::uint64_t t, std::size_t levels) {
  std::size_t m = 0;
  while (m + 1 < levels && (t >> (m + 1)) << (m + 1) == t) ++m;
  return m;
}

Element ObliviousPriorityQueue::read_min_candidates(Element& d0, Element& d1, Element& u0) {
  d0 = down_.load(0);
  d1 = down_.load(1);
  u0 = up_.load(0);
  return select_element(element_less(d1, d0), d1, d0);
}

void ObliviousPriorityQueue::insert(Word key, Word priority) {
  if (size_ >= capacity_) throw std::length_error("priority queue is full");
  if (phase_marks_) memory_->recorder().mark_phase("op");
  up_.store(0, Element::real(key, priority, next_timestamp_++));
  ++size_;
  finish_operation();
}

Element ObliviousPriorityQueue::min() {
  Element d0, d1, u0;
  return read_min_candidates(d0, d1, u0);
}

Element ObliviousPriorityQueue::delete_min() { return delete_min_if(true); }

Element ObliviousPriorityQueue::delete_min_if(bool remove) {
  if (phase_marks_) memory_->recorder().mark_phase("op");
  Element d0, d1, u0;
  const Element current = read_min_candidates(d0, d1, u0);
  const std::size_t at = element_less(d1, d0);
  const bool removing = remove && !current.is_dummy();
  const Element dummy = fresh_dummy();
  for (std::size_t i = 0; i < 2; ++i) {
    down_.store(i, select_element(removing && i == at, dummy, down_.load(i)));
  }
  size_ -= removing;
  finish_operation();
  return current;
}

Element ObliviousPriorityQueue::access(AccessKind kind, Word key, Word priority) {
  const bool inserting = kind == AccessKind::InsertAndMin;
  const bool deleting = kind == AccessKind::DeleteMinAndMin;
  if (inserting && size_ >= capacity_) throw std::length_error("priority queue is full");
  if (phase_marks_) memory_->recorder().mark_phase("op");

  Element d0, d1, u0;
  const Element current = read_min_candidates(d0, d1, u0);
  const std::size_t at = element_less(d1, d0);
  const Element incoming = Element::real(key, priority, next_timestamp_++);
  const bool removing = deleting && !current.is_dummy();

  const Element dummy = fresh_dummy();
  for (std::size_t i = 0; i < 2; ++i) {
    down_.store(i, select_element(removing && i == at, dummy, down_.load(i)));
  }
  up_.store(0, select_element(inserting, incoming, u0));

  size_ += inserting;
  size_ -= removing;
  const bool incoming_wins = inserting && element_less(incoming, current);
  const Element result = select_element(incoming_wins, incoming, current);
  finish_operation();
  return result;
}

void ObliviousPriorityQueue::finish_operation() {
  ++operations_;
  std::size_t m = 0;
  bool due = false;
  for (std::size_t i = 0; i < levels_; ++i) {
    --delta_[i];
    if (delta_[i] == 0) {
      m = i;
      due = true;
    }
  }
  if (!due) throw std::logic_error("rebuild schedule: no level due");
  rebuild(m);
}

void ObliviousPriorityQueue::rebuild(std::size_t m) {
  if (phase_marks_) memory_->recorder().mark_phase("rebuild " + std::to_string(m));
  const std::size_t d_prefix = std::size_t{2} << m;  // D_0..D_m
  const std::size_t u_prefix = std::size_t{1} << m;  // U_0..U_m
  {
    Memory::Scope scope(*memory_);
    const ElementSpan scratch = ElementSpan::allocate(*memory_, d_prefix + u_prefix);
    copy_elements(down_.subspan(0, d_prefix), scratch.subspan(0, d_prefix));
    copy_elements(up_.subspan(0, u_prefix), scratch.subspan(d_prefix, u_prefix));
    if (m == levels_ - 1) {
      compress_timestamps(scratch);
      next_timestamp_ = capacity_;
      next_dummy_ = scratch.size() + 1;
    }
    k_select(scratch, d_prefix, backend_);
    copy_elements(scratch.subspan(0, d_prefix), down_.subspan(0, d_prefix));
    copy_elements(scratch.subspan(d_prefix, u_prefix), up_.subspan(0, u_prefix));
  }

  if (m + 1 < levels_) {
    const ElementSpan target = up(m + 1);
    for (std::size_t i = 0; i < target.size(); ++i) {
      if (!target.peek(i).is_dummy()) {
        throw std::logic_error("rebuild: up-buffer U_" + std::to_string(m + 1) + " not empty");
      }
    }
    copy_elements(up_.subspan(0, u_prefix), target);
    for (std::size_t i = 0; i < u_prefix; ++i) up_.store(i, fresh_dummy());
  }

  for (std::size_t i = m; i-- > 0;) {
    k_select(down_.subspan(0, std::size_t{4} << i), std::size_t{2} << i, backend_);
  }
  for (std::size_t i = 0; i <= m; ++i) delta_[i] = std::size_t{1} << i;
  if (rebuild_hook_) rebuild_hook_(m);
}

std::size_t compress_timestamps(const ElementSpan& all) {
  oblivious_sort(all, arrival_less);
  Word real_rank = 0;
  Word dummy_rank = 1;
  for (std::size_t i = 0; i < all.size(); ++i) {
    const Element e = all.load(i);
    const bool dummy = e.is_dummy();
    Element out = e;
    out.timestamp = select_word(dummy, e.timestamp, real_rank);
    out.dummy = select_word(dummy, dummy_rank, 0);
    real_rank += !dummy;
    dummy_rank += dummy;
    all.store(i, out);
  }
  return real_rank;
}

}  // namespace opq
