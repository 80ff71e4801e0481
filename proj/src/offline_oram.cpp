#include "opq/offline_oram.hpp"

#include <stdexcept>
#include <string>

#include "opq/primitives.hpp"

namespace opq {

namespace {

// Preprocessing records reuse the four element words:
//   key = tau (output), priority = index, timestamp = time, dummy = flags.
constexpr Word kAux = 1;    // record stands for a later block
constexpr Word kFirst = 2;  // first record of its index group

Element make_record(Word index, Word time, Word flags = 0) { return {0, index, time, flags}; }

bool by_index_time(const Element& a, const Element& b) {
  if (a.priority != b.priority) return a.priority < b.priority;
  return a.timestamp < b.timestamp;
}

bool by_aux_time(const Element& a, const Element& b) {
  const Word aa = a.dummy & kAux;
  const Word ab = b.dummy & kAux;
  if (aa != ab) return aa < ab;
  return a.timestamp < b.timestamp;
}

bool by_first_index(const Element& a, const Element& b) {
  const Word fa = a.dummy & kFirst;
  const Word fb = b.dummy & kFirst;
  if (fa != fb) return fa > fb;
  return a.priority < b.priority;
}

void check_indices(const std::vector<std::size_t>& indices, std::size_t universe) {
  if (universe == 0) throw std::invalid_argument("ORAM universe must be positive");
  for (std::size_t t = 0; t < indices.size(); ++t) {
    if (indices[t] >= universe) {
      throw std::out_of_range("access " + std::to_string(t + 1) + ": index " +
                              std::to_string(indices[t]) + " >= N");
    }
  }
}

// Sets key = timestamp of the next record with the same index, else sentinel.
void annotate_reverse(const ElementSpan& records, Word sentinel) {
  Element next = make_record(~Word{0}, sentinel);
  for (std::size_t j = records.size(); j-- > 0;) {
    Element r = records.load(j);
    r.key = select_word(next.priority == r.priority, next.timestamp, sentinel);
    records.store(j, r);
    next = r;
  }
}

}  // namespace

std::vector<Word> preprocess(Memory& memory, const std::vector<std::size_t>& indices,
                             std::size_t universe) {
  check_indices(indices, universe);
  const std::size_t n = indices.size();
  const Word sentinel = n + 1;
  Memory::Scope scope(memory);
  const ElementSpan records = ElementSpan::allocate(memory, n);
  for (std::size_t t = 0; t < n; ++t) records.store(t, make_record(indices[t], t + 1));
  oblivious_sort(records, by_index_time);
  annotate_reverse(records, sentinel);
  oblivious_sort(records, by_aux_time);
  std::vector<Word> tau(n);
  for (std::size_t t = 0; t < n; ++t) tau[t] = records.load(t).key;
  return tau;
}

std::vector<Word> preprocess_blocked(Memory& memory, const std::vector<std::size_t>& indices,
                                     std::size_t universe) {
  check_indices(indices, universe);
  const std::size_t n = indices.size();
  const Word sentinel = n + 1;
  std::vector<Word> tau(n);
  if (n == 0) return tau;

  Memory::Scope outer(memory);
  const ElementSpan aux = ElementSpan::allocate(memory, universe);
  for (std::size_t i = 0; i < universe; ++i) aux.store(i, make_record(i, sentinel, kAux));

  const std::size_t blocks = (n + universe - 1) / universe;
  for (std::size_t b = blocks; b-- > 0;) {
    const std::size_t begin = b * universe;
    const std::size_t len = std::min(universe, n - begin);
    Memory::Scope scope(memory);
    const ElementSpan work = ElementSpan::allocate(memory, len + universe);
    for (std::size_t j = 0; j < len; ++j) {
      work.store(j, make_record(indices[begin + j], begin + j + 1));
    }
    copy_elements(aux, work.subspan(len, universe));

    oblivious_sort(work, by_index_time);
    annotate_reverse(work, sentinel);
    // The first record of each index group carries that index's next access
    // time as seen from the start of this block.
    Word previous = ~Word{0};
    for (std::size_t j = 0; j < work.size(); ++j) {
      Element r = work.load(j);
      r.dummy = (r.dummy & kAux) | select_word(r.priority != previous, kFirst, 0);
      previous = r.priority;
      work.store(j, r);
    }

    const ElementSpan copy = ElementSpan::allocate(memory, work.size());
    copy_elements(work, copy);
    oblivious_sort(work, by_aux_time);
    for (std::size_t j = 0; j < len; ++j) tau[begin + j] = work.load(j).key;

    oblivious_sort(copy, by_first_index);
    for (std::size_t i = 0; i < universe; ++i) {
      const Element r = copy.load(i);
      aux.store(i, make_record(r.priority, r.timestamp, kAux));
    }
  }
  return tau;
}

OfflineOram::OfflineOram(Memory& memory, std::size_t universe, std::vector<Word> annotations,
                         Word default_value, Backend backend)
    : universe_(universe),
      annotations_(std::move(annotations)),
      default_value_(default_value),
      queue_(memory, std::max<std::size_t>(universe, 2), backend) {}

Word OfflineOram::access(OramOp op, std::size_t index, Word value) {
  if (index >= universe_) throw std::out_of_range("ORAM index out of range");
  if (time_ > annotations_.size()) throw std::out_of_range("ORAM access beyond annotated stream");
  const Word t = time_;
  const Element head = queue_.min();
  // An empty queue behaves like a head that is never due.
  const Word t_next = select_word(head.is_dummy(), annotations_.size() + 1, head.priority);
  if (t_next < t) {
    throw AnnotationError("corrupted annotation: queue head due at time " +
                          std::to_string(t_next) + " but current time is " + std::to_string(t));
  }
  const bool hit = t_next == t;
  queue_.delete_min_if(hit);
  const Word stored = select_word(hit, head.key, default_value_);
  const Word result = select_word(op == OramOp::Write, value, stored);
  queue_.insert(result, annotations_[time_ - 1]);
  ++time_;
  return result;
}

std::vector<Word> run_oram(Memory& memory, const std::vector<OramRequest>& requests,
                           std::size_t universe, const OramRunOptions& options) {
  std::vector<std::size_t> indices;
  indices.reserve(requests.size());
  for (const auto& r : requests) indices.push_back(r.index);

  const std::size_t threshold =
      options.blocked_threshold != 0 ? options.blocked_threshold : universe * universe;
  std::vector<Word> tau = requests.size() > threshold ? preprocess_blocked(memory, indices, universe)
                                                      : preprocess(memory, indices, universe);
  if (options.tamper) options.tamper(tau);

  OfflineOram oram(memory, universe, std::move(tau), options.default_value, options.backend);
  std::vector<Word> reads;
  for (const auto& r : requests) {
    const Word v = oram.access(r.op, r.index, r.value);
    if (r.op == OramOp::Read) reads.push_back(v);
  }
  return reads;
}

}  // namespace opq
