// Word-addressed memory that records every access as a probe event.
//
// All algorithm state that is subject to the obliviousness requirement lives
// in a Memory arena and is accessed through TracedArray. Local variables are
// the "private registers" of the model and are never recorded.
#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace opq {

using Word = std::uint64_t;
inline constexpr unsigned kWordBits = 64;

enum class ProbeOp : std::uint8_t { Read = 0, Write = 1 };

struct ProbeEvent {
  std::uint64_t address;
  ProbeOp op;
  friend bool operator==(const ProbeEvent&, const ProbeEvent&) = default;
};

using Digest = std::array<std::uint8_t, 32>;

std::string to_hex(const Digest& digest);

/// Snapshot of a recorded probe sequence. `events` is only populated when the
/// recorder retains them; `digest` and `count` are always valid.
struct ProbeTrace {
  std::uint64_t count = 0;
  Digest digest{};
  bool has_events = false;
  std::vector<ProbeEvent> events;

  bool same_as(const ProbeTrace& other) const {
    return count == other.count && digest == other.digest;
  }
};

/// Receives every probe as it happens. Used by the cache simulators to stream
/// traces that are too long to retain.
class ProbeObserver {
 public:
  virtual ~ProbeObserver() = default;
  virtual void on_probe(std::uint64_t address, ProbeOp op) = 0;
  virtual void on_phase(std::string_view /*name*/) {}
};

enum TraceMode : unsigned {
  kCountOnly = 0,
  kDigest = 1u << 0,
  kRetainEvents = 1u << 1,
};

/// Records probes: counts them, hashes the serialized stream (SHA-256 over
/// 9-byte little-endian records: address u64, op u8), and optionally keeps
/// the full event list.
class TraceRecorder {
 public:
  explicit TraceRecorder(unsigned mode = kDigest);
  ~TraceRecorder();
  TraceRecorder(const TraceRecorder&) = delete;
  TraceRecorder& operator=(const TraceRecorder&) = delete;

  void record(std::uint64_t address, ProbeOp op) {
    ++count_;
    if (slow_path_) record_slow(address, op);
  }

  std::uint64_t count() const { return count_; }
  unsigned mode() const { return mode_; }

  /// Finalizes a copy of the running hash; recording may continue afterwards.
  ProbeTrace snapshot() const;

  void add_observer(ProbeObserver* observer);
  void remove_observer(ProbeObserver* observer);
  void mark_phase(std::string_view name);

 private:
  void record_slow(std::uint64_t address, ProbeOp op);
  void flush() const;

  unsigned mode_;
  bool slow_path_;
  std::uint64_t count_ = 0;
  std::vector<ProbeEvent> events_;
  std::vector<ProbeObserver*> observers_;
  // Hash state is mutable so that snapshot() can drain the pending buffer.
  struct HashState;
  std::unique_ptr<HashState> hash_;
};

class TracedArray;

class AllocationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bump-allocated word arena. Addresses are a deterministic function of the
/// allocation order. Scratch space is released in LIFO order via Scope.
class Memory {
 public:
  explicit Memory(unsigned trace_mode = kDigest, std::size_t alignment = 1,
                  std::size_t capacity_words = std::size_t{1} << 34);

  TracedArray allocate(std::size_t length);

  /// Releases everything allocated after construction on destruction.
  class Scope {
   public:
    explicit Scope(Memory& memory) : memory_(memory), mark_(memory.top_) {}
    ~Scope() { memory_.release(mark_); }
    Scope(const Scope&) = delete;
    Scope& operator=(const Scope&) = delete;

   private:
    Memory& memory_;
    std::size_t mark_;
  };

  Word read(std::uint64_t address) {
    recorder_.record(address, ProbeOp::Read);
    return cells_[address];
  }
  void write(std::uint64_t address, Word value) {
    recorder_.record(address, ProbeOp::Write);
    cells_[address] = value;
  }

  /// Unrecorded access for instrumentation and test oracles only.
  Word peek(std::uint64_t address) const { return cells_.at(address); }

  TraceRecorder& recorder() { return recorder_; }
  const TraceRecorder& recorder() const { return recorder_; }
  std::size_t allocated_words() const { return top_; }
  std::size_t peak_words() const { return peak_; }
  std::size_t alignment() const { return alignment_; }

 private:
  void release(std::size_t mark);

  TraceRecorder recorder_;
  std::vector<Word> cells_;
  std::size_t alignment_;
  std::size_t capacity_;
  std::size_t top_ = 0;
  std::size_t peak_ = 0;
};

/// A contiguous range of words in a Memory arena. Copying the handle does not
/// copy the cells.
class TracedArray {
 public:
  TracedArray() = default;
  TracedArray(Memory* memory, std::uint64_t base, std::size_t length)
      : memory_(memory), base_(base), length_(length) {}

  Word get(std::size_t i) const {
    check(i);
    return memory_->read(base_ + i);
  }
  void set(std::size_t i, Word value) const {
    check(i);
    memory_->write(base_ + i, value);
  }
  Word peek(std::size_t i) const {
    check(i);
    return memory_->peek(base_ + i);
  }

  TracedArray subarray(std::size_t offset, std::size_t length) const;

  std::size_t size() const { return length_; }
  bool empty() const { return length_ == 0; }
  std::uint64_t base() const { return base_; }
  Memory& memory() const { return *memory_; }

 private:
  void check(std::size_t i) const {
    if (i >= length_) {
      throw std::out_of_range("TracedArray index " + std::to_string(i) +
                              " out of range for length " +
                              std::to_string(length_));
    }
  }

  Memory* memory_ = nullptr;
  std::uint64_t base_ = 0;
  std::size_t length_ = 0;
};

/// Branch-free select: returns `a` if flag is set, else `b`.
constexpr Word select_word(bool flag, Word a, Word b) {
  const Word mask = Word{0} - static_cast<Word>(flag);
  return (a & mask) | (b & ~mask);
}

/// Swaps a[i] and a[j] iff flag. Probes: Read(i), Read(j), Write(i), Write(j).
void cond_swap(const TracedArray& a, std::size_t i, std::size_t j, bool flag);

/// Reads a[secret_index] by touching every cell once, in order.
Word linear_scan_select(const TracedArray& a, std::size_t secret_index);

/// Overwrites a[secret_index] with v; every cell is read and written back.
void linear_scan_write(const TracedArray& a, std::size_t secret_index, Word v);

// Trace serialization: one 9-byte record per event (address u64 LE, op u8).
void write_trace_binary(std::ostream& out, const std::vector<ProbeEvent>& events);
std::vector<ProbeEvent> read_trace_binary(std::istream& in);
void write_trace_csv(std::ostream& out, const std::vector<ProbeEvent>& events);
Digest digest_of(const std::vector<ProbeEvent>& events);

}  // namespace opq
