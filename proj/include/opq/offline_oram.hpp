// Offline ORAM: every access carries the time of the next access to the same
// index, so values can be routed forward in time through a priority queue.
#pragma once

#include <cstddef>
#include <vector>

#include "opq/element.hpp"
#include "opq/priority_queue.hpp"
#include "opq/selection.hpp"

namespace opq {

enum class OramOp { Read, Write };

struct OramRequest {
  OramOp op = OramOp::Read;
  std::size_t index = 0;
  Word value = 0;  // ignored for reads
};

/// Next-access annotations for indices i_1..i_n (times are 1-based): tau_t is
/// the smallest t' > t with i_t' = i_t, or n + 1. Sort, reverse scan, sort
/// back; the trace depends on (n, N) only.
std::vector<Word> preprocess(Memory& memory, const std::vector<std::size_t>& indices,
                             std::size_t universe);

/// Same output as preprocess, computed over blocks of `universe` accesses
/// from last to first with an auxiliary block holding, per index, the next
/// access time after the current block.
std::vector<Word> preprocess_blocked(Memory& memory, const std::vector<std::size_t>& indices,
                                     std::size_t universe);

/// Thrown when the annotation stream contradicts the access sequence.
class AnnotationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class OfflineOram {
 public:
  /// `annotations[t-1]` is the next-access time for the access at time t.
  OfflineOram(Memory& memory, std::size_t universe, std::vector<Word> annotations,
              Word default_value = 0, Backend backend = {});

  /// Performs the access at the current time and advances it. Returns the
  /// value read (for writes, the value written).
  Word access(OramOp op, std::size_t index, Word value = 0);

  std::size_t universe() const { return universe_; }
  /// Current time, 1-based.
  std::size_t time() const { return time_; }
  const ObliviousPriorityQueue& queue() const { return queue_; }
  ObliviousPriorityQueue& queue() { return queue_; }

 private:
  std::size_t universe_;
  std::vector<Word> annotations_;
  Word default_value_;
  ObliviousPriorityQueue queue_;
  std::size_t time_ = 1;
};

struct OramRunOptions {
  Word default_value = 0;
  Backend backend = {};
  /// Blocked preprocessing is used when n exceeds this; 0 means N^2.
  std::size_t blocked_threshold = 0;
  /// Test hook: applied to the annotations before the online phase.
  void (*tamper)(std::vector<Word>&) = nullptr;
};

/// Preprocesses and replays the whole stream. Returns one value per Read,
/// in order.
std::vector<Word> run_oram(Memory& memory, const std::vector<OramRequest>& requests,
                           std::size_t universe, const OramRunOptions& options = {});

}  // namespace opq
