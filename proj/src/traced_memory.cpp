#include "opq/traced_memory.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cstring>
#include <istream>
#include <ostream>

namespace opq {

namespace {

constexpr std::size_t kRecordBytes = 9;
constexpr std::size_t kHashBufferBytes = kRecordBytes * 8192;

void encode_record(std::uint8_t* out, std::uint64_t address, ProbeOp op) {
  for (int b = 0; b < 8; ++b) out[b] = static_cast<std::uint8_t>(address >> (8 * b));
  out[8] = static_cast<std::uint8_t>(op);
}

struct MdCtxDeleter {
  void operator()(EVP_MD_CTX* ctx) const { EVP_MD_CTX_free(ctx); }
};
using MdCtx = std::unique_ptr<EVP_MD_CTX, MdCtxDeleter>;

MdCtx new_sha256() {
  MdCtx ctx(EVP_MD_CTX_new());
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 initialization failed");
  }
  return ctx;
}

}  // namespace

std::string to_hex(const Digest& digest) {
  static constexpr char kHex[] = "0123456789abcdef";
  std::string s;
  s.reserve(digest.size() * 2);
  for (auto byte : digest) {
    s.push_back(kHex[byte >> 4]);
    s.push_back(kHex[byte & 0xf]);
  }
  return s;
}

struct TraceRecorder::HashState {
  MdCtx ctx = new_sha256();
  std::vector<std::uint8_t> buffer = std::vector<std::uint8_t>(kHashBufferBytes);
  std::size_t used = 0;
};

TraceRecorder::TraceRecorder(unsigned mode)
    : mode_(mode), slow_path_(mode != kCountOnly) {
  if (mode_ & kDigest) hash_ = std::make_unique<HashState>();
}

TraceRecorder::~TraceRecorder() = default;

void TraceRecorder::record_slow(std::uint64_t address, ProbeOp op) {
  if (hash_) {
    if (hash_->used + kRecordBytes > hash_->buffer.size()) flush();
    encode_record(hash_->buffer.data() + hash_->used, address, op);
    hash_->used += kRecordBytes;
  }
  if (mode_ & kRetainEvents) events_.push_back({address, op});
  for (auto* observer : observers_) observer->on_probe(address, op);
}

void TraceRecorder::flush() const {
  if (!hash_ || hash_->used == 0) return;
  EVP_DigestUpdate(hash_->ctx.get(), hash_->buffer.data(), hash_->used);
  hash_->used = 0;
}

ProbeTrace TraceRecorder::snapshot() const {
  ProbeTrace trace;
  trace.count = count_;
  if (hash_) {
    flush();
    MdCtx copy(EVP_MD_CTX_new());
    EVP_MD_CTX_copy_ex(copy.get(), hash_->ctx.get());
    unsigned len = 0;
    EVP_DigestFinal_ex(copy.get(), trace.digest.data(), &len);
  }
  if (mode_ & kRetainEvents) {
    trace.has_events = true;
    trace.events = events_;
  }
  return trace;
}

void TraceRecorder::add_observer(ProbeObserver* observer) {
  observers_.push_back(observer);
  slow_path_ = true;
}

void TraceRecorder::remove_observer(ProbeObserver* observer) {
  observers_.erase(std::remove(observers_.begin(), observers_.end(), observer),
                   observers_.end());
  slow_path_ = mode_ != kCountOnly || !observers_.empty();
}

void TraceRecorder::mark_phase(std::string_view name) {
  for (auto* observer : observers_) observer->on_phase(name);
}

Memory::Memory(unsigned trace_mode, std::size_t alignment, std::size_t capacity_words)
    : recorder_(trace_mode), alignment_(std::max<std::size_t>(alignment, 1)),
      capacity_(capacity_words) {}

TracedArray Memory::allocate(std::size_t length) {
  const std::size_t base = (top_ + alignment_ - 1) / alignment_ * alignment_;
  if (base > capacity_ || length > capacity_ - base) {
    throw AllocationError("traced memory capacity exhausted");
  }
  top_ = base + length;
  peak_ = std::max(peak_, top_);
  if (cells_.size() < top_) cells_.resize(std::max(top_, cells_.size() * 2));
  std::fill(cells_.begin() + static_cast<std::ptrdiff_t>(base),
            cells_.begin() + static_cast<std::ptrdiff_t>(top_), Word{0});
  return TracedArray(this, base, length);
}

void Memory::release(std::size_t mark) { top_ = mark; }

TracedArray TracedArray::subarray(std::size_t offset, std::size_t length) const {
  if (offset > length_ || length > length_ - offset) {
    throw std::out_of_range("TracedArray::subarray out of range");
  }
  return TracedArray(memory_, base_ + offset, length);
}

void cond_swap(const TracedArray& a, std::size_t i, std::size_t j, bool flag) {
  const Word x = a.get(i);
  const Word y = a.get(j);
  a.set(i, select_word(flag, y, x));
  a.set(j, select_word(flag, x, y));
}

Word linear_scan_select(const TracedArray& a, std::size_t secret_index) {
  if (secret_index >= a.size()) throw std::out_of_range("linear_scan_select index");
  Word result = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    result = select_word(i == secret_index, a.get(i), result);
  }
  return result;
}

void linear_scan_write(const TracedArray& a, std::size_t secret_index, Word v) {
  if (secret_index >= a.size()) throw std::out_of_range("linear_scan_write index");
  for (std::size_t i = 0; i < a.size(); ++i) {
    a.set(i, select_word(i == secret_index, v, a.get(i)));
  }
}

void write_trace_binary(std::ostream& out, const std::vector<ProbeEvent>& events) {
  std::uint8_t record[kRecordBytes];
  for (const auto& e : events) {
    encode_record(record, e.address, e.op);
    out.write(reinterpret_cast<const char*>(record), kRecordBytes);
  }
}

std::vector<ProbeEvent> read_trace_binary(std::istream& in) {
  std::vector<ProbeEvent> events;
  std::uint8_t record[kRecordBytes];
  while (in.read(reinterpret_cast<char*>(record), kRecordBytes)) {
    std::uint64_t address = 0;
    for (int b = 0; b < 8; ++b) address |= std::uint64_t{record[b]} << (8 * b);
    if (record[8] > 1) throw std::runtime_error("malformed trace record: bad op byte");
    events.push_back({address, static_cast<ProbeOp>(record[8])});
  }
  if (in.gcount() != 0) throw std::runtime_error("malformed trace: truncated record");
  return events;
}

void write_trace_csv(std::ostream& out, const std::vector<ProbeEvent>& events) {
  out << "seq,address,op\n";
  for (std::size_t i = 0; i < events.size(); ++i) {
    out << i << ',' << events[i].address << ',' << static_cast<int>(events[i].op) << '\n';
  }
}

Digest digest_of(const std::vector<ProbeEvent>& events) {
  auto ctx = new_sha256();
  std::uint8_t record[kRecordBytes];
  for (const auto& e : events) {
    encode_record(record, e.address, e.op);
    EVP_DigestUpdate(ctx.get(), record, kRecordBytes);
  }
  Digest d{};
  unsigned len = 0;
  EVP_DigestFinal_ex(ctx.get(), d.data(), &len);
  return d;
}

}  // namespace opq
